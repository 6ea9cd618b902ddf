"""Residual assembly ``F(t, y, yd)`` for the coupled and mesh-only systems."""

from __future__ import annotations

import numpy as np

from ..core import EvaluationError, ProblemSpec, RunConfig, unpack_state
from ..meshdyn import mesh_rows, tau_eval
from ..monitor import MonitorField, monitor_field, monitor_values
from ..physics import PrescribedSolution, physical_residual


def _check_mesh(x):
    # endpoints are held by the boundary rows; iterates may carry rounding
    bad = np.flatnonzero(~(np.diff(x, axis=-1) > 0.0))
    if bad.size:
        i = int(bad[0]) % (x.shape[-1] - 1)
        raise EvaluationError(f"mesh tangled at i={i}", i)


class MovingMeshSystem:
    """Semilinear heat equation coupled to a moving-mesh equation.

    Unknowns are packed as ``[u_0..u_N, x_0..x_N]``; residual rows follow the
    same layout (physical rows, then mesh rows). For the banded linear algebra
    the unknowns are reordered node by node, ``(u_0, x_0, u_1, x_1, ...)``;
    ``perm`` maps that order back to the packed layout.
    """

    def __init__(self, spec: ProblemSpec, config: RunConfig):
        self.spec = spec
        self.config = config
        self.N = config.N
        self.n = 2 * (self.N + 1)
        reach = config.ip + 1 + (spec.monitor_kind == "arclength")
        self.half_bandwidth = 2 * reach + 1
        nodes = np.arange(self.N + 1)
        self.perm = np.empty(self.n, dtype=int)
        self.perm[0::2] = nodes
        self.perm[1::2] = nodes + self.N + 1

    def split(self, y):
        return unpack_state(y)

    def monitor(self, t, y) -> MonitorField:
        u, x = unpack_state(y)
        cfg = self.config
        return monitor_field(monitor_values(self.spec, u, x), cfg.gamma,
                             cfg.ip, cfg.monitor_floor)

    def tau(self, t, y):
        return tau_eval(self.config.tau, self.monitor(t, y))

    def residual(self, t, y, yd, tau=None, check=True):
        """Evaluate ``F``; ``tau`` overrides the policy (frozen Jacobians)."""
        y = np.asarray(y, dtype=float)
        yd = np.asarray(yd, dtype=float)
        u, x = unpack_state(y)
        ud, xd = unpack_state(yd)
        if check:
            _check_mesh(x)
        m = self.monitor(t, y)
        if tau is None:
            tau = tau_eval(self.config.tau, m)
        out = np.empty(np.broadcast_shapes(y.shape, yd.shape))
        k = self.N + 1
        out[..., :k] = physical_residual(u, x, ud, xd, self.spec)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out[..., k:] = mesh_rows(self.config.mmpde, x, xd, m, tau)
        if check and not np.all(np.isfinite(out)):
            i = int(np.flatnonzero(~np.isfinite(out))[0])
            raise EvaluationError(f"non-finite residual in row {i}", i)
        return out


class PrescribedMeshSystem:
    """Mesh-only system driven by a closed-form solution ``u(x, t)``.

    The monitor is built from the prescribed values sampled at the current
    nodes using the same difference stencil as the coupled solver.
    """

    def __init__(self, spec: ProblemSpec, config: RunConfig):
        self.spec = spec
        self.config = config
        self.solution = PrescribedSolution(spec.example)
        self.N = config.N
        self.n = self.N + 1
        reach = config.ip + 1 + (spec.monitor_kind == "arclength")
        self.half_bandwidth = reach
        self.perm = np.arange(self.n)

    def split(self, y):
        return None, y

    def values(self, t, x):
        return self.solution(x, t)

    def monitor(self, t, y) -> MonitorField:
        cfg = self.config
        u = self.solution(y, t)
        return monitor_field(monitor_values(self.spec, u, y), cfg.gamma,
                             cfg.ip, cfg.monitor_floor)

    def tau(self, t, y):
        return tau_eval(self.config.tau, self.monitor(t, y))

    def residual(self, t, y, yd, tau=None, check=True):
        y = np.asarray(y, dtype=float)
        yd = np.asarray(yd, dtype=float)
        if check:
            _check_mesh(y)
        m = self.monitor(t, y)
        if tau is None:
            tau = tau_eval(self.config.tau, m)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = mesh_rows(self.config.mmpde, y, yd, m, tau)
        if check and not np.all(np.isfinite(out)):
            i = int(np.flatnonzero(~np.isfinite(out))[0])
            raise EvaluationError(f"non-finite residual in row {i}", i)
        return out


def make_system(spec: ProblemSpec, config: RunConfig):
    if spec.prescribed:
        return PrescribedMeshSystem(spec, config)
    return MovingMeshSystem(spec, config)


def residual(t, y, ydot, system):
    """``F(t, y, ydot)`` for the given system (see ``make_system``)."""
    return system.residual(t, y, ydot)
