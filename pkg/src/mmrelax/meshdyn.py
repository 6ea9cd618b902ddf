"""Discrete moving-mesh equations, equidistribution and the relaxation time.

Mesh residual rows (interior ``i = 1..N-1``)::

    MMPDE6:  (xd[i+1] - 2 xd[i] + xd[i-1]) + E[i] / tau
    MMPDE4:  M[i+1/2] (xd[i+1] - xd[i]) - M[i-1/2] (xd[i] - xd[i-1]) + E[i] / tau

with ``E[i] = M[i+1/2] (x[i+1] - x[i]) - M[i-1/2] (x[i] - x[i-1])``. The two
end rows are ``xd[0]`` and ``xd[N]`` so the endpoints stay pinned.

A time-dependent ``tau`` is substituted directly; the ``(1 + dtau/dt)``
factor a Taylor expansion would produce only rescales ``tau`` and is dropped.
"""

from __future__ import annotations

import numpy as np

from .core import MeshState, ProblemSpec, RunConfig, TauPolicy, ConfigError
from .monitor import MonitorField, monitor_field, monitor_values

__all__ = [
    "TauPolicy", "defect", "mmpde6_rows", "mmpde4_rows", "mesh_rows",
    "tau_eval", "equidistribute_initial", "mesh_timescale",
]


def _nodes(x):
    return np.asarray(getattr(x, "nodes", x), dtype=float)


def defect(x, m: MonitorField) -> np.ndarray:
    """Interior equidistribution defects ``E_1 .. E_{N-1}``."""
    x = _nodes(x)
    flux = m.half * np.diff(x, axis=-1)
    return flux[..., 1:] - flux[..., :-1]


def mmpde6_rows(x, xdot, m: MonitorField, tau) -> np.ndarray:
    """Full mesh residual (length ``N+1``) for MMPDE6."""
    xdot = np.asarray(xdot, dtype=float)
    tau = np.asarray(tau, dtype=float)[..., None]
    res = np.empty(np.broadcast_shapes(_nodes(x).shape, xdot.shape))
    res[..., 1:-1] = (xdot[..., 2:] - 2.0 * xdot[..., 1:-1] + xdot[..., :-2]
                      + defect(x, m) / tau)
    res[..., 0] = xdot[..., 0]
    res[..., -1] = xdot[..., -1]
    return res


def mmpde4_rows(x, xdot, m: MonitorField, tau) -> np.ndarray:
    """Full mesh residual (length ``N+1``) for MMPDE4."""
    xdot = np.asarray(xdot, dtype=float)
    tau = np.asarray(tau, dtype=float)[..., None]
    vflux = m.half * np.diff(xdot, axis=-1)
    res = np.empty(np.broadcast_shapes(_nodes(x).shape, xdot.shape))
    res[..., 1:-1] = vflux[..., 1:] - vflux[..., :-1] + defect(x, m) / tau
    res[..., 0] = xdot[..., 0]
    res[..., -1] = xdot[..., -1]
    return res


def mesh_rows(variant: str, x, xdot, m: MonitorField, tau) -> np.ndarray:
    if variant == "MMPDE6":
        return mmpde6_rows(x, xdot, m, tau)
    if variant == "MMPDE4":
        return mmpde4_rows(x, xdot, m, tau)
    raise ConfigError(f"unknown MMPDE variant {variant!r}", "mmpde")


def tau_eval(policy: TauPolicy, m) -> np.ndarray | float:
    """Relaxation time for the current monitor.

    Adaptive policies use ``clip(tau_o * max_i M_i, tau_min, tau_max)`` on the
    raw (floored, unsmoothed) monitor values.
    """
    if policy.kind == "fixed":
        return policy.tau
    raw = np.asarray(getattr(m, "raw", m), dtype=float)
    tau = np.clip(policy.tau_o * raw.max(axis=-1), policy.tau_min,
                  policy.tau_max)
    return float(tau) if np.ndim(tau) == 0 else tau


def mesh_timescale(variant: str, tau: float, m: MonitorField) -> float:
    """Natural response time of the mesh: ``tau`` or ``tau / max M~``."""
    if variant == "MMPDE4":
        return float(tau)
    return float(tau / np.max(m.smoothed))


def equidistribute_initial(u0, spec: ProblemSpec, config: RunConfig,
                           n_fine: int | None = None) -> MeshState:
    """Mesh that equidistributes the monitor of ``u0``.

    The monitor is sampled on a fine uniform grid, integrated with the
    cumulative trapezoid rule, and the nodes are placed where the running
    integral reaches ``(i/N)`` of the total.
    """
    N = config.N
    if n_fine is None:
        n_fine = max(10 * N, 20000)
    xf = np.linspace(0.0, 1.0, n_fine + 1)
    uf = np.asarray(u0(xf), dtype=float)
    m = monitor_field(monitor_values(spec, uf, xf), config.gamma, config.ip,
                      config.monitor_floor).smoothed
    if np.all(m <= config.monitor_floor):
        return MeshState.uniform(N)
    cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (m[1:] + m[:-1]) * np.diff(xf))])
    targets = cum[-1] * np.arange(N + 1) / N
    nodes = np.interp(targets, cum, xf)
    nodes[0], nodes[-1] = 0.0, 1.0
    return MeshState(nodes)
