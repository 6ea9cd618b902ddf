"""Semilinear heat equation in moving coordinates, plus prescribed solutions.

Interior rows discretise ``u_t = u_xx + f(u)`` written along moving nodes::

    ud[i] - (u[i+1]-u[i-1])/(x[i+1]-x[i-1]) * xd[i]
          - 2/(x[i+1]-x[i-1]) * ((u[i+1]-u[i])/(x[i+1]-x[i])
                                - (u[i]-u[i-1])/(x[i]-x[i-1]))
          - f(u[i])

and the end rows are the algebraic conditions ``u[0] = u[N] = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, EvaluationError, ProblemSpec, SystemState


def source(u, spec_or_kind, p=None):
    """Reaction term: ``u**p`` for a power law, ``exp(u)`` for exponential."""
    if isinstance(spec_or_kind, ProblemSpec):
        kind, p = spec_or_kind.nonlinearity, spec_or_kind.p
    else:
        kind = spec_or_kind
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        if kind == "power":
            if float(p).is_integer():
                f = u ** int(p)
            else:
                # odd extension keeps negative Newton iterates finite
                f = np.sign(u) * np.abs(u) ** p
        elif kind == "exponential":
            f = np.exp(u)
        else:
            raise ConfigError(f"no source term for {kind!r}", "nonlinearity")
    if not np.all(np.isfinite(f)):
        bad = np.argwhere(~np.isfinite(f))[0]
        raise EvaluationError(f"source overflow at node {int(bad[-1])}",
                              int(bad[-1]))
    return f if f.ndim else float(f)


def physical_residual(u, x, ud, xd, spec: ProblemSpec, forcing=None):
    """Residual rows for the PDE (length ``N+1``, batched on leading axes).

    ``forcing`` replaces the reaction term when given (used for
    manufactured-solution checks).
    """
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    dx = np.diff(x, axis=-1)
    du = np.diff(u, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        slope = du / dx
        span = x[..., 2:] - x[..., :-2]
        conv = (u[..., 2:] - u[..., :-2]) / span * xd[..., 1:-1]
        diff = 2.0 / span * (slope[..., 1:] - slope[..., :-1])
    f = forcing if forcing is not None else source(u[..., 1:-1], spec)
    res = np.empty(np.broadcast_shapes(u.shape, np.shape(ud)))
    res[..., 1:-1] = ud[..., 1:-1] - conv - diff - f
    res[..., 0] = u[..., 0]
    res[..., -1] = u[..., -1]
    return res


def physical_rows(state: SystemState, spec: ProblemSpec, forcing=None):
    """Physical residual for a packed :class:`SystemState`."""
    u, x = state.unpack()
    ud, xd = state.unpack_rates()
    if np.any(np.diff(x) <= 0):
        i = int(np.flatnonzero(np.diff(x) <= 0)[0])
        raise EvaluationError(f"degenerate mesh spacing at i={i}", i)
    return physical_residual(u, x, ud, xd, spec, forcing)


# --- prescribed solutions -------------------------------------------------

@dataclass(frozen=True)
class PrescribedSolution:
    """Closed-form ``u(x, t)`` used to drive a mesh-only run.

    ``example1``: ``exp(-10 pi^2 t) sin(pi x)``
    ``example2``: ``exp(-pi^2 t) sin(pi x) + exp(-100 pi^2 t) sin(2 pi x)``
    ``example3``: Gaussian ``(4 pi (t*-t))^(-1/2) exp(-beta (x-x*)^2 / (4 (t*-t)))``
    """

    id: str
    beta: float = 100.0
    x_star: float = 0.5
    t_star: float = 0.4

    def __post_init__(self):
        if self.id not in ("example1", "example2", "example3"):
            raise ConfigError(f"unknown prescribed example {self.id!r}",
                              "example")

    def __call__(self, x, t):
        return prescribed_value(self, x, t)


def prescribed_value(sol: PrescribedSolution, x, t):
    x = np.asarray(x, dtype=float)
    pi = np.pi
    if sol.id == "example1":
        val = np.exp(-10 * pi**2 * t) * np.sin(pi * x)
    elif sol.id == "example2":
        val = (np.exp(-pi**2 * t) * np.sin(pi * x)
               + np.exp(-100 * pi**2 * t) * np.sin(2 * pi * x))
    else:
        if not t < sol.t_star:
            raise EvaluationError(
                f"example3 is undefined for t >= t_star={sol.t_star}")
        s = sol.t_star - t
        val = (4 * pi * s) ** -0.5 * np.exp(
            -sol.beta * (x - sol.x_star) ** 2 / (4 * s))
    return val if val.ndim else float(val)
