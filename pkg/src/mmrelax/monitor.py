"""Monitor functions and their spatial smoothing.

All routines act on the last axis, so a stack of states (shape ``(..., N+1)``)
is handled in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MONITOR_FLOOR, EvaluationError, ProblemSpec


@dataclass(frozen=True)
class MonitorField:
    raw: np.ndarray
    smoothed: np.ndarray

    @property
    def half(self) -> np.ndarray:
        """Midpoint averages ``(M~_i + M~_{i+1}) / 2``."""
        return 0.5 * (self.smoothed[..., 1:] + self.smoothed[..., :-1])


def gradient(u, x):
    """Centered nonuniform difference inside, one-sided at the two ends."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    ux = np.empty(np.broadcast_shapes(u.shape, x.shape))
    ux[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (x[..., 2:] - x[..., :-2])
    ux[..., 0] = (u[..., 1] - u[..., 0]) / (x[..., 1] - x[..., 0])
    ux[..., -1] = (u[..., -1] - u[..., -2]) / (x[..., -1] - x[..., -2])
    return ux


def _check_finite(values, what):
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise EvaluationError(f"non-finite {what} at node {int(bad[-1])}",
                              int(bad[-1]))
    return values


def monitor_values(spec: ProblemSpec, u, x) -> np.ndarray:
    """Raw (unfloored) monitor values at the nodes.

    ``arclength``: ``sqrt(1 + u_x^2)``; ``power``: ``|u|^(p-1)``;
    ``exponential``: ``exp(u)``.
    """
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if spec.monitor_kind == "arclength":
            m = np.sqrt(1.0 + gradient(u, x) ** 2)
        elif spec.monitor_kind == "power":
            m = np.abs(u) ** (spec.p - 1.0)
        else:
            m = np.exp(u)
    return _check_finite(m, "monitor value")


def _window_weights(gamma: float, ip: int) -> np.ndarray:
    w = gamma / (1.0 + gamma)
    return w ** np.abs(np.arange(-ip, ip + 1))


def smooth(raw, gamma: float, ip: int) -> np.ndarray:
    """Weighted RMS of the monitor over a ``2*ip + 1`` node window.

    Weights are ``(gamma / (1 + gamma))**|j - i|``. Window positions outside
    the grid are dropped from both sums.
    """
    raw = np.asarray(raw, dtype=float)
    if ip == 0:
        return raw.copy()
    n = raw.shape[-1]
    weights = _window_weights(gamma, ip)
    sq = raw * raw
    pad = [(0, 0)] * (raw.ndim - 1) + [(ip, ip)]
    sq_pad = np.pad(sq, pad)
    ones_pad = np.pad(np.ones(n), (ip, ip))
    num = np.zeros_like(sq)
    den = np.zeros(n)
    for k, wk in enumerate(weights):
        num += wk * sq_pad[..., k:k + n]
        den += wk * ones_pad[k:k + n]
    return np.sqrt(num / den)


def monitor_field(raw, gamma: float, ip: int,
                  floor: float = MONITOR_FLOOR) -> MonitorField:
    """Floor the raw values, smooth them, and floor again."""
    raw = np.maximum(np.asarray(raw, dtype=float), floor)
    smoothed = np.maximum(smooth(raw, gamma, ip), floor)
    return MonitorField(raw, smoothed)


def total_monitor(m, x) -> float:
    """Trapezoid estimate of the integral of ``M`` over the mesh."""
    m = np.asarray(getattr(m, "smoothed", m), dtype=float)
    x = np.asarray(getattr(x, "nodes", x), dtype=float)
    return float(np.sum(0.5 * (m[1:] + m[:-1]) * np.diff(x)))
