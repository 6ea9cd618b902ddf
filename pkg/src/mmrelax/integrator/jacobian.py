"""Finite-difference iteration matrices ``dF/dy + c dF/dyd``.

Columns that cannot share a row (more than one bandwidth apart in the
node-interleaved ordering) are perturbed together, so a banded Jacobian costs
``2*hb + 1`` residual evaluations, done as a single batched call.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from ..core import EvaluationError

EPS = np.finfo(float).eps
SQRT_EPS = np.sqrt(EPS)


class SingularMatrixError(ArithmeticError):
    pass


class IterationMatrix:
    """Factorised matrix; ``solve`` works in the packed (unpermuted) layout."""

    def __init__(self, matrix, perm, half_bandwidth=None):
        self.perm = perm
        self.half_bandwidth = half_bandwidth
        self.matrix = matrix
        self.banded = half_bandwidth is not None
        if self.banded:
            hb = half_bandwidth
            self._lu, self._piv, info = lapack.dgbtrf(matrix, hb, hb)
        else:
            info = 0
            if not np.all(np.isfinite(matrix)):
                info = -1
            else:
                self._lu = lu_factor(matrix, check_finite=False)
                if np.any(np.diag(self._lu[0]) == 0):
                    info = 1
        if info != 0:
            raise SingularMatrixError(f"iteration matrix is singular ({info})")

    @property
    def n(self):
        return self.perm.size

    def solve(self, b):
        bp = np.asarray(b, dtype=float)[self.perm]
        if self.banded:
            hb = self.half_bandwidth
            xp, info = lapack.dgbtrs(self._lu, hb, hb, bp, self._piv)
        else:
            xp = lu_solve(self._lu, bp, check_finite=False)
        x = np.empty_like(xp)
        x[self.perm] = xp
        return x

    def to_dense(self):
        """The unfactorised matrix in the packed layout (for checks)."""
        n = self.n
        if self.banded:
            hb = self.half_bandwidth
            a = np.zeros((n, n))
            for j in range(n):
                lo, hi = max(0, j - hb), min(n, j + hb + 1)
                rows = np.arange(lo, hi)
                a[rows, j] = self.matrix[2 * hb + rows - j, j]
        else:
            a = self.matrix
        out = np.empty_like(a)
        out[np.ix_(self.perm, self.perm)] = a
        return out


def _increments(yp, atol):
    return SQRT_EPS * np.maximum(np.abs(yp), atol)


def difference_columns(system, t, y, yd, a, b, sigma, tau, banded):
    """Directional differences of ``F`` along ``(a*sigma_j, b*sigma_j)``.

    Returns, in the interleaved ordering, either banded LAPACK storage
    (``2*hb + hb + 1`` rows) or a dense matrix. ``sigma`` is given in the
    interleaved ordering.
    """
    n = system.n
    perm = system.perm
    f0 = system.residual(t, y, yd, tau=tau, check=False)
    if banded:
        hb = system.half_bandwidth
        width = 2 * hb + 1
        group = np.arange(n) % width
        ngroups = min(width, n)
    else:
        group = np.arange(n)
        ngroups = n
    Y = np.broadcast_to(y, (ngroups, n)).copy()
    YD = np.broadcast_to(yd, (ngroups, n)).copy()
    cols = np.arange(n)
    # exact representable increments
    step_y = (y[perm] + a * sigma) - y[perm]
    step_yd = (yd[perm] + b * sigma) - yd[perm]
    Y[group, perm[cols]] += step_y
    YD[group, perm[cols]] += step_yd
    F = system.residual(t, Y, YD, tau=tau, check=False)
    if not np.all(np.isfinite(F)):
        raise EvaluationError("non-finite residual at a perturbed point")
    D = (F - f0)[:, perm]
    denom = step_y if a != 0 else step_yd
    if not banded:
        # row g of D holds the response to column g
        return D.T / denom[None, :]
    hb = system.half_bandwidth
    offsets = np.arange(-hb, hb + 1)
    rows = cols[None, :] + offsets[:, None]
    valid = (rows >= 0) & (rows < n)
    rows_c = np.clip(rows, 0, n - 1)
    vals = D[group[None, :], rows_c] / denom[None, :]
    ab = np.zeros((3 * hb + 1, n))
    ab[2 * hb + offsets[:, None], cols[None, :]] = np.where(valid, vals, 0.0)
    return ab


def fd_jacobian(system, t, y, yd, c, atol=1e-8, tau=None, dense=None,
                max_halvings=3):
    """Iteration matrix ``dF/dy + c dF/dyd`` by one-sided differences.

    The increment for unknown ``j`` is ``sqrt(eps) * max(|y_j|, atol)``; it is
    halved (up to ``max_halvings`` times) if a perturbed residual cannot be
    evaluated. ``tau`` is frozen at its base-point value so that the global
    ``max M`` dependence of the adaptive policy does not leak across columns.
    """
    y = np.asarray(y, dtype=float)
    yd = np.asarray(yd, dtype=float)
    if tau is None:
        tau = system.tau(t, y)
    hb = getattr(system, "half_bandwidth", None)
    banded = (not dense) and hb is not None and 2 * hb + 1 < system.n
    sigma = _increments(y[system.perm], atol)
    for attempt in range(max_halvings + 1):
        try:
            mat = difference_columns(system, t, y, yd, 1.0, c, sigma, tau,
                                     banded)
            break
        except EvaluationError:
            if attempt == max_halvings:
                raise
            sigma = 0.5 * sigma
    return IterationMatrix(mat, system.perm, hb if banded else None)


def rate_matrix(system, t, y, tau=None, dense=None):
    """``dF/dyd`` (exact up to rounding, since ``F`` is linear in ``yd``)."""
    y = np.asarray(y, dtype=float)
    if tau is None:
        tau = system.tau(t, y)
    hb = getattr(system, "half_bandwidth", None)
    banded = (not dense) and hb is not None and 2 * hb + 1 < system.n
    sigma = np.ones(system.n)
    return difference_columns(system, t, y, np.zeros(system.n), 0.0, 1.0,
                              sigma, tau, banded), banded
