"""Variable-order, variable-step BDF integrator for ``F(t, y, yd) = 0``.

Fixed-leading-coefficient BDF in modified-divided-difference form, orders 1
to 5, with a modified Newton corrector on a lagged finite-difference
iteration matrix. Step/order control follows the classic DASSL strategy
(Petzold, 1982).

A run ends either at ``t_end`` or in a *failure cascade*: the step size
drops below ``min_step``, or a step fails the error test or the corrector
too many times in a row. For blow-up problems the last accepted time is the
estimate of the blow-up time.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..core import EvaluationError
from .jacobian import (EPS, SingularMatrixError, fd_jacobian,
                       difference_columns)

# Iteration matrix is refreshed when cj drifts by more than this factor or
# when a converged Newton solve contracted more slowly than REFRESH_RATE.
CJ_DRIFT = 1.3
REFRESH_RATE = 0.25
NEWTON_TOL = 0.33


class InitializationError(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-8
    max_order: int = 5
    initial_step: Optional[float] = None
    min_step: float = 1e-16
    max_error_failures: int = 7
    max_convergence_failures: int = 10
    max_newton: int = 4
    fixed_step: Optional[float] = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not 1 <= self.max_order <= 5:
            raise ValueError("max_order must lie in [1, 5]")
        if self.initial_step is not None and not self.min_step < self.initial_step:
            raise ValueError("min_step must be smaller than initial_step")


@dataclass
class StepRecord:
    t: float
    dt: float
    order: int
    newton_iters: int
    failed: bool = False
    reason: str = ""


@dataclass
class Termination:
    t: float
    reason: str  # "end", "min_step", "error_failures", "convergence_failures", "stopped"
    message: str = ""

    @property
    def cascade(self) -> bool:
        return self.reason in ("min_step", "error_failures",
                               "convergence_failures")


@dataclass
class IntegrationResult:
    t: float
    y: np.ndarray
    ydot: np.ndarray
    termination: Termination
    steps: list = field(default_factory=list)
    n_steps: int = 0
    n_residuals: int = 0
    n_jacobians: int = 0
    n_error_failures: int = 0
    n_convergence_failures: int = 0
    wall_clock_seconds: float = 0.0


def wrms(v, wt) -> float:
    """Weighted RMS norm ``sqrt(mean((v / wt)**2))``."""
    r = v / wt
    return math.sqrt(float(np.dot(r, r)) / r.size)


def error_weights(y, rtol, atol):
    return atol + rtol * np.abs(y)


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


class _Clock:
    """Time kept as an unevaluated sum ``hi + lo``.

    Steps far below ``ulp(t)`` (deep in a blow-up) still advance time.
    """

    def __init__(self, t0):
        self.hi, self.lo = float(t0), 0.0

    def advance(self, h):
        s, e = _two_sum(self.hi, h)
        self.hi, self.lo = _two_sum(s, e + self.lo)

    def state(self):
        return self.hi, self.lo

    def restore(self, st):
        self.hi, self.lo = st

    def remaining(self, t_end):
        return (t_end - self.hi) - self.lo


# --- consistent initialisation --------------------------------------------

def consistent_initial_derivatives(system, t0, y0, tau=None):
    """Solve ``F(t0, y0, yd) = 0`` for ``yd``.

    ``F`` is linear in ``yd``. Rows with no ``yd`` dependence (algebraic
    constraints ``g(t, y) = 0``) are replaced by their time derivative
    ``g_y yd + g_t = 0``.
    """
    y0 = np.asarray(y0, dtype=float)
    n = system.n
    perm = system.perm
    if tau is None:
        tau = system.tau(t0, y0)
    zero = np.zeros(n)
    g = system.residual(t0, y0, zero, tau=tau)
    # dense work is fine here; it is done once per run
    A = difference_columns(system, t0, y0, zero, 0.0, 1.0, np.ones(n), tau,
                           banded=False)
    rhs = -g[perm]
    algebraic = np.flatnonzero(np.all(A == 0.0, axis=1))
    if algebraic.size:
        sigma = np.sqrt(EPS) * np.maximum(np.abs(y0[perm]), 1.0)
        Gy = difference_columns(system, t0, y0, zero, 1.0, 0.0, sigma, tau,
                                banded=False)
        dt = np.sqrt(EPS) * max(abs(t0), 1.0)
        g_t = (system.residual(t0 + dt, y0, zero, tau=tau) - g)[perm] / dt
        A[algebraic] = Gy[algebraic]
        rhs[algebraic] = -g_t[algebraic]
    lu = lu_factor(A, check_finite=False)
    piv = np.abs(np.diag(lu[0]))
    if not np.all(np.isfinite(piv)) or piv.min() <= 1e-14 * max(piv.max(), 1.0):
        raise InitializationError(
            f"singular initial coefficient matrix (tau={tau!r}, monitor "
            f"floor={system.config.monitor_floor!r})")
    ydp = lu_solve(lu, rhs, check_finite=False)
    yd = np.empty(n)
    yd[perm] = ydp
    return yd


# --- the stepper -----------------------------------------------------------

def integrate(system, t0, y0, yd0, t_end, config: IntegratorConfig = None,
              on_step: Callable = None) -> IntegrationResult:
    """Advance the DAE from ``t0`` towards ``t_end``.

    ``on_step(t, y, yd, record)`` is called after every accepted step; a
    truthy return value stops the run (reason ``"stopped"``).
    """
    # diverging Newton iterates are detected through their norm
    with np.errstate(over="ignore", invalid="ignore"):
        return _integrate(system, t0, y0, yd0, t_end, config, on_step)


def _integrate(system, t0, y0, yd0, t_end, config, on_step):
    cfg = config or IntegratorConfig()
    tic = _time.perf_counter()
    n = system.n
    maxord = cfg.max_order
    maxit = cfg.max_newton
    uround = EPS
    rtol, atol = cfg.rtol, cfg.atol
    res = IntegrationResult(t0, np.array(y0, float), np.array(yd0, float),
                            None)

    def residual(t, y, yp):
        res.n_residuals += 1
        return system.residual(t, y, yp)

    y = np.array(y0, dtype=float)
    yp = np.array(yd0, dtype=float)
    wt = error_weights(y, rtol, atol)
    clock = _Clock(t0)
    tdist = t_end - t0
    if cfg.fixed_step is not None:
        h = cfg.fixed_step
    else:
        h = cfg.initial_step if cfg.initial_step else 1e-6 * tdist
        ypnorm = wrms(yp, wt)
        if ypnorm > 0.5 / h:
            h = 0.5 / ypnorm
    h = min(h, tdist)

    phi = np.zeros((maxord + 3, n))
    phi[0] = y
    phi[1] = h * yp
    psi = np.zeros(maxord + 2)
    alpha = np.zeros(maxord + 2)
    beta = np.zeros(maxord + 2)
    gamma = np.zeros(maxord + 2)
    sigma = np.zeros(maxord + 2)
    psi[0] = h
    k, kold, hold, iphase, ns = 1, 0, 0.0, 0, 0
    cj = 1.0 / h
    cjold = cj
    s = 100.0
    jcalc = -1
    pd = None
    oldnrm = 1.0

    accepted = [y.copy(), yp.copy()]

    def finish(reason, message=""):
        res.t = float(clock.hi + clock.lo)
        res.y, res.ydot = accepted[0].copy(), accepted[1].copy()
        res.termination = Termination(res.t, reason, message)
        res.wall_clock_seconds = _time.perf_counter() - tic
        return res

    while True:
        remaining = clock.remaining(t_end)
        if remaining <= 4 * uround * max(abs(t_end), abs(clock.hi)):
            return finish("end")
        if h > remaining:
            h = remaining
        nef = ncf = 0

        # --- attempt the step until it passes or the cascade triggers
        while True:
            kp1, kp2 = k + 1, k + 2
            if h != hold or k != kold:
                ns = 0
            ns = min(ns + 1, kold + 2)
            nsp1 = ns + 1
            if kp1 >= ns:
                beta[0] = alpha[0] = sigma[0] = 1.0
                gamma[0] = 0.0
                temp1 = h
                for i in range(1, kp1):
                    temp2 = psi[i - 1]
                    psi[i - 1] = temp1
                    beta[i] = beta[i - 1] * psi[i - 1] / temp2
                    temp1 = temp2 + h
                    alpha[i] = h / temp1
                    sigma[i] = i * sigma[i - 1] * alpha[i]
                    gamma[i] = gamma[i - 1] + alpha[i - 1] / h
                psi[kp1 - 1] = temp1
            alphas = -sum(1.0 / j for j in range(1, k + 1))
            alpha0 = -float(alpha[:k].sum())
            cjlast = cj
            cj = -alphas / h
            ck = max(abs(alpha[k] + alphas - alpha0), alpha[k])
            ratio = cj / cjold
            if ratio < 1.0 / CJ_DRIFT or ratio > CJ_DRIFT:
                jcalc = -1
            if cj != cjlast:
                s = 100.0
            if kp1 >= nsp1:
                phi[nsp1 - 1:kp1] *= beta[nsp1 - 1:kp1, None]
            saved = clock.state()
            clock.advance(h)
            t = clock.hi

            # --- predictor / corrector
            failure = None
            m = 0
            while True:
                y = phi[:kp1].sum(axis=0)
                yp = gamma[1:kp1] @ phi[1:kp1]
                pnorm = wrms(y, wt)
                failure = None
                m = 0
                slow = False
                e = np.zeros(n)
                try:
                    delta = residual(t, y, yp)
                except EvaluationError:
                    failure = "residual"
                if failure is None and jcalc == -1:
                    res.n_jacobians += 1
                    try:
                        pd = fd_jacobian(system, t, y, yp, cj, atol=atol)
                    except (EvaluationError, SingularMatrixError):
                        failure = "jacobian"
                    cjold = cj
                    jcalc = 0
                    s = 100.0
                if failure is None:
                    while True:
                        delta = pd.solve(delta)
                        if cj != cjold:
                            delta *= 2.0 / (1.0 + cj / cjold)
                        y -= delta
                        e -= delta
                        yp -= cj * delta
                        delnrm = wrms(delta, wt)
                        if not math.isfinite(delnrm):
                            failure = "diverged"
                            break
                        if delnrm <= 100.0 * uround * pnorm:
                            break
                        if m > 0:
                            rate = (delnrm / oldnrm) ** (1.0 / m)
                            if rate > 0.9:
                                failure = "rate"
                                break
                            s = rate / (1.0 - rate)
                            slow = rate > REFRESH_RATE
                        else:
                            oldnrm = delnrm
                        if s * delnrm <= NEWTON_TOL:
                            break
                        m += 1
                        if m >= maxit:
                            failure = "maxit"
                            break
                        try:
                            delta = residual(t, y, yp)
                        except EvaluationError:
                            failure = "residual"
                            break
                if failure in ("rate", "maxit", "diverged") and jcalc == 1:
                    # stale matrix: retry once with a fresh one
                    jcalc = -1
                    continue
                break

            # --- local error estimate and order candidates
            knew = k
            if failure is None:
                enorm = wrms(e, wt)
                erk = sigma[k] * enorm
                terk = (k + 1) * erk
                est = erk
                terkm1 = erkm1 = 0.0
                if k > 1:
                    delta = phi[k] + e
                    erkm1 = sigma[k - 1] * wrms(delta, wt)
                    terkm1 = k * erkm1
                    if k > 2:
                        delta = phi[k - 1] + delta
                        erkm2 = sigma[k - 2] * wrms(delta, wt)
                        terkm2 = (k - 1) * erkm2
                        if max(terkm1, terkm2) <= terk:
                            knew, est = k - 1, erkm1
                    elif terkm1 <= 0.5 * terk:
                        knew, est = k - 1, erkm1
                err = ck * enorm
                if cfg.fixed_step is None and err > 1.0:
                    failure = "error_test"
                if cfg.fixed_step is not None:
                    knew, est = k, 0.0

            if failure is None:
                break

            # --- failed attempt: restore and shrink
            iphase = 1
            clock.restore(saved)
            if kp1 >= nsp1:
                phi[nsp1 - 1:kp1] /= beta[nsp1 - 1:kp1, None]
            for i in range(1, kp1):
                psi[i - 1] = psi[i] - h
            res.steps.append(StepRecord(float(clock.hi), float(h), k, m + 1,
                                        True, failure))
            if cfg.fixed_step is not None:
                return finish("convergence_failures",
                              f"fixed-step corrector failed ({failure})")
            if failure == "error_test":
                nef += 1
                res.n_error_failures += 1
                if nef == 1:
                    k = knew
                    r = 0.9 * (2.0 * est + 1e-4) ** (-1.0 / (k + 1))
                    h *= max(0.25, min(0.9, r))
                elif nef == 2:
                    k = knew
                    h *= 0.25
                else:
                    k = 1
                    h *= 0.25
                if nef >= cfg.max_error_failures:
                    return finish("error_failures",
                                  f"{nef} consecutive error test failures")
            else:
                ncf += 1
                res.n_convergence_failures += 1
                h *= 0.25
                if ncf >= cfg.max_convergence_failures:
                    return finish("convergence_failures",
                                  f"{ncf} consecutive corrector failures "
                                  f"({failure})")
            if h < cfg.min_step:
                return finish("min_step", f"step {h:.3e} below min_step")

        # --- accepted step: choose next order and step size
        kdiff = k - kold
        kold = k
        hold = h
        if cfg.fixed_step is not None:
            k = min(k + 1, maxord)
        else:
            if knew == k - 1 or k == maxord:
                iphase = 1
            if iphase == 0:
                k = kp1
                h *= 2.0
            else:
                action = "keep"
                if knew == k - 1:
                    action = "lower"
                elif k == maxord or kp1 >= ns or kdiff == 1:
                    action = "keep"
                else:
                    delta = e - phi[kp2 - 1]
                    erkp1 = wrms(delta, wt) / (k + 2)
                    terkp1 = (k + 2) * erkp1
                    if k > 1:
                        if terkm1 <= min(terk, terkp1):
                            action = "lower"
                        elif not (terkp1 >= terk or k == maxord):
                            action = "raise"
                    elif not terkp1 >= 0.5 * terk:
                        action = "raise"
                if action == "raise":
                    k, est = kp1, erkp1
                elif action == "lower":
                    k, est = k - 1, erkm1
                r = (2.0 * est + 1e-4) ** (-1.0 / (k + 1))
                if r >= 2.0:
                    h = 2.0 * h
                elif r <= 1.0:
                    h = h * max(0.5, min(0.9, r))

        if kold != maxord:
            phi[kp2 - 1] = e
        phi[kp1 - 1] += e
        for j in range(kp1 - 2, -1, -1):
            phi[j] += phi[j + 1]
        if jcalc == 0:
            jcalc = 1
        if slow:
            jcalc = -1

        res.n_steps += 1
        record = StepRecord(float(clock.hi), float(hold), kold, m + 1)
        res.steps.append(record)
        wt = error_weights(y, rtol, atol)
        accepted[:] = [y, yp]
        if on_step is not None and on_step(clock.hi, y, yp, record):
            return finish("stopped")
        if h < cfg.min_step:
            return finish("min_step", f"step {h:.3e} below min_step")
