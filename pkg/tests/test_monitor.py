import numpy as np
import pytest

from mmrelax.core import EvaluationError, ProblemSpec
from mmrelax.monitor import (gradient, monitor_field, monitor_values, smooth,
                             total_monitor)


def smooth_loop(raw, gamma, ip):
    """Direct per-node evaluation of the windowed weighted RMS."""
    w = gamma / (1.0 + gamma)
    n = len(raw)
    out = np.empty(n)
    for i in range(n):
        num = den = 0.0
        for j in range(max(0, i - ip), min(n, i + ip + 1)):
            num += w ** abs(j - i) * raw[j] ** 2
            den += w ** abs(j - i)
        out[i] = np.sqrt(num / den)
    return out


def test_smoothing_hand_value():
    # w = 2/3: (2/3 + 4 + 2/3) / (1 + 4/3) = 16/7
    assert smooth([1.0, 2.0, 1.0], 2.0, 1)[1] == pytest.approx(np.sqrt(16 / 7),
                                                               rel=1e-15)


@pytest.mark.parametrize("gamma, ip", [(2.0, 1), (2.0, 4), (0.5, 3), (7.0, 2)])
def test_smoothing_matches_loop(gamma, ip):
    raw = np.random.default_rng(ip).uniform(0.1, 5.0, 23)
    np.testing.assert_allclose(smooth(raw, gamma, ip),
                               smooth_loop(raw, gamma, ip), rtol=1e-14)


def test_smoothing_batches_on_last_axis():
    raw = np.random.default_rng(0).uniform(0.1, 5.0, (3, 17))
    out = smooth(raw, 2.0, 4)
    for k in range(3):
        np.testing.assert_allclose(out[k], smooth_loop(raw[k], 2.0, 4),
                                   rtol=1e-14)


def test_gradient_nonuniform():
    x = np.array([0.0, 0.1, 0.3, 0.7, 1.0])
    u = 3 * x + 1
    np.testing.assert_allclose(gradient(u, x), 3.0)
    g = gradient(x**2, x)
    assert g[2] == pytest.approx((0.49 - 0.01) / 0.6)
    assert g[0] == pytest.approx(0.1)


def test_monitor_kinds():
    x = np.linspace(0, 1, 5)
    u = np.array([0.0, 1.0, -2.0, 3.0, 0.0])
    m = monitor_values(ProblemSpec("power", "power", p=3.0), u, x)
    np.testing.assert_allclose(m, u**2)
    m = monitor_values(ProblemSpec("exponential", "exponential"), u, x)
    np.testing.assert_allclose(m, np.exp(u))
    m = monitor_values(ProblemSpec("prescribed", "arclength",
                                   example="example1"), 2 * x, x)
    np.testing.assert_allclose(m, np.sqrt(5.0))


def test_monitor_overflow_raises_with_index():
    u = np.array([0.0, 800.0, 0.0])
    with pytest.raises(EvaluationError) as err:
        monitor_values(ProblemSpec("exponential", "exponential"), u,
                       np.linspace(0, 1, 3))
    assert err.value.index == 1


def test_floor_applies_before_and_after_smoothing():
    m = monitor_field(np.zeros(6), 2.0, 2, floor=1e-10)
    np.testing.assert_array_equal(m.raw, 1e-10)
    np.testing.assert_allclose(m.smoothed, 1e-10, rtol=1e-15)
    np.testing.assert_allclose(m.half, 1e-10, rtol=1e-15)


def test_total_monitor_trapezoid():
    x = np.array([0.0, 0.25, 1.0])
    assert total_monitor(np.array([1.0, 3.0, 1.0]), x) == pytest.approx(
        0.25 * 2 + 0.75 * 2)
