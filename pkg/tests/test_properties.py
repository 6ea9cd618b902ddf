import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmrelax.core import TauPolicy
from mmrelax.harness import SCENARIOS, run_experiment
from mmrelax.meshdyn import defect, mmpde4_rows, mmpde6_rows, tau_eval
from mmrelax.monitor import MonitorField, monitor_field, smooth

positive = st.floats(1e-3, 1e3)
gammas = st.floats(0.1, 10.0)


@st.composite
def raw_monitors(draw, min_size=3, max_size=40):
    n = draw(st.integers(min_size, max_size))
    return draw(arrays(float, n, elements=st.floats(1e-6, 1e6)))


@st.composite
def meshes(draw, min_n=3, max_n=30):
    n = draw(st.integers(min_n, max_n))
    w = draw(arrays(float, n, elements=st.floats(0.05, 1.0)))
    return np.concatenate([[0.0], np.cumsum(w) / w.sum()])


# --- smoothing --------------------------------------------------------------

@given(raw_monitors(), gammas)
def test_smoothing_without_window_is_identity(raw, gamma):
    np.testing.assert_allclose(smooth(raw, gamma, 0), raw, rtol=1e-14)


@given(st.integers(3, 40), st.floats(1e-6, 1e6), gammas, st.integers(0, 6))
def test_smoothing_preserves_constants(n, c, gamma, ip):
    np.testing.assert_allclose(smooth(np.full(n, c), gamma, ip), c,
                               rtol=1e-13)


@given(raw_monitors(), positive, gammas, st.integers(0, 6))
def test_smoothing_is_homogeneous(raw, k, gamma, ip):
    np.testing.assert_allclose(smooth(k * raw, gamma, ip),
                               k * smooth(raw, gamma, ip), rtol=1e-12)


@given(raw_monitors(), gammas, st.integers(0, 6))
def test_smoothing_stays_within_the_data_range(raw, gamma, ip):
    s = smooth(raw, gamma, ip)
    assert np.all(s <= raw.max() * (1 + 1e-13))
    assert np.all(s >= raw.min() * (1 - 1e-13))


# --- mesh equations ---------------------------------------------------------

@given(st.integers(2, 50), st.floats(1e-6, 1e6))
def test_uniform_mesh_with_constant_monitor_has_no_defect(n, c):
    m = MonitorField(np.full(n + 1, c), np.full(n + 1, c))
    E = defect(np.linspace(0, 1, n + 1), m)
    assert np.abs(E).max() <= 1e-12 * c


@given(st.integers(2, 50), st.floats(1e-6, 1e6), st.floats(1e-6, 1.0))
def test_equidistributed_mesh_at_rest_is_a_fixed_point(n, c, tau):
    m = MonitorField(np.full(n + 1, c), np.full(n + 1, c))
    x = np.linspace(0, 1, n + 1)
    rest = np.zeros(n + 1)
    np.testing.assert_allclose(mmpde6_rows(x, rest, m, tau), 0.0,
                               atol=1e-12 * c / tau)
    np.testing.assert_allclose(mmpde4_rows(x, rest, m, tau), 0.0,
                               atol=1e-12 * c / tau)


@given(meshes(), st.floats(1e-6, 1.0), positive)
def test_mmpde6_joint_rescaling(x, tau, k):
    rng = np.random.default_rng(x.size)
    raw = rng.uniform(0.5, 5.0, x.size)
    xd = rng.normal(size=x.size)
    xd[[0, -1]] = 0.0
    m = monitor_field(raw, 2.0, 1)
    mk = monitor_field(k * raw, 2.0, 1)
    np.testing.assert_allclose(mmpde6_rows(x, xd, mk, k * tau),
                               mmpde6_rows(x, xd, m, tau), rtol=1e-10,
                               atol=1e-10 * np.abs(xd).max())


@given(meshes())
def test_mesh_velocity_is_reflection_symmetric(x):
    raw = 1.0 + np.sin(np.pi * x)
    m = monitor_field(raw, 2.0, 2)
    n = x.size
    lap = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1)
           + np.diag(np.ones(n - 1), -1))
    lap[0] = lap[-1] = 0.0
    lap[0, 0] = lap[-1, -1] = 1.0

    def velocity(nodes, field):
        rhs = -mmpde6_rows(nodes, np.zeros(n), field, 1e-3)
        return np.linalg.solve(lap, rhs)

    xm = 1.0 - x[::-1]
    mm = monitor_field(raw[::-1], 2.0, 2)
    np.testing.assert_allclose(velocity(xm, mm), -velocity(x, m)[::-1],
                               atol=1e-10)


# --- relaxation time --------------------------------------------------------

@given(st.floats(1e-12, 1e12), st.floats(1e-10, 1e-2),
       st.floats(1e-10, 1e-6), st.floats(1e-3, 1.0))
def test_tau_is_clamped(max_m, tau_o, tau_min, tau_max):
    policy = TauPolicy.adaptive(tau_o, tau_min, tau_max)
    m = MonitorField(np.array([1e-10, max_m]), np.ones(2))
    tau = tau_eval(policy, m)
    assert tau_min <= tau <= tau_max
    if tau_min < tau_o * max_m < tau_max:
        assert tau == pytest.approx(tau_o * max_m, rel=1e-14)


@settings(max_examples=30)
@given(st.floats(1e-9, 1.0))
def test_fixed_tau_ignores_the_monitor(tau):
    m = MonitorField(np.array([1.0, 1e9]), np.ones(2))
    assert tau_eval(TauPolicy.fixed(tau), m) == tau


# --- every accepted step of every scenario ----------------------------------

@pytest.mark.parametrize("sid", sorted(SCENARIOS))
def test_mesh_stays_ordered(sid):
    r = run_experiment(sid)
    assert r.meshes.shape[0] == r.n_accepted + 1
    assert np.all(np.diff(r.meshes, axis=1) > 0)
    # the ends are held by xdot = 0 rows, so they move only by rounding
    assert np.abs(r.meshes[:, 0]).max() < 1e-15
    assert np.abs(r.meshes[:, -1] - 1.0).max() < 1e-15
