import numpy as np
import pytest

from mmrelax.core import (ConfigError, MeshState, ProblemSpec, RunConfig,
                          SystemState, TauPolicy, pack_state,
                          parse_config_text, unpack_state, validate_mesh)


def test_uniform_mesh_is_valid():
    mesh = MeshState.uniform(10)
    assert mesh.n_intervals == 10
    assert validate_mesh(mesh) is None
    with pytest.raises(ValueError):
        mesh.nodes[3] = 0.5


@pytest.mark.parametrize("x, index, kind", [
    ([0.1, 0.5, 1.0], 0, "boundary"),
    ([0.0, 0.6, 0.4, 1.0], 1, "monotonicity"),
    ([0.0, 0.5, 0.5, 1.0], 1, "monotonicity"),
    ([0.0, 0.5, 0.9], 2, "boundary"),
])
def test_validate_mesh_reports_first_violation(x, index, kind):
    v = validate_mesh(x)
    assert (v.index, v.kind) == (index, kind)


def test_pack_roundtrip_and_batches():
    u = np.arange(5.0)
    x = np.linspace(0, 1, 5)
    y = pack_state(u, MeshState(x))
    uu, xx = unpack_state(y)
    np.testing.assert_array_equal(uu, u)
    np.testing.assert_array_equal(xx, x)
    batch = np.stack([y, 2 * y])
    ub, xb = unpack_state(batch)
    assert ub.shape == (2, 5)
    np.testing.assert_array_equal(xb[1], 2 * x)
    with pytest.raises(ConfigError):
        pack_state(u[:-1], x)


def test_system_state_shapes():
    s = SystemState(0.0, np.zeros(8), np.zeros(8))
    assert s.n_intervals == 3
    with pytest.raises(ConfigError):
        SystemState(0.0, np.zeros(8), np.zeros(6))


def test_problem_spec_validation():
    assert ProblemSpec("power", "power", p=2.0).beta == 1.0
    with pytest.raises(ConfigError):
        ProblemSpec("power", "power", p=1.0)
    with pytest.raises(ConfigError):
        ProblemSpec("cubic", "power", p=3.0)
    with pytest.raises(ConfigError):
        ProblemSpec("prescribed", "arclength")


@pytest.mark.parametrize("text, expected", [
    ("fixed:1e-5", TauPolicy.fixed(1e-5)),
    ("adaptive", TauPolicy.adaptive()),
    ("adaptive:1e-6", TauPolicy.adaptive(1e-6)),
    ("adaptive:1e-6,1e-7,0.5", TauPolicy.adaptive(1e-6, 1e-7, 0.5)),
])
def test_tau_grammar(text, expected):
    policy = TauPolicy.parse(text)
    assert policy == expected
    assert TauPolicy.parse(str(policy)) == policy


@pytest.mark.parametrize("text", ["fixed", "fixed:-1", "adaptive:1,2",
                                  "adaptive:1e-8,1,0.5", "steady:1"])
def test_tau_grammar_rejects(text):
    with pytest.raises(ConfigError) as err:
        TauPolicy.parse(text)
    assert err.value.field_name == "tau"


@pytest.mark.parametrize("changes, field_name", [
    ({"N": 5}, "N"),
    ({"N": 20, "ip": 10}, "ip"),
    ({"mmpde": "MMPDE5"}, "mmpde"),
    ({"gamma": 0.0}, "gamma"),
    ({"rtol": 0.0}, "rtol"),
])
def test_run_config_invariants_name_the_field(changes, field_name):
    with pytest.raises(ConfigError) as err:
        RunConfig(**changes)
    assert err.value.field_name == field_name


def test_run_config_items_roundtrip_bit_exact():
    cfg = RunConfig(N=37, tau=TauPolicy.adaptive(1.0 / 3.0, 1e-9, 0.1),
                    gamma=0.1 + 0.2, decades=(1, 5), t_end=0.4 - 1e-5)
    assert RunConfig.from_items(cfg.to_items()) == cfg


def test_config_text_parser():
    items = parse_config_text("# comment\nN = 40\n\ntau=fixed:1e-5  # tail\n")
    assert items == {"N": "40", "tau": "fixed:1e-5"}
    with pytest.raises(ConfigError):
        parse_config_text("N 40")
    with pytest.raises(ConfigError) as err:
        RunConfig.from_items({"bogus": "1"})
    assert err.value.field_name == "bogus"
