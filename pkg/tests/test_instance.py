import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import base_instance, tiny_instance
from edgecast.instance import (
    ServicePolicy,
    decision_to_policy,
    instance_from_config,
    is_feasible,
    load_instance,
    make_instance,
    mec_policy,
    policy_to_decision,
    save_instance,
    validate_instance,
)
from edgecast.symmetric import SymmetricInstance, symmetric_policy, optimal_counts


def test_deadline_violation_reported_first():
    # I w / f = 2 tau
    inst = make_instance([2e7], 2.0, 10, 0, 0, 1e9, [0.1], [1.0], 0.1, 1e-27)
    problems = validate_instance(inst)
    assert problems and problems[0].startswith("deadline infeasible for local computing")


def test_unnormalized_demand():
    inst = make_instance([1e6, 1e6], 2.0, 10, 0, 0, 1e11, [0.1], [0.6, 0.3], 0.1, 1e-27)
    assert any("demand not normalized" in p for p in validate_instance(inst))


def test_base_instance_is_valid():
    assert validate_instance(base_instance()) == []


@pytest.mark.parametrize(
    "route, expected",
    [(0, (1, 0, 0)), (1, (0, 1, 1)), (2, (0, 0, 1)), (3, (0, 0, 0))],
)
def test_decision_table(route, expected):
    d = policy_to_decision(ServicePolicy.from_routes([[route]]))
    assert (int(d.cache_output[0, 0]), int(d.cache_input[0, 0]), int(d.compute_local[0, 0])) == expected


@given(st.lists(st.lists(st.integers(0, 3), min_size=3, max_size=3), min_size=1, max_size=3))
def test_decision_round_trip(routes):
    pol = ServicePolicy.from_routes(routes)
    assert np.array_equal(decision_to_policy(policy_to_decision(pol)).x, pol.x)
    assert ServicePolicy.decode(pol.encode()).encode() == pol.encode()


def test_binary_policy_rejects_fractions():
    with pytest.raises(ValueError):
        ServicePolicy(np.full((1, 1, 4), 0.25))
    ServicePolicy(np.full((1, 1, 4), 0.25), mode="relaxed")


def test_mec_policy_always_feasible():
    for seed in range(5):
        inst = tiny_instance(seed, K=3, F=4)
        rep = is_feasible(inst, mec_policy(inst.K, inst.F))
        assert rep.ok
        assert np.allclose(rep.cache_slack, inst.C)


def test_cache_violation_slack():
    # O = (4, 4), C = 5, both outputs cached
    inst = make_instance([2, 2], 2.0, 1, 5, 0, 1e11, [0.1], [0.5, 0.5], 1.0, 1e-27)
    rep = is_feasible(inst, ServicePolicy.from_routes([[0, 0]]))
    assert [v.kind for v in rep.violations] == ["cache"]
    assert rep.violations[0].slack == pytest.approx(-3.0)


def test_row_sum_violation():
    x = np.zeros((1, 2, 4))
    x[0, 0, 3] = 1
    rep = is_feasible(tiny_instance(0, K=1, F=2), x)
    assert [(v.kind, v.task) for v in rep.violations] == [("row_sum", 1)]


def test_closed_form_counts_policy_feasible():
    sym = SymmetricInstance.from_betas(10, 3, 1e7, 10, 2.0, 0.3, 0.4, 1.1e11, 1e-27, 0.005, 0.2)
    counts = optimal_counts(sym, integer=True)
    assert counts.as_tuple() == (1, 4, 0, 5)
    assert is_feasible(sym.to_instance(), symmetric_policy(sym, counts)).ok


def test_config_round_trip(tmp_path):
    inst = tiny_instance(4, K=3, F=3)
    path = tmp_path / "inst.ini"
    save_instance(inst, path)
    back = load_instance(path)
    for attr in ("I", "O", "w", "C", "E", "fk", "s", "P"):
        assert np.array_equal(getattr(back, attr), getattr(inst, attr)), attr
    assert (back.tau, back.mu, back.alpha) == (inst.tau, inst.mu, inst.alpha)


def test_generated_config_matches_builder(tmp_path):
    import configparser

    cfg = configparser.ConfigParser()
    cfg.read_string(
        """
[system]
tau = 0.0015
mu = 1e-27
[tasks]
alpha = 3
compute_load = 10
count = 50
input_min = 10e6
input_max = 15e6
seed = 0
[devices]
count = 4
cache_fraction = 0.175
avg_energy = 1.7e3
cpu_freq = 1.1e11
inv_spectral_eff = 0.1, 0.2, 0.3, 0.4
popularity = zipf
zipf_gamma = 1
"""
    )
    a, b = instance_from_config(cfg), base_instance()
    assert np.array_equal(a.I, b.I) and np.allclose(a.C, b.C) and np.allclose(a.P, b.P)


def test_replace_keeps_other_fields():
    inst = tiny_instance(1)
    new = inst.replace(cache_bits=7.0, tau=0.01)
    assert np.all(new.C == 7.0) and new.tau == 0.01
    assert np.array_equal(new.E, inst.E) and np.array_equal(new.P, inst.P)
