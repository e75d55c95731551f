import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import tiny_instance
from edgecast.bandwidth import exact_average_bandwidth, saa_objective
from edgecast.instance import ServicePolicy, is_feasible, make_instance, mec_policy
from edgecast.oracle import (
    KnapsackItem,
    device_assignments,
    enumerate_optimal,
    instance_hash,
    read_fixtures,
    single_user_knapsack_items,
    solve_single_user,
)
from edgecast.sampling import draw_samples

FIXTURES = Path(__file__).parent / "fixtures" / "oracle_small.csv"


def brute_force(inst, samples=None):
    """Independent oracle: loop over every binary policy, filter by feasibility."""
    best = None
    for flat in itertools.product(range(4), repeat=inst.K * inst.F):
        pol = ServicePolicy.from_routes(np.reshape(flat, (inst.K, inst.F)))
        if not is_feasible(inst, pol).ok:
            continue
        v = exact_average_bandwidth(inst, pol) if samples is None else saa_objective(inst, pol, samples)
        if best is None or v < best:
            best = v
    return best


def test_zero_budgets_give_mec():
    inst = tiny_instance(0).replace(cache_bits=0, avg_energy=0)
    res = enumerate_optimal(inst)
    assert res.best_policy.encode() == "44|44"
    assert res.best_value == pytest.approx(exact_average_bandwidth(inst, mec_policy(2, 2)))
    assert res.policies_examined == 1


def test_huge_cache_gives_all_route1():
    inst = tiny_instance(1)
    inst = inst.replace(cache_bits=inst.O.sum())
    res = enumerate_optimal(inst)
    assert res.best_value == 0.0
    assert res.best_policy.encode() == "11|11"


@pytest.mark.parametrize("seed", range(4))
def test_matches_brute_force(seed):
    inst = tiny_instance(seed)
    assert enumerate_optimal(inst).best_value == pytest.approx(brute_force(inst), rel=1e-12)
    A = draw_samples(inst, 16, seed)
    assert enumerate_optimal(inst, A).best_value == pytest.approx(brute_force(inst, A), rel=1e-12)


def test_regression_fixtures():
    rows = read_fixtures(FIXTURES)
    by_hash = {}
    for seed in range(8):
        inst = tiny_instance(seed)
        by_hash[instance_hash(inst)] = (inst, seed)
    assert len(rows) == 16
    for r in rows:
        inst, seed = by_hash[r["instance_hash"]]
        samples = None if r["objective"] == "exact" else draw_samples(inst, 16, seed)
        res = enumerate_optimal(inst, samples)
        assert res.best_value == pytest.approx(r["best_value"], rel=1e-12)
        assert res.best_policy.encode() == r["policy"].encode()


def test_device_assignments_feasible_and_capped():
    inst = tiny_instance(3, K=2, F=3)
    for k in range(2):
        for routes in device_assignments(inst, k):
            full = np.full((2, 3), 3)
            full[k] = routes
            assert is_feasible(inst, ServicePolicy.from_routes(full)).ok
    with pytest.raises(ValueError):
        device_assignments(inst, 0, cap=10)


def test_route3_knapsack_value_by_hand():
    inst = make_instance([1e7], 3.0, 10, 0, 0, 1.1e11, [0.1], [1.0], 0.02, 1e-27)
    inst2 = make_instance([1e7, 1e7], 3.0, 10, 0, 0, 1.1e11, [0.1], [0.5, 0.5], 0.02, 1e-27)
    items = single_user_knapsack_items(inst2, 0)
    v3 = next(it for it in items if it.task == 0 and it.route == 3).value
    assert v3 == pytest.approx(0.5 * (1.5e9 - 5.2381e8) * 0.1, rel=1e-4)
    assert all(it.value == 0 and it.cache_weight == 0 and it.energy_weight == 0 for it in items if it.route == 4)
    assert len(single_user_knapsack_items(inst, 0)) == 4


def toy_items(P=(0.8, 0.2), O=(4, 4)):
    # unit tau and s, alpha = 2, so I = 2; route 3 costs more than route 4 here
    items = []
    for f in range(2):
        items += [
            KnapsackItem(f, 1, P[f] * O[f], O[f], 0.0),
            KnapsackItem(f, 2, P[f] * O[f], O[f] / 2, 1.0),
            KnapsackItem(f, 3, -1.0, 0.0, 1.0),
            KnapsackItem(f, 4, 0.0, 0.0, 0.0),
        ]
    return items


def test_knapsack_toy():
    res = solve_single_user(toy_items(), C=4, E=0)
    assert res.best_policy.encode() == "14"
    assert res.profit == pytest.approx(3.2)


def test_knapsack_zero_budgets():
    res = solve_single_user(toy_items(), C=0, E=0)
    assert res.best_policy.encode() == "44" and res.profit == 0.0


@given(st.integers(0, 100_000))
def test_knapsack_matches_enumeration_single_user(seed):
    inst = tiny_instance(seed, K=1, F=3)
    res = solve_single_user(single_user_knapsack_items(inst, 0), inst.C[0], inst.E[0])
    ref = enumerate_optimal(inst)
    assert res.best_value == pytest.approx(ref.best_value, rel=1e-9, abs=1e-6)
    assert exact_average_bandwidth(inst, res.best_policy) == pytest.approx(res.best_value, rel=1e-9, abs=1e-6)


def test_oracle_caps():
    inst = tiny_instance(0, K=2, F=3)
    with pytest.raises(ValueError, match="route vectors"):
        enumerate_optimal(inst, cap=63)
    rich = inst.replace(cache_bits=inst.O.sum() + inst.I.sum(), avg_energy=1e30)
    with pytest.raises(ValueError, match="combinations"):
        enumerate_optimal(rich, cap=1000)
