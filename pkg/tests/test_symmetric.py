import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgecast.bandwidth import exact_average_bandwidth, unicast_bandwidth
from edgecast.instance import is_feasible, mec_policy
from edgecast.symmetric import (
    REGIMES,
    SymmetricInstance,
    analyze,
    closed_form_bandwidth,
    gain_vs_mec,
    gain_vs_unicast,
    symmetric_policy,
    mec_bandwidth,
    optimal_counts,
    regime,
    symmetric_lp,
    write_grid,
)

BASE = dict(F=10, K=3, I=1e7, w=10, alpha=2.0, f1=1.1e11, mu=1e-27, tau=0.005, s=0.2)


def sym(beta_c, beta_e, **kw):
    p = {**BASE, **kw}
    return SymmetricInstance.from_betas(
        p["F"], p["K"], p["I"], p["w"], p["alpha"], beta_c, beta_e, p["f1"], p["mu"], p["tau"], p["s"]
    )


def test_counts_alpha_le1():
    c = optimal_counts(sym(0.3, 0.5, alpha=0.5))
    assert (c.n2, c.n3) == (0, 0) and c.n1 == pytest.approx(3.0)


def test_counts_worked_example():
    c = optimal_counts(sym(0.3, 0.4))
    assert c.as_tuple() == pytest.approx((1, 4, 0, 5))
    lp, _ = symmetric_lp(sym(0.3, 0.4))
    assert lp == pytest.approx((1, 4, 0))


def test_zero_budgets():
    s0 = sym(0.0, 0.0)
    assert optimal_counts(s0).as_tuple() == (0, 0, 0, 10)
    assert gain_vs_mec(s0)[0] == 1.0
    (n, val) = symmetric_lp(s0)
    assert n == (0, 0, 0) and val == pytest.approx(mec_bandwidth(s0))


def test_mec_bandwidth_formula():
    s0 = sym(0.1, 0.1)
    expected = s0.s * (1 - (1 - 1 / s0.F) ** s0.K) * s0.F * s0.R4
    assert closed_form_bandwidth(s0, (0, 0, 0, s0.F)) == pytest.approx(expected)
    assert closed_form_bandwidth(s0, (s0.F, 0, 0, 0)) == 0.0
    one = sym(0.1, 0.1, K=1)
    assert one.multicast_factor == pytest.approx(1 / one.F)


def test_gain_examples():
    assert gain_vs_mec(sym(0.3, 0.2, alpha=0.5))[0] == pytest.approx(0.7)
    s3 = sym(0.2, 0.3, alpha=3.0)
    assert regime(s3) == "high_f1"
    assert gain_vs_mec(s3)[0] == pytest.approx(0.6)


def test_unicast_gain_examples():
    assert gain_vs_unicast(7, 1) == pytest.approx(1.0)
    assert gain_vs_unicast(50, 4) == pytest.approx(0.9704, abs=5e-5)
    assert gain_vs_unicast(10, 4) == pytest.approx(0.85975, rel=1e-12)


@st.composite
def symmetric_points(draw):
    alpha = draw(st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]))
    F = draw(st.integers(2, 40))
    K = draw(st.integers(1, 6))
    bc = draw(st.floats(0, 1))
    be = draw(st.floats(0, 1))
    f1 = draw(st.floats(2.2e10, 1e12))
    return sym(bc, be, alpha=alpha, F=F, K=K, f1=f1)


@given(symmetric_points())
def test_lp_matches_closed_form(s):
    _, lp_val = symmetric_lp(s)
    cf = closed_form_bandwidth(s, optimal_counts(s))
    assert lp_val == pytest.approx(cf, rel=1e-9, abs=1e-6)
    ratio, label = gain_vs_mec(s)
    assert label in REGIMES
    assert ratio == pytest.approx(cf / mec_bandwidth(s), rel=1e-9, abs=1e-12)


@given(symmetric_points())
def test_ratio_bounds_and_monotone_in_cache(s):
    r, _ = gain_vs_mec(s)
    assert -1e-12 <= r <= 1 + 1e-12
    bigger = SymmetricInstance(s.F, s.K, s.I, s.w, s.alpha, s.C * 1.2 + 1, s.E, s.f1, s.mu, s.tau, s.s)
    assert gain_vs_mec(bigger)[0] <= r + 1e-12


def test_gain_vs_unicast_decreases_with_K():
    vals = [gain_vs_unicast(10, K) for K in range(1, 30)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_symmetric_policy_exact_bandwidth():
    s = sym(0.3, 0.4, K=2, F=4, I=1e7)
    counts = optimal_counts(s, integer=True)
    pol = symmetric_policy(s, counts)
    inst = s.to_instance()
    assert is_feasible(inst, pol).ok
    assert exact_average_bandwidth(inst, pol) == pytest.approx(closed_form_bandwidth(s, counts), rel=1e-12)
    ratio_uni = exact_average_bandwidth(inst, pol) / unicast_bandwidth(inst, pol)
    assert ratio_uni == pytest.approx(gain_vs_unicast(4, 2), rel=1e-12)
    assert exact_average_bandwidth(inst, mec_policy(2, 4)) == pytest.approx(mec_bandwidth(s))


def test_floored_counts_record_gap():
    s = sym(0.33, 0.47)
    c = optimal_counts(s, integer=True)
    assert c.floored and all(float(v).is_integer() for v in c.as_tuple())
    assert c.integrality_gap >= 0


def test_analyze_and_grid(tmp_path):
    a = analyze(sym(0.2, 0.3))
    assert a.ratio_mec == pytest.approx(a.B_star / a.B_mec)
    write_grid(tmp_path / "g.csv", [sym(b, 0.3) for b in np.linspace(0, 0.5, 6)])
    assert len((tmp_path / "g.csv").read_text().splitlines()) == 7


def test_invalid_inputs():
    with pytest.raises(ValueError):
        sym(0.1, 0.1, f1=1e9)  # I w / f1 > tau
    with pytest.raises(ValueError):
        gain_vs_unicast(0, 3)
