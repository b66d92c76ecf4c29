import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heraldcat.conditioning import (
    Ancilla,
    HeraldOutcome,
    SchemeConfig,
    branch_fidelity_probability,
    branch_probabilities,
    branch_states,
    condition,
    condition_photon_even_click,
    condition_photon_odd_click,
    condition_photon_zero_click,
    condition_vacuum_even,
    condition_vacuum_odd,
    distribution_discrepancy,
    herald_fidelity,
    output_parity,
    probability_completeness,
)
from heraldcat.fock import CatTarget, Parity, TruncationError, smsv_state
from heraldcat.oracle import oracle_condition

s_values = st.floats(min_value=0.05, max_value=1.5)
t_values = st.floats(min_value=0.3, max_value=0.97)


@pytest.mark.parametrize(
    "value, expected",
    [("vacuum", Ancilla.VACUUM), ("photon", Ancilla.SINGLE_PHOTON), ("single-photon", Ancilla.SINGLE_PHOTON)],
)
def test_ancilla_parse(value, expected):
    assert Ancilla.parse(value) is expected


@pytest.mark.parametrize("t", [0.0, 1.0, -0.2, 1.5, math.nan])
def test_config_rejects_bad_t(t):
    with pytest.raises(ValueError):
        SchemeConfig(0.5, t)


def test_config_rejects_negative_s():
    with pytest.raises(ValueError):
        SchemeConfig(-0.1, 0.5)


@given(t_values)
def test_config_r_derived(t):
    cfg = SchemeConfig(0.5, t)
    assert cfg.t**2 + cfg.r**2 == pytest.approx(1.0, abs=1e-15)


def test_herald_outcome():
    o = HeraldOutcome(7)
    assert (o.m, o.is_even) == (3, False)
    with pytest.raises(ValueError):
        HeraldOutcome(-1)


def test_vacuum_even_nothing_reflected():
    s = 0.7
    res = condition_vacuum_even(SchemeConfig(s, 1 - 1e-12), 0, 60)
    np.testing.assert_allclose(res.state.amplitudes, smsv_state(s, 60).amplitudes, atol=1e-10)
    assert res.probability == pytest.approx(1.0, abs=1e-10)


def test_vacuum_even_zero_squeezing():
    res = condition_vacuum_even(SchemeConfig(0.0, 0.6), 0, 10)
    assert res.state.amplitudes[0] == 1.0
    assert res.probability == 1.0


def test_vacuum_odd_impossible_at_zero_squeezing():
    res = condition_vacuum_odd(SchemeConfig(0.0, 0.6), 0, 10)
    assert res.probability == 0.0
    assert res.state is None
    assert not res.possible


def test_photon_zero_click_zero_squeezing():
    cfg = SchemeConfig(0.0, 0.6, "photon")
    res = condition_photon_zero_click(cfg, 10)
    assert res.state.amplitudes[1] == pytest.approx(1.0)
    assert res.probability == pytest.approx(cfg.r**2)


def test_photon_odd_click_zero_squeezing():
    # the ancilla photon stays in mode 2 with amplitude t
    cfg = SchemeConfig(0.0, 0.6, "photon")
    res = condition_photon_odd_click(cfg, 0, 10)
    assert res.state.amplitudes[0] == pytest.approx(1.0)
    assert res.probability == pytest.approx(cfg.t**2)


@pytest.mark.parametrize(
    "ancilla, n, s, t",
    [
        ("vacuum", 2, 0.8, 0.8),
        ("vacuum", 1, 0.8, 0.8),
        ("vacuum", 3, 0.8, 0.8),
        ("photon", 0, 0.8, 0.7),
        ("photon", 2, 0.8, 0.8),
        ("photon", 5, 0.8, 0.8),
        ("photon", 1, 0.8, 0.8),
    ],
)
def test_matches_oracle(ancilla, n, s, t):
    cfg = SchemeConfig(s, t, ancilla)
    a = condition(cfg, n, 60)
    b = oracle_condition(cfg, n, 60)
    assert a.state.allclose(b.state, atol=1e-10, up_to_sign=True)
    assert a.probability == pytest.approx(b.probability, abs=1e-12)


@pytest.mark.parametrize(
    "fn, ancilla, m, n",
    [
        (condition_vacuum_even, "vacuum", 2, 4),
        (condition_vacuum_odd, "vacuum", 1, 3),
        (condition_photon_even_click, "photon", 2, 4),
        (condition_photon_odd_click, "photon", 0, 1),
    ],
)
def test_wrappers_agree_with_dispatcher(fn, ancilla, m, n):
    cfg = SchemeConfig(0.8, 0.8, ancilla)
    a, b = fn(cfg, m, 80), condition(cfg, n, 80)
    np.testing.assert_array_equal(a.state.amplitudes, b.state.amplitudes)
    assert a.probability == b.probability


def test_wrappers_check_ancilla():
    with pytest.raises(ValueError):
        condition_vacuum_even(SchemeConfig(0.5, 0.5, "photon"), 1)
    with pytest.raises(ValueError):
        condition_photon_odd_click(SchemeConfig(0.5, 0.5, "vacuum"), 1)
    with pytest.raises(ValueError):
        condition_photon_even_click(SchemeConfig(0.5, 0.5, "photon"), 0)


def test_truncation_signalled():
    with pytest.raises(TruncationError):
        condition(SchemeConfig(2.0, 0.99), 20, 20)


@given(s_values, t_values, st.sampled_from(list(Ancilla)), st.integers(0, 12))
def test_state_normalized_and_parity(s, t, ancilla, n):
    res = condition(SchemeConfig(s, t, ancilla), n, 400, tail_tol=1e-8)
    assert 0.0 <= res.probability <= 1.0
    if res.possible:
        assert abs(res.state.norm() - 1.0) < 1e-10
        assert res.state.parity is output_parity(ancilla, n)
        assert res.norm_constant > 0


@pytest.mark.parametrize(
    "ancilla, n, parity",
    [
        ("vacuum", 4, Parity.EVEN),
        ("vacuum", 5, Parity.ODD),
        ("photon", 4, Parity.ODD),
        ("photon", 5, Parity.EVEN),
        ("photon", 0, Parity.ODD),
    ],
)
def test_output_parity_rules(ancilla, n, parity):
    assert output_parity(ancilla, n) is parity


@pytest.mark.parametrize("ancilla", list(Ancilla))
def test_probabilities_sum_to_one(ancilla):
    assert probability_completeness(SchemeConfig(1.0, 0.8, ancilla), 60) >= 1 - 1e-8


def test_completeness_zero_squeezing():
    assert probability_completeness(SchemeConfig(0.0, 0.5), 0) == 1.0


def test_completeness_rejects_large_cut():
    with pytest.raises(ValueError):
        probability_completeness(SchemeConfig(0.5, 0.5), 10, n_max=5)


@given(s_values, t_values, st.sampled_from(list(Ancilla)), st.integers(0, 10))
def test_branch_probabilities_match_scalar(s, t, ancilla, n):
    cfg = SchemeConfig(s, t, ancilla)
    p = branch_probabilities(ancilla, [n], s, t)[0]
    assert p == pytest.approx(condition(cfg, n, 400, tail_tol=1e-8).probability, rel=1e-12, abs=1e-300)


def test_fidelity_zero_for_parity_mismatch():
    res = condition(SchemeConfig(0.8, 0.8), 2, 80)
    assert herald_fidelity(res, CatTarget(1.0, Parity.ODD)).fidelity == 0.0


@given(s_values, t_values, st.floats(min_value=0.2, max_value=3.0))
def test_fidelity_in_unit_interval(s, t, beta):
    res = condition(SchemeConfig(s, t), 6, 400, tail_tol=1e-8)
    f = herald_fidelity(res, CatTarget(beta)).fidelity
    assert 0.0 <= f <= 1.0


def test_batch_matches_scalar():
    s = np.array([0.3, 0.9, 1.4])
    t = np.array([0.5, 0.8, 0.95])
    target = CatTarget(1.7, Parity.ODD)
    fid, prob = branch_fidelity_probability("photon", 4, target, s, t)
    states, prob2, start = branch_states("photon", 4, s, t)
    assert start == 1
    np.testing.assert_allclose(prob, prob2, rtol=1e-14)
    for i in range(3):
        res = condition(SchemeConfig(s[i], t[i], "photon"), 4, 400, tail_tol=1e-8)
        assert fid[i] == pytest.approx(herald_fidelity(res, target).fidelity, abs=1e-12)
        assert prob[i] == pytest.approx(res.probability, rel=1e-12)


def test_batch_zero_squeezing_odd_herald_is_zero():
    _, prob = branch_fidelity_probability("vacuum", 3, CatTarget(1.0, Parity.ODD), np.array([0.0, 0.5]), 0.7)
    assert prob[0] == 0.0 and prob[1] > 0


def test_distribution_discrepancy():
    res = condition(SchemeConfig(0.6, 0.8), 4, 80)
    target = CatTarget(1.5)
    d, k = distribution_discrepancy(res, target)
    from heraldcat.fock import cat_state

    diff = np.abs(res.state.probabilities - cat_state(target, 80).probabilities)
    assert d == diff.max() and diff[k] == d
    with pytest.raises(ValueError):
        distribution_discrepancy(res, CatTarget(1.5, Parity.ODD))
