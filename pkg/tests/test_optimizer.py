import dataclasses
import logging

import numpy as np
import pytest

from heraldcat.conditioning import Ancilla, SchemeConfig, condition, herald_fidelity
from heraldcat.detector import DetectorModel
from heraldcat.fock import CatTarget, Parity
from heraldcat.optimizer import (
    Landscape,
    Regime,
    SearchPolicy,
    ThresholdBracketError,
    beta_threshold,
    best_squeezing,
    fidelity_isolines,
    max_fidelity_curve,
    maximize_fidelity,
    maximize_probability_with_floor,
)

COARSE = SearchPolicy(grid_s=24, grid_t=24, refine_evals=120)


def _exact(anc, n, target, s, t):
    return herald_fidelity(condition(SchemeConfig(s, t, anc), n), target).fidelity


def test_fidelity_optimum_is_consistent_with_direct_evaluation():
    target = CatTarget(1.5)
    res = maximize_fidelity(Ancilla.VACUUM, 6, target, COARSE)
    assert res.regime is Regime.FID_OPTIMAL
    assert 0.05 <= res.s <= 2.5 and 0.3 <= res.t <= 0.999
    assert res.fidelity == pytest.approx(_exact(Ancilla.VACUUM, 6, target, res.s, res.t), abs=1e-12)
    assert 0.0 <= res.probability <= 1.0
    assert res.evaluations > 0


@pytest.mark.parametrize("anc,n,beta", [(Ancilla.VACUUM, 6, 1.5), (Ancilla.SINGLE_PHOTON, 5, 1.8)])
def test_refinement_beats_grid(anc, n, beta):
    target = CatTarget(beta, Parity.EVEN)
    res = maximize_fidelity(anc, n, target, COARSE)
    fid, _ = Landscape(anc, n, target).grid(COARSE)
    assert res.fidelity >= fid.max() - 1e-15


def test_determinism():
    policy = dataclasses.replace(COARSE, random_starts=2, seed=11)
    a = maximize_probability_with_floor(Ancilla.SINGLE_PHOTON, 5, CatTarget(1.8), 0.95, policy)
    b = maximize_probability_with_floor(Ancilla.SINGLE_PHOTON, 5, CatTarget(1.8), 0.95, policy)
    assert a == b


@pytest.mark.parametrize(
    "anc,n,target,floor",
    [
        (Ancilla.VACUUM, 6, CatTarget(1.5), 0.97),
        (Ancilla.SINGLE_PHOTON, 5, CatTarget(1.8), 0.95),
        (Ancilla.VACUUM, 5, CatTarget(1.5, Parity.ODD), 0.97),
    ],
)
def test_probability_regime_respects_floor_and_dominates(anc, n, target, floor):
    fid_opt = maximize_fidelity(anc, n, target, COARSE)
    prob_opt = maximize_probability_with_floor(anc, n, target, floor, COARSE)
    assert prob_opt.feasible
    assert prob_opt.regime is Regime.PROB_OPTIMAL
    assert prob_opt.fidelity >= floor - 1e-12
    assert prob_opt.probability >= fid_opt.probability
    assert prob_opt.fidelity == pytest.approx(_exact(anc, n, target, prob_opt.s, prob_opt.t), abs=1e-12)


def test_unit_floor_is_infeasible():
    res = maximize_probability_with_floor(Ancilla.VACUUM, 6, CatTarget(1.5), 1.0, COARSE)
    assert not res.feasible
    assert 0.9 < res.fidelity < 1.0


@pytest.mark.parametrize(
    "anc,n,target",
    [
        (Ancilla.VACUUM, 6, CatTarget(1.5, Parity.ODD)),
        (Ancilla.SINGLE_PHOTON, 5, CatTarget(1.5, Parity.ODD)),
    ],
)
def test_parity_mismatch_rejected(anc, n, target):
    with pytest.raises(ValueError):
        maximize_fidelity(anc, n, target, COARSE)


def test_photon_zero_click_even_rejected():
    with pytest.raises(ValueError):
        maximize_fidelity(Ancilla.SINGLE_PHOTON, 0, CatTarget(1.0), COARSE)


def test_probability_window_is_honoured():
    target = CatTarget(1.5)
    free = maximize_fidelity(Ancilla.VACUUM, 6, target, COARSE)
    window = (1e-3, 1e-1)
    res = maximize_fidelity(Ancilla.VACUUM, 6, target, COARSE, probability_window=window)
    assert window[0] <= res.probability <= window[1]
    assert res.fidelity <= free.fidelity + 1e-12


def test_detector_objective():
    target = CatTarget(1.5)
    det = DetectorModel(0.9)
    ideal = maximize_fidelity(Ancilla.VACUUM, 4, target, COARSE)
    lossy = maximize_fidelity(Ancilla.VACUUM, 4, target, COARSE, detector=det)
    assert lossy.fidelity < ideal.fidelity


@pytest.mark.parametrize("anc,n,beta", [(Ancilla.VACUUM, 6, 1.5), (Ancilla.SINGLE_PHOTON, 5, 1.8)])
def test_isoline_points_lie_on_level(anc, n, beta):
    target = CatTarget(beta)
    level = 0.9
    iso = fidelity_isolines(anc, n, target, level, COARSE)
    assert not iso.empty
    pts = np.concatenate(iso.polylines)
    for s, t in pts:
        assert abs(_exact(anc, n, target, s, t) - level) < 1e-4


def test_isolines_empty_above_global_max():
    target = CatTarget(1.5)
    best = maximize_fidelity(Ancilla.VACUUM, 6, target, COARSE).fidelity
    assert fidelity_isolines(Ancilla.VACUUM, 6, target, min(best + 0.005, 0.9999), COARSE).empty


@pytest.mark.parametrize("level", [0.0, 1.0, 1.2])
def test_isoline_level_validated(level):
    with pytest.raises(ValueError):
        fidelity_isolines(Ancilla.VACUUM, 6, CatTarget(1.5), level, COARSE)


def test_photon_isoline_closes_around_optimum():
    target = CatTarget(1.8)
    iso = fidelity_isolines(Ancilla.SINGLE_PHOTON, 5, target, 0.97, COARSE)
    assert len(iso.polylines) == 1
    line = iso.polylines[0]
    np.testing.assert_allclose(line[0], line[-1])
    opt = maximize_fidelity(Ancilla.SINGLE_PHOTON, 5, target, COARSE)
    assert line[:, 0].min() < opt.s < line[:, 0].max()
    assert line[:, 1].min() < opt.t < line[:, 1].max()


def test_vacuum_isoline_reaches_high_transmission():
    # along the ridge only tanh(s) t^2 matters, so the stripe runs to the t edge of the box
    iso = fidelity_isolines(Ancilla.VACUUM, 6, CatTarget(1.5), 0.95, COARSE)
    pts = np.concatenate(iso.polylines)
    assert pts[:, 1].max() > 0.99


def test_vacuum_ridge_degeneracy():
    target = CatTarget(1.5)
    x = np.tanh(0.8) * 0.7**2
    f_ref = _exact(Ancilla.VACUUM, 6, target, 0.8, 0.7)
    for t in (0.75, 0.9, 0.99):
        s = float(np.arctanh(x / t**2))
        assert _exact(Ancilla.VACUUM, 6, target, s, t) == pytest.approx(f_ref, abs=1e-12)


def test_trend_decreasing_in_beta():
    curve = max_fidelity_curve(Ancilla.VACUUM, 6, [1.0, 1.5, 2.0, 2.5], COARSE)
    fids = [r.fidelity for r in curve]
    assert np.all(np.diff(fids) <= 1e-9)


def test_trend_increasing_in_n():
    fids = [maximize_fidelity(Ancilla.VACUUM, n, CatTarget(2.0), COARSE).fidelity for n in (2, 4, 6, 8)]
    assert np.all(np.diff(fids) >= -1e-9)


def test_warm_and_cold_sweeps_agree():
    betas = [1.0, 1.5, 2.0]
    warm = max_fidelity_curve(Ancilla.SINGLE_PHOTON, 5, betas, COARSE, warm=True)
    cold = max_fidelity_curve(Ancilla.SINGLE_PHOTON, 5, betas, COARSE, warm=False)
    for a, b in zip(warm, cold):
        assert a.fidelity == pytest.approx(b.fidelity, abs=1e-6)


def test_threshold_bracketing_small_n():
    res = beta_threshold(Ancilla.VACUUM, 6, floor=0.97, resolution=0.05, search=COARSE)
    assert res.fidelity_below >= 0.97 > res.fidelity_above
    assert res.fidelity_at_threshold >= 0.97
    check = maximize_fidelity(Ancilla.VACUUM, 6, CatTarget(res.beta_threshold + res.resolution), COARSE)
    assert check.fidelity < 0.97


def test_threshold_unbracketable():
    with pytest.raises(ThresholdBracketError):
        beta_threshold(Ancilla.VACUUM, 2, floor=0.99, search=COARSE, beta_range=(2.5, 8.0))


def test_threshold_warns_when_not_monotone(caplog, monkeypatch):
    from heraldcat import optimizer

    def bumpy(ancilla, n, target, search=None, detector=None, **kwargs):
        # above the floor below beta = 2 and again on a narrow band just past it
        beta = target.beta
        fid = 0.995 if beta < 2.0 or 2.03 < beta < 2.05 else 0.98
        return optimizer.OptimizationResult(0.5, 0.9, fid, 1e-3, Regime.FID_OPTIMAL, 1)

    monkeypatch.setattr(optimizer, "maximize_fidelity", bumpy)
    with caplog.at_level(logging.WARNING, logger=optimizer.__name__):
        res = beta_threshold(Ancilla.VACUUM, 6, floor=0.99, resolution=0.05)
    assert res.beta_threshold == pytest.approx(2.0, abs=0.025)
    assert res.fidelity_above >= 0.99
    assert "not monotone" in caplog.text


def test_best_squeezing_matches_grid_scan():
    target = CatTarget(2.0)
    res = best_squeezing(Ancilla.VACUUM, 8, target, 0.8)
    s_axis = np.linspace(0.05, 2.5, 400)
    scan = max(_exact(Ancilla.VACUUM, 8, target, s, 0.8) for s in s_axis)
    assert res.fidelity >= scan - 1e-9
    assert res.t == 0.8


@pytest.mark.slow
def test_photon_31_reaches_floor_at_beta_4_2():
    res = maximize_fidelity(Ancilla.SINGLE_PHOTON, 31, CatTarget(4.2))
    assert res.fidelity >= 0.99
    assert res.n_max >= 320


@pytest.mark.slow
def test_vacuum_30_falls_short_at_beta_3_5():
    assert maximize_fidelity(Ancilla.VACUUM, 30, CatTarget(3.5)).fidelity < 0.99
