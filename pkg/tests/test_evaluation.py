import math

import numpy as np
import pytest

from baldtr import evaluation as ev
from baldtr.core import stage_designs, stage_specs
from baldtr.dgp import Coefficients, DgpConfig, DgpTruth, simulate, simulate_dataset
from baldtr.gibbs import ChainConfig, ChainOutput, InvalidStateError, run_chain, summarize
from baldtr.rand import make_rng


def test_selection_perfect():
    s = ev.selection_metrics([0.9, 0.1, 0.8], [1, 0, 1])
    assert (s.fn_rate, s.fp_rate, s.f1) == (0.0, 0.0, 1.0)


def test_selection_hand_count():
    s = ev.selection_metrics([0.9, 0.2, 0.6], [1, 0, 0])
    assert s.fn_rate == 0 and s.fp_rate == 0.5
    assert s.precision == 0.5 and s.recall == 1.0
    assert s.f1 == pytest.approx(2 / 3)


def test_selection_threshold_is_strict():
    s = ev.selection_metrics([0.5], [1])
    assert s.fn_rate == 1.0 and s.f1 == 0.0


def test_selection_empty_positive_and_mismatch():
    s = ev.selection_metrics([0.1, 0.7], [0, 0])
    assert s.empty_positive and s.fn_rate == 0 and s.fp_rate == 0.5
    with pytest.raises(ValueError):
        ev.selection_metrics([0.1], [0, 1])


def _truth(mu2_all, value1, a1_obs, part=None):
    n = value1.shape[0]
    part = np.ones(n, dtype=bool) if part is None else part
    idx = np.arange(n)
    a2 = np.where(part, np.argmax(mu2_all[idx, a1_obs], axis=1), -1)
    return DgpTruth(theta1_star=np.zeros(2), theta2_star=np.zeros(3), delta1_star=np.zeros(2, np.int8),
                    delta2_star=np.zeros(3, np.int8), a_opt_true1=np.argmax(value1, axis=1),
                    a_opt_true2=a2, mu2_all=mu2_all, value1=value1, a1_observed=a1_obs,
                    participates2=part)


# three subjects, two arms; mu2_all[i, s, t] and value1[i, s]
MU2 = np.array([[[1.0, 2.0], [0.5, 4.0]],
                [[3.0, 1.0], [2.0, 2.5]],
                [[-1.0, -2.0], [1.0, 0.0]]])
VALUE1 = np.array([[5.0, 3.0], [1.0, 2.0], [4.0, -1.0]])
A1_OBS = np.array([0, 1, 0])


def test_regime_perfect():
    t = _truth(MU2, VALUE1, A1_OBS)
    r = ev.regime_metrics(t.a_opt_true1, t.a_opt_true2, t)
    assert (r.er_stage1, r.er_stage2, r.er_overall) == (0, 0, 0)
    assert (r.mre_stage1, r.mre_stage2, r.mre_overall) == (0, 0, 0)


def test_regime_hand_table():
    t = _truth(MU2, VALUE1, A1_OBS)
    assert np.array_equal(t.a_opt_true1, [0, 1, 0])
    assert np.array_equal(t.a_opt_true2, [1, 1, 0])
    a1 = np.array([1, 1, 0])   # subject 0 wrong at stage 1
    a2 = np.array([1, 0, 0])   # subject 1 wrong at stage 2
    r = ev.regime_metrics(a1, a2, t)
    assert r.er_stage1 == pytest.approx(1 / 3)
    assert r.er_stage2 == pytest.approx(1 / 3)
    assert r.er_overall == pytest.approx(2 / 3)
    # stage 2 (observed a1): opt (2, 2.5, -1), estimated (2, 2, -1)
    assert r.mre_stage2 == pytest.approx((0 + 0.5 / 2.5 + 0) / 3)
    # stage 1 payoffs value1 - max_t mu2: opt (5-2, 2-2.5, 4-(-1)) = (3, -0.5, 5); est (3-4, -0.5, 5)
    assert r.mre_stage1 == pytest.approx((4 / 3 + 0 + 0) / 3)
    # overall: opt (5, 2, 4); est: s0 (3-4)+4 = 3, s1 (-0.5)+2 = 1.5, s2 5+(-1) = 4
    assert r.mre_overall == pytest.approx((2 / 5 + 0.5 / 2 + 0) / 3)
    assert r.er_overall >= max(r.er_stage1, r.er_stage2)


def test_regime_two_subjects_stage2_error():
    mu2 = np.array([[[0.0, 1.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 1.0]]])
    t = _truth(mu2, np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([0, 0]))
    r = ev.regime_metrics([0, 0], [1, 0], t)
    assert r.er_stage2 == 0.5 and r.er_overall == 0.5 and r.er_stage1 == 0


def test_mre_skips_zero_denominators():
    mu2 = np.array([[[0.0, 0.0], [0.0, 0.0]], [[1.0, 2.0], [1.0, 2.0]]])
    t = _truth(mu2, np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([0, 0]))
    r = ev.regime_metrics([0, 0], [1, 0], t)
    assert r.mre_skipped[1] == 1
    assert r.mre_stage2 == pytest.approx(0.5)


def test_regime_non_participants_ignored_at_stage2():
    part = np.array([True, False, True])
    mu2 = MU2.copy()
    mu2[~part] = 0.0
    t = _truth(mu2, VALUE1, A1_OBS, part)
    r = ev.regime_metrics(t.a_opt_true1, np.array([1, -1, 0]), t)
    assert r.er_stage2 == 0 and r.er_overall == 0


def _chain_with_loglik(ll1, ll2=None):
    S, n = ll1.shape
    ll2 = np.zeros_like(ll1) if ll2 is None else ll2
    z = np.zeros(S)
    return ChainOutput(iters=np.arange(S), delta1=np.zeros((S, 1)), delta2=np.zeros((S, 1)),
                       aopt1=np.zeros((S, n), np.int16), aopt2=np.zeros((S, n), np.int16),
                       loglik1=ll1, loglik2=ll2, sigma1_sq=z + 1, sigma2_sq=z + 1, a=z, b=z,
                       theta1=None, theta2=None, yopt_mean=np.zeros(n),
                       participates2=np.ones(n, bool), T=2)


def test_lpml_examples():
    L = 0.3
    ch = _chain_with_loglik(np.full((7, 4), math.log(L)))
    assert ev.lpml(ch)[0] == pytest.approx(4 * math.log(L))
    ch = _chain_with_loglik(np.log(np.array([[1.0], [3.0]])))
    assert ev.lpml(ch)[0] == pytest.approx(math.log(1.5))
    g = np.random.default_rng(0)
    ll = g.normal(-1, 0.5, (50, 6))
    a = ev.lpml(_chain_with_loglik(ll))[0]
    b = ev.lpml(_chain_with_loglik(ll[g.permutation(50)]))[0]
    assert a == pytest.approx(b, rel=1e-13)
    # harmonic-mean bound
    assert np.all(ev.log_cpo(ll) <= ll.max(axis=0) + 1e-12)


def test_lpml_empty_chain():
    with pytest.raises(InvalidStateError):
        ev.lpml(_chain_with_loglik(np.zeros((0, 3))))


def test_gaussian_bic_saturated():
    sigma_sq = 0.7
    want = 2 * math.log(10) + 10 * math.log(2 * math.pi * sigma_sq)
    assert ev.gaussian_bic(np.zeros(10), sigma_sq, 2) == pytest.approx(want)


def _fit(ds, iters=1500):
    return run_chain(ds, chain_cfg=ChainConfig(iterations=iters, burn_in=iters // 2, seed=3))


def test_bic_ignores_unselected_regressor():
    ds, _ = simulate(make_rng(1), DgpConfig(k=2, n=60, T=2))
    ch = _fit(ds)
    specs = stage_specs(ds.k, ds.T)
    b = ev.bic(ch, ds, specs)
    # perturb an unselected coefficient's draws: BIC must not move
    probs = ch.delta2.mean(axis=0)
    off = np.flatnonzero(probs <= 0.5)
    assert off.size
    ch.theta2[:, off[0]] += 100.0
    assert ev.bic(ch, ds, specs) == b


def test_bic_prefers_active_regressor_on_strong_signal():
    cfg = DgpConfig(k=2, n=100, T=2)
    theta1 = np.zeros(cfg.p1)
    theta2 = np.zeros(cfg.p2)
    theta1[0], theta2[0], theta2[1] = 1.0, 2.0, 3.0
    coef = Coefficients(theta1, theta2, (theta1 != 0).astype(np.int8), (theta2 != 0).astype(np.int8),
                        np.zeros(cfg.p1), np.zeros(cfg.p2))
    ds, _ = simulate_dataset(make_rng(2), cfg, coef)
    ch = _fit(ds)
    s = summarize(ch)
    specs = stage_specs(ds.k, ds.T)
    # nested plug-in fits with and without stage-2 regressor 1
    _, X2, _ = stage_designs(ds, *specs)
    sel = s.inclusion_probs2 > 0.5
    assert sel[1]
    th = np.where(sel, s.theta2_mean, 0.0)
    full = ev.gaussian_bic(ds.y2 - X2 @ th, s.sigma2_sq_mean, sel.sum() + 1)
    th_drop = th.copy()
    th_drop[1] = 0.0
    drop = ev.gaussian_bic(ds.y2 - X2 @ th_drop, s.sigma2_sq_mean, sel.sum())
    assert full < drop
    assert ev.bic(ch, ds, specs)[1] == pytest.approx(full)


def test_bic_needs_theta():
    ds, _ = simulate(make_rng(1), DgpConfig(k=2, n=20, T=2))
    ch = run_chain(ds, chain_cfg=ChainConfig(iterations=20, burn_in=10, store_theta=False))
    with pytest.raises(InvalidStateError):
        ev.bic(ch, ds, stage_specs(2, 2))
