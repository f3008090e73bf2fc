import itertools

import numpy as np
import pytest

from baldtr.core import build_regressor_vector, dummy_encode
from baldtr.dgp import (Coefficients, DgpConfig, DgpTruth, ab_for_rho, simulate, simulate_coefficients,
                        simulate_covariates, simulate_dataset, simulate_dataset_exp1)
from baldtr.rand import make_rng


@pytest.mark.parametrize("k,T,p1,p2", [(10, 2, 22, 33), (20, 2, 42, 63), (30, 2, 62, 93),
                                       (10, 4, 44, 77), (10, 8, 88, 165)])
def test_dimensions(k, T, p1, p2):
    cfg = DgpConfig(k=k, T=T)
    assert (cfg.p1, cfg.p2) == (p1, p2)
    coef = simulate_coefficients(make_rng(0), cfg)
    assert coef.theta1.size == p1 and coef.theta2.size == p2


def test_rho_presets_and_unknown():
    assert ab_for_rho(0.6) == (1 / 5, 7 / 15)
    with pytest.raises(ValueError):
        ab_for_rho(0.5)


def test_large_a_gives_all_active():
    coef = simulate_coefficients(make_rng(1), DgpConfig(a_star=1e6, b_star=1.0))
    assert np.all(coef.delta1 == 1) and np.all(coef.delta2 == 1)


def test_shared_probabilities_and_correlation():
    cfg = DgpConfig.from_rho(0.6, k=10)
    d1, d2 = [], []
    rng = make_rng(2)
    for _ in range(50_000):
        c = simulate_coefficients(rng, cfg)
        assert np.array_equal(c.w1, c.w2[:cfg.p1])
        d1.append(c.delta1)
        d2.append(c.delta2[:cfg.p1])
    d1, d2 = np.concatenate(d1), np.concatenate(d2)  # 1.1e6 shared pairs
    assert abs(np.corrcoef(d1, d2)[0, 1] - 0.6) < 0.01


def test_spike_magnitude():
    rng = make_rng(3)
    small = []
    for _ in range(3000):
        c = simulate_coefficients(rng, DgpConfig.from_rho(0.3))
        small.append(np.abs(c.theta2[c.delta2 == 0]))
    small = np.concatenate(small)
    assert (small < 0.02).mean() > 0.999


def test_covariate_transition():
    z1, z2 = simulate_covariates(make_rng(4), 10**6 // 5, 10)
    h = 5
    assert np.array_equal(z1[:, 1 + h:], z2[:, 1 + h:])
    plus = z1[:, 1:1 + h] == 1
    frac = (z2[:, 1:1 + h][plus] == 1).mean()
    assert abs(frac - 1 / (1 + np.e)) < 0.002
    assert abs(frac - 0.2689) < 0.002


def test_zero_coefficients_give_noise():
    cfg = DgpConfig(k=3, n=20000)
    p1, p2 = cfg.p1, cfg.p2
    coef = Coefficients(np.zeros(p1), np.zeros(p2), np.zeros(p1, np.int8), np.zeros(p2, np.int8),
                        np.zeros(p1), np.zeros(p2))
    ds, truth = simulate_dataset(make_rng(5), cfg, coef)
    for y in (ds.y1, ds.y2):
        assert abs(y.mean()) < 0.03 and abs(y.var() - 1) < 0.04
    assert np.all(truth.a_opt_true1 == 0) and np.all(truth.a_opt_true2 == 0)


def test_total_payoff_centering():
    cfg = DgpConfig(k=2, n=1, T=2)
    coef = simulate_coefficients(make_rng(6), cfg)
    ds0, truth0 = simulate_dataset(make_rng(7), cfg, coef)
    z1, a1 = ds0.z1, ds0.a1
    R = 10**5
    rng = make_rng(8)
    mu2 = truth0.mu2_all[0, a1[0]]
    e_opt2 = mu2.max()
    lin1 = coef.theta1 @ build_regressor_vector(z1[0], [dummy_encode(a1[0], 2)])
    y1 = lin1 - e_opt2 + rng.standard_normal(R)
    y2opt = e_opt2 + rng.standard_normal(R)
    assert abs((y1 + y2opt).mean() - lin1) < 4 * np.sqrt(2 / R)
    assert truth0.value1[0, a1[0]] == pytest.approx(lin1)


def test_exp1_requires_binary():
    cfg = DgpConfig(T=4)
    with pytest.raises(ValueError):
        simulate_dataset_exp1(make_rng(0), cfg, simulate_coefficients(make_rng(0), cfg))


def test_positive_dummy_gives_arm_one():
    cfg = DgpConfig(k=2, n=30, T=2)
    theta2 = np.zeros(cfg.p2)
    theta2[2 * (cfg.k + 1)] = 1.0  # stage-2 arm dummy
    coef = Coefficients(np.zeros(cfg.p1), theta2, np.zeros(cfg.p1, np.int8), np.zeros(cfg.p2, np.int8),
                        np.zeros(cfg.p1), np.zeros(cfg.p2))
    _, truth = simulate_dataset(make_rng(9), cfg, coef)
    assert np.all(truth.a_opt_true2 == 1)


def test_argmax_shift_invariance():
    ds, truth = simulate(make_rng(10), DgpConfig(k=4, n=40, T=4))
    shifted = DgpTruth(**{**truth.__dict__, "mu2_all": truth.mu2_all + 7.5})
    idx = np.arange(ds.n)
    assert np.array_equal(np.argmax(shifted.mu2_obs, axis=1), truth.a_opt_true2)
    assert np.array_equal(np.argmax(truth.mu2_all[idx, ds.a1], axis=1), truth.a_opt_true2)


def _brute_force(coef, ds):
    """Exhaustive search over all T^2 arm pairs on expected payoffs (independent of the package tables)."""
    T = ds.T
    best1, best2 = [], []
    for i in range(ds.n):
        def mu2(s, t):
            return coef.theta2 @ build_regressor_vector(ds.z2[i], [dummy_encode(s, T), dummy_encode(t, T)])

        def lin1(s):
            return coef.theta1 @ build_regressor_vector(ds.z1[i], [dummy_encode(s, T)])

        # total expected payoff of (s, t): lin1(s) - max_u mu2(s, u) + mu2(s, t)
        totals = {(s, t): lin1(s) - max(mu2(s, u) for u in range(T)) + mu2(s, t)
                  for s, t in itertools.product(range(T), repeat=2)}
        best = max(totals.values())
        s_opt = min(s for (s, t), v in totals.items() if np.isclose(v, best))
        best1.append(s_opt)
        obs = [mu2(ds.a1[i], t) for t in range(T)]
        best2.append(int(np.argmax(obs)))
    return np.array(best1), np.array(best2)


@pytest.mark.parametrize("T", [2, 4])
def test_brute_force_optima(T):
    cfg = DgpConfig(k=3, n=3, T=T)
    for seed in range(5):
        coef = simulate_coefficients(make_rng(seed, 1), cfg)
        ds, truth = simulate_dataset(make_rng(seed, 2), cfg, coef)
        b1, b2 = _brute_force(coef, ds)
        assert np.array_equal(truth.a_opt_true1, b1)
        assert np.array_equal(truth.a_opt_true2, b2)


def test_simulate_is_deterministic():
    cfg = DgpConfig(k=3, n=20, T=2)
    a = simulate(make_rng(11), cfg)[0]
    b = simulate(make_rng(11), cfg)[0]
    assert np.array_equal(a.y1, b.y1) and np.array_equal(a.z2, b.z2)


def test_participation_and_truth_round_trip():
    ds, truth = simulate(make_rng(12), DgpConfig(k=3, n=200, T=3, participation_rate=0.4))
    part = ds.participates2
    assert 0.3 < part.mean() < 0.5
    assert np.all(truth.a_opt_true2[~part] == -1)
    assert np.all(ds.y2[~part] == 0)
    back = DgpTruth.from_dict(truth.to_dict())
    for f in ("theta1_star", "delta2_star", "a_opt_true1", "a_opt_true2", "mu2_all", "value1"):
        assert np.array_equal(getattr(back, f), getattr(truth, f))


def test_config_validation():
    with pytest.raises(ValueError):
        DgpConfig(T=1)
    with pytest.raises(ValueError):
        DgpConfig(participation_rate=1.5)
