"""Synthetic two-stage data with spike-and-slab ground truth.

Coefficients follow the same hierarchy as the prior: shared ``Beta(a*, b*)``
inclusion probabilities for the first ``p1`` regressors of both stages,
independent ones for the remaining stage-2 regressors, Bernoulli
indicators, and ``N(0, 2)`` slabs against ``N(0, 2e-5)`` spikes.

Covariates are +/-1. The first ``k // 2`` stage-2 covariates flip with a
logistic probability depending on their stage-1 value; the rest carry over
unchanged. Arms are uniform. Stage-2 payoffs are linear in the stage-2
regressors with unit noise; stage-1 payoffs are centred by the expected
optimal stage-2 payoff so that the expected total under the optimal stage-2
arm equals the stage-1 linear predictor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TwoStageDataset, counterfactual_designs, stage_specs

RHO_PRESETS = {
    0.3: (7 / 10, 49 / 30),
    0.6: (1 / 5, 7 / 15),
    0.9: (1 / 30, 7 / 90),
}


def ab_for_rho(rho):
    for key, ab in RHO_PRESETS.items():
        if abs(key - rho) < 1e-9:
            return ab
    raise ValueError(f"no (a*, b*) preset for rho* = {rho}; pass a_star/b_star directly")


@dataclass(frozen=True)
class DgpConfig:
    k: int = 10
    n: int = 25
    T: int = 2
    a_star: float = 1 / 30
    b_star: float = 7 / 90
    slab_var: float = 2.0
    spike_var: float = 2e-5
    noise_var: float = 1.0
    participation_rate: float = 1.0
    theta0: float = 0.0

    def __post_init__(self):
        if self.T < 2:
            raise ValueError("need T >= 2")
        if self.k < 1 or self.n < 1:
            raise ValueError("need k >= 1 and n >= 1")
        if self.a_star <= 0 or self.b_star <= 0:
            raise ValueError("a_star and b_star must be positive")
        if not 0 <= self.participation_rate <= 1:
            raise ValueError("participation_rate must lie in [0, 1]")

    @classmethod
    def from_rho(cls, rho, **kw):
        a, b = ab_for_rho(rho)
        return cls(a_star=a, b_star=b, **kw)

    @property
    def p1(self):
        return self.T * (self.k + 1)

    @property
    def p2(self):
        return (2 * self.T - 1) * (self.k + 1)


@dataclass
class Coefficients:
    theta1: np.ndarray
    theta2: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    theta0: float = 0.0


@dataclass
class DgpTruth:
    """Ground truth for one simulated dataset.

    ``mu2_all[i, s, t]`` is the expected stage-2 payoff of subject ``i`` under
    stage-1 arm ``s`` and stage-2 arm ``t``; ``value1[i, s]`` is the expected
    total payoff under stage-1 arm ``s`` followed by the optimal stage-2 arm.
    """

    theta1_star: np.ndarray
    theta2_star: np.ndarray
    delta1_star: np.ndarray
    delta2_star: np.ndarray
    a_opt_true1: np.ndarray
    a_opt_true2: np.ndarray
    mu2_all: np.ndarray
    value1: np.ndarray
    a1_observed: np.ndarray
    participates2: np.ndarray
    theta0_star: float = 0.0

    @property
    def n(self):
        return self.value1.shape[0]

    @property
    def mu2_obs(self):
        """Expected stage-2 payoff given the observed stage-1 arm, per stage-2 arm."""
        return self.mu2_all[np.arange(self.n), self.a1_observed]

    def stage2_payoff(self, a2):
        return self.mu2_obs[np.arange(self.n), a2]

    def stage1_payoff(self, a1):
        """Expected stage-1 payoff under stage-1 arm ``a1`` (centred by the stage-2 optimum)."""
        idx = np.arange(self.n)
        opt2 = np.where(self.participates2, self.mu2_all[idx, a1].max(axis=1), 0.0)
        return self.value1[idx, a1] - opt2

    def overall_payoff(self, a1, a2):
        idx = np.arange(self.n)
        stage2 = np.where(self.participates2, self.mu2_all[idx, a1, np.maximum(a2, 0)], 0.0)
        return self.stage1_payoff(a1) + stage2

    @property
    def E_opt2(self):
        return self.mu2_obs.max(axis=1)

    @property
    def E_opt1(self):
        return self.stage1_payoff(self.a_opt_true1)

    @property
    def E_opt_overall(self):
        return self.value1.max(axis=1)

    def to_dict(self):
        return dict(
            theta1_star=self.theta1_star.tolist(), theta2_star=self.theta2_star.tolist(),
            delta1_star=self.delta1_star.astype(int).tolist(),
            delta2_star=self.delta2_star.astype(int).tolist(),
            a_opt_true1=self.a_opt_true1.astype(int).tolist(),
            a_opt_true2=self.a_opt_true2.astype(int).tolist(),
            mu2_all=self.mu2_all.tolist(), value1=self.value1.tolist(),
            a1_observed=self.a1_observed.astype(int).tolist(),
            participates2=self.participates2.astype(int).tolist(),
            theta0_star=float(self.theta0_star),
            E_opt1=self.E_opt1.tolist(), E_opt2=self.E_opt2.tolist(),
            E_opt_overall=self.E_opt_overall.tolist(),
            p1=int(self.theta1_star.size), p2=int(self.theta2_star.size),
        )

    @classmethod
    def from_dict(cls, d):
        return cls(theta1_star=np.asarray(d["theta1_star"]), theta2_star=np.asarray(d["theta2_star"]),
                   delta1_star=np.asarray(d["delta1_star"], dtype=np.int8),
                   delta2_star=np.asarray(d["delta2_star"], dtype=np.int8),
                   a_opt_true1=np.asarray(d["a_opt_true1"], dtype=np.int64),
                   a_opt_true2=np.asarray(d["a_opt_true2"], dtype=np.int64),
                   mu2_all=np.asarray(d["mu2_all"], dtype=float),
                   value1=np.asarray(d["value1"], dtype=float),
                   a1_observed=np.asarray(d["a1_observed"], dtype=np.int64),
                   participates2=np.asarray(d["participates2"], dtype=bool),
                   theta0_star=float(d.get("theta0_star", 0.0)))


def simulate_coefficients(rng, cfg: DgpConfig) -> Coefficients:
    p1, p2 = cfg.p1, cfg.p2
    w_shared = rng.beta(cfg.a_star, cfg.b_star, size=p1)
    w_own = rng.beta(cfg.a_star, cfg.b_star, size=p2 - p1)
    w1 = w_shared
    w2 = np.concatenate([w_shared, w_own])
    d1 = (rng.random(p1) < w1).astype(np.int8)
    d2 = (rng.random(p2) < w2).astype(np.int8)
    sd1 = np.sqrt(np.where(d1 == 1, cfg.slab_var, cfg.spike_var))
    sd2 = np.sqrt(np.where(d2 == 1, cfg.slab_var, cfg.spike_var))
    return Coefficients(theta1=sd1 * rng.standard_normal(p1), theta2=sd2 * rng.standard_normal(p2),
                        delta1=d1, delta2=d2, w1=w1, w2=w2, theta0=cfg.theta0)


def simulate_covariates(rng, n, k):
    """Stage-1 and stage-2 covariate matrices with the leading column of ones."""
    z1 = np.where(rng.random((n, k)) < 0.5, -1.0, 1.0)
    z2 = z1.copy()
    h = k // 2
    p_plus = 1.0 / (1.0 + np.exp(z1[:, :h]))
    z2[:, :h] = np.where(rng.random((n, h)) < p_plus, 1.0, -1.0)
    ones = np.ones((n, 1))
    return np.hstack([ones, z1]), np.hstack([ones, z2])


def _arm_tables(coef: Coefficients, z1, z2, T, participates2):
    """``mu2_all`` (n, T, T) and ``value1`` (n, T) for given covariates."""
    n, kp1 = z1.shape
    k = kp1 - 1
    s1, s2 = stage_specs(k, T)
    mu2_all = np.empty((n, T, T))
    for s in range(T):
        tmp = TwoStageDataset(T=T, z1=z1, z2=z2, a1=np.full(n, s), a2=np.zeros(n, dtype=int),
                              y1=np.zeros(n), y2=np.zeros(n))
        mu2_all[:, s, :] = counterfactual_designs(tmp, s2) @ coef.theta2
    mu2_all[~participates2] = 0.0
    tmp = TwoStageDataset(T=T, z1=z1, z2=z2, a1=np.zeros(n, dtype=int), a2=np.zeros(n, dtype=int),
                          y1=np.zeros(n), y2=np.zeros(n))
    value1 = counterfactual_designs(tmp, s1) @ coef.theta1 + coef.theta0 * participates2[:, None]
    return mu2_all, value1


def simulate_dataset(rng, cfg: DgpConfig, coef: Coefficients):
    """Covariates, uniform arms and payoffs for ``cfg.n`` subjects; returns ``(dataset, truth)``."""
    n, T = cfg.n, cfg.T
    z1, z2 = simulate_covariates(rng, n, cfg.k)
    a1 = rng.integers(0, T, size=n)
    a2 = rng.integers(0, T, size=n)
    if cfg.participation_rate < 1:
        part = rng.random(n) < cfg.participation_rate
    else:
        part = np.ones(n, dtype=bool)
    mu2_all, value1 = _arm_tables(coef, z1, z2, T, part)
    idx = np.arange(n)
    mu2 = mu2_all[idx, a1, a2]
    e_opt2 = mu2_all[idx, a1].max(axis=1)
    sd = np.sqrt(cfg.noise_var)
    y2 = np.where(part, mu2 + sd * rng.standard_normal(n), 0.0)
    y1 = value1[idx, a1] - np.where(part, e_opt2, 0.0) + sd * rng.standard_normal(n)
    a2 = np.where(part, a2, 0)
    ds = TwoStageDataset(T=T, z1=z1, z2=z2, a1=a1, a2=a2, y1=y1, y2=y2, participates2=part)
    return ds, true_optima(coef, ds)


def simulate_dataset_exp1(rng, cfg: DgpConfig, coef: Coefficients):
    if cfg.T != 2:
        raise ValueError("the first experiment uses binary treatments (T = 2)")
    return simulate_dataset(rng, cfg, coef)


def simulate_dataset_exp2(rng, cfg: DgpConfig, coef: Coefficients):
    return simulate_dataset(rng, cfg, coef)


def simulate(rng, cfg: DgpConfig):
    """Fresh coefficients and a dataset drawn from them."""
    coef = simulate_coefficients(rng, cfg)
    return simulate_dataset(rng, cfg, coef)


def true_optima(coef: Coefficients, ds: TwoStageDataset) -> DgpTruth:
    """Ground-truth optimal arms and expected-payoff tables for ``ds``.

    Stage 2 maximizes the expected stage-2 payoff with the observed stage-1
    arm fixed; stage 1 maximizes the expected total payoff assuming the
    optimal stage-2 arm follows. Ties go to the lowest arm.
    """
    mu2_all, value1 = _arm_tables(coef, ds.z1, ds.z2, ds.T, ds.participates2)
    idx = np.arange(ds.n)
    a_opt2 = np.where(ds.participates2, np.argmax(mu2_all[idx, ds.a1], axis=1), -1)
    a_opt1 = np.argmax(value1, axis=1)
    return DgpTruth(theta1_star=coef.theta1, theta2_star=coef.theta2,
                    delta1_star=coef.delta1, delta2_star=coef.delta2,
                    a_opt_true1=a_opt1, a_opt_true2=a_opt2, mu2_all=mu2_all, value1=value1,
                    a1_observed=ds.a1.copy(), participates2=ds.participates2.copy(),
                    theta0_star=coef.theta0)
