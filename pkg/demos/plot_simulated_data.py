"""
Simulating a two-stage study
============================

The generator draws sparse coefficients from the same hierarchy as the
prior, +/-1 covariates, uniform arms and Gaussian payoffs. It returns the
dataset and the ground truth (true coefficients, indicators and optimal
arms) used for scoring.
"""

# %%
import numpy as np

from baldtr import DgpConfig, simulate, stage_specs
from baldtr.rand import make_rng

cfg = DgpConfig.from_rho(0.9, k=10, n=25, T=2)
ds, truth = simulate(make_rng(1), cfg)
s1, s2 = stage_specs(cfg.k, cfg.T)
print("regressors per stage:", s1.p, s2.p)
print("active regressors:", truth.delta1_star.sum(), truth.delta2_star.sum())

# %%
# Shared regressors tend to be active in both stages at once when rho* is large.
both = truth.delta1_star & truth.delta2_star[: s1.p]
print("active in both stages:", int(both.sum()))

# %%
# Ground-truth optimal arms and how often the observed arm was already optimal.
print("stage-2 optimal arm counts:", np.bincount(truth.a_opt_true2, minlength=cfg.T))
print("observed stage-2 arm optimal:", np.mean(ds.a2 == truth.a_opt_true2))
