"""
LPML and BIC for nested models
==============================

A covariate with real effects in both stages is removed from the data and
the model is refit. Both criteria should prefer the model that keeps it:
higher LPML and lower BIC.
"""

# %%
import numpy as np

from baldtr import ChainConfig, DgpConfig, DssConfig, bic, lpml, run_chain, stage_specs
from baldtr.dgp import Coefficients, simulate_dataset
from baldtr.rand import make_rng

k, T = 3, 2
s1, s2 = stage_specs(k, T)
th1, th2 = np.zeros(s1.p), np.zeros(s2.p)
th1[[1, k + 1, k + 2]] = [1.0, 0.5, 1.0]
th2[[1, 2 * k + 2, 2 * k + 3]] = [1.0, 0.5, 1.0]
coef = Coefficients(theta1=th1, theta2=th2, delta1=(th1 != 0).astype(np.int8),
                    delta2=(th2 != 0).astype(np.int8), w1=np.zeros(s1.p), w2=np.zeros(s2.p))
ds, _ = simulate_dataset(make_rng(3), DgpConfig(k=k, T=T, n=100), coef)

# %%
for label, data in (("full", ds), ("without z_1", ds.drop_covariates([1]))):
    specs = stage_specs(data.k, T)
    chain = run_chain(data, specs, DssConfig(), ChainConfig(iterations=3000, burn_in=1500, seed=3))
    l1, l2 = lpml(chain)
    b1, b2 = bic(chain, data, specs)
    print(f"{label:12s} LPML {l1:8.1f} {l2:8.1f}   BIC {b1:8.1f} {b2:8.1f}")
