"""
Partial stage-2 participation
=============================

When only some subjects reach the second stage, the stage-2 model uses the
participants alone and stage 1 gains a participation column with its own
coefficient ``theta0``. That coefficient has a plain normal prior and is not
subject to selection.
"""

# %%
from baldtr import ChainConfig, DgpConfig, DssConfig, run_chain, simulate, stage_specs, summarize
from baldtr.rand import make_rng

cfg = DgpConfig.from_rho(0.6, k=5, n=120, T=2, participation_rate=0.4, theta0=-1.0)
ds, truth = simulate(make_rng(4), cfg)
s1, s2 = stage_specs(ds.k, ds.T, clinical=True)
print("participants:", ds.n2, "of", ds.n, "  p1 =", s1.p, " p2 =", s2.p)

# %%
chain = run_chain(ds, (s1, s2), DssConfig(),
                  ChainConfig(iterations=3000, burn_in=1500, seed=4, clinical_mode=True))
s = summarize(chain)
print("theta0 posterior mean:", round(float(s.theta1_mean[-1]), 3), " true:", truth.theta0_star)
print("non-participants get no stage-2 arm:", sorted(set(s.a_hat_opt2[~ds.participates2].tolist())))
