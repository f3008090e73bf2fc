"""
Fitting DSS and ISS to one dataset
==================================

Both priors are run on the same simulated dataset. Selection uses the
median probability model (inclusion probability above one half) and the
estimated regime takes the most frequent optimal arm per subject.
"""

# %%
from baldtr import (ChainConfig, DgpConfig, DssConfig, ISS, regime_metrics, run_chain,
                    selection_metrics, simulate, stage_specs, summarize)
from baldtr.rand import make_rng

ds, truth = simulate(make_rng(2), DgpConfig.from_rho(0.9, k=10, n=50))
chain_cfg = ChainConfig(iterations=4000, burn_in=2000, seed=2)

# %%
for label, dss_cfg, shared in (("DSS", DssConfig(), None), ("ISS", DssConfig(mode=ISS), 0)):
    chain = run_chain(ds, stage_specs(ds.k, ds.T, shared_count=shared), dss_cfg, chain_cfg)
    s = summarize(chain)
    sel2 = selection_metrics(s.inclusion_probs2, truth.delta2_star)
    reg = regime_metrics(s.a_hat_opt1, s.a_hat_opt2, truth)
    print(f"{label}: stage-2 F1 {sel2.f1:.3f}  FN {sel2.fn_rate:.3f}  FP {sel2.fp_rate:.3f}  "
          f"ER2 {reg.er_stage2:.3f}  overall ER {reg.er_overall:.3f}  "
          f"MH acceptance {chain.acceptance_rates[0]:.2f}/{chain.acceptance_rates[1]:.2f}")
