"""
A replicated simulation study
=============================

``run_experiment`` simulates one dataset per replicate, fits each method to
it and aggregates the metrics per scenario. Every replicate has its own
random streams, so results do not depend on the number of workers, and
finished replicates are reused when a run is restarted.
"""

# %%
import csv
import tempfile

from baldtr import ExperimentConfig, Scenario, run_experiment

out = tempfile.mkdtemp()
cfg = ExperimentConfig(scenarios=(Scenario(10, 25, 2, 0.9),), replicates=4,
                       iterations=2000, burn_in=1000, seed=5, out=out)
results, summary = run_experiment(cfg)
print("fits:", summary["fits"], " failed:", summary["failed_fits"])

# %%
with open(f"{out}/metrics.csv") as fh:
    for row in csv.DictReader(fh):
        print(row["method"], row["stage"], "F1", row["F1"][:5], "ER", row["ER"][:5])
