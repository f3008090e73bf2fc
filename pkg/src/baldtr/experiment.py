"""Replicated simulation experiments: configuration, per-replicate work, aggregation.

Seed layout. Every random stream is ``SeedSequence(seed, spawn_key=(sid,))``
with ``sid = (scenario_index << 32) | (replicate << 4) | role`` and role 0 for
the dataset, 1 for the DSS chain and 2 for the ISS chain. Both methods are
fit to the same dataset. Results depend only on the configuration, never on
the number of workers or the order in which replicates finish.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .core import stage_specs
from .dgp import DgpConfig, ab_for_rho, simulate
from .dss import DSS, ISS, DssConfig
from .evaluation import regime_metrics, selection_metrics
from .gibbs import ChainConfig, InvalidStateError, run_chain, summarize
from .rand import NumericalError, make_rng
from .serialize import dump_json, load_json, write_csv_rows

log = logging.getLogger(__name__)

METHODS = (DSS, ISS)
ROLE = {"data": 0, DSS: 1, ISS: 2}
STAGES = ("2", "1", "overall")
METRICS = ("FN", "FP", "F1", "MRE", "ER")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    k: int
    n: int
    T: int
    rho: float | None = None
    a_star: float | None = None
    b_star: float | None = None

    def __post_init__(self):
        if self.k < 1 or self.n < 1 or self.T < 2:
            raise ConfigError(f"invalid scenario {self}: need k >= 1, n >= 1, T >= 2")
        if self.a_star is None or self.b_star is None:
            if self.rho is None:
                raise ConfigError("a scenario needs rho or both a_star and b_star")
            try:
                a, b = ab_for_rho(self.rho)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            object.__setattr__(self, "a_star", a)
            object.__setattr__(self, "b_star", b)

    @property
    def label(self):
        tag = f"rho={self.rho:g}" if self.rho is not None else f"a={self.a_star:g},b={self.b_star:g}"
        return f"k={self.k},n={self.n},T={self.T},{tag}"

    def dgp(self):
        return DgpConfig(k=self.k, n=self.n, T=self.T, a_star=self.a_star, b_star=self.b_star)


def default_scenarios(experiment):
    if experiment == 1:
        kn = [(10, 25), (20, 50), (30, 75), (10, 50), (20, 100), (30, 150)]
        return [Scenario(k, n, 2, rho) for k, n in kn for rho in (0.3, 0.6, 0.9)]
    return [Scenario(10, n, T, 0.6) for T in (4, 8) for n in (200, 400)]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: int = 1
    scenarios: tuple = ()
    replicates: int = 20
    methods: tuple = METHODS
    iterations: int = 10_000
    burn_in: int = 5_000
    thin: int = 1
    seed: int = 0
    workers: int = 1
    out: str = "results"

    def __post_init__(self):
        if self.experiment not in (1, 2):
            raise ConfigError("experiment must be 1 or 2")
        scen = tuple(s if isinstance(s, Scenario) else Scenario(**s) for s in self.scenarios)
        object.__setattr__(self, "scenarios", scen or tuple(default_scenarios(self.experiment)))
        if self.experiment == 1 and any(s.T != 2 for s in self.scenarios):
            raise ConfigError("the first experiment uses T = 2")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        methods = tuple(m.upper() for m in self.methods)
        if not methods or any(m not in METHODS for m in methods):
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        object.__setattr__(self, "methods", methods)
        try:
            self.chain_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def chain_config(self, stream_id=0):
        return ChainConfig(iterations=self.iterations, burn_in=self.burn_in, thin=self.thin,
                           seed=self.seed, stream_id=stream_id, store_theta=False)

    def to_dict(self):
        d = asdict(self)
        d["scenarios"] = [asdict(s) for s in self.scenarios]
        d["methods"] = list(self.methods)
        return d

    def fingerprint(self, si):
        """Hash of everything that determines the results of scenario ``si``."""
        d = dict(scenario=asdict(self.scenarios[si]), index=si, experiment=self.experiment,
                 methods=list(self.methods), iterations=self.iterations,
                 burn_in=self.burn_in, thin=self.thin, seed=self.seed)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        d = dict(d)
        if "scenarios" in d:
            d["scenarios"] = tuple(d["scenarios"])
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def stream_id(scenario_index, rep, role):
    if not 0 <= rep < 1 << 28 or role >= 16:
        raise ValueError("replicate or role out of range for the stream layout")
    return (scenario_index << 32) | (rep << 4) | role


def fit_and_score(ds, truth, method, chain_cfg):
    """Fit one method to one dataset and return a flat dict of metrics."""
    shared = 0 if method == ISS else None
    specs = stage_specs(ds.k, ds.T, shared_count=shared)
    dss_cfg = DssConfig(mode=method, shared_count=shared)
    chain = run_chain(ds, specs, dss_cfg, chain_cfg)
    s = summarize(chain)
    sel2 = selection_metrics(s.inclusion_probs2, truth.delta2_star)
    sel1 = selection_metrics(s.inclusion_probs1, truth.delta1_star)
    reg = regime_metrics(s.a_hat_opt1, s.a_hat_opt2, truth)
    acc_a, acc_b = chain.acceptance_rates
    return {
        "2": dict(FN=sel2.fn_rate, FP=sel2.fp_rate, F1=sel2.f1, MRE=reg.mre_stage2, ER=reg.er_stage2),
        "1": dict(FN=sel1.fn_rate, FP=sel1.fp_rate, F1=sel1.f1, MRE=reg.mre_stage1, ER=reg.er_stage1),
        "overall": dict(FN=None, FP=None, F1=None, MRE=reg.mre_overall, ER=reg.er_overall),
        "mre_skipped": list(reg.mre_skipped),
        "accept_a": acc_a, "accept_b": acc_b,
    }


def run_replicate(cfg: ExperimentConfig, si: int, rep: int):
    """Simulate one dataset and fit every configured method to it."""
    scen = cfg.scenarios[si]
    rng = make_rng(cfg.seed, stream_id(si, rep, ROLE["data"]))
    ds, truth = simulate(rng, scen.dgp())
    result = dict(scenario=scen.label, scenario_index=si, replicate=rep,
                  fingerprint=cfg.fingerprint(si), methods={})
    for m in cfg.methods:
        try:
            scores = fit_and_score(ds, truth, m, cfg.chain_config(stream_id(si, rep, ROLE[m])))
            result["methods"][m] = dict(status="ok", **scores)
        except (NumericalError, InvalidStateError) as exc:
            result["methods"][m] = dict(status="failed", error=str(exc))
    return result


def replicate_path(out, si, rep):
    return os.path.join(out, "replicates", f"s{si:03d}_r{rep:04d}.json")


def _work(args):
    cfg, si, rep = args
    res = run_replicate(cfg, si, rep)
    dump_json(res, replicate_path(cfg.out, si, rep))
    return si, rep


def _load_done(cfg, si, rep):
    path = replicate_path(cfg.out, si, rep)
    if not os.path.exists(path):
        return None
    try:
        res = load_json(path)
    except (OSError, ValueError):
        return None
    return res if res.get("fingerprint") == cfg.fingerprint(si) else None


def run_experiment(cfg: ExperimentConfig):
    """Run every (scenario, replicate), resuming from finished replicate files.

    Returns ``(results, summary)`` where ``results`` is ordered by scenario
    then replicate.
    """
    jobs = [(si, rep) for si in range(len(cfg.scenarios)) for rep in range(cfg.replicates)]
    todo = [(cfg, si, rep) for si, rep in jobs if _load_done(cfg, si, rep) is None]
    log.info("%d of %d replicates to run", len(todo), len(jobs))
    if cfg.workers == 1 or len(todo) <= 1:
        for job in todo:
            _work(job)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for si, rep in pool.map(_work, todo, chunksize=1):
                log.info("finished scenario %d replicate %d", si, rep)
    results = [load_json(replicate_path(cfg.out, si, rep)) for si, rep in jobs]
    summary = write_outputs(cfg, results)
    return results, summary


def aggregate(cfg: ExperimentConfig, results):
    """Mean and SD rows per (scenario, method, stage) over successful replicates."""
    mean_rows, sd_rows = [], []
    for si, scen in enumerate(cfg.scenarios):
        mine = [r for r in results if r["scenario_index"] == si]
        for m in cfg.methods:
            ok = [r["methods"][m] for r in mine if r["methods"][m]["status"] == "ok"]
            failed = len(mine) - len(ok)
            for stage in STAGES:
                means, sds = [], []
                for metric in METRICS:
                    vals = [o[stage][metric] for o in ok if o[stage][metric] is not None]
                    vals = np.asarray(vals, dtype=float)
                    vals = vals[~np.isnan(vals)]
                    means.append(_fmt(vals.mean()) if vals.size else "")
                    sds.append(_fmt(vals.std(ddof=1)) if vals.size > 1 else "")
                head = [scen.label, scen.k, scen.n, scen.T, m, stage]
                mean_rows.append(head + means + [len(ok), failed])
                sd_rows.append(head + sds + [len(ok), failed])
    return mean_rows, sd_rows


def _fmt(x):
    return repr(float(x))


AGG_HEADER = ["scenario", "k", "n", "T", "method", "stage", *METRICS, "replicates", "failed"]
RAW_HEADER = ["scenario", "replicate", "method", "stage", "status", *METRICS]


def raw_rows(results):
    rows = []
    for r in results:
        for m, o in r["methods"].items():
            if o["status"] != "ok":
                rows.append([r["scenario"], r["replicate"], m, "", "failed"] + [""] * len(METRICS))
                continue
            for stage in STAGES:
                vals = ["" if o[stage][k] is None else _fmt(o[stage][k]) for k in METRICS]
                rows.append([r["scenario"], r["replicate"], m, stage, "ok"] + vals)
    return rows


def write_outputs(cfg: ExperimentConfig, results):
    mean_rows, sd_rows = aggregate(cfg, results)
    write_csv_rows(os.path.join(cfg.out, "metrics.csv"), AGG_HEADER, mean_rows)
    write_csv_rows(os.path.join(cfg.out, "metrics_sd.csv"), AGG_HEADER, sd_rows)
    write_csv_rows(os.path.join(cfg.out, "replicates.csv"), RAW_HEADER, raw_rows(results))
    n_fail = sum(o["status"] != "ok" for r in results for o in r["methods"].values())
    n_fit = sum(len(r["methods"]) for r in results)
    summary = dict(config=cfg.to_dict(), fits=n_fit, failed_fits=n_fail,
                   all_failed=n_fit > 0 and n_fail == n_fit)
    cfg_dump = dict(summary)
    cfg_dump["config"] = {k: v for k, v in cfg.to_dict().items() if k not in ("workers", "out")}
    dump_json(cfg_dump, os.path.join(cfg.out, "experiment.json"))
    return summary


def with_overrides(cfg: ExperimentConfig, **kw):
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **kw) if kw else cfg
