"""Command line: ``generate``, ``fit``, ``evaluate`` and ``experiment``.

Exit codes: 0 on success, 2 for configuration errors, 3 when every chain
failed numerically (a single ``fit`` counts as all of them).

Experiment config file (JSON)::

    {"experiment": 1, "replicates": 20, "methods": ["DSS", "ISS"],
     "iterations": 10000, "burn_in": 5000, "thin": 1, "seed": 0,
     "workers": 4, "out": "results",
     "scenarios": [{"k": 10, "n": 25, "T": 2, "rho": 0.9},
                   {"k": 10, "n": 25, "T": 2, "a_star": 0.2, "b_star": 0.5}]}

Every key is optional. Flags override the file; ``--k``, ``--n``, ``--arms``
and ``--rho`` take comma-separated lists and replace the scenario grid by
their Cartesian product.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys

from .core import read_dataset_csv, stage_specs, write_dataset_csv
from .dgp import DgpConfig, DgpTruth, ab_for_rho, simulate
from .dss import DSS, ISS, DssConfig
from .evaluation import bic, lpml, regime_metrics, selection_metrics
from .experiment import (METRICS, ConfigError, ExperimentConfig, Scenario,
                         run_experiment, with_overrides)
from .gibbs import ChainConfig, InvalidStateError, run_chain, summarize
from .rand import NumericalError, make_rng
from .serialize import dump_json, load_json, read_chain, write_chain, write_csv_rows

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("baldtr")


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated {kind.__name__} values") from None
    return parse


def _method(text):
    m = text.upper()
    if m not in (DSS, ISS):
        raise argparse.ArgumentTypeError("method must be DSS or ISS")
    return m


def build_parser():
    p = argparse.ArgumentParser(prog="baldtr", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a dataset and its ground truth")
    g.add_argument("--experiment", type=int, choices=(1, 2), default=1)
    g.add_argument("--k", type=int, default=10)
    g.add_argument("--n", type=int, default=25)
    g.add_argument("--arms", type=int, default=None, help="number of arms T (default 2, or 4 for experiment 2)")
    g.add_argument("--rho", type=float, default=None, help="0.3, 0.6 or 0.9 (default 0.9, or 0.6 for experiment 2)")
    g.add_argument("--participation", type=float, default=1.0, help="stage-2 participation rate")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".")

    f = sub.add_parser("fit", help="run the Gibbs sampler on a dataset CSV")
    f.add_argument("--data", required=True)
    f.add_argument("--method", type=_method, default=DSS)
    f.add_argument("--iters", type=int, default=10_000)
    f.add_argument("--burnin", type=int, default=5_000)
    f.add_argument("--thin", type=int, default=1)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--clinical", action="store_true", help="add the participation column to stage 1")
    f.add_argument("--no-theta", action="store_true", help="do not store coefficient draws")
    f.add_argument("--out", default=".")

    e = sub.add_parser("evaluate", help="score a fitted chain against truth.json")
    e.add_argument("--chain", required=True, help="chain CSV (JSON sidecar alongside)")
    e.add_argument("--truth", required=True)
    e.add_argument("--data", help="dataset CSV; adds LPML and BIC columns")
    e.add_argument("--scenario", default="")
    e.add_argument("--out", default="metrics.csv")

    x = sub.add_parser("experiment", help="replicated simulation study")
    x.add_argument("--config", help="JSON config file")
    x.add_argument("--experiment", type=int, choices=(1, 2))
    x.add_argument("--k", type=_csv_list(int))
    x.add_argument("--n", type=_csv_list(int))
    x.add_argument("--arms", type=_csv_list(int))
    x.add_argument("--rho", type=_csv_list(float))
    x.add_argument("--method", type=_csv_list(_method), help="DSS, ISS or DSS,ISS")
    x.add_argument("--replicates", type=int)
    x.add_argument("--iters", type=int)
    x.add_argument("--burnin", type=int)
    x.add_argument("--thin", type=int)
    x.add_argument("--seed", type=int)
    x.add_argument("--workers", type=int)
    x.add_argument("--out")
    return p


def _defaults(experiment):
    return (dict(k=10, n=25, T=2, rho=0.9) if experiment == 1
            else dict(k=10, n=200, T=4, rho=0.6))


def cmd_generate(args):
    d = _defaults(args.experiment)
    T = args.arms if args.arms is not None else d["T"]
    rho = args.rho if args.rho is not None else d["rho"]
    if args.experiment == 1 and T != 2:
        raise ConfigError("the first experiment uses T = 2")
    try:
        a, b = ab_for_rho(rho)
        cfg = DgpConfig(k=args.k, n=args.n, T=T, a_star=a, b_star=b,
                        participation_rate=args.participation)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ds, truth = simulate(make_rng(args.seed, 0), cfg)
    write_dataset_csv(ds, os.path.join(args.out, "dataset.csv"))
    d = truth.to_dict()
    d.update(seed=args.seed, dgp=dict(k=cfg.k, n=cfg.n, T=cfg.T, rho=rho, a_star=a, b_star=b,
                                     participation_rate=cfg.participation_rate))
    dump_json(d, os.path.join(args.out, "truth.json"))
    return EXIT_OK


def cmd_fit(args):
    ds = read_dataset_csv(args.data)
    shared = 0 if args.method == ISS else None
    try:
        specs = stage_specs(ds.k, ds.T, clinical=args.clinical, shared_count=shared)
        chain_cfg = ChainConfig(iterations=args.iters, burn_in=args.burnin, thin=args.thin,
                                seed=args.seed, store_theta=not args.no_theta,
                                clinical_mode=args.clinical)
        dss_cfg = DssConfig(mode=args.method, shared_count=shared)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        chain = run_chain(ds, specs, dss_cfg, chain_cfg)
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    chain.meta["method"] = args.method
    write_chain(chain, os.path.join(args.out, "chain.csv"), os.path.join(args.out, "chain.json"))
    s = summarize(chain).to_dict()
    s.update(method=args.method, acceptance_rates=list(chain.acceptance_rates),
             lpml=list(lpml(chain)))
    if chain.theta1 is not None:
        s["bic"] = list(bic(chain, ds, specs))
    dump_json(s, os.path.join(args.out, "summary.json"))
    return EXIT_OK


def evaluate_rows(chain, truth: DgpTruth, scenario, method, extra=None):
    s = summarize(chain)
    sel2 = selection_metrics(s.inclusion_probs2, truth.delta2_star)
    sel1 = selection_metrics(s.inclusion_probs1, truth.delta1_star)
    reg = regime_metrics(s.a_hat_opt1, s.a_hat_opt2, truth)
    table = [("2", sel2.fn_rate, sel2.fp_rate, sel2.f1, reg.mre_stage2, reg.er_stage2),
             ("1", sel1.fn_rate, sel1.fp_rate, sel1.f1, reg.mre_stage1, reg.er_stage1),
             ("overall", None, None, None, reg.mre_overall, reg.er_overall)]
    rows = []
    for stage, *vals in table:
        row = [scenario, method, stage] + ["" if v is None else repr(float(v)) for v in vals]
        if extra is not None:
            row += extra.get(stage, ["", ""])
        rows.append(row)
    return rows


def cmd_evaluate(args):
    chain = read_chain(args.chain)
    truth = DgpTruth.from_dict(load_json(args.truth))
    if truth.delta1_star.size != chain.delta1.shape[1] or truth.delta2_star.size != chain.delta2.shape[1]:
        raise ConfigError("truth.json dimensions do not match the chain")
    method = chain.meta.get("method", chain.meta.get("dss", {}).get("mode", ""))
    header = ["scenario", "method", "stage", *METRICS]
    extra = None
    if args.data:
        ds = read_dataset_csv(args.data, T=chain.T)
        l1, l2 = lpml(chain)
        extra = {"2": [repr(l2)], "1": [repr(l1)], "overall": [""]}
        header.append("LPML")
        if chain.theta1 is not None:
            clinical = bool(chain.meta.get("chain", {}).get("clinical_mode", False))
            shared = chain.meta.get("dss", {}).get("shared_count")
            specs = stage_specs(ds.k, ds.T, clinical=clinical, shared_count=shared)
            b1, b2 = bic(chain, ds, specs)
            extra["2"].append(repr(b2))
            extra["1"].append(repr(b1))
            extra["overall"].append("")
            header.append("BIC")
    write_csv_rows(args.out, header, evaluate_rows(chain, truth, args.scenario, method, extra))
    return EXIT_OK


def experiment_config(args) -> ExperimentConfig:
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")
    if args.experiment is not None:
        base["experiment"] = args.experiment
    cfg = ExperimentConfig.from_dict(base)
    if any(v is not None for v in (args.k, args.n, args.arms, args.rho)):
        d = _defaults(cfg.experiment)
        grid = itertools.product(args.k or [d["k"]], args.n or [d["n"]],
                                 args.arms or [d["T"]], args.rho or [d["rho"]])
        scen = tuple(Scenario(k, n, T, rho) for k, n, T, rho in grid)
        cfg = with_overrides(cfg, scenarios=scen)
    return with_overrides(cfg, methods=tuple(args.method) if args.method else None,
                          replicates=args.replicates, iterations=args.iters,
                          burn_in=args.burnin, thin=args.thin, seed=args.seed,
                          workers=args.workers, out=args.out)


def cmd_experiment(args):
    cfg = experiment_config(args)
    _, summary = run_experiment(cfg)
    if summary["all_failed"]:
        log.error("every fit failed numerically")
        return EXIT_NUMERICAL
    if summary["failed_fits"]:
        log.warning("%d of %d fits failed; see replicates.csv", summary["failed_fits"], summary["fits"])
    return EXIT_OK


COMMANDS = dict(generate=cmd_generate, fit=cmd_fit, evaluate=cmd_evaluate, experiment=cmd_experiment)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except InvalidStateError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
