"""File formats: chain CSV + JSON sidecar, summaries, truth files.

All writes go through :func:`atomic_write_text` (temp file + rename) so an
interrupted run never leaves a half-written output behind.
"""

from __future__ import annotations

import csv
import io
import json
import os

import numpy as np

from ._atomic import atomic_write_text
from .gibbs import ChainOutput


def dump_json(obj, path):
    atomic_write_text(path, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _f(x):
    return repr(float(x))


def chain_columns(chain: ChainOutput):
    n = chain.participates2.size
    cols = ["iter", "a", "b", "sigma1_sq", "sigma2_sq"]
    cols += [f"delta1_{j}" for j in range(1, chain.delta1.shape[1] + 1)]
    cols += [f"delta2_{j}" for j in range(1, chain.delta2.shape[1] + 1)]
    cols += [f"aopt1_{i}" for i in range(1, n + 1)]
    cols += [f"aopt2_{i}" for i in range(1, n + 1)]
    cols += [f"ll1_{i}" for i in range(1, n + 1)]
    cols += [f"ll2_{i}" for i in range(1, n + 1)]
    if chain.theta1 is not None:
        cols += [f"theta1_{j}" for j in range(1, chain.theta1.shape[1] + 1)]
        cols += [f"theta2_{j}" for j in range(1, chain.theta2.shape[1] + 1)]
    return cols


def write_chain(chain: ChainOutput, csv_path, json_path=None):
    """Write one row per stored draw plus a JSON sidecar with config and acceptance rates."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(chain_columns(chain))
    for s in range(len(chain)):
        row = [int(chain.iters[s]), _f(chain.a[s]), _f(chain.b[s]),
               _f(chain.sigma1_sq[s]), _f(chain.sigma2_sq[s])]
        row += [int(v) for v in chain.delta1[s]]
        row += [int(v) for v in chain.delta2[s]]
        row += [int(v) for v in chain.aopt1[s]]
        row += [int(v) for v in chain.aopt2[s]]
        row += [_f(v) for v in chain.loglik1[s]]
        row += [_f(v) for v in chain.loglik2[s]]
        if chain.theta1 is not None:
            row += [_f(v) for v in chain.theta1[s]]
            row += [_f(v) for v in chain.theta2[s]]
        w.writerow(row)
    atomic_write_text(csv_path, buf.getvalue())
    json_path = json_path or os.path.splitext(os.fspath(csv_path))[0] + ".json"
    side = dict(meta=chain.meta, T=chain.T, accept_a=chain.accept_a, accept_b=chain.accept_b,
                n_mh=chain.n_mh, acceptance_rates=list(chain.acceptance_rates),
                mh_widths=list(chain.mh_widths), yopt_mean=[float(v) for v in chain.yopt_mean],
                participates2=[int(v) for v in chain.participates2])
    dump_json(side, json_path)


def read_chain(csv_path, json_path=None) -> ChainOutput:
    json_path = json_path or os.path.splitext(os.fspath(csv_path))[0] + ".json"
    side = load_json(json_path)
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(header))

    def block(prefix):
        idx = [j for j, h in enumerate(header) if h.startswith(prefix)]
        return data[:, idx] if idx else None

    col = {h: j for j, h in enumerate(header)}
    theta1 = block("theta1_")
    return ChainOutput(
        iters=data[:, col["iter"]].astype(np.int64),
        delta1=block("delta1_").astype(np.int8), delta2=block("delta2_").astype(np.int8),
        aopt1=block("aopt1_").astype(np.int16), aopt2=block("aopt2_").astype(np.int16),
        loglik1=block("ll1_"), loglik2=block("ll2_"),
        sigma1_sq=data[:, col["sigma1_sq"]], sigma2_sq=data[:, col["sigma2_sq"]],
        a=data[:, col["a"]], b=data[:, col["b"]],
        theta1=theta1, theta2=block("theta2_") if theta1 is not None else None,
        yopt_mean=np.asarray(side["yopt_mean"], dtype=float),
        participates2=np.asarray(side["participates2"], dtype=bool), T=int(side["T"]),
        accept_a=side["accept_a"], accept_b=side["accept_b"], n_mh=side["n_mh"],
        mh_widths=tuple(side["mh_widths"]), meta=side["meta"])


def write_csv_rows(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write_text(path, buf.getvalue())
