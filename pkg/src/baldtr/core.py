"""Two-stage DTR data and regressor construction.

Regressor layout for a stage with action blocks ``a_1, ..., a_m`` (each the
``T-1`` dummy encoding of an arm) and covariates ``z = (1, z_1, ..., z_k)``::

    [z] ++ [a_1, a_1[0]*z_1..z_k, a_1[1]*z_1..z_k, ...] ++ [a_2, ...]

Within each block the dummies come first, then the interactions grouped by
dummy. Stage 1 uses one block, stage 2 uses two, so the stage-1 template is
the prefix of the stage-2 template.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from ._atomic import atomic_write_text


@dataclass(frozen=True)
class TwoStageDataset:
    """Covariates, arms, payoffs and stage-2 participation for ``n`` subjects.

    ``z1`` and ``z2`` carry the leading column of ones. For subjects with
    ``participates2[i] == False`` the stage-2 payoff and arm are stored as 0
    and ignored downstream.
    """

    T: int
    z1: np.ndarray
    z2: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    participates2: np.ndarray = None
    ids: np.ndarray = None

    def __post_init__(self):
        z1 = np.atleast_2d(np.asarray(self.z1, dtype=float))
        z2 = np.atleast_2d(np.asarray(self.z2, dtype=float))
        n = z1.shape[0]
        part = (np.ones(n, dtype=bool) if self.participates2 is None
                else np.asarray(self.participates2, dtype=bool))
        a1 = np.asarray(self.a1, dtype=np.int64)
        a2 = np.where(part, np.asarray(self.a2, dtype=np.int64), 0)
        y2 = np.where(part, np.asarray(self.y2, dtype=float), 0.0)
        ids = np.arange(1, n + 1) if self.ids is None else np.asarray(self.ids)
        if z2.shape != z1.shape:
            raise ValueError(f"z1 {z1.shape} and z2 {z2.shape} must have equal shapes")
        if self.T < 2:
            raise ValueError("need at least two arms")
        if not (np.all(z1[:, 0] == 1) and np.all(z2[:, 0] == 1)):
            raise ValueError("first covariate column must be identically 1")
        for name, arr in (("a1", a1), ("a2", a2)):
            if arr.shape != (n,) or np.any((arr < 0) | (arr >= self.T)):
                raise ValueError(f"{name} must hold n labels in 0..{self.T - 1}")
        for name, arr in (("y1", self.y1), ("participates2", part), ("ids", ids)):
            if np.shape(arr) != (n,):
                raise ValueError(f"{name} must have length {n}")
        object.__setattr__(self, "z1", z1)
        object.__setattr__(self, "z2", z2)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "y1", np.asarray(self.y1, dtype=float))
        object.__setattr__(self, "y2", y2)
        object.__setattr__(self, "participates2", part)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self):
        return self.z1.shape[0]

    @property
    def k(self):
        return self.z1.shape[1] - 1

    @property
    def n2(self):
        return int(self.participates2.sum())

    def subset(self, rows) -> "TwoStageDataset":
        rows = np.asarray(rows)
        return replace(self, z1=self.z1[rows], z2=self.z2[rows], a1=self.a1[rows],
                       a2=self.a2[rows], y1=self.y1[rows], y2=self.y2[rows],
                       participates2=self.participates2[rows], ids=self.ids[rows])

    def drop_covariates(self, which) -> "TwoStageDataset":
        """Remove raw covariates (1-based, as in ``z_1..z_k``) from both stages."""
        keep = [c for c in range(self.k + 1) if c == 0 or c not in set(which)]
        return replace(self, z1=self.z1[:, keep], z2=self.z2[:, keep])


@dataclass(frozen=True)
class DesignSpec:
    k: int
    T: int
    stage: int
    include_intercept_term: bool = False
    shared_count: int = field(default=None)

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ValueError("stage must be 1 or 2")
        if self.T < 2 or self.k < 0:
            raise ValueError("need T >= 2 and k >= 0")
        if self.include_intercept_term and self.stage != 1:
            raise ValueError("the participation column only enters stage 1")
        if self.shared_count is None:
            object.__setattr__(self, "shared_count", self.T * (self.k + 1))
        if not 0 <= self.shared_count <= self.T * (self.k + 1):
            raise ValueError("shared_count must not exceed min(p1, p2)")

    @property
    def n_blocks(self):
        return self.stage

    @property
    def n_selectable(self):
        """Number of regressors under the spike-and-slab prior."""
        return (self.k + 1) * (1 + self.n_blocks * (self.T - 1))

    @property
    def p(self):
        return self.n_selectable + int(self.include_intercept_term)


def stage_specs(k, T, clinical=False, shared_count=None):
    """Return the (stage-1, stage-2) :class:`DesignSpec` pair."""
    return (DesignSpec(k, T, 1, include_intercept_term=clinical, shared_count=shared_count),
            DesignSpec(k, T, 2, shared_count=shared_count))


def dummy_encode(arm, T):
    """Length ``T-1`` 0/1 vector; arm 0 is the all-zero reference."""
    if T < 2:
        raise ValueError("need T >= 2")
    if int(arm) != arm or not 0 <= arm < T:
        raise ValueError(f"arm must be an integer in 0..{T - 1}, got {arm}")
    out = np.zeros(T - 1)
    if arm > 0:
        out[int(arm) - 1] = 1.0
    return out


def build_regressor_vector(z, arms):
    """Concatenate ``z`` with each dummy block and its covariate interactions.

    No interactions between different action blocks are produced.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.shape[0] < 1 or z[0] != 1:
        raise ValueError("z must be a vector with leading entry 1")
    parts = [z]
    for block in arms:
        block = np.asarray(block, dtype=float)
        parts.append(block)
        parts.append(np.outer(block, z[1:]).ravel())
    return np.concatenate(parts)


def _design_rows(z, blocks):
    """Vectorised :func:`build_regressor_vector` over rows of ``z``.

    ``blocks`` is a list of ``(n, T-1)`` dummy matrices.
    """
    n = z.shape[0]
    parts = [z]
    for b in blocks:
        parts.append(b)
        parts.append((b[:, :, None] * z[:, None, 1:]).reshape(n, -1))
    return np.concatenate(parts, axis=1)


def dummy_matrix(arms, T):
    arms = np.asarray(arms, dtype=np.int64)
    out = np.zeros((arms.shape[0], T - 1))
    hit = arms > 0
    out[np.flatnonzero(hit), arms[hit] - 1] = 1.0
    return out


def counterfactual_designs(ds: TwoStageDataset, spec: DesignSpec):
    """Array of shape ``(n, T, p)``: the design row of every subject under every arm.

    For stage 2 the arm varies in the stage-2 block with the observed stage-1
    arm kept fixed; for stage 1 it varies in the stage-1 block. In clinical
    mode the participation indicator is appended as the last column.
    """
    _check_spec(ds, spec)
    n, T = ds.n, ds.T
    out = np.empty((n, T, spec.p))
    for t in range(T):
        dt = dummy_matrix(np.full(n, t), T)
        if spec.stage == 1:
            rows = _design_rows(ds.z1, [dt])
        else:
            rows = _design_rows(ds.z2, [dummy_matrix(ds.a1, T), dt])
        if spec.include_intercept_term:
            rows = np.column_stack([rows, ds.participates2.astype(float)])
        out[:, t, :] = rows
    return out


def _check_spec(ds, spec):
    if spec.k != ds.k or spec.T != ds.T:
        raise ValueError(f"spec (k={spec.k}, T={spec.T}) does not match data (k={ds.k}, T={ds.T})")


def stage_designs(ds: TwoStageDataset, spec1: DesignSpec, spec2: DesignSpec):
    """Observed-arm designs plus a counterfactual row accessor.

    Returns ``(X1, X2, counterfactual_row)``. ``X2`` only holds rows of stage-2
    participants. ``counterfactual_row(i, stage, arm)`` gives the design row
    of subject ``i`` with the arm of that stage replaced.
    """
    if spec1.stage != 1 or spec2.stage != 2:
        raise ValueError("expected a stage-1 and a stage-2 spec")
    C1 = counterfactual_designs(ds, spec1)
    C2 = counterfactual_designs(ds, spec2)
    idx = np.arange(ds.n)
    X1 = C1[idx, ds.a1]
    part = np.flatnonzero(ds.participates2)
    X2 = C2[part, ds.a2[part]]

    def counterfactual_row(i, stage, arm):
        if not 0 <= arm < ds.T:
            raise ValueError(f"arm must be in 0..{ds.T - 1}")
        return (C1 if stage == 1 else C2)[i, arm].copy()

    return X1, X2, counterfactual_row


CSV_FIXED = ["id", "y1", "y2", "a1", "a2", "part2"]


def write_dataset_csv(ds: TwoStageDataset, path):
    header = CSV_FIXED + [f"z1_{l}" for l in range(1, ds.k + 1)] + [f"z2_{l}" for l in range(1, ds.k + 1)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for i in range(ds.n):
        w.writerow([int(ds.ids[i]), repr(float(ds.y1[i])), repr(float(ds.y2[i])),
                    int(ds.a1[i]), int(ds.a2[i]), int(ds.participates2[i])]
                   + [repr(float(v)) for v in ds.z1[i, 1:]]
                   + [repr(float(v)) for v in ds.z2[i, 1:]])
    atomic_write_text(path, buf.getvalue())


def read_dataset_csv(path, T=None) -> TwoStageDataset:
    """Load the dataset CSV; the intercept column is added here.

    ``T`` defaults to one more than the largest arm label seen.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:6] != CSV_FIXED:
        raise ValueError(f"unexpected header {header[:6]}, expected {CSV_FIXED}")
    z1_cols = [j for j, h in enumerate(header) if h.startswith("z1_")]
    z2_cols = [j for j, h in enumerate(header) if h.startswith("z2_")]
    if len(z1_cols) != len(z2_cols):
        raise ValueError("stage-1 and stage-2 covariate counts differ")
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    n = data.shape[0]
    ones = np.ones((n, 1))
    a1 = data[:, 3].astype(np.int64)
    a2 = data[:, 4].astype(np.int64)
    if T is None:
        T = int(max(a1.max(initial=0), a2.max(initial=0))) + 1
        T = max(T, 2)
    return TwoStageDataset(T=T, z1=np.hstack([ones, data[:, z1_cols]]),
                           z2=np.hstack([ones, data[:, z2_cols]]),
                           a1=a1, a2=a2, y1=data[:, 1], y2=data[:, 2],
                           participates2=data[:, 5].astype(bool), ids=data[:, 0].astype(np.int64))
