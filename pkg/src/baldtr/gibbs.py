"""Joint Gibbs sampler for Bayesian augmented learning with spike-and-slab priors.

One sweep updates, in this fixed order: ``theta2, sigma2_sq, theta1 (with the
participation coefficient in clinical mode), sigma1_sq, delta, psi, w, a, b``,
then the stage-2 and overall pseudo-outcomes, and finally records the
optimal-action indicators.

Stage-2 likelihood stack. Every participating subject contributes ``T`` rows,
one per stage-2 arm, with the observed stage-1 arm held fixed. The row of the
observed arm has response ``y2``; the others have the pseudo-outcome of that
arm. The pseudo-outcome of the observed arm is drawn but only used through
the optimal-action indicator and the ``max`` in the stage-1 response.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dss as dss_mod
from .core import DesignSpec, TwoStageDataset, counterfactual_designs, stage_specs
from .dss import DssConfig, SelectionState
from .rand import NumericalError, make_rng, mvn_from_precision

LOG_2PI = math.log(2.0 * math.pi)


class InvalidStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 10_000
    burn_in: int = 5_000
    thin: int = 1
    seed: int = 0
    stream_id: int = 0
    store_theta: bool = True
    clinical_mode: bool = False
    theta0_prior_var: float = 100.0
    adapt_mh: bool = True

    def __post_init__(self):
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    @property
    def n_stored(self):
        return -(-(self.iterations - self.burn_in) // self.thin)


@dataclass
class GibbsState:
    theta1: np.ndarray  # last entry is theta0 in clinical mode
    theta2: np.ndarray
    sigma1_sq: float
    sigma2_sq: float
    selection: SelectionState
    V2: np.ndarray
    V: np.ndarray
    clinical: bool = False

    @property
    def theta0(self):
        return float(self.theta1[-1]) if self.clinical else None

    @property
    def theta1_selectable(self):
        return self.theta1[:-1] if self.clinical else self.theta1


@dataclass
class ChainOutput:
    iters: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    aopt1: np.ndarray
    aopt2: np.ndarray  # -1 for subjects without a second stage
    loglik1: np.ndarray
    loglik2: np.ndarray  # 0 for subjects without a second stage
    sigma1_sq: np.ndarray
    sigma2_sq: np.ndarray
    a: np.ndarray
    b: np.ndarray
    theta1: np.ndarray | None
    theta2: np.ndarray | None
    yopt_mean: np.ndarray
    participates2: np.ndarray
    T: int
    accept_a: int = 0
    accept_b: int = 0
    n_mh: int = 0
    mh_widths: tuple = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.iters.shape[0]

    @property
    def acceptance_rates(self):
        if self.n_mh == 0:
            return (float("nan"), float("nan"))
        return (self.accept_a / self.n_mh, self.accept_b / self.n_mh)


# ---------------------------------------------------------------------------
# full-conditional parameters (pure functions, used by tests and the sweep)

def normal_posterior_params(gram, xty, sigma_sq, prior_var):
    """Precision and linear term of ``N(Sigma b, Sigma)``.

    ``Sigma^{-1} = X^T X / sigma_sq + D^{-1}`` and ``b = X^T y / sigma_sq``.
    """
    precision = gram / sigma_sq
    precision[np.diag_indices_from(precision)] += 1.0 / np.asarray(prior_var)
    return precision, xty / sigma_sq


def posterior_mean_cov(precision, linear_term):
    """Dense oracle for the mean and covariance (tests only)."""
    cov = np.linalg.inv(precision)
    return cov @ linear_term, cov


def stage1_response(y1, V2, participates2):
    """``Y^opt_i = y1_i + max_t V2_it`` with the max taken as 0 for non-participants."""
    vmax = np.where(participates2, V2.max(axis=1), 0.0)
    return y1 + vmax


def stacked_stage2(C2, y2, a2, V2):
    """Explicit stacked design and response for the stage-2 update.

    ``C2`` is ``(n2, T, p2)`` for participants only. Rows of the observed arms
    come first, followed by one row per non-observed arm and subject.
    """
    n2, T, p2 = C2.shape
    idx = np.arange(n2)
    X_obs = C2[idx, a2]
    mask = np.ones((n2, T), dtype=bool)
    mask[idx, a2] = False
    X_cf = C2[mask]
    return np.vstack([X_obs, X_cf]), np.concatenate([y2, V2[mask]])


def sigma_params(resid, n_terms):
    """Inverse-gamma (shape, scale) for a regression variance.

    Shape ``(n_terms + 1) / 2`` and scale ``sum(resid**2) / 2 + 1/2``; this is
    the conditional under an ``InvGamma(1/2, 1/2)`` prior.
    """
    beta = 0.5 * float(np.dot(resid, resid))
    return 0.5 * (n_terms + 1), beta + 0.5


def sigma1_params(y1, vmax, X1, theta1):
    resid = y1 - (X1 @ theta1 - vmax)
    return sigma_params(resid, resid.shape[0])


def sigma2_params(Ystack, Xstack, theta2):
    resid = Ystack - Xstack @ theta2
    return sigma_params(resid, resid.shape[0])


def draw_inv_gamma(rng, shape, scale):
    return scale / rng.standard_gamma(shape)


def update_theta1(rng, state, X1, y1, v2max, D1, gram=None):
    yopt = y1 + v2max
    gram = X1.T @ X1 if gram is None else gram
    precision, b = normal_posterior_params(gram.copy(), X1.T @ yopt, state.sigma1_sq, D1)
    return mvn_from_precision(rng, precision, b, check=False)


def update_theta2(rng, state, Xstar, Ystar, D2, gram=None):
    gram = Xstar.T @ Xstar if gram is None else gram
    precision, b = normal_posterior_params(gram.copy(), Xstar.T @ Ystar, state.sigma2_sq, D2)
    return mvn_from_precision(rng, precision, b, check=False)


def update_sigmas(rng, resid1, resid2):
    s1 = sigma_params(resid1, resid1.shape[0])
    s2 = sigma_params(resid2, resid2.shape[0])
    return draw_inv_gamma(rng, *s1), draw_inv_gamma(rng, *s2)


def update_pseudo_outcomes(rng, state, C1, C2, participates2):
    """Draw stage-2 and overall pseudo-outcomes for every arm.

    ``C1`` is ``(n, T, p1)``; ``C2`` is ``(n2, T, p2)`` for participants.
    Rows of non-participants in ``V2`` stay at zero.
    """
    n, T, _ = C1.shape
    V2 = np.zeros((n, T))
    if C2.shape[0]:
        mean2 = C2 @ state.theta2
        V2[participates2] = mean2 + math.sqrt(state.sigma2_sq) * rng.standard_normal(mean2.shape)
    mean1 = C1 @ state.theta1
    V = mean1 + math.sqrt(state.sigma1_sq) * rng.standard_normal(mean1.shape)
    return V2, V


def opt_indicators(V, V2, participates2):
    """Arm with the largest pseudo-outcome; ties go to the lowest arm.

    Stage-2 labels of non-participants are -1.
    """
    a1 = np.argmax(V, axis=1)
    a2 = np.where(participates2, np.argmax(V2, axis=1), -1)
    return a1, a2


def normal_logpdf(y, mean, var):
    return -0.5 * (LOG_2PI + math.log(var)) - 0.5 * (y - mean) ** 2 / var


# ---------------------------------------------------------------------------
# the chain

class _Problem:
    """Data-dependent quantities fixed for the whole chain."""

    def __init__(self, ds: TwoStageDataset, spec1: DesignSpec, spec2: DesignSpec):
        self.ds = ds
        self.part = ds.participates2.copy()
        self.part_idx = np.flatnonzero(self.part)
        self.C1 = counterfactual_designs(ds, spec1)
        C2_all = counterfactual_designs(ds, spec2)
        self.C2 = C2_all[self.part_idx]
        n, T = ds.n, ds.T
        self.X1 = self.C1[np.arange(n), ds.a1]
        self.gram1 = self.X1.T @ self.X1
        n2 = self.part_idx.size
        self.a2p = ds.a2[self.part_idx]
        self.y2p = ds.y2[self.part_idx]
        self.C2flat = self.C2.reshape(n2 * T, spec2.p)
        self.gram2 = self.C2flat.T @ self.C2flat
        self.X2 = self.C2[np.arange(n2), self.a2p]
        self.obs_flat = np.arange(n2) * T + self.a2p
        self.p1 = spec1.p
        self.p1_sel = spec1.n_selectable
        self.p2 = spec2.p

    def stage2_stack(self, V2):
        """Response vector aligned with ``C2flat`` (all arms of every participant)."""
        Y = V2[self.part_idx].ravel().copy()
        Y[self.obs_flat] = self.y2p
        return Y


def initial_state(rng, prob: _Problem, dss_cfg: DssConfig, clinical: bool):
    sel = SelectionState.initial(prob.p1_sel, prob.p2, dss_cfg)
    st = GibbsState(theta1=np.zeros(prob.p1), theta2=np.zeros(prob.p2), sigma1_sq=1.0,
                    sigma2_sq=1.0, selection=sel, V2=None, V=None, clinical=clinical)
    st.V2, st.V = update_pseudo_outcomes(rng, st, prob.C1, prob.C2, prob.part)
    return st


def _prior_var1(sel, r, clinical, theta0_var):
    d = dss_mod.prior_variances(sel.delta1, sel.psi1, r)
    return np.append(d, theta0_var) if clinical else d


def sweep(rng, st: GibbsState, prob: _Problem, cfg: DssConfig, chain_cfg: ChainConfig, widths):
    """One full Gibbs sweep; mutates ``st`` and returns the (a, b) acceptance flags."""
    r = cfg.r
    sel = st.selection
    ds = prob.ds

    # stage 2 regression
    Y2 = prob.stage2_stack(st.V2)
    D2 = dss_mod.prior_variances(sel.delta2, sel.psi2, r)
    prec, lin = normal_posterior_params(prob.gram2.copy(), prob.C2flat.T @ Y2, st.sigma2_sq, D2)
    st.theta2 = mvn_from_precision(rng, prec, lin, check=False)
    resid2 = Y2 - prob.C2flat @ st.theta2
    st.sigma2_sq = draw_inv_gamma(rng, *sigma_params(resid2, resid2.shape[0]))

    # stage 1 regression on Y^opt
    yopt = stage1_response(ds.y1, st.V2, prob.part)
    D1 = _prior_var1(sel, r, st.clinical, chain_cfg.theta0_prior_var)
    prec, lin = normal_posterior_params(prob.gram1.copy(), prob.X1.T @ yopt, st.sigma1_sq, D1)
    st.theta1 = mvn_from_precision(rng, prec, lin, check=False)
    resid1 = yopt - prob.X1 @ st.theta1
    st.sigma1_sq = draw_inv_gamma(rng, *sigma_params(resid1, resid1.shape[0]))

    # selection: delta, psi, w, then a and b
    th1 = st.theta1_selectable
    sel.delta1 = dss_mod.update_delta(rng, th1, sel.psi1, sel.logw1, sel.log1mw1, r)
    sel.delta2 = dss_mod.update_delta(rng, st.theta2, sel.psi2, sel.logw2, sel.log1mw2, r)
    sel.psi1 = dss_mod.update_psi(rng, th1, sel.delta1, cfg.nu, cfg.Q, r)
    sel.psi2 = dss_mod.update_psi(rng, st.theta2, sel.delta2, cfg.nu, cfg.Q, r)
    wd = dss_mod.update_w(rng, sel.delta1, sel.delta2, sel.a, sel.b, sel.shared_count)
    sel.logw1, sel.log1mw1, sel.logw2, sel.log1mw2 = wd.logw1, wd.log1mw1, wd.logw2, wd.log1mw2
    sel.a, sel.b, accepted = dss_mod.update_ab_mh(rng, sel, widths, cfg.ab_prior_shape,
                                                  cfg.ab_prior_scale)

    # pseudo-outcomes
    st.V2, st.V = update_pseudo_outcomes(rng, st, prob.C1, prob.C2, prob.part)
    return accepted


def run_chain(ds: TwoStageDataset, specs=None, dss_cfg: DssConfig = None,
              chain_cfg: ChainConfig = None) -> ChainOutput:
    """Run the sampler and return the post-burn-in, thinned draws."""
    dss_cfg = dss_cfg or DssConfig()
    chain_cfg = chain_cfg or ChainConfig()
    if specs is None:
        specs = stage_specs(ds.k, ds.T, clinical=chain_cfg.clinical_mode)
    spec1, spec2 = specs
    if spec1.include_intercept_term != chain_cfg.clinical_mode:
        raise ValueError("clinical_mode must match the stage-1 spec's participation column")
    prob = _Problem(ds, spec1, spec2)
    rng = make_rng(chain_cfg.seed, chain_cfg.stream_id)
    st = initial_state(rng, prob, dss_cfg, chain_cfg.clinical_mode)

    S = chain_cfg.n_stored
    n, T = ds.n, ds.T
    out = dict(
        iters=np.empty(S, dtype=np.int64),
        delta1=np.empty((S, prob.p1_sel), dtype=np.int8),
        delta2=np.empty((S, prob.p2), dtype=np.int8),
        aopt1=np.empty((S, n), dtype=np.int16),
        aopt2=np.empty((S, n), dtype=np.int16),
        loglik1=np.empty((S, n)),
        loglik2=np.zeros((S, n)),
        sigma1_sq=np.empty(S), sigma2_sq=np.empty(S), a=np.empty(S), b=np.empty(S),
        theta1=np.empty((S, prob.p1)) if chain_cfg.store_theta else None,
        theta2=np.empty((S, prob.p2)) if chain_cfg.store_theta else None,
    )
    yopt_sum = np.zeros(n)
    adapter = dss_mod.WidthAdapter(np.full(2, dss_cfg.mh_width_init), target=dss_cfg.mh_target_accept)
    acc = np.zeros(2, dtype=np.int64)
    n_mh = 0
    s = 0
    for it in range(1, chain_cfg.iterations + 1):
        try:
            accepted = sweep(rng, st, prob, dss_cfg, chain_cfg, adapter.widths)
        except NumericalError as exc:
            raise NumericalError(f"iteration {it}: {exc}") from exc
        if it <= chain_cfg.burn_in:
            if chain_cfg.adapt_mh:
                adapter.update(accepted)
            continue
        acc += accepted
        n_mh += 1
        if (it - chain_cfg.burn_in - 1) % chain_cfg.thin:
            continue
        sel = st.selection
        a1, a2 = opt_indicators(st.V, st.V2, prob.part)
        yopt = stage1_response(ds.y1, st.V2, prob.part)
        out["iters"][s] = it
        out["delta1"][s] = sel.delta1
        out["delta2"][s] = sel.delta2
        out["aopt1"][s] = a1
        out["aopt2"][s] = a2
        out["loglik1"][s] = normal_logpdf(yopt, prob.X1 @ st.theta1, st.sigma1_sq)
        out["loglik2"][s, prob.part_idx] = normal_logpdf(prob.y2p, prob.X2 @ st.theta2, st.sigma2_sq)
        out["sigma1_sq"][s] = st.sigma1_sq
        out["sigma2_sq"][s] = st.sigma2_sq
        out["a"][s] = sel.a
        out["b"][s] = sel.b
        if chain_cfg.store_theta:
            out["theta1"][s] = st.theta1
            out["theta2"][s] = st.theta2
        yopt_sum += yopt
        s += 1
    assert s == S
    meta = dict(chain=asdict(chain_cfg), dss=asdict(dss_cfg), n=n, k=ds.k, T=T,
                p1=prob.p1, p2=prob.p2, shared_count=st.selection.shared_count)
    return ChainOutput(**out, yopt_mean=yopt_sum / max(S, 1), participates2=prob.part.copy(), T=T,
                       accept_a=int(acc[0]), accept_b=int(acc[1]), n_mh=n_mh,
                       mh_widths=tuple(float(w) for w in adapter.widths), meta=meta)


# ---------------------------------------------------------------------------
# summaries

@dataclass
class PosteriorSummary:
    inclusion_probs1: np.ndarray
    inclusion_probs2: np.ndarray
    opt_action_probs1: np.ndarray  # n x T
    opt_action_probs2: np.ndarray  # n x T, NaN rows for non-participants
    a_hat_opt1: np.ndarray
    a_hat_opt2: np.ndarray  # -1 for non-participants
    theta1_mean: np.ndarray | None
    theta2_mean: np.ndarray | None
    sigma1_sq_mean: float
    sigma2_sq_mean: float

    def to_dict(self):
        def conv(v):
            if isinstance(v, np.ndarray):
                return [conv(x) for x in v] if v.ndim > 1 else [_jsonable(x) for x in v]
            return _jsonable(v)
        return {k: conv(v) for k, v in self.__dict__.items()}


def _jsonable(x):
    if x is None:
        return None
    if isinstance(x, (np.integer, int)):
        return int(x)
    x = float(x)
    return None if math.isnan(x) else x


def arm_frequencies(draws, T):
    """Per-subject arm frequencies of an ``(S, n)`` label array; -1 entries are ignored."""
    S, n = draws.shape
    counts = np.zeros((n, T))
    for t in range(T):
        counts[:, t] = (draws == t).sum(axis=0)
    tot = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        return np.where(tot > 0, counts / np.where(tot > 0, tot, 1), np.nan)


def modal_arm(freqs):
    """Most frequent arm per row, ties to the lowest index; -1 for undefined rows."""
    ok = ~np.isnan(freqs).any(axis=1)
    return np.where(ok, np.argmax(np.nan_to_num(freqs, nan=-1.0), axis=1), -1)


def summarize(chain: ChainOutput) -> PosteriorSummary:
    if len(chain) == 0:
        raise InvalidStateError("chain holds no stored draws")
    f1 = arm_frequencies(chain.aopt1, chain.T)
    f2 = arm_frequencies(chain.aopt2, chain.T)
    return PosteriorSummary(
        inclusion_probs1=chain.delta1.mean(axis=0),
        inclusion_probs2=chain.delta2.mean(axis=0),
        opt_action_probs1=f1, opt_action_probs2=f2,
        a_hat_opt1=modal_arm(f1), a_hat_opt2=modal_arm(f2),
        theta1_mean=None if chain.theta1 is None else chain.theta1.mean(axis=0),
        theta2_mean=None if chain.theta2 is None else chain.theta2.mean(axis=0),
        sigma1_sq_mean=float(chain.sigma1_sq.mean()),
        sigma2_sq_mean=float(chain.sigma2_sq.mean()),
    )
