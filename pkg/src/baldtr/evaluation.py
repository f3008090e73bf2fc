"""Selection, regime and model-comparison metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .gibbs import ChainOutput, InvalidStateError, normal_logpdf, summarize

MRE_EPS = 1e-8


@dataclass
class SelectionScore:
    fn_rate: float
    fp_rate: float
    precision: float
    recall: float
    f1: float
    empty_positive: bool = False


def selection_metrics(inclusion_probs, delta_star, threshold=0.5) -> SelectionScore:
    """Score the median-probability model (``prob > threshold``) against the truth.

    FN is the share of truly active regressors not selected, FP the share of
    inactive ones selected. With no active regressors FN is reported as 0 and
    ``empty_positive`` is set.
    """
    probs = np.asarray(inclusion_probs, dtype=float)
    truth = np.asarray(delta_star).astype(bool)
    if probs.shape != truth.shape:
        raise ValueError(f"length mismatch: {probs.shape} vs {truth.shape}")
    sel = probs > threshold
    tp = np.sum(sel & truth)
    fn = np.sum(~sel & truth)
    fp = np.sum(sel & ~truth)
    npos, nneg = truth.sum(), (~truth).sum()
    fn_rate = fn / npos if npos else 0.0
    fp_rate = fp / nneg if nneg else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / npos if npos else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SelectionScore(float(fn_rate), float(fp_rate), float(precision), float(recall),
                          float(f1), empty_positive=not npos)


@dataclass
class RegimeScore:
    er_stage1: float
    er_stage2: float
    er_overall: float
    mre_stage1: float
    mre_stage2: float
    mre_overall: float
    mre_skipped: tuple = (0, 0, 0)


def _mre(opt, est):
    """Mean of ``|opt - est| / |opt|`` over entries with a non-negligible denominator."""
    keep = np.abs(opt) >= MRE_EPS
    if not keep.any():
        return float("nan"), int((~keep).sum())
    return float(np.mean(np.abs(opt[keep] - est[keep]) / np.abs(opt[keep]))), int((~keep).sum())


def regime_metrics(a_hat1, a_hat2, truth) -> RegimeScore:
    """Error rates and payoff relative errors of an estimated regime.

    Expected payoffs under the estimated arms are evaluated with the true
    coefficients (``truth`` is a :class:`~baldtr.dgp.DgpTruth`). Stage-2
    quantities are averaged over stage-2 participants only.
    """
    a_hat1 = np.asarray(a_hat1, dtype=np.int64)
    a_hat2 = np.asarray(a_hat2, dtype=np.int64)
    if a_hat1.shape != truth.a_opt_true1.shape or a_hat2.shape != truth.a_opt_true2.shape:
        raise ValueError("estimated regime and truth have different sizes")
    part = truth.participates2
    err1 = a_hat1 != truth.a_opt_true1
    err2 = (a_hat2 != truth.a_opt_true2) & part
    er1 = float(err1.mean())
    er2 = float(err2[part].mean()) if part.any() else 0.0
    er = float((err1 | err2).mean())

    a2_safe = np.where(part, np.maximum(a_hat2, 0), 0)
    m2, s2 = _mre(truth.E_opt2[part], truth.stage2_payoff(a2_safe)[part])
    m1, s1 = _mre(truth.E_opt1, truth.stage1_payoff(a_hat1))
    m, s = _mre(truth.E_opt_overall, truth.overall_payoff(a_hat1, a2_safe))
    return RegimeScore(er1, er2, er, m1, m2, m, mre_skipped=(s1, s2, s))


def log_cpo(loglik):
    """Per-subject log CPO from an ``(S, n)`` array of log-likelihoods.

    ``CPO_i`` is the harmonic mean of the likelihoods over draws, i.e.
    ``log S - logsumexp(-loglik_i)``.
    """
    loglik = np.asarray(loglik, dtype=float)
    S = loglik.shape[0]
    if S == 0:
        raise InvalidStateError("no stored draws")
    return np.log(S) - logsumexp(-loglik, axis=0)


def lpml(chain: ChainOutput):
    """``(lpml_stage1, lpml_stage2)``; stage 2 sums over participants only."""
    if len(chain) == 0:
        raise InvalidStateError("chain holds no stored draws")
    l1 = float(log_cpo(chain.loglik1).sum())
    part = chain.participates2
    l2 = float(log_cpo(chain.loglik2[:, part]).sum()) if part.any() else 0.0
    return l1, l2


def gaussian_bic(resid, sigma_sq, q):
    """``-2 log L + q log m`` for Gaussian residuals with fixed variance."""
    resid = np.asarray(resid, dtype=float)
    m = resid.shape[0]
    ll = normal_logpdf(resid, 0.0, sigma_sq).sum()
    return float(-2.0 * ll + q * np.log(m))


def bic(chain: ChainOutput, ds, specs, threshold=0.5):
    """Plug-in BIC per stage on observed data only.

    Coefficients are posterior means restricted to regressors with inclusion
    probability above ``threshold``; the variance is its posterior mean. The
    stage-1 response is the posterior mean of ``y1 + max_t V2``. The
    parameter count is the number of selected regressors plus one for the
    variance (plus one for the participation coefficient in clinical mode).
    """
    if chain.theta1 is None or chain.theta2 is None:
        raise InvalidStateError("BIC needs stored coefficient draws (store_theta=True)")
    from .core import stage_designs

    spec1, spec2 = specs
    X1, X2, _ = stage_designs(ds, spec1, spec2)
    s = summarize(chain)
    sel1 = s.inclusion_probs1 > threshold
    sel2 = s.inclusion_probs2 > threshold
    th1 = s.theta1_mean.copy()
    th1[:sel1.size][~sel1] = 0.0
    th2 = np.where(sel2, s.theta2_mean, 0.0)
    extra = 1 + int(spec1.include_intercept_term)
    bic1 = gaussian_bic(chain.yopt_mean - X1 @ th1, s.sigma1_sq_mean, int(sel1.sum()) + extra)
    part = ds.participates2
    bic2 = gaussian_bic(ds.y2[part] - X2 @ th2, s.sigma2_sq_mean, int(sel2.sum()) + 1)
    return bic1, bic2
