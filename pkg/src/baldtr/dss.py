"""Dependent spike-and-slab prior over two coefficient vectors.

Hierarchy, for stages ``j = 1, 2`` and regressors ``l``::

    theta_lj | delta, psi ~ N(0, r**(1 - delta_lj) * psi_lj)
    psi_lj               ~ InvGamma(nu, Q)
    delta_lj | w         ~ Bern(w_lj)
    w_l1 = w_l2          ~ Beta(a, b)      for the first ``shared_count`` positions
    w_lj                 ~ Beta(a, b)      otherwise

Setting ``shared_count = 0`` gives independent spike-and-slab (ISS) priors.
Inclusion probabilities are kept as ``(log w, log(1 - w))`` pairs because
Beta draws with small shape parameters routinely round to 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, gammaln

from . import rand

DSS = "DSS"
ISS = "ISS"


@dataclass(frozen=True)
class DssConfig:
    mode: str = DSS
    r: float = 0.001
    nu: float = 3.0
    Q: float = 4.0
    ab_prior_shape: float = 1.0
    ab_prior_scale: float = 1.0
    shared_count: int | None = None  # None: every stage-1 regressor is shared (DSS)
    a_init: float = 1.0
    b_init: float = 1.0
    mh_width_init: float = 0.5
    mh_target_accept: float = 0.4

    def __post_init__(self):
        if self.mode not in (DSS, ISS):
            raise ValueError(f"mode must be {DSS!r} or {ISS!r}")
        if not 0 < self.r < 1:
            raise ValueError("r must lie in (0, 1)")
        if self.nu <= 0 or self.Q <= 0 or self.ab_prior_shape <= 0 or self.ab_prior_scale <= 0:
            raise ValueError("nu, Q and the (a, b) prior parameters must be positive")
        if self.mode == ISS and self.shared_count not in (None, 0):
            raise ValueError("ISS mode requires shared_count = 0")
        if self.mode == DSS and self.shared_count == 0:
            raise ValueError("shared_count = 0 is ISS; set mode='ISS'")

    def resolve_shared(self, p1, p2):
        if self.mode == ISS:
            return 0
        p = min(p1, p2) if self.shared_count is None else self.shared_count
        if not 0 < p <= min(p1, p2):
            raise ValueError(f"shared_count {p} exceeds min(p1, p2) = {min(p1, p2)}")
        return p


def sample_log_beta(rng, a, b):
    """Draw ``w ~ Beta(a, b)`` elementwise, returned as ``(log w, log(1 - w))``.

    Uses ``Gamma(s) = Gamma(s + 1) * U**(1/s)`` so tiny shapes do not underflow.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    rand._check_positive("a", a)
    rand._check_positive("b", b)
    lga = np.log(rng.standard_gamma(a + 1.0)) + np.log(rng.random(a.shape)) / a
    lgb = np.log(rng.standard_gamma(b + 1.0)) + np.log(rng.random(b.shape)) / b
    tot = np.logaddexp(lga, lgb)
    return lga - tot, lgb - tot


@dataclass
class SelectionState:
    """Inclusion indicators, slab scales and inclusion probabilities of both stages.

    ``logw1``/``log1mw1`` have length ``p1`` and ``logw2``/``log1mw2`` length
    ``p2``; the first ``shared_count`` entries of the stage-2 arrays mirror
    stage 1.
    """

    delta1: np.ndarray
    delta2: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    logw1: np.ndarray
    log1mw1: np.ndarray
    logw2: np.ndarray
    log1mw2: np.ndarray
    a: float
    b: float
    shared_count: int

    @classmethod
    def initial(cls, p1, p2, cfg: DssConfig):
        shared = cfg.resolve_shared(p1, p2)
        w0 = cfg.a_init / (cfg.a_init + cfg.b_init)
        psi0 = cfg.Q / (cfg.nu - 1) if cfg.nu > 1 else cfg.Q
        return cls(delta1=np.ones(p1, dtype=np.int8), delta2=np.ones(p2, dtype=np.int8),
                   psi1=np.full(p1, psi0), psi2=np.full(p2, psi0),
                   logw1=np.full(p1, np.log(w0)), log1mw1=np.full(p1, np.log1p(-w0)),
                   logw2=np.full(p2, np.log(w0)), log1mw2=np.full(p2, np.log1p(-w0)),
                   a=cfg.a_init, b=cfg.b_init, shared_count=shared)

    @property
    def w_shared(self):
        return np.exp(self.logw1[:self.shared_count])

    @property
    def w1_own(self):
        return np.exp(self.logw1[self.shared_count:])

    @property
    def w2_own(self):
        return np.exp(self.logw2[self.shared_count:])

    def copy(self):
        return SelectionState(**{k: (v.copy() if isinstance(v, np.ndarray) else v)
                                 for k, v in self.__dict__.items()})


def prior_variances(delta, psi, r):
    """Diagonal of the conditional prior covariance, ``r**(1 - delta) * psi``."""
    return np.where(np.asarray(delta) == 1, 1.0, r) * psi


def inclusion_log_odds(theta, psi, logw, log1mw, r):
    """Log of ``w N(theta; 0, psi) / ((1 - w) N(theta; 0, r psi))``."""
    theta = np.asarray(theta, dtype=float)
    with np.errstate(invalid="ignore"):
        return (logw - log1mw) + 0.5 * np.log(r) + theta**2 * (1.0 / r - 1.0) / (2.0 * psi)


def inclusion_probability(theta, psi, w, r):
    """Full-conditional probability that ``delta = 1``."""
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        lo = inclusion_log_odds(theta, psi, np.log(w), np.log1p(-w), r)
    return expit(lo)


def update_delta(rng, theta, psi, logw, log1mw, r):
    prob = expit(inclusion_log_odds(theta, psi, logw, log1mw, r))
    return (rng.random(prob.shape) < prob).astype(np.int8)


def psi_params(theta, delta, nu, Q, r):
    """Inverse-gamma (shape, scale) of the slab-scale full conditional."""
    theta = np.asarray(theta, dtype=float)
    scale = Q + theta**2 / (2.0 * np.where(np.asarray(delta) == 1, 1.0, r))
    return np.full(theta.shape, nu + 0.5), scale


def update_psi(rng, theta, delta, nu, Q, r):
    shape, scale = psi_params(theta, delta, nu, Q, r)
    return scale / rng.standard_gamma(shape)


def w_params(delta1, delta2, a, b, shared_count):
    """Beta parameters for (shared, stage-1 own, stage-2 own) inclusion probabilities."""
    d1 = np.asarray(delta1, dtype=float)
    d2 = np.asarray(delta2, dtype=float)
    p = shared_count
    if p > min(d1.size, d2.size):
        raise ValueError("shared_count exceeds min(p1, p2)")
    s = d1[:p] + d2[:p]
    return ((a + s, b + 2.0 - s),
            (a + d1[p:], b + 1.0 - d1[p:]),
            (a + d2[p:], b + 1.0 - d2[p:]))


@dataclass
class WDraw:
    logw1: np.ndarray
    log1mw1: np.ndarray
    logw2: np.ndarray
    log1mw2: np.ndarray
    shared_count: int

    @property
    def w_shared(self):
        return np.exp(self.logw1[:self.shared_count])

    @property
    def w1_own(self):
        return np.exp(self.logw1[self.shared_count:])

    @property
    def w2_own(self):
        return np.exp(self.logw2[self.shared_count:])


def update_w(rng, delta1, delta2, a, b, shared_count) -> WDraw:
    (sa, sb), (oa1, ob1), (oa2, ob2) = w_params(delta1, delta2, a, b, shared_count)
    la, lb = sample_log_beta(rng, np.concatenate([sa, oa1, oa2]), np.concatenate([sb, ob1, ob2]))
    p, n1 = shared_count, len(oa1)
    logw1 = la[:p + n1]
    log1mw1 = lb[:p + n1]
    logw2 = np.concatenate([la[:p], la[p + n1:]])
    log1mw2 = np.concatenate([lb[:p], lb[p + n1:]])
    return WDraw(logw1, log1mw1, logw2, log1mw2, p)


def _log_inv_gamma_pdf(x, shape, scale):
    return shape * np.log(scale) - gammaln(shape) - (shape + 1.0) * np.log(x) - scale / x


def log_target_a(a, b, sum_logw, n_w, prior_shape=1.0, prior_scale=1.0):
    """Log full conditional of ``a`` up to a constant."""
    if a <= 0:
        return -np.inf
    return (n_w * (gammaln(a + b) - gammaln(a)) + (a - 1.0) * sum_logw
            + _log_inv_gamma_pdf(a, prior_shape, prior_scale))


def log_target_b(b, a, sum_log1mw, n_w, prior_shape=1.0, prior_scale=1.0):
    return log_target_a(b, a, sum_log1mw, n_w, prior_shape, prior_scale)


def w_sufficient_stats(state: SelectionState):
    """``(sum log w, sum log(1 - w), count)`` over distinct inclusion probabilities.

    Shared probabilities are counted once: all stage-1 entries plus the
    stage-2 own entries.
    """
    p = state.shared_count
    slw = state.logw1.sum() + state.logw2[p:].sum()
    sl1mw = state.log1mw1.sum() + state.log1mw2[p:].sum()
    return slw, sl1mw, state.logw1.size + state.logw2.size - p


def _mh_step(rng, current, width, log_target):
    prop = current + width * (2.0 * rng.random() - 1.0)
    if prop <= 0:
        return current, False
    log_ratio = log_target(prop) - log_target(current)
    if np.log(rng.random()) < log_ratio or log_ratio >= 0:
        return prop, True
    return current, False


def update_ab_mh(rng, state: SelectionState, widths, prior_shape=1.0, prior_scale=1.0):
    """One random-walk MH step for ``a`` and then ``b``.

    Proposals are uniform on ``[x - h, x + h]``; non-positive proposals are
    rejected. Returns ``(a, b, accepted)`` with ``accepted`` a pair of bools.
    """
    slw, sl1mw, n_w = w_sufficient_stats(state)
    a, b = state.a, state.b
    a, acc_a = _mh_step(rng, a, widths[0],
                        lambda x: log_target_a(x, b, slw, n_w, prior_shape, prior_scale))
    b, acc_b = _mh_step(rng, b, widths[1],
                        lambda x: log_target_b(x, a, sl1mw, n_w, prior_shape, prior_scale))
    return a, b, (acc_a, acc_b)


@dataclass
class WidthAdapter:
    """Robbins-Monro adaptation of log proposal half-widths toward a target rate."""

    widths: np.ndarray
    target: float = 0.4
    step0: float = 1.0
    decay: float = 0.6
    t: int = field(default=0)

    def update(self, accepted):
        self.t += 1
        gain = self.step0 / self.t**self.decay
        self.widths = self.widths * np.exp(gain * (np.asarray(accepted, dtype=float) - self.target))
        self.widths = np.clip(self.widths, 1e-4, 1e4)
        return self.widths


def prior_inclusion_correlation(a, b):
    """Correlation of a shared pair of inclusion indicators under the prior."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    return 1.0 / (1.0 + a + b)


def sample_prior_indicators(rng, a, b, p1, p2, shared_count, size):
    """Draw ``size`` independent (delta1, delta2) vectors from the prior hierarchy."""
    p = shared_count
    lw_s, _ = sample_log_beta(rng, np.full((size, p), a), np.full((size, p), b))
    lw_1, _ = sample_log_beta(rng, np.full((size, p1 - p), a), np.full((size, p1 - p), b))
    lw_2, _ = sample_log_beta(rng, np.full((size, p2 - p), a), np.full((size, p2 - p), b))
    w1 = np.exp(np.concatenate([lw_s, lw_1], axis=1))
    w2 = np.exp(np.concatenate([lw_s, lw_2], axis=1))
    d1 = (rng.random(w1.shape) < w1).astype(np.int8)
    d2 = (rng.random(w2.shape) < w2).astype(np.int8)
    return d1, d2
