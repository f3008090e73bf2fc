"""Seedable random-number substrate.

Every sampler takes a :class:`numpy.random.Generator` as its first argument.
Generators are obtained from :class:`RngStream`, which maps a ``(seed,
stream_id)`` pair onto an independent, reproducible PCG64 stream through
:class:`numpy.random.SeedSequence`. Replicates and chains each get their own
stream, so results do not depend on how work is scheduled across processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NumericalError(ArithmeticError):
    """Raised when a linear-algebra step of the sampler breaks down."""


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    return RngStream(seed, stream_id).generator()


def _check_positive(name, x):
    if np.any(~(np.asarray(x, dtype=float) > 0)):
        raise ValueError(f"{name} must be positive, got {x}")


def normal(rng, mean, variance, size=None):
    """Draw from N(mean, variance); zero variance returns the mean exactly."""
    variance = np.asarray(variance, dtype=float)
    if np.any(~(variance >= 0)):
        raise ValueError(f"variance must be non-negative, got {variance}")
    out = mean + np.sqrt(variance) * rng.standard_normal(size=np.broadcast(mean, variance).shape
                                                         if size is None else size)
    return out if np.ndim(out) else float(out)


def mvn_from_precision(rng, precision, linear_term, check=True):
    """Draw ``x ~ N(P^{-1} b, P^{-1})`` given the precision ``P`` and ``b``.

    Uses one Cholesky factor ``P = L L^T``; the covariance is never formed.
    The mean solves ``L L^T m = b`` and the noise is ``L^{-T} z``.
    """
    precision = np.asarray(precision, dtype=float)
    b = np.asarray(linear_term, dtype=float)
    if check and not np.allclose(precision, precision.T, rtol=1e-10, atol=1e-12):
        raise NumericalError("precision matrix is not symmetric")
    try:
        L = np.linalg.cholesky(precision)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(_condition_message(precision)) from exc
    z = rng.standard_normal(b.shape[0])
    w = scipy.linalg.solve_triangular(L, b, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(L.T, w + z, lower=False, check_finite=False)


def _condition_message(m):
    try:
        eig = np.linalg.eigvalsh(m)
        return (f"Cholesky factorization failed for {m.shape[0]}x{m.shape[0]} precision; "
                f"eigenvalue range [{eig[0]:.3e}, {eig[-1]:.3e}], "
                f"condition number {np.linalg.cond(m):.3e}")
    except np.linalg.LinAlgError:
        return "Cholesky factorization failed; eigenvalues not computable"


def inv_gamma(rng, shape, scale, size=None):
    """Draw X with density proportional to ``x**(-shape-1) * exp(-scale/x)``."""
    _check_positive("shape", shape)
    _check_positive("scale", scale)
    out = scale / rng.standard_gamma(shape, size=size)
    return out if np.ndim(out) else float(out)


def beta(rng, a, b, size=None):
    _check_positive("a", a)
    _check_positive("b", b)
    out = rng.beta(a, b, size=size)
    return out if np.ndim(out) else float(out)


def bernoulli(rng, p, size=None):
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0) & (p <= 1))):
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    shape = p.shape if size is None else size
    out = (rng.random(shape) < p).astype(np.int8)
    return out if np.ndim(out) else int(out)


def signed_bernoulli(rng, p, size=None):
    """Return +1 with probability ``p`` and -1 otherwise."""
    return 2 * bernoulli(rng, p, size) - 1


def discrete_uniform(rng, m, size=None):
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    out = rng.integers(0, int(m), size=size)
    return out if np.ndim(out) else int(out)
