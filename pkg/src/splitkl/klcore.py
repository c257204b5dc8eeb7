"""Scalar information-theoretic primitives.

Binary (Bernoulli) KL divergence and its upper/lower inverses, discrete KL,
the exact binomial tail and its inverse, and the auxiliary functions
psi(u) = u - ln(1+u) and phi(x) = e^x - x - 1.

All functions accept scalars or numpy arrays (broadcasting elementwise) and
return a python float for scalar input.  They are pure and thread-safe.
"""

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .errors import DomainError

# Bisection stops once the bracket is narrower than this (or after
# BISECT_MAX_ITER halvings).  1e-11 leaves margin for 1e-8 downstream
# tolerances while staying above double-precision noise.
BISECT_WIDTH = 1e-11
BISECT_MAX_ITER = 200


def _as_array(x, name, lo=None, hi=None):
    a = np.asarray(x, dtype=float)
    if lo is not None and np.any(a < lo) or hi is not None and np.any(a > hi):
        raise DomainError(f"{name} outside [{lo}, {hi}]")
    return a


def _maybe_scalar(value, *inputs):
    if all(np.ndim(i) == 0 for i in inputs):
        return float(value)
    return value


def bernoulli_kl(p_hat, p):
    """kl(p_hat || p) between Bernoulli biases, with 0 ln 0 = 0.

    Returns +inf when p_hat > 0, p = 0 or p_hat < 1, p = 1; kl(0||0) and
    kl(1||1) are 0 by the limit convention.
    """
    ph = _as_array(p_hat, "p_hat", 0.0, 1.0)
    q = _as_array(p, "p", 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (xlogy(ph, ph) - xlogy(ph, q)) + (xlogy(1.0 - ph, 1.0 - ph) - xlogy(1.0 - ph, 1.0 - q))
    return _maybe_scalar(np.maximum(val, 0.0), p_hat, p)


def _kl_inv_bisect(p_hat, eps, upper):
    ph = _as_array(p_hat, "p_hat", 0.0, 1.0)
    ev = _as_array(eps, "eps", 0.0)
    ph_b, ev_b = np.broadcast_arrays(ph, ev)
    shape = ph_b.shape
    ph_f = ph_b.astype(float).ravel()
    ev_f = ev_b.astype(float).ravel()
    # eps = 0 forces p = p_hat; bisecting instead would drift by the float
    # cancellation width of kl around p_hat (~1e-8).
    pinned = ev_f == 0.0
    if upper:
        lo, hi = ph_f.copy(), np.ones_like(ph_f)
        hi[pinned] = ph_f[pinned]
        # p_hat = 1 or eps = +inf pin the answer at 1.
        lo[np.isinf(ev_f) | (ph_f >= 1.0)] = 1.0
    else:
        lo, hi = np.zeros_like(ph_f), ph_f.copy()
        lo[pinned] = ph_f[pinned]
        hi[np.isinf(ev_f) | (ph_f <= 0.0)] = 0.0
    for _ in range(BISECT_MAX_ITER):
        if np.max(hi - lo) <= BISECT_WIDTH:
            break
        mid = 0.5 * (lo + hi)
        feas = bernoulli_kl(ph_f, mid) <= ev_f
        if upper:
            lo = np.where(feas, mid, lo)
            hi = np.where(feas, hi, mid)
        else:
            hi = np.where(feas, mid, hi)
            lo = np.where(feas, lo, mid)
    out = (lo if upper else hi).reshape(shape)
    return _maybe_scalar(out, p_hat, eps)


def kl_inv_upper(p_hat, eps):
    """Largest p in [p_hat, 1] with kl(p_hat || p) <= eps, by bisection.

    kl(p_hat || .) is increasing on [p_hat, 1], so the feasible set is an
    interval; the returned endpoint is feasible.  eps = +inf returns 1.
    """
    return _kl_inv_bisect(p_hat, eps, upper=True)


def kl_inv_lower(p_hat, eps):
    """Smallest p in [0, p_hat] with kl(p_hat || p) <= eps, by bisection."""
    return _kl_inv_bisect(p_hat, eps, upper=False)


def discrete_kl(rho, pi):
    """KL(rho || pi) between two discrete distributions of equal length."""
    r = np.asarray(rho, dtype=float)
    p = np.asarray(pi, dtype=float)
    if r.shape != p.shape:
        raise DomainError(f"length mismatch: {r.shape} vs {p.shape}")
    if np.any(r < 0) or np.any(p < 0):
        raise DomainError("negative probability weight")
    if abs(r.sum() - 1.0) > 1e-9 or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("weights must sum to 1 within 1e-9")
    if np.any((p == 0) & (r > 0)):
        return float("inf")
    with np.errstate(divide="ignore", invalid="ignore"):
        val = float(np.sum(xlogy(r, r) - xlogy(r, p)))
    return max(val, 0.0)


def binomial_tail(n, k, p):
    """P[Binomial(n, p) <= k], exactly, accumulated in log space."""
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got k={k}, n={n}")
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p outside [0, 1]: {p}")
    if k == n or p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    i = np.arange(k + 1)
    log_pmf = (
        gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1)
        + i * np.log(p) + (n - i) * np.log1p(-p)
    )
    return float(min(1.0, np.exp(logsumexp(log_pmf))))


def binomial_tail_inverse(n, k, delta):
    """Largest p with P[Binomial(n, p) <= k] >= delta, by bisection.

    The tail is non-increasing in p, equal to 1 at p = 0, so the feasible
    set is an interval [0, p*].
    """
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta outside (0, 1): {delta}")
    if k == n:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= BISECT_WIDTH:
            break
        mid = 0.5 * (lo + hi)
        if binomial_tail(n, k, mid) >= delta:
            lo = mid
        else:
            hi = mid
    return lo


def psi(u):
    """psi(u) = u - ln(1+u) for u > -1; non-negative everywhere."""
    a = np.asarray(u, dtype=float)
    if np.any(a <= -1.0):
        raise DomainError("psi requires u > -1")
    return _maybe_scalar(a - np.log1p(a), u)


def phi(x):
    """phi(x) = e^x - x - 1; non-negative everywhere."""
    a = np.asarray(x, dtype=float)
    return _maybe_scalar(np.expm1(a) - a, x)
