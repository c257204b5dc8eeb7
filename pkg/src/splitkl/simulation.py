"""Monte Carlo comparisons and coverage checks for the concentration bounds.

Sweeps draw repeated ternary or beta samples across a scenario grid and
record the gap (bound - empirical mean) of the kl, Empirical Bernstein,
Unexpected Bernstein (grid) and split-kl bounds, with bounds clipped to the
upper endpoint at emission time only.  Coverage experiments estimate the
violation frequency of each bound's 1-delta guarantee.  A synthetic bagged
ensemble generator feeds the majority-vote module.

Randomness is derived per (grid point, repeat) from the master seed through
``numpy.random.SeedSequence``, so any thread count and evaluation order
produce bit-identical results.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .concentration import make_gamma_grid
from .errors import DomainError
from .klcore import kl_inv_lower, kl_inv_upper, psi
from .majority_vote import EvaluationMatrix, PredictionLossMatrix
from .pacbayes import _maurer_eps

# 51 points gives step 0.02 on [0, 1], putting the reference scenario
# values 0.6 and 0.9 exactly on the grid.
GRID_POINTS = 51
DEFAULT_REPEATS = 100
BOUND_NAMES = ("kl", "eb", "ub", "skl")
COVERAGE_BOUNDS = BOUND_NAMES + ("pbkl0",)

_SEED_MOD = 2**63


@dataclass(frozen=True)
class TernarySpec:
    """Distribution on {-1, 0, 1} with the three point masses."""

    p_minus1: float
    p_0: float
    p_1: float

    def __post_init__(self):
        probs = (self.p_minus1, self.p_0, self.p_1)
        if any(p < 0 for p in probs):
            raise DomainError("negative probability")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise DomainError("probabilities must sum to 1 within 1e-12")

    @property
    def mean(self):
        return self.p_1 - self.p_minus1


@dataclass(frozen=True)
class BetaSpec:
    """Beta distribution with positive shape parameters."""

    alpha_shape: float
    beta_shape: float

    def __post_init__(self):
        if self.alpha_shape <= 0 or self.beta_shape <= 0:
            raise DomainError("shape parameters must be positive")

    @property
    def mean(self):
        return self.alpha_shape / (self.alpha_shape + self.beta_shape)

    @property
    def variance(self):
        s = self.alpha_shape + self.beta_shape
        return self.alpha_shape * self.beta_shape / (s * s * (s + 1.0))


@dataclass
class SweepRow:
    """Per-grid-point repeat statistics of the clipped bound gaps."""

    param: float
    n: int
    delta: float
    repeats: int
    seed: int
    gaps: dict = field(default_factory=dict)

    def gap_mean(self, name):
        return float(np.mean(self.gaps[name]))

    def gap_std(self, name):
        return float(np.std(self.gaps[name]))

    def gap_median(self, name):
        return float(np.median(self.gaps[name]))


def _rng(seed, *path):
    entropy = [int(seed) % _SEED_MOD] + [int(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def sample_ternary(spec: TernarySpec, n, seed) -> np.ndarray:
    """n i.i.d. draws from {-1, 0, 1}; deterministic given the seed."""
    if n < 1:
        raise DomainError("need n >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else _rng(seed)
    return rng.choice(
        np.array([-1.0, 0.0, 1.0]), size=n, p=[spec.p_minus1, spec.p_0, spec.p_1]
    )


def sample_beta(spec: BetaSpec, n, seed) -> np.ndarray:
    """n i.i.d. Beta draws; the generator handles shape parameters < 1."""
    if n < 1:
        raise DomainError("need n >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else _rng(seed)
    return rng.beta(spec.alpha_shape, spec.beta_shape, size=n)


def _bound_values(samples, lo, hi, mu, delta):
    """Raw bound values for each row of a (repeats, n) sample matrix."""
    x = np.asarray(samples, dtype=float)
    reps, n = x.shape
    means = x.mean(axis=1)
    out = {}
    # kl: rescale to [0, 1], invert, rescale back
    p01 = (means - lo) / (hi - lo)
    out["kl"] = lo + (hi - lo) * kl_inv_upper(p01, math.log(1.0 / delta) / n)
    # Empirical Bernstein
    var = x.var(axis=1, ddof=1)
    ln2d = math.log(2.0 / delta)
    out["eb"] = (
        means
        + np.sqrt(2.0 * var * ln2d / n)
        + 7.0 * (hi - lo) * ln2d / (3.0 * (n - 1))
    )
    # Unexpected Bernstein over the gamma grid
    second = np.mean(x * x, axis=1)
    grid = make_gamma_grid(n, delta, hi)
    lnkd = math.log(grid.count / delta)
    ub = np.full(reps, np.inf)
    for g in grid.values:
        ub = np.minimum(ub, means + psi(-g * hi) / (g * hi * hi) * second + lnkd / (g * n))
    out["ub"] = ub
    # split-kl around mu at delta/2 per side
    eps2 = math.log(2.0 / delta) / n
    plus = np.maximum(0.0, x - mu).mean(axis=1)
    minus = np.maximum(0.0, mu - x).mean(axis=1)
    plus_term = (hi - mu) * kl_inv_upper(np.clip(plus / (hi - mu), 0.0, 1.0), eps2)
    minus_term = (mu - lo) * kl_inv_lower(np.clip(minus / (mu - lo), 0.0, 1.0), eps2)
    out["skl"] = mu + plus_term - minus_term
    # PAC-Bayes-kl at KL = 0 (single deterministic hypothesis)
    out["pbkl0"] = lo + (hi - lo) * kl_inv_upper(p01, _maurer_eps(0.0, n, delta))
    return means, out


def _ternary_probs(mode, p0):
    rest = 1.0 - p0
    if mode == "symmetric":
        return TernarySpec(0.5 * rest, p0, 0.5 * rest)
    if mode == "skew_high":
        return TernarySpec(0.01 * rest, p0, 0.99 * rest)
    if mode == "skew_low":
        return TernarySpec(0.99 * rest, p0, 0.01 * rest)
    raise DomainError(f"unknown ternary mode: {mode}")


def _beta_specs(mode):
    if mode == "constant_mean":
        return [BetaSpec(a, a) for a in np.geomspace(0.01, 10.0, GRID_POINTS)]
    if mode == "spectrum":
        left = [BetaSpec(a, 5.0) for a in np.geomspace(0.01, 5.0, GRID_POINTS // 2)]
        right = [BetaSpec(5.0, b) for b in np.geomspace(5.0, 0.01, GRID_POINTS // 2)]
        return left + right
    raise DomainError(f"unknown beta mode: {mode}")


def _sweep_point(draw, point_idx, n, delta, repeats, seed, lo, hi, mu):
    samples = np.stack(
        [draw(_rng(seed, point_idx, rep), rep) for rep in range(repeats)]
    )
    means, bounds = _bound_values(samples, lo, hi, mu, delta)
    return {name: np.minimum(bounds[name], hi) - means for name in BOUND_NAMES}


def _run_points(worker, count, threads):
    if threads <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(count)))


def sweep_ternary(mode, n, delta, repeats=DEFAULT_REPEATS, seed=0, threads=1):
    """Gap curves over a 50-point p0 grid for a ternary scenario family."""
    p0_grid = np.linspace(0.0, 1.0, GRID_POINTS)
    specs = [_ternary_probs(mode, p0) for p0 in p0_grid]

    def worker(i):
        spec = specs[i]
        gaps = _sweep_point(
            lambda rng, rep: sample_ternary(spec, n, rng),
            i, n, delta, repeats, seed, -1.0, 1.0, 0.0,
        )
        return SweepRow(
            param=float(p0_grid[i]), n=n, delta=delta, repeats=repeats, seed=seed,
            gaps=gaps,
        )

    return _run_points(worker, len(specs), threads)


def sweep_beta(mode, n, delta, repeats=DEFAULT_REPEATS, seed=0, threads=1):
    """Gap curves over beta scenarios; param is the variance (constant_mean
    mode) or the true mean (spectrum mode)."""
    specs = _beta_specs(mode)
    params = [
        spec.variance if mode == "constant_mean" else spec.mean for spec in specs
    ]

    def worker(i):
        spec = specs[i]
        gaps = _sweep_point(
            lambda rng, rep: sample_beta(spec, n, rng),
            i, n, delta, repeats, seed, 0.0, 1.0, 0.5,
        )
        return SweepRow(
            param=float(params[i]), n=n, delta=delta, repeats=repeats, seed=seed,
            gaps=gaps,
        )

    return _run_points(worker, len(specs), threads)


def sweep_rows_to_records(rows):
    """Flatten sweep rows to (param, bound, gap_mean, gap_std, ...) records."""
    records = []
    for row in rows:
        for name in BOUND_NAMES:
            records.append(
                {
                    "param": row.param,
                    "bound": name,
                    "gap_mean": row.gap_mean(name),
                    "gap_std": row.gap_std(name),
                    "repeats": row.repeats,
                    "n": row.n,
                    "delta": row.delta,
                    "seed": row.seed,
                }
            )
    return records


_COVERAGE_BLOCK = 500


def coverage_experiment(dist, n, delta, trials=10000, seed=0, threads=1):
    """Violation frequency of each bound over independent Monte Carlo trials.

    Returns a dict bound-name -> frequency of {true mean > bound value};
    includes the PAC-Bayes-kl bound at KL = 0 alongside the four sample
    bounds.  Trials are drawn in fixed-size blocks with per-block seed
    derivation, so frequencies do not depend on the thread count.
    """
    if trials < 100:
        raise DomainError("need trials >= 100")
    if isinstance(dist, TernarySpec):
        lo, hi, mu = -1.0, 1.0, 0.0
        truth = dist.mean
        draw = lambda rng, size: sample_ternary(dist, size, rng).reshape(-1, n)
    elif isinstance(dist, BetaSpec):
        lo, hi, mu = 0.0, 1.0, 0.5
        truth = dist.mean
        draw = lambda rng, size: sample_beta(dist, size, rng).reshape(-1, n)
    else:
        raise DomainError("dist must be a TernarySpec or BetaSpec")

    blocks = [
        min(_COVERAGE_BLOCK, trials - start) for start in range(0, trials, _COVERAGE_BLOCK)
    ]

    def worker(i):
        rng = _rng(seed, i)
        x = draw(rng, blocks[i] * n)
        _, bounds = _bound_values(x, lo, hi, mu, delta)
        return {name: int(np.sum(truth > bounds[name])) for name in COVERAGE_BOUNDS}

    counts = _run_points(worker, len(blocks), threads)
    return {
        name: sum(c[name] for c in counts) / trials for name in COVERAGE_BOUNDS
    }


def coverage_ceiling(delta, trials):
    """delta + 3 sigma binomial slack for an empirical violation frequency."""
    return delta + 3.0 * math.sqrt(delta * (1.0 - delta) / trials)


def coverage_passes(frequencies, delta, trials):
    ceiling = coverage_ceiling(delta, trials)
    return all(freq <= ceiling for freq in frequencies.values())


# ---------------------------------------------------------------------------
# Synthetic bagged ensembles
# ---------------------------------------------------------------------------

NOISE_PROFILES = ("identical", "independent", "correlated")


def _error_matrix(rng, profile, h_count, size, error_rate, correlation):
    if profile == "identical":
        return np.tile(rng.uniform(size=size) < error_rate, (h_count, 1))
    if profile == "independent":
        return rng.uniform(size=(h_count, size)) < error_rate
    if profile == "correlated":
        shared = rng.uniform(size=size) < error_rate
        own = rng.uniform(size=(h_count, size)) < error_rate
        copy_shared = rng.uniform(size=(h_count, size)) < correlation
        return np.where(copy_shared, shared[None, :], own)
    raise DomainError(f"unknown noise profile: {profile}")


def synth_ensemble(h_count, n_examples, noise_profile="independent",
                   bagging_rate=0.8, seed=0, error_rate=0.3, correlation=0.5,
                   eval_size=10000):
    """Bagged binary ensemble with a known error process.

    Each hypothesis errs according to the noise profile; its training-side
    zero-one losses are masked to the out-of-bag examples of a bootstrap
    draw of ``bagging_rate * n_examples`` samples.  Returns the masked loss
    matrix and an independent evaluation matrix (predictions + labels) from
    the same error process.  Degenerate masks are regenerated with a new
    sub-seed, at most 10 attempts.
    """
    if h_count < 2:
        raise DomainError("need at least 2 hypotheses")
    if n_examples < 2:
        raise DomainError("need at least 2 examples")
    for attempt in range(10):
        rng = _rng(seed, attempt)
        errors = _error_matrix(
            rng, noise_profile, h_count, n_examples, error_rate, correlation
        )
        draw_size = int(round(bagging_rate * n_examples))
        mask = np.zeros((h_count, n_examples), dtype=bool)
        for h in range(h_count):
            drawn = rng.integers(0, n_examples, size=draw_size)
            oob = np.ones(n_examples, dtype=bool)
            oob[np.unique(drawn)] = False
            mask[h] = oob
        counts = mask.astype(float) @ mask.astype(float).T
        if counts.min() < 2:
            continue
        plm = PredictionLossMatrix(losses=errors.astype(float), mask=mask)
        eval_labels = rng.integers(0, 2, size=eval_size)
        eval_errors = _error_matrix(
            rng, noise_profile, h_count, eval_size, error_rate, correlation
        )
        eval_preds = np.where(eval_errors, 1 - eval_labels[None, :], eval_labels[None, :])
        em = EvaluationMatrix(predictions=eval_preds, labels=eval_labels)
        return plm, em
    raise DomainError("could not generate non-degenerate OOB masks in 10 attempts")
