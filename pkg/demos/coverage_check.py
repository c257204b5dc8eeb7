"""Monte Carlo check of the 1-delta guarantees.

For a few ternary and beta distributions, estimates how often each bound
is violated by the true mean over repeated samples.  Every frequency must
stay below delta plus three binomial standard deviations.
"""

from splitkl import (
    BetaSpec,
    TernarySpec,
    coverage_ceiling,
    coverage_experiment,
)

N, DELTA, TRIALS, SEED = 100, 0.05, 2000, 3

DISTS = [
    ("Bernoulli-like ternary", TernarySpec(0.5, 0.0, 0.5)),
    ("half mass at zero", TernarySpec(0.25, 0.5, 0.25)),
    ("skewed ternary", TernarySpec(0.005, 0.5, 0.495)),
    ("Beta(2, 5)", BetaSpec(2, 5)),
    ("Beta(0.5, 0.5)", BetaSpec(0.5, 0.5)),
]

if __name__ == "__main__":
    ceiling = coverage_ceiling(DELTA, TRIALS)
    print(f"n={N}, delta={DELTA}, trials={TRIALS}, ceiling={ceiling:.4f}")
    header = ("kl", "eb", "ub", "skl", "pbkl0")
    print(f"{'distribution':24s} " + " ".join(f"{h:>6s}" for h in header))
    for name, dist in DISTS:
        freqs = coverage_experiment(dist, N, DELTA, trials=TRIALS, seed=SEED)
        line = " ".join(f"{freqs[h]:6.4f}" for h in header)
        ok = all(f <= ceiling for f in freqs.values())
        print(f"{name:24s} {line}  {'ok' if ok else 'VIOLATED'}")
