"""PAC-Bayes bounds as functions of Gibbs aggregates.

Builds a small randomized-classifier scenario by hand: a posterior over a
few hypotheses with known empirical losses, then evaluates the
PAC-Bayes-kl bound, its Refined Pinsker relaxation, the lambda bound at
its closed-form minimizer, the Unexpected Bernstein and split-kl variants
on ternary excess losses, and the excess-loss/informed-prior combination.
"""

import math

import numpy as np

from splitkl import (
    ExcessLossInput,
    PacBayesInput,
    discrete_kl,
    excess_informed_bound,
    optimal_lambda,
    pb_kl_bound,
    pb_kl_pinsker_relaxation,
    pb_lambda_upper,
    pb_split_kl,
    pb_unexpected_bernstein_grid,
    test_set_bound,
)

DELTA = 0.05


def zero_one_loss_bounds():
    # posterior over 5 hypotheses with per-hypothesis empirical losses
    rho = np.array([0.4, 0.3, 0.15, 0.1, 0.05])
    pi = np.full(5, 0.2)
    losses = np.array([0.10, 0.12, 0.15, 0.22, 0.30])
    n = 500
    gibbs = float(rho @ losses)
    kl = discrete_kl(rho, pi)
    print(f"zero-one losses: n={n}, Gibbs mean={gibbs:.4f}, KL(rho||pi)={kl:.4f}")
    print(f"  PAC-Bayes-kl       : {pb_kl_bound(gibbs, kl, n, DELTA):.4f}")
    print(f"  Refined Pinsker    : {pb_kl_pinsker_relaxation(gibbs, kl, n, DELTA):.4f}")
    lam = optimal_lambda(gibbs, kl, n, DELTA)
    print(f"  lambda bound (l*={lam:.3f}): {pb_lambda_upper(gibbs, kl, n, DELTA, lam):.4f}")
    print(f"  test set bound (holdout, 30 errors / 300): "
          f"{test_set_bound(300, 30, DELTA):.4f}")
    print()


def ternary_excess_loss_bounds():
    # excess losses vs a reference rule live in {-1, 0, 1}; mu = 0 middle value
    n = 400
    inp = PacBayesInput(
        gibbs_mean=-0.02,
        gibbs_second_moment=0.10,   # uncentered, so small when mostly zero
        gibbs_plus_mean=0.04,
        gibbs_minus_mean=0.06,
        kl_complexity=1.5,
        n=n, lo=-1.0, hi=1.0, mu=0.0,
    )
    print(f"ternary excess losses: n={n}, Gibbs mean={inp.gibbs_mean:+.3f}")
    ub = pb_unexpected_bernstein_grid(inp, DELTA)
    print(f"  PB-Unexpected-Bernstein: {ub.value:+.4f} (gamma={ub.params['gamma']})")
    print(f"  PB-split-kl            : {pb_split_kl(inp, DELTA):+.4f}")
    print()


def excess_plus_informed_prior():
    # forward/backward split: half the data trains the reference + prior,
    # the other half estimates the excess losses
    x = ExcessLossInput(
        fwd_plus=0.05, bwd_plus=0.04, fwd_minus=0.07, bwd_minus=0.06,
        kl_complexity=0.8, n=400, ref_loss_counts=(24, 30), mu=0.0,
    )
    print(f"excess-loss + informed-prior bound (n={x.n}): "
          f"{excess_informed_bound(x, DELTA):.4f}")


if __name__ == "__main__":
    zero_one_loss_bounds()
    ternary_excess_loss_bounds()
    excess_plus_informed_prior()
