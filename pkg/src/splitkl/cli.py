"""Command-line interface.

Subcommands: ``bound`` (scalar bounds on a sample file), ``simulate``
(sweep CSVs), ``coverage`` (Monte Carlo violation frequencies, exit 1 on a
ceiling breach), and ``mv`` (majority-vote bound optimization on synthetic
or ingested loss matrices).

Exit codes: 0 success, 1 acceptance-check failure, 2 input/usage error,
3 domain error.  All floats are printed with 12 significant digits and all
outputs are byte-deterministic given (args, seed), independent of
``--threads``.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import simulation
from .concentration import (
    BoundReport,
    EmpiricalSummary,
    kl_upper_bound,
    split_decompose,
    split_kl_bound,
    empirical_bernstein_bound,
    unexpected_bernstein_grid_bound,
)
from .errors import DomainError, InputFormatError
from .majority_vote import (
    DEFAULT_ALPHA_GRID,
    EvaluationMatrix,
    PredictionLossMatrix,
    ccpbb_optimize,
    ccpbskl_optimize,
    ccpbub_optimize,
    cctnd_optimize,
    compute_tandem_stats,
    mv_risk,
    tnd_optimize,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_DOMAIN = 3

BOUND_CHOICES = ("kl", "eb", "ub", "skl")
MV_BOUNDS = ("tnd", "cctnd", "ccpbb", "ccpbub", "ccpbskl")

LOSS_CSV_HEADER = "hypothesis_id,example_id,loss,oob"
EVAL_CSV_HEADER = "hypothesis_id,example_id,prediction,label"


def _fmt(x):
    return f"{x:.12g}"


def _round12(obj):
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(_fmt(float(obj)))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_round12(float(v)) for v in obj]
    return obj


def _emit(text, out_path):
    if out_path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _emit_json(obj, out_path):
    _emit(json.dumps(_round12(obj), indent=2, sort_keys=True) + "\n", out_path)


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------


def _parse_sample_file(path):
    samples = []
    header = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line.lstrip("#").split():
                key, sep, value = token.partition("=")
                if not sep or key not in ("lo", "hi", "mu"):
                    raise InputFormatError(
                        f"line {lineno}: bad header token {token!r}"
                    )
                try:
                    header[key] = float(value)
                except ValueError as exc:
                    raise InputFormatError(
                        f"line {lineno}: bad header value {token!r}"
                    ) from exc
            continue
        try:
            samples.append(float(line))
        except ValueError as exc:
            raise InputFormatError(f"line {lineno}: not a number: {line!r}") from exc
    if not samples:
        raise InputFormatError("no samples in input file")
    return np.asarray(samples), header


def cmd_bound(args):
    samples, header = _parse_sample_file(args.file)
    lo = args.lo if args.lo is not None else header.get("lo", 0.0)
    hi = args.hi if args.hi is not None else header.get("hi", 1.0)
    mu = args.mu if args.mu is not None else header.get("mu", 0.5 * (lo + hi))
    if lo >= hi:
        raise InputFormatError(f"need lo < hi, got lo={lo} hi={hi}")
    delta = args.delta
    names = BOUND_CHOICES if args.bound == "all" else (args.bound,)
    n = len(samples)
    reports = []
    for name in names:
        if name == "kl":
            value = kl_upper_bound(samples.mean(), n, delta, lo, hi)
            rep = BoundReport("kl", value, delta, {"n": n, "lo": lo, "hi": hi})
        elif name == "eb":
            s = EmpiricalSummary.from_samples(samples, lo, hi)
            rep = BoundReport(
                "eb", empirical_bernstein_bound(s, delta), delta,
                {"n": n, "lo": lo, "hi": hi},
            )
        elif name == "ub":
            s = EmpiricalSummary.from_samples(samples, lo, hi)
            grid_rep = unexpected_bernstein_grid_bound(s, delta)
            rep = BoundReport(
                "ub", grid_rep.value, delta,
                dict(grid_rep.params, n=n, hi=hi),
            )
        else:
            sp = split_decompose(samples, mu, lo, hi)
            rep = BoundReport(
                "skl", split_kl_bound(sp, delta), delta,
                {"n": n, "lo": lo, "hi": hi, "mu": mu},
            )
        value = min(rep.value, hi) if args.clip else rep.value
        reports.append(
            {"name": rep.name, "value": value, "delta": rep.delta, "params": rep.params}
        )
    _emit_json({"bounds": reports}, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

TERNARY_MODES = ("symmetric", "skew_high", "skew_low")
BETA_MODES = ("constant_mean", "spectrum")


def _sweep_csv(rows):
    lines = ["param,bound,gap_mean,gap_std,repeats,n,delta,seed"]
    for rec in simulation.sweep_rows_to_records(rows):
        lines.append(
            ",".join(
                [
                    _fmt(rec["param"]),
                    rec["bound"],
                    _fmt(rec["gap_mean"]),
                    _fmt(rec["gap_std"]),
                    str(rec["repeats"]),
                    str(rec["n"]),
                    _fmt(rec["delta"]),
                    str(rec["seed"]),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def cmd_simulate(args):
    if args.mode in TERNARY_MODES:
        rows = simulation.sweep_ternary(
            args.mode, args.n, args.delta, args.repeats, args.seed, args.threads
        )
    else:
        rows = simulation.sweep_beta(
            args.mode, args.n, args.delta, args.repeats, args.seed, args.threads
        )
    _emit(_sweep_csv(rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# coverage
# ---------------------------------------------------------------------------


def _parse_floats(text, count, what):
    parts = text.split(",")
    if len(parts) != count:
        raise InputFormatError(f"{what} needs {count} comma-separated values")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise InputFormatError(f"bad {what}: {text!r}") from exc


def cmd_coverage(args):
    if args.trials < 100:
        raise InputFormatError("need trials >= 100")
    if args.dist == "ternary":
        probs = _parse_floats(args.probs, 3, "--probs")
        dist = simulation.TernarySpec(*probs)
        dist_desc = {"kind": "ternary", "probs": probs}
    else:
        shape = _parse_floats(args.shape, 2, "--shape")
        dist = simulation.BetaSpec(*shape)
        dist_desc = {"kind": "beta", "shape": shape}
    freqs = simulation.coverage_experiment(
        dist, args.n, args.delta, args.trials, args.seed, args.threads
    )
    ceiling = simulation.coverage_ceiling(args.delta, args.trials)
    ok = simulation.coverage_passes(freqs, args.delta, args.trials)
    _emit_json(
        {
            "dist": dist_desc,
            "n": args.n,
            "delta": args.delta,
            "trials": args.trials,
            "ceiling": ceiling,
            "frequencies": freqs,
            "pass": ok,
        },
        args.out,
    )
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# mv
# ---------------------------------------------------------------------------


def _read_csv_rows(path, expected_header):
    try:
        with open(path) as fh:
            lines = [line.rstrip("\n") for line in fh]
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != expected_header:
        raise InputFormatError(f"{path}: expected header {expected_header!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise InputFormatError(f"{path} line {lineno}: expected 4 fields")
        try:
            rows.append(tuple(int(p) for p in parts))
        except ValueError as exc:
            raise InputFormatError(
                f"{path} line {lineno}: non-integer field"
            ) from exc
    if not rows:
        raise InputFormatError(f"{path}: no data rows")
    return rows


def read_loss_csv(path) -> PredictionLossMatrix:
    """Ingest ``hypothesis_id,example_id,loss,oob`` into a loss matrix.

    Cells absent from the file are masked out; duplicate cells are
    rejected.
    """
    rows = _read_csv_rows(path, LOSS_CSV_HEADER)
    h_ids = sorted({r[0] for r in rows})
    e_ids = sorted({r[1] for r in rows})
    h_index = {h: i for i, h in enumerate(h_ids)}
    e_index = {e: i for i, e in enumerate(e_ids)}
    losses = np.zeros((len(h_ids), len(e_ids)))
    mask = np.zeros((len(h_ids), len(e_ids)), dtype=bool)
    seen = set()
    for h, e, loss, oob in rows:
        if loss not in (0, 1) or oob not in (0, 1):
            raise InputFormatError(f"{path}: loss/oob must be 0 or 1")
        cell = (h, e)
        if cell in seen:
            raise InputFormatError(f"{path}: duplicate cell {cell}")
        seen.add(cell)
        losses[h_index[h], e_index[e]] = float(loss)
        mask[h_index[h], e_index[e]] = bool(oob)
    return PredictionLossMatrix(losses=losses, mask=mask)


def write_loss_csv(plm: PredictionLossMatrix, path):
    """Emit every cell of a loss matrix in the ingestion schema."""
    lines = [LOSS_CSV_HEADER]
    for h in range(plm.h_count):
        for e in range(plm.n_examples):
            lines.append(
                f"{h},{e},{int(plm.losses[h, e])},{int(plm.mask[h, e])}"
            )
    _emit("\n".join(lines) + "\n", path)


def read_eval_csv(path) -> EvaluationMatrix:
    """Ingest ``hypothesis_id,example_id,prediction,label``; must be dense."""
    rows = _read_csv_rows(path, EVAL_CSV_HEADER)
    h_ids = sorted({r[0] for r in rows})
    e_ids = sorted({r[1] for r in rows})
    h_index = {h: i for i, h in enumerate(h_ids)}
    e_index = {e: i for i, e in enumerate(e_ids)}
    preds = np.full((len(h_ids), len(e_ids)), -1, dtype=int)
    labels = np.full(len(e_ids), -1, dtype=int)
    for h, e, pred, label in rows:
        preds[h_index[h], e_index[e]] = pred
        j = e_index[e]
        if labels[j] not in (-1, label):
            raise InputFormatError(f"{path}: conflicting labels for example {e}")
        labels[j] = label
    if (preds < 0).any():
        raise InputFormatError(f"{path}: missing (hypothesis, example) cells")
    return EvaluationMatrix(predictions=preds, labels=labels)


def _alpha_grid_from_args(args):
    if args.alpha is not None:
        return None  # fixed alpha path
    if args.alpha_points is None:
        return None  # library default grid
    pts = np.linspace(-0.5, 0.49, args.alpha_points)
    return tuple(np.unique(np.concatenate([pts, [0.0]])))


def cmd_mv(args):
    if (args.synthetic is None) == (args.losses is None):
        raise InputFormatError("exactly one of --synthetic or --losses is required")
    em = None
    if args.synthetic is not None:
        plm, em = simulation.synth_ensemble(
            args.h_count,
            args.n_examples,
            args.synthetic,
            bagging_rate=args.bagging_rate,
            seed=args.seed,
            error_rate=args.error_rate,
        )
    else:
        plm = read_loss_csv(args.losses)
    if args.eval is not None:
        em = read_eval_csv(args.eval)
        if em.predictions.shape[0] != plm.h_count:
            raise InputFormatError("--eval hypothesis count does not match losses")
    if args.dump_losses:
        write_loss_csv(plm, args.dump_losses)

    names = tuple(args.bounds.split(","))
    for name in names:
        if name not in MV_BOUNDS:
            raise InputFormatError(f"unknown bound {name!r}")
    pi = np.full(plm.h_count, 1.0 / plm.h_count)
    ts = compute_tandem_stats(plm)
    alpha_grid = _alpha_grid_from_args(args)
    fixed = args.alpha

    results = {}
    for name in names:
        if name == "tnd":
            w, rep = tnd_optimize(ts, pi, args.delta)
            params = {"lam": rep.params.get("lam")}
        elif name == "cctnd":
            w, alpha, rep = cctnd_optimize(
                ts, pi, args.delta, alpha_grid=alpha_grid, fixed_alpha=fixed
            )
            params = {
                "alpha": alpha,
                "lam": rep.params.get("lam"),
                "gam": rep.params.get("gam"),
            }
        else:
            optimize = {
                "ccpbb": ccpbb_optimize,
                "ccpbub": ccpbub_optimize,
                "ccpbskl": ccpbskl_optimize,
            }[name]
            w, opt_params, rep = optimize(
                plm, pi, args.delta, alpha_grid=alpha_grid, fixed_alpha=fixed
            )
            params = {
                k: opt_params.get(k) for k in ("alpha", "lam", "gam") if k in opt_params
            }
        entry = {
            "value": rep.value,
            "rho": list(w.rho),
            "params": params,
            "iterations": rep.params["iterations"],
        }
        if em is not None:
            entry["eval_risk"] = mv_risk(em, w)
        results[name] = entry

    _emit_json(
        {
            "bounds": results,
            "delta": args.delta,
            "h_count": plm.h_count,
            "n": ts.n,
            "m": ts.m,
            "seed": args.seed,
        },
        args.out,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="splitkl",
        description="Concentration and PAC-Bayes bound computation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="scalar bounds on a sample file")
    p.add_argument("file", help="text file, one real per line; optional "
                               "'# lo=<a> hi=<b> mu=<m>' header")
    p.add_argument("--bound", choices=BOUND_CHOICES + ("all",), default="all")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--lo", type=float, default=None)
    p.add_argument("--hi", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--clip", action="store_true", help="clip bounds to hi")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="bound-gap sweep CSV")
    p.add_argument("--mode", choices=TERNARY_MODES + BETA_MODES, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--repeats", type=int, default=simulation.DEFAULT_REPEATS)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coverage", help="Monte Carlo violation frequencies")
    p.add_argument("--dist", choices=("ternary", "beta"), default="ternary")
    p.add_argument("--probs", default="0.25,0.5,0.25",
                   help="ternary masses p_minus1,p_0,p_1")
    p.add_argument("--shape", default="2,5", help="beta shapes alpha,beta")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("mv", help="majority-vote bound optimization")
    p.add_argument("--synthetic", choices=simulation.NOISE_PROFILES, default=None)
    p.add_argument("--losses", default=None, help="loss CSV "
                   f"({LOSS_CSV_HEADER})")
    p.add_argument("--eval", default=None, help=f"eval CSV ({EVAL_CSV_HEADER})")
    p.add_argument("--bounds", default=",".join(MV_BOUNDS))
    p.add_argument("--alpha", type=float, default=None,
                   help="fix the offset instead of optimizing it")
    p.add_argument("--alpha-points", type=int, default=None,
                   help="size of the alpha search grid (0 always included)")
    p.add_argument("--h-count", type=int, default=7)
    p.add_argument("--n-examples", type=int, default=2000)
    p.add_argument("--bagging-rate", type=float, default=0.8)
    p.add_argument("--error-rate", type=float, default=0.3)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--dump-losses", default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_mv)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0.0 < args.delta < 1.0:
        print(f"error: delta must lie in (0, 1), got {args.delta}", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "seed", 0) < 0:
        print("error: seed must be non-negative", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
