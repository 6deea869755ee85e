"""Command line front end.

Subcommands:

* ``sweep``: run a sweep described by a JSON config file.
* ``repro``: run one of the bundled phase-transition studies.
* ``curve``: evaluate a threshold curve on a k grid.
* ``trial``: run a single instance end to end and show the estimates.
* ``verify``: run the order-statistics verifiers.
* ``plot``: render heatmaps (with optional curve overlays) from a results CSV.

Exit codes: 0 success, 1 validation problem (bad flags, bad config, guard
refusal), 2 unexpected runtime failure, 3 a verifier ran fine and failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, GuardExceededError, SupportLabError
from .estimators import (ml_estimate, mc_estimate, ml_failure_certificate,
                         is_exact_recovery)
from .harness import (DEFAULT_MASTER_SEED, load_config, repro_config, run_sweep,
                      read_results_csv, trial_rng)
from .model import make_signal, synthesize
from .theory import (CurveKind, VerifierKind, run_verifier, threshold_curve,
                     verifier_rng)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_VERIFIER_FAILED = 3


class _Parser(argparse.ArgumentParser):
    """argparse that exits with the package's validation code, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _parse_int_list(text: str) -> list[int]:
    """Parse grids like "1..5", "2,5,10" or "1..4,8,16"."""
    out: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            lo, _, hi = token.partition("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty range {token!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(token))
    if not out:
        raise ValueError(f"no values in {text!r}")
    return sorted(set(out))


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = type(config)(**{**config.__dict__, "master_seed": args.seed})
    out = args.out or config.output or "results.csv"
    results = run_sweep(config, workers=args.workers, output=out,
                        progress=args.progress)
    skipped = sum(not r.ok and r.status.startswith("skipped") for r in results)
    failed = sum(r.status.startswith("failed") for r in results)
    print(f"wrote {out} ({len(results)} cells, {skipped} skipped, {failed} failed)")
    print(f"wrote {Path(out).with_name(Path(out).stem + '.manifest.json')}")
    return EXIT_RUNTIME if failed else EXIT_OK


def _cmd_repro(args) -> int:
    config = repro_config(args.study, trials=args.trials, full=args.full,
                          master_seed=args.seed if args.seed is not None
                          else DEFAULT_MASTER_SEED)
    out_dir = Path(args.out or f"repro_{args.study}")
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    results = run_sweep(config, workers=args.workers, output=str(csv_path),
                        progress=not args.quiet)
    failed = sum(r.status.startswith("failed") for r in results)
    print(f"wrote {csv_path}")
    if not args.no_plot:
        from .plotting import overlay_curves
        curves = {"fig1": (CurveKind.ML_NECESSARY,),
                  "fig2": (CurveKind.ML_NECESSARY,),
                  "fig3": (CurveKind.MC_SUFFICIENT, CurveKind.MC_HIGHSNR)}[args.study]
        for path in overlay_curves(results, curves=curves, out_dir=out_dir,
                                   fmt=args.fmt):
            print(f"wrote {path}")
    return EXIT_RUNTIME if failed else EXIT_OK


def _cmd_curve(args) -> int:
    curve = threshold_curve(args.kind, args.n, _parse_int_list(args.k),
                            snr=args.snr, mar=args.mar)
    if args.json:
        doc = {"kind": curve.kind.value, "n": curve.n, "snr": curve.snr,
               "mar": curve.mar, "points": [[k, m] for k, m in curve.points]}
        print(json.dumps(doc, indent=2))
    else:
        print(f"# {curve.kind.value}  n={curve.n}"
              + (f"  snr={curve.snr:g}" if curve.snr is not None else "")
              + (f"  mar={curve.mar:g}" if curve.mar is not None else ""))
        print("k,m")
        for k, m in curve.points:
            print(f"{k},{m!r}")
    return EXIT_OK


def _cmd_trial(args) -> int:
    seed = args.seed if args.seed is not None else DEFAULT_MASTER_SEED
    rng = trial_rng(seed, args.n, args.k, args.m, 0, "ml", args.index)
    signal = make_signal(args.n, args.k, args.m, args.snr, args.mar, rng,
                         sign_rule="all_positive" if args.positive else "random")
    instance = synthesize(signal, args.m, rng, noiseless=args.noiseless)
    print(f"n={args.n} k={args.k} m={args.m} snr={args.snr:g} mar={args.mar:g} "
          f"seed={seed} trial={args.index}{' noiseless' if args.noiseless else ''}")
    print(f"true support: {list(signal.support)}")
    print(f"true values:  {np.array2string(signal.values, precision=4)}")
    estimators = ("ml", "mc") if args.estimator == "both" else (args.estimator,)
    code = EXIT_OK
    for name in estimators:
        if name == "ml":
            est = ml_estimate(instance, guard=args.guard)
            extra = f"energy={est.energy:.6g}"
        else:
            est = mc_estimate(instance)
            extra = "correlations=" + np.array2string(est.correlations, precision=4)
        hit = is_exact_recovery(est, signal)
        tie = " tie!" if est.tie else ""
        print(f"{name}: support={list(est.support)} {extra} "
              f"recovered={'yes' if hit else 'no'}{tie}")
    if args.certificate:
        report = ml_failure_certificate(instance)
        if report.fired:
            print(f"certificate: FIRED swap {report.witness_in}->{report.witness_out} "
                  f"margin={report.margin:.6g}")
        else:
            print("certificate: silent")
    return code


_VERIFY_PARAMS = {
    VerifierKind.MAX_GAUSS_SQ: ("n", "trials"),
    VerifierKind.CHISQ_MAX_MIN: ("r", "n", "trials"),
    VerifierKind.BETA_PROJECTION: ("s", "samples"),
    VerifierKind.BETA_MAX: ("n", "s", "trials"),
}


def _cmd_verify(args) -> int:
    kinds = list(VerifierKind) if args.which == "all" else [VerifierKind(args.which)]
    seed = args.seed if args.seed is not None else DEFAULT_MASTER_SEED
    overrides = {name: getattr(args, name) for name in ("n", "r", "s", "samples", "trials")
                 if getattr(args, name) is not None}
    all_ok = True
    for kind in kinds:
        params = {key: overrides[key] for key in _VERIFY_PARAMS[kind] if key in overrides}
        result = run_verifier(kind, rng=verifier_rng(seed, kind), **params)
        all_ok &= result.passed
        print(f"{'PASS' if result.passed else 'FAIL'} {kind.value}: {result.details}")
    return EXIT_OK if all_ok else EXIT_VERIFIER_FAILED


def _cmd_plot(args) -> int:
    from .plotting import overlay_curves
    results = read_results_csv(args.results)
    curves = []
    if args.curves:
        curves = [CurveKind(tok.strip()) for tok in args.curves.split(",") if tok.strip()]
    for path in overlay_curves(results, curves=curves, out_dir=args.out,
                               fmt=args.fmt):
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="supportlab",
                     description="sparse support recovery workbench")
    parser.add_argument("--version", action="version",
                        version=f"supportlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a sweep from a JSON config")
    sweep.add_argument("--config", required=True, help="JSON sweep description")
    sweep.add_argument("--out", help="results CSV path (default from config, else results.csv)")
    sweep.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: SUPPORTLAB_WORKERS or CPU count)")
    sweep.add_argument("--seed", type=int, default=None, help="override the master seed")
    sweep.add_argument("--progress", action="store_true", help="print per-cell progress")
    sweep.set_defaults(func=_cmd_sweep)

    repro = sub.add_parser("repro", help="run a bundled phase-transition study")
    repro.add_argument("study", choices=("fig1", "fig2", "fig3"))
    repro.add_argument("--full", action="store_true",
                       help="dense grids and the full scenario cross (slow)")
    repro.add_argument("--trials", type=int, default=None, help="trials per cell")
    repro.add_argument("--out", help="output directory (default repro_<study>)")
    repro.add_argument("--workers", type=int, default=None)
    repro.add_argument("--seed", type=int, default=None)
    repro.add_argument("--fmt", default="svg", choices=("svg", "png", "pdf"))
    repro.add_argument("--no-plot", action="store_true", help="skip rendering heatmaps")
    repro.add_argument("--quiet", action="store_true", help="suppress per-cell progress")
    repro.set_defaults(func=_cmd_repro)

    curve = sub.add_parser("curve", help="evaluate a threshold curve")
    curve.add_argument("--kind", required=True,
                       choices=[c.value for c in CurveKind])
    curve.add_argument("--n", type=int, required=True)
    curve.add_argument("--k", required=True, help='grid like "1..10" or "2,5,10"')
    curve.add_argument("--snr", type=float, default=None)
    curve.add_argument("--mar", type=float, default=None)
    curve.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    curve.set_defaults(func=_cmd_curve)

    trial = sub.add_parser("trial", help="run one instance and print the estimates")
    trial.add_argument("--n", type=int, required=True)
    trial.add_argument("--k", type=int, required=True)
    trial.add_argument("--m", type=int, required=True)
    trial.add_argument("--snr", type=float, required=True)
    trial.add_argument("--mar", type=float, default=1.0)
    trial.add_argument("--estimator", choices=("ml", "mc", "both"), default="both")
    trial.add_argument("--seed", type=int, default=None)
    trial.add_argument("--index", type=int, default=0, help="trial index within the seed's stream")
    trial.add_argument("--noiseless", action="store_true", help="zero the noise draw")
    trial.add_argument("--positive", action="store_true", help="all-positive signs")
    trial.add_argument("--certificate", action="store_true",
                       help="also run the exhaustive-failure certificate")
    trial.add_argument("--guard", type=int, default=2_000_000,
                       help="subset guard for the exhaustive estimator")
    trial.set_defaults(func=_cmd_trial)

    verify = sub.add_parser("verify", help="run the order-statistics verifiers")
    verify.add_argument("which", nargs="?", default="all",
                        choices=["all"] + [v.value for v in VerifierKind])
    verify.add_argument("--seed", type=int, default=None)
    verify.add_argument("--n", type=int, default=None)
    verify.add_argument("--r", type=int, default=None)
    verify.add_argument("--s", type=int, default=None)
    verify.add_argument("--samples", type=int, default=None)
    verify.add_argument("--trials", type=int, default=None)
    verify.set_defaults(func=_cmd_verify)

    plot = sub.add_parser("plot", help="render heatmaps from a results CSV")
    plot.add_argument("--results", required=True, help="CSV produced by sweep/repro")
    plot.add_argument("--curves", default="",
                      help="comma list of overlays: " + ",".join(c.value for c in CurveKind))
    plot.add_argument("--out", default=".", help="output directory")
    plot.add_argument("--fmt", default="svg", choices=("svg", "png", "pdf"))
    plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GuardExceededError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SupportLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not crashes
        print(f"unexpected failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
