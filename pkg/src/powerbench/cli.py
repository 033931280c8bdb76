"""powerbench command-line interface.

    powerbench analyze MANIFEST --out DIR
    powerbench compare MANIFEST MANIFEST [...] --out DIR
    powerbench synth SPEC OUT_DIR

Exit codes: 0 success, 1 validation/parse error, 2 metric-domain error,
3 I/O error. Warnings go to stderr and never change the exit code.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report
from .errors import PowerbenchError
from .reliability import DEFAULT_CV_FLOOR, ReliabilityWeights


def _weights(text: str) -> ReliabilityWeights:
    try:
        return ReliabilityWeights.parse(text)
    except PowerbenchError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be > 0: {text!r}")
    return x


def _add_metric_options(p: argparse.ArgumentParser):
    p.add_argument("--out", "-o", required=True, type=Path, help="output directory")
    p.add_argument("--weights", type=_weights, default=ReliabilityWeights(),
                   help="f_R weights w1,w2,w3 (default 1,1,1)")
    p.add_argument("--grid-dt", type=_positive, default=None,
                   help="common grid step in seconds (default: median of run median intervals)")
    p.add_argument("--include-failed-in-c13", action=argparse.BooleanOptionalAction, default=True,
                   help="average c1/c3 over all runs (default) or successful runs only")
    p.add_argument("--cv-floor", type=_positive, default=DEFAULT_CV_FLOOR,
                   help="exclude grid samples whose mean power magnitude is below this (W)")
    p.add_argument("--level", type=float, default=0.95, help="confidence-band level")


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors; argparse's default status 2 is taken
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="powerbench",
        description="Energy, reliability and wear metrics for robot programs from power recordings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze one experiment manifest")
    p.add_argument("manifest", type=Path)
    _add_metric_options(p)

    p = sub.add_parser("compare", help="compare programs across manifests")
    p.add_argument("manifests", type=Path, nargs="+")
    _add_metric_options(p)
    p.add_argument("--metric", default="f_U", choices=report.PER_RUN_METRICS,
                   help="per-run metric used for paired t-tests (default f_U)")
    p.add_argument("--unpaired-summary", action="store_true",
                   help="skip paired t-tests (allows unequal run counts)")

    p = sub.add_parser("synth", help="write a synthetic experiment from a scenario spec")
    p.add_argument("spec", type=Path)
    p.add_argument("out_dir", type=Path)
    return parser


def _options(args) -> report.AnalysisOptions:
    return report.AnalysisOptions(
        weights=args.weights,
        grid_dt=args.grid_dt,
        include_failed_in_c13=args.include_failed_in_c13,
        cv_floor=args.cv_floor,
        level=args.level,
    )


def _warn(messages):
    for m in messages:
        print(f"warning: {m}", file=sys.stderr)


def cmd_analyze(args) -> int:
    rep = report.analyze_manifest(args.manifest, _options(args))
    report.write_analysis(rep, args.out)
    _warn(rep.warnings)
    agg = rep.aggregate()
    print(f"{rep.label}: {rep.n_runs} runs, {rep.energy.n_succ} successful")
    print(report.format_table(list(agg), [list(agg.values())]))
    if rep.wear is not None:
        print(f"alpha form: {rep.wear.form}")
    return 0


def cmd_compare(args) -> int:
    if len(args.manifests) < 2:
        print("error: compare needs at least two manifests", file=sys.stderr)
        return 1
    reps = report.analyze_manifests(args.manifests, _options(args))
    cmp = report.compare(reps, args.metric, paired=not args.unpaired_summary)
    for r in reps:
        _warn(f"{r.label}: {w}" for w in r.warnings)
    _warn(cmp.warnings)
    for r in reps:
        report.write_analysis(r, args.out / r.label.replace("@", "_").replace("#", "_"))
    report.write_comparison(cmp, args.out)
    header, rows = cmp.table()
    print(report.format_table(header, rows))
    if cmp.tests:
        print()
        print(report.format_table(
            ["condition", "a", "b", "t", "p", "p<0.05"],
            [[t.condition_id, t.a, t.b,
              t.result.t_statistic if t.result else None,
              t.result.p_value if t.result else None,
              t.result.significant_at_0_05 if t.result else None] for t in cmp.tests],
        ))
    forms = {r.wear.form for r in reps if r.wear is not None}
    if forms:
        print(f"alpha form: {', '.join(sorted(forms))}")
    return 0


def cmd_synth(args) -> int:
    from .synthgen import load_spec, write_synthetic

    spec = load_spec(args.spec)
    manifest = write_synthetic(spec, args.out_dir)
    print(f"wrote {spec.n_runs} runs; manifest {manifest}")
    return 0


COMMANDS = {"analyze": cmd_analyze, "compare": cmd_compare, "synth": cmd_synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except PowerbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
