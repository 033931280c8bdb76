"""Synthetic machine-tending study: four programs under two idle conditions.

Programs A-C differ only in how much motion power they draw; program D has
the same motion as A but three of its runs collide and stop early. Each
program is generated for a 10 s and a 100 s idle phase, written to disk,
re-loaded through the manifest path and compared.

    python scripts/machine_tending_study.py --out /tmp/study
"""

import argparse
from pathlib import Path

from powerbench.report import analyze_manifests, compare, format_table, write_analysis, write_comparison
from powerbench.synthgen import machine_tending_spec, write_synthetic

PROGRAMS = {
    "A": dict(motion_scale=1.0),
    "B": dict(motion_scale=1.15),
    "C": dict(motion_scale=0.8),
    "D": dict(motion_scale=1.0, faulty_runs=(2, 5, 8)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise", type=float, default=1.0, help="power noise sigma in W")
    ap.add_argument("--metric", default="f_U", help="per-run metric for paired t-tests")
    args = ap.parse_args()

    manifests = []
    for idle in (10.0, 100.0):
        for k, (prog, kw) in enumerate(PROGRAMS.items()):
            spec = machine_tending_spec(idle_s=idle, n_runs=args.runs, noise_std_w=args.noise,
                                        seed=args.seed + 97 * k + int(idle), program_id=prog, **kw)
            manifests.append(write_synthetic(spec, args.out / "data" / f"{prog}_idle{idle:g}s"))

    reports = analyze_manifests(manifests)
    cmp = compare(reports, args.metric)
    for r in reports:
        write_analysis(r, args.out / "results" / r.label.replace("@", "_"))
    write_comparison(cmp, args.out / "results")

    header, rows = cmp.table()
    print(format_table(header, rows))
    print()
    print(format_table(
        ["condition", "a", "b", f"t ({args.metric})", "p", "p<0.05"],
        [[t.condition_id, t.a, t.b, t.result.t_statistic, t.result.p_value, t.result.significant_at_0_05]
         for t in cmp.tests if t.result is not None],
    ))
    print()
    for (cond, metric), entries in cmp.rankings.items():
        if metric == "f_R":
            print(f"{cond} f_R ranking: " + " > ".join(e.program_id for e in entries))
    print(f"\nresults written to {args.out / 'results'}")


if __name__ == "__main__":
    main()
