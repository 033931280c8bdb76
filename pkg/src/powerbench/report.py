"""End-to-end analysis of experiment sets and multi-program comparison.

Data files carry full-precision numbers; only `format_table` rounds.
"""

from __future__ import annotations

import itertools
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import energy, reliability, stats, wear
from .core import ExperimentSet
from .errors import MetricDomainError, PowerbenchWarning, ValidationError, WearUnavailableError
from .ingest import _write_text, format_float, load_experiment, parallel_enabled, write_csv
from .reliability import DEFAULT_CV_FLOOR, ReliabilityWeights

ENERGY_COLUMNS = ["E_B", "E_R", "f_U"]
CONVERSION_COLUMNS = ["E_MP", "f_C"]
RELIABILITY_COLUMNS = ["c1", "c2", "c3", "f_R"]

# metric -> True when larger is better
RANKED_METRICS = {"E_R": False, "f_U": True, "f_C": True, "f_R": True, "alpha_S": False}
# per-run columns usable for paired tests
PER_RUN_METRICS = ("E_B", "E_R", "f_U", "E_MP", "f_C", "c1", "c3", "alpha")


@dataclass(frozen=True)
class AnalysisOptions:
    weights: ReliabilityWeights = ReliabilityWeights()
    grid_dt: float | None = None
    include_failed_in_c13: bool = True
    cv_floor: float = DEFAULT_CV_FLOOR
    level: float = 0.95


@dataclass(eq=False)
class MetricReport:
    program_id: str
    condition_id: str
    options: AnalysisOptions
    energy: energy.EnergyAggregate
    reliability: reliability.ReliabilityResult
    band: stats.BandProfile
    heatmap_power: np.ndarray
    wear: wear.WearResult | None = None
    heatmap_alpha: np.ndarray | None = None
    warnings: list[str] = field(default_factory=list)
    durations: tuple[float, ...] = ()
    label: str = ""

    def __post_init__(self):
        if not self.label:
            self.label = f"{self.program_id}@{self.condition_id}"

    @property
    def has_conversion(self) -> bool:
        return self.energy.mean.E_MP is not None

    @property
    def n_runs(self) -> int:
        return len(self.energy.run_ids)

    def columns(self) -> list[str]:
        cols = list(ENERGY_COLUMNS)
        if self.has_conversion:
            cols += CONVERSION_COLUMNS
        cols += RELIABILITY_COLUMNS
        if self.wear is not None:
            cols.append("alpha")
        return cols

    def run_rows(self) -> list[dict]:
        rel = self.reliability
        rows = []
        for k, (rid, ok, res) in enumerate(zip(self.energy.run_ids, self.energy.success, self.energy.per_run)):
            row = {"id": rid, "success": ok, "duration_s": self.durations[k], "dropped_s": rel.dropped_s[k]}
            row.update(E_B=res.E_B, E_R=res.E_R, f_U=res.f_U)
            if self.has_conversion:
                row.update(E_MP=res.E_MP, f_C=res.f_C)
            row.update(c1=rel.c1[k], c3=rel.c3[k])
            if self.wear is not None:
                row["alpha"] = self.wear.per_run[k]
            rows.append(row)
        return rows

    def aggregate(self) -> dict:
        m = self.energy.mean
        rel = self.reliability
        agg = {"E_B": m.E_B, "E_R": m.E_R, "f_U": m.f_U}
        if self.has_conversion:
            agg.update(E_MP=m.E_MP, f_C=m.f_C)
        agg.update(c1=rel.c1_mean, c2=rel.c2, c3=rel.c3_mean, f_R=rel.f_R)
        if self.wear is not None:
            agg["alpha_S"] = self.wear.alpha_S
        return agg

    def per_run_metric(self, name: str) -> list[float]:
        if name not in PER_RUN_METRICS:
            raise ValidationError(f"unknown per-run metric {name!r}; choose from {', '.join(PER_RUN_METRICS)}")
        vals = [row.get(name) for row in self.run_rows()]
        if any(v is None for v in vals):
            raise MetricDomainError(f"{self.label}: per-run {name} unavailable")
        return vals

    def to_dict(self) -> dict:
        o = self.options
        rel = self.reliability
        grid = rel.grid
        return {
            "program_id": self.program_id,
            "condition_id": self.condition_id,
            "n_runs": self.n_runs,
            "n_succ": self.energy.n_succ,
            "options": {
                "weights": [o.weights.w1, o.weights.w2, o.weights.w3],
                "grid_dt": o.grid_dt,
                "include_failed_in_c13": o.include_failed_in_c13,
                "cv_floor": o.cv_floor,
                "level": o.level,
            },
            "grid": {"n_points": int(grid.size), "step_s": float(grid[1] - grid[0]), "end_s": float(grid[-1])},
            "alpha_form": self.wear.form if self.wear is not None else None,
            "runs": self.run_rows(),
            "aggregate": self.aggregate(),
            "warnings": list(self.warnings),
        }


def analyze_set(experiment: ExperimentSet, options: AnalysisOptions = AnalysisOptions()) -> MetricReport:
    """Run every metric on one experiment set; warnings are collected into the report."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PowerbenchWarning)
        report = _analyze(experiment, options)
    notes = [str(w.message) for w in caught if issubclass(w.category, PowerbenchWarning)]
    report.warnings[:0] = notes
    return report


def _analyze(experiment: ExperimentSet, options: AnalysisOptions) -> MetricReport:
    notes = []
    en = energy.aggregate_energy(experiment)
    if not any(r.has_telemetry for r in experiment.runs):
        notes.append("no joint telemetry: E_MP, f_C and alpha_S omitted")
    rel = reliability.evaluate_reliability(
        experiment,
        weights=options.weights,
        grid_dt=options.grid_dt,
        include_failed_in_c13=options.include_failed_in_c13,
        cv_floor=options.cv_floor,
    )
    for rid, d in zip(rel.run_ids, rel.dropped_s):
        if d > 0.5 * (rel.grid[1] - rel.grid[0]):
            notes.append(f"run {rid}: {d:.6g} s beyond the common grid dropped")
    band = stats.confidence_band(experiment, rel.grid, options.level)
    hm_power = stats.heatmap_matrix(experiment, "power", rel.grid)

    wr = hm_alpha = None
    if any(r.has_telemetry for r in experiment.runs):
        try:
            wr = wear.alpha_stress(experiment)
        except WearUnavailableError as exc:
            notes.append(f"wear unavailable: {exc}")
        else:
            hm_alpha = stats.heatmap_matrix(experiment, "alpha", rel.grid, wr)

    return MetricReport(
        program_id=experiment.program_id,
        condition_id=experiment.condition_id,
        options=options,
        energy=en,
        reliability=rel,
        band=band,
        heatmap_power=hm_power,
        wear=wr,
        heatmap_alpha=hm_alpha,
        warnings=notes,
        durations=tuple(r.duration for r in experiment.runs),
    )


def analyze_manifest(path, options: AnalysisOptions = AnalysisOptions()) -> MetricReport:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PowerbenchWarning)
        experiment = load_experiment(path)
    report = analyze_set(experiment, options)
    report.warnings[:0] = [str(w.message) for w in caught if issubclass(w.category, PowerbenchWarning)]
    return report


def analyze_manifests(paths: Sequence, options: AnalysisOptions = AnalysisOptions()) -> list[MetricReport]:
    if parallel_enabled() and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=min(len(paths), 8)) as pool:
            return list(pool.map(analyze_manifest, paths, itertools.repeat(options)))
    return [analyze_manifest(p, options) for p in paths]


# -- writing analysis outputs ---------------------------------------------------


def _dump_json(obj, path: Path):
    _write_text(path, json.dumps(obj, indent=2, allow_nan=False) + "\n")


def write_analysis(report: MetricReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    written = []
    _dump_json(report.to_dict(), out / "metrics.json")
    written.append(out / "metrics.json")

    cols = report.columns()
    header = ["run_id", "success", "duration_s", "dropped_s"] + cols
    rows = [
        [row["id"], row["success"], row["duration_s"], row["dropped_s"]] + [row.get(c) for c in cols]
        for row in report.run_rows()
    ]
    agg = report.aggregate()
    agg_row = ["aggregate", None, None, None] + [agg.get("alpha_S" if c == "alpha" else c) for c in cols]
    rows.append(agg_row)
    write_csv(out / "metrics.csv", header, rows)
    written.append(out / "metrics.csv")

    rel = report.reliability
    write_csv(out / "mean_profile.csv", ["t_s", "power_w"], zip(rel.grid.tolist(), rel.mean_profile.values.tolist()))
    written.append(out / "mean_profile.csv")

    b = report.band
    write_csv(
        out / "ci_band.csv",
        ["t_s", "mean_w", "lower_w", "upper_w"],
        zip(b.grid.tolist(), b.mean.tolist(), b.lower.tolist(), b.upper.tolist()),
    )
    written.append(out / "ci_band.csv")

    grid_header = ["run_id"] + [format_float(t) for t in rel.grid.tolist()]
    for name, matrix in (("heatmap_power.csv", report.heatmap_power), ("heatmap_alpha.csv", report.heatmap_alpha)):
        if matrix is None:
            continue
        write_csv(out / name, grid_header, ([rid] + vals for rid, vals in zip(rel.run_ids, matrix.tolist())))
        written.append(out / name)
    return written


# -- comparison ----------------------------------------------------------------


@dataclass(frozen=True)
class PairTest:
    condition_id: str
    a: str
    b: str
    metric: str
    result: stats.TTestResult | None
    note: str = ""


@dataclass(frozen=True)
class RankEntry:
    rank: int
    label: str
    program_id: str
    value: float | None
    tied_with: tuple[str, ...] = ()


@dataclass(eq=False)
class ComparisonReport:
    reports: list[MetricReport]
    metric: str
    paired: bool
    tests: list[PairTest]
    rankings: dict[tuple[str, str], list[RankEntry]]  # (condition, metric) -> entries
    warnings: list[str] = field(default_factory=list)

    def table(self) -> tuple[list[str], list[list]]:
        cols = []
        for r in self.reports:
            for c in r.aggregate():
                if c not in cols:
                    cols.append(c)
        order = ENERGY_COLUMNS + CONVERSION_COLUMNS + RELIABILITY_COLUMNS + ["alpha_S"]
        cols = [c for c in order if c in cols]
        header = ["label", "program_id", "condition_id", "n_runs", "n_succ"] + cols
        rows = []
        for r in self.reports:
            agg = r.aggregate()
            rows.append([r.label, r.program_id, r.condition_id, r.n_runs, r.energy.n_succ] + [agg.get(c) for c in cols])
        return header, rows

    def to_dict(self) -> dict:
        header, rows = self.table()
        return {
            "metric": self.metric,
            "paired": self.paired,
            "sets": [dict(zip(header, row)) for row in rows],
            "t_tests": [
                {
                    "condition_id": t.condition_id,
                    "a": t.a,
                    "b": t.b,
                    "metric": t.metric,
                    "t_statistic": t.result.t_statistic if t.result else None,
                    "degrees_of_freedom": t.result.degrees_of_freedom if t.result else None,
                    "p_value": t.result.p_value if t.result else None,
                    "significant_at_0_05": t.result.significant_at_0_05 if t.result else None,
                    "note": t.note,
                }
                for t in self.tests
            ],
            "rankings": [
                {
                    "condition_id": cond,
                    "metric": metric,
                    "higher_is_better": RANKED_METRICS[metric],
                    "order": [
                        {"rank": e.rank, "label": e.label, "program_id": e.program_id,
                         "value": e.value, "tied_with": list(e.tied_with)}
                        for e in entries
                    ],
                }
                for (cond, metric), entries in self.rankings.items()
            ],
            "warnings": list(self.warnings),
        }


def _unique_labels(reports: Sequence[MetricReport]):
    seen: dict[str, int] = {}
    for r in reports:
        base = f"{r.program_id}@{r.condition_id}"
        seen[base] = seen.get(base, 0) + 1
        r.label = base if seen[base] == 1 else f"{base}#{seen[base]}"


def rank(reports: Sequence[MetricReport], metric: str) -> list[RankEntry]:
    """Order by metric (best first); exact ties are broken by program_id, then label."""
    higher = RANKED_METRICS[metric]
    avail = [(r.aggregate().get(metric), r) for r in reports]
    present = [(v, r) for v, r in avail if v is not None]
    missing = [r for v, r in avail if v is None]
    present.sort(key=lambda vr: (-vr[0] if higher else vr[0], vr[1].program_id, vr[1].label))
    entries = []
    for k, (v, r) in enumerate(present, start=1):
        ties = tuple(o.label for w, o in present if w == v and o is not r)
        entries.append(RankEntry(k, r.label, r.program_id, v, ties))
    for k, r in enumerate(sorted(missing, key=lambda r: (r.program_id, r.label)), start=len(present) + 1):
        entries.append(RankEntry(k, r.label, r.program_id, None))
    return entries


def compare(reports: Sequence[MetricReport], metric: str = "f_U", paired: bool = True) -> ComparisonReport:
    reports = list(reports)
    if len(reports) < 2:
        raise ValidationError("compare needs at least two experiment sets")
    if metric not in PER_RUN_METRICS:
        raise ValidationError(f"unknown per-run metric {metric!r}; choose from {', '.join(PER_RUN_METRICS)}")
    _unique_labels(reports)
    groups: dict[str, list[MetricReport]] = {}
    for r in reports:
        groups.setdefault(r.condition_id, []).append(r)

    notes = []
    tests = []
    if paired:
        for cond, members in groups.items():
            for a, b in itertools.combinations(members, 2):
                if a.n_runs != b.n_runs:
                    raise ValidationError(
                        f"cannot pair {a.label} ({a.n_runs} runs) with {b.label} ({b.n_runs} runs); "
                        "use --unpaired-summary to skip paired tests"
                    )
        if all(len(m) < 2 for m in groups.values()):
            notes.append("no two sets share a condition; no paired tests run")
        for cond, members in groups.items():
            for a, b in itertools.combinations(members, 2):
                try:
                    res = stats.paired_t_test(a.per_run_metric(metric), b.per_run_metric(metric))
                    tests.append(PairTest(cond, a.label, b.label, metric, res))
                except MetricDomainError as exc:
                    notes.append(f"{a.label} vs {b.label}: {exc}")
                    tests.append(PairTest(cond, a.label, b.label, metric, None, str(exc)))

    rankings = {}
    for cond, members in groups.items():
        for m in RANKED_METRICS:
            if any(m in r.aggregate() for r in members):
                entries = rank(members, m)
                rankings[(cond, m)] = entries
                tied = [e for e in entries if e.tied_with]
                if tied:
                    notes.append(
                        f"{cond} {m}: tie between {', '.join(e.label for e in tied)} "
                        "(broken by program_id)"
                    )
    return ComparisonReport(reports, metric, paired, tests, rankings, notes)


def write_comparison(cmp: ComparisonReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    _dump_json(cmp.to_dict(), out / "comparison.json")
    header, rows = cmp.table()
    write_csv(out / "comparison.csv", header, rows)
    write_csv(
        out / "ttests.csv",
        ["condition_id", "a", "b", "metric", "t_statistic", "degrees_of_freedom", "p_value", "significant_at_0_05", "note"],
        (
            [t.condition_id, t.a, t.b, t.metric]
            + ([t.result.t_statistic, t.result.degrees_of_freedom, t.result.p_value, t.result.significant_at_0_05]
               if t.result else [None] * 4)
            + [t.note]
            for t in cmp.tests
        ),
    )
    write_csv(
        out / "rankings.csv",
        ["condition_id", "metric", "rank", "label", "program_id", "value", "tied_with"],
        (
            [cond, metric, e.rank, e.label, e.program_id, e.value, ";".join(e.tied_with)]
            for (cond, metric), entries in cmp.rankings.items()
            for e in entries
        ),
    )
    return [out / n for n in ("comparison.json", "comparison.csv", "ttests.csv", "rankings.csv")]


def _fmt(v, digits=4) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(v)
    av = abs(v)
    if av != 0 and (av >= 1e5 or av < 1e-3):
        return f"{v:.{digits - 1}e}"
    if av >= 100:
        return f"{v:.1f}"
    return f"{v:.{digits}f}"


def format_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Fixed-width human-readable table (the only place numbers are rounded)."""
    cells = [[str(h) for h in header]] + [[c if isinstance(c, str) else _fmt(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
