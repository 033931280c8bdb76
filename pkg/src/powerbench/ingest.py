"""Reading and writing recordings and experiment manifests.

Power recordings are CSV files with header ``t_s,power_w``; joint telemetry
is CSV with header ``t_s,joint,torque_nm,vel_rad_s`` optionally followed by
the ``i_target_a,i_actual_a,temp_c`` group. A manifest is a JSON document
naming the program, condition, robot constants, optional wear parameters
and the list of runs. Relative file paths resolve against the manifest's
directory. Every loaded series is re-based so its first sample is t = 0.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import ExperimentSet, JointTelemetry, RobotConstants, Run, TimeSeries
from .errors import OutputError, ParseError, PowerbenchError, PowerbenchWarning, ValidationError
from .wear import DEFAULT_FORM, JointWearParams, OmegaModel, WearParams

POWER_HEADER = ["t_s", "power_w"]
TELEMETRY_HEADER = ["t_s", "joint", "torque_nm", "vel_rad_s"]
CURRENT_GROUP = ["i_target_a", "i_actual_a", "temp_c"]


def format_float(x: float) -> str:
    """17 significant digits: parses back to the identical double."""
    return format(float(x), ".17g")


def parallel_enabled() -> bool:
    return os.environ.get("POWERBENCH_NO_PARALLEL", "") != "1"


def _read_rows(path: Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc})") from None
    except OSError as exc:
        raise OutputError(f"{path}: cannot read ({exc.strerror or exc})") from None
    rows = [[c.strip() for c in r] for r in rows]
    if not rows:
        raise ParseError(f"{path}: empty file, missing header")
    header, body = rows[0], rows[1:]
    data = [(i, r) for i, r in enumerate(body, start=1) if any(r)]
    return header, data


def _number(path: Path, row: int, column: str, cell: str) -> float:
    try:
        x = float(cell)
    except ValueError:
        raise ParseError(
            f"{path}: data row {row} (line {row + 1}), column {column!r}: "
            f"cannot parse {cell!r} as a number"
        ) from None
    if not math.isfinite(x):
        raise ParseError(f"{path}: data row {row}, column {column!r}: non-finite value {cell!r}")
    return x


def _matrix(path: Path, header: Sequence[str], data) -> np.ndarray:
    """All data cells as a float array; bad cells are reported by row and column."""
    width = len(header)
    for row, cells in data:
        if len(cells) != width:
            raise ParseError(f"{path}: data row {row} has {len(cells)} fields, expected {width}")
    try:
        arr = np.array([cells for _, cells in data], dtype=np.float64)
        if np.isfinite(arr).all():
            return arr
    except ValueError:
        pass
    # slow path: locate the offending cell (or accept spellings numpy rejects)
    return np.array([[_number(path, row, col, c) for col, c in zip(header, cells)] for row, cells in data])


def _check_increasing(path: Path, t: np.ndarray, rows: Sequence[int], what: str = ""):
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise ValidationError(
            f"{path}: {what}timestamps not strictly increasing at data row {rows[i]} "
            f"({t[i - 1]!r} -> {t[i]!r})"
        )


def load_power_csv(path) -> TimeSeries:
    path = Path(path)
    header, data = _read_rows(path)
    if header != POWER_HEADER:
        raise ParseError(f"{path}: expected header {','.join(POWER_HEADER)!r}, got {','.join(header)!r}")
    if len(data) < 2:
        raise ParseError(f"{path}: need at least 2 data rows, found {len(data)}")
    arr = _matrix(path, header, data)
    t, v = arr[:, 0], arr[:, 1]
    _check_increasing(path, t, [r for r, _ in data])
    return TimeSeries(t - t[0], v)


def load_telemetry_csv(path, n_j: int) -> list[JointTelemetry]:
    path = Path(path)
    header, data = _read_rows(path)
    if header == TELEMETRY_HEADER:
        has_currents = False
    elif header == TELEMETRY_HEADER + CURRENT_GROUP:
        has_currents = True
    else:
        raise ParseError(
            f"{path}: expected header {','.join(TELEMETRY_HEADER)}[,{','.join(CURRENT_GROUP)}], "
            f"got {','.join(header)!r}"
        )
    if not data:
        raise ParseError(f"{path}: no data rows")
    arr = _matrix(path, header, data)
    rows = np.array([r for r, _ in data])
    jcol = arr[:, 1]
    bad = np.flatnonzero((jcol != np.floor(jcol)) | (jcol < 0) | (jcol >= n_j))
    if bad.size:
        k = int(bad[0])
        raise ValidationError(
            f"{path}: data row {rows[k]}: joint index {data[k][1][1]} outside 0..{n_j - 1}"
        )
    joints, counts = np.unique(jcol.astype(int), return_counts=True)
    if len(set(counts.tolist())) > 1:
        lengths = dict(zip(joints.tolist(), counts.tolist()))
        raise ValidationError(f"{path}: ragged per-joint sample counts {lengths}")
    t0 = arr[:, 0].min()

    out = []
    for j in joints.tolist():
        sel = np.flatnonzero(jcol == j)
        sel = sel[np.argsort(arr[sel, 0], kind="stable")]
        if sel.size < 2:
            raise ValidationError(f"{path}: joint {j} has fewer than 2 samples")
        a = arr[sel]
        _check_increasing(path, a[:, 0], rows[sel].tolist(), f"joint {j} ")
        t = a[:, 0] - t0
        extra = {}
        if has_currents:
            extra = dict(
                current_target=TimeSeries(t, a[:, 4]),
                current_actual=TimeSeries(t, a[:, 5]),
                temperature=TimeSeries(t, a[:, 6]),
            )
        out.append(JointTelemetry(j, TimeSeries(t, a[:, 2]), TimeSeries(t, a[:, 3]), **extra))
    return out


# -- manifests ---------------------------------------------------------------


@dataclass(frozen=True)
class RunEntry:
    id: str
    power_file: Path
    telemetry_file: Path | None
    success: bool


@dataclass(frozen=True)
class ExperimentManifest:
    path: Path
    program_id: str
    condition_id: str
    constants: RobotConstants
    wear: WearParams | None
    runs: tuple[RunEntry, ...]


class _Fields:
    """Typed access to one JSON object, tracking which keys were consumed."""

    def __init__(self, obj: Any, where: str, unknown: list[str]):
        if not isinstance(obj, dict):
            raise ParseError(f"{where}: expected an object, got {type(obj).__name__}")
        self.obj, self.where, self.unknown, self.seen = obj, where, unknown, set()

    def _get(self, key, default, required):
        self.seen.add(key)
        if key not in self.obj:
            if required:
                raise ParseError(f"{self.where}: missing required field {key!r}")
            return default
        return self.obj[key]

    def str(self, key, default=None, required=True) -> str:
        v = self._get(key, default, required)
        if v is not default and not isinstance(v, str):
            raise ParseError(f"{self.where}.{key}: expected a string, got {v!r}")
        return v

    def num(self, key, default=None, required=True) -> float:
        v = self._get(key, default, required)
        if v is default:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ParseError(f"{self.where}.{key}: expected a finite number, got {v!r}")
        return float(v)

    def int(self, key, default=None, required=True) -> int:
        v = self._get(key, default, required)
        if v is default:
            return v
        if isinstance(v, bool) or not isinstance(v, int):
            raise ParseError(f"{self.where}.{key}: expected an integer, got {v!r}")
        return v

    def bool(self, key, default=None, required=True) -> bool:
        v = self._get(key, default, required)
        if v is not default and not isinstance(v, bool):
            raise ParseError(f"{self.where}.{key}: expected true/false, got {v!r}")
        return v

    def raw(self, key, default=None, required=True):
        return self._get(key, default, required)

    def done(self):
        self.unknown.extend(f"{self.where}.{k}" for k in self.obj if k not in self.seen)


def _parse_wear(obj, unknown) -> WearParams:
    f = _Fields(obj, "wear", unknown)
    form = f.str("form", DEFAULT_FORM, required=False)
    joints_raw = f.raw("joints")
    if not isinstance(joints_raw, list) or not joints_raw:
        raise ParseError("wear.joints: expected a non-empty list")
    joints = {}
    for k, jobj in enumerate(joints_raw):
        jf = _Fields(jobj, f"wear.joints[{k}]", unknown)
        idx = jf.int("joint")
        if idx in joints:
            raise ValidationError(f"wear.joints[{k}]: duplicate joint {idx}")
        omega_obj = jf.raw("omega", None, required=False)
        omega = OmegaModel()
        if omega_obj is not None:
            of = _Fields(omega_obj, f"wear.joints[{k}].omega", unknown)
            omega = OmegaModel(
                of.num("offset", 1.0, False), of.num("v_coeff", 0.0, False), of.num("t_coeff", 0.0, False)
            )
            of.done()
        joints[idx] = JointWearParams(jf.num("phi"), jf.num("tau_k"), jf.num("tau_max"), omega)
        jf.done()
    f.done()
    return WearParams(joints, form)


def parse_manifest(doc: Any, path: Path) -> ExperimentManifest:
    unknown: list[str] = []
    f = _Fields(doc, "manifest", unknown)
    program_id = f.str("program_id")
    condition_id = f.str("condition_id")
    cf = _Fields(f.raw("constants"), "constants", unknown)
    constants = RobotConstants(
        p_e=cf.num("P_E"),
        p_mb=cf.num("P_MB"),
        n_j=cf.int("n_J"),
        delta_e_p=cf.num("delta_E_P", 0.0, False),
        delta_e_k=cf.num("delta_E_K", 0.0, False),
    )
    cf.done()
    wear_obj = f.raw("wear", None, required=False)
    wear = _parse_wear(wear_obj, unknown) if wear_obj is not None else None

    runs_raw = f.raw("runs")
    if not isinstance(runs_raw, list):
        raise ParseError("manifest.runs: expected a list")
    if not runs_raw:
        raise ValidationError(f"{path}: manifest must list at least one run")
    base = path.parent
    runs, seen = [], set()
    for k, robj in enumerate(runs_raw):
        rf = _Fields(robj, f"runs[{k}]", unknown)
        rid = rf.str("id")
        if rid in seen:
            raise ValidationError(f"{path}: duplicate run id {rid!r}")
        seen.add(rid)
        tel = rf.str("telemetry_file", None, required=False)
        runs.append(
            RunEntry(
                rid,
                base / rf.str("power_file"),
                base / tel if tel is not None else None,
                rf.bool("success"),
            )
        )
        rf.done()
    f.done()
    if unknown:
        warnings.warn(
            f"{path}: ignoring unknown manifest fields: {', '.join(unknown)}",
            PowerbenchWarning,
            stacklevel=2,
        )
    return ExperimentManifest(path, program_id, condition_id, constants, wear, tuple(runs))


def load_manifest(path) -> ExperimentManifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"{path}: cannot read manifest ({exc.strerror or exc})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    manifest = parse_manifest(doc, path)
    missing = [
        str(p)
        for r in manifest.runs
        for p in (r.power_file, r.telemetry_file)
        if p is not None and not p.is_file()
    ]
    if missing:
        raise ValidationError(f"{path}: referenced files not found: {', '.join(missing)}")
    return manifest


def _load_run(entry: RunEntry, n_j: int) -> Run:
    power = load_power_csv(entry.power_file)
    joints = load_telemetry_csv(entry.telemetry_file, n_j) if entry.telemetry_file else None
    return Run(entry.id, power, entry.success, joints)


def load_experiment(manifest_path) -> ExperimentSet:
    """Load every run of a manifest; all per-file failures are reported together."""
    manifest = load_manifest(manifest_path)
    n_j = manifest.constants.n_j

    def attempt(entry):
        try:
            return _load_run(entry, n_j), None
        except PowerbenchError as exc:
            return None, f"run {entry.id!r}: {exc}"

    if parallel_enabled() and len(manifest.runs) > 1:
        with ThreadPoolExecutor(max_workers=min(8, len(manifest.runs))) as pool:
            results = list(pool.map(attempt, manifest.runs))
    else:
        results = [attempt(e) for e in manifest.runs]
    errors = [err for _, err in results if err]
    if errors:
        raise ValidationError(
            f"{manifest.path}: {len(errors)} run(s) failed to load:\n  " + "\n  ".join(errors)
        )
    runs = [run for run, _ in results]
    assert len(runs) == len(manifest.runs)
    return ExperimentSet(manifest.program_id, manifest.condition_id, tuple(runs), manifest.constants, manifest.wear)


# -- writers -----------------------------------------------------------------


def _write_text(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"{path}: cannot write ({exc.strerror or exc})") from None


def write_csv(path, header: Sequence[str], rows) -> None:
    """Write rows with the ingest dialect; floats use 17 significant digits."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(c) for c in row))
    _write_text(Path(path), "\n".join(lines) + "\n")


def _cell(c) -> str:
    if c is None:
        return ""
    if isinstance(c, bool):
        return "true" if c else "false"
    if isinstance(c, (float, np.floating)):
        return format_float(c)
    return str(c)


def write_power_csv(series: TimeSeries, path) -> None:
    write_csv(path, POWER_HEADER, zip(series.timestamps.tolist(), series.values.tolist()))


def write_telemetry_csv(joints: Sequence[JointTelemetry], path) -> None:
    with_currents = all(j.has_currents for j in joints)
    if with_currents and any(j.temperature is None for j in joints):
        raise ValidationError("telemetry CSV stores currents and temperature as one group")
    rows = []
    for j in joints:
        cols = [j.torque.timestamps, j.torque.values, j.velocity.values]
        if with_currents:
            cols += [j.current_target.values, j.current_actual.values, j.temperature.values]
        for vals in zip(*(c.tolist() for c in cols)):
            rows.append((vals[0], j.joint_index, *vals[1:]))
    rows.sort(key=lambda r: (r[0], r[1]))
    header = TELEMETRY_HEADER + (CURRENT_GROUP if with_currents else [])
    write_csv(path, header, rows)


_SAFE_ID = re.compile(r"^[A-Za-z0-9_.-]+$")


def wear_to_dict(wear: WearParams) -> dict:
    return {
        "form": wear.form,
        "joints": [
            {
                "joint": idx,
                "phi": p.phi,
                "tau_k": p.tau_k,
                "tau_max": p.tau_max,
                "omega": {"offset": p.omega.offset, "v_coeff": p.omega.v_coeff, "t_coeff": p.omega.t_coeff},
            }
            for idx, p in sorted(wear.joints.items())
        ],
    }


def write_experiment(experiment: ExperimentSet, out_dir) -> Path:
    """Write CSV recordings plus ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    runs = []
    for k, run in enumerate(experiment.runs):
        stem = run.id if _SAFE_ID.match(run.id) else f"run{k:03d}"
        entry = {"id": run.id, "power_file": f"power/{stem}.csv"}
        write_power_csv(run.power, out / entry["power_file"])
        if run.has_telemetry:
            entry["telemetry_file"] = f"telemetry/{stem}.csv"
            write_telemetry_csv(run.joints, out / entry["telemetry_file"])
        entry["success"] = run.success
        runs.append(entry)
    c = experiment.constants
    doc = {
        "program_id": experiment.program_id,
        "condition_id": experiment.condition_id,
        "constants": {
            "P_E": c.p_e,
            "P_MB": c.p_mb,
            "n_J": c.n_j,
            "delta_E_P": c.delta_e_p,
            "delta_E_K": c.delta_e_k,
        },
    }
    if experiment.wear is not None:
        doc["wear"] = wear_to_dict(experiment.wear)
    doc["runs"] = runs
    path = out / "manifest.json"
    _write_text(path, json.dumps(doc, indent=2) + "\n")
    return path
