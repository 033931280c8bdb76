import json

import numpy as np
import pytest
from hypothesis import given, settings, HealthCheck
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from powerbench import TimeSeries, load_experiment, load_power_csv, load_telemetry_csv
from powerbench.errors import OutputError, ParseError, PowerbenchWarning, ValidationError
from powerbench.ingest import write_experiment, write_power_csv, write_telemetry_csv

from conftest import joint, make_set, series


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_power_csv_basic(tmp_path):
    s = load_power_csv(write(tmp_path / "p.csv", "t_s,power_w\n0.0,91.1\n0.1,91.3\n"))
    assert s.timestamps.tolist() == [0.0, 0.1]
    assert s.values.tolist() == [91.1, 91.3]


def test_power_csv_rebased_and_crlf(tmp_path):
    s = load_power_csv(write(tmp_path / "p.csv", "t_s,power_w\r\n5.0,1\r\n5.1,2\r\n5.2,3\r\n"))
    assert s.timestamps == pytest.approx([0.0, 0.1, 0.2], abs=1e-12)
    assert s.start == 0.0


@pytest.mark.parametrize(
    "body,exc,match",
    [
        ("t_s,power_w\n0.0,1\n0.1,2\n0.2,abc\n", ParseError, "data row 3"),
        ("time,power\n0.0,1\n0.1,2\n", ParseError, "header"),
        ("t_s,power_w\n0.0,1\n", ParseError, "at least 2"),
        ("t_s,power_w\n0.0,1\n0.2,2\n0.1,3\n", ValidationError, "data row 3"),
        ("t_s,power_w\n0.0,1\n0.1\n", ParseError, "fields"),
        ("", ParseError, "header"),
    ],
)
def test_power_csv_errors(tmp_path, body, exc, match):
    with pytest.raises(exc, match=match):
        load_power_csv(write(tmp_path / "p.csv", body))


def test_power_csv_missing_file(tmp_path):
    with pytest.raises(OutputError):
        load_power_csv(tmp_path / "nope.csv")


def test_telemetry_two_joints(tmp_path):
    body = "t_s,joint,torque_nm,vel_rad_s\n"
    for t in (0.0, 0.1, 0.2):
        for j in (0, 1):
            body += f"{t},{j},{j + 1},{2 * t}\n"
    joints = load_telemetry_csv(write(tmp_path / "t.csv", body), 6)
    assert [j.joint_index for j in joints] == [0, 1]
    assert all(len(j.torque) == 3 for j in joints)
    assert joints[1].torque.values.tolist() == [2.0, 2.0, 2.0]
    assert not any(j.has_currents for j in joints)


def test_telemetry_currents_group(tmp_path):
    body = "t_s,joint,torque_nm,vel_rad_s,i_target_a,i_actual_a,temp_c\n0,0,1,1,2,1.5,30\n1,0,1,1,2,1.0,31\n"
    (j,) = load_telemetry_csv(write(tmp_path / "t.csv", body), 6)
    assert j.has_currents
    assert j.current_actual.values.tolist() == [1.5, 1.0]
    assert j.temperature.values.tolist() == [30.0, 31.0]


def test_telemetry_sorts_rows_per_joint(tmp_path):
    body = "t_s,joint,torque_nm,vel_rad_s\n0.2,0,3,0\n0.0,0,1,0\n0.1,0,2,0\n"
    (j,) = load_telemetry_csv(write(tmp_path / "t.csv", body), 1)
    assert j.torque.values.tolist() == [1.0, 2.0, 3.0]


@pytest.mark.parametrize(
    "body,match",
    [
        ("t_s,joint,torque_nm,vel_rad_s\n0,7,1,1\n1,7,1,1\n", "joint index 7"),
        ("t_s,joint,torque_nm,vel_rad_s\n0,0,1,1\n1,0,1,1\n0,1,1,1\n", "ragged"),
        ("t_s,joint,torque_nm,vel_rad_s\n0,0.5,1,1\n1,0.5,1,1\n", "joint index"),
        ("t_s,joint,torque_nm,vel_rad_s\n0,0,1,1\n0,0,1,1\n", "strictly increasing"),
    ],
)
def test_telemetry_errors(tmp_path, body, match):
    with pytest.raises(ValidationError, match=match):
        load_telemetry_csv(write(tmp_path / "t.csv", body), 6)


def test_telemetry_header_must_include_whole_group(tmp_path):
    with pytest.raises(ParseError, match="header"):
        load_telemetry_csv(write(tmp_path / "t.csv", "t_s,joint,torque_nm,vel_rad_s,i_target_a\n0,0,1,1,1\n"), 6)


def _manifest(tmp_path, runs, **extra):
    doc = {
        "program_id": "A",
        "condition_id": "idle10s",
        "constants": {"P_E": 91.14, "P_MB": 7.12, "n_J": 6},
        "runs": runs,
    }
    doc.update(extra)
    p = tmp_path / "manifest.json"
    p.write_text(json.dumps(doc))
    return p


def _power_files(tmp_path, n):
    for k in range(n):
        write(tmp_path / f"p{k}.csv", f"t_s,power_w\n0,100\n1,{100 + k}\n2,100\n")


def test_load_experiment_counts_successes(tmp_path):
    _power_files(tmp_path, 10)
    runs = [{"id": f"r{k}", "power_file": f"p{k}.csv", "success": k not in (1, 4, 7)} for k in range(10)]
    exp = load_experiment(_manifest(tmp_path, runs))
    assert exp.n == 10 and exp.n_succ == 7
    assert exp.constants.p_e == 91.14 and exp.constants.delta_e_p == 0.0
    assert [r.id for r in exp.runs] == [f"r{k}" for k in range(10)]


def test_load_experiment_duplicate_id(tmp_path):
    _power_files(tmp_path, 2)
    runs = [{"id": "r", "power_file": "p0.csv", "success": True}, {"id": "r", "power_file": "p1.csv", "success": True}]
    with pytest.raises(ValidationError, match="duplicate"):
        load_experiment(_manifest(tmp_path, runs))


def test_load_experiment_empty_runs(tmp_path):
    with pytest.raises(ValidationError, match="at least one run"):
        load_experiment(_manifest(tmp_path, []))


def test_load_experiment_reports_every_failing_file(tmp_path):
    _power_files(tmp_path, 3)
    write(tmp_path / "bad1.csv", "t_s,power_w\n0,x\n1,2\n")
    write(tmp_path / "bad2.csv", "oops\n")
    runs = [
        {"id": "ok", "power_file": "p0.csv", "success": True},
        {"id": "b1", "power_file": "bad1.csv", "success": True},
        {"id": "b2", "power_file": "bad2.csv", "success": False},
    ]
    with pytest.raises(ValidationError) as info:
        load_experiment(_manifest(tmp_path, runs))
    msg = str(info.value)
    assert "2 run(s)" in msg and "bad1.csv" in msg and "bad2.csv" in msg


def test_manifest_missing_file(tmp_path):
    runs = [{"id": "r", "power_file": "missing.csv", "success": True}]
    with pytest.raises(ValidationError, match="not found"):
        load_experiment(_manifest(tmp_path, runs))


def test_manifest_unknown_fields_warn(tmp_path):
    _power_files(tmp_path, 1)
    runs = [{"id": "r", "power_file": "p0.csv", "success": True, "colour": "red"}]
    with pytest.warns(PowerbenchWarning, match=r"runs\[0\]\.colour.*manifest\.extra|manifest\.extra.*colour"):
        load_experiment(_manifest(tmp_path, runs, extra=1))


@pytest.mark.parametrize(
    "patch,match",
    [
        ({"constants": {"P_E": "x", "P_MB": 1, "n_J": 6}}, "P_E"),
        ({"constants": {"P_MB": 1, "n_J": 6}}, "P_E"),
        ({"program_id": 3}, "program_id"),
    ],
)
def test_manifest_field_errors(tmp_path, patch, match):
    _power_files(tmp_path, 1)
    p = _manifest(tmp_path, [{"id": "r", "power_file": "p0.csv", "success": True}], **patch)
    with pytest.raises(ParseError, match=match):
        load_experiment(p)


def test_manifest_wear_section(tmp_path):
    _power_files(tmp_path, 1)
    wear = {"form": "weighted-flux-v1", "joints": [{"joint": 0, "phi": 100, "tau_k": 0.1, "tau_max": 150,
                                                    "omega": {"offset": 1.0, "v_coeff": 0.5}}]}
    exp = load_experiment(_manifest(tmp_path, [{"id": "r", "power_file": "p0.csv", "success": True}], wear=wear))
    jp = exp.wear.for_joint(0)
    assert jp.phi == 100 and jp.omega.v_coeff == 0.5 and jp.omega.t_coeff == 0.0


def test_manifest_run_count_preserved(tmp_path, monkeypatch):
    monkeypatch.setenv("POWERBENCH_NO_PARALLEL", "1")
    _power_files(tmp_path, 5)
    runs = [{"id": f"r{k}", "power_file": f"p{k}.csv", "success": True} for k in range(5)]
    assert load_experiment(_manifest(tmp_path, runs)).n == 5


values_strategy = arrays(
    np.float64, st.integers(2, 30),
    elements=st.floats(allow_nan=False, allow_infinity=False, width=64),
)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture], max_examples=50)
@given(values_strategy, st.floats(1e-6, 10.0))
def test_power_csv_round_trip_bit_exact(tmp_path, values, dt):
    t = np.arange(values.size) * dt
    s = TimeSeries(t, values)
    path = tmp_path / "rt.csv"
    write_power_csv(s, path)
    back = load_power_csv(path)
    assert np.array_equal(back.timestamps, s.timestamps)
    assert np.array_equal(back.values, s.values)


def test_experiment_round_trip(tmp_path, rng):
    t = np.linspace(0, 10, 101)
    runs = []
    for k in range(3):
        j = [joint(i, t, rng.normal(size=t.size), rng.normal(size=t.size), rng.normal(size=t.size),
                   rng.normal(size=t.size), rng.normal(30, 1, size=t.size)) for i in range(2)]
        from powerbench import Run
        runs.append(Run(f"r{k}", series(t, 100 + rng.normal(size=t.size)), k != 1, j))
    exp = make_set(runs)
    back = load_experiment(write_experiment(exp, tmp_path))
    assert [r.success for r in back.runs] == [True, False, True]
    for a, b in zip(exp.runs, back.runs):
        assert np.array_equal(a.power.values, b.power.values)
        for ja, jb in zip(a.joints, b.joints):
            for sa, sb in zip(ja.series(), jb.series()):
                assert np.array_equal(sa.timestamps, sb.timestamps)
                assert np.array_equal(sa.values, sb.values)


def test_write_telemetry_requires_temperature_with_currents(tmp_path):
    t = np.linspace(0, 1, 3)
    with pytest.raises(ValidationError):
        write_telemetry_csv([joint(0, t, 1, 1, 2, 1, None)], tmp_path / "t.csv")
