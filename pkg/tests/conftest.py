import numpy as np
import pytest

from powerbench import ExperimentSet, JointTelemetry, RobotConstants, Run, TimeSeries

REFERENCE_CONSTANTS = RobotConstants(p_e=91.14, p_mb=7.12, n_j=6)


def series(t, v):
    return TimeSeries(np.asarray(t, float), np.asarray(v, float))


def const_run(run_id, watts, duration=10.0, dt=0.1, success=True):
    n = round(duration / dt)
    t = np.arange(n + 1) * dt
    return Run(run_id, series(t, np.full(t.size, float(watts))), success)


def profile_run(run_id, values, dt=0.1, success=True):
    t = np.arange(len(values)) * dt
    return Run(run_id, series(t, values), success)


def make_set(runs, constants=REFERENCE_CONSTANTS, program="P", condition="c", wear=None):
    return ExperimentSet(program, condition, tuple(runs), constants, wear)


def joint(index, t, torque, velocity, i_target=None, i_actual=None, temp=None):
    mk = lambda v: None if v is None else series(t, np.broadcast_to(v, np.shape(t)))
    return JointTelemetry(index, mk(torque), mk(velocity), mk(i_target), mk(i_actual), mk(temp))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
