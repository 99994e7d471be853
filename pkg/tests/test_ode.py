import numpy as np
import pytest

from eskit import (DivergenceError, IntegratorConfig, get_objective,
                   make_constant, make_sequential, make_trig_dither,
                   make_vector_fields, needle_dither, simulate_es,
                   simulate_nominal, snap_to_grid)

F1 = get_objective("f1")
VF = make_vector_fields("linear_gain", gain=5.0)


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(steps_per_period=0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="rk5")


def test_constant_objective_no_drift():
    d = make_trig_dither(0.1)
    traj = simulate_es(make_constant(1.0), VF, d, 1.8, 0.3,
                       IntegratorConfig(steps_per_period=2000))
    assert abs(float(traj.states[-1]) - 1.8) < 1e-12


def test_rk4_beats_euler():
    d = make_trig_dither(0.01)
    cfg_fine = IntegratorConfig(steps_per_period=40000)
    ref = float(simulate_es(F1, VF, d, 1.8, 0.01, cfg_fine).states[-1])
    errs = {}
    for method in ("rk4", "euler"):
        cfg = IntegratorConfig(steps_per_period=400, method=method)
        errs[method] = abs(float(simulate_es(F1, VF, d, 1.8, 0.01,
                                             cfg).states[-1]) - ref)
    assert errs["rk4"] < errs["euler"] / 100


def test_rk4_step_refinement_converges():
    d = make_trig_dither(0.01)
    finals = [float(simulate_es(F1, VF, d, 1.8, 0.01,
                                IntegratorConfig(steps_per_period=m)
                                ).states[-1])
              for m in (200, 400, 12800)]
    # halving the step shrinks the error toward the fine reference
    assert abs(finals[1] - finals[2]) < abs(finals[0] - finals[2]) / 8


def test_nominal_palindrome():
    d = make_trig_dither(0.1)
    traj = simulate_nominal(F1, VF, d, 1.8, 0.1,
                            IntegratorConfig(steps_per_period=2000))
    x = traj.states
    assert np.max(np.abs(x - x[::-1])) < 1e-9


def test_trajectory_accessors():
    d = make_trig_dither(0.1)
    cfg = IntegratorConfig(steps_per_period=100)
    traj = simulate_es(F1, VF, d, 1.8, 0.2, cfg)
    assert len(traj.states) == 201
    assert traj.dim == 1
    assert traj.horizon == pytest.approx(0.2)
    assert traj.index_of(0.1) == 100
    with pytest.raises(ValueError):
        traj.index_of(0.1005)


def test_divergence_raises_with_time():
    d = make_trig_dither(0.1)
    with pytest.raises(DivergenceError) as exc:
        simulate_es(F1, VF, d, 1e7, 0.5, IntegratorConfig(steps_per_period=400))
    assert exc.value.time < 0.5


def test_vector_simulation_matches_scalar_blocks():
    # With a sequential dither each base-period block must move only the
    # active component (up to the tiny cross-coupling through F).
    f3 = get_objective("f3")
    vf = make_vector_fields("linear_gain", gain=10.0)
    sd = make_sequential(make_trig_dither(0.01), 2)
    cfg = IntegratorConfig(steps_per_period=500)
    traj = simulate_es(f3, vf, sd, np.array([1.8, 1.8]), 0.02, cfg)
    x = traj.states
    move0 = np.abs(x[500] - x[0])
    move1 = np.abs(x[1000] - x[500])
    assert move0[1] < 0.05 * move0[0]
    assert move1[0] < 0.05 * move1[1]


def test_needle_dither_support():
    d = make_trig_dither(0.1)
    nd = needle_dither(d, tbar=0.02, epsilon=0.005, alpha=2.0)
    assert nd.u2(0.019) == 0.0
    assert nd.u2(0.021) == 2.0
    assert nd.u2(0.026) == 0.0
    assert nd.u1(0.03) == d.u1(0.03)


def test_snap_to_grid():
    assert snap_to_grid(0.0102, 0.005) == pytest.approx(0.01)
    assert snap_to_grid(1e-9, 0.005, minimum=1) == pytest.approx(0.005)
