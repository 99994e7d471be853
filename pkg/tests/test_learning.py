import numpy as np
import pytest

from eskit import (IntegratorConfig, LearningRun, compare_runs,
                   extract_simulated_ld, get_objective, make_constant,
                   make_lie_bracket, make_sequential, make_trig_dither,
                   make_vector_fields, reconstruct_landscape,
                   recovered_gradient, recovered_gradient_finite_N,
                   recovered_gradient_multidim, run_recursion, simulate_es)

F1 = get_objective("f1")
VF = make_vector_fields("linear_gain", gain=5.0)
G0 = make_lie_bracket(VF)
CFG = IntegratorConfig(steps_per_period=1000)


def test_gradient_matches_small_period_asymptote():
    # For the quadratic bowl the per-period step tends to -(a T / 2) * x.
    T, x = 0.01, 1.8
    d = make_trig_dither(T)
    g = recovered_gradient(F1, VF, G0, d, x, CFG)
    assert g.value == pytest.approx(-5.0 * T / 2 * x, rel=0.05)
    assert g.residual_order == pytest.approx(T ** 2)
    assert g.N_used is None


def test_gradient_zero_for_constant_objective():
    d = make_trig_dither(0.1)
    g = recovered_gradient(make_constant(1.0), VF, G0, d, 1.8, CFG)
    assert g.value == 0.0


def test_finite_n_approaches_limit():
    d = make_trig_dither(0.1)
    lim = recovered_gradient(F1, VF, G0, d, 1.8, CFG).value
    for N in (2, 10, 100):
        fin = recovered_gradient_finite_N(F1, VF, G0, d, 1.8, N, CFG)
        assert fin.N_used == N
        assert fin.value == pytest.approx(lim, rel=1e-9)


def test_finite_n_rejects_zero():
    with pytest.raises(ValueError):
        recovered_gradient_finite_N(F1, VF, G0, make_trig_dither(0.1), 1.8, 0,
                                    CFG)


def test_steps_per_period_must_be_divisible_by_four():
    with pytest.raises(ValueError):
        recovered_gradient(F1, VF, G0, make_trig_dither(0.1), 1.8,
                           IntegratorConfig(steps_per_period=1001))


def test_recursion_descends_quadratic_bowl():
    d = make_trig_dither(0.1)
    run = run_recursion(F1, VF, G0, d, 1.8, 30, CFG)
    x = np.abs(run.states)
    assert run.mode == "recursion"
    assert not run.diverged
    assert np.all(np.diff(x) < 0)
    assert x[-1] < 0.01


def test_recursion_flags_divergence():
    d = make_trig_dither(0.1)
    run = run_recursion(F1, VF, G0, d, 1e7, 5, CFG)
    assert run.diverged
    assert len(run.states) < 6


def test_extract_ld_alignment():
    d = make_trig_dither(0.1)
    traj = simulate_es(F1, VF, d, 1.8, 0.3, CFG)
    run = extract_simulated_ld(traj, d)
    assert len(run.states) == 4
    assert run.states[0] == pytest.approx(1.8)
    bad = make_trig_dither(0.07)
    with pytest.raises(ValueError):
        extract_simulated_ld(traj, bad)


def test_compare_runs_checks_length():
    a = LearningRun(states=np.zeros(3), gradients=[], mode="simulated",
                    period=0.1)
    b = LearningRun(states=np.zeros(4), gradients=[], mode="recursion",
                    period=0.1)
    with pytest.raises(ValueError):
        compare_runs(a, b)


def test_landscape_normalized_and_unimodal_for_bowl():
    d = make_trig_dither(0.1)
    grid = np.linspace(0.05, 1.8, 41)
    land = reconstruct_landscape(F1, VF, G0, d, grid, CFG)
    assert land.L_values.min() == 0.0 and land.L_values.max() == 1.0
    # single sign change of the gradient column at most (here: none)
    signs = np.sign(land.gradients)
    assert np.count_nonzero(np.diff(signs)) <= 1
    assert np.all(np.diff(land.L_values) > 0)  # min at the left edge


def test_landscape_rejects_bad_grids():
    d = make_trig_dither(0.1)
    with pytest.raises(ValueError):
        reconstruct_landscape(F1, VF, G0, d, np.array([1.0]), CFG)
    with pytest.raises(ValueError):
        reconstruct_landscape(F1, VF, G0, d, np.array([0.1, 0.2, 0.5]), CFG)


def test_multidim_components_beyond_ell_are_zero():
    f3 = get_objective("f3")
    vf = make_vector_fields("linear_gain", gain=10.0)
    g0 = make_lie_bracket(vf)
    sd = make_sequential(make_trig_dither(0.01), 2)
    g = recovered_gradient_multidim(f3, vf, g0, sd, np.array([1.8, 1.8]),
                                    ell=1, cfg=CFG)
    assert g.value[1] == 0.0
    assert g.value[0] != 0.0


def test_sequential_recursion_moves_one_component_per_block():
    f3 = get_objective("f3")
    vf = make_vector_fields("linear_gain", gain=10.0)
    g0 = make_lie_bracket(vf)
    sd = make_sequential(make_trig_dither(0.01), 2)
    run = run_recursion(f3, vf, g0, sd, np.array([1.8, 1.8]), 6, CFG)
    steps = np.diff(run.states, axis=0)
    for k in range(6):
        assert steps[k, 1 - k % 2] == 0.0
        assert steps[k, k % 2] != 0.0
