"""Recovered per-period gradient, the learning-dynamics recursion and the
reconstruction of the effective objective that the recursion descends.

The per-period step at state x_k is a weighted average of dF/dx along the
nominal (u1-only) solution started at x_k:

    step = int_0^{T/2} u2(t) int_t^{T/2 - t} dF/dx(x*(tau)) Phi(0, tau)
                               u1(tau) g0(F(x*(tau))) dtau dt

up to an O(T^2) remainder. Inner integrals are oriented: for t > T/4 the
upper limit drops below the lower one and the sign flips, which the
cumulative-difference evaluation handles automatically. The finite-N form
replaces the outer integral by the needle sum eps * sum_i u2(i eps) * inner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .dither import DitherPair, SequentialDither
from .objective import LieBracketField, Objective, VectorFieldPair
from .ode import (DivergenceError, IntegratorConfig, Trajectory,
                  simulate_nominal)


@dataclass(frozen=True)
class RecoveredGradient:
    value: float | np.ndarray
    residual_order: float  # T^2 scale of the neglected remainder, diagnostic only
    N_used: int | None  # None marks the continuum (N -> infinity) limit


@dataclass(frozen=True)
class LearningRun:
    states: np.ndarray  # (K+1,) or (K+1, n)
    gradients: list[RecoveredGradient]
    mode: str  # "simulated" | "recursion"
    period: float
    diverged: bool = False

    @property
    def times(self) -> np.ndarray:
        return self.period * np.arange(len(self.states))


@dataclass(frozen=True)
class Landscape:
    grid: np.ndarray
    L_values: np.ndarray  # normalized to [0, 1]
    omega: float
    gradients: np.ndarray


def _check_steps(cfg: IntegratorConfig) -> int:
    M = cfg.steps_per_period
    if M % 4:
        raise ValueError("steps_per_period must be divisible by 4 for the "
                         "half-period Simpson rule")
    return M


def _weight_cumulative(obj, vf, g0: LieBracketField, u1_values, states, dt):
    """Cumulative integral of w = dF/dx(x*) Phi(0,.) u1 g0(F(x*)) on the grid.

    Scalar states only; Phi(0, tau) = exp(-cum A(tau)).
    """
    from .stm import cumulative_integral

    F = obj.eval(states)
    dF = obj.grad(states)
    A = u1_values * np.asarray(vf.dg1dF(F), dtype=float) * dF
    cumA = cumulative_integral(A, dt)
    w = dF * np.exp(-cumA) * u1_values * np.asarray(g0.g0(F), dtype=float)
    return cumulative_integral(w, dt)


def _scalar_tables(obj, vf, g0, d: DitherPair, x_k: float,
                   cfg: IntegratorConfig):
    nominal = simulate_nominal(obj, vf, d, x_k, d.T, cfg)
    t = nominal.times
    u1v = np.asarray(d.u1(t), dtype=float)
    W = _weight_cumulative(obj, vf, g0, u1v, nominal.states, nominal.dt)
    return nominal, W


def recovered_gradient(obj: Objective, vf: VectorFieldPair,
                       g0: LieBracketField, d: DitherPair, x_k: float,
                       cfg: IntegratorConfig = IntegratorConfig()) -> RecoveredGradient:
    """Continuum-limit recovered gradient for one period started at x_k."""
    M = _check_steps(cfg)
    nominal, W = _scalar_tables(obj, vf, g0, d, x_k, cfg)
    half = M // 2
    t_half = nominal.times[:half + 1]
    inner = W[half::-1] - W[:half + 1]  # W(T/2 - t_j) - W(t_j)
    outer = np.asarray(d.u2(t_half), dtype=float) * inner
    value = float(simpson(outer, dx=nominal.dt))
    return RecoveredGradient(value=value, residual_order=d.T ** 2, N_used=None)


def recovered_gradient_finite_N(obj: Objective, vf: VectorFieldPair,
                                g0: LieBracketField, d: DitherPair, x_k: float,
                                N: int,
                                cfg: IntegratorConfig = IntegratorConfig()) -> RecoveredGradient:
    """Finite needle-count form: eps * sum_{i=1}^{N} u2(i eps) * inner(i eps)."""
    if N < 1:
        raise ValueError("needle count N must be positive")
    _check_steps(cfg)
    nominal, W = _scalar_tables(obj, vf, g0, d, x_k, cfg)
    Wsp = CubicSpline(nominal.times, W)
    eps = d.T / (2 * N)
    i = np.arange(1, N + 1)
    ieps = i * eps
    inner = Wsp(d.T / 2 - ieps) - Wsp(ieps)
    value = float(eps * np.sum(np.asarray(d.u2(ieps), dtype=float) * inner))
    return RecoveredGradient(value=value, residual_order=d.T ** 2, N_used=N)


def _component_from_block(obj, vf, g0, d_base: DitherPair, states_block,
                          comp: int, dt: float) -> float:
    """Recovered-gradient component for dimension `comp` from a nominal block.

    states_block holds x*(T_i + tau) for tau on [0, T]; the scalar STM for the
    component uses A_i = u1(tau) g1'(F) dF/dx_i and Phi_i(T_i, T_i+tau) =
    exp(-cum A_i).
    """
    from .stm import cumulative_integral

    M = len(states_block) - 1
    tau = dt * np.arange(M + 1)
    u1v = np.asarray(d_base.u1(tau), dtype=float)
    F = obj.eval(states_block)
    dFi = np.asarray(obj.grad(states_block), dtype=float)[:, comp]
    A = u1v * np.asarray(vf.dg1dF(F), dtype=float) * dFi
    cumA = cumulative_integral(A, dt)
    w = dFi * np.exp(-cumA) * u1v * np.asarray(g0.g0(F), dtype=float)
    W = cumulative_integral(w, dt)
    half = M // 2
    inner = W[half::-1] - W[:half + 1]
    outer = np.asarray(d_base.u2(tau[:half + 1]), dtype=float) * inner
    return float(simpson(outer, dx=dt))


def recovered_gradient_multidim(obj: Objective, vf: VectorFieldPair,
                                g0: LieBracketField, sd: SequentialDither,
                                x_k, ell: int,
                                cfg: IntegratorConfig = IntegratorConfig()) -> RecoveredGradient:
    """Vector step over ell sequential blocks; components > ell are 0."""
    if not 1 <= ell <= sd.n:
        raise ValueError(f"ell must lie in 1..{sd.n}")
    M = _check_steps(cfg)
    nominal = simulate_nominal(obj, vf, sd, x_k, ell * sd.T, cfg)
    value = np.zeros(sd.n)
    for i in range(ell):
        block = nominal.states[i * M:(i + 1) * M + 1]
        value[i] = _component_from_block(obj, vf, g0, sd.base, block, i,
                                         nominal.dt)
    return RecoveredGradient(value=value,
                             residual_order=(ell * sd.T) ** 2, N_used=None)


def _sequential_step(obj, vf, g0, sd: SequentialDither, x, k: int,
                     cfg: IntegratorConfig) -> np.ndarray:
    """Single-period recursion step for a sequential dither at period index k.

    The active dimension cycles with k; the nominal restarts from the current
    state at the absolute block start time so the dither phase stays aligned.
    """
    comp = k % sd.n
    t0 = k * sd.T
    nominal = simulate_nominal(obj, vf, sd, x, sd.T, cfg, t0=t0)
    step = np.zeros(sd.n)
    step[comp] = _component_from_block(obj, vf, g0, sd.base, nominal.states,
                                       comp, nominal.dt)
    return step


def run_recursion(obj: Objective, vf: VectorFieldPair, g0: LieBracketField,
                  d, x0, K: int,
                  cfg: IntegratorConfig = IntegratorConfig()) -> LearningRun:
    """Iterate x_k = x_{k-1} + step(x_{k-1}) for K periods.

    Each step re-solves the nominal system from the current state. On
    divergence the partial run is returned with the diverged flag set.
    """
    sequential = isinstance(d, SequentialDither)
    x = (np.atleast_1d(np.asarray(x0, dtype=float)).copy() if sequential
         else float(np.asarray(x0).reshape(())))
    states = [np.copy(x) if sequential else x]
    gradients: list[RecoveredGradient] = []
    diverged = False
    for k in range(K):
        try:
            if sequential:
                step = _sequential_step(obj, vf, g0, d, x, k, cfg)
                g = RecoveredGradient(value=step, residual_order=d.T ** 2,
                                      N_used=None)
            else:
                g = recovered_gradient(obj, vf, g0, d, x, cfg)
        except DivergenceError:
            diverged = True
            break
        gradients.append(g)
        x = x + g.value
        states.append(np.copy(x) if sequential else x)
    return LearningRun(states=np.asarray(states), gradients=gradients,
                       mode="recursion", period=d.T, diverged=diverged)


def extract_simulated_ld(traj: Trajectory, d) -> LearningRun:
    """Sample a dense trajectory at period boundaries x(kT)."""
    T = d.T
    stride_f = T / traj.dt
    stride = round(stride_f)
    if not math.isclose(stride_f, stride, rel_tol=1e-9):
        raise ValueError("trajectory grid does not align with the period")
    n_periods_f = traj.horizon / T
    if not math.isclose(n_periods_f, round(n_periods_f), rel_tol=1e-9):
        raise ValueError("trajectory horizon is not a multiple of the period")
    return LearningRun(states=traj.states[::stride].copy(), gradients=[],
                       mode="simulated", period=T)


def compare_runs(a: LearningRun, b: LearningRun) -> np.ndarray:
    """Per-period norms |a.states[k] - b.states[k]|."""
    if len(a.states) != len(b.states):
        raise ValueError("learning runs have different lengths")
    diff = np.asarray(a.states, dtype=float) - np.asarray(b.states, dtype=float)
    if diff.ndim == 1:
        return np.abs(diff)
    return np.linalg.norm(diff, axis=1)


def reconstruct_landscape(obj: Objective, vf: VectorFieldPair,
                          g0: LieBracketField, d: DitherPair, x_grid,
                          cfg: IntegratorConfig = IntegratorConfig()) -> Landscape:
    """Rebuild the effective objective by Euler-integrating the negated step.

    The recursion adds +step, so descent directions carry negative sign;
    accumulating L(x_{i+1}) = L(x_i) - step(x_i) dx along ascending x and
    affinely mapping to [0, 1] recovers the landscape shape.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size < 2:
        raise ValueError("landscape grid needs at least 2 points")
    dx = np.diff(x_grid)
    if np.any(dx <= 0) or not np.allclose(dx, dx[0], rtol=1e-9):
        raise ValueError("landscape grid must be uniform and ascending")
    grads = np.array([
        recovered_gradient(obj, vf, g0, d, float(x), cfg).value
        for x in x_grid])
    L = np.concatenate([[0.0], np.cumsum(-grads[:-1] * dx)])
    lo, hi = float(np.min(L)), float(np.max(L))
    if hi > lo:
        L = (L - lo) / (hi - lo)
    else:
        L = np.zeros_like(L)
    return Landscape(grid=x_grid, L_values=L, omega=d.omega, gradients=grads)
