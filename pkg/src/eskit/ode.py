"""Fixed-step integration of the ES system, its nominal part and the
variational equation.

All runs use a uniform grid of steps_per_period nodes per dither period so
that period boundaries, needle edges and quadrature nodes coincide with grid
nodes. The right-hand side oscillates with the dither, so the step count per
period (not the absolute step size) controls accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dither import DitherPair, SequentialDither
from .objective import Objective, VectorFieldPair

OVERFLOW_GUARD = 1e12


class DivergenceError(RuntimeError):
    """State magnitude exceeded the overflow guard."""

    def __init__(self, time: float):
        super().__init__(f"trajectory diverged at t = {time:.6g}")
        self.time = time


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_period: int = 2000
    method: str = "rk4"

    def __post_init__(self):
        if self.steps_per_period < 1:
            raise ValueError("steps_per_period must be positive")
        if self.method not in ("rk4", "euler"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class Trajectory:
    t0: float
    dt: float
    states: np.ndarray  # (K+1,) scalar or (K+1, n)

    @property
    def dim(self) -> int:
        return 1 if self.states.ndim == 1 else self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.states))

    @property
    def horizon(self) -> float:
        return self.dt * (len(self.states) - 1)

    def index_of(self, t: float) -> int:
        k = round((t - self.t0) / self.dt)
        if not math.isclose(self.t0 + k * self.dt, t, rel_tol=0.0,
                            abs_tol=1e-9 * max(self.dt, abs(t))):
            raise ValueError(f"t = {t} is not a grid node")
        return k


def _n_steps(horizon: float, dt: float) -> int:
    n = round(horizon / dt)
    if n < 1 or not math.isclose(n * dt, horizon, rel_tol=1e-9):
        raise ValueError(
            f"horizon {horizon} is not a positive multiple of dt = {dt}")
    return n


def _dither_tables(u: Callable, t0: float, dt: float, n: int):
    nodes = t0 + dt * np.arange(n + 1)
    mids = nodes[:-1] + 0.5 * dt
    return np.asarray(u(nodes), dtype=float), np.asarray(u(mids), dtype=float)


def _integrate_scalar(F, g1, g2, U1n, U1m, U2n, U2m, x0, t0, dt, method):
    n = len(U1m)
    xs = np.empty(n + 1)
    xs[0] = x = float(x0)
    a1n, a1m = U1n.tolist(), U1m.tolist()
    a2n, a2m = U2n.tolist(), U2m.tolist()
    sixth = dt / 6.0
    half = 0.5 * dt
    if method == "euler":
        for k in range(n):
            x = x + dt * (g1(F(x)) * a1n[k] + g2(F(x)) * a2n[k])
            if not (-OVERFLOW_GUARD < x < OVERFLOW_GUARD):
                raise DivergenceError(t0 + (k + 1) * dt)
            xs[k + 1] = x
        return xs
    for k in range(n):
        u1a, u1m, u1b = a1n[k], a1m[k], a1n[k + 1]
        u2a, u2m, u2b = a2n[k], a2m[k], a2n[k + 1]
        k1 = g1(F(x)) * u1a + g2(F(x)) * u2a
        y = x + half * k1
        k2 = g1(F(y)) * u1m + g2(F(y)) * u2m
        y = x + half * k2
        k3 = g1(F(y)) * u1m + g2(F(y)) * u2m
        y = x + dt * k3
        k4 = g1(F(y)) * u1b + g2(F(y)) * u2b
        x = x + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if not (-OVERFLOW_GUARD < x < OVERFLOW_GUARD):
            raise DivergenceError(t0 + (k + 1) * dt)
        xs[k + 1] = x
    return xs


def _integrate_vector(F, g1, g2, U1n, U1m, U2n, U2m, x0, t0, dt, method):
    # U*n: (n+1, dim) arrays, U*m: (n, dim)
    n = len(U1m)
    x = np.asarray(x0, dtype=float).copy()
    xs = np.empty((n + 1, x.size))
    xs[0] = x

    def rhs(x, u1, u2):
        Fx = F(x)
        return g1(Fx) * u1 + g2(Fx) * u2

    for k in range(n):
        if method == "euler":
            x = x + dt * rhs(x, U1n[k], U2n[k])
        else:
            k1 = rhs(x, U1n[k], U2n[k])
            k2 = rhs(x + 0.5 * dt * k1, U1m[k], U2m[k])
            k3 = rhs(x + 0.5 * dt * k2, U1m[k], U2m[k])
            k4 = rhs(x + dt * k3, U1n[k + 1], U2n[k + 1])
            x = x + dt / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.all(np.abs(x) < OVERFLOW_GUARD):
            raise DivergenceError(t0 + (k + 1) * dt)
        xs[k + 1] = x
    return xs


def _simulate(obj: Objective, vf: VectorFieldPair, d, x0, horizon: float,
              cfg: IntegratorConfig, t0: float, nominal_only: bool) -> Trajectory:
    dt = d.T / cfg.steps_per_period
    n = _n_steps(horizon, dt)
    if isinstance(d, SequentialDither):
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if x0.size != d.n:
            raise ValueError(f"x0 has dim {x0.size}, dither expects {d.n}")
        U1n, U1m = _dither_tables(d.u1_vec, t0, dt, n)
        if nominal_only:
            U2n = np.zeros_like(U1n)
            U2m = np.zeros_like(U1m)
        else:
            U2n, U2m = _dither_tables(d.u2_vec, t0, dt, n)
        states = _integrate_vector(obj.eval, vf.g1, vf.g2, U1n, U1m, U2n, U2m,
                                   x0, t0, dt, cfg.method)
        return Trajectory(t0=t0, dt=dt, states=states)

    x0 = float(np.asarray(x0).reshape(()))
    U1n, U1m = _dither_tables(d.u1, t0, dt, n)
    if nominal_only:
        U2n = np.zeros(n + 1)
        U2m = np.zeros(n)
    else:
        U2n, U2m = _dither_tables(d.u2, t0, dt, n)
    states = _integrate_scalar(obj.eval, vf.g1, vf.g2, U1n, U1m, U2n, U2m,
                               x0, t0, dt, cfg.method)
    return Trajectory(t0=t0, dt=dt, states=states)


def simulate_es(obj: Objective, vf: VectorFieldPair, d, x0, horizon: float,
                cfg: IntegratorConfig = IntegratorConfig(),
                t0: float = 0.0) -> Trajectory:
    """Integrate dx/dt = g1(F(x)) u1(t) + g2(F(x)) u2(t) from x(t0) = x0."""
    return _simulate(obj, vf, d, x0, horizon, cfg, t0, nominal_only=False)


def simulate_nominal(obj: Objective, vf: VectorFieldPair, d, x0, horizon: float,
                     cfg: IntegratorConfig = IntegratorConfig(),
                     t0: float = 0.0) -> Trajectory:
    """Same system with u2 forced to zero: the backbone solution x*(t)."""
    return _simulate(obj, vf, d, x0, horizon, cfg, t0, nominal_only=True)


def needle_dither(d: DitherPair, tbar: float, epsilon: float,
                  alpha: float) -> DitherPair:
    """Pair with u2 replaced by a single needle of height alpha on
    [tbar, tbar+epsilon) over an otherwise zero background."""

    def u2(t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= tbar) & (t < tbar + epsilon), alpha, 0.0)

    return DitherPair(T=d.T, u1=d.u1, u2=u2, amplitude_law=d.amplitude_law,
                      kind=f"{d.kind}+needle")


def snap_to_grid(value: float, dt: float, minimum: int = 0) -> float:
    """Round a time quantity to the nearest grid multiple of dt."""
    return max(round(value / dt), minimum) * dt


def simulate_variational(obj: Objective, vf: VectorFieldPair, d,
                         nominal: Trajectory, tbar: float, alpha, epsilon: float,
                         cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Propagate the first-order needle response v(t) for t >= tbar + epsilon.

    v obeys dv/dt = u1(t) g1'(F(x*)) dF(x*) . v with
    v(tbar + eps) = g2(F(x*(tbar + eps))) alpha. The needle edges are snapped
    to the nominal grid; x* is re-integrated alongside v so that both see
    identical right-hand-side samples.
    """
    dt = nominal.dt
    tbar = snap_to_grid(tbar - nominal.t0, dt) + nominal.t0
    epsilon = snap_to_grid(epsilon, dt, minimum=1)
    t_start = tbar + epsilon
    k0 = nominal.index_of(t_start)
    if k0 >= len(nominal.states) - 1:
        raise ValueError("tbar + epsilon must lie inside the nominal horizon")
    n = len(nominal.states) - 1 - k0

    if isinstance(d, SequentialDither):
        ndim = d.n
        alpha = np.asarray(alpha, dtype=float)
        U1n, U1m = _dither_tables(d.u1_vec, t_start, dt, n)
        x_init = nominal.states[k0]
        v_init = float(vf.g2(obj.eval(x_init))) * alpha

        def F(z):
            return obj.eval(z[:ndim])

        def g1(Fz):
            return vf.g1(Fz)

        # Augmented system: x* follows the nominal dynamics, v the linearized
        # ones; pack [x, v] and unpack inside the RHS.
        def rhs(z, u1, _u2):
            x, v = z[:ndim], z[ndim:]
            Fx = obj.eval(x)
            dF = np.asarray(obj.grad(x), dtype=float)
            dx = vf.g1(Fx) * u1
            dv = u1 * (vf.dg1dF(Fx) * float(dF @ v))
            return np.concatenate([dx, dv])

        z = np.concatenate([np.atleast_1d(x_init), v_init])
        zs = np.empty((n + 1, z.size))
        zs[0] = z
        for k in range(n):
            if cfg.method == "euler":
                z = z + dt * rhs(z, U1n[k], None)
            else:
                k1 = rhs(z, U1n[k], None)
                k2 = rhs(z + 0.5 * dt * k1, U1m[k], None)
                k3 = rhs(z + 0.5 * dt * k2, U1m[k], None)
                k4 = rhs(z + dt * k3, U1n[k + 1], None)
                z = z + dt / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
            if not np.all(np.abs(z) < OVERFLOW_GUARD):
                raise DivergenceError(t_start + (k + 1) * dt)
            zs[k + 1] = z
        return Trajectory(t0=t_start, dt=dt, states=zs[:, ndim:])

    alpha = float(np.asarray(alpha).reshape(()))
    U1n, U1m = _dither_tables(d.u1, t_start, dt, n)
    x_init = float(nominal.states[k0])
    v_init = float(vf.g2(obj.eval(x_init))) * alpha

    F, g1, dg1, grad = obj.eval, vf.g1, vf.dg1dF, obj.grad
    a1n, a1m = U1n.tolist(), U1m.tolist()
    x, v = x_init, v_init
    vs = np.empty(n + 1)
    vs[0] = v
    for k in range(n):
        u1a, u1m, u1b = a1n[k], a1m[k], a1n[k + 1]
        if cfg.method == "euler":
            Fx = F(x)
            x, v = x + dt * g1(Fx) * u1a, v + dt * u1a * dg1(Fx) * grad(x) * v
        else:
            def f(x, v, u1):
                Fx = F(x)
                return g1(Fx) * u1, u1 * dg1(Fx) * grad(x) * v

            kx1, kv1 = f(x, v, u1a)
            kx2, kv2 = f(x + 0.5 * dt * kx1, v + 0.5 * dt * kv1, u1m)
            kx3, kv3 = f(x + 0.5 * dt * kx2, v + 0.5 * dt * kv2, u1m)
            kx4, kv4 = f(x + dt * kx3, v + dt * kv3, u1b)
            x = x + dt / 6.0 * (kx1 + 2.0 * (kx2 + kx3) + kx4)
            v = v + dt / 6.0 * (kv1 + 2.0 * (kv2 + kv3) + kv4)
        if not (abs(x) < OVERFLOW_GUARD and abs(v) < OVERFLOW_GUARD):
            raise DivergenceError(t_start + (k + 1) * dt)
        vs[k + 1] = v
    return Trajectory(t0=t_start, dt=dt, states=vs)
