"""T-periodic dither signal pairs and their symmetry assumptions.

A valid pair (u1, u2) must satisfy:
  A1: both signals piecewise continuous and bounded on [0, T],
  A2: u1(t) = -u1(T - t)        (point symmetry about (T/2, 0)),
  A3: u2(t) = -u2(T/2 + t)      (half-period antisymmetry).
A2/A3 imply zero mean over one period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

AMPLITUDE_LAWS = ("sqrt_omega_scaled", "unit")


@dataclass(frozen=True)
class DitherPair:
    T: float
    u1: Callable
    u2: Callable
    amplitude_law: str = "unit"
    kind: str = "custom"

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T


@dataclass(frozen=True)
class SampledDither:
    """Needle approximation of u2: 2N constant levels of width eps = T/(2N)."""

    base: DitherPair
    N: int
    epsilon: float
    values: np.ndarray  # values[k] = u2((k+1) * eps), k = 0 .. 2N-1

    def evaluate(self, t):
        """Piecewise-constant value of the sampled dither (periodic)."""
        phase = np.mod(t, self.base.T)
        idx = np.minimum(np.floor(phase / self.epsilon).astype(int),
                         2 * self.N - 1)
        return self.values[idx]


@dataclass(frozen=True)
class SequentialDither:
    """n*T-periodic vector dither cycling the scalar pair through dimensions."""

    base: DitherPair
    n: int

    @property
    def T(self) -> float:
        return self.base.T

    @property
    def full_period(self) -> float:
        return self.n * self.base.T

    def _component_values(self, t, u: Callable) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        phase = np.mod(t, self.full_period)
        block = np.minimum((phase / self.base.T).astype(int), self.n - 1)
        local = phase - block * self.base.T
        out = np.zeros(t.shape + (self.n,))
        vals = u(local)
        np.put_along_axis(out, block[..., None], np.asarray(vals)[..., None],
                          axis=-1)
        return out

    def u1_vec(self, t) -> np.ndarray:
        return self._component_values(t, self.base.u1)

    def u2_vec(self, t) -> np.ndarray:
        return self._component_values(t, self.base.u2)


class AssumptionError(ValueError):
    """A constructed dither failed the A1-A3 verification."""


@dataclass(frozen=True)
class AssumptionReport:
    a1_passed: bool
    a1_bound: float
    a2_passed: bool
    a2_violation: float
    a3_passed: bool
    a3_violation: float
    mean_u1: float
    mean_u2: float

    @property
    def passed(self) -> bool:
        return self.a1_passed and self.a2_passed and self.a3_passed


def _amplitude(T: float, law: str) -> float:
    if law == "sqrt_omega_scaled":
        return math.sqrt(2.0 * math.pi / T)
    if law == "unit":
        return 1.0
    raise ValueError(f"unknown amplitude law {law!r}")


def make_trig_dither(T: float, amplitude_law: str = "sqrt_omega_scaled") -> DitherPair:
    """u1 = A sin(omega t), u2 = A cos(omega t), A = sqrt(omega) or 1."""
    if T <= 0:
        raise ValueError(f"dither period must be positive, got {T}")
    A = _amplitude(T, amplitude_law)
    omega = 2.0 * math.pi / T
    return DitherPair(T=T,
                      u1=lambda t: A * np.sin(omega * t),
                      u2=lambda t: A * np.cos(omega * t),
                      amplitude_law=amplitude_law, kind="trig")


def _sawtooth_u1(T: float):
    # Odd sawtooth about T/2; value 0 exactly at the period-boundary jump so
    # that A2 also holds at the grid endpoints.
    def u1(t):
        phase = np.mod(t, T)
        val = 2.0 * phase / T - 1.0
        return np.where(phase == 0.0, 0.0, val)

    return u1


def make_square_sawtooth_dither(T: float, kind: str,
                                amplitude_law: str = "unit") -> DitherPair:
    """A1-A3 compliant square or sawtooth pair.

    square:   u1 = sign(sin), u2 = sign(cos); 0 at u1's sign changes.
    sawtooth: u1 is the odd sawtooth about T/2; u2 is u1 shifted by -T/4 and
              antisymmetrized, (u1(t - T/4) - u1(t + T/4)) / 2, which collapses
              to a +-1/2 square profile satisfying A3 exactly.
    """
    if T <= 0:
        raise ValueError(f"dither period must be positive, got {T}")
    A = _amplitude(T, amplitude_law)

    if kind == "square":
        def u1(t):
            phase = np.mod(t, T)
            return A * np.where((phase == 0.0) | (phase == T / 2), 0.0,
                                np.where(phase < T / 2, 1.0, -1.0))

        def u2(t):
            phase = np.mod(t, T)
            return A * np.where((phase <= T / 4) | (phase > 3 * T / 4), 1.0, -1.0)

        return DitherPair(T=T, u1=u1, u2=u2, amplitude_law=amplitude_law,
                          kind="square")

    if kind == "sawtooth":
        saw = _sawtooth_u1(T)

        def u1(t):
            return A * saw(t)

        def u2(t):
            t = np.asarray(t, dtype=float)
            return A * 0.5 * (saw(t - T / 4) - saw(t + T / 4))

        return DitherPair(T=T, u1=u1, u2=u2, amplitude_law=amplitude_law,
                          kind="sawtooth")

    raise ValueError(f"unknown dither kind {kind!r}")


def make_dither(kind: str, T: float, amplitude_law: str = "sqrt_omega_scaled") -> DitherPair:
    if kind == "trig":
        return make_trig_dither(T, amplitude_law)
    return make_square_sawtooth_dither(T, kind, amplitude_law)


def verify_assumptions(d: DitherPair, grid_points: int = 10_000,
                       tol_sym: float = 1e-9) -> AssumptionReport:
    """Grid check of A1-A3 and the zero-mean consequence.

    Symmetry violations are compared against tol_sym scaled by the signal
    amplitude; the mean check uses trapezoidal quadrature on the same grid.
    """
    if grid_points < 100:
        raise ValueError("grid_points must be at least 100")
    t = np.linspace(0.0, d.T, grid_points + 1)
    v1 = np.asarray(d.u1(t), dtype=float)
    v2 = np.asarray(d.u2(t), dtype=float)

    bound = max(np.max(np.abs(v1)), np.max(np.abs(v2)))
    a1 = bool(np.all(np.isfinite(v1)) and np.all(np.isfinite(v2)))
    scale = max(bound, 1.0)

    a2_viol = float(np.max(np.abs(v1 + np.asarray(d.u1(d.T - t)))))
    half = t[t <= d.T / 2]
    a3_viol = float(np.max(np.abs(np.asarray(d.u2(half))
                                  + np.asarray(d.u2(d.T / 2 + half)))))

    mean1 = float(np.trapezoid(v1, t) / d.T)
    mean2 = float(np.trapezoid(v2, t) / d.T)

    return AssumptionReport(
        a1_passed=a1, a1_bound=float(bound),
        a2_passed=a2_viol <= tol_sym * scale, a2_violation=a2_viol,
        a3_passed=a3_viol <= tol_sym * scale, a3_violation=a3_viol,
        mean_u1=mean1, mean_u2=mean2)


def require_valid(d: DitherPair, **kwargs) -> None:
    report = verify_assumptions(d, **kwargs)
    if not report.passed:
        raise AssumptionError(
            f"dither {d.kind!r} violates A1-A3: "
            f"A1={report.a1_passed} A2 viol={report.a2_violation:.3e} "
            f"A3 viol={report.a3_violation:.3e}")


def sample_needles(d: DitherPair, N: int) -> SampledDither:
    """Sample u2 into 2N needle levels values[k] = u2((k+1) eps), eps = T/(2N)."""
    if N < 1:
        raise ValueError("needle count N must be positive")
    eps = d.T / (2 * N)
    i = np.arange(1, 2 * N + 1)
    values = np.asarray(d.u2(i * eps), dtype=float)
    return SampledDither(base=d, N=N, epsilon=eps, values=values)


def make_sequential(d: DitherPair, n: int) -> SequentialDither:
    if n < 1:
        raise ValueError("dimension count n must be positive")
    return SequentialDither(base=d, n=n)
