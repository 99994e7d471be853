"""Objective functions, vector-field pairs and the derived bracket field.

All callables are numpy-ufunc friendly: scalar objectives accept floats or
arrays elementwise, the 2-D objective accepts arrays whose last axis is the
coordinate axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Objective:
    """Smooth scalar field with an analytic gradient for validation."""

    name: str
    dim: int
    eval: Callable
    grad: Callable


@dataclass(frozen=True)
class VectorFieldPair:
    """The two scalar fields multiplying the dithers, with their derivatives."""

    name: str
    g1: Callable
    g2: Callable
    dg1dF: Callable
    dg2dF: Callable


@dataclass(frozen=True)
class LieBracketField:
    """Weighting field derived from a VectorFieldPair (never user-supplied)."""

    g0: Callable


def make_lie_bracket(vf: VectorFieldPair) -> LieBracketField:
    """Return g0 = g1' * g2 - g2' * g1, the negated bracket of (g1, g2)."""

    def g0(F):
        return vf.dg1dF(F) * vf.g2(F) - vf.dg2dF(F) * vf.g1(F)

    return LieBracketField(g0=g0)


def finite_difference_gradient(obj: Objective, x, h_scale: float = 1e-6):
    """Central-difference gradient of obj.eval at a single point x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.empty(obj.dim)
    for i in range(obj.dim):
        h = h_scale * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        if obj.dim == 1:
            g[i] = (obj.eval(xp[0]) - obj.eval(xm[0])) / (2 * h)
        else:
            g[i] = (obj.eval(xp) - obj.eval(xm)) / (2 * h)
    return g if obj.dim > 1 else g[0]


def check_gradient(obj: Objective, points, rel_tol: float = 1e-5) -> float:
    """Max scaled deviation between analytic and finite-difference gradients.

    Raises ValueError when the deviation exceeds rel_tol * (1 + |grad|).
    """
    worst = 0.0
    for x in points:
        ga = np.atleast_1d(np.asarray(obj.grad(x), dtype=float))
        gn = np.atleast_1d(finite_difference_gradient(obj, x))
        err = np.linalg.norm(ga - gn) / (1.0 + np.linalg.norm(ga))
        worst = max(worst, float(err))
    if worst > rel_tol:
        raise ValueError(
            f"gradient of {obj.name!r} deviates from finite differences "
            f"by {worst:.3e} (tol {rel_tol:.1e})"
        )
    return worst


def check_field_derivatives(vf: VectorFieldPair, values, rel_tol: float = 1e-5) -> float:
    """Same finite-difference validation for dg1dF and dg2dF."""
    worst = 0.0
    for F in values:
        h = 1e-6 * (1.0 + abs(F))
        for g, dg in ((vf.g1, vf.dg1dF), (vf.g2, vf.dg2dF)):
            num = (g(F + h) - g(F - h)) / (2 * h)
            err = abs(dg(F) - num) / (1.0 + abs(dg(F)))
            worst = max(worst, float(err))
    if worst > rel_tol:
        raise ValueError(
            f"field derivatives of {vf.name!r} deviate from finite "
            f"differences by {worst:.3e} (tol {rel_tol:.1e})"
        )
    return worst


# Default shape of the non-convex 1-D test function: a quadratic bowl with a
# sharp Gaussian dent between the start point and the global minimum at 0.
# The dent must be wide and deep enough to trap the dither-driven state at
# small periods (its span has to exceed the oscillation amplitude a*sqrt(T))
# yet sit where the bowl value is large, so that the effective objective at
# larger periods smooths it away.  All three knobs are overridable.
F2_BETA = 0.25
F2_CENTER = 1.6
F2_SIGMA = 0.02


def make_f2(beta: float = F2_BETA, center: float = F2_CENTER,
            sigma: float = F2_SIGMA) -> Objective:
    """Non-convex 1-D objective: x^2/2 minus a narrow Gaussian bump."""

    def f(x):
        return 0.5 * x * x - beta * np.exp(-((x - center) ** 2) / (2 * sigma ** 2))

    def df(x):
        return x + beta * (x - center) / sigma ** 2 * np.exp(
            -((x - center) ** 2) / (2 * sigma ** 2))

    return Objective(name="f2", dim=1, eval=f, grad=df)


def make_constant(value: float = 1.0, dim: int = 1) -> Objective:
    """Constant field; the ES system must not drift on it."""
    if dim == 1:
        return Objective("constant", 1, lambda x: value + 0.0 * x,
                         lambda x: 0.0 * x)
    return Objective("constant", dim,
                     lambda x: value + 0.0 * np.asarray(x)[..., 0],
                     lambda x: 0.0 * np.asarray(x))


def _f1() -> Objective:
    return Objective("f1", 1, lambda x: 0.5 * x * x, lambda x: 1.0 * x)


def _f3() -> Objective:
    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (x[..., 0] ** 2 + x[..., 1] ** 2)

    def df(x):
        return np.asarray(x, dtype=float).copy()

    return Objective("f3", 2, f, df)


def builtin_objectives() -> list[Objective]:
    """The three study objectives: quadratic, non-convex, 2-D quadratic."""
    return [_f1(), make_f2(), _f3()]


def get_objective(name: str, **f2_overrides) -> Objective:
    if name == "f1":
        return _f1()
    if name == "f2":
        return make_f2(**f2_overrides)
    if name == "f3":
        return _f3()
    if name == "constant":
        return make_constant()
    raise KeyError(f"unknown objective {name!r}")


def make_vector_fields(name: str = "linear_gain", gain: float = 1.0) -> VectorFieldPair:
    """Named (g1, g2) pairs selectable from the CLI.

    linear_unit: g1=F,      g2=1
    linear_gain: g1=F,      g2=-gain   (the study system)
    trig:        g1=sin(F), g2=cos(F)
    """
    if name == "linear_unit":
        return VectorFieldPair("linear_unit",
                               g1=lambda F: F, g2=lambda F: 1.0 + 0.0 * F,
                               dg1dF=lambda F: 1.0 + 0.0 * F,
                               dg2dF=lambda F: 0.0 * F)
    if name == "linear_gain":
        a = float(gain)
        return VectorFieldPair("linear_gain",
                               g1=lambda F: F, g2=lambda F: -a + 0.0 * F,
                               dg1dF=lambda F: 1.0 + 0.0 * F,
                               dg2dF=lambda F: 0.0 * F)
    if name == "trig":
        return VectorFieldPair("trig", g1=np.sin, g2=np.cos,
                               dg1dF=np.cos, dg2dF=lambda F: -np.sin(F))
    raise KeyError(f"unknown vector-field pair {name!r}")
