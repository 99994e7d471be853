"""Command-line harness: configure experiments, run them, write CSV output.

Subcommands
-----------
simulate   dense trajectory sampled at period boundaries (the learning
           dynamics), one row per period per configured period T.
compare    simulated learning dynamics vs. the per-period recursion, with an
           error column and a summary CSV of error ratios between
           consecutive periods.
landscape  effective-objective profile on a uniform state grid, per period.
verify     self-check suite: dither assumptions, derivative consistency,
           state-transition-matrix identities, needle first-order accuracy
           and needle-sum convergence.

Configs are flat ``key = value`` text files (``#`` starts a comment); every
key can also be set on the command line with ``--set key=value``, which takes
precedence over the file. Exit codes: 0 success, 1 configuration error,
2 divergence detected.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .dither import (DitherPair, make_dither, make_sequential, sample_needles,
                     verify_assumptions)
from .learning import (compare_runs, extract_simulated_ld,
                       recovered_gradient, recovered_gradient_finite_N,
                       reconstruct_landscape, run_recursion)
from .objective import (check_field_derivatives, check_gradient,
                        get_objective, make_lie_bracket, make_vector_fields)
from .ode import (DivergenceError, IntegratorConfig, needle_dither,
                  simulate_es, simulate_nominal, simulate_variational)
from .stm import build_stm, check_stm_symmetry


class ConfigError(ValueError):
    """Invalid configuration file, key, or value."""


# --------------------------------------------------------------------------
# Configuration


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in str(text).split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


def _parse_int(text: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs; maps 1:1 onto the config-file keys."""

    objective: str = "f1"
    f2_beta: float | None = None
    f2_center: float | None = None
    f2_sigma: float | None = None
    fields: str = "linear_gain"
    gain: float = 1.0
    dither_kind: str = "trig"
    amplitude: str = "sqrt_omega_scaled"
    periods: tuple[float, ...] = (0.1,)
    needles: int = 0  # 0 = continuum limit
    x0: tuple[float, ...] = (1.8,)
    horizon: float = 0.0  # time horizon; 0 = use horizon_periods
    horizon_periods: int = 20
    steps_per_period: int = 2000
    method: str = "rk4"
    grid_min: float = 0.05
    grid_max: float = 1.8
    grid_points: int = 71
    agreement_tol: float = 0.25
    out: str = "out.csv"

    def __post_init__(self):
        if not self.periods or any(T <= 0 for T in self.periods):
            raise ConfigError("dither.period entries must be positive")
        if self.horizon_periods < 1:
            raise ConfigError("run.horizon_periods must be at least 1")
        if self.horizon < 0:
            raise ConfigError("run.horizon must be non-negative")
        if self.needles < 0:
            raise ConfigError("dither.needles must be non-negative")

    def periods_of(self, T: float) -> int:
        if self.horizon > 0:
            K = round(self.horizon / T)
            if K < 1 or not math.isclose(K * T, self.horizon, rel_tol=1e-9):
                raise ConfigError(
                    f"run.horizon {self.horizon} is not a multiple of T={T}")
            return K
        return self.horizon_periods

    def integrator(self) -> IntegratorConfig:
        try:
            return IntegratorConfig(steps_per_period=self.steps_per_period,
                                    method=self.method)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_text(self) -> str:
        lines = []
        for key, (attr, _parse) in _KEYS.items():
            value = getattr(self, attr)
            if value is None:
                continue
            lines.append(f"{key} = {_fmt(value)}")
        return "\n".join(lines) + "\n"


# dotted config key -> (ExperimentConfig attribute, parser)
_KEYS = {
    "objective.name": ("objective", str),
    "objective.beta": ("f2_beta", _parse_float),
    "objective.center": ("f2_center", _parse_float),
    "objective.sigma": ("f2_sigma", _parse_float),
    "fields.name": ("fields", str),
    "fields.gain": ("gain", _parse_float),
    "dither.kind": ("dither_kind", str),
    "dither.amplitude": ("amplitude", str),
    "dither.period": ("periods", _parse_floats),
    "dither.needles": ("needles", _parse_int),
    "run.x0": ("x0", _parse_floats),
    "run.horizon": ("horizon", _parse_float),
    "run.horizon_periods": ("horizon_periods", _parse_int),
    "integrator.steps_per_period": ("steps_per_period", _parse_int),
    "integrator.method": ("method", str),
    "landscape.grid_min": ("grid_min", _parse_float),
    "landscape.grid_max": ("grid_max", _parse_float),
    "landscape.grid_points": ("grid_points", _parse_int),
    "compare.agreement_tol": ("agreement_tol", _parse_float),
    "output.path": ("out", str),
}


def parse_config_text(text: str,
                      base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = dataclasses.asdict(base) if base is not None else {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        attr, parse = _KEYS[key]
        values[attr] = parse(value)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | None, overrides: list[str]) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        cfg = parse_config_text(text, base=cfg)
    if overrides:
        lines = []
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            lines.append(item)
        cfg = parse_config_text("\n".join(lines), base=cfg)
    return cfg


# --------------------------------------------------------------------------
# Experiment assembly


def _build(cfg: ExperimentConfig):
    overrides = {}
    if cfg.objective == "f2":
        for key, val in (("beta", cfg.f2_beta), ("center", cfg.f2_center),
                         ("sigma", cfg.f2_sigma)):
            if val is not None:
                overrides[key] = val
    try:
        obj = get_objective(cfg.objective, **overrides)
        vf = make_vector_fields(cfg.fields, gain=cfg.gain)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    g0 = make_lie_bracket(vf)
    if len(cfg.x0) != obj.dim:
        raise ConfigError(
            f"run.x0 has {len(cfg.x0)} components but {cfg.objective} "
            f"has dimension {obj.dim}")
    x0 = cfg.x0[0] if obj.dim == 1 else np.asarray(cfg.x0, dtype=float)
    return obj, vf, g0, x0


def _make_dither(cfg: ExperimentConfig, T: float, dim: int):
    try:
        base = make_dither(cfg.dither_kind, T, amplitude_law=cfg.amplitude)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return make_sequential(base, dim) if dim > 1 else base


# --------------------------------------------------------------------------
# CSV plumbing

DIVERGED = "diverged"


@dataclass
class CsvReport:
    header: list[str]
    rows: list[list] = field(default_factory=list)
    diverged: bool = False

    def write(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header)
            writer.writerows(self.rows)


def _state_columns(dim: int, prefix: str = "x") -> list[str]:
    return [prefix] if dim == 1 else [f"{prefix}{i + 1}" for i in range(dim)]


def _components(state, dim: int) -> list[float]:
    return [float(state)] if dim == 1 else [float(v) for v in state]


# --------------------------------------------------------------------------
# Subcommands


def cmd_simulate(cfg: ExperimentConfig) -> CsvReport:
    obj, vf, _g0, x0 = _build(cfg)
    report = CsvReport(header=["T", "k", "t"] + _state_columns(obj.dim))
    for T in cfg.periods:
        d = _make_dither(cfg, T, obj.dim)
        K = cfg.periods_of(T)
        block = d.T  # sequential dithers advance one dimension per base period
        try:
            traj = simulate_es(obj, vf, d, x0, K * block, cfg.integrator())
        except DivergenceError as exc:
            report.diverged = True
            report.rows.append([T, "", exc.time] + [DIVERGED] * obj.dim)
            continue
        run = extract_simulated_ld(traj, d)
        for k, state in enumerate(run.states):
            report.rows.append([T, k, k * block] + _components(state, obj.dim))
    return report


def cmd_compare(cfg: ExperimentConfig) -> tuple[CsvReport, CsvReport]:
    obj, vf, g0, x0 = _build(cfg)
    header = (["T", "k", "t"] + _state_columns(obj.dim, "x_sim")
              + _state_columns(obj.dim, "x_rec") + ["error"])
    report = CsvReport(header=header)
    summary = CsvReport(header=["T", "K", "error_mid", "error_final",
                                "agreement", "ratio_vs_next"])
    mids: list[float] = []
    for T in cfg.periods:
        d = _make_dither(cfg, T, obj.dim)
        K = cfg.periods_of(T)
        icfg = cfg.integrator()
        try:
            traj = simulate_es(obj, vf, d, x0, K * d.T, icfg)
        except DivergenceError as exc:
            report.diverged = True
            report.rows.append([T, "", exc.time]
                               + [DIVERGED] * (2 * obj.dim) + [DIVERGED])
            summary.rows.append([T, K, DIVERGED, DIVERGED, DIVERGED, ""])
            mids.append(math.nan)
            continue
        sim = extract_simulated_ld(traj, d)
        rec = run_recursion(obj, vf, g0, d, x0, K, icfg)
        if rec.diverged:
            report.diverged = True
            n = len(rec.states)
            errors = compare_runs(
                extract_simulated_ld(traj, d), rec) if n == K + 1 else None
        else:
            errors = compare_runs(sim, rec)
        for k in range(len(rec.states)):
            err = float(errors[k]) if errors is not None else DIVERGED
            report.rows.append(
                [T, k, k * d.T] + _components(sim.states[k], obj.dim)
                + _components(rec.states[k], obj.dim) + [err])
        if errors is None:
            summary.rows.append([T, K, DIVERGED, DIVERGED, DIVERGED, ""])
            mids.append(math.nan)
            continue
        mid = float(errors[K // 2])
        final = float(errors[-1])
        agreement = "ok" if final <= cfg.agreement_tol else "divergent"
        summary.rows.append([T, K, mid, final, agreement, ""])
        mids.append(mid)
    for i in range(len(cfg.periods) - 1):
        if math.isfinite(mids[i]) and math.isfinite(mids[i + 1]) and mids[i + 1]:
            summary.rows[i][-1] = mids[i] / mids[i + 1]
    return report, summary


def cmd_landscape(cfg: ExperimentConfig) -> CsvReport:
    obj, vf, g0, _x0 = _build(cfg)
    if obj.dim != 1:
        raise ConfigError("landscape reconstruction is one-dimensional")
    if cfg.grid_points < 2:
        raise ConfigError("landscape.grid_points must be at least 2")
    if not cfg.grid_max > cfg.grid_min:
        raise ConfigError("landscape.grid_max must exceed landscape.grid_min")
    grid = np.linspace(cfg.grid_min, cfg.grid_max, cfg.grid_points)
    report = CsvReport(header=["T", "x", "grad", "L"])
    for T in cfg.periods:
        d = _make_dither(cfg, T, 1)
        try:
            land = reconstruct_landscape(obj, vf, g0, d, grid, cfg.integrator())
        except DivergenceError:
            report.diverged = True
            for x in grid:
                report.rows.append([T, float(x), DIVERGED, DIVERGED])
            continue
        for x, g, L in zip(grid, land.gradients, land.L_values):
            report.rows.append([T, float(x), float(g), float(L)])
    return report


def _needle_ratios(obj, vf, d, x0: float, icfg: IntegratorConfig,
                   halvings: int = 3) -> list[float]:
    """First-order residual ratios r(eps)/r(eps/2) for a single needle."""
    T = d.T
    nominal = simulate_nominal(obj, vf, d, x0, T, icfg)
    tbar = 0.1 * T
    alpha = 1.0
    residuals = []
    # Tie the needle width to the integration grid so halving it never
    # collides with edge snapping (the smallest width stays a whole number
    # of steps).
    eps = 40 * T / icfg.steps_per_period * 2 ** max(0, halvings - 3)
    for _ in range(halvings + 1):
        pert = needle_dither(d, tbar, eps, alpha)
        x_eps = simulate_es(obj, vf, pert, x0, T, icfg)
        v = simulate_variational(obj, vf, d, nominal, tbar, alpha, eps, icfg)
        residuals.append(abs(float(x_eps.states[-1]) - float(nominal.states[-1])
                             - eps * float(v.states[-1])))
        eps /= 2.0
    return [residuals[i] / residuals[i + 1] for i in range(halvings)]


def cmd_verify(cfg: ExperimentConfig) -> CsvReport:
    obj, vf, g0, x0 = _build(cfg)
    report = CsvReport(header=["check", "passed", "measured", "tolerance"])

    def add(name: str, passed: bool, measured, tol):
        report.rows.append([name, "pass" if passed else "FAIL",
                            measured, tol])

    T = cfg.periods[0]
    d = _make_dither(cfg, T, 1) if obj.dim == 1 else make_dither(
        cfg.dither_kind, T, amplitude_law=cfg.amplitude)
    base = d.base if hasattr(d, "base") else d

    a = verify_assumptions(base)
    add("dither.bounded", a.a1_passed, a.a1_bound, "finite")
    add("dither.u1_antisymmetry", a.a2_passed, a.a2_violation, 1e-9)
    add("dither.u2_antisymmetry", a.a3_passed, a.a3_violation, 1e-9)

    pts = (np.linspace(-2.0, 2.0, 9) if obj.dim == 1
           else np.random.default_rng(0).uniform(-2, 2, size=(9, obj.dim)))
    try:
        worst = check_gradient(obj, pts)
        add("objective.gradient", True, worst, 1e-5)
    except ValueError:
        add("objective.gradient", False, "inconsistent", 1e-5)
    try:
        worst = check_field_derivatives(vf, np.linspace(-2.0, 2.0, 9))
        add("fields.derivatives", True, worst, 1e-5)
    except ValueError:
        add("fields.derivatives", False, "inconsistent", 1e-5)

    icfg = cfg.integrator()
    x_scalar = float(np.atleast_1d(cfg.x0)[0])
    scalar_obj = obj if obj.dim == 1 else get_objective("f1")
    nominal = simulate_nominal(scalar_obj, vf, base, x_scalar, T, icfg)
    stm = build_stm(scalar_obj, vf, base, nominal)

    rng = np.random.default_rng(1)
    n = len(nominal.states) - 1
    k = rng.integers(0, n + 1, size=(1000, 3))
    lhs = stm.phi_nodes(k[:, 2], k[:, 0])
    rhs = stm.phi_nodes(k[:, 2], k[:, 1]) * stm.phi_nodes(k[:, 1], k[:, 0])
    semi = float(np.max(np.abs(lhs - rhs) / np.abs(lhs)))
    add("stm.semigroup", semi <= 1e-10, semi, 1e-10)

    sym = check_stm_symmetry(stm)
    add("stm.symmetry", sym.passed, sym.max_violation, 1e-8 * sym.scale)

    ratios = _needle_ratios(scalar_obj, vf, base, x_scalar, icfg)
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    add("needle.first_order_ratios", ok,
        "; ".join(f"{r:.3f}" for r in ratios), "[3.5, 4.5]")

    limit = recovered_gradient(scalar_obj, vf, g0, base, x_scalar, icfg).value
    coarse = recovered_gradient_finite_N(
        scalar_obj, vf, g0, base, x_scalar, 10, icfg).value
    fine = recovered_gradient_finite_N(
        scalar_obj, vf, g0, base, x_scalar, 640, icfg).value
    scale = max(abs(limit), 1e-300)
    err_fine = abs(fine - limit) / scale
    err_coarse = abs(coarse - limit) / scale
    tol = max(err_coarse / 10.0, 1e-11)
    add("needle.sum_convergence", err_fine <= tol, err_fine, tol)
    return report


# --------------------------------------------------------------------------
# Entry point


def _summary_path(path: str) -> str:
    return (path[:-4] if path.endswith(".csv") else path) + ".summary.csv"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="eskit",
        description="Perturbation-driven gradient-descent experiment runner")
    parser.add_argument("command",
                        choices=["simulate", "compare", "landscape", "verify"])
    parser.add_argument("--config", help="experiment config file")
    parser.add_argument("--out", help="output CSV path (overrides output.path)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.set)
        if args.out:
            cfg = dataclasses.replace(cfg, out=args.out)
        if args.command == "simulate":
            report = cmd_simulate(cfg)
            report.write(cfg.out)
        elif args.command == "compare":
            report, summary = cmd_compare(cfg)
            report.write(cfg.out)
            summary.write(_summary_path(cfg.out))
        elif args.command == "landscape":
            report = cmd_landscape(cfg)
            report.write(cfg.out)
        else:
            report = cmd_verify(cfg)
            report.write(cfg.out)
            for row in report.rows:
                print(f"{row[1]:>4}  {row[0]:<28} measured={row[2]} "
                      f"tol={row[3]}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {cfg.out}")
    if report.diverged:
        print("divergence detected", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
