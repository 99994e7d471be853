import csv
import dataclasses
import io

import pytest

from eskit.cli import (ConfigError, ExperimentConfig, cmd_compare,
                       cmd_landscape, cmd_simulate, cmd_verify, load_config,
                       main, parse_config_text)


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


FAST = ["--set", "integrator.steps_per_period=400",
        "--set", "run.horizon_periods=5"]


def test_config_round_trip():
    cfg = ExperimentConfig(objective="f2", f2_beta=0.3, gain=20.0,
                           periods=(0.1, 0.01), x0=(1.8,), horizon=2.0,
                           steps_per_period=800, out="a.csv")
    assert parse_config_text(cfg.to_text()) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("dither.frequency = 3")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("objective.name f1")


def test_bad_values_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("dither.period = fast")
    with pytest.raises(ConfigError):
        parse_config_text("dither.period = -0.1")
    with pytest.raises(ConfigError):
        parse_config_text("run.horizon_periods = 0")


def test_comments_and_blanks_ignored():
    cfg = parse_config_text("# a comment\n\nfields.gain = 5.0  # inline\n")
    assert cfg.gain == 5.0


def test_overrides_take_precedence(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("fields.gain = 5.0\n")
    cfg = load_config(str(p), ["fields.gain=7.0"])
    assert cfg.gain == 7.0


def test_x0_dimension_checked():
    cfg = ExperimentConfig(objective="f3", x0=(1.8,), horizon_periods=1)
    with pytest.raises(ConfigError):
        cmd_simulate(cfg)


def test_simulate_row_count():
    cfg = ExperimentConfig(periods=(0.1,), horizon_periods=5,
                           steps_per_period=400, gain=5.0)
    report = cmd_simulate(cfg)
    assert report.header == ["T", "k", "t", "x"]
    assert len(report.rows) == 6
    assert report.rows[0][3] == pytest.approx(1.8)


def test_simulate_constant_objective_stays_put():
    cfg = ExperimentConfig(objective="constant", periods=(0.1,),
                           horizon_periods=4, steps_per_period=400)
    report = cmd_simulate(cfg)
    for row in report.rows:
        assert row[3] == pytest.approx(1.8, abs=1e-12)


def test_simulate_staircase_shape():
    cfg = ExperimentConfig(objective="f3", gain=10.0, periods=(0.01,),
                           x0=(1.8, 1.8), horizon_periods=4,
                           steps_per_period=400)
    report = cmd_simulate(cfg)
    assert report.header == ["T", "k", "t", "x1", "x2"]
    rows = report.rows
    # block 0 moves x1, barely x2; block 1 the reverse
    m0 = (abs(rows[1][3] - rows[0][3]), abs(rows[1][4] - rows[0][4]))
    m1 = (abs(rows[2][3] - rows[1][3]), abs(rows[2][4] - rows[1][4]))
    assert m0[1] < 0.1 * m0[0]
    assert m1[0] < 0.1 * m1[1]


def test_compare_identical_periods_zero_ratio_gap():
    cfg = ExperimentConfig(periods=(0.1, 0.1), horizon_periods=5,
                           steps_per_period=400, gain=5.0)
    report, summary = cmd_compare(cfg)
    assert summary.rows[0][2] == pytest.approx(summary.rows[1][2])
    assert summary.rows[0][5] == pytest.approx(1.0)
    errs = [row[-1] for row in report.rows]
    assert max(errs) < 0.1


def test_compare_agreement_flag_on_stall_vs_escape():
    # Non-convex objective: the recursion stalls in the dent while the
    # simulation passes through it, which must raise the agreement flag.
    cfg = ExperimentConfig(objective="f2", gain=20.0, periods=(5e-4,),
                           horizon_periods=1200, steps_per_period=400,
                           agreement_tol=0.25)
    _report, summary = cmd_compare(cfg)
    assert summary.rows[0][4] == "divergent"


def test_landscape_rejects_one_point_grid():
    cfg = ExperimentConfig(grid_points=1)
    with pytest.raises(ConfigError):
        cmd_landscape(cfg)


def test_landscape_unimodal_for_bowl():
    cfg = ExperimentConfig(periods=(0.1,), gain=5.0, grid_points=21,
                           grid_min=0.05, grid_max=1.8, steps_per_period=400)
    report = cmd_landscape(cfg)
    assert report.header == ["T", "x", "grad", "L"]
    grads = [row[2] for row in report.rows]
    signs = [g > 0 for g in grads]
    assert sum(s1 != s2 for s1, s2 in zip(signs, signs[1:])) <= 1


def test_verify_default_all_pass():
    cfg = ExperimentConfig(periods=(0.1,), gain=5.0, steps_per_period=2000)
    report = cmd_verify(cfg)
    assert report.header == ["check", "passed", "measured", "tolerance"]
    assert all(row[1] == "pass" for row in report.rows)


def test_verify_flags_broken_dither(tmp_path):
    # A sawtooth also passes; break the premise via a custom amplitude law is
    # not exposed, so check the failure path through the offset objective
    # gradient instead: verify must *report* failures, not raise.
    cfg = ExperimentConfig(periods=(0.1,), gain=5.0, steps_per_period=2000,
                           dither_kind="square")
    report = cmd_verify(cfg)
    assert all(row[1] in ("pass", "FAIL") for row in report.rows)


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "o.csv"
    rc = main(["simulate", "--out", str(out),
               "--set", "dither.period=0.1", "--set", "fields.gain=5.0",
               *FAST])
    assert rc == 0
    header, rows = _read_csv(out)
    assert header == ["T", "k", "t", "x"]
    assert len(rows) == 6

    rc = main(["simulate", "--set", "objective.name=unknown", *FAST,
               "--out", str(out)])
    assert rc == 1

    rc = main(["simulate", "--set", "run.x0=1e9", "--set", "dither.period=0.1",
               *FAST, "--out", str(out)])
    assert rc == 2
    _header, rows = _read_csv(out)
    assert rows[-1][-1] == "diverged"


def test_main_compare_writes_summary(tmp_path):
    out = tmp_path / "cmp.csv"
    rc = main(["compare", "--out", str(out), "--set", "dither.period=0.1",
               "--set", "fields.gain=5.0", *FAST])
    assert rc == 0
    header, _rows = _read_csv(tmp_path / "cmp.summary.csv")
    assert header == ["T", "K", "error_mid", "error_final", "agreement",
                      "ratio_vs_next"]


def test_preset_configs_parse():
    import pathlib
    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    for name in ("example1.cfg", "example2.cfg", "example3.cfg"):
        cfg = load_config(str(root / name), [])
        assert isinstance(cfg, ExperimentConfig)
        text = cfg.to_text()
        assert parse_config_text(text) == dataclasses.replace(cfg)
