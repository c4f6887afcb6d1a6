import json

import numpy as np
import pytest

from sqzgrowth import io, pipeline
from sqzgrowth.errors import ConfigError, SchemaError
from sqzgrowth.estimator import Probe, build_series
from sqzgrowth.hypothesis import Criterion, DetectionReport
from sqzgrowth.simulator import SimConfig, simulate_run

HEADER = ",".join(io.ACQ_COLUMNS) + "\n"
GOOD = "0.0,coherent,0.8,0.001,10000,1.7,5.0,250000.0\n"


@pytest.fixture(scope="module")
def dataset():
    return simulate_run(SimConfig(seed=21, lock_loss_prob=0.05))


@pytest.fixture(scope="module")
def series(dataset):
    return build_series(dataset.acquisitions, dataset.calibration)


def write(tmp_path, text, name="acq.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_acquisition_round_trip(tmp_path, dataset):
    p = tmp_path / "acq.csv"
    io.write_acquisitions(dataset.acquisitions, p)
    assert io.read_acquisitions(p) == dataset.acquisitions


def test_samples_sidecar_round_trip(tmp_path):
    ds = simulate_run(SimConfig(seed=1, run_duration_hours=1 / 30, samples_per_acq=50), keep_samples=True)
    acq, smp = tmp_path / "acq.csv", tmp_path / "samples.csv"
    io.write_acquisitions(ds.acquisitions, acq)
    io.write_samples(ds.acquisitions, smp)
    back = io.read_acquisitions(acq, smp)
    for a, b in zip(ds.acquisitions, back):
        assert a.summary() == b.summary()
        np.testing.assert_array_equal(a.samples, b.samples)
    with pytest.raises(ValueError):
        io.write_samples([a.summary() for a in ds.acquisitions], tmp_path / "x.csv")
    with pytest.raises(SchemaError):
        io.attach_samples(ds.acquisitions[:1], io.read_samples(smp))


def test_truth_round_trip(tmp_path, dataset):
    p = tmp_path / "truth.csv"
    io.write_truth(dataset.truth, p)
    assert io.read_truth(p) == dataset.truth
    assert any(r.lock_loss for r in dataset.truth)


def test_calibration_round_trip(tmp_path, dataset):
    p = tmp_path / "cal.json"
    io.write_calibration(dataset.calibration, p)
    assert io.read_calibration(p) == dataset.calibration
    doc = json.loads(p.read_text())
    doc["extra"] = 1
    p.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        io.read_calibration(p)


def test_empty_file(tmp_path):
    assert io.read_acquisitions(write(tmp_path, HEADER)) == []


@pytest.mark.parametrize("row,column", [
    ("0.0,coherent,0.8,-0.001,10000,1.7,5.0,250000.0", "variance"),
    ("0.0,coherent,nan,0.001,10000,1.7,5.0,250000.0", "mean"),
    ("inf,coherent,0.8,0.001,10000,1.7,5.0,250000.0", "t_hours"),
    ("0.0,thermal,0.8,0.001,10000,1.7,5.0,250000.0", "probe"),
    ("0.0,coherent,0.8,0.001,10k,1.7,5.0,250000.0", "count"),
    ("0.0,coherent,0.8,0.001,10000,0,5.0,250000.0", "monitor_power"),
    ("0.0,coherent,0.8,0.001", "count"),
])
def test_schema_errors_name_row_and_column(tmp_path, row, column):
    p = write(tmp_path, HEADER + GOOD + row + "\n")
    with pytest.raises(SchemaError) as info:
        io.read_acquisitions(p)
    assert info.value.row == 2 and info.value.column == column
    assert f"row 2, column '{column}'" in str(info.value)


def test_header_required(tmp_path):
    with pytest.raises(SchemaError):
        io.read_acquisitions(write(tmp_path, GOOD))
    with pytest.raises(SchemaError):
        io.read_acquisitions(write(tmp_path, ""))


def test_run_config_round_trip(tmp_path):
    cfg = io.make_run_config({"seed": 4, "cadence_minutes": 2}, [("margin_db", 2.0)])
    p = tmp_path / "config.json"
    io.write_run_config(cfg, p)
    assert io.load_run_config(p) == cfg
    assert cfg.to_sim_config().cadence_minutes == 2.0
    keys = cfg.as_dict()
    for k in ("run_duration_hours", "cadence_minutes", "acq_duration_s", "probe_power_mw",
              "sqz_at_blank_db", "growth_mu_per_hour", "growth_theta_hours", "margin_db"):
        assert k in keys


@pytest.mark.parametrize("doc", [
    {"colour": 1},
    {"seed": 1.5},
    {"seed": "one"},
    {"cadence_minutes": True},
    {"h1_source": "guess"},
    {"cadence_minutes": 400},
])
def test_run_config_rejections(doc):
    with pytest.raises(ConfigError):
        io.make_run_config(doc)


def test_parse_override():
    assert io.parse_override("seed=3") == ("seed", 3)
    assert io.parse_override("h1_source=poly") == ("h1_source", "poly")
    assert io.parse_override("cal_dark_variance=null") == ("cal_dark_variance", None)
    with pytest.raises(ConfigError):
        io.parse_override("seed")


def test_plot_table(tmp_path, dataset, series):
    curves = {p: pipeline.error_curves(series, dataset.calibration, p, fp_target=0.01)
              for p in (Probe.COHERENT, Probe.SQUEEZED)}
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    io.write_plot_table(series, curves, a)
    io.write_plot_table(list(reversed(series)), curves, b)
    assert a.read_bytes() == b.read_bytes()
    rows = io.read_plot_table(a)
    assert sum(r["probe"] is Probe.COHERENT for r in rows) == 300
    assert sum(r["probe"] is Probe.SQUEEZED for r in rows) == 300
    keys = [(r["t"], r["probe"].value) for r in rows]
    assert keys == sorted(keys)
    excluded = [r for r in rows if r["excluded"]]
    assert excluded
    for r in excluded:
        assert all(r[c] is None for c in io.PLOT_COLUMNS[2:-1])
    for r in rows:
        if not r["excluded"]:
            assert r["p_mean"] is not None and r["p_fn_at_fp"] is not None


def test_plot_table_without_fn(tmp_path, dataset, series):
    curves = {Probe.COHERENT: pipeline.error_curves(series, dataset.calibration, Probe.COHERENT)}
    p = tmp_path / "plot.csv"
    io.write_plot_table(series, curves, p)
    rows = io.read_plot_table(p)
    coh = [r for r in rows if r["probe"] is Probe.COHERENT]
    assert all(r["p_fn_at_fp"] is None and r["p_mean"] is not None for r in coh)
    assert all(r["p_mean"] is None for r in rows if r["probe"] is Probe.SQUEEZED)


def test_detection_report_round_trip(tmp_path):
    reports = [DetectionReport("coherent", Criterion.SYMMETRIC, 0.05, 2.25),
               DetectionReport("squeezed", Criterion.ASYMMETRIC, 0.1, None, 0.01)]
    p = tmp_path / "detection.json"
    io.write_detection_reports(reports, p, {"advantage_hours": None})
    back = io.read_detection_reports(p)
    assert [io.report_to_dict(r) for r in back] == [io.report_to_dict(r) for r in reports]
    p.write_text('{"reports": [{"probe": "coherent"}]}')
    with pytest.raises(SchemaError):
        io.read_detection_reports(p)


def test_fit_report(tmp_path, series):
    fit = pipeline.fit_probe(series, Probe.COHERENT)
    p = tmp_path / "fit.json"
    io.write_fit_report({Probe.COHERENT: fit}, p)
    (doc,) = io.read_fit_report(p)
    assert doc["probe"] == "coherent" and doc["mu"] == fit.params.mu
    assert doc["doubling_time_hours"] == pytest.approx(3.6, abs=0.2)


def test_json_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    io.write_json({"b": 1.0, "a": [1, 2]}, a)
    io.write_json({"a": [1, 2], "b": 1.0}, b)
    assert a.read_bytes() == b.read_bytes()
    with pytest.raises(ValueError):
        io.write_json({"x": float("nan")}, a)
