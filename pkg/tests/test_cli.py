import json

import pytest

from sqzgrowth import io, pipeline
from sqzgrowth.cli import main
from sqzgrowth.estimator import Probe, build_series
from sqzgrowth.growth import REFERENCE_COHERENT, gompertz_eval
from sqzgrowth.simulator import SimConfig, simulate_run

NOISELESS = ["--set", "noise_rel_per_sample=1e-9", "--set", "dark_fraction=0"]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["simulate", "--seed", "3", "--out", str(out)]) == 0
    return out


def read(path):
    return json.loads(path.read_text())


def test_simulate_writes_dataset(run_dir):
    paths = io.dataset_paths(run_dir)
    assert all(p.exists() for p in paths.values())
    assert len(io.read_acquisitions(paths["acquisitions"])) == 600
    assert read(paths["config"])["seed"] == 3


def test_simulate_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", "--seed", "8", "--set", "run_duration_hours=0.5",
                     "--out", str(tmp_path / d)]) == 0
    for name in ("acquisitions.csv", "truth.csv", "blanks.csv", "calibration.json", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_raw_sidecar(tmp_path):
    assert main(["simulate", "--raw", "--set", "run_duration_hours=0.05", "--set",
                 "samples_per_acq=20", "--out", str(tmp_path)]) == 0
    acqs = io.read_acquisitions(tmp_path / "acquisitions.csv", tmp_path / "samples.csv")
    assert all(a.samples.size == 20 for a in acqs)


@pytest.mark.parametrize("argv", [
    ["simulate", "--set", "cadence_minutes=400"],
    ["simulate", "--set", "colour=1"],
    ["simulate", "--set", "seed"],
    ["frobnicate"],
    [],
])
def test_usage_errors(tmp_path, argv):
    assert main(argv + (["--out", str(tmp_path)] if argv[:1] == ["simulate"] else [])) == 2


def test_detect_flag_rules(run_dir, tmp_path):
    base = ["detect", str(run_dir), "--out", str(tmp_path)]
    assert main(base + ["--fn", "0.1"]) == 2
    assert main(base) == 2
    assert main(base + ["--symmetric", "0.05", "--fp", "0.01", "--fn", "0.1"]) == 2
    assert main(base + ["--symmetric", "1.5"]) == 2


def test_detect_symmetric_half_is_immediate(run_dir, tmp_path):
    assert main(["detect", str(run_dir), "--symmetric", "0.5", "--out", str(tmp_path)]) == 0
    doc = read(tmp_path / "detection.json")
    assert [r["t_detect_hours"] for r in doc["reports"]] == [0.0, 0.0]
    assert doc["advantage_hours"] == 0.0


def test_detect_squeezed_earlier(run_dir, tmp_path):
    assert main(["detect", str(run_dir), "--symmetric", "0.05", "--out", str(tmp_path)]) == 0
    doc = read(tmp_path / "detection.json")
    coh, sqz = doc["reports"]
    assert sqz["t_detect_hours"] < coh["t_detect_hours"]
    assert doc["advantage_hours"] == pytest.approx(coh["t_detect_hours"] - sqz["t_detect_hours"])
    rows = io.read_plot_table(tmp_path / "plot_table.csv")
    assert len(rows) == 600 and all(r["p_fn_at_fp"] is None for r in rows)


def test_detect_asymmetric_and_poly(run_dir, tmp_path):
    assert main(["detect", str(run_dir), "--fp", "0.01", "--fn", "0.1", "--h1", "poly",
                 "--probe", "squeezed", "--out", str(tmp_path)]) == 0
    (rep,) = read(tmp_path / "detection.json")["reports"]
    assert rep["criterion"] == "asymmetric" and rep["fp_target"] == 0.01 and rep["reached"]
    rows = io.read_plot_table(tmp_path / "plot_table.csv")
    assert all(r["p_fn_at_fp"] is not None for r in rows if r["probe"] is Probe.SQUEEZED
               and not r["excluded"])


def test_detect_not_reached_exits_zero(run_dir, tmp_path):
    assert main(["detect", str(run_dir), "--symmetric", "1e-300", "--out", str(tmp_path)]) == 0
    doc = read(tmp_path / "detection.json")
    assert not any(r["reached"] for r in doc["reports"]) and doc["advantage_hours"] is None


def test_pipeline_matches_library(run_dir, tmp_path):
    assert main(["fit", str(run_dir), "--out", str(tmp_path)]) == 0
    fits = {f["probe"]: f for f in read(tmp_path / "fit.json")["fits"]}
    ds = simulate_run(SimConfig(seed=3))
    series = build_series(ds.acquisitions, ds.calibration)
    for probe in (Probe.COHERENT, Probe.SQUEEZED):
        fit = pipeline.fit_probe(series, probe)
        assert fits[probe.value]["mu"] == fit.params.mu
        assert fits[probe.value]["a"] == fit.params.a
    assert main(["detect", str(run_dir), "--symmetric", "0.05", "--out", str(tmp_path)]) == 0
    coh, sqz, adv = pipeline.advantage(series, ds.calibration)
    assert read(tmp_path / "detection.json")["advantage_hours"] == adv


def test_fit_noiseless_recovers_parameters(tmp_path):
    data = tmp_path / "data"
    assert main(["simulate", *NOISELESS, "--out", str(data)]) == 0
    assert main(["fit", str(data), "--out", str(tmp_path)]) == 0
    g = REFERENCE_COHERENT
    shifted_a_bk = g.a_bk - gompertz_eval(g, 0.0)
    for f in read(tmp_path / "fit.json")["fits"]:
        assert f["converged"]
        assert f["a"] == pytest.approx(g.a, rel=1e-6)
        assert f["mu"] == pytest.approx(g.mu, rel=1e-6)
        assert f["theta"] == pytest.approx(g.theta, rel=1e-6)
        assert f["a_bk"] == pytest.approx(shifted_a_bk, rel=1e-6)
        assert f["early_poly"]["window_end_hours"] == 3.0


def test_fit_probe_rates_agree(run_dir, tmp_path):
    assert main(["fit", str(run_dir), "--out", str(tmp_path)]) == 0
    mu = [f["mu"] for f in read(tmp_path / "fit.json")["fits"]]
    assert abs(mu[0] - mu[1]) / mu[0] < 0.01


def test_fit_empty_dataset(tmp_path, run_dir):
    empty = tmp_path / "acquisitions.csv"
    empty.write_text(",".join(io.ACQ_COLUMNS) + "\n")
    assert main(["fit", str(empty), "--calibration", str(run_dir / "calibration.json"),
                 "--out", str(tmp_path)]) == 3


def test_fit_nonconvergence_exit(tmp_path):
    # a run far too short to see the growth curve gives no usable fit
    data = tmp_path / "data"
    assert main(["simulate", "--set", "run_duration_hours=0.05", "--out", str(data)]) == 0
    assert main(["fit", str(data), "--out", str(tmp_path)]) == 4
    assert main(["fit", str(data), "--allow-partial", "--out", str(tmp_path)]) == 0


def test_missing_and_malformed_inputs(tmp_path, run_dir):
    assert main(["fit", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 3
    bad = tmp_path / "bad" / "acquisitions.csv"
    bad.parent.mkdir()
    bad.write_text(",".join(io.ACQ_COLUMNS) + "\n0,coherent,x,1,10,1,5,1\n")
    assert main(["detect", str(bad), "--calibration", str(run_dir / "calibration.json"),
                 "--symmetric", "0.05", "--out", str(tmp_path)]) == 3


def test_calibrate(run_dir, tmp_path):
    assert main(["calibrate", str(run_dir / "blanks.csv"), "--out", str(tmp_path)]) == 2
    dark = read(run_dir / "calibration.json")["dark_variance"]
    assert main(["calibrate", str(run_dir / "blanks.csv"), "--dark-variance", repr(dark),
                 "--out", str(tmp_path)]) == 0
    assert io.read_calibration(tmp_path / "calibration.json") == io.read_calibration(
        run_dir / "calibration.json")
    assert main(["calibrate", str(run_dir / "blanks.csv"), "--set", f"cal_dark_variance={dark!r}",
                 "--set", "cal_v_detected_sqz=0.5", "--out", str(tmp_path)]) == 0
    assert io.read_calibration(tmp_path / "calibration.json").v_detected_sqz == 0.5
    assert main(["calibrate", str(run_dir / "acquisitions.csv"), "--dark-variance", "0",
                 "--out", str(tmp_path)]) == 3


def test_compare(run_dir, tmp_path):
    sym = tmp_path / "sym"
    assert main(["detect", str(run_dir), "--symmetric", "0.05", "--out", str(sym)]) == 0
    det = sym / "detection.json"
    assert main(["compare", str(det), "--out", str(tmp_path)]) == 0
    assert read(tmp_path / "comparison.json")["advantage_hours"] == read(det)["advantage_hours"]
    one = tmp_path / "one"
    assert main(["detect", str(run_dir), "--symmetric", "0.05", "--probe", "coherent",
                 "--out", str(one)]) == 0
    assert main(["compare", str(one / "detection.json"), str(one / "detection.json"),
                 "--out", str(tmp_path)]) == 0
    assert read(tmp_path / "comparison.json")["advantage_hours"] == 0.0
    asym = tmp_path / "asym"
    assert main(["detect", str(run_dir), "--fp", "0.01", "--fn", "0.1", "--out", str(asym)]) == 0
    assert main(["compare", str(det), str(asym / "detection.json")]) == 3
