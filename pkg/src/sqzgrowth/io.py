"""File formats: acquisition and truth CSVs, calibration and run-config JSON,
plot tables and analysis reports.

Summary CSVs write floats with ``repr`` so that reading them back gives the
identical values; plot tables use 9 significant digits. All writers
produce byte-identical output for identical input.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, SchemaError
from .estimator import Acquisition, CalibrationRecord, Probe
from .growth import FitResult, GompertzParams, doubling_time, inflection_point
from .hypothesis import Criterion, DetectionReport
from .simulator import SimConfig, TruthRow

ACQ_COLUMNS = ("t_hours", "probe", "mean", "variance", "count", "monitor_power",
               "duration_s", "sample_rate_hz")
SAMPLE_COLUMNS = ("t_hours", "probe", "value")
TRUTH_COLUMNS = ("t_hours", "probe", "eta_true", "v_true", "drift", "lock_loss")
PLOT_COLUMNS = ("t", "probe", "eta_hat", "sigma_eta", "a_mode", "a_mean_corr", "a_sigma_corr",
                "var_db", "expected_var_db", "p_mean", "p_fn_at_fp", "excluded")
# analysis columns blanked for excluded points
_ANALYSIS_COLUMNS = PLOT_COLUMNS[2:-1]


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt9(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{float(x):.9g}"


def _open_write(path):
    return open(path, "w", encoding="utf-8", newline="")


def _parse_float(text, row, column, nonneg=False):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise SchemaError(f"not a number: {text!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise SchemaError(f"non-finite value {text!r}", row=row, column=column)
    if nonneg and value < 0.0:
        raise SchemaError(f"negative value {text!r}", row=row, column=column)
    return value


def _parse_int(text, row, column):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise SchemaError(f"not an integer: {text!r}", row=row, column=column) from None


def _parse_probe(text, row, column="probe"):
    try:
        return Probe(text)
    except ValueError:
        raise SchemaError(f"unknown probe {text!r}", row=row, column=column) from None


def _read_rows(path, columns):
    """Yield (1-based data row, row dict) after checking the header."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError("missing header", column=columns[0])
        if tuple(h.strip() for h in header) != columns:
            raise SchemaError(f"expected header {','.join(columns)}", column=header[0] if header else "")
        for lineno, values in enumerate(reader, start=1):
            if not values:
                continue
            if len(values) != len(columns):
                col = columns[min(len(values), len(columns) - 1)]
                raise SchemaError(f"expected {len(columns)} fields, got {len(values)}",
                                  row=lineno, column=col)
            yield lineno, dict(zip(columns, (v.strip() for v in values)))


# acquisitions -------------------------------------------------------------

def write_acquisitions(acquisitions, path) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ACQ_COLUMNS)
        for a in acquisitions:
            w.writerow([_fmt(a.t_hours), a.probe.value, _fmt(a.mean), _fmt(a.variance),
                        str(int(a.count)), _fmt(a.monitor_power), _fmt(a.duration_s),
                        _fmt(a.sample_rate_hz)])


def read_acquisitions(path, samples_path=None) -> list[Acquisition]:
    """Summary acquisitions in file order; raw samples attached if a sidecar is given."""
    out = []
    for row, rec in _read_rows(path, ACQ_COLUMNS):
        count = _parse_int(rec["count"], row, "count")
        if count < 2:
            raise SchemaError(f"count must be >= 2, got {count}", row=row, column="count")
        monitor = _parse_float(rec["monitor_power"], row, "monitor_power")
        if not monitor > 0.0:
            raise SchemaError("monitor power must be positive", row=row, column="monitor_power")
        out.append(Acquisition(
            t_hours=_parse_float(rec["t_hours"], row, "t_hours"),
            probe=_parse_probe(rec["probe"], row),
            mean=_parse_float(rec["mean"], row, "mean"),
            variance=_parse_float(rec["variance"], row, "variance", nonneg=True),
            count=count,
            monitor_power=monitor,
            duration_s=_parse_float(rec["duration_s"], row, "duration_s", nonneg=True),
            sample_rate_hz=_parse_float(rec["sample_rate_hz"], row, "sample_rate_hz", nonneg=True),
        ))
    if samples_path is not None:
        out = attach_samples(out, read_samples(samples_path))
    return out


def write_samples(acquisitions, path) -> None:
    """Raw-sample sidecar: one sample per row, grouped by acquisition."""
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_COLUMNS)
        for a in acquisitions:
            if a.samples is None:
                raise ValueError(f"acquisition at t={a.t_hours} carries no raw samples")
            t, p = _fmt(a.t_hours), a.probe.value
            for x in a.samples:
                w.writerow([t, p, _fmt(x)])


def read_samples(path) -> list[tuple[float, Probe, np.ndarray]]:
    """Consecutive rows sharing (t_hours, probe) form one acquisition."""
    groups = []
    key = None
    buf: list[float] = []
    for row, rec in _read_rows(path, SAMPLE_COLUMNS):
        k = (_parse_float(rec["t_hours"], row, "t_hours"), _parse_probe(rec["probe"], row))
        if k != key:
            if key is not None:
                groups.append((key[0], key[1], np.array(buf)))
            key, buf = k, []
        buf.append(_parse_float(rec["value"], row, "value"))
    if key is not None:
        groups.append((key[0], key[1], np.array(buf)))
    return groups


def attach_samples(acquisitions, groups) -> list[Acquisition]:
    if len(groups) != len(acquisitions):
        raise SchemaError(f"sidecar holds {len(groups)} acquisitions, summary {len(acquisitions)}",
                          column="t_hours")
    out = []
    for i, (a, (t, probe, x)) in enumerate(zip(acquisitions, groups), start=1):
        if t != a.t_hours or probe is not a.probe or x.size != a.count:
            raise SchemaError("sidecar does not match summary", row=i, column="t_hours")
        out.append(dataclasses.replace(a, samples=x))
    return out


# truth --------------------------------------------------------------------

def write_truth(rows, path) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.t_hours), r.probe.value, _fmt(r.eta_true), _fmt(r.v_true),
                        _fmt(r.drift), "true" if r.lock_loss else "false"])


def read_truth(path) -> list[TruthRow]:
    out = []
    for row, rec in _read_rows(path, TRUTH_COLUMNS):
        flag = rec["lock_loss"]
        if flag not in ("true", "false"):
            raise SchemaError(f"expected true/false, got {flag!r}", row=row, column="lock_loss")
        out.append(TruthRow(
            t_hours=_parse_float(rec["t_hours"], row, "t_hours"),
            probe=_parse_probe(rec["probe"], row),
            eta_true=_parse_float(rec["eta_true"], row, "eta_true"),
            v_true=_parse_float(rec["v_true"], row, "v_true"),
            drift=_parse_float(rec["drift"], row, "drift"),
            lock_loss=flag == "true",
        ))
    return out


# JSON documents -----------------------------------------------------------

def write_json(obj, path) -> None:
    with _open_write(path) as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False))
        fh.write("\n")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None


def write_calibration(cal: CalibrationRecord, path) -> None:
    write_json(dataclasses.asdict(cal), path)


def read_calibration(path) -> CalibrationRecord:
    doc = read_json(path)
    names = [f.name for f in fields(CalibrationRecord)]
    if not isinstance(doc, dict):
        raise SchemaError("calibration must be a JSON object", column="")
    unknown = sorted(set(doc) - set(names))
    if unknown:
        raise SchemaError(f"unknown key {unknown[0]!r}", column=unknown[0])
    for name in names[:6]:
        if name not in doc:
            raise SchemaError("missing key", column=name)
        if not isinstance(doc[name], (int, float)) or not math.isfinite(doc[name]):
            raise SchemaError("must be a finite number", column=name)
    return CalibrationRecord(**doc)


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; every key carries its unit where it has one."""

    growth_a: float = 0.2546
    growth_mu_per_hour: float = 0.0835
    growth_theta_hours: float = 0.837
    growth_a_bk: float = 0.0026
    run_duration_hours: float = 5.0
    cadence_minutes: float = 1.0
    acq_duration_s: float = 5.0
    samples_per_acq: int = 10_000
    sample_rate_hz: float = 250e3
    eta_blank: float = 0.799
    sqz_at_blank_db: float = -3.98
    probe_power_mw: float = 1.7
    noise_rel_per_sample: float = 0.07
    dark_fraction: float = 0.02
    drift_amplitude: float = 0.01
    drift_period_hours: float = 1.5
    drift_ramp_per_hour: float = 0.0
    lock_loss_prob: float = 0.0
    lock_loss_excess: float = 0.0
    seed: int = 0
    # calibration block: None means "measure from the blank acquisitions"
    cal_shot_ref_variance: float | None = None
    cal_dark_variance: float | None = None
    cal_v_detected_sqz: float | None = None
    # analysis
    margin_db: float = 1.5
    window_end_hours: float = 3.0
    h1_source: str = "measured"
    noise_basis: str = "sample"

    def to_sim_config(self) -> SimConfig:
        return SimConfig(
            growth=GompertzParams(self.growth_a, self.growth_mu_per_hour,
                                  self.growth_theta_hours, self.growth_a_bk),
            run_duration_hours=self.run_duration_hours,
            cadence_minutes=self.cadence_minutes,
            acq_duration_s=self.acq_duration_s,
            samples_per_acq=self.samples_per_acq,
            sample_rate_hz=self.sample_rate_hz,
            eta_blank=self.eta_blank,
            sqz_at_blank_db=self.sqz_at_blank_db,
            probe_power_mw=self.probe_power_mw,
            noise_rel_per_sample=self.noise_rel_per_sample,
            dark_fraction=self.dark_fraction,
            drift_amplitude=self.drift_amplitude,
            drift_period_hours=self.drift_period_hours,
            drift_ramp_per_hour=self.drift_ramp_per_hour,
            lock_loss_prob=self.lock_loss_prob,
            lock_loss_excess=self.lock_loss_excess,
            seed=self.seed,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_STRING_CHOICES = {"h1_source": ("measured", "poly"), "noise_basis": ("sample", "mean")}
_INT_KEYS = ("samples_per_acq", "seed")


def _coerce(key, value):
    field_map = {f.name: f for f in fields(RunConfig)}
    if key not in field_map:
        raise ConfigError(f"unknown configuration key {key!r}")
    if key in _STRING_CHOICES:
        if value not in _STRING_CHOICES[key]:
            raise ConfigError(f"{key} must be one of {_STRING_CHOICES[key]}, got {value!r}")
        return value
    if value is None and key.startswith("cal_"):
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if key in _INT_KEYS:
        if float(value) != int(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    return float(value)


def parse_override(text: str) -> tuple[str, object]:
    """``KEY=VALUE``; the value is read as JSON, falling back to a bare string."""
    if "=" not in text:
        raise ConfigError(f"override must look like KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def make_run_config(doc: dict | None = None, overrides=()) -> RunConfig:
    """Validated config from a document plus ``(key, value)`` overrides."""
    merged = dict(doc or {})
    for key, value in overrides:
        merged[key] = value
    values = {k: _coerce(k, v) for k, v in merged.items()}
    cfg = RunConfig(**values)
    cfg.to_sim_config()  # full physical validation
    return cfg


def load_run_config(path=None, overrides=()) -> RunConfig:
    doc = {}
    if path is not None:
        doc = read_json(path)
        if not isinstance(doc, dict):
            raise ConfigError("run configuration must be a JSON object")
    return make_run_config(doc, overrides)


def write_run_config(cfg: RunConfig, path) -> None:
    write_json(cfg.as_dict(), path)


# analysis outputs ---------------------------------------------------------

def write_plot_table(series, analyses, path) -> None:
    """One row per time point and probe, sorted by t then probe.

    ``analyses`` maps a probe to its error curves (anything with ``times``,
    ``p_mean`` and optional ``p_fn_at_fp``), aligned with the probe's
    non-excluded points. Missing values are written as empty fields.
    """
    lookup = {}
    for probe, curves in (analyses or {}).items():
        probe = Probe(probe)
        fn = curves.p_fn_at_fp
        for i, t in enumerate(curves.times):
            lookup[(probe, float(t))] = (curves.p_mean[i], None if fn is None else fn[i])
    rows = sorted(series, key=lambda p: (p.t, p.probe.value))
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_COLUMNS)
        for p in rows:
            if p.excluded:
                w.writerow([_fmt9(p.t), p.probe.value] + [""] * len(_ANALYSIS_COLUMNS) + ["true"])
                continue
            pm, fn = lookup.get((p.probe, float(p.t)), (None, None))
            w.writerow([_fmt9(p.t), p.probe.value, _fmt9(p.eta_hat), _fmt9(p.sigma_eta),
                        _fmt9(p.a_mode), _fmt9(p.a_mean_corr), _fmt9(p.a_sigma_corr),
                        _fmt9(p.var_db), _fmt9(p.expected_var_db), _fmt9(pm), _fmt9(fn), "false"])


def read_plot_table(path) -> list[dict]:
    """Rows as dicts of floats (None for empty fields)."""
    out = []
    for row, rec in _read_rows(path, PLOT_COLUMNS):
        item = {}
        for col in PLOT_COLUMNS:
            v = rec[col]
            if col == "probe":
                item[col] = _parse_probe(v, row)
            elif col == "excluded":
                item[col] = v == "true"
            else:
                item[col] = None if v == "" else _parse_float(v, row, col)
        out.append(item)
    return out


def report_to_dict(report: DetectionReport) -> dict:
    return {
        "probe": report.probe,
        "criterion": report.criterion.value,
        "target": report.target,
        "fp_target": report.fp_target,
        "t_detect_hours": report.t_detect,
        "reached": report.reached,
    }


def report_from_dict(doc: dict) -> DetectionReport:
    try:
        return DetectionReport(
            probe=str(doc["probe"]),
            criterion=Criterion(doc["criterion"]),
            target=float(doc["target"]),
            t_detect=None if doc["t_detect_hours"] is None else float(doc["t_detect_hours"]),
            fp_target=None if doc.get("fp_target") is None else float(doc["fp_target"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"malformed detection report: {exc}", column="reports") from None


def write_detection_reports(reports, path, extra: dict | None = None) -> None:
    doc = {"reports": [report_to_dict(r) for r in reports]}
    if extra:
        doc.update(extra)
    write_json(doc, path)


def read_detection_reports(path) -> list[DetectionReport]:
    doc = read_json(path)
    if not isinstance(doc, dict) or not isinstance(doc.get("reports"), list):
        raise SchemaError("expected an object with a 'reports' list", column="reports")
    return [report_from_dict(r) for r in doc["reports"]]


def fit_to_dict(probe: Probe | str, fit: FitResult) -> dict:
    p, e = fit.params, fit.std_errors
    doc = {
        "probe": Probe(probe).value,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "residual_norm": fit.residual_norm,
    }
    for name in ("a", "mu", "theta", "a_bk"):
        doc[name] = getattr(p, name)
        err = getattr(e, name)
        doc[name + "_err"] = err if math.isfinite(err) else None
    if p.mu > 0.0:
        doc["doubling_time_hours"] = doubling_time(p.mu)
        doc["inflection_time_hours"] = inflection_point(p)[0]
    else:
        doc["doubling_time_hours"] = None
        doc["inflection_time_hours"] = None
    return doc


def write_fit_report(fits: dict, path) -> None:
    write_json({"fits": [fit_to_dict(probe, fit) for probe, fit in fits.items()]}, path)


def read_fit_report(path) -> list[dict]:
    doc = read_json(path)
    if not isinstance(doc, dict) or not isinstance(doc.get("fits"), list):
        raise SchemaError("expected an object with a 'fits' list", column="fits")
    return doc["fits"]


def dataset_paths(directory) -> dict[str, Path]:
    """Conventional file names inside a dataset directory."""
    d = Path(directory)
    return {
        "acquisitions": d / "acquisitions.csv",
        "truth": d / "truth.csv",
        "blanks": d / "blanks.csv",
        "calibration": d / "calibration.json",
        "config": d / "config.json",
    }
