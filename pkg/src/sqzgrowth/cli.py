"""Command-line entry point: ``sqzgrowth {simulate,calibrate,fit,detect,compare}``.

Exit codes: 0 success, 2 usage/configuration, 3 data or schema, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from . import io, pipeline
from .errors import ConfigError, DomainError, FitError, NumericalPrecisionError, SchemaError
from .estimator import Probe, build_series, calibrate
from .growth import early_poly_fit
from .hypothesis import Criterion, compare_probes
from .simulator import simulate_run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


def _probes(choice: str) -> list[Probe]:
    return [Probe.COHERENT, Probe.SQUEEZED] if choice == "both" else [Probe(choice)]


def _run_config(args):
    overrides = [io.parse_override(s) for s in args.set]
    if getattr(args, "seed", None) is not None:
        overrides.append(("seed", args.seed))
    if getattr(args, "margin_db", None) is not None:
        overrides.append(("margin_db", args.margin_db))
    if getattr(args, "window_end", None) is not None:
        overrides.append(("window_end_hours", args.window_end))
    if getattr(args, "h1", None) is not None:
        overrides.append(("h1_source", args.h1))
    return io.load_run_config(args.config, overrides)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(args):
    """Acquisitions and calibration from a dataset directory or CSV file."""
    data = Path(args.data)
    paths = io.dataset_paths(data if data.is_dir() else data.parent)
    acq_path = paths["acquisitions"] if data.is_dir() else data
    cal_path = Path(args.calibration) if args.calibration else paths["calibration"]
    acqs = io.read_acquisitions(acq_path)
    if not acqs:
        raise DomainError(f"empty dataset: {acq_path}")
    return acqs, io.read_calibration(cal_path)


def cmd_simulate(args) -> int:
    cfg = _run_config(args)
    ds = simulate_run(cfg.to_sim_config(), keep_samples=args.raw)
    out = _out_dir(args)
    paths = io.dataset_paths(out)
    io.write_acquisitions(ds.acquisitions, paths["acquisitions"])
    io.write_truth(ds.truth, paths["truth"])
    io.write_acquisitions(ds.blanks, paths["blanks"])
    io.write_calibration(ds.calibration, paths["calibration"])
    io.write_run_config(cfg, paths["config"])
    if args.raw:
        io.write_samples(ds.acquisitions, out / "samples.csv")
    print(f"wrote {len(ds.acquisitions)} acquisitions to {paths['acquisitions']}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _run_config(args)
    blanks = io.read_acquisitions(args.blanks)
    coh = [a for a in blanks if a.probe is Probe.COHERENT]
    sqz = [a for a in blanks if a.probe is Probe.SQUEEZED]
    if len(coh) != 1 or len(sqz) != 1:
        raise DomainError("blank file must hold exactly one coherent and one squeezed acquisition")
    dark = args.dark_variance if args.dark_variance is not None else cfg.cal_dark_variance
    if dark is None:
        raise UsageError("dark variance needed: pass --dark-variance or set cal_dark_variance")
    cal = calibrate(coh[0], sqz[0], float(dark), cfg.eta_blank)
    changes = {}
    if cfg.cal_shot_ref_variance is not None:
        changes["shot_ref_variance"] = cfg.cal_shot_ref_variance
    if cfg.cal_v_detected_sqz is not None:
        changes["v_detected_sqz"] = cfg.cal_v_detected_sqz
    if changes:
        cal = dataclasses.replace(cal, **changes)
    path = _out_dir(args) / "calibration.json"
    io.write_calibration(cal, path)
    print(f"shot reference {cal.shot_ref_variance:.6g}, dark {cal.dark_variance:.6g}, "
          f"squeezed blank {10 * math.log10(cal.v_detected_sqz):.3f} dB")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _run_config(args)
    acqs, cal = _load_dataset(args)
    series = build_series(acqs, cal, cfg.noise_basis, cfg.margin_db)
    entries = []
    failed = []
    for probe in _probes(args.probe):
        try:
            fit = pipeline.fit_probe(series, probe)
        except FitError as exc:
            failed.append(f"{probe}: {exc}")
            continue
        if not fit.converged:
            failed.append(f"{probe}: fit did not converge in {fit.iterations} iterations")
        doc = io.fit_to_dict(probe, fit)
        pts = pipeline.probe_points(series, probe)
        try:
            poly = early_poly_fit([p.t for p in pts], [p.eta_hat for p in pts],
                                  cfg.window_end_hours)
            doc["early_poly"] = {"c": poly.c, "d": poly.d, "window_end_hours": poly.window_end}
        except FitError:
            doc["early_poly"] = None
        entries.append(doc)
        p = fit.params
        e = fit.std_errors
        print(f"{probe.value:9s} a={p.a:.4g}±{e.a:.2g} mu={p.mu:.4g}±{e.mu:.2g}/h "
              f"theta={p.theta:.4g}±{e.theta:.2g} h a_bk={p.a_bk:.3g}±{e.a_bk:.2g} "
              f"doubling={doc['doubling_time_hours'] or math.nan:.3f} h")
    io.write_json({"fits": entries}, _out_dir(args) / "fit.json")
    for msg in failed:
        print(f"fit failed: {msg}", file=sys.stderr)
    if failed and not args.allow_partial:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_detect(args) -> int:
    if args.fn is not None and args.fp is None:
        raise UsageError("--fn requires --fp")
    if args.symmetric is None and args.fn is None:
        raise UsageError("give --symmetric P or --fp P --fn P")
    if args.symmetric is not None and args.fn is not None:
        raise UsageError("--symmetric and --fn are mutually exclusive")
    for name in ("symmetric", "fp", "fn"):
        v = getattr(args, name)
        if v is not None and not 0.0 < v < 1.0:
            raise UsageError(f"--{name} must lie in (0, 1)")
    cfg = _run_config(args)
    acqs, cal = _load_dataset(args)
    series = build_series(acqs, cal, cfg.noise_basis, cfg.margin_db)
    if args.symmetric is not None:
        criterion, target = Criterion.SYMMETRIC, args.symmetric
        fp_target = None
    else:
        criterion, target, fp_target = Criterion.ASYMMETRIC, args.fn, args.fp
    reports = []
    curves = {}
    for probe in _probes(args.probe):
        rep = pipeline.detect(series, cal, probe, criterion, target, fp_target=fp_target,
                              source=cfg.h1_source, window_end=cfg.window_end_hours,
                              noise_basis=cfg.noise_basis)
        reports.append(rep)
        curves[probe] = pipeline.error_curves(series, cal, probe, fp_target=args.fp,
                                              noise_basis=cfg.noise_basis)
        when = f"{rep.t_detect:.4f} h" if rep.reached else "not reached"
        print(f"{probe.value:9s} {criterion.value} target {target:g}: {when}")
    out = _out_dir(args)
    extra = {}
    if len(reports) == 2:
        adv = compare_probes(reports[0], reports[1])
        extra["advantage_hours"] = adv
        print("advantage: " + ("undefined" if adv is None else f"{adv:.4f} h"))
    io.write_detection_reports(reports, out / "detection.json", extra)
    io.write_plot_table(series, curves, out / "plot_table.csv")
    return EXIT_OK


def _pick(reports, side: Probe):
    if len(reports) == 1:
        return reports[0]
    for r in reports:
        if r.probe == side.value:
            return r
    raise DomainError(f"no {side.value} report in detection file")


def cmd_compare(args) -> int:
    base = _pick(io.read_detection_reports(args.baseline), Probe.COHERENT)
    cand = _pick(io.read_detection_reports(args.candidate or args.baseline), Probe.SQUEEZED)
    adv = compare_probes(base, cand)
    doc = {"baseline": io.report_to_dict(base), "candidate": io.report_to_dict(cand),
           "advantage_hours": adv}
    if args.out:
        io.write_json(doc, _out_dir(args) / "comparison.json")
    print("advantage: " + ("undefined (not reached)" if adv is None else f"{adv:.4f} h"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqzgrowth", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration JSON")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        help="override a configuration key (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic paired run")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=".", metavar="DIR")
    p.add_argument("--raw", action="store_true", help="also write the raw-sample sidecar")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="calibration record from blank acquisitions")
    p.add_argument("blanks", help="acquisition CSV with one coherent and one squeezed blank")
    p.add_argument("--dark-variance", type=float)
    p.add_argument("--out", default=".", metavar="DIR")
    p.set_defaults(func=cmd_calibrate)

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("data", help="dataset directory or acquisition CSV")
    analysis.add_argument("--calibration", metavar="PATH")
    analysis.add_argument("--probe", choices=("coherent", "squeezed", "both"), default="both")
    analysis.add_argument("--margin-db", type=float, help="lock-loss exclusion margin")
    analysis.add_argument("--window-end", type=float, metavar="H", help="early-polynomial window")
    analysis.add_argument("--out", default=".", metavar="DIR")

    p = sub.add_parser("fit", parents=[common, analysis], help="Gompertz fit per probe")
    p.add_argument("--allow-partial", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("detect", parents=[common, analysis], help="growth detection times")
    p.add_argument("--symmetric", type=float, metavar="P", help="target mean error")
    p.add_argument("--fp", type=float, metavar="P", help="false-positive rate")
    p.add_argument("--fn", type=float, metavar="P", help="target false-negative rate")
    p.add_argument("--h1", choices=pipeline.H1_SOURCES, help="source of the growth hypothesis mean")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("compare", help="squeezed head start from detection reports")
    p.add_argument("baseline", help="detection JSON (its coherent report, or its only report)")
    p.add_argument("candidate", nargs="?", help="detection JSON (its squeezed report, or its only report)")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, DomainError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitError, NumericalPrecisionError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
