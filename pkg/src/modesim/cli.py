"""Command-line front end: validate experiment files, run scans, fit results.

Exit codes: 0 success, 1 missing/unwritable file, 2 invalid experiment or
malformed CSV, 3 fit non-convergence (or a reduced chi-square large enough
to flag a model mismatch).  Diagnostics go to standard error; standard
output stays machine-readable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import FitError, FitResult, fit_fringe, fit_triangle, subtract_background
from .expfile import Experiment, ExperimentFileError, load_experiment, parse_experiment
from .experiments import DELAY_SCAN, ScanResult, fringe_scan, hom_scan
from .presets import REFERENCE_BANDS, SAMPLE_IDS, preset_experiment, sample4_patterns
from .reporting import (
    CsvFormatError,
    fit_figure,
    read_scan_csv,
    scan_figure,
    write_scan_csv,
)

CHI2_MISMATCH_FLAG = 25.0


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _load(args) -> tuple[Experiment, str]:
    seed = 12345 if args.seed is None else args.seed
    if args.preset:
        return preset_experiment(args.preset, seed=seed), args.preset
    path = Path(args.path)
    if not path.is_file():
        raise FileNotFoundError(f"no such experiment file: {path}")
    experiment = load_experiment(path)
    if args.seed is not None:
        experiment.scan.seed = args.seed
    return experiment, str(path)


def cmd_validate(args) -> int:
    path = Path(args.path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        _err(f"cannot read {path}: {exc}")
        return 1
    try:
        experiment = parse_experiment(text)
    except ExperimentFileError as exc:
        _err(str(exc))
        return 2
    diagnostics = experiment.build_circuit().validate()
    if diagnostics:
        for diag in diagnostics:
            _err(diag)
        return 2
    return 0


def _run_scans(experiment: Experiment, workers: int | None) -> list[ScanResult]:
    circuit, scan, source, pattern = experiment.build()
    diagnostics = circuit.validate()
    if diagnostics:
        raise ExperimentFileError(0, "; ".join(diagnostics))
    if scan.variable == DELAY_SCAN:
        return [hom_scan(circuit, pattern, source, scan, workers=workers)]
    quantum, classical = fringe_scan(circuit, source, scan, workers=workers)
    return [quantum, classical]


def cmd_run(args) -> int:
    try:
        experiment, origin = _load(args)
    except FileNotFoundError as exc:
        _err(str(exc))
        return 1
    except (ExperimentFileError, ValueError) as exc:
        _err(str(exc))
        return 2
    try:
        scans = _run_scans(experiment, args.workers)
    except (ExperimentFileError, ValueError) as exc:
        _err(str(exc))
        return 2
    out = Path(args.out)
    try:
        write_scan_csv(scans[0], out, origin=origin)
        written = [out]
        if len(scans) > 1:
            side = out.with_name(out.stem + "_classical" + out.suffix)
            write_scan_csv(scans[1], side, origin=origin)
            written.append(side)
    except OSError as exc:
        _err(f"cannot write output: {exc}")
        return 1
    if args.plot:
        scan_figure(scans, args.plot, title=origin)
        written.append(Path(args.plot))
    for path in written:
        print(path)
    return 0


def _fit_scan(scan: ScanResult, model: str) -> FitResult:
    if model == "triangle":
        return fit_triangle(scan)
    return fit_fringe(scan)


def cmd_fit(args) -> int:
    path = Path(args.csv)
    if not path.is_file():
        _err(f"no such CSV: {path}")
        return 1
    try:
        scan = read_scan_csv(path)
    except CsvFormatError as exc:
        _err(str(exc))
        return 2
    try:
        fit = _fit_scan(scan, args.model)
        if args.background > 0:
            corrected_fit = _fit_scan(subtract_background(scan, args.background), args.model)
        else:
            corrected_fit = fit
    except (FitError, ValueError) as exc:
        _err(f"fit failed: {exc}")
        return 3
    if fit.chi2_reduced > CHI2_MISMATCH_FLAG:
        _err(
            f"fit failed: reduced chi-square {fit.chi2_reduced:.3g} exceeds "
            f"{CHI2_MISMATCH_FLAG:g}; wrong model for this trace?"
        )
        return 3
    for line in fit.report_lines():
        print(line)
    print(f"visibility_raw {fit.visibility!r} {fit.visibility_sigma!r}")
    print(f"visibility_corrected {corrected_fit.visibility!r} {corrected_fit.visibility_sigma!r}")
    if args.plot:
        fit_figure(scan, fit, args.plot)
    return 0


def _band_line(name: str, value: float, sigma: float, band: tuple[float, float]) -> str:
    center, width = band
    pull = abs(value - center) / width if width else float("inf")
    return (
        f"{name}: {value:.4g} +/- {sigma:.2g} vs reference {center:g} +/- {width:g}"
        f" -> {pull:.2f} sigma"
    )


def cmd_report(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sample = args.preset
    experiment = preset_experiment(sample, seed=12345 if args.seed is None else args.seed)
    circuit, scan, source, pattern = experiment.build()
    bands = REFERENCE_BANDS[sample]
    lines: list[str] = [f"report for {sample} (seed {scan.seed})"]

    if scan.variable == DELAY_SCAN:
        patterns = [(pattern, "")]
        if sample == "sample4":
            te, tm = sample4_patterns(experiment)
            patterns = [(te, "_te_output"), (tm, "_tm_output")]
        scans, fits = [], []
        for stream, (pat, suffix) in enumerate(patterns):
            result = hom_scan(circuit, pat, source, scan, workers=args.workers, stream=stream)
            csv_path = outdir / f"{sample}{suffix}.csv"
            write_scan_csv(result, csv_path, origin=sample)
            fit = fit_triangle(result)
            fit_figure(result, fit, outdir / f"{sample}{suffix}.png", title=f"{sample}{suffix}")
            scans.append(result)
            fits.append(fit)
            key = "visibility" + suffix
            lines.append(
                _band_line(
                    f"{sample}{suffix} {fit.orientation} visibility",
                    fit.visibility,
                    fit.visibility_sigma,
                    bands[key] if key in bands else bands["visibility"],
                )
            )
            lkey = "coherence_length_um" + suffix
            band = bands.get(lkey, bands.get("coherence_length_um"))
            if band:
                lines.append(
                    _band_line(
                        f"{sample}{suffix} coherence length (um)",
                        fit.params["coherence_length_um"],
                        fit.sigmas["coherence_length_um"],
                        band,
                    )
                )
    else:
        quantum, classical = fringe_scan(circuit, source, scan, workers=args.workers)
        write_scan_csv(quantum, outdir / f"{sample}.csv", origin=sample)
        write_scan_csv(classical, outdir / f"{sample}_classical.csv", origin=sample)
        scan_figure([quantum, classical], outdir / f"{sample}.png", title=sample)
        fit_q = fit_fringe(quantum)
        fit_c = fit_fringe(classical)
        fit_figure(quantum, fit_q, outdir / f"{sample}_quantum_fit.png", title=f"{sample} quantum")
        fit_figure(classical, fit_c, outdir / f"{sample}_classical_fit.png", title=f"{sample} classical")
        ratio = fit_q.params["period"] / fit_c.params["period"]
        lines.append(
            f"quantum fringe: period {fit_q.params['period']:.4g} mW, "
            f"visibility {fit_q.visibility:.4g} +/- {fit_q.visibility_sigma:.2g}"
        )
        lines.append(
            f"classical fringe: period {fit_c.params['period']:.4g} mW, "
            f"visibility {fit_c.visibility:.4g} +/- {fit_c.visibility_sigma:.2g}"
        )
        lines.append(f"period ratio quantum/classical = {ratio:.4f} (two-photon halving: 0.5)")
        lines.append(
            _band_line("quantum period (mW)", fit_q.params["period"], fit_q.sigmas["period"], bands["quantum_period_mw"])
        )
        lines.append(
            _band_line("classical period (mW)", fit_c.params["period"], fit_c.sigmas["period"], bands["classical_period_mw"])
        )
        lines.append(
            _band_line("quantum visibility", fit_q.visibility, fit_q.visibility_sigma, bands["visibility"])
        )

    text = "\n".join(lines) + "\n"
    (outdir / f"{sample}_report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modesim",
        description="Simulate and fit few-photon interference on multi-DOF photonic chips",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check an experiment file")
    p_val.add_argument("path")
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="run a scan and write CSV data")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("path", nargs="?", help="experiment file")
    src.add_argument("--preset", choices=SAMPLE_IDS, help="bundled experiment")
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.add_argument("--seed", type=int, default=None, help="override the scan seed")
    p_run.add_argument("--workers", type=int, default=None, help="parallel sampling threads")
    p_run.add_argument("--plot", default=None, help="also render a figure to this path")
    p_run.set_defaults(func=cmd_run)

    p_fit = sub.add_parser("fit", help="fit a scan CSV")
    p_fit.add_argument("csv")
    p_fit.add_argument("--model", choices=("triangle", "fringe"), required=True)
    p_fit.add_argument("--background", type=float, default=0.0, help="accidental rate (counts/s)")
    p_fit.add_argument("--plot", default=None, help="render data plus fitted model")
    p_fit.set_defaults(func=cmd_fit)

    p_rep = sub.add_parser("report", help="run, fit and plot a bundled experiment")
    p_rep.add_argument("--preset", choices=SAMPLE_IDS, required=True)
    p_rep.add_argument("--outdir", required=True)
    p_rep.add_argument("--seed", type=int, default=None)
    p_rep.add_argument("--workers", type=int, default=None)
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
