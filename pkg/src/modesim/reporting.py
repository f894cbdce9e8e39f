"""CSV emission/loading and figure rendering for scan results.

CSV is the machine-readable interface: comma-separated, '.' decimal point,
LF line endings, one '#' metadata comment line followed by a header row
``sweep_value,expected_rate,counts,sigma``.  Floats are written with repr
precision so identical runs produce byte-identical files.  Figures are a
convenience layer on top and never replace the CSV.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import FitResult
from .experiments import ScanResult


class CsvFormatError(ValueError):
    """CSV does not follow the scan schema."""


def _meta_line(scan: ScanResult, origin: str) -> str:
    fields = [
        f"origin={origin}" if origin else "",
        f"variable={scan.variable}",
        f"seed={scan.seed}",
        f"integration_s={scan.integration_time_s!r}",
        f"trace={scan.label}" if scan.label else "",
    ]
    return "# modesim " + " ".join(f for f in fields if f)


def scan_to_csv(scan: ScanResult, origin: str = "") -> str:
    lines = [_meta_line(scan, origin), "sweep_value,expected_rate,counts,sigma"]
    for x, rate, count, sigma in zip(scan.points, scan.expected_rate, scan.counts, scan.sigma):
        count_text = str(int(count)) if float(count).is_integer() else repr(float(count))
        lines.append(f"{float(x)!r},{float(rate)!r},{count_text},{float(sigma)!r}")
    return "\n".join(lines) + "\n"


def write_scan_csv(scan: ScanResult, path, origin: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(scan_to_csv(scan, origin))


def read_scan_csv(path) -> ScanResult:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    meta = {"variable": "delay_um", "seed": "0", "integration_s": "1.0", "trace": ""}
    rows: list[tuple[float, float, float, float]] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line.lstrip("#").split():
                if "=" in token:
                    key, _, value = token.partition("=")
                    meta[key] = value
            continue
        if not header_seen:
            if line != "sweep_value,expected_rate,counts,sigma":
                raise CsvFormatError(f"line {lineno}: unexpected header {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise CsvFormatError(f"line {lineno}: expected 4 columns, got {len(parts)}")
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError:
            raise CsvFormatError(f"line {lineno}: non-numeric value in {line!r}") from None
    if not header_seen or not rows:
        raise CsvFormatError("no scan data found")
    data = np.asarray(rows, dtype=float)
    return ScanResult(
        variable=meta["variable"],
        points=data[:, 0],
        expected_rate=data[:, 1],
        counts=data[:, 2],
        sigma=data[:, 3],
        integration_time_s=float(meta["integration_s"]),
        seed=int(meta["seed"]),
        label=meta["trace"],
    )


_AXIS_LABEL = {"delay_um": "path length difference (um)", "heater_mW": "heater power (mW)"}


def scan_figure(scans: list[ScanResult], path, title: str = "") -> None:
    """Render counts with Poisson error bars plus the expected-rate curve."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    colors = ("tab:red", "black", "tab:blue", "tab:green")
    for scan, color in zip(scans, colors):
        label = scan.label or "counts"
        ax.errorbar(
            scan.points,
            scan.counts,
            yerr=scan.sigma,
            fmt="o",
            ms=3,
            lw=1,
            color=color,
            label=label,
        )
        ax.plot(
            scan.points,
            scan.expected_rate * scan.integration_time_s,
            "-",
            lw=1,
            color=color,
            alpha=0.6,
        )
    ax.set_xlabel(_AXIS_LABEL.get(scans[0].variable, scans[0].variable))
    ax.set_ylabel("coincidences per point")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _model_curve(fit: FitResult, x: np.ndarray) -> np.ndarray:
    p = fit.params
    if fit.model == "triangle":
        tri = np.maximum(0.0, 1.0 - np.abs(x - p["center_um"]) / p["coherence_length_um"])
        sign = -1.0 if fit.orientation == "dip" else 1.0
        return p["baseline"] * (1.0 + sign * p["visibility"] * tri)
    return p["offset"] + p["amplitude"] * np.cos(2.0 * np.pi * x / p["period"] + p["phase"])


def fit_figure(scan: ScanResult, fit: FitResult, path, title: str = "") -> None:
    """Render the data with the fitted model overlaid on a dense grid."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.errorbar(scan.points, scan.counts, yerr=scan.sigma, fmt="ko", ms=3, lw=1, label="counts")
    dense = np.linspace(float(np.min(scan.points)), float(np.max(scan.points)), 600)
    ax.plot(dense, _model_curve(fit, dense), "r-", lw=1.2, label=f"{fit.model} fit")
    ax.set_xlabel(_AXIS_LABEL.get(scan.variable, scan.variable))
    ax.set_ylabel("coincidences per point")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
