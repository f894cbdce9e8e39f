"""Visibility estimators and weighted least-squares fits for scan data.

Two models cover everything the scans produce: a triangle envelope for
delay scans (dip or peak) and a sinusoid for heater fringes.  Fits are
Poisson-weighted damped Gauss-Newton; the triangle's kinks are handled by a
coarse grid over break placements before the local refinement, so the
refinement itself never has to step across a non-differentiable point
blindly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .experiments import ScanResult

MAX_ITERATIONS = 200
REL_TOL = 1e-12


class FitError(RuntimeError):
    """Fit could not be carried out or did not converge."""


def poisson_sigma(count) -> np.ndarray | float:
    """Counting error sqrt(N); zero counts get a unit floor so weights stay finite."""
    arr = np.sqrt(np.asarray(count, dtype=float))
    arr = np.where(arr > 0.0, arr, 1.0)
    if np.ndim(count) == 0:
        return float(arr)
    return arr


def visibility_dip(c_max: float, c_min: float) -> float:
    """(C_max - C_min) / C_max; 1 for a perfect interference dip."""
    if c_max <= 0:
        raise ValueError("c_max must be > 0")
    if c_min > c_max:
        raise ValueError("c_min must not exceed c_max")
    return (c_max - c_min) / c_max


def visibility_peak(c_max: float, c_min: float) -> float:
    """(C_max - C_min) / C_min; 1 when the peak doubles the baseline."""
    if c_min <= 0:
        raise ValueError("c_min must be > 0")
    if c_max < c_min:
        raise ValueError("c_max must be at least c_min")
    return (c_max - c_min) / c_min


def subtract_background(scan: ScanResult, accidental_rate: float) -> ScanResult:
    """Remove a flat accidental-coincidence rate from every point.

    Counts are clamped at zero.  The error per point is propagated as
    sqrt(raw count + background variance), treating the subtracted
    background as an independent Poisson contribution.
    """
    if accidental_rate < 0:
        raise ValueError("accidental_rate must be >= 0")
    background = accidental_rate * scan.integration_time_s
    floor = float(np.min(scan.counts))
    if background > floor + 5.0 * poisson_sigma(floor):
        raise ValueError(
            f"background {background:.6g} exceeds the lowest count {floor:.6g} "
            "by more than 5 sigma; implausible accidental rate"
        )
    counts = np.maximum(scan.counts - background, 0.0)
    sigma = np.sqrt(scan.counts + background)
    rates = np.maximum(scan.expected_rate - accidental_rate, 0.0)
    return replace(scan, counts=counts, sigma=sigma, expected_rate=rates)


@dataclass
class FitResult:
    model: str  # "triangle" | "sinusoid"
    params: dict[str, float]
    sigmas: dict[str, float]
    chi2_reduced: float
    n_points: int
    converged: bool
    orientation: str = ""  # triangle only: "dip" | "peak"

    @property
    def visibility(self) -> float:
        if self.model == "triangle":
            return self.params["visibility"]
        return abs(self.params["amplitude"]) / self.params["offset"]

    @property
    def visibility_sigma(self) -> float:
        if self.model == "triangle":
            return self.sigmas["visibility"]
        # first-order propagation of amplitude/offset
        a, o = abs(self.params["amplitude"]), self.params["offset"]
        sa, so = self.sigmas["amplitude"], self.sigmas["offset"]
        return (a / o) * math.hypot(sa / max(a, 1e-300), so / o)

    def report_lines(self) -> list[str]:
        lines = [f"{name} {value!r} {self.sigmas[name]!r}" for name, value in self.params.items()]
        lines.append(f"chi2_reduced {self.chi2_reduced!r}")
        return lines


def _fit_weights(scan: ScanResult) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(scan.points, dtype=float)
    y = np.asarray(scan.counts, dtype=float)
    sigma = np.asarray(scan.sigma, dtype=float)
    sigma = np.where(sigma > 0.0, sigma, 1.0)
    return x, y, 1.0 / sigma


def _damped_gauss_newton(
    model: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    p0: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float, bool]:
    """Levenberg-damped Gauss-Newton on weighted residuals.

    Returns (params, covariance, chi2, converged); the covariance is the
    inverse of J^T J at the solution, i.e. the local quadratic expansion of
    the objective.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = (model(p) - y) * w
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    for _ in range(MAX_ITERATIONS):
        jac = jacobian(p) * w[:, None]
        grad = jac.T @ r
        hess = jac.T @ jac
        damp = np.diag(np.maximum(np.diag(hess), 1e-12))
        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(hess + lam * damp, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_try = p + step
            r_try = (model(p_try) - y) * w
            cost_try = float(r_try @ r_try)
            if np.isfinite(cost_try) and cost_try <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged = True  # damping exhausted: stationary within precision
            break
        improvement = cost - cost_try
        p, r = p_try, r_try
        lam = max(lam / 3.0, 1e-14)
        if improvement <= REL_TOL * max(cost, 1e-300):
            cost = cost_try
            converged = True
            break
        cost = cost_try
    jac = jacobian(p) * w[:, None]
    hess = jac.T @ jac
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(hess)
    return p, cov, cost, converged


def _triangle_basis(x: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(x - center) / width)


def fit_triangle(scan: ScanResult) -> FitResult:
    """Weighted fit of C0 * (1 -/+ V * max(0, 1 - |x - x0| / L)).

    Orientation (dip or peak) is chosen from the contrast between the
    feature center and the wings.  Break positions (x0, L) are scanned on a
    coarse grid with the two linear parameters solved exactly, then all four
    parameters are refined together.
    """
    x, y, w = _fit_weights(scan)
    if len(x) < 6:
        raise FitError("triangle fit needs at least 6 points")
    if float(np.ptp(y)) == 0.0:
        raise FitError("no feature: all counts are equal")

    spacing = float(np.median(np.diff(np.sort(x)))) if len(x) > 1 else 1.0
    span = float(np.max(x) - np.min(x))
    wings = np.concatenate([y[: max(2, len(y) // 10)], y[-max(2, len(y) // 10):]])
    baseline = float(np.mean(wings))
    orientation = "dip" if baseline - np.min(y) >= np.max(y) - baseline else "peak"
    extremum = float(x[np.argmin(y)]) if orientation == "dip" else float(x[np.argmax(y)])
    sign = -1.0 if orientation == "dip" else 1.0

    centers = extremum + spacing * np.arange(-4.0, 4.5, 1.0)
    widths = np.linspace(2.0 * spacing, 0.9 * span, 24)
    candidates = []
    for center in centers:
        for width in widths:
            tri = _triangle_basis(x, center, width)
            design = np.column_stack([np.ones_like(x), tri]) * w[:, None]
            coef, *_ = np.linalg.lstsq(design, y * w, rcond=None)
            resid = (coef[0] + coef[1] * tri - y) * w
            candidates.append((float(resid @ resid), width, center, coef))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    _, width0, center0, coef0 = candidates[0]
    c0 = float(coef0[0]) if coef0[0] != 0.0 else float(np.mean(y))
    v0 = float(sign * coef0[1] / c0)

    def unpack(p: np.ndarray) -> tuple[float, float, float, float]:
        return p[0], p[1], p[2], p[3]

    def model(p: np.ndarray) -> np.ndarray:
        c, v, width, center = unpack(p)
        return c * (1.0 + sign * v * _triangle_basis(x, center, width))

    def jacobian(p: np.ndarray) -> np.ndarray:
        c, v, width, center = unpack(p)
        tri = _triangle_basis(x, center, width)
        inside = (tri > 0.0).astype(float)
        d_tri_d_width = np.abs(x - center) / width**2 * inside
        d_tri_d_center = np.sign(x - center) / width * inside
        return np.column_stack(
            [
                1.0 + sign * v * tri,
                sign * c * tri,
                sign * c * v * d_tri_d_width,
                sign * c * v * d_tri_d_center,
            ]
        )

    p0 = np.array([c0, v0, width0, center0])
    p, cov, chi2, converged = _damped_gauss_newton(model, jacobian, p0, y, w)
    if not converged:
        raise FitError("triangle fit did not converge")
    c, v, width, center = unpack(p)
    if width <= 0 or not -0.05 <= v <= 1.05:
        raise FitError(
            f"triangle fit left the physical range (V={v:.4g}, L={width:.4g})"
        )
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    dof = max(len(x) - 4, 1)
    return FitResult(
        model="triangle",
        params={
            "baseline": float(c),
            "visibility": float(v),
            "coherence_length_um": float(width),
            "center_um": float(center),
        },
        sigmas={
            "baseline": float(sig[0]),
            "visibility": float(sig[1]),
            "coherence_length_um": float(sig[2]),
            "center_um": float(sig[3]),
        },
        chi2_reduced=float(chi2 / dof),
        n_points=len(x),
        converged=converged,
        orientation=orientation,
    )


def _initial_period(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Period and phase seed from the discrete spectrum of the detrended trace."""
    n = len(x)
    dx = float(np.median(np.diff(x)))
    detrended = y - np.mean(y)
    spectrum = np.fft.rfft(detrended)
    freqs = np.fft.rfftfreq(n, d=dx)
    power = np.abs(spectrum)
    if len(power) < 2:
        raise FitError("fringe fit needs a longer scan")
    k = 1 + int(np.argmax(power[1:]))
    # parabolic refinement of the peak bin
    if 1 <= k < len(power) - 1:
        alpha, beta, gamma = power[k - 1], power[k], power[k + 1]
        denom = alpha - 2.0 * beta + gamma
        shift = 0.5 * (alpha - gamma) / denom if denom != 0.0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    freq = freqs[k] + shift * (freqs[1] - freqs[0])
    if freq <= 0:
        raise FitError("could not locate a fringe frequency")
    phase = float(np.angle(np.sum(detrended * np.exp(-2j * np.pi * freq * (x - x[0])))))
    return 1.0 / freq, phase


def fit_fringe(scan: ScanResult) -> FitResult:
    """Weighted fit of offset + amplitude * cos(2 pi x / period + phase)."""
    x, y, w = _fit_weights(scan)
    if len(x) < 8:
        raise FitError("fringe fit needs at least 8 points")
    if float(np.ptp(y)) == 0.0:
        raise FitError("no fringe: all counts are equal")
    span = float(np.max(x) - np.min(x))
    period0, phase0 = _initial_period(x, y)
    if span < period0:
        raise FitError(
            f"scan covers {span:.4g}, less than one fringe period ({period0:.4g})"
        )
    offset0 = float(np.mean(y))
    amplitude0 = float(0.5 * np.ptp(y))
    # the detrended spectrum phase is measured from the first scan point
    phase0 = phase0 - 2.0 * math.pi * float(x[0]) / period0

    def model(p: np.ndarray) -> np.ndarray:
        offset, amplitude, period, phase = p
        return offset + amplitude * np.cos(2.0 * np.pi * x / period + phase)

    def jacobian(p: np.ndarray) -> np.ndarray:
        offset, amplitude, period, phase = p
        arg = 2.0 * np.pi * x / period + phase
        return np.column_stack(
            [
                np.ones_like(x),
                np.cos(arg),
                amplitude * np.sin(arg) * 2.0 * np.pi * x / period**2,
                -amplitude * np.sin(arg),
            ]
        )

    p0 = np.array([offset0, amplitude0, period0, phase0])
    p, cov, chi2, converged = _damped_gauss_newton(model, jacobian, p0, y, w)
    if not converged:
        raise FitError("fringe fit did not converge")
    offset, amplitude, period, phase = p
    if amplitude < 0:  # canonical form: positive amplitude
        amplitude = -amplitude
        phase += math.pi
    period = abs(period)
    phase = math.remainder(phase, 2.0 * math.pi)
    if period > span:
        raise FitError(f"fitted period {period:.4g} exceeds the scanned range {span:.4g}")
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    dof = max(len(x) - 4, 1)
    return FitResult(
        model="sinusoid",
        params={
            "offset": float(offset),
            "amplitude": float(amplitude),
            "period": float(period),
            "phase": float(phase),
        },
        sigmas={
            "offset": float(sig[0]),
            "amplitude": float(sig[1]),
            "period": float(sig[2]),
            "phase": float(sig[3]),
        },
        chi2_reduced=float(chi2 / dof),
        n_points=len(x),
        converged=converged,
    )
