"""Parameter sweeps over compiled circuits: delay scans and heater fringes.

Expected rates are deterministic functions of the configuration; sampled
counts come from per-point Poisson draws seeded by ``(seed, stream, point
index)``, so serial and parallel execution produce bit-identical results.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .circuit import Circuit, compile_circuit
from .elements import SYMMETRIC, PhaseShifter
from .fock import DetectionPattern, PhotonState, WavepacketBasis, evolve_probability

DELAY_SCAN = "delay_um"
HEATER_SCAN = "heater_mW"
SCAN_VARIABLES = (DELAY_SCAN, HEATER_SCAN)


class ScanError(ValueError):
    """Scan configuration does not fit the requested experiment."""


@dataclass
class SourceModel:
    """Phenomenological two-photon source.

    ``base_overlap`` is the wavepacket overlap at zero delay (one effective
    number absorbing source quality and any polarization distortion);
    ``coherence_length_um`` is the half-base of the triangular overlap
    envelope.
    """

    base_overlap: float = 1.0
    coherence_length_um: float = 448.7
    pair_rate_hz: float = 1.0e6
    accidental_rate_hz: float = 0.0
    detector_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.base_overlap <= 1.0:
            raise ValueError(f"base_overlap {self.base_overlap} outside [0, 1]")
        if self.coherence_length_um <= 0:
            raise ValueError("coherence_length_um must be > 0")
        if self.pair_rate_hz < 0 or self.accidental_rate_hz < 0:
            raise ValueError("rates must be >= 0")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError("detector_efficiency must be in (0, 1]")


def overlap_at_delay(delay_um: float, source: SourceModel) -> float:
    """Triangular overlap envelope: s0 * max(0, 1 - |delay| / L_c)."""
    return source.base_overlap * max(0.0, 1.0 - abs(delay_um) / source.coherence_length_um)


@dataclass
class ScanConfig:
    """Sweep definition: inclusive uniform grid plus sampling metadata."""

    variable: str
    start: float
    stop: float
    step: float
    integration_time_s: float = 1.0
    seed: int = 12345
    p_pi_mw: float | None = None
    delay_center_um: float = 0.0
    quantum_phase_offset_rad: float = 0.0
    classical_phase_offset_rad: float = 0.0

    def __post_init__(self) -> None:
        if self.variable not in SCAN_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if self.step <= 0 or self.stop < self.start:
            raise ValueError("need stop >= start and step > 0")
        if self.integration_time_s <= 0:
            raise ValueError("integration_time_s must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.p_pi_mw is not None and self.p_pi_mw <= 0:
            raise ValueError("p_pi_mw must be > 0")

    @property
    def points(self) -> np.ndarray:
        n = int(round((self.stop - self.start) / self.step))
        return self.start + self.step * np.arange(n + 1)


@dataclass
class ScanResult:
    """Swept coincidence data with Poisson counting errors."""

    variable: str
    points: np.ndarray
    expected_rate: np.ndarray
    counts: np.ndarray
    sigma: np.ndarray
    integration_time_s: float
    seed: int
    label: str = ""

    def scaled_counts(self, factor: float) -> "ScanResult":
        counts = self.counts * factor
        return replace(self, counts=counts, sigma=np.sqrt(np.maximum(counts, 0.0)))

    def noiseless(self) -> "ScanResult":
        """Copy with counts replaced by the expected (unsampled) counts."""
        counts = self.expected_rate * self.integration_time_s
        return replace(self, counts=counts, sigma=np.sqrt(np.maximum(counts, 0.0)))


def _poisson_counts(
    rates: np.ndarray,
    integration_time_s: float,
    seed: int,
    stream: int,
    workers: int | None = None,
) -> np.ndarray:
    """Counter-based per-point Poisson draws, order-independent by design."""
    means = np.asarray(rates, dtype=float) * integration_time_s

    def draw(i: int) -> int:
        rng = np.random.default_rng(np.random.SeedSequence((seed, stream, i)))
        return int(rng.poisson(means[i]))

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(draw, range(len(means))))
    else:
        counts = [draw(i) for i in range(len(means))]
    return np.asarray(counts, dtype=float)


def _finish_scan(
    scan: ScanConfig,
    rates: np.ndarray,
    stream: int,
    label: str,
    workers: int | None,
) -> ScanResult:
    counts = _poisson_counts(rates, scan.integration_time_s, scan.seed, stream, workers)
    return ScanResult(
        variable=scan.variable,
        points=scan.points,
        expected_rate=np.asarray(rates, dtype=float),
        counts=counts,
        sigma=np.sqrt(counts),
        integration_time_s=scan.integration_time_s,
        seed=scan.seed,
        label=label,
    )


def _two_photon_input(circuit: Circuit) -> PhotonState:
    if len(circuit.inputs) != 2:
        raise ScanError("circuit must declare exactly two input modes")
    idx = [circuit.registry.index(lab) for lab in circuit.inputs]
    return PhotonState.product(idx, tags=(0, 1))


def hom_scan(
    circuit: Circuit,
    pattern: DetectionPattern,
    source: SourceModel,
    scan: ScanConfig,
    convention: str = SYMMETRIC,
    workers: int | None = None,
    stream: int = 0,
) -> ScanResult:
    """Two-photon coincidence versus relative path delay.

    The delay only moves the wavepacket overlap along the triangular
    envelope; the circuit itself is delay-independent and compiled once.

    Interference terms scale with the squared overlap, so the squared Gram
    entry follows the triangle: |g(delta)|^2 = s0 * overlap_at_delay(delta).
    That keeps the coincidence trace itself triangular (the shape cw-pumped
    type-II pair sources produce and the shape the quoted coherence lengths
    parameterize), with the zero-delay contrast still s0^2.
    """
    if scan.variable != DELAY_SCAN:
        raise ScanError(f"hom_scan needs a {DELAY_SCAN} sweep, got {scan.variable!r}")
    if pattern.n_photons != 2 or len(pattern.counts) != 2:
        raise ScanError("hom_scan expects a two-detector coincidence pattern")
    transfer = compile_circuit(circuit, convention)
    state = _two_photon_input(circuit)
    eta = source.detector_efficiency
    rates = np.empty(len(scan.points))
    for i, delay in enumerate(scan.points):
        envelope = overlap_at_delay(delay - scan.delay_center_um, source)
        g = math.sqrt(max(source.base_overlap * envelope, 0.0))
        p = evolve_probability(state, transfer, pattern, WavepacketBasis.pair(g))
        rates[i] = source.pair_rate_hz * p * eta**2 + source.accidental_rate_hz
    return _finish_scan(scan, rates, stream=stream, label="quantum", workers=workers)


def _swept_stage_index(circuit: Circuit) -> int:
    swept = [
        i
        for i, spec in enumerate(circuit.stages)
        if isinstance(spec, PhaseShifter) and spec.sweep
    ]
    if len(swept) != 1:
        raise ScanError(
            f"fringe scans need exactly one swept phase shifter, found {len(swept)}"
        )
    return swept[0]


def fringe_scan(
    circuit: Circuit,
    source: SourceModel,
    scan: ScanConfig,
    convention: str = SYMMETRIC,
    workers: int | None = None,
) -> tuple[ScanResult, ScanResult]:
    """Heater-power sweep: (two-photon trace, classical single-photon trace).

    The heater phase is linear in electrical power, phi = pi * P / P_pi.
    Quantum and classical traces may carry independent zero-power phase
    offsets.
    """
    if scan.variable != HEATER_SCAN:
        raise ScanError(f"fringe_scan needs a {HEATER_SCAN} sweep, got {scan.variable!r}")
    if scan.p_pi_mw is None:
        raise ScanError("fringe_scan needs p_pi_mw (heater power for a pi phase)")
    if len(circuit.detectors) < 2:
        raise ScanError("fringe_scan needs two detector modes")
    stage_idx = _swept_stage_index(circuit)
    template = circuit.stages[stage_idx]

    pair_state = _two_photon_input(circuit)
    pair_basis = WavepacketBasis.pair(source.base_overlap)
    single_state = PhotonState.product([circuit.registry.index(circuit.inputs[0])], tags=(0,))
    single_basis = WavepacketBasis.indistinguishable(1)
    coincidence = DetectionPattern.coincidence(circuit.detectors[0], circuit.detectors[1])
    single_pattern = DetectionPattern.from_counts({circuit.detectors[0]: 1})

    def compiled_at(phase: float):
        stages = list(circuit.stages)
        stages[stage_idx] = replace(template, phase_rad=phase)
        return compile_circuit(replace(circuit, stages=stages), convention)

    eta = source.detector_efficiency
    quantum = np.empty(len(scan.points))
    classical = np.empty(len(scan.points))
    for i, power in enumerate(scan.points):
        base = math.pi * power / scan.p_pi_mw
        for offset, out, state, basis, pattern, det_eta in (
            (scan.quantum_phase_offset_rad, quantum, pair_state, pair_basis, coincidence, eta**2),
            (scan.classical_phase_offset_rad, classical, single_state, single_basis, single_pattern, eta),
        ):
            transfer = compiled_at(base + offset)
            p = evolve_probability(state, transfer, pattern, basis)
            out[i] = source.pair_rate_hz * p * det_eta + source.accidental_rate_hz

    return (
        _finish_scan(scan, quantum, stream=0, label="quantum", workers=workers),
        _finish_scan(scan, classical, stream=1, label="classical", workers=workers),
    )
