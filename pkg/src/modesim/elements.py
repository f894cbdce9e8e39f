"""Transfer matrices of the individual circuit elements.

Every builder returns a :class:`TransferMatrix` on the full registry space:
the element's action on the modes it touches, identity elsewhere.  Loss-free
elements are unitary to better than 1e-10; the grating coupler stays unitary
by coupling its port mode to a dedicated loss mode.

Beam splitter phase convention
------------------------------
The default ("symmetric") 50/50 splitter uses ``[[sqrt(r), i sqrt(1-r)],
[i sqrt(1-r), sqrt(r)]]``.  Measurable quantities (coincidence probabilities,
visibilities, fringe periods) do not depend on this choice; the test suite
re-runs the bundled experiments under the alternative "real" convention
``[[sqrt(r), sqrt(1-r)], [sqrt(1-r), -sqrt(r)]]`` to check that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Mapping

import numpy as np

from .modes import ModeLabel, ModeRegistry, Polarization, UnknownModeError

UNITARY_TOL = 1e-10

SYMMETRIC = "symmetric"
REAL = "real"
CONVENTIONS = (SYMMETRIC, REAL)


class ElementError(ValueError):
    """Illegal element parameters or missing modes."""


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Complex square matrix acting on a registry's mode space."""

    registry: ModeRegistry
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def unitarity_defect(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))

    def require_unitary(self, tol: float = UNITARY_TOL) -> None:
        defect = self.unitarity_defect()
        if defect > tol:
            raise ElementError(f"matrix is not unitary (defect {defect:.3e} > {tol:g})")

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        if self.registry is not other.registry and self.registry != other.registry:
            raise ElementError("cannot compose matrices over different registries")
        return TransferMatrix(self.registry, self.matrix @ other.matrix)


def _identity(registry: ModeRegistry) -> np.ndarray:
    return np.eye(registry.size, dtype=complex)


def _bs_block(reflectivity: float, convention: str) -> np.ndarray:
    if not 0.0 <= reflectivity <= 1.0:
        raise ElementError(f"reflectivity {reflectivity} outside [0, 1]")
    if convention not in CONVENTIONS:
        raise ElementError(f"unknown beam-splitter convention {convention!r}")
    rt = math.sqrt(reflectivity)
    tt = math.sqrt(1.0 - reflectivity)
    if convention == SYMMETRIC:
        return np.array([[rt, 1j * tt], [1j * tt, rt]], dtype=complex)
    return np.array([[rt, tt], [tt, -rt]], dtype=complex)


def bs_matrix(
    registry: ModeRegistry,
    mode_a: ModeLabel,
    mode_b: ModeLabel,
    reflectivity: float,
    convention: str = SYMMETRIC,
) -> TransferMatrix:
    """Beam splitter coupling two registered modes.

    Models both the on-chip 3 dB coupler and the fiber splitter used on the
    detection side; the two coupled modes may differ in any degree of
    freedom.
    """
    if mode_a == mode_b:
        raise ElementError("beam splitter needs two distinct modes")
    ia, ib = registry.index(mode_a), registry.index(mode_b)
    m = _identity(registry)
    block = _bs_block(reflectivity, convention)
    m[np.ix_([ia, ib], [ia, ib])] = block
    return TransferMatrix(registry, m)


def pbs_matrix(
    registry: ModeRegistry,
    in_ports: tuple[str, str],
    out_ports: tuple[str, str] | None = None,
) -> TransferMatrix:
    """Polarization beam splitter: TE goes bar, TM crosses ports.

    ``(in_k, TE, 0) -> (out_k, TE, 0)`` and ``(in_k, TM, 0) ->
    (out_{1-k}, TM, 0)``.  With ``out_ports`` omitted the element acts in
    place on the two input ports.  Distinct output ports get the symmetric
    completion (out modes map back onto in modes) so the matrix stays a
    permutation.
    """
    a, b = in_ports
    if a == b:
        raise ElementError(f"port collision: PBS input ports {a!r}, {b!r}")
    if out_ports is None:
        out_ports = in_ports
    c, d = out_ports
    if c == d:
        raise ElementError(f"port collision: PBS output ports {c!r}, {d!r}")
    in_set, out_set = {a, b}, {c, d}
    if in_set != out_set and in_set & out_set:
        raise ElementError(
            "port collision: PBS input and output ports must coincide or be disjoint"
        )

    te, tm = Polarization.TE, Polarization.TM
    mappings = [
        (ModeLabel(a, te, 0), ModeLabel(c, te, 0)),
        (ModeLabel(b, te, 0), ModeLabel(d, te, 0)),
        (ModeLabel(a, tm, 0), ModeLabel(d, tm, 0)),
        (ModeLabel(b, tm, 0), ModeLabel(c, tm, 0)),
    ]
    m = _identity(registry)
    for src, dst in mappings:
        i, j = registry.index(src), registry.index(dst)
        m[i, i] = 0.0
        m[j, j] = 0.0
    for src, dst in mappings:
        i, j = registry.index(src), registry.index(dst)
        m[j, i] = 1.0
        if i != j:
            m[i, j] = 1.0  # symmetric completion keeps the permutation square
    return TransferMatrix(registry, m)


def _swap_block(crosstalk: float) -> np.ndarray:
    # crosstalk = 0 is the ideal relabeling permutation; a nonzero value
    # leaves a sin(eps) residue in the source mode.
    c, s = math.cos(crosstalk), math.sin(crosstalk)
    return np.array([[s, c], [c, -s]], dtype=complex)


def mode_converter_matrix(
    registry: ModeRegistry, port: str, crosstalk: float = 0.0
) -> TransferMatrix:
    """Polarization-dependent converter: TM0 <-> TE1 on one port, TE0 unchanged.

    The adiabatic-taper direction only decides which label is the input; the
    matrix is the same symmetric permutation either way.
    """
    tm0 = ModeLabel(port, Polarization.TM, 0)
    te1 = ModeLabel(port, Polarization.TE, 1)
    for needed in (tm0, te1):
        if needed not in registry:
            raise UnknownModeError(f"mode converter on {port!r} needs {needed}")
    i, j = registry.index(tm0), registry.index(te1)
    m = _identity(registry)
    m[np.ix_([i, j], [i, j])] = _swap_block(crosstalk)
    return TransferMatrix(registry, m)


def mode_mux_matrix(
    registry: ModeRegistry, access_port: str, bus_port: str, crosstalk: float = 0.0
) -> TransferMatrix:
    """Asymmetric-coupler multiplexer: access TE0 -> bus TE1, bus TE0 untouched."""
    if access_port == bus_port:
        raise ElementError("mode mux needs distinct access and bus ports")
    acc = ModeLabel(access_port, Polarization.TE, 0)
    bus0 = ModeLabel(bus_port, Polarization.TE, 0)
    bus1 = ModeLabel(bus_port, Polarization.TE, 1)
    for needed in (acc, bus0, bus1):
        if needed not in registry:
            raise UnknownModeError(f"mode mux {access_port!r}->{bus_port!r} needs {needed}")
    i, j = registry.index(acc), registry.index(bus1)
    m = _identity(registry)
    m[np.ix_([i, j], [i, j])] = _swap_block(crosstalk)
    return TransferMatrix(registry, m)


def mode_demux_matrix(
    registry: ModeRegistry, access_port: str, bus_port: str, crosstalk: float = 0.0
) -> TransferMatrix:
    """Demultiplexer: transpose of the mux, i.e. the same symmetric builder."""
    return mode_mux_matrix(registry, access_port, bus_port, crosstalk)


def _neff_lookup(label: ModeLabel, n_eff: Mapping) -> float:
    key = f"{label.pol.value}{label.transverse_order}"
    if label in n_eff:
        return float(n_eff[label])
    if key in n_eff:
        return float(n_eff[key])
    raise ElementError(f"missing effective index for mode {label} (key {key!r})")


def propagation_matrix(
    registry: ModeRegistry,
    port: str,
    length_um: float,
    wavelength_nm: float,
    n_eff: Mapping,
) -> TransferMatrix:
    """Straight-waveguide propagation: per-mode phase exp(i 2π n L / λ).

    Modes on the same port generally have different effective indices, so a
    multi-mode section builds up relative phase between them.  ``n_eff`` maps
    labels (or ``"TE0"``-style keys) to effective indices and must cover
    every registered mode on the port.
    """
    if length_um < 0:
        raise ElementError(f"length_um must be >= 0, got {length_um}")
    if wavelength_nm <= 0:
        raise ElementError(f"wavelength_nm must be > 0, got {wavelength_nm}")
    m = _identity(registry)
    touched = registry.on_port(port)
    if not touched:
        raise UnknownModeError(f"no registered modes on port {port!r}")
    for label in touched:
        n = _neff_lookup(label, n_eff)
        phase = 2.0 * math.pi * n * (length_um * 1e3) / wavelength_nm
        m[registry.index(label), registry.index(label)] = np.exp(1j * phase)
    return TransferMatrix(registry, m)


def phase_shifter_matrix(
    registry: ModeRegistry, port: str, phase_rad: float
) -> TransferMatrix:
    """Thermal phase shifter: multiplies every mode on the port by exp(i φ)."""
    m = _identity(registry)
    for label in registry.on_port(port):
        i = registry.index(label)
        m[i, i] = np.exp(1j * phase_rad)
    return TransferMatrix(registry, m)


def grating_coupler_matrix(
    registry: ModeRegistry,
    mode: ModeLabel,
    efficiency: float,
    loss_label: ModeLabel | None = None,
    convention: str = SYMMETRIC,
) -> TransferMatrix:
    """Fiber-chip coupler as a scalar-efficiency loss element.

    Implemented as a beam splitter between the port mode and a dedicated
    loss mode with transmission amplitude sqrt(efficiency), so the matrix
    stays unitary on the enlarged space.  Loss modes are never shared
    between elements and detectors never address them.
    """
    if not 0.0 < efficiency <= 1.0:
        raise ElementError(f"efficiency {efficiency} outside (0, 1]")
    i = registry.index(mode)
    if loss_label is None:
        loss_label = registry.register_loss()
    elif loss_label not in registry:
        raise UnknownModeError(f"loss mode {loss_label} not registered")
    j = registry.index(loss_label)
    m = _identity(registry)
    m[np.ix_([i, j], [i, j])] = _bs_block(efficiency, convention)
    return TransferMatrix(registry, m)


# ---------------------------------------------------------------------------
# Declarative element specs, used by circuits and experiment files.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BeamSplitter:
    kind: ClassVar[str] = "bs"
    mode_a: ModeLabel
    mode_b: ModeLabel
    reflectivity: float = 0.5

    def touched(self) -> tuple[ModeLabel, ...]:
        return (self.mode_a, self.mode_b)

    def build(self, registry: ModeRegistry, convention: str = SYMMETRIC, **_: object) -> TransferMatrix:
        return bs_matrix(registry, self.mode_a, self.mode_b, self.reflectivity, convention)


@dataclass(frozen=True)
class PBS:
    kind: ClassVar[str] = "pbs"
    in_ports: tuple[str, str]
    out_ports: tuple[str, str] | None = None

    def touched(self) -> tuple[ModeLabel, ...]:
        ports = set(self.in_ports) | set(self.out_ports or self.in_ports)
        return tuple(
            ModeLabel(p, pol, 0)
            for p in sorted(ports)
            for pol in (Polarization.TE, Polarization.TM)
        )

    def build(self, registry: ModeRegistry, convention: str = SYMMETRIC, **_: object) -> TransferMatrix:
        return pbs_matrix(registry, self.in_ports, self.out_ports)


@dataclass(frozen=True)
class ModeConverter:
    kind: ClassVar[str] = "converter"
    port: str
    crosstalk: float = 0.0

    def touched(self) -> tuple[ModeLabel, ...]:
        return (ModeLabel(self.port, Polarization.TM, 0), ModeLabel(self.port, Polarization.TE, 1))

    def build(self, registry: ModeRegistry, convention: str = SYMMETRIC, **_: object) -> TransferMatrix:
        return mode_converter_matrix(registry, self.port, self.crosstalk)


@dataclass(frozen=True)
class ModeMux:
    kind: ClassVar[str] = "mux"
    access_port: str
    bus_port: str
    crosstalk: float = 0.0

    def touched(self) -> tuple[ModeLabel, ...]:
        return (
            ModeLabel(self.access_port, Polarization.TE, 0),
            ModeLabel(self.bus_port, Polarization.TE, 0),
            ModeLabel(self.bus_port, Polarization.TE, 1),
        )

    def build(self, registry: ModeRegistry, convention: str = SYMMETRIC, **_: object) -> TransferMatrix:
        return mode_mux_matrix(registry, self.access_port, self.bus_port, self.crosstalk)


@dataclass(frozen=True)
class ModeDemux(ModeMux):
    kind: ClassVar[str] = "demux"

    def build(self, registry: ModeRegistry, convention: str = SYMMETRIC, **_: object) -> TransferMatrix:
        return mode_demux_matrix(registry, self.access_port, self.bus_port, self.crosstalk)


@dataclass(frozen=True)
class Propagation:
    kind: ClassVar[str] = "prop"
    port: str
    length_um: float
    wavelength_nm: float
    n_eff: Mapping = field(default_factory=dict)

    def touched(self) -> tuple[ModeLabel, ...]:
        return ()  # acts on whatever is registered on the port

    def build(self, registry: ModeRegistry, convention: str = SYMMETRIC, **_: object) -> TransferMatrix:
        return propagation_matrix(
            registry, self.port, self.length_um, self.wavelength_nm, self.n_eff
        )


@dataclass(frozen=True)
class PhaseShifter:
    kind: ClassVar[str] = "phase"
    port: str
    phase_rad: float = 0.0
    sweep: bool = False

    def touched(self) -> tuple[ModeLabel, ...]:
        return ()

    def build(self, registry: ModeRegistry, convention: str = SYMMETRIC, **_: object) -> TransferMatrix:
        return phase_shifter_matrix(registry, self.port, self.phase_rad)


@dataclass(frozen=True)
class GratingCoupler:
    kind: ClassVar[str] = "grating"
    mode: ModeLabel
    efficiency: float = 0.3

    def touched(self) -> tuple[ModeLabel, ...]:
        return (self.mode,)

    def build(
        self,
        registry: ModeRegistry,
        convention: str = SYMMETRIC,
        loss_label: ModeLabel | None = None,
    ) -> TransferMatrix:
        return grating_coupler_matrix(registry, self.mode, self.efficiency, loss_label, convention)


ElementSpec = (
    BeamSplitter
    | PBS
    | ModeConverter
    | ModeMux
    | ModeDemux
    | Propagation
    | PhaseShifter
    | GratingCoupler
)
