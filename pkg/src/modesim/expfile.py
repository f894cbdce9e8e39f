"""Plain-text experiment files: parsing, serialization, and assembly.

The format is a small sectioned description, hand-writable and diff-friendly:

    [modes]      one "port POL order" declaration per line
    [inputs]     launch modes, "port:POL:order" references
    [stages]     ordered element lines, "kind positional... key=value..."
    [detect]     pattern / detectors keys plus optional fiber_bs lines
    [source]     s0, Lc_um, pair_rate_hz, accidental_hz, ...
    [scan]       variable, start, stop, step, integration_s, seed, ...

Parse errors carry line numbers and unknown keys are rejected outright;
parse -> serialize -> parse is the identity on the semantic content.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuit import Circuit
from .elements import (
    BeamSplitter,
    ElementSpec,
    GratingCoupler,
    ModeConverter,
    ModeDemux,
    ModeMux,
    PBS,
    PhaseShifter,
    Propagation,
)
from .experiments import ScanConfig, SourceModel
from .fock import DetectionPattern
from .modes import ModeLabel, ModeRegistry


class ExperimentFileError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


SECTIONS = ("modes", "inputs", "stages", "detect", "source", "scan")

_SOURCE_KEYS = {
    "s0": "base_overlap",
    "Lc_um": "coherence_length_um",
    "pair_rate_hz": "pair_rate_hz",
    "accidental_hz": "accidental_rate_hz",
    "detector_efficiency": "detector_efficiency",
}

_SCAN_KEYS = {
    "variable": "variable",
    "start": "start",
    "stop": "stop",
    "step": "step",
    "integration_s": "integration_time_s",
    "seed": "seed",
    "P_pi_mW": "p_pi_mw",
    "delay_center_um": "delay_center_um",
    "quantum_phase_offset_rad": "quantum_phase_offset_rad",
    "classical_phase_offset_rad": "classical_phase_offset_rad",
}


@dataclass
class Experiment:
    """Declarative experiment: circuit parts plus source and scan settings."""

    modes: list[ModeLabel]
    inputs: list[ModeLabel]
    stages: list[ElementSpec]
    pattern: DetectionPattern
    source: SourceModel
    scan: ScanConfig
    detection_stages: list[ElementSpec] = field(default_factory=list)
    detectors: list[ModeLabel] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.detectors:
            self.detectors = list(self.pattern.modes)

    def build_circuit(self) -> Circuit:
        registry = ModeRegistry(self.modes)
        return Circuit(
            registry=registry,
            stages=list(self.stages),
            inputs=list(self.inputs),
            detectors=list(self.detectors),
            detection_stages=list(self.detection_stages),
        )

    def build(self) -> tuple[Circuit, ScanConfig, SourceModel, DetectionPattern]:
        return self.build_circuit(), self.scan, self.source, self.pattern


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_mode_ref(text: str, line: int) -> ModeLabel:
    try:
        label = ModeLabel.parse(text)
    except ValueError as exc:
        raise ExperimentFileError(line, str(exc)) from None
    if label.is_loss:
        raise ExperimentFileError(line, f"port {label.port!r} uses the reserved loss prefix")
    return label


def _split_tokens(rest: list[str], line: int) -> tuple[list[str], dict[str, str], set[str]]:
    positional: list[str] = []
    keyed: dict[str, str] = {}
    flags: set[str] = set()
    for token in rest:
        if "=" in token:
            key, _, value = token.partition("=")
            if not key or not value:
                raise ExperimentFileError(line, f"malformed key=value token {token!r}")
            if key in keyed:
                raise ExperimentFileError(line, f"duplicate key {key!r}")
            keyed[key] = value
        elif token == "sweep":
            flags.add(token)
        else:
            positional.append(token)
    return positional, keyed, flags


def _float(value: str, line: int, what: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ExperimentFileError(line, f"bad number {value!r} for {what}") from None


def _pop_float(keyed: dict[str, str], key: str, line: int, default: float | None = None) -> float:
    if key not in keyed:
        if default is None:
            raise ExperimentFileError(line, f"missing required key {key!r}")
        return default
    return _float(keyed.pop(key), line, key)


def _reject_leftover(keyed: dict[str, str], line: int, kind: str) -> None:
    if keyed:
        name = sorted(keyed)[0]
        raise ExperimentFileError(line, f"unknown key {name!r} for element {kind!r}")


def _parse_stage(tokens: list[str], line: int) -> ElementSpec:
    kind, rest = tokens[0], tokens[1:]
    positional, keyed, flags = _split_tokens(rest, line)
    if flags and kind != "phase":
        raise ExperimentFileError(line, f"flag 'sweep' is only valid for phase, not {kind!r}")

    def need_positional(n: int, what: str) -> list[str]:
        if len(positional) != n:
            raise ExperimentFileError(line, f"{kind} needs {what}, got {len(positional)} tokens")
        return positional

    if kind == "bs":
        a, b = need_positional(2, "two mode references")
        spec: ElementSpec = BeamSplitter(
            _parse_mode_ref(a, line),
            _parse_mode_ref(b, line),
            reflectivity=_pop_float(keyed, "r", line, 0.5),
        )
    elif kind == "pbs":
        if len(positional) == 2:
            spec = PBS((positional[0], positional[1]))
        elif len(positional) == 4:
            spec = PBS((positional[0], positional[1]), (positional[2], positional[3]))
        else:
            raise ExperimentFileError(line, "pbs needs two in-ports, optionally two out-ports")
    elif kind == "converter":
        (port,) = need_positional(1, "one port")
        spec = ModeConverter(port, crosstalk=_pop_float(keyed, "crosstalk", line, 0.0))
    elif kind in ("mux", "demux"):
        access, bus = need_positional(2, "access and bus ports")
        cls = ModeMux if kind == "mux" else ModeDemux
        spec = cls(access, bus, crosstalk=_pop_float(keyed, "crosstalk", line, 0.0))
    elif kind == "prop":
        (port,) = need_positional(1, "one port")
        length = _pop_float(keyed, "length_um", line)
        wavelength = _pop_float(keyed, "wavelength_nm", line)
        n_eff = {}
        for key in sorted(keyed):
            if key.startswith("n_"):
                n_eff[key[2:]] = _float(keyed.pop(key), line, key)
        spec = Propagation(port, length, wavelength, n_eff)
    elif kind == "phase":
        (port,) = need_positional(1, "one port")
        spec = PhaseShifter(
            port, phase_rad=_pop_float(keyed, "rad", line, 0.0), sweep="sweep" in flags
        )
    elif kind == "grating":
        (mode,) = need_positional(1, "one mode reference")
        spec = GratingCoupler(
            _parse_mode_ref(mode, line), efficiency=_pop_float(keyed, "eta", line, 0.3)
        )
    else:
        raise ExperimentFileError(line, f"unknown element kind {kind!r}")
    _reject_leftover(keyed, line, kind)
    return spec


def parse_experiment(text: str) -> Experiment:
    modes: list[ModeLabel] = []
    inputs: list[ModeLabel] = []
    stages: list[ElementSpec] = []
    detection_stages: list[ElementSpec] = []
    pattern_modes: list[ModeLabel] | None = None
    detectors: list[ModeLabel] = []
    source_kwargs: dict[str, float] = {}
    scan_kwargs: dict[str, object] = {}
    seen_sections: set[str] = set()

    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if name not in SECTIONS:
                raise ExperimentFileError(lineno, f"unknown section [{name}]")
            if name in seen_sections:
                raise ExperimentFileError(lineno, f"duplicate section [{name}]")
            seen_sections.add(name)
            section = name
            continue
        if section is None:
            raise ExperimentFileError(lineno, "content before the first section header")

        if section == "modes":
            parts = stripped.split()
            if len(parts) != 3:
                raise ExperimentFileError(lineno, "mode declaration needs 'port POL order'")
            label = _parse_mode_ref(":".join(parts), lineno)
            if label in modes:
                raise ExperimentFileError(lineno, f"duplicate mode {label}")
            modes.append(label)
        elif section == "inputs":
            inputs.append(_parse_mode_ref(stripped, lineno))
        elif section == "stages":
            stages.append(_parse_stage(stripped.split(), lineno))
        elif section == "detect":
            tokens = stripped.split()
            if tokens[0] == "fiber_bs":
                positional, keyed, _ = _split_tokens(tokens[1:], lineno)
                if len(positional) != 2:
                    raise ExperimentFileError(lineno, "fiber_bs needs two mode references")
                detection_stages.append(
                    BeamSplitter(
                        _parse_mode_ref(positional[0], lineno),
                        _parse_mode_ref(positional[1], lineno),
                        reflectivity=_pop_float(keyed, "r", lineno, 0.5),
                    )
                )
                _reject_leftover(keyed, lineno, "fiber_bs")
            elif "=" in stripped:
                key, _, value = stripped.partition("=")
                key = key.strip()
                refs = value.split()
                if key == "pattern":
                    if pattern_modes is not None:
                        raise ExperimentFileError(lineno, "duplicate pattern")
                    pattern_modes = [_parse_mode_ref(r, lineno) for r in refs]
                elif key == "detectors":
                    detectors = [_parse_mode_ref(r, lineno) for r in refs]
                else:
                    raise ExperimentFileError(lineno, f"unknown key {key!r} in [detect]")
            else:
                raise ExperimentFileError(lineno, f"unrecognized detect line {stripped!r}")
        elif section == "source":
            key, _, value = stripped.partition("=")
            key, value = key.strip(), value.strip()
            if not _ or key not in _SOURCE_KEYS:
                raise ExperimentFileError(lineno, f"unknown key {key!r} in [source]")
            source_kwargs[_SOURCE_KEYS[key]] = _float(value, lineno, key)
        elif section == "scan":
            key, _, value = stripped.partition("=")
            key, value = key.strip(), value.strip()
            if not _ or key not in _SCAN_KEYS:
                raise ExperimentFileError(lineno, f"unknown key {key!r} in [scan]")
            attr = _SCAN_KEYS[key]
            if attr == "variable":
                scan_kwargs[attr] = value
            elif attr == "seed":
                try:
                    scan_kwargs[attr] = int(value)
                except ValueError:
                    raise ExperimentFileError(lineno, f"bad integer {value!r} for seed") from None
            else:
                scan_kwargs[attr] = _float(value, lineno, key)

    for required in ("modes", "inputs", "stages", "detect", "source", "scan"):
        if required not in seen_sections:
            raise ExperimentFileError(len(text.splitlines()) + 1, f"missing section [{required}]")
    if pattern_modes is None:
        raise ExperimentFileError(len(text.splitlines()) + 1, "missing 'pattern =' in [detect]")

    counts: dict[ModeLabel, int] = {}
    for label in pattern_modes:
        counts[label] = counts.get(label, 0) + 1
    try:
        source = SourceModel(**source_kwargs)
        scan = ScanConfig(**scan_kwargs)  # type: ignore[arg-type]
        pattern = DetectionPattern.from_counts(counts)
    except (TypeError, ValueError) as exc:
        raise ExperimentFileError(len(text.splitlines()) + 1, str(exc)) from None
    return Experiment(
        modes=modes,
        inputs=inputs,
        stages=stages,
        pattern=pattern,
        source=source,
        scan=scan,
        detection_stages=detection_stages,
        detectors=detectors,
    )


def load_experiment(path) -> Experiment:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_experiment(handle.read())


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _num(value: float) -> str:
    return repr(float(value))


def _stage_line(spec: ElementSpec) -> str:
    if isinstance(spec, BeamSplitter):
        return f"bs {spec.mode_a} {spec.mode_b} r={_num(spec.reflectivity)}"
    if isinstance(spec, PBS):
        ports = " ".join(spec.in_ports + (spec.out_ports or ()))
        return f"pbs {ports}"
    if isinstance(spec, ModeConverter):
        extra = f" crosstalk={_num(spec.crosstalk)}" if spec.crosstalk else ""
        return f"converter {spec.port}{extra}"
    if isinstance(spec, (ModeMux, ModeDemux)):
        extra = f" crosstalk={_num(spec.crosstalk)}" if spec.crosstalk else ""
        return f"{spec.kind} {spec.access_port} {spec.bus_port}{extra}"
    if isinstance(spec, Propagation):
        neff = " ".join(f"n_{k}={_num(v)}" for k, v in sorted(spec.n_eff.items()))
        return (
            f"prop {spec.port} length_um={_num(spec.length_um)} "
            f"wavelength_nm={_num(spec.wavelength_nm)} {neff}".rstrip()
        )
    if isinstance(spec, PhaseShifter):
        sweep = " sweep" if spec.sweep else ""
        return f"phase {spec.port} rad={_num(spec.phase_rad)}{sweep}"
    if isinstance(spec, GratingCoupler):
        return f"grating {spec.mode} eta={_num(spec.efficiency)}"
    raise TypeError(f"cannot serialize element {spec!r}")


def serialize_experiment(exp: Experiment, header: str = "") -> str:
    lines: list[str] = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append("[modes]")
    lines.extend(f"{m.port} {m.pol.value} {m.transverse_order}" for m in exp.modes)
    lines.append("")
    lines.append("[inputs]")
    lines.extend(str(m) for m in exp.inputs)
    lines.append("")
    lines.append("[stages]")
    lines.extend(_stage_line(s) for s in exp.stages)
    lines.append("")
    lines.append("[detect]")
    expanded = [str(lab) for lab, n in exp.pattern.counts for _ in range(n)]
    lines.append(f"pattern = {' '.join(expanded)}")
    if exp.detectors != list(exp.pattern.modes):
        lines.append(f"detectors = {' '.join(str(m) for m in exp.detectors)}")
    for spec in exp.detection_stages:
        if not isinstance(spec, BeamSplitter):
            raise TypeError("only beam splitters are supported on the detection side")
        lines.append(f"fiber_bs {spec.mode_a} {spec.mode_b} r={_num(spec.reflectivity)}")
    lines.append("")
    src = exp.source
    lines.append("[source]")
    lines.append(f"s0 = {_num(src.base_overlap)}")
    lines.append(f"Lc_um = {_num(src.coherence_length_um)}")
    lines.append(f"pair_rate_hz = {_num(src.pair_rate_hz)}")
    lines.append(f"accidental_hz = {_num(src.accidental_rate_hz)}")
    if src.detector_efficiency != 1.0:
        lines.append(f"detector_efficiency = {_num(src.detector_efficiency)}")
    lines.append("")
    scan = exp.scan
    lines.append("[scan]")
    lines.append(f"variable = {scan.variable}")
    lines.append(f"start = {_num(scan.start)}")
    lines.append(f"stop = {_num(scan.stop)}")
    lines.append(f"step = {_num(scan.step)}")
    lines.append(f"integration_s = {_num(scan.integration_time_s)}")
    lines.append(f"seed = {scan.seed}")
    if scan.p_pi_mw is not None:
        lines.append(f"P_pi_mW = {_num(scan.p_pi_mw)}")
    if scan.delay_center_um:
        lines.append(f"delay_center_um = {_num(scan.delay_center_um)}")
    if scan.quantum_phase_offset_rad:
        lines.append(f"quantum_phase_offset_rad = {_num(scan.quantum_phase_offset_rad)}")
    if scan.classical_phase_offset_rad:
        lines.append(f"classical_phase_offset_rad = {_num(scan.classical_phase_offset_rad)}")
    return "\n".join(lines) + "\n"


def save_experiment(exp: Experiment, path, header: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(serialize_experiment(exp, header))
