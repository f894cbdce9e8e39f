"""Circuits: ordered elements over a shared registry, compiled to one matrix.

A circuit is a feed-forward chain (the chips modeled here are acyclic
left-to-right layouts).  ``stages`` holds the on-chip elements in order;
``detection_stages`` holds measurement-side optics such as fiber splitters,
applied after the chip.  Compilation returns the ordered product
``U_n ... U_2 U_1`` embedded in the full registry space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elements import (
    UNITARY_TOL,
    ElementSpec,
    GratingCoupler,
    SYMMETRIC,
    TransferMatrix,
)
from .modes import ModeLabel, ModeRegistry


class CircuitError(ValueError):
    """Raised when a circuit cannot be compiled."""


@dataclass
class Circuit:
    registry: ModeRegistry
    stages: list[ElementSpec] = field(default_factory=list)
    inputs: list[ModeLabel] = field(default_factory=list)
    detectors: list[ModeLabel] = field(default_factory=list)
    detection_stages: list[ElementSpec] = field(default_factory=list)

    def all_stages(self) -> list[ElementSpec]:
        return list(self.stages) + list(self.detection_stages)

    def compile(self, convention: str = SYMMETRIC) -> TransferMatrix:
        return compile_circuit(self, convention)

    def validate(self) -> list[str]:
        return validate_circuit(self)


def _loss_names(circuit: Circuit) -> dict[int, str]:
    return {
        i: f"loss{i}"
        for i, spec in enumerate(circuit.all_stages())
        if isinstance(spec, GratingCoupler)
    }


def compile_circuit(circuit: Circuit, convention: str = SYMMETRIC) -> TransferMatrix:
    """Compile to the ordered product of stage matrices.

    Loss modes of grating couplers are registered up front (deterministically
    named by stage position, so recompilation is idempotent); afterwards the
    registry must not grow, otherwise stage dimensions would disagree.
    """
    registry = circuit.registry
    loss_labels: dict[int, ModeLabel] = {
        i: registry.register_loss(name) for i, name in _loss_names(circuit).items()
    }
    dim = registry.size
    total = np.eye(dim, dtype=complex)
    for i, spec in enumerate(circuit.all_stages()):
        kwargs = {"loss_label": loss_labels[i]} if i in loss_labels else {}
        stage = spec.build(registry, convention=convention, **kwargs)
        if stage.matrix.shape != (dim, dim):
            raise CircuitError(
                f"stage {i} ({spec.kind}): registry grew during compilation; "
                "register all modes before compiling"
            )
        total = stage.matrix @ total
    compiled = TransferMatrix(registry, total)
    defect = compiled.unitarity_defect()
    if defect > UNITARY_TOL:
        raise CircuitError(f"compiled circuit is not unitary (defect {defect:.3e})")
    return compiled


def validate_circuit(circuit: Circuit) -> list[str]:
    """Return human-readable diagnostics; empty list means well-formed.

    Never mutates the circuit: stages are test-built against a copy of the
    registry.
    """
    diagnostics: list[str] = []
    registry = circuit.registry.copy()

    for i, name in _loss_names(circuit).items():
        registry.register_loss(name)

    for role, labels in (("input", circuit.inputs), ("detector", circuit.detectors)):
        for label in labels:
            if label not in registry:
                diagnostics.append(f"{role} mode {label} is not registered")
            elif registry.is_loss(label):
                diagnostics.append(f"{role} mode {label} is a loss mode")

    for i, spec in enumerate(circuit.all_stages()):
        where = f"stage {i} ({spec.kind})"
        missing = [lab for lab in spec.touched() if lab not in registry]
        if missing:
            diagnostics.extend(f"{where}: unregistered mode {lab}" for lab in missing)
            continue
        try:
            built = spec.build(registry, convention=SYMMETRIC)
        except Exception as exc:  # diagnostics, not failures
            diagnostics.append(f"{where}: {exc}")
            continue
        defect = built.unitarity_defect()
        if defect > UNITARY_TOL:
            diagnostics.append(f"{where}: non-unitary (defect {defect:.3e})")
    return diagnostics
