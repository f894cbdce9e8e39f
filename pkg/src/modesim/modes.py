"""Mode labels and the registry that maps them to simulation indices.

A guided mode is identified by its spatial port (a free-form symbol such as
``"in0"`` or ``"bus"``), its polarization (TE or TM) and its transverse order
(0 for the fundamental mode, 1 for the first higher-order mode).  A
:class:`ModeRegistry` assigns each distinct label a stable, insertion-ordered
index; every transfer matrix in the package acts on that index space.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator


class Polarization(str, Enum):
    TE = "TE"
    TM = "TM"


class UnsupportedModeError(ValueError):
    """Mode label outside the supported TE0 / TE1 / TM0 family."""


class UnknownModeError(KeyError):
    """Label was never registered."""

    def __str__(self) -> str:  # KeyError would repr-quote the message
        return self.args[0] if self.args else ""


LOSS_PORT_PREFIX = "~"


@dataclass(frozen=True, order=True)
class ModeLabel:
    """One guided mode: ``(port, polarization, transverse order)``.

    Labels are immutable value objects; equality is field-wise.  Ports
    starting with ``~`` are reserved for internal loss modes.
    """

    port: str
    pol: Polarization
    transverse_order: int = 0

    def __post_init__(self) -> None:
        if not self.port:
            raise ValueError("port must be a non-empty symbol")
        object.__setattr__(self, "pol", Polarization(self.pol))
        if self.transverse_order < 0:
            raise ValueError("transverse_order must be >= 0")

    def __str__(self) -> str:
        return f"{self.port}:{self.pol.value}:{self.transverse_order}"

    @property
    def is_loss(self) -> bool:
        return self.port.startswith(LOSS_PORT_PREFIX)

    @classmethod
    def parse(cls, text: str) -> "ModeLabel":
        """Parse ``port:POL:order`` references such as ``in0:TE:0``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad mode reference {text!r}: expected port:POL:order")
        port, pol, order = parts
        try:
            polarization = Polarization(pol.upper())
        except ValueError:
            raise ValueError(f"bad polarization {pol!r} in {text!r}") from None
        try:
            order_val = int(order)
        except ValueError:
            raise ValueError(f"bad transverse order {order!r} in {text!r}") from None
        return cls(port, polarization, order_val)


class ModeRegistry:
    """Insertion-ordered, duplicate-free basis of mode labels.

    Intended use is single-writer construction followed by read-only sharing:
    circuits freeze the registry implicitly once compiled, and concurrent
    readers are safe after that point.
    """

    def __init__(self, labels: Iterable[ModeLabel] = ()) -> None:
        self._labels: list[ModeLabel] = []
        self._index: dict[ModeLabel, int] = {}
        self._loss: set[int] = set()
        for label in labels:
            self.register(label)

    # -- registration -------------------------------------------------

    def register(self, label: ModeLabel) -> int:
        """Register ``label`` and return its index (idempotent)."""
        existing = self._index.get(label)
        if existing is not None:
            return existing
        if label.pol is Polarization.TM and label.transverse_order >= 1:
            raise UnsupportedModeError(
                f"{label}: TM modes are supported at transverse order 0 only"
            )
        index = len(self._labels)
        self._labels.append(label)
        self._index[label] = index
        return index

    def register_loss(self, name: str | None = None) -> ModeLabel:
        """Register a dedicated loss mode and return its label.

        Loss modes are invisible to detectors; each lossy element gets its
        own.  With an explicit ``name`` the call is idempotent, which lets
        circuit compilation re-run without growing the registry.
        """
        if name is None:
            name = f"loss{len(self._loss)}"
            while ModeLabel(LOSS_PORT_PREFIX + name, Polarization.TE, 0) in self._index:
                name += "_"
        label = ModeLabel(LOSS_PORT_PREFIX + name, Polarization.TE, 0)
        if label in self._index:
            return label
        index = self.register(label)
        self._loss.add(index)
        return label

    # -- lookup --------------------------------------------------------

    def index(self, label: ModeLabel) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownModeError(f"unregistered mode {label}") from None

    @property
    def labels(self) -> tuple[ModeLabel, ...]:
        return tuple(self._labels)

    @property
    def size(self) -> int:
        return len(self._labels)

    @property
    def loss_indices(self) -> frozenset[int]:
        return frozenset(self._loss)

    def is_loss(self, label: ModeLabel) -> bool:
        return self.index(label) in self._loss

    def on_port(self, port: str) -> tuple[ModeLabel, ...]:
        """All registered labels on a spatial port, in index order."""
        return tuple(lab for lab in self._labels if lab.port == port)

    def copy(self) -> "ModeRegistry":
        dup = ModeRegistry()
        dup._labels = list(self._labels)
        dup._index = dict(self._index)
        dup._loss = set(self._loss)
        return dup

    # -- container protocol ---------------------------------------------

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: ModeLabel) -> bool:
        return label in self._index

    def __iter__(self) -> Iterator[ModeLabel]:
        return iter(self._labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModeRegistry):
            return NotImplemented
        return self._labels == other._labels and self._loss == other._loss

    def __repr__(self) -> str:
        return f"ModeRegistry({[str(l) for l in self._labels]})"
