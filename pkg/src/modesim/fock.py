"""Few-photon Fock states, matrix permanents, and detection probabilities.

Photons carry a wavepacket tag besides their mode index.  Tags index a
:class:`WavepacketBasis`, the Hermitian Gram matrix of pairwise wavepacket
overlaps; this is what makes partial distinguishability a single scalar per
photon pair instead of a full spectral integral.

Amplitude convention: a :class:`PhotonState` stores raw coefficients of
creation-operator products, i.e. the state is ``sum_c amp_c prod_i
a_dag(mode_i, tag_i) |0>``.  A doubly occupied configuration therefore
carries amplitude ``1/sqrt(2)`` when it represents a normalized two-photon
number state.  The factory methods take care of this.

For a detection pattern ``t`` (photon counts per detector mode, loss modes
never addressed) the probability of a configuration pair is a Gram-weighted
double sum over photon permutations,

    P(t) = 1/prod_j(t_j!) * sum_{sigma,tau} prod_i
           U[d_i, r'_sigma(i)] U*[d_i, r_tau(i)] S[g_tau(i), g'_sigma(i)],

which collapses to ``|perm(U_sub)|^2`` for indistinguishable photons and to
``perm(|U_sub|^2)`` for fully distinguishable ones.  Both reductions are
used as fast paths and cross-checked against the general sum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .elements import (
    SYMMETRIC,
    TransferMatrix,
    bs_matrix,
    phase_shifter_matrix,
)
from .modes import ModeLabel, ModeRegistry, Polarization

PERMANENT_MAX_DIM = 12
_GENERAL_SUM_MAX_PHOTONS = 5
_NORM_TOL = 1e-10


def permanent(matrix: np.ndarray) -> complex:
    """Exact permanent by Ryser inclusion-exclusion with Gray-code updates.

    O(2^n n); capped at n = 12, beyond which this approach is hopeless
    anyway.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > PERMANENT_MAX_DIM:
        raise ValueError(f"permanent limited to n <= {PERMANENT_MAX_DIM}, got {n}")
    if n == 0:
        return 1.0 + 0.0j
    if n == 1:
        return complex(a[0, 0])
    if n == 2:
        return complex(a[0, 0] * a[1, 1] + a[0, 1] * a[1, 0])
    sums = np.zeros(n, dtype=complex)
    total = 0.0 + 0.0j
    prev_gray = 0
    parity = 1
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        bit = gray ^ prev_gray
        j = bit.bit_length() - 1
        if gray & bit:
            sums += a[:, j]
        else:
            sums -= a[:, j]
        parity = -parity
        total += parity * np.prod(sums)
        prev_gray = gray
    return complex(total * (-1) ** n)


class WavepacketBasis:
    """Gram matrix of pairwise inner products between photon wavepackets."""

    def __init__(self, gram: np.ndarray) -> None:
        g = np.asarray(gram, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gram must be a square matrix")
        if np.max(np.abs(g - g.conj().T)) > 1e-10:
            raise ValueError("gram must be Hermitian")
        if np.max(np.abs(np.diag(g) - 1.0)) > 1e-10:
            raise ValueError("gram diagonal must be 1 (normalized wavepackets)")
        if np.max(np.abs(g)) > 1.0 + 1e-10:
            raise ValueError("gram entries must have magnitude <= 1")
        if g.shape[0] and np.min(np.linalg.eigvalsh(g)) < -1e-9:
            raise ValueError("gram must be positive semidefinite")
        self.gram = g

    @property
    def size(self) -> int:
        return self.gram.shape[0]

    @classmethod
    def indistinguishable(cls, n: int) -> "WavepacketBasis":
        return cls(np.ones((n, n)))

    @classmethod
    def distinguishable(cls, n: int) -> "WavepacketBasis":
        return cls(np.eye(n))

    @classmethod
    def pair(cls, overlap: complex) -> "WavepacketBasis":
        """Two wavepackets with inner product <phi_0|phi_1> = overlap."""
        return cls(np.array([[1.0, overlap], [np.conj(overlap), 1.0]]))


Config = tuple[tuple[int, int], ...]  # sorted ((mode index, wavepacket tag), ...)


def _canonical(config: Iterable[tuple[int, int]]) -> Config:
    return tuple(sorted((int(m), int(t)) for m, t in config))


def _pairwise_overlap(
    bra: Config, ket: Config, gram: np.ndarray
) -> complex:
    """<bra|ket> = permanent of the mode-delta-masked Gram block."""
    n = len(bra)
    if len(ket) != n:
        return 0.0 + 0.0j
    k = np.zeros((n, n), dtype=complex)
    for i, (mi, gi) in enumerate(bra):
        for j, (mj, gj) in enumerate(ket):
            if mi == mj:
                k[i, j] = gram[gi, gj]
    return permanent(k)


class PhotonState:
    """An n-photon pure state as a superposition of photon configurations."""

    def __init__(
        self,
        configs: Sequence[Iterable[tuple[int, int]]],
        amplitudes: Sequence[complex],
        basis: WavepacketBasis | None = None,
        require_normalized: bool = True,
    ) -> None:
        if len(configs) != len(amplitudes):
            raise ValueError("configs and amplitudes must have equal length")
        if not configs:
            raise ValueError("state needs at least one configuration")
        merged: dict[Config, complex] = {}
        for config, amp in zip(configs, amplitudes):
            key = _canonical(config)
            merged[key] = merged.get(key, 0.0) + complex(amp)
        n_photons = {len(c) for c in merged}
        if len(n_photons) != 1:
            raise ValueError("all configurations must contain the same photon count")
        self.n_photons = n_photons.pop()
        items = sorted(merged.items())
        self.configs: tuple[Config, ...] = tuple(c for c, _ in items)
        self.amplitudes = np.array([a for _, a in items], dtype=complex)
        if require_normalized:
            if basis is None:
                basis = WavepacketBasis.distinguishable(self.max_tag + 1)
            norm2 = self.norm_squared(basis)
            if abs(norm2 - 1.0) > _NORM_TOL:
                raise ValueError(f"state is not normalized (|psi|^2 = {norm2:.12g})")

    @property
    def max_tag(self) -> int:
        return max(t for c in self.configs for _, t in c)

    def norm_squared(self, basis: WavepacketBasis) -> float:
        total = 0.0 + 0.0j
        for ca, aa in zip(self.configs, self.amplitudes):
            for cb, ab in zip(self.configs, self.amplitudes):
                total += np.conj(aa) * ab * _pairwise_overlap(ca, cb, basis.gram)
        return float(total.real)

    # -- factories ------------------------------------------------------

    @classmethod
    def product(
        cls, modes: Sequence[int], tags: Sequence[int] | None = None
    ) -> "PhotonState":
        """One photon per entry of ``modes``; tags default to 0, 1, 2, ..."""
        if tags is None:
            tags = tuple(range(len(modes)))
        if len(tags) != len(modes):
            raise ValueError("modes and tags must have equal length")
        config = _canonical(zip(modes, tags))
        mult = 1.0
        for count in _multiplicities(config).values():
            mult *= math.factorial(count)
        return cls([config], [1.0 / math.sqrt(mult)], require_normalized=False)

    @classmethod
    def noon(
        cls, mode_a: int, mode_b: int, n: int = 2, tag: int = 0
    ) -> "PhotonState":
        """(|n,0> - |0,n>)/sqrt(2) on two modes, all photons one wavepacket."""
        amp = 1.0 / math.sqrt(2.0 * math.factorial(n))
        return cls(
            [((mode_a, tag),) * n, ((mode_b, tag),) * n],
            [amp, -amp],
            require_normalized=False,
        )

    @classmethod
    def superposition(
        cls,
        terms: Sequence[tuple[Iterable[tuple[int, int]], complex]],
        basis: WavepacketBasis | None = None,
    ) -> "PhotonState":
        configs = [c for c, _ in terms]
        amps = [a for _, a in terms]
        return cls(configs, amps, basis=basis)

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{amp:.4g}*{config}" for config, amp in zip(self.configs, self.amplitudes)
        )
        return f"PhotonState({parts})"


def _multiplicities(config: Config) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for photon in config:
        counts[photon] = counts.get(photon, 0) + 1
    return counts


@dataclass(frozen=True)
class DetectionPattern:
    """Photon counts per detector mode; counts sum to the photon number."""

    counts: tuple[tuple[ModeLabel, int], ...]

    @classmethod
    def from_counts(cls, counts: Mapping[ModeLabel, int]) -> "DetectionPattern":
        items = tuple(sorted(((lab, int(n)) for lab, n in counts.items() if n), key=lambda kv: str(kv[0])))
        if any(n < 0 for _, n in items):
            raise ValueError("pattern counts must be non-negative")
        if not items:
            raise ValueError("pattern must contain at least one photon")
        return cls(items)

    @classmethod
    def coincidence(cls, mode_a: ModeLabel, mode_b: ModeLabel) -> "DetectionPattern":
        if mode_a == mode_b:
            raise ValueError("coincidence needs two distinct detector modes")
        return cls.from_counts({mode_a: 1, mode_b: 1})

    @property
    def n_photons(self) -> int:
        return sum(n for _, n in self.counts)

    @property
    def modes(self) -> tuple[ModeLabel, ...]:
        return tuple(lab for lab, _ in self.counts)

    def expanded_indices(self, registry: ModeRegistry) -> tuple[int, ...]:
        """Output mode index per photon, loss modes rejected."""
        out: list[int] = []
        for label, n in self.counts:
            if registry.is_loss(label):
                raise ValueError(f"pattern addresses loss mode {label}")
            out.extend([registry.index(label)] * n)
        return tuple(out)

    def __str__(self) -> str:
        return " ".join(f"{lab}={n}" for lab, n in self.counts)


def iter_patterns(n_photons: int, labels: Sequence[ModeLabel]) -> Iterator[DetectionPattern]:
    """All ways to distribute ``n_photons`` over the given detector modes."""
    for combo in itertools.combinations_with_replacement(range(len(labels)), n_photons):
        counts: dict[ModeLabel, int] = {}
        for i in combo:
            counts[labels[i]] = counts.get(labels[i], 0) + 1
        yield DetectionPattern.from_counts(counts)


# ---------------------------------------------------------------------------
# Probability evaluation
# ---------------------------------------------------------------------------


def _pattern_factorial(d: Sequence[int]) -> float:
    counts: dict[int, int] = {}
    for idx in d:
        counts[idx] = counts.get(idx, 0) + 1
    result = 1.0
    for c in counts.values():
        result *= math.factorial(c)
    return result


def _submatrix(u: np.ndarray, d: Sequence[int], config: Config) -> np.ndarray:
    rows = np.asarray(d, dtype=int)
    cols = np.asarray([m for m, _ in config], dtype=int)
    return u[np.ix_(rows, cols)]


def _gram_subblock_is(gram: np.ndarray, tags: Sequence[int], target: np.ndarray) -> bool:
    idx = np.asarray(sorted(set(tags)), dtype=int)
    block = gram[np.ix_(idx, idx)]
    return bool(np.max(np.abs(block - target[: len(idx), : len(idx)])) < 1e-14)


def _general_pair_sum(
    u: np.ndarray,
    d: Sequence[int],
    bra: Config,
    ket: Config,
    gram: np.ndarray,
) -> complex:
    n = len(d)
    perms = list(itertools.permutations(range(n)))
    ket_modes = [m for m, _ in ket]
    ket_tags = [t for _, t in ket]
    bra_modes = [m for m, _ in bra]
    bra_tags = [t for _, t in bra]
    total = 0.0 + 0.0j
    for sigma in perms:
        ket_amp = np.empty(n, dtype=complex)
        for i in range(n):
            ket_amp[i] = u[d[i], ket_modes[sigma[i]]]
        if not np.any(ket_amp):
            continue
        for tau in perms:
            term = 1.0 + 0.0j
            for i in range(n):
                term *= (
                    ket_amp[i]
                    * np.conj(u[d[i], bra_modes[tau[i]]])
                    * gram[bra_tags[tau[i]], ket_tags[sigma[i]]]
                )
                if term == 0.0:
                    break
            total += term
    return total


def evolve_probability(
    state: PhotonState,
    transfer: TransferMatrix,
    pattern: DetectionPattern,
    basis: WavepacketBasis,
) -> float:
    """Probability of a detection pattern after evolution through ``transfer``.

    Sums coherently over superposed configurations and incorporates partial
    distinguishability through the wavepacket Gram matrix.  Works with
    loss-extended matrices; the pattern itself may not address loss modes.
    """
    registry = transfer.registry
    if pattern.n_photons != state.n_photons:
        raise ValueError(
            f"pattern has {pattern.n_photons} photons, state has {state.n_photons}"
        )
    d = pattern.expanded_indices(registry)
    u = transfer.matrix
    gram = basis.gram
    tags = sorted({t for c in state.configs for _, t in c})
    if tags[-1] >= basis.size:
        raise ValueError(f"state uses wavepacket tag {tags[-1]} outside the basis")
    t_fact = _pattern_factorial(d)

    if _gram_subblock_is(gram, tags, np.ones((len(tags), len(tags)))):
        # fully indistinguishable: coherent permanent sum
        amp = 0.0 + 0.0j
        for config, a in zip(state.configs, state.amplitudes):
            amp += a * permanent(_submatrix(u, d, config))
        return float(abs(amp) ** 2 / t_fact)

    if len(state.configs) == 1 and len(set(state.configs[0])) == state.n_photons:
        config = state.configs[0]
        cfg_tags = [t for _, t in config]
        if _gram_subblock_is(gram, cfg_tags, np.eye(len(set(cfg_tags)))) and len(
            set(cfg_tags)
        ) == len(cfg_tags):
            # fully distinguishable: classical permanent of squared magnitudes
            m = _submatrix(u, d, config)
            p = permanent(np.abs(m) ** 2).real * abs(state.amplitudes[0]) ** 2
            return float(p / t_fact)

    if state.n_photons > _GENERAL_SUM_MAX_PHOTONS:
        raise ValueError(
            "partial-distinguishability evolution supports at most "
            f"{_GENERAL_SUM_MAX_PHOTONS} photons"
        )
    total = 0.0 + 0.0j
    for bra, a_bra in zip(state.configs, state.amplitudes):
        for ket, a_ket in zip(state.configs, state.amplitudes):
            total += np.conj(a_bra) * a_ket * _general_pair_sum(u, d, bra, ket, gram)
    prob = total.real / t_fact
    if abs(total.imag) > 1e-9:
        raise ArithmeticError(f"probability came out complex ({total:.3e})")
    return float(max(prob, 0.0))


def output_state(
    state: PhotonState,
    transfer: TransferMatrix,
    basis: WavepacketBasis | None = None,
) -> PhotonState:
    """Pure-state evolution; requires a loss-free (fully unitary) matrix.

    Use :func:`evolve_probability` for circuits with grating losses; pure
    evolution through a loss-extended matrix would leak norm into modes a
    state has no business occupying.
    """
    registry = transfer.registry
    if registry.loss_indices:
        raise ValueError("output_state needs a loss-free circuit")
    transfer.require_unitary()
    u = transfer.matrix
    out: dict[Config, complex] = {}
    for config, amp in zip(state.configs, state.amplitudes):
        terms: dict[Config, complex] = {(): amp}
        for mode, tag in config:
            column = u[:, mode]
            nonzero = np.nonzero(np.abs(column) > 1e-16)[0]
            new_terms: dict[Config, complex] = {}
            for key, coeff in terms.items():
                for j in nonzero:
                    new_key = _canonical(key + ((int(j), tag),))
                    new_terms[new_key] = new_terms.get(new_key, 0.0) + coeff * column[j]
            terms = new_terms
        for key, coeff in terms.items():
            out[key] = out.get(key, 0.0) + coeff
    peak = max(abs(v) for v in out.values())
    kept = {k: v for k, v in out.items() if abs(v) > 1e-14 * peak}
    return PhotonState(
        list(kept.keys()),
        list(kept.values()),
        basis=basis,
        require_normalized=basis is not None,
    )


def state_overlap(a: PhotonState, b: PhotonState, basis: WavepacketBasis) -> complex:
    """<a|b> including wavepacket overlaps."""
    if a.n_photons != b.n_photons:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for ca, aa in zip(a.configs, a.amplitudes):
        for cb, ab in zip(b.configs, b.amplitudes):
            total += np.conj(aa) * ab * _pairwise_overlap(ca, cb, basis.gram)
    return complex(total)


def states_equal_up_to_phase(
    a: PhotonState, b: PhotonState, basis: WavepacketBasis, tol: float = 1e-9
) -> bool:
    """Global-phase-insensitive comparison: max_phi |<a|e^{i phi} b>| vs 1."""
    return abs(abs(state_overlap(a, b, basis)) - 1.0) <= tol


# ---------------------------------------------------------------------------
# Canonical two-mode interferometer fringes
# ---------------------------------------------------------------------------


def _fringe_interferometer(phase_rad: float, convention: str) -> tuple[TransferMatrix, ModeLabel, ModeLabel]:
    registry = ModeRegistry()
    arm0 = ModeLabel("arm0", Polarization.TE, 0)
    arm1 = ModeLabel("arm1", Polarization.TE, 0)
    registry.register(arm0)
    registry.register(arm1)
    shift = phase_shifter_matrix(registry, "arm0", phase_rad)
    splitter = bs_matrix(registry, arm0, arm1, 0.5, convention)
    return TransferMatrix(registry, splitter.matrix @ shift.matrix), arm0, arm1


def noon_fringe_probability(phase_rad: float, convention: str = SYMMETRIC) -> float:
    """Coincidence after phase + 50/50 splitter with a two-photon NOON input.

    Equals (1 - cos 2 phi)/2 under the symmetric convention: the fringe
    oscillates at twice the single-photon rate.
    """
    transfer, arm0, arm1 = _fringe_interferometer(phase_rad, convention)
    state = PhotonState.noon(0, 1)
    pattern = DetectionPattern.coincidence(arm0, arm1)
    return evolve_probability(state, transfer, pattern, WavepacketBasis.indistinguishable(1))


def single_photon_fringe_probability(phase_rad: float, convention: str = SYMMETRIC) -> float:
    """Same interferometer, one photon split over both arms, detected on arm 0."""
    transfer, arm0, _ = _fringe_interferometer(phase_rad, convention)
    amp = 1.0 / math.sqrt(2.0)
    state = PhotonState.superposition([(((0, 0),), amp), (((1, 0),), amp)])
    pattern = DetectionPattern.from_counts({arm0: 1})
    return evolve_probability(state, transfer, pattern, WavepacketBasis.indistinguishable(1))
