"""Independent brute-force references for the fast production code paths.

The probability oracle expands the creation-operator polynomial over an
explicit (mode x internal-state) orthonormal basis and sums outcome
probabilities directly; it shares no code with the permanent-based
evaluation it checks.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict

import numpy as np


def permanent_naive(matrix) -> complex:
    a = np.asarray(matrix, dtype=complex)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(n)):
        term = 1.0 + 0.0j
        for i, j in enumerate(perm):
            term *= a[i, j]
        total += term
    return total


def wavepacket_vectors(gram) -> np.ndarray:
    """Explicit vectors v_i with <v_i|v_j> equal to the Gram entries."""
    g = np.asarray(gram, dtype=complex)
    w, v = np.linalg.eigh(g)
    w = np.clip(w.real, 0.0, None)
    return np.conj(v) * np.sqrt(w)


def evolve_probability_bruteforce(configs, amplitudes, u, pattern_counts, gram) -> float:
    """Pattern probability by explicit tensor expansion.

    configs: iterable of ((mode, tag), ...) photon configurations
    amplitudes: raw creation-operator coefficients per configuration
    pattern_counts: {mode index: photon count}
    """
    u = np.asarray(u, dtype=complex)
    vectors = wavepacket_vectors(gram)
    n_internal = vectors.shape[1]
    n_modes = u.shape[0]

    poly: dict[tuple, complex] = defaultdict(complex)
    for config, amp in zip(configs, amplitudes):
        terms: dict[tuple, complex] = {(): complex(amp)}
        for mode, tag in config:
            new_terms: dict[tuple, complex] = defaultdict(complex)
            for key, coeff in terms.items():
                for out_mode in range(n_modes):
                    hop = u[out_mode, mode]
                    if hop == 0.0:
                        continue
                    for xi in range(n_internal):
                        weight = vectors[tag, xi]
                        if weight == 0.0:
                            continue
                        new_key = tuple(sorted(key + ((out_mode, xi),)))
                        new_terms[new_key] += coeff * hop * weight
            terms = new_terms
        for key, coeff in terms.items():
            poly[key] += coeff

    target = {m: c for m, c in pattern_counts.items() if c}
    prob = 0.0
    for key, coeff in poly.items():
        mode_counts = Counter(m for m, _ in key)
        if dict(mode_counts) != target:
            continue
        occupancy = 1.0
        for count in Counter(key).values():
            occupancy *= math.factorial(count)
        prob += abs(coeff) ** 2 * occupancy
    return prob


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_gram(n: int, rng: np.random.Generator) -> np.ndarray:
    """Gram matrix of n random normalized complex vectors."""
    dim = max(n, 2)
    v = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v @ v.conj().T
