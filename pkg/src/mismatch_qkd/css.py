"""Statevectors of CSS codewords and the z- and (x, v)-averaged mixtures.

Qubit 1 is the most significant bit of a computational-basis index, so
``|v_1 ... v_n>`` sits at index ``int(v_1 ... v_n, 2)``.  Everything here is
exhaustive and meant for n of at most a handful of qubits.
"""

from __future__ import annotations

import numpy as np

from . import gf2
from .gf2 import LinearCode
from .quantum import trace_distance

MAX_QUBITS_STATE = 12
MAX_QUBITS_DENSITY = 6
IDENTITY_TOL = 1e-10


def _index(bits) -> int:
    return gf2.bits_to_int(bits)


def _check_nested(c1: LinearCode, c2: LinearCode, v, limit: int) -> np.ndarray:
    if c1.n != c2.n:
        raise ValueError("codes have different lengths")
    if c1.n > limit:
        raise ValueError(f"n={c1.n} exceeds the {limit}-qubit limit")
    if any(not c1.contains(w) for w in c2.generator):
        raise ValueError("c2 is not contained in c1")
    if v is None:
        return None
    v = gf2.as_gf2(v)
    if v.shape != (c1.n,) or not c1.contains(v):
        raise ValueError("v is not a codeword of c1")
    return v


def _phase_matrix(words: np.ndarray, n: int) -> np.ndarray:
    """(-1)^{(z, w)} for every codeword w (rows) and every z (columns)."""
    dots = gf2.matmul(words, gf2.all_vectors(n).T)
    return 1.0 - 2.0 * dots


def parameterized_css_codeword(c1: LinearCode, c2: LinearCode, v, x, z) -> np.ndarray:
    """(1/sqrt|C2|) sum over w in C2 of (-1)^{(z,w)} |x + v + w>."""
    v = _check_nested(c1, c2, v, MAX_QUBITS_STATE)
    n = c1.n
    x = gf2.as_gf2(x)
    z = gf2.as_gf2(z)
    if x.shape != (n,) or z.shape != (n,):
        raise ValueError("x and z must have length n")
    words = gf2.codewords(c2)
    psi = np.zeros(1 << n, dtype=complex)
    amp = 1 / np.sqrt(len(words))
    for w in words:
        psi[_index(x ^ v ^ w)] += (-1) ** int(z @ w & 1) * amp
    return psi


def css_codeword(c1: LinearCode, c2: LinearCode, v) -> np.ndarray:
    zero = np.zeros(c1.n, dtype=np.uint8)
    return parameterized_css_codeword(c1, c2, v, zero, zero)


def coset_mixture(c2: LinearCode, shift) -> np.ndarray:
    """Uniform mixture of ``|shift + w><shift + w|`` over w in C2."""
    n = c2.n
    shift = gf2.as_gf2(shift)
    words = gf2.codewords(c2)
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    for w in words:
        i = _index(shift ^ w)
        rho[i, i] += 1 / len(words)
    return rho


def average_over_z(c1: LinearCode, c2: LinearCode, v, x) -> np.ndarray:
    """Density operator of the parameterized codeword with z uniformly random."""
    v = _check_nested(c1, c2, v, MAX_QUBITS_DENSITY)
    n = c1.n
    x = gf2.as_gf2(x)
    words = gf2.codewords(c2)
    # column z of psi is the codeword for parameter z
    psi = np.zeros((1 << n, 1 << n), dtype=complex)
    rows = [_index(x ^ v ^ w) for w in words]
    psi[rows, :] = _phase_matrix(words, n) / np.sqrt(len(words))
    return psi @ psi.conj().T / (1 << n)


def average_over_x_v(c1: LinearCode, c2: LinearCode) -> np.ndarray:
    """Mean of the z-averaged states over all shifts x and all v in C1."""
    _check_nested(c1, c2, None, MAX_QUBITS_DENSITY)
    n = c1.n
    total = np.zeros((1 << n, 1 << n), dtype=complex)
    vs = gf2.codewords(c1)
    xs = gf2.all_vectors(n)
    for x in xs:
        for v in vs:
            total += average_over_z(c1, c2, v, x)
    return total / (len(xs) * len(vs))


def verify_identities(c1: LinearCode, c2: LinearCode) -> dict:
    """Exhaustive check of both mixture identities for one nested code pair.

    Returns the worst trace distance between each z-averaged state and the
    matching coset mixture over every (x, v), and the distance of the full
    average from the maximally mixed state.
    """
    _check_nested(c1, c2, None, MAX_QUBITS_DENSITY)
    n = c1.n
    worst = 0.0
    pairs = 0
    total = np.zeros((1 << n, 1 << n), dtype=complex)
    vs = gf2.codewords(c1)
    for x in gf2.all_vectors(n):
        for v in vs:
            rho = average_over_z(c1, c2, v, x)
            worst = max(worst, trace_distance(rho, coset_mixture(c2, x ^ v)))
            total += rho
            pairs += 1
    total /= pairs
    full = trace_distance(total, np.eye(1 << n) / (1 << n))
    return {
        "n": n,
        "dim_c1": c1.k,
        "dim_c2": c2.k,
        "pairs_checked": pairs,
        "max_trace_distance_z_average": worst,
        "trace_distance_full_average": full,
        "passed": worst <= IDENTITY_TOL and full <= IDENTITY_TOL,
    }
