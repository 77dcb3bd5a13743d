"""Dense linear algebra over GF(2).

Vectors and matrices are numpy ``uint8`` arrays holding 0/1.  Row reduction
works on bit-packed rows so that codes with a thousand columns reduce in
milliseconds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_SYNDROME_BITS = 24
MAX_TABLE_CANDIDATES = 1 << 24


class DecoderCapacityError(ValueError):
    """The coset-leader table for a code would exceed the configured size."""


class NotInCodeError(ValueError):
    """A vector was expected to lie in a code's row space but does not."""


def as_gf2(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int64).astype(np.uint8) & 1


def weight(v) -> int:
    return int(np.count_nonzero(v))


def matmul(a, b) -> np.ndarray:
    """Matrix product mod 2.

    Goes through float64 BLAS; the integer partial sums stay far below 2**53.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return (np.rint(a @ b).astype(np.int64) & 1).astype(np.uint8)


def matvec(m, v) -> np.ndarray:
    m = as_gf2(m)
    v = as_gf2(v)
    if m.ndim != 2 or v.shape != (m.shape[1],):
        raise ValueError(f"shape mismatch: matrix {m.shape}, vector {v.shape}")
    return matmul(m, v)


def bits_to_int(v) -> int:
    """First bit is the most significant."""
    out = 0
    for b in np.asarray(v).tolist():
        out = (out << 1) | (int(b) & 1)
    return out


def int_to_bits(x: int, n: int) -> np.ndarray:
    return np.array([(x >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.uint8)


def row_reduce(m, pivot_limit: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form over GF(2).

    Args:
        m: binary matrix, shape (r, c).
        pivot_limit: only columns ``< pivot_limit`` may hold pivots.  Row
            operations still act on the full width, which is how augmented
            systems are reduced.

    Returns:
        ``(R, pivots)`` where ``R`` is the reduced matrix and ``pivots`` the
        pivot column of each nonzero leading row.
    """
    m = as_gf2(m)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    rows, cols = m.shape
    limit = cols if pivot_limit is None else min(pivot_limit, cols)
    if rows == 0 or cols == 0:
        return m.copy(), []
    packed = np.packbits(np.ascontiguousarray(m), axis=1)
    pivots: list[int] = []
    r = 0
    for c in range(limit):
        if r == rows:
            break
        byte = c >> 3
        mask = np.uint8(0x80 >> (c & 7))
        nz = np.flatnonzero(packed[:, byte] & mask)
        hits = nz[nz >= r]
        if hits.size == 0:
            continue
        p = int(hits[0])
        if p != r:
            # row r lacked this bit, so after the swap only nz minus p need clearing
            packed[[r, p]] = packed[[p, r]]
        others = nz[nz != p]
        if others.size:
            packed[others] ^= packed[r]
        pivots.append(c)
        r += 1
    return np.unpackbits(packed, axis=1, count=cols), pivots


def rank(m) -> int:
    return len(row_reduce(m)[1])


def solve(m, y) -> np.ndarray | None:
    """Return some ``x`` with ``m @ x == y`` over GF(2), or None if inconsistent."""
    m = as_gf2(m)
    y = as_gf2(y)
    if m.ndim != 2 or y.shape != (m.shape[0],):
        raise ValueError(f"shape mismatch: matrix {m.shape}, rhs {y.shape}")
    rows, cols = m.shape
    aug = np.concatenate([m, y[:, None]], axis=1)
    red, pivots = row_reduce(aug, pivot_limit=cols)
    if red[len(pivots):, cols].any():
        return None
    x = np.zeros(cols, dtype=np.uint8)
    x[pivots] = red[: len(pivots), cols]
    return x


def nullspace(m) -> np.ndarray:
    """Basis (as rows) of ``{x : m @ x == 0}``."""
    m = as_gf2(m)
    cols = m.shape[1]
    red, pivots = row_reduce(m)
    pivot_set = set(pivots)
    free = [c for c in range(cols) if c not in pivot_set]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    if free:
        basis[np.arange(len(free)), free] = 1
        if pivots:
            basis[:, pivots] = red[: len(pivots)][:, free].T
    return basis


def independent_rows(m) -> list[int]:
    """Indices of the rows kept by a greedy pass in row order.

    A row is kept when it is not in the span of the rows kept before it.
    """
    m = as_gf2(m)
    if m.shape[0] == 0:
        return []
    _, pivots = row_reduce(m.T)
    return pivots


def in_rowspace(m, v) -> bool:
    m = as_gf2(m)
    v = as_gf2(v)
    if m.shape[0] == 0:
        return not v.any()
    return solve(m.T, v) is not None


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Binary linear code with generator rows and parity-check rows.

    ``base``/``tiles`` record a block-diagonal repetition of a smaller code,
    which lets the decoder work block by block.
    """

    generator: np.ndarray
    parity_check: np.ndarray
    base: LinearCode | None = None
    tiles: int = 1

    def __post_init__(self):
        g = as_gf2(self.generator)
        h = as_gf2(self.parity_check)
        object.__setattr__(self, "generator", g)
        object.__setattr__(self, "parity_check", h)
        if g.ndim != 2 or h.ndim != 2 or g.shape[1] != h.shape[1]:
            raise ValueError(f"generator {g.shape} and parity check {h.shape} disagree")
        if g.shape[0] + h.shape[0] != g.shape[1]:
            raise ValueError("need k generator rows and n - k parity-check rows")
        if g.shape[0] and h.shape[0] and matmul(h, g.T).any():
            raise ValueError("generator rows violate the parity checks")
        g.flags.writeable = False
        h.flags.writeable = False

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def block_length(self) -> int:
        return self.base.n if self.base is not None else self.n

    @classmethod
    def from_generator(cls, g) -> LinearCode:
        g = as_gf2(g)
        if rank(g) != g.shape[0]:
            raise ValueError("generator rows are linearly dependent")
        return cls(g, nullspace(g))

    @classmethod
    def from_parity_check(cls, h) -> LinearCode:
        h = as_gf2(h)
        if rank(h) != h.shape[0]:
            raise ValueError("parity-check rows are linearly dependent")
        return cls(nullspace(h), h)

    def syndrome(self, v) -> np.ndarray:
        return matvec(self.parity_check, v)

    def encode(self, msg) -> np.ndarray:
        msg = as_gf2(msg)
        if msg.shape != (self.k,):
            raise ValueError(f"message length {msg.shape} != k={self.k}")
        return matmul(msg, self.generator)

    def contains(self, v) -> bool:
        return not self.syndrome(v).any()

    def decode(self, syndrome, max_syndrome_bits: int = MAX_SYNDROME_BITS) -> np.ndarray:
        """Coset leader of ``syndrome``, decoded per block for tiled codes."""
        syndrome = as_gf2(syndrome)
        if syndrome.shape != (self.n - self.k,):
            raise ValueError(f"syndrome length {syndrome.size} != {self.n - self.k}")
        if self.base is None:
            return coset_leader_decode(self.parity_check, syndrome, max_syndrome_bits)
        b = self.base
        table = _leader_table(b.parity_check.tobytes(), b.parity_check.shape, max_syndrome_bits)
        m = b.n - b.k
        blocks = syndrome.reshape(self.tiles, m).astype(np.int64)
        idx = blocks @ (1 << np.arange(m - 1, -1, -1, dtype=np.int64))
        return _unpack_ints(table[idx], b.n).reshape(-1)


def hamming_7_4() -> LinearCode:
    # column j is the binary expansion of j + 1
    h = np.array([[(j + 1) >> s & 1 for j in range(7)] for s in (2, 1, 0)], dtype=np.uint8)
    return LinearCode.from_parity_check(h)


def repetition_code(n: int) -> LinearCode:
    if n < 1:
        raise ValueError("repetition code needs n >= 1")
    return LinearCode.from_generator(np.ones((1, n), dtype=np.uint8))


def random_code(n: int, k: int, rng: np.random.Generator) -> LinearCode:
    """Random [n, k] code with a systematic parity check ``[A | I]``."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    a = rng.integers(0, 2, size=(n - k, k), dtype=np.uint8)
    h = np.concatenate([a, np.eye(n - k, dtype=np.uint8)], axis=1)
    return LinearCode.from_parity_check(h)


def random_full_rank(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    if rows > cols:
        raise ValueError(f"cannot have {rows} independent rows of length {cols}")
    while True:
        m = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
        if rank(m) == rows:
            return m


def tile(code: LinearCode, count: int) -> LinearCode:
    """Block-diagonal direct sum of ``count`` copies of ``code``."""
    if count < 1:
        raise ValueError("need at least one tile")
    if code.base is not None:
        code, count = code.base, count * code.tiles
    g = np.kron(np.eye(count, dtype=np.uint8), code.generator)
    h = np.kron(np.eye(count, dtype=np.uint8), code.parity_check)
    return LinearCode(g, h, base=code, tiles=count)


def zero_code(n: int) -> LinearCode:
    return LinearCode(np.zeros((0, n), dtype=np.uint8), np.eye(n, dtype=np.uint8))


def codewords(code: LinearCode) -> np.ndarray:
    """All 2**k codewords, ordered by message integer (first message bit high)."""
    k = code.k
    if k > 20:
        raise ValueError(f"refusing to enumerate 2**{k} codewords")
    return matmul(all_vectors(k), code.generator)


def all_vectors(n: int) -> np.ndarray:
    """Every length-n bit vector as a row, in increasing integer order."""
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((np.arange(1 << n, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8)


def sample_subcode(c1: LinearCode, dim2: int, rng: np.random.Generator) -> LinearCode:
    """Random ``dim2``-dimensional subcode of ``c1``.

    Draws random combinations of the generator rows of ``c1`` until they are
    independent.
    """
    if not 0 <= dim2 <= c1.k:
        raise ValueError(f"subcode dimension {dim2} outside [0, {c1.k}]")
    if dim2 == 0:
        return zero_code(c1.n)
    mix = random_full_rank(dim2, c1.k, rng)
    return LinearCode.from_generator(matmul(mix, c1.generator))


class CosetLabeler:
    """Labels the cosets of ``c2`` inside ``c1``.

    The basis of ``c2`` is extended greedily by the generator rows of ``c1`` in
    row order; a codeword's label is its coordinates on the added rows.  Both
    inputs are public, so any two parties build the same labeler.
    """

    def __init__(self, c1: LinearCode, c2: LinearCode):
        if c1.n != c2.n:
            raise ValueError("codes have different lengths")
        stacked = np.concatenate([c2.generator, c1.generator], axis=0)
        keep = independent_rows(stacked)
        if keep[: c2.k] != list(range(c2.k)) or len(keep) != c1.k:
            raise ValueError("c2 is not a subcode of c1")
        self.c1, self.c2 = c1, c2
        self.basis = stacked[keep]
        n, k = c1.n, c1.k
        aug = np.concatenate([self.basis.T, np.eye(n, dtype=np.uint8)], axis=1)
        red, pivots = row_reduce(aug, pivot_limit=k)
        assert len(pivots) == k
        transform = red[:, k:]
        self._coords = transform[:k]
        self._residual = transform[k:]

    @property
    def label_length(self) -> int:
        return self.c1.k - self.c2.k

    def coordinates(self, a) -> np.ndarray:
        a = as_gf2(a)
        if a.shape != (self.c1.n,):
            raise ValueError(f"vector length {a.shape} != n={self.c1.n}")
        if self._residual.shape[0] and matmul(self._residual, a).any():
            raise NotInCodeError("vector is not a codeword of c1")
        return matmul(self._coords, a)

    def label(self, a) -> np.ndarray:
        return self.coordinates(a)[self.c2.k :]


def coset_label(a, c1: LinearCode, c2: LinearCode) -> np.ndarray:
    return CosetLabeler(c1, c2).label(a)


def _unpack_ints(values: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    return ((values[..., None] >> shifts) & np.uint64(1)).astype(np.uint8)


def _combinations(n: int, w: int) -> np.ndarray:
    count = math.comb(n, w)
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), w)),
        dtype=np.int64,
        count=count * w,
    )
    return flat.reshape(count, w)


@lru_cache(maxsize=64)
def _leader_table(h_bytes: bytes, shape: tuple[int, int], max_syndrome_bits: int) -> np.ndarray:
    m, n = shape
    if m > max_syndrome_bits:
        raise DecoderCapacityError(
            f"coset-leader table needs 2**{m} entries; limit is 2**{max_syndrome_bits}"
        )
    if n > 64:
        raise DecoderCapacityError(f"block length {n} exceeds 64-bit leader storage")
    h = np.frombuffer(h_bytes, dtype=np.uint8).reshape(shape)
    col_syn = h.astype(np.int64).T @ (1 << np.arange(m - 1, -1, -1, dtype=np.int64))
    col_err = np.array([1 << (n - 1 - j) for j in range(n)], dtype=np.uint64)

    size = 1 << m
    table = np.zeros(size, dtype=np.uint64)
    seen = np.zeros(size, dtype=bool)
    seen[0] = True
    remaining = size - 1
    for w in range(1, n + 1):
        if remaining == 0:
            break
        if math.comb(n, w) > MAX_TABLE_CANDIDATES:
            raise DecoderCapacityError(f"enumerating weight-{w} errors of length {n} is too large")
        pos = _combinations(n, w)
        syn = np.bitwise_xor.reduce(col_syn[pos], axis=1)
        err = np.bitwise_or.reduce(col_err[pos], axis=1)
        # ties among equal-weight errors go to the smallest bit string
        order = np.argsort(err, kind="stable")
        syn, err = syn[order], err[order]
        uniq, first = np.unique(syn, return_index=True)
        fresh = ~seen[uniq]
        table[uniq[fresh]] = err[first[fresh]]
        seen[uniq[fresh]] = True
        remaining -= int(fresh.sum())
    if remaining:
        raise ValueError("parity-check matrix does not have full row rank")
    table.flags.writeable = False
    return table


def coset_leader_decode(h, syndrome, max_syndrome_bits: int = MAX_SYNDROME_BITS) -> np.ndarray:
    """Minimum-weight ``f`` with ``h @ f == syndrome``.

    Among equal-weight candidates the lexicographically smallest bit string
    wins.  Tables are cached per parity-check matrix.

    Raises:
        DecoderCapacityError: ``h`` has more than ``max_syndrome_bits`` rows.
    """
    h = np.ascontiguousarray(as_gf2(h))
    syndrome = as_gf2(syndrome)
    if syndrome.shape != (h.shape[0],):
        raise ValueError(f"syndrome length {syndrome.size} != {h.shape[0]} rows")
    table = _leader_table(h.tobytes(), h.shape, max_syndrome_bits)
    return _unpack_ints(table[bits_to_int(syndrome)], h.shape[1])
