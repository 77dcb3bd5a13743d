"""End-to-end BB84 session that also keys off mismatched-basis outcomes.

Alice sends uniformly random BB84 states, Bob measures in a uniformly random
basis, and the announced bases split the records into four buckets.  Each
processed bucket is estimated on a random half, reconciled with a syndrome
and a coset-leader decoder, and compressed to a coset label of a random
subcode.

Bit conventions: Alice's bit is 0 for |0> and |+>, Bob's bit is 0 for
outcome |0> in the Z basis and |+> in the X basis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, NamedTuple

import numpy as np

from . import gf2
from .bounds import binary_entropy, key_rate_bound
from .gf2 import CosetLabeler, LinearCode
from .quantum import Basis, Channel, basis_state, outcome_one_probability

BASES = (Basis.Z, Basis.X)


class AbortReason(str, enum.Enum):
    RATE_NONPOSITIVE = "RateNonpositive"
    ESTIMATE_AT_HALF = "EstimateAtHalf"
    DECODE_FAILURE = "DecodeFailure"
    INSUFFICIENT_BITS = "InsufficientBits"


class ProtocolAbort(Exception):
    def __init__(self, reason: AbortReason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason


class ConfigError(ValueError):
    pass


class TransmissionRecord(NamedTuple):
    index: int
    alice_basis: Basis
    alice_bit: int
    bob_basis: Basis
    bob_outcome: int


@dataclass(frozen=True)
class Transmissions:
    """Columnar transmission log; basis columns hold 0 for Z and 1 for X."""

    alice_basis: np.ndarray
    alice_bit: np.ndarray
    bob_basis: np.ndarray
    bob_outcome: np.ndarray

    def __len__(self) -> int:
        return len(self.alice_bit)

    def __getitem__(self, i: int) -> TransmissionRecord:
        return TransmissionRecord(
            int(i),
            BASES[self.alice_basis[i]],
            int(self.alice_bit[i]),
            BASES[self.bob_basis[i]],
            int(self.bob_outcome[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_records(cls, records: Iterable[TransmissionRecord]) -> Transmissions:
        records = list(records)

        def col(values):
            return np.array(values, dtype=np.uint8).reshape(-1)

        return cls(
            col([BASES.index(Basis(r.alice_basis)) for r in records]),
            col([r.alice_bit for r in records]),
            col([BASES.index(Basis(r.bob_basis)) for r in records]),
            col([r.bob_outcome for r in records]),
        )


def outcome_table(ch: Channel) -> np.ndarray:
    """P(Bob reads 1), indexed by [alice_basis, alice_bit, bob_basis]."""
    table = np.empty((2, 2, 2))
    for i, sent in enumerate(BASES):
        for bit in (0, 1):
            for j, measured in enumerate(BASES):
                table[i, bit, j] = outcome_one_probability(ch, basis_state(sent, bit), measured)
    return table


def transmit(ch: Channel, count: int, rng: np.random.Generator) -> Transmissions:
    """Send ``count`` random BB84 states through ``ch`` and measure them.

    Each outcome uses one uniform variate against the exact Born probability,
    the same rule as :func:`quantum.sample_measurement`.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    table = outcome_table(ch)
    alice_basis = rng.integers(0, 2, size=count, dtype=np.uint8)
    alice_bit = rng.integers(0, 2, size=count, dtype=np.uint8)
    bob_basis = rng.integers(0, 2, size=count, dtype=np.uint8)
    u = rng.random(count)
    outcome = (u < table[alice_basis, alice_bit, bob_basis]).astype(np.uint8)
    return Transmissions(alice_basis, alice_bit, bob_basis, outcome)


@dataclass(frozen=True)
class Bucket:
    alice: np.ndarray
    bob: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.alice)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.alice.tolist(), self.bob.tolist()))

    @classmethod
    def from_pairs(cls, pairs) -> Bucket:
        arr = np.asarray(list(pairs), dtype=np.uint8).reshape(-1, 2)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), np.arange(len(arr)))


@dataclass(frozen=True)
class SiftedBatches:
    matched_z: Bucket
    matched_x: Bucket
    mismatched_ab: Bucket
    mismatched_alphabeta: Bucket

    def sizes(self) -> dict[str, int]:
        return {f.name: len(getattr(self, f.name)) for f in fields(self)}


def sift(records) -> SiftedBatches:
    """Partition by (sent basis, measured basis).

    ``mismatched_ab`` holds Z-sent/X-measured pairs, ``mismatched_alphabeta``
    X-sent/Z-measured pairs.
    """
    if not isinstance(records, Transmissions):
        records = Transmissions.from_records(records)

    def take(sent: int, measured: int) -> Bucket:
        idx = np.flatnonzero((records.alice_basis == sent) & (records.bob_basis == measured))
        return Bucket(records.alice_bit[idx], records.bob_outcome[idx], idx)

    return SiftedBatches(
        matched_z=take(0, 0),
        matched_x=take(1, 1),
        mismatched_ab=take(0, 1),
        mismatched_alphabeta=take(1, 0),
    )


@dataclass(frozen=True)
class EstimationResult:
    q_hat: float
    sample_indices: np.ndarray
    remaining_alice: np.ndarray
    remaining_bob: np.ndarray
    sample_alice: np.ndarray
    sample_bob: np.ndarray

    @property
    def sample_size(self) -> int:
        return len(self.sample_indices)


def estimate(bucket, sample_fraction: float, rng: np.random.Generator) -> EstimationResult:
    """Disclose a uniformly random sample and measure its disagreement rate.

    The sample has ``round(sample_fraction * len(bucket))`` positions, kept
    between 1 and ``len(bucket) - 1``.

    Raises:
        ProtocolAbort: with ``INSUFFICIENT_BITS`` for buckets shorter than 2.
    """
    if not isinstance(bucket, Bucket):
        bucket = Bucket.from_pairs(bucket)
    if not 0.0 < sample_fraction < 1.0:
        raise ValueError(f"sample_fraction {sample_fraction} outside (0, 1)")
    size = len(bucket)
    if size < 2:
        raise ProtocolAbort(AbortReason.INSUFFICIENT_BITS, f"bucket holds {size} pairs")
    k = min(size - 1, max(1, math.floor(sample_fraction * size + 0.5)))
    sample = np.sort(rng.choice(size, size=k, replace=False))
    keep = np.ones(size, dtype=bool)
    keep[sample] = False
    sa, sb = bucket.alice[sample], bucket.bob[sample]
    return EstimationResult(
        q_hat=float(np.count_nonzero(sa != sb)) / k,
        sample_indices=sample,
        remaining_alice=bucket.alice[keep],
        remaining_bob=bucket.bob[keep],
        sample_alice=sa,
        sample_bob=sb,
    )


@dataclass(frozen=True)
class Reconciliation:
    syndrome: np.ndarray
    corrected_bob: np.ndarray
    decode_success: bool
    flip_applied: bool
    error_estimate: np.ndarray
    blocks_total: int
    blocks_decoded: int


def reconcile(alice, bob, q_hat: float, code: LinearCode) -> Reconciliation:
    """Syndrome reconciliation of Bob's bits towards Alice's.

    ``decode_success`` compares the result with Alice's bits directly; the
    simulated parties never see that comparison.  Block counts refer to the
    tiles of a block-diagonal code (one block otherwise).
    """
    a = gf2.as_gf2(alice)
    b = gf2.as_gf2(bob)
    if a.shape != (code.n,) or b.shape != (code.n,):
        raise ValueError(f"vectors of length {a.size}/{b.size} for a code of length {code.n}")
    flip = q_hat > 0.5
    if flip:
        b = b ^ 1
    syndrome = code.syndrome(a)
    f = code.decode(code.syndrome(b) ^ syndrome)
    corrected = b ^ f
    per_block = (corrected == a).reshape(-1, code.block_length).all(axis=1)
    return Reconciliation(
        syndrome=syndrome,
        corrected_bob=corrected,
        decode_success=bool(per_block.all()),
        flip_applied=flip,
        error_estimate=f,
        blocks_total=len(per_block),
        blocks_decoded=int(per_block.sum()),
    )


def subcode_dimension(c1: LinearCode, q_hat_other: float) -> int:
    return min(c1.k, math.ceil(c1.n * binary_entropy(q_hat_other)))


def _amplifier(c1: LinearCode, q_hat_other: float, rng) -> CosetLabeler:
    dim2 = subcode_dimension(c1, q_hat_other)
    if c1.k - dim2 <= 0:
        raise ProtocolAbort(AbortReason.RATE_NONPOSITIVE, f"dim C1 = {c1.k}, dim C2 = {dim2}")
    return CosetLabeler(c1, gf2.sample_subcode(c1, dim2, rng))


def privacy_amplify(a, c1: LinearCode, q_hat_other: float, rng: np.random.Generator):
    """Compress a codeword of ``c1`` to its coset label modulo a random subcode.

    Returns ``(c2, key)``.  ``a`` must already be shifted into ``c1``.

    Raises:
        ProtocolAbort: ``RATE_NONPOSITIVE`` when no key bits would remain.
    """
    labeler = _amplifier(c1, q_hat_other, rng)
    return labeler.c2, labeler.label(a)


@dataclass(frozen=True)
class CodeSpec:
    """How Alice picks C1 once the remaining bits are known.

    ``kind`` is ``hamming`` (tiled [7,4]), ``random`` (tiled random block code)
    or ``repetition``.  A random code without an explicit ``rate`` gets
    ``1 - h(q) - margin`` for the bucket's estimated error rate ``q``.
    """

    kind: str = "random"
    block_length: int | None = None
    rate: float | None = None
    margin: float = 0.05
    max_length: int | None = None

    def __post_init__(self):
        if self.kind not in ("hamming", "random", "repetition"):
            raise ConfigError(f"code.kind: unknown code kind {self.kind!r}")
        if self.kind == "hamming" and self.block_length not in (None, 7):
            raise ConfigError("code.block_length: Hamming blocks have length 7")
        if self.block_length is not None and self.block_length < 1:
            raise ConfigError("code.block_length: must be positive")
        if self.rate is not None and not 0.0 < self.rate <= 1.0:
            raise ConfigError("code.rate: must lie in (0, 1]")
        if self.max_length is not None and self.max_length < 1:
            raise ConfigError("code.max_length: must be positive")

    @property
    def block(self) -> int:
        if self.block_length is not None:
            return self.block_length
        return {"hamming": 7, "random": 32, "repetition": 3}[self.kind]


def build_code(spec: CodeSpec, available: int, q_hat: float, rng: np.random.Generator) -> LinearCode:
    nb = spec.block
    budget = available if spec.max_length is None else min(available, spec.max_length)
    tiles = budget // nb
    if tiles < 1:
        raise ProtocolAbort(AbortReason.INSUFFICIENT_BITS, f"{available} bits, block length {nb}")
    if spec.kind == "hamming":
        base = gf2.hamming_7_4()
    elif spec.kind == "repetition":
        base = gf2.repetition_code(nb)
    else:
        q = min(q_hat, 1.0 - q_hat)
        rate = spec.rate if spec.rate is not None else 1.0 - binary_entropy(q) - spec.margin
        k = min(nb, math.floor(rate * nb))
        if k < 1:
            raise ProtocolAbort(AbortReason.RATE_NONPOSITIVE, f"code rate {rate:.4f}")
        base = gf2.random_code(nb, k, rng)
    return gf2.tile(base, tiles)


@dataclass(frozen=True)
class SessionConfig:
    count: int = 4096
    sample_fraction: float = 0.5
    guard_band: float | None = None
    code: CodeSpec = field(default_factory=CodeSpec)
    seed: int = 0
    process_matched: bool = False
    process_alphabeta: bool = False

    def __post_init__(self):
        if not isinstance(self.count, int) or self.count < 1:
            raise ConfigError("count: must be a positive integer")
        if not 0.0 < self.sample_fraction < 1.0:
            raise ConfigError("sample_fraction: must lie in (0, 1)")
        if self.guard_band is not None and not 0.0 <= self.guard_band < 0.5:
            raise ConfigError("guard_band: must lie in [0, 0.5)")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed: must be a nonnegative integer")

    @classmethod
    def from_dict(cls, d: dict) -> SessionConfig:
        d = dict(d)
        d.pop("channel", None)
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ConfigError(f"{key}: unknown configuration field")
        code = d.pop("code", {}) or {}
        if not isinstance(code, dict):
            raise ConfigError("code: expected an object")
        code_known = {f.name for f in fields(CodeSpec)}
        for key in code:
            if key not in code_known:
                raise ConfigError(f"code.{key}: unknown code field")
        try:
            return cls(code=CodeSpec(**code), **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "sample_fraction": self.sample_fraction,
            "guard_band": self.guard_band,
            "code": {f.name: getattr(self.code, f.name) for f in fields(CodeSpec)},
            "seed": self.seed,
            "process_matched": self.process_matched,
            "process_alphabeta": self.process_alphabeta,
        }


@dataclass(frozen=True)
class BranchResult:
    """Outcome of reconciling and compressing one bucket."""

    name: str
    q_hat_reconcile: float | None = None
    q_hat_amplify: float | None = None
    flip_applied: bool = False
    syndrome: np.ndarray | None = None
    decode_success: bool = False
    alice_key: np.ndarray | None = None
    bob_key: np.ndarray | None = None
    abort_reason: AbortReason | None = None
    code_length: int = 0
    code_dim: int = 0
    subcode_dim: int = 0
    blocks_total: int = 0
    blocks_decoded: int = 0

    @property
    def key_length(self) -> int:
        return 0 if self.alice_key is None else len(self.alice_key)


@dataclass(frozen=True)
class SessionResult:
    q_hat_x: float | None
    q_hat_z: float | None
    bucket_sizes: dict[str, int]
    primary: BranchResult
    branches: dict[str, BranchResult] = field(default_factory=dict)

    flip_applied = property(lambda self: self.primary.flip_applied)
    syndrome = property(lambda self: self.primary.syndrome)
    decode_success = property(lambda self: self.primary.decode_success)
    alice_key = property(lambda self: self.primary.alice_key)
    bob_key = property(lambda self: self.primary.bob_key)
    abort_reason = property(lambda self: self.primary.abort_reason)
    key_length = property(lambda self: self.primary.key_length)


def _guard(est: EstimationResult, band: float | None) -> float:
    return band if band is not None else 1.0 / math.sqrt(est.sample_size)


def process_bucket(
    name: str,
    rec: EstimationResult,
    amp: EstimationResult,
    config: SessionConfig,
    rng: np.random.Generator,
) -> BranchResult:
    """Reconcile ``rec``'s remaining bits; size privacy amplification by ``amp``."""
    q1, q2 = rec.q_hat, amp.q_hat
    out = BranchResult(name, q_hat_reconcile=q1, q_hat_amplify=q2)
    for est in (rec, amp):
        if abs(est.q_hat - 0.5) <= _guard(est, config.guard_band):
            return replace(out, abort_reason=AbortReason.ESTIMATE_AT_HALF)
    if key_rate_bound(q1, q2) <= 0:
        return replace(out, abort_reason=AbortReason.RATE_NONPOSITIVE)
    try:
        code = build_code(config.code, len(rec.remaining_alice), q1, rng)
        a = rec.remaining_alice[: code.n]
        b = rec.remaining_bob[: code.n]
        r = reconcile(a, b, q1, code)
        out = replace(
            out,
            flip_applied=r.flip_applied,
            syndrome=r.syndrome,
            decode_success=r.decode_success,
            code_length=code.n,
            code_dim=code.k,
            blocks_total=r.blocks_total,
            blocks_decoded=r.blocks_decoded,
        )
        # public coset representative of the announced syndrome
        offset = code.decode(r.syndrome)
        labeler = _amplifier(code, q2, rng)
    except ProtocolAbort as exc:
        return replace(out, abort_reason=exc.reason)
    out = replace(out, subcode_dim=labeler.c2.k)
    if not r.decode_success:
        return replace(out, abort_reason=AbortReason.DECODE_FAILURE)
    return replace(
        out,
        alice_key=labeler.label(a ^ offset),
        bob_key=labeler.label(r.corrected_bob ^ offset),
    )


def _try_estimate(bucket: Bucket, fraction: float, rng) -> EstimationResult | None:
    try:
        return estimate(bucket, fraction, rng)
    except ProtocolAbort:
        return None


def _branch(name, rec, amp, config, rng) -> BranchResult:
    if rec is None or amp is None:
        q1 = rec.q_hat if rec is not None else None
        q2 = amp.q_hat if amp is not None else None
        return BranchResult(name, q1, q2, abort_reason=AbortReason.INSUFFICIENT_BITS)
    return process_bucket(name, rec, amp, config, rng)


def run_session(
    ch: Channel, config: SessionConfig, rng: np.random.Generator | None = None
) -> SessionResult:
    """Run one full session.

    The primary result keys off Z-sent/X-measured bits, reconciled with the
    estimate from that bucket and compressed by the X-sent/Z-measured
    estimate.  Optional branches reuse the same steps for the other
    mismatched bucket (roles of the two estimates swapped) and for both
    matched buckets.  Every stage draws from its own child stream, so
    enabling a branch never changes the others.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    streams = [np.random.default_rng(s) for s in rng.integers(0, 2**63, size=9)]
    batches = sift(transmit(ch, config.count, streams[0]))
    f = config.sample_fraction
    est_x = _try_estimate(batches.mismatched_ab, f, streams[1])
    est_z = _try_estimate(batches.mismatched_alphabeta, f, streams[2])
    primary = _branch("ab", est_x, est_z, config, streams[5])
    branches = {}
    if config.process_alphabeta:
        branches["alphabeta"] = _branch("alphabeta", est_z, est_x, config, streams[6])
    if config.process_matched:
        est_pz = _try_estimate(batches.matched_z, f, streams[3])
        est_px = _try_estimate(batches.matched_x, f, streams[4])
        branches["matched_z"] = _branch("matched_z", est_pz, est_px, config, streams[7])
        branches["matched_x"] = _branch("matched_x", est_px, est_pz, config, streams[8])
    return SessionResult(
        q_hat_x=None if est_x is None else est_x.q_hat,
        q_hat_z=None if est_z is None else est_z.q_hat,
        bucket_sizes=batches.sizes(),
        primary=primary,
        branches=branches,
    )
