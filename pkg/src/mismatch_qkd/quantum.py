"""Single-qubit states, channels and measurements.

States are 2-vectors, density operators are 2x2 complex arrays.  Outcome 0
of the Z basis is |0>, outcome 0 of the X basis is |+>.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

TOL = 1e-12

_S = 1 / np.sqrt(2)
_BASE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_S, _S], [_S, -_S]], dtype=complex),
}


class Basis(enum.Enum):
    Z = "Z"
    X = "X"

    @property
    def other(self) -> Basis:
        return Basis.X if self is Basis.Z else Basis.Z


_KETS = {
    (Basis.Z, 0): np.array([1, 0], dtype=complex),
    (Basis.Z, 1): np.array([0, 1], dtype=complex),
    (Basis.X, 0): np.array([_S, _S], dtype=complex),
    (Basis.X, 1): np.array([_S, -_S], dtype=complex),
}


def named_unitary(name: str) -> np.ndarray:
    """Matrix for I, X, Z, H or a product such as ``HXZ`` (= H @ X @ Z)."""
    if name not in {"I", "X", "Z", "XZ", "H", "HX", "HZ", "HXZ"}:
        raise ValueError(f"unknown unitary {name!r}")
    out = np.eye(2, dtype=complex)
    for ch in name:
        out = out @ _BASE[ch]
    return out


def basis_state(basis: Basis, bit: int) -> np.ndarray:
    return _KETS[(Basis(basis), int(bit))].copy()


def projector(ket) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def check_pure_state(ket, tol: float = TOL) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    if ket.shape != (2,):
        raise ValueError(f"qubit state must have 2 amplitudes, got shape {ket.shape}")
    if abs(np.linalg.norm(ket) - 1) > tol:
        raise ValueError("state is not normalized")
    return ket


def check_density(rho, tol: float = TOL) -> np.ndarray:
    """Validate a qubit density operator and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"density operator must be 2x2, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density operator is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density operator does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density operator is not positive semidefinite")
    return rho


def _check_unitary(u, tol: float = TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"unitary must be 2x2, got {u.shape}")
    if np.abs(u.conj().T @ u - np.eye(2)).max() > tol:
        raise ValueError("matrix is not unitary")
    return u


@dataclass(frozen=True, eq=False)
class UnitaryMixture:
    """Apply ``u_i`` with probability ``p_i``."""

    terms: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        terms = []
        for p, u in self.terms:
            p = float(p)
            if p < 0:
                raise ValueError("mixture probabilities must be nonnegative")
            terms.append((p, _check_unitary(named_unitary(u) if isinstance(u, str) else u)))
        if abs(sum(p for p, _ in terms) - 1) > TOL:
            raise ValueError("mixture probabilities must sum to 1")
        object.__setattr__(self, "terms", tuple(terms))

    def kraus(self) -> list[np.ndarray]:
        return [np.sqrt(p) * u for p, u in self.terms if p > 0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum((p * u @ rho @ u.conj().T for p, u in self.terms), np.zeros((2, 2), complex))


@dataclass(frozen=True)
class Gamma:
    """H composed with an X, Z or XZ error with probabilities r_x, r_z, r_xz."""

    r_x: float = 0.0
    r_z: float = 0.0
    r_xz: float = 0.0

    def __post_init__(self):
        r = (self.r_x, self.r_z, self.r_xz)
        if min(r) < 0 or sum(r) > 1 + TOL:
            raise ValueError(f"invalid Gamma rates {r}")

    @cached_property
    def _mixture(self) -> UnitaryMixture:
        return self.as_unitary_mixture()

    def as_unitary_mixture(self) -> UnitaryMixture:
        rest = max(0.0, 1.0 - self.r_x - self.r_z - self.r_xz)
        return UnitaryMixture(
            ((self.r_x, "HX"), (self.r_z, "HZ"), (self.r_xz, "HXZ"), (rest, "H"))
        )

    def kraus(self) -> list[np.ndarray]:
        return self._mixture.kraus()

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return self._mixture.apply(rho)


@dataclass(frozen=True, eq=False)
class Kraus:
    ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.ops)
        if not ops or any(k.shape != (2, 2) for k in ops):
            raise ValueError("Kraus channel needs at least one 2x2 operator")
        total = sum(k.conj().T @ k for k in ops)
        if np.abs(total - np.eye(2)).max() > TOL:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "ops", ops)

    def kraus(self) -> list[np.ndarray]:
        return list(self.ops)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum((k @ rho @ k.conj().T for k in self.ops), np.zeros((2, 2), complex))


Channel = Union[UnitaryMixture, Gamma, Kraus]


def identity_channel() -> UnitaryMixture:
    return UnitaryMixture(((1.0, "I"),))


def apply_channel(ch: Channel, rho) -> np.ndarray:
    return ch.apply(check_density(rho))


def born_probability(rho, basis: Basis, outcome: int) -> float:
    """``<phi|rho|phi>`` for the basis vector labelled ``outcome``."""
    phi = _KETS[(Basis(basis), int(outcome))]
    p = float(np.real(phi.conj() @ np.asarray(rho) @ phi))
    return min(1.0, max(0.0, p))


def outcome_one_probability(ch: Channel, ket, basis: Basis) -> float:
    p = born_probability(ch.apply(projector(ket)), basis, 1)
    # rounding noise around certain outcomes
    if p < TOL:
        return 0.0
    if p > 1 - TOL:
        return 1.0
    return p


def sample_measurement(ch: Channel, ket, basis: Basis, rng: np.random.Generator) -> int:
    """Send ``ket`` through ``ch`` and measure it in ``basis``.

    Consumes exactly one uniform variate from ``rng``.
    """
    p1 = outcome_one_probability(ch, check_pure_state(ket), basis)
    return int(rng.random() < p1)


def random_pure_state(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def random_density(rng: np.random.Generator, max_terms: int = 4) -> np.ndarray:
    """Convex mixture of 1..max_terms random pure states."""
    terms = int(rng.integers(1, max_terms + 1))
    weights = rng.dirichlet(np.ones(terms))
    rho = sum(w * projector(random_pure_state(rng)) for w in weights)
    return (rho + rho.conj().T) / 2


def random_channel(rng: np.random.Generator) -> Kraus:
    """Random channel from an isometry into qubit x environment (dim 2..4)."""
    env = int(rng.integers(2, 5))
    g = rng.normal(size=(2 * env, 2)) + 1j * rng.normal(size=(2 * env, 2))
    v, _ = np.linalg.qr(g)
    # output index is qubit * env + environment
    v = v.reshape(2, env, 2)
    return Kraus(tuple(np.ascontiguousarray(v[:, e, :]) for e in range(env)))


def trace_distance(a, b) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(np.asarray(a) - np.asarray(b))).sum())


# JSON wire format


def _matrix_from_json(m) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.shape != (2, 2, 2):
        raise ValueError("matrix must be [[[re,im],[re,im]],[[re,im],[re,im]]]")
    return arr[..., 0] + 1j * arr[..., 1]


def _matrix_to_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def channel_from_json(obj: dict) -> Channel:
    """Build a channel from its JSON form; errors name the offending field."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("channel: expected an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "gamma":
        try:
            return Gamma(float(obj.get("r_x", 0)), float(obj.get("r_z", 0)), float(obj.get("r_xz", 0)))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"channel.r_x/r_z/r_xz: {exc}") from None
    if kind == "unitary_mixture":
        terms = []
        for i, t in enumerate(obj.get("terms", [])):
            try:
                u = t["u"]
                terms.append((float(t["p"]), u if isinstance(u, str) else _matrix_from_json(u)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"channel.terms[{i}]: {exc}") from None
        try:
            return UnitaryMixture(tuple(terms))
        except ValueError as exc:
            raise ValueError(f"channel.terms: {exc}") from None
    if kind == "kraus":
        try:
            return Kraus(tuple(_matrix_from_json(k) for k in obj.get("ops", [])))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"channel.ops: {exc}") from None
    raise ValueError(f"channel.kind: unknown kind {kind!r}")


def channel_to_json(ch: Channel) -> dict:
    if isinstance(ch, Gamma):
        return {"kind": "gamma", "r_x": ch.r_x, "r_z": ch.r_z, "r_xz": ch.r_xz}
    if isinstance(ch, UnitaryMixture):
        return {
            "kind": "unitary_mixture",
            "terms": [{"p": p, "u": _matrix_to_json(u)} for p, u in ch.terms],
        }
    return {"kind": "kraus", "ops": [_matrix_to_json(k) for k in ch.ops]}
