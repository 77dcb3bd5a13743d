"""Binary entropy, channel error probabilities and key-rate lower bounds.

Naming follows the BB84 bookkeeping: ``p_*`` are matched-basis error rates,
``q_*`` mismatched-basis error rates.  The suffix names the state Alice sent.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .quantum import Basis, Channel, basis_state, born_probability, check_density, projector

SLACK = 1e-9
ENTROPY_CUTOFF = 1e-15


def binary_entropy(p: float) -> float:
    """Binary entropy in bits, with h(0) = h(1) = 0."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p < ENTROPY_CUTOFF or 1.0 - p < ENTROPY_CUTOFF:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def shannon_entropy(probs) -> float:
    return -sum(p * math.log2(p) for p in probs if p >= ENTROPY_CUTOFF)


@dataclass(frozen=True)
class ChannelRates:
    p_x_plus: float
    p_x_minus: float
    q_x0: float
    q_x1: float
    p_z0: float
    p_z1: float
    q_z_plus: float
    q_z_minus: float

    @property
    def p_x(self) -> float:
        return (self.p_x_plus + self.p_x_minus) / 2

    @property
    def p_z(self) -> float:
        return (self.p_z0 + self.p_z1) / 2

    @property
    def q_x(self) -> float:
        return (self.q_x0 + self.q_x1) / 2

    @property
    def q_z(self) -> float:
        return (self.q_z_plus + self.q_z_minus) / 2

    def as_dict(self) -> dict[str, float]:
        d = asdict(self)
        d.update(p_x=self.p_x, p_z=self.p_z, q_x=self.q_x, q_z=self.q_z)
        return d


def analytic_rates(ch: Channel) -> ChannelRates:
    """The eight error probabilities of ``ch`` for single BB84 states.

    ``p_x_plus`` is the chance that |+> comes out as |-> in the X basis,
    ``q_z_plus`` the chance that |+> comes out as |1> in the Z basis, and so
    on for the other six.
    """
    out = {
        (b, bit): ch.apply(projector(basis_state(b, bit))) for b in Basis for bit in (0, 1)
    }
    zero, one = out[(Basis.Z, 0)], out[(Basis.Z, 1)]
    plus, minus = out[(Basis.X, 0)], out[(Basis.X, 1)]
    return ChannelRates(
        p_x_plus=born_probability(plus, Basis.X, 1),
        p_x_minus=born_probability(minus, Basis.X, 0),
        q_x0=born_probability(zero, Basis.X, 1),
        q_x1=born_probability(one, Basis.X, 0),
        p_z0=born_probability(zero, Basis.Z, 1),
        p_z1=born_probability(one, Basis.Z, 0),
        q_z_plus=born_probability(plus, Basis.Z, 1),
        q_z_minus=born_probability(minus, Basis.Z, 0),
    )


def matched_rate_bound(r: ChannelRates) -> float:
    return 1.0 - binary_entropy(r.p_x) - binary_entropy(r.p_z)


def mismatched_rate_bound(r: ChannelRates) -> float:
    return 1.0 - binary_entropy(r.q_x) - binary_entropy(r.q_z)


def key_rate_bound(e1: float, e2: float) -> float:
    return 1.0 - binary_entropy(e1) - binary_entropy(e2)


def uncertainty_sum(rho) -> float:
    """Entropy of the Z-basis outcome plus entropy of the X-basis outcome."""
    rho = check_density(rho)
    return sum(
        shannon_entropy([born_probability(rho, b, 0), born_probability(rho, b, 1)]) for b in Basis
    )


@dataclass(frozen=True)
class TradeoffReport:
    lhs_f1: float
    lhs_f2: float
    lhs_f3: float
    lhs_f4: float
    lhs_f9: float
    lhs_f10: float
    matched_bound: float
    mismatched_bound: float
    f11_sum: float
    all_satisfied: bool

    @property
    def min_pairwise(self) -> float:
        return min(self.lhs_f1, self.lhs_f2, self.lhs_f3, self.lhs_f4)


def verify_tradeoff(ch: Channel, rates: ChannelRates | None = None) -> TradeoffReport:
    """Check the uncertainty inequalities linking matched and mismatched rates.

    Each of f1..f4 pairs the two error probabilities of one input state
    measured in both bases and must reach 1.  f9 and f10 are their averaged
    forms; together they force the two key-rate bounds to sum to at most 0.
    """
    r = rates if rates is not None else analytic_rates(ch)
    h = binary_entropy
    lhs = (
        h(r.p_x_plus) + h(r.q_z_plus),
        h(r.p_x_minus) + h(r.q_z_minus),
        h(r.p_z0) + h(r.q_x0),
        h(r.p_z1) + h(r.q_x1),
    )
    f9 = h(r.p_x) + h(r.q_z)
    f10 = h(r.p_z) + h(r.q_x)
    matched = matched_rate_bound(r)
    mismatched = mismatched_rate_bound(r)
    f11 = matched + mismatched
    ok = all(v >= 1 - SLACK for v in (*lhs, f9, f10)) and f11 <= SLACK
    return TradeoffReport(*lhs, f9, f10, matched, mismatched, f11, ok)
