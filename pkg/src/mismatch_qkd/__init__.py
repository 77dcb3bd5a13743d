"""Simulation and analysis of BB84 with key extraction from mismatched-basis outcomes."""

from .bounds import (
    ChannelRates,
    TradeoffReport,
    analytic_rates,
    binary_entropy,
    matched_rate_bound,
    mismatched_rate_bound,
    uncertainty_sum,
    verify_tradeoff,
)
from .gf2 import LinearCode, coset_label, coset_leader_decode, rank, sample_subcode, solve
from .protocol import AbortReason, CodeSpec, SessionConfig, SessionResult, run_session
from .quantum import Basis, Gamma, Kraus, UnitaryMixture, apply_channel, born_probability

__all__ = [
    "AbortReason",
    "Basis",
    "ChannelRates",
    "CodeSpec",
    "Gamma",
    "Kraus",
    "LinearCode",
    "SessionConfig",
    "SessionResult",
    "TradeoffReport",
    "UnitaryMixture",
    "analytic_rates",
    "apply_channel",
    "binary_entropy",
    "born_probability",
    "coset_label",
    "coset_leader_decode",
    "matched_rate_bound",
    "mismatched_rate_bound",
    "rank",
    "run_session",
    "sample_subcode",
    "solve",
    "uncertainty_sum",
    "verify_tradeoff",
]
