import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mismatch_qkd import bounds, quantum as q
from mismatch_qkd.bounds import analytic_rates, binary_entropy, verify_tradeoff
from mismatch_qkd.quantum import Basis, Gamma, UnitaryMixture

HADAMARD_MIX = UnitaryMixture(((0.9, "H"), (0.1, "I")))


def h_oracle(p):
    # written out independently of the library
    if p in (0, 1):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def test_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0) == 0.0
    assert binary_entropy(1) == 0.0
    assert binary_entropy(0.05) == pytest.approx(0.2864, abs=1e-4)


def test_entropy_domain():
    with pytest.raises(ValueError):
        binary_entropy(-0.01)
    with pytest.raises(ValueError):
        binary_entropy(1.2)


@given(st.floats(0, 1))
def test_entropy_symmetric_and_bounded(p):
    assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p), abs=1e-12)
    assert 0 <= binary_entropy(p) <= 1


@given(st.floats(0, 1), st.floats(0, 1))
def test_entropy_concave_midpoint(a, b):
    assert binary_entropy((a + b) / 2) >= (binary_entropy(a) + binary_entropy(b)) / 2 - 1e-12


def test_rates_identity_channel():
    r = analytic_rates(q.identity_channel())
    assert r.p_x == pytest.approx(0, abs=1e-12)
    assert r.p_z == pytest.approx(0, abs=1e-12)
    assert r.q_x == pytest.approx(0.5, abs=1e-12)
    assert r.q_z == pytest.approx(0.5, abs=1e-12)


def test_rates_pure_hadamard():
    r = analytic_rates(Gamma())
    assert r.q_x == pytest.approx(0, abs=1e-12)
    assert r.q_z == pytest.approx(0, abs=1e-12)
    assert r.p_x == pytest.approx(0.5, abs=1e-12)
    assert r.p_z == pytest.approx(0.5, abs=1e-12)


def test_rates_gamma_example():
    r = analytic_rates(Gamma(0.05, 0.03, 0.02))
    assert r.q_x == pytest.approx(0.07, abs=1e-12)
    assert r.q_z == pytest.approx(0.05, abs=1e-12)


def test_rates_definitions_by_direct_matrix_arithmetic():
    ch = q.random_channel(np.random.default_rng(8))
    r = analytic_rates(ch)

    def overlap(bra, ket):
        phi = q.basis_state(*bra)
        return float(np.real(phi.conj() @ ch.apply(q.projector(q.basis_state(*ket))) @ phi))

    Z0, Z1, XP, XM = (Basis.Z, 0), (Basis.Z, 1), (Basis.X, 0), (Basis.X, 1)
    assert r.p_x_minus == pytest.approx(overlap(XP, XM), abs=1e-12)
    assert r.p_x_plus == pytest.approx(overlap(XM, XP), abs=1e-12)
    assert r.q_x1 == pytest.approx(overlap(XP, Z1), abs=1e-12)
    assert r.q_x0 == pytest.approx(overlap(XM, Z0), abs=1e-12)
    assert r.p_z1 == pytest.approx(overlap(Z0, Z1), abs=1e-12)
    assert r.p_z0 == pytest.approx(overlap(Z1, Z0), abs=1e-12)
    assert r.q_z_minus == pytest.approx(overlap(Z0, XM), abs=1e-12)
    assert r.q_z_plus == pytest.approx(overlap(Z1, XP), abs=1e-12)
    assert r.q_x == (r.q_x0 + r.q_x1) / 2
    assert r.p_z == (r.p_z0 + r.p_z1) / 2


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 0))
def test_gamma_rates_match_branch_sums(w):
    r_x, r_z, r_xz, _ = np.array(w) / sum(w)
    r = analytic_rates(Gamma(r_x, r_z, r_xz))
    assert r.q_x == pytest.approx(r_x + r_xz, abs=1e-12)
    assert r.q_z == pytest.approx(r_z + r_xz, abs=1e-12)


def test_matched_bounds():
    assert bounds.matched_rate_bound(analytic_rates(q.identity_channel())) == pytest.approx(1, abs=1e-9)
    assert bounds.matched_rate_bound(analytic_rates(Gamma())) == pytest.approx(-1, abs=1e-9)
    assert bounds.matched_rate_bound(analytic_rates(HADAMARD_MIX)) == pytest.approx(
        1 - 2 * h_oracle(0.45), abs=1e-3
    )
    assert bounds.matched_rate_bound(analytic_rates(HADAMARD_MIX)) == pytest.approx(-0.9855, abs=1e-3)


def test_mismatched_bounds():
    assert bounds.mismatched_rate_bound(analytic_rates(Gamma())) == pytest.approx(1, abs=1e-9)
    assert bounds.mismatched_rate_bound(analytic_rates(q.identity_channel())) == pytest.approx(-1, abs=1e-9)
    assert bounds.mismatched_rate_bound(analytic_rates(HADAMARD_MIX)) == pytest.approx(0.4272, abs=1e-3)


def test_bounds_reach_one_only_at_certain_errors():
    for ch in (q.identity_channel(), Gamma(), UnitaryMixture(((1.0, "HX"),)), UnitaryMixture(((1.0, "X"),))):
        r = analytic_rates(ch)
        assert max(bounds.matched_rate_bound(r), bounds.mismatched_rate_bound(r)) == pytest.approx(1, abs=1e-9)
    r = analytic_rates(Gamma(0.01, 0, 0))
    assert bounds.mismatched_rate_bound(r) < 1


def test_uncertainty_sum_cases():
    assert bounds.uncertainty_sum(q.projector(q.basis_state(Basis.Z, 0))) == pytest.approx(1, abs=1e-9)
    assert bounds.uncertainty_sum(np.eye(2) / 2) == pytest.approx(2, abs=1e-12)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_uncertainty_sum_at_least_one(seed):
    rng = np.random.default_rng(seed)
    assert bounds.uncertainty_sum(q.projector(q.random_pure_state(rng))) >= 1 - 1e-9
    assert bounds.uncertainty_sum(q.random_density(rng)) >= 1 - 1e-9


def test_tradeoff_equality_cases():
    rep = verify_tradeoff(q.identity_channel())
    assert (rep.matched_bound, rep.mismatched_bound) == pytest.approx((1, -1), abs=1e-9)
    assert rep.f11_sum == pytest.approx(0, abs=1e-9) and rep.all_satisfied
    rep = verify_tradeoff(Gamma())
    assert (rep.matched_bound, rep.mismatched_bound) == pytest.approx((-1, 1), abs=1e-9)
    assert rep.f11_sum == pytest.approx(0, abs=1e-9) and rep.all_satisfied


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tradeoff_random_channels(seed):
    rep = verify_tradeoff(q.random_channel(np.random.default_rng(seed)))
    assert rep.all_satisfied
    assert rep.min_pairwise >= 1 - 1e-9
    assert rep.lhs_f9 >= 1 - 1e-9 and rep.lhs_f10 >= 1 - 1e-9
    assert rep.f11_sum == rep.matched_bound + rep.mismatched_bound
    assert rep.f11_sum <= 1e-9


def test_tradeoff_averaged_sums_dominate_pairwise_means():
    # concavity: each averaged inequality is at least the mean of its two pairwise ones
    rep = verify_tradeoff(q.random_channel(np.random.default_rng(4)))
    assert rep.lhs_f9 >= (rep.lhs_f1 + rep.lhs_f2) / 2 - 1e-12
    assert rep.lhs_f10 >= (rep.lhs_f3 + rep.lhs_f4) / 2 - 1e-12
