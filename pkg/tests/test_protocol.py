import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mismatch_qkd import gf2, quantum as q
from mismatch_qkd.bounds import analytic_rates
from mismatch_qkd.protocol import (
    AbortReason,
    Bucket,
    CodeSpec,
    ConfigError,
    ProtocolAbort,
    SessionConfig,
    TransmissionRecord,
    Transmissions,
    estimate,
    privacy_amplify,
    reconcile,
    run_session,
    sift,
    subcode_dimension,
    transmit,
)
from mismatch_qkd.quantum import Basis, Gamma, UnitaryMixture


def rng(seed=0):
    return np.random.default_rng(seed)


def sigma(p, n):
    return math.sqrt(p * (1 - p) / n)


# transmission and sifting


def test_identity_channel_matched_records_agree():
    batches = sift(transmit(q.identity_channel(), 5000, rng()))
    for b in (batches.matched_z, batches.matched_x):
        assert len(b) > 0 and np.array_equal(b.alice, b.bob)


def test_pure_hadamard_mismatched_records_agree():
    batches = sift(transmit(Gamma(), 5000, rng(1)))
    for b in (batches.mismatched_ab, batches.mismatched_alphabeta):
        assert len(b) > 0 and np.array_equal(b.alice, b.bob)


def test_basis_pair_frequencies():
    n = 100_000
    t = transmit(q.identity_channel(), n, rng(2))
    for a in (0, 1):
        for b in (0, 1):
            freq = np.count_nonzero((t.alice_basis == a) & (t.bob_basis == b)) / n
            assert abs(freq - 0.25) <= 3 * sigma(0.25, n)


def test_transmit_outcomes_follow_born_rule():
    ch = Gamma(0.1, 0.2, 0.05)
    n = 200_000
    t = transmit(ch, n, rng(3))
    for i, sent in enumerate((Basis.Z, Basis.X)):
        for bit in (0, 1):
            for j, measured in enumerate((Basis.Z, Basis.X)):
                sel = (t.alice_basis == i) & (t.alice_bit == bit) & (t.bob_basis == j)
                p = q.born_probability(ch.apply(q.projector(q.basis_state(sent, bit))), measured, 1)
                m = np.count_nonzero(sel)
                freq = np.count_nonzero(t.bob_outcome[sel]) / m
                assert abs(freq - p) <= 3 * sigma(p, m) + 1e-12


def test_transmit_is_deterministic():
    a = transmit(Gamma(0.1, 0, 0), 1000, rng(4))
    b = transmit(Gamma(0.1, 0, 0), 1000, rng(4))
    for f in ("alice_basis", "alice_bit", "bob_basis", "bob_outcome"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_transmit_rejects_empty():
    with pytest.raises(ValueError):
        transmit(Gamma(), 0, rng())


def test_sift_all_matched():
    recs = [TransmissionRecord(i, Basis.Z if i % 2 else Basis.X, 1, Basis.Z if i % 2 else Basis.X, 1) for i in range(6)]
    b = sift(recs)
    assert len(b.mismatched_ab) == 0 and len(b.mismatched_alphabeta) == 0
    assert len(b.matched_z) == 3 and len(b.matched_x) == 3


def test_sift_single_mismatched_record():
    b = sift([TransmissionRecord(0, Basis.Z, 0, Basis.X, 1)])
    assert b.mismatched_ab.pairs() == [(0, 1)]
    assert len(b.mismatched_alphabeta) == 0


def test_sift_partitions_records():
    t = transmit(Gamma(0.2, 0.1, 0.1), 3000, rng(5))
    b = sift(t)
    assert sum(b.sizes().values()) == len(t)
    idx = np.concatenate([b.matched_z.indices, b.matched_x.indices, b.mismatched_ab.indices, b.mismatched_alphabeta.indices])
    assert sorted(idx.tolist()) == list(range(len(t)))
    for i in b.mismatched_ab.indices[:20]:
        r = t[i]
        assert (r.alice_basis, r.bob_basis) == (Basis.Z, Basis.X)
    for i in b.mismatched_alphabeta.indices[:20]:
        r = t[i]
        assert (r.alice_basis, r.bob_basis) == (Basis.X, Basis.Z)


def test_records_round_trip():
    t = transmit(Gamma(0.2, 0.1, 0.1), 50, rng(6))
    back = Transmissions.from_records(list(t))
    assert np.array_equal(back.bob_outcome, t.bob_outcome)
    assert np.array_equal(back.alice_basis, t.alice_basis)


# estimation


def test_estimate_zero_and_full_disagreement():
    assert estimate([(0, 0), (1, 1)] * 10, 0.5, rng()).q_hat == 0
    assert estimate([(0, 1), (1, 0)] * 10, 0.5, rng()).q_hat == 1


def test_estimate_sample_bookkeeping():
    bucket = Bucket.from_pairs([(i % 2, (i // 3) % 2) for i in range(101)])
    e = estimate(bucket, 0.3, rng(7))
    assert e.sample_size == 30
    assert len(e.remaining_alice) == 71
    keep = np.setdiff1d(np.arange(101), e.sample_indices)
    assert np.array_equal(e.remaining_alice, bucket.alice[keep])
    assert np.array_equal(e.remaining_bob, bucket.bob[keep])
    assert e.q_hat == np.count_nonzero(bucket.alice[e.sample_indices] != bucket.bob[e.sample_indices]) / 30


def test_estimate_too_small():
    with pytest.raises(ProtocolAbort) as err:
        estimate([(0, 0)], 0.5, rng())
    assert err.value.reason is AbortReason.INSUFFICIENT_BITS


def test_estimate_statistics():
    t = transmit(Gamma(0.1, 0, 0), 80_000, rng(8))
    bucket = sift(t).mismatched_ab
    e = estimate(bucket, 0.5, rng(9))
    assert abs(e.q_hat - 0.1) <= 3 * sigma(0.1, e.sample_size)


def test_estimate_mean_tracks_analytic_rate():
    ch = Gamma(0.08, 0.04, 0.03)
    q_x = analytic_rates(ch).q_x
    r = rng(10)
    vals = []
    for _ in range(200):
        e = estimate(sift(transmit(ch, 2000, r)).mismatched_ab, 0.5, r)
        vals.append((e.q_hat, e.sample_size))
    mean = np.mean([v for v, _ in vals])
    avg_size = np.mean([s for _, s in vals])
    assert abs(mean - q_x) <= 3 * sigma(q_x, avg_size) / math.sqrt(200)


def test_renaming_x_outcomes_complements_estimate():
    t = transmit(Gamma(0.2, 0.1, 0), 4000, rng(11))
    renamed = Transmissions(t.alice_basis, t.alice_bit, t.bob_basis, t.bob_outcome ^ (t.bob_basis == 1))
    a, b = sift(t).mismatched_ab, sift(renamed).mismatched_ab
    assert np.array_equal(a.bob ^ 1, b.bob)
    e1, e2 = estimate(a, 0.5, rng(12)), estimate(b, 0.5, rng(12))
    assert e2.q_hat == pytest.approx(1 - e1.q_hat, abs=1e-15)


# reconciliation


@pytest.fixture
def hamming():
    return gf2.hamming_7_4()


def test_reconcile_error_free(hamming):
    a = np.array([1, 0, 1, 1, 0, 0, 1], dtype=np.uint8)
    r = reconcile(a, a, 0.0, hamming)
    assert not r.error_estimate.any()
    assert np.array_equal(r.corrected_bob, a) and r.decode_success and not r.flip_applied
    assert np.array_equal(r.syndrome, hamming.syndrome(a))


def test_reconcile_complement_is_flipped(hamming):
    a = np.array([1, 0, 1, 1, 0, 0, 1], dtype=np.uint8)
    r = reconcile(a, a ^ 1, 1.0, hamming)
    assert r.flip_applied and r.decode_success
    assert not r.error_estimate.any()


@pytest.mark.parametrize("pos", range(7))
def test_reconcile_hamming_single_error(hamming, pos):
    a = np.array([0, 1, 1, 0, 1, 0, 0], dtype=np.uint8)
    b = a.copy()
    b[pos] ^= 1
    r = reconcile(a, b, 0.1, hamming)
    assert r.decode_success and np.array_equal(r.corrected_bob, a)


def test_reconcile_block_counts(hamming):
    code = gf2.tile(hamming, 3)
    a = np.zeros(21, dtype=np.uint8)
    b = a.copy()
    b[[0, 1, 8]] = 1  # two errors in block 0, one in block 1
    r = reconcile(a, b, 0.1, code)
    assert (r.blocks_total, r.blocks_decoded) == (3, 2)
    assert not r.decode_success


def test_reconcile_length_mismatch(hamming):
    with pytest.raises(ValueError):
        reconcile(np.zeros(6), np.zeros(6), 0.0, hamming)


def test_flip_matches_complemented_sample_disagreement():
    ch = UnitaryMixture(((0.8, "HX"), (0.2, "H")))
    e = estimate(sift(transmit(ch, 4000, rng(13))).mismatched_ab, 0.5, rng(14))
    assert e.q_hat > 0.5
    flipped = np.count_nonzero(e.sample_alice != (e.sample_bob ^ 1)) / e.sample_size
    assert flipped == pytest.approx(1 - e.q_hat, abs=1e-15)


# privacy amplification


def test_amplify_zero_error_keeps_everything(hamming):
    a = hamming.encode([1, 1, 0, 1])
    c2, key = privacy_amplify(a, hamming, 0.0, rng())
    assert c2.k == 0 and len(key) == 4


def test_amplify_half_error_aborts(hamming):
    with pytest.raises(ProtocolAbort) as err:
        privacy_amplify(hamming.encode([1, 0, 0, 0]), hamming, 0.5, rng())
    assert err.value.reason is AbortReason.RATE_NONPOSITIVE


def test_amplify_dimension_rounding(hamming):
    assert subcode_dimension(hamming, 0.05) == 3
    c2, key = privacy_amplify(hamming.encode([0, 1, 1, 0]), hamming, 0.05, rng())
    assert c2.k == 3 and len(key) == 1


# sessions


def test_noiseless_hadamard_session():
    cfg = SessionConfig(count=4096, code=CodeSpec("random", rate=0.75), seed=7)
    res = run_session(Gamma(), cfg)
    assert res.q_hat_x == 0 and res.q_hat_z == 0
    assert res.abort_reason is None and res.decode_success
    assert np.array_equal(res.alice_key, res.bob_key)
    assert res.key_length == res.primary.code_dim > 0


@pytest.mark.parametrize("seed", range(5))
def test_identity_channel_aborts(seed):
    res = run_session(q.identity_channel(), SessionConfig(count=4096, seed=seed))
    assert res.abort_reason in (AbortReason.ESTIMATE_AT_HALF, AbortReason.RATE_NONPOSITIVE)
    assert res.alice_key is None


def test_hadamard_mixture_session_estimates():
    ch = UnitaryMixture(((0.9, "H"), (0.1, "I")))
    res = run_session(ch, SessionConfig(count=8192, seed=3))
    n = 8192 / 8
    assert abs(res.q_hat_x - 0.05) <= 3 * sigma(0.05, n) * 1.2
    assert abs(res.q_hat_z - 0.05) <= 3 * sigma(0.05, n) * 1.2
    if res.decode_success:
        assert np.array_equal(res.alice_key, res.bob_key)


def test_session_replay_is_identical():
    cfg = SessionConfig(count=3000, seed=21, process_matched=True, process_alphabeta=True)
    ch = Gamma(0.02, 0.01, 0.0)
    a, b = run_session(ch, cfg), run_session(ch, cfg)
    assert a.q_hat_x == b.q_hat_x and a.q_hat_z == b.q_hat_z
    assert np.array_equal(a.syndrome, b.syndrome)
    for name in a.branches:
        assert a.branches[name].abort_reason == b.branches[name].abort_reason
        if a.branches[name].alice_key is not None:
            assert np.array_equal(a.branches[name].alice_key, b.branches[name].alice_key)


def test_optional_branches_do_not_disturb_primary():
    ch = Gamma(0.02, 0.01, 0.0)
    a = run_session(ch, SessionConfig(count=3000, seed=5))
    b = run_session(ch, SessionConfig(count=3000, seed=5, process_matched=True, process_alphabeta=True))
    assert np.array_equal(a.alice_key, b.alice_key)
    assert set(b.branches) == {"alphabeta", "matched_z", "matched_x"}


def test_matched_branches_key_off_identity_channel():
    cfg = SessionConfig(count=4096, seed=2, process_matched=True, process_alphabeta=True)
    res = run_session(q.identity_channel(), cfg)
    assert res.abort_reason is not None
    for name in ("matched_z", "matched_x"):
        br = res.branches[name]
        assert br.abort_reason is None and br.key_length > 0
        assert np.array_equal(br.alice_key, br.bob_key)


def test_alphabeta_branch_swaps_roles():
    cfg = SessionConfig(count=4096, seed=8, process_alphabeta=True)
    res = run_session(UnitaryMixture(((1.0, "HX"),)), cfg)
    ab = res.branches["alphabeta"]
    assert (ab.q_hat_reconcile, ab.q_hat_amplify) == (res.q_hat_z, res.q_hat_x)
    assert ab.abort_reason is None and not ab.flip_applied
    assert np.array_equal(ab.alice_key, ab.bob_key)


def test_bitflip_session():
    res = run_session(UnitaryMixture(((1.0, "HX"),)), SessionConfig(count=4096, seed=4))
    assert res.q_hat_x == 1 and res.flip_applied and res.decode_success
    assert np.array_equal(res.alice_key, res.bob_key)


def test_insufficient_bits():
    res = run_session(Gamma(), SessionConfig(count=4, seed=1))
    assert res.abort_reason is AbortReason.INSUFFICIENT_BITS


def test_code_longer_than_available_bits():
    res = run_session(Gamma(), SessionConfig(count=400, seed=3, code=CodeSpec("random", block_length=64, rate=0.9)))
    assert res.abort_reason is AbortReason.INSUFFICIENT_BITS


def test_decode_failure_reported():
    cfg = SessionConfig(count=8192, seed=0, code=CodeSpec("random", rate=0.95))
    res = run_session(Gamma(0.1, 0, 0), cfg)
    assert res.abort_reason is AbortReason.DECODE_FAILURE
    assert res.alice_key is None and not res.decode_success
    assert res.primary.blocks_decoded < res.primary.blocks_total


@pytest.mark.parametrize("kind", ["hamming", "repetition", "random"])
def test_code_kinds_run(kind):
    res = run_session(Gamma(0.01, 0, 0), SessionConfig(count=4096, seed=2, code=CodeSpec(kind)))
    assert res.primary.code_length > 0
    if kind == "repetition":
        assert res.primary.code_dim == res.primary.code_length // 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_keys_agree_whenever_decoding_succeeds(seed):
    r = rng(seed)
    w = r.dirichlet([1, 1, 1, 12])
    res = run_session(Gamma(*w[:3]), SessionConfig(count=2048, seed=seed, code=CodeSpec("hamming")))
    if res.decode_success and res.abort_reason is None:
        assert np.array_equal(res.alice_key, res.bob_key)
        assert res.key_length == res.primary.code_dim - res.primary.subcode_dim


def test_config_from_dict_and_errors():
    cfg = SessionConfig.from_dict({"channel": {}, "count": 100, "code": {"kind": "hamming", "max_length": 70}})
    assert cfg.count == 100 and cfg.code.max_length == 70
    assert SessionConfig.from_dict(cfg.to_dict()) == cfg
    for bad, field in [
        ({"count": 0}, "count"),
        ({"sample_fraction": 1.0}, "sample_fraction"),
        ({"code": {"kind": "ldpc"}}, "code.kind"),
        ({"code": {"blocks": 3}}, "code.blocks"),
        ({"colour": 1}, "colour"),
        ({"guard_band": 0.7}, "guard_band"),
    ]:
        with pytest.raises(ConfigError, match=field):
            SessionConfig.from_dict(bad)
