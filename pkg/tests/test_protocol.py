import math

import numpy as np
import pytest

import oracles
from cfqsim import protocol
from cfqsim.errors import EmptyAfterPostselection, InvalidParams, LossUnsupportedHere, RetriesExhausted
from cfqsim.optics import Absorb, evolve_forward
from cfqsim.protocol import (
    BOB_ABSORBED,
    D0,
    D1,
    D3,
    OUTCOMES,
    ProtocolParams,
    RoundOutcome,
    analytic_round_distribution,
    build_toy_circuit,
    channel_statistics,
    coin_variant_distribution,
    round_distribution,
)

THETAS = [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5]
NS = [1, 2, 5, 10, 25, 100]
GRID = [ProtocolParams(t, n) for t in THETAS for n in NS]
QUARTER = ProtocolParams(math.pi / 4, 2)


def dense_distribution(params, x):
    """Round distribution from explicit matrix products of the built circuit."""
    circuit = build_toy_circuit(params, params.blocked(x))
    fwd, _ = oracles.dense_traces(circuit, "D0")
    probs = np.abs(fwd[-1]) ** 2
    out = dict.fromkeys(OUTCOMES, 0.0)
    for name, p in zip(circuit.registry.names, probs):
        if name.startswith("sink_"):
            out[BOB_ABSORBED] += p
        elif name in out:
            out[name] += p
    return out


# ---------------------------------------------------------------- params


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(theta_out=0.0),
        dict(theta_out=math.pi / 2),
        dict(n_inner=0),
        dict(n_inner=2.5),
        dict(inner_loss=0.0),
        dict(inner_loss=1.5),
        dict(bit_convention="other"),
        dict(seed=-1),
        dict(seed=2**64),
    ],
)
def test_invalid_params(kwargs):
    with pytest.raises(InvalidParams):
        ProtocolParams(**kwargs)


def test_degenerate_builder_allows_closed_interval():
    assert ProtocolParams.degenerate(0.0, 3).p == 0.0
    assert ProtocolParams.degenerate(math.pi / 2, 3).p == pytest.approx(1.0)
    with pytest.raises(InvalidParams):
        ProtocolParams.degenerate(2.0, 3)


# ---------------------------------------------------------------- circuit structure


def test_unblocked_structure():
    c = build_toy_circuit(QUARTER, blocked=False)
    assert c.n_steps == 4
    assert set(c.terminals) == {"D0", "D1", "D3"}


def test_blocked_adds_absorbers_and_sinks():
    for n in (1, 2, 7):
        params = ProtocolParams(0.6, n)
        plain = build_toy_circuit(params, blocked=False)
        blocked = build_toy_circuit(params, blocked=True)
        absorbers = [e for step in blocked.steps for e in step if isinstance(e, Absorb)]
        assert len(absorbers) == n
        assert len(blocked.registry) - len(plain.registry) == n
        assert {m.name for m in blocked.registry if m.kind == "sink"} == {f"sink_{k}" for k in range(1, n + 1)}


def test_frozen_quarter_values_against_matrix_oracle():
    # theta = pi/4, N = 2: c = cos(pi/4)**2 = 1/2
    blocked = dense_distribution(QUARTER, 1)
    assert blocked[D0] == pytest.approx(0.5, abs=1e-12)
    assert blocked[D1] == pytest.approx(0.125, abs=1e-12)
    assert blocked[BOB_ABSORBED] == pytest.approx(0.375, abs=1e-12)
    unblocked = dense_distribution(QUARTER, 0)
    assert unblocked[D0] == pytest.approx(0.5, abs=1e-12)
    assert unblocked[D3] == pytest.approx(0.5, abs=1e-12)
    assert unblocked[D1] == pytest.approx(0.0, abs=1e-12)
    assert analytic_round_distribution(QUARTER, 1) == pytest.approx(blocked, abs=1e-12)
    assert analytic_round_distribution(QUARTER, 0) == pytest.approx(unblocked, abs=1e-12)


@pytest.mark.parametrize("params", GRID, ids=lambda p: f"t{p.theta_out}-N{p.n_inner}")
def test_round_distribution_matches_closed_form(params):
    for x in (0, 1):
        sim = round_distribution(params, x)
        exact = analytic_round_distribution(params, x)
        assert max(abs(sim[k] - exact[k]) for k in OUTCOMES) < 1e-12
        assert sum(sim.values()) == pytest.approx(1.0, abs=1e-12)


def test_single_cycle_blocked_fully_diverts():
    d = round_distribution(ProtocolParams(0.8, 1), 1)
    assert d[D1] < 1e-30
    assert analytic_round_distribution(ProtocolParams(0.8, 1), 1)[D1] == pytest.approx(0.0, abs=1e-30)


@pytest.mark.parametrize("blocked_bit", [0, 1])
def test_lossy_chain_conserves_probability(blocked_bit):
    params = ProtocolParams(0.9, 5, inner_loss=0.5)
    d = round_distribution(params, blocked_bit)
    assert all(0.0 <= v <= 1.0 for v in d.values())
    assert sum(d.values()) == pytest.approx(1.0, abs=1e-12)
    assert d["ApparatusLoss"] > 0
    with pytest.raises(LossUnsupportedHere):
        analytic_round_distribution(params, blocked_bit)


def test_loss_survival_per_cycle():
    # blocked chain with loss: a survives each cycle with cos(pi/2N)**2 * eta
    params = ProtocolParams(0.7, 4, inner_loss=0.9)
    d = round_distribution(params, 1)
    expected = math.sin(0.7) ** 2 * (math.cos(math.pi / 8) ** 2 * 0.9) ** 4
    assert d[D1] == pytest.approx(expected, abs=1e-12)


def test_d0_topmost_and_coin_variant_invariance():
    for params in GRID:
        for x in (0, 1):
            ref = round_distribution(params, x)
            top = round_distribution(params, x, d0_topmost=True)
            coin = coin_variant_distribution(params, x)
            assert max(abs(ref[k] - top[k]) for k in OUTCOMES) < 1e-12
            assert max(abs(ref[k] - coin[k]) for k in OUTCOMES) < 1e-12


def test_coin_variant_quarter():
    assert coin_variant_distribution(QUARTER, 1) == pytest.approx(
        {D0: 0.5, D1: 0.125, D3: 0.0, BOB_ABSORBED: 0.375, "ApparatusLoss": 0.0}, abs=1e-12
    )


def test_small_angle_limit():
    p = ProtocolParams.degenerate(0.0, 10)
    for x in (0, 1):
        assert round_distribution(p, x)[D0] == 1.0
        assert analytic_round_distribution(p, x)[D0] == 1.0


def test_bit_conventions():
    one = ProtocolParams(0.6, 5)
    zero = ProtocolParams(0.6, 5, bit_convention=protocol.BLOCK_MEANS_ZERO)
    assert one.blocked(1) and not one.blocked(0)
    assert zero.blocked(0) and not zero.blocked(1)
    # block-means-zero inverts every D1 click: it only fires when Bob sent 0
    assert round_distribution(zero, 1)[D1] < 1e-30
    assert round_distribution(zero, 0)[D1] > 0.1


# ---------------------------------------------------------------- rounds


def test_retries_edge_cases():
    rng = np.random.default_rng(0)
    full = ProtocolParams.degenerate(math.pi / 2, 3)
    for _ in range(200):
        x_est, used = protocol.run_round_with_retries(full, 1, rng, max_rounds=10_000)
        assert x_est == 1 and used >= 1
    with pytest.raises(RetriesExhausted):
        protocol.run_round_with_retries(full, 0, rng, max_rounds=500)
    with pytest.raises(InvalidParams):
        protocol.run_round_with_retries(QUARTER, 1, rng, max_rounds=0)


def test_retries_conditional_frequency():
    rng = np.random.default_rng(2024)
    n = 10**5
    ones = sum(protocol.run_round_with_retries(QUARTER, 1, rng)[0] for _ in range(n))
    # P(x_est = 1 | success) = 0.125 / 0.625
    p = 0.2
    assert abs(ones / n - p) < 4 * oracles.binomial_sigma(p, n)


def test_round_outcome_rule():
    assert RoundOutcome.from_detector(D0, 1).x_est == 0
    assert RoundOutcome.from_detector(D1, 1).x_est == 1
    r = RoundOutcome.from_detector(D3, 0)
    assert r.x_est is None and not r.success


def test_simulation_is_deterministic():
    a = [protocol.simulate_round(QUARTER, 1, rng).detector for rng in [np.random.default_rng(7)] for _ in range(100)]
    b = [protocol.simulate_round(QUARTER, 1, rng).detector for rng in [np.random.default_rng(7)] for _ in range(100)]
    assert a == b
    m1 = protocol.simulate_messages(QUARTER, 100, 16, np.random.default_rng(9))
    m2 = protocol.simulate_messages(QUARTER, 100, 16, np.random.default_rng(9))
    assert np.array_equal(m1.sent, m2.sent) and np.array_equal(m1.outcomes, m2.outcomes)


# ---------------------------------------------------------------- messages


def test_message_result_shape():
    rng = np.random.default_rng(3)
    bits = [1, 0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1, 1]
    res = protocol.send_message_postselected(QUARTER, bits, rng)
    assert len(bits) == 16 and len(res.per_bit_detectors) == 16
    assert res.sent == tuple(bits)
    assert res.retained == all(r.success for r in res.per_bit_detectors)
    assert (res.decoded is not None) == res.retained
    with pytest.raises(InvalidParams):
        protocol.send_message_postselected(QUARTER, [], rng)
    with pytest.raises(InvalidParams):
        protocol.send_message_postselected(QUARTER, [0, 2], rng)


def test_all_ones_message_retention():
    exact = protocol.exact_message_retention(QUARTER, [1] * 16)
    assert exact == pytest.approx(0.625**16, rel=1e-12)
    assert exact == pytest.approx(5.421e-4, rel=1e-3)
    n = 200_000
    batch = protocol.simulate_messages(QUARTER, n, 16, np.random.default_rng(11), [1] * 16)
    assert abs(batch.retained.mean() - exact) < 4 * oracles.binomial_sigma(exact, n)


def test_all_zero_messages_decode_correctly():
    rng = np.random.default_rng(5)
    params = ProtocolParams(0.4, 6)
    batch = protocol.simulate_messages(params, 20_000, 16, rng, [0] * 16)
    assert batch.retained.sum() > 0
    assert np.all(batch.all_correct[batch.retained])
    for res in batch.results()[:2000]:
        if res.retained:
            assert res.decoded == (0,) * 16 and res.all_correct


def test_batch_results_match_scalar_bookkeeping():
    batch = protocol.simulate_messages(QUARTER, 500, 4, np.random.default_rng(1))
    results = batch.results()
    assert [r.retained for r in results] == batch.retained.tolist()
    assert [bool(r.all_correct) for r in results] == batch.all_correct.tolist()
    s1 = channel_statistics(results, "per_message")
    s2 = protocol.batch_statistics(batch)
    assert s1 == s2


# ---------------------------------------------------------------- channel statistics


def test_mutual_information_limits():
    assert protocol.mutual_information([[50, 0], [0, 50]]) == pytest.approx(1.0, abs=1e-15)
    assert protocol.mutual_information([[25, 25], [25, 25]]) == 0.0
    joint = [[30, 5], [12, 53]]
    assert protocol.mutual_information(joint) == pytest.approx(oracles.plugin_mi(joint), abs=1e-14)


def test_channel_statistics_per_round():
    rounds = [RoundOutcome.from_detector(D0, 0)] * 3 + [RoundOutcome.from_detector(D1, 1)] * 3
    rounds += [RoundOutcome.from_detector(D3, 0)] * 4
    stats = channel_statistics(rounds, "per_round")
    assert stats.joint == ((3, 0), (0, 3))
    assert stats.retention == pytest.approx(0.6)
    assert stats.accuracy0 == 1.0 and stats.accuracy1 == 1.0
    assert stats.mutual_information_bits == pytest.approx(1.0)


def test_channel_statistics_empty():
    with pytest.raises(EmptyAfterPostselection):
        channel_statistics([RoundOutcome.from_detector(D3, 0)], "per_round")
    with pytest.raises(EmptyAfterPostselection):
        channel_statistics([], "per_round")


def test_accuracy1_high_visibility():
    params = ProtocolParams.from_sin2(0.99, n_inner=100)
    c2 = math.cos(math.pi / 200) ** 200
    expected = c2 * 0.99 / (0.01 + c2 * 0.99)
    assert protocol.exact_round_channel(params).accuracy1 == pytest.approx(expected, abs=1e-12)
    n = 10**5
    rng = np.random.default_rng(77)
    sent = np.ones(n, dtype=np.int8)
    stats = protocol.round_statistics(sent, protocol.sample_round_outcomes(params, sent, rng))
    sigma = oracles.binomial_sigma(expected, stats.kept)
    assert abs(stats.accuracy1 - expected) < 4 * sigma


def test_one_sided_error_rate():
    params = ProtocolParams(1.2, 10)
    c2 = math.cos(math.pi / 20) ** 20
    cos2, sin2 = math.cos(1.2) ** 2, math.sin(1.2) ** 2
    err = cos2 / (cos2 + c2 * sin2)
    n = 400_000
    sent = np.ones(n, dtype=np.int8)
    stats = protocol.round_statistics(sent, protocol.sample_round_outcomes(params, sent, np.random.default_rng(8)))
    assert abs((1 - stats.accuracy1) - err) < 4 * oracles.binomial_sigma(err, stats.kept)
    assert stats.accuracy0 is None  # no zeros sent


def test_retry_channel_information():
    params = ProtocolParams.from_sin2(0.99, n_inner=100)
    # with retries each bit choice is kept once, so X stays uniform
    stats = protocol.exact_round_channel(params, retries=True)
    a1 = stats.accuracy1
    joint = [[0.5, 0.0], [0.5 * (1 - a1), 0.5 * a1]]
    assert stats.mutual_information_bits == pytest.approx(oracles.plugin_mi(joint), abs=1e-12)
    assert stats.mutual_information_bits > 0.5


# ---------------------------------------------------------------- Popescu variant


def test_live_positions():
    assert protocol.live_positions(16, 0.5).tolist() == [True] * 8 + [False] * 8
    assert protocol.live_positions(5, 0.5).sum() == 3
    mask = protocol.live_positions(16, 0.5, np.random.default_rng(0))
    assert mask.sum() == 8


def test_popescu_live_zero_never_retained():
    params = ProtocolParams(math.pi / 4, 2)
    bits = [1, 0, 1, 1, 1, 1, 1, 1, 0, 1, 0, 1, 0, 1, 0, 1]
    # a live unblocked photon can only exit at D3
    assert protocol.analytic_round_distribution(params, 0)[D1] == 0.0
    assert protocol.exact_popescu_retention(params, bits) == 0.0
    rng = np.random.default_rng(4)
    for _ in range(200):
        run = protocol.run_popescu_no_coin(params, bits, rng)
        assert not run.message_retained
        assert run.outcomes[1] == D3


def test_popescu_all_ones_retention():
    params = ProtocolParams(math.pi / 4, 2)
    exact = protocol.exact_popescu_retention(params, [1] * 16)
    assert exact == pytest.approx(0.25**8, rel=1e-12)
    n = 10**6
    batch = protocol.simulate_popescu(params, n, 16, np.random.default_rng(12), [1] * 16)
    assert abs(batch.retained.mean() - exact) < 4 * oracles.binomial_sigma(exact, n)


def test_popescu_guesses_uncorrelated():
    params = ProtocolParams(math.pi / 4, 2)
    batch = protocol.simulate_popescu(params, 10**5, 16, np.random.default_rng(13))
    stats = batch.guessed_statistics()
    assert stats.mutual_information_bits < 1e-2
    assert np.all(batch.sent[batch.retained][batch.live_mask[batch.retained]] == 1)


def test_popescu_run_fields():
    params = ProtocolParams(math.pi / 4, 2)
    run = protocol.run_popescu_no_coin(params, [1] * 16, np.random.default_rng(1), random_positions=True)
    assert sum(run.live_mask) == 8
    for g, live in zip(run.guesses, run.live_mask):
        assert g in ((1, None) if live else (0,))
    assert run.stats is not None and run.stats.kept == 8


# ---------------------------------------------------------------- sweep


def test_sweep_monotone_tradeoff():
    grid = [ProtocolParams.from_sin2(s, n_inner=25) for s in (0.5, 0.9, 0.99)]
    rows = protocol.sweep(grid, 16, 2000, seed=0)
    acc1 = [r["accuracy1"] for r in rows]
    acc = [r["accuracy"] for r in rows]
    ret = [r["retention"] for r in rows]
    assert acc1[0] < acc1[1] < acc1[2]
    assert acc[0] < acc[1] < acc[2]
    assert ret[0] > ret[1] > ret[2]
    zero_msg = [protocol.exact_message_retention(p, [0, 1] * 8) for p in grid]
    assert zero_msg[0] > zero_msg[1] > zero_msg[2]
    for r in rows:
        assert r["expected_messages_until_one_retained"] == pytest.approx(1 / r["retention"])


def test_sweep_small_angle_limit():
    p = ProtocolParams(1e-4, 25)
    assert protocol.exact_message_retention(p, [0] * 16) == pytest.approx(1.0, abs=1e-6)
    assert protocol.exact_round_channel(p).accuracy1 < 1e-6


def test_many_cycles_limit():
    d = analytic_round_distribution(ProtocolParams(0.8, 1000), 1)
    sim = round_distribution(ProtocolParams(0.8, 1000), 1)
    assert sim[BOB_ABSORBED] == pytest.approx(d[BOB_ABSORBED], abs=1e-12)
    assert d[BOB_ABSORBED] < 3e-3 * math.sin(0.8) ** 2
    assert protocol.zeno_survival(10**6) > protocol.zeno_survival(1000) > protocol.zeno_survival(10)


def test_sweep_seeds_per_point():
    grid = [ProtocolParams.from_sin2(0.5, n_inner=5)] * 2
    rows = protocol.sweep(grid, 4, 500, seed=3)
    again = protocol.sweep(grid, 4, 500, seed=3)
    assert rows == again
    assert rows[0]["sampled_retention"] != rows[1]["sampled_retention"] or rows[0] == rows[1]


def test_evolution_is_pure():
    c = build_toy_circuit(QUARTER, True)
    a = evolve_forward(c).amplitudes()
    b = evolve_forward(c).amplitudes()
    assert np.array_equal(a, b)
