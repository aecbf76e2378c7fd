"""The single-outer-cycle counterfactual communication protocol.

Layout of the toy circuit (mode names in quotes):

* Alice's photon starts in the outer arm ``"O"``. A rotation by ``theta_out``
  sends amplitude ``sin(theta_out)`` into the inner chain entrance ``"a"``.
* ``n_inner`` inner cycles each rotate ``(a, b)`` by ``pi / (2 n_inner)``.
  ``"b"`` is the arm that passes through Bob's station; when Bob blocks, an
  absorber moves whatever reached ``b`` into the sink ``"sink_k"``.
* Finally ``O -> D0``, ``a -> D1``, ``b -> D3``.

Unblocked, the chain rotates all of its amplitude into ``b`` (so ``D3``);
blocked, the Zeno survival amplitude ``cos(pi / 2N) ** N`` reaches ``D1``.
``D0`` never sees interference with the chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from . import optics
from .errors import (
    EmptyAfterPostselection,
    InvalidParams,
    LossUnsupportedHere,
    RetriesExhausted,
)
from .optics import DETECTOR, PATH, SINK, Absorb, Circuit, Mode, Registry, Rotation, Route

BLOCK_MEANS_ONE = "block_means_one"
BLOCK_MEANS_ZERO = "block_means_zero"
BIT_CONVENTIONS = (BLOCK_MEANS_ONE, BLOCK_MEANS_ZERO)

OUTER, CHAIN_IN, BOB_ARM = "O", "a", "b"
D0, D1, D3 = "D0", "D1", "D3"
BOB_ABSORBED, APPARATUS_LOSS = "BobAbsorbed", "ApparatusLoss"
OUTCOMES = (D0, D1, D3, BOB_ABSORBED, APPARATUS_LOSS)
SUCCESS = (D0, D1)
X_EST = {D0: 0, D1: 1}

BLOCKER_PREFIX = "sink_"
LOSS_A_PREFIX = "loss_a_"
LOSS_B_PREFIX = "loss_b_"


@dataclass(frozen=True)
class ProtocolParams:
    """Everything needed to build the toy circuit.

    ``theta_out`` sets the probability ``p = sin(theta_out)**2`` that the
    photon enters the inner chain. ``inner_loss`` is the per-cycle
    transmission of each inner arm (1 means lossless).
    """

    theta_out: float = math.pi / 4
    n_inner: int = 25
    bit_convention: str = BLOCK_MEANS_ONE
    inner_loss: float = 1.0
    seed: int = 0
    allow_degenerate: bool = field(default=False, repr=False)

    def __post_init__(self):
        theta = float(self.theta_out)
        if not math.isfinite(theta):
            raise InvalidParams("theta_out must be finite")
        if self.allow_degenerate:
            if not 0.0 <= theta <= math.pi / 2:
                raise InvalidParams(f"theta_out={theta} outside [0, pi/2]")
        elif not 0.0 < theta < math.pi / 2:
            raise InvalidParams(f"theta_out={theta} outside (0, pi/2)")
        if isinstance(self.n_inner, bool) or int(self.n_inner) != self.n_inner or self.n_inner < 1:
            raise InvalidParams(f"n_inner must be a positive integer, got {self.n_inner!r}")
        if self.bit_convention not in BIT_CONVENTIONS:
            raise InvalidParams(f"bit_convention must be one of {BIT_CONVENTIONS}")
        if not 0.0 < self.inner_loss <= 1.0:
            raise InvalidParams(f"inner_loss must lie in (0, 1], got {self.inner_loss}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidParams("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "theta_out", theta)
        object.__setattr__(self, "n_inner", int(self.n_inner))
        object.__setattr__(self, "inner_loss", float(self.inner_loss))
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def from_sin2(cls, sin2: float, **kwargs) -> "ProtocolParams":
        return cls(theta_out=math.asin(math.sqrt(sin2)), **kwargs)

    @classmethod
    def degenerate(cls, theta_out: float, n_inner: int, **kwargs) -> "ProtocolParams":
        """Parameters admitting the closed interval ``[0, pi/2]`` for limit checks."""
        return cls(theta_out=theta_out, n_inner=n_inner, allow_degenerate=True, **kwargs)

    @property
    def p(self) -> float:
        return math.sin(self.theta_out) ** 2

    @property
    def inner_angle(self) -> float:
        return math.pi / (2 * self.n_inner)

    @property
    def zeno_survival(self) -> float:
        return zeno_survival(self.n_inner)

    @property
    def lossless(self) -> bool:
        return self.inner_loss == 1.0

    def blocked(self, x: int) -> bool:
        _check_bit(x)
        return bool(x) if self.bit_convention == BLOCK_MEANS_ONE else not x


def zeno_survival(n_inner: int) -> float:
    """Amplitude ``cos(pi / 2N) ** N`` surviving a fully blocked chain."""
    return math.cos(math.pi / (2 * n_inner)) ** n_inner


def _check_bit(x) -> None:
    if x not in (0, 1) or isinstance(x, float):
        raise InvalidParams(f"bit must be 0 or 1, got {x!r}")


def _check_bits(bits: Sequence[int]) -> list[int]:
    bits = [int(b) if isinstance(b, (np.integer,)) else b for b in bits]
    if not bits:
        raise InvalidParams("message must contain at least one bit")
    for b in bits:
        _check_bit(b)
    return bits


def parse_bits(text: str) -> list[int]:
    if not text or set(text) - {"0", "1"}:
        raise InvalidParams(f"bit string must be non-empty and contain only 0/1: {text!r}")
    return [int(c) for c in text]


# ---------------------------------------------------------------- circuits


def _chain_steps(params: ProtocolParams, blocked: bool):
    """Steps, labels and extra modes of the inner chain."""
    steps, labels, extra = [], [], []
    loss_angle = math.acos(math.sqrt(params.inner_loss))
    for k in range(1, params.n_inner + 1):
        steps.append([Rotation(CHAIN_IN, BOB_ARM, params.inner_angle)])
        labels.append(f"inner_{k}")
        if not params.lossless:
            la, lb = f"{LOSS_A_PREFIX}{k}", f"{LOSS_B_PREFIX}{k}"
            extra += [Mode(la, SINK), Mode(lb, SINK)]
            steps.append([Rotation(CHAIN_IN, la, loss_angle), Rotation(BOB_ARM, lb, loss_angle)])
            labels.append(f"loss_{k}")
        if blocked:
            sink = f"{BLOCKER_PREFIX}{k}"
            extra.append(Mode(sink, SINK))
            steps.append([Absorb(BOB_ARM, sink)])
            labels.append(f"block_{k}")
    return steps, labels, extra


def build_toy_circuit(params: ProtocolParams, blocked: bool, d0_topmost: bool = False) -> Circuit:
    """Circuit for one round.

    With ``d0_topmost`` the outer arm is detected right after the outer split
    (in the same step as the first inner cycle) rather than at the end; the
    outcome statistics are unchanged.
    """
    steps, labels, extra = _chain_steps(params, blocked)
    if d0_topmost:
        steps[0].append(Route({OUTER: D0}))
    final = {BOB_ARM: D3, CHAIN_IN: D1}
    if not d0_topmost:
        final[OUTER] = D0
    registry = Registry(
        (
            Mode(OUTER, PATH),
            Mode(CHAIN_IN, PATH),
            Mode(BOB_ARM, PATH),
            Mode(D0, DETECTOR),
            Mode(D1, DETECTOR),
            Mode(D3, DETECTOR),
            *extra,
        )
    )
    return Circuit(
        registry,
        steps=[[Rotation(OUTER, CHAIN_IN, params.theta_out)], *steps, [Route(final)]],
        source=OUTER,
        step_labels=["outer_split", *labels, "detect"],
    )


def build_chain_circuit(params: ProtocolParams, blocked: bool) -> Circuit:
    """The bare inner chain with the photon injected straight into ``a``."""
    steps, labels, extra = _chain_steps(params, blocked)
    registry = Registry(
        (Mode(CHAIN_IN, PATH), Mode(BOB_ARM, PATH), Mode(D1, DETECTOR), Mode(D3, DETECTOR), *extra)
    )
    return Circuit(
        registry,
        steps=[*steps, [Route({BOB_ARM: D3, CHAIN_IN: D1})]],
        source=CHAIN_IN,
        step_labels=[*labels, "detect"],
    )


def _group_outcomes(terminal_dist: dict[str, float]) -> dict[str, float]:
    out = dict.fromkeys(OUTCOMES, 0.0)
    for name, prob in terminal_dist.items():
        if name.startswith(BLOCKER_PREFIX):
            out[BOB_ABSORBED] += prob
        elif name.startswith((LOSS_A_PREFIX, LOSS_B_PREFIX)):
            out[APPARATUS_LOSS] += prob
        else:
            out[name] += prob
    return out


@lru_cache(maxsize=512)
def _round_distribution(params: ProtocolParams, x: int, d0_topmost: bool) -> tuple[float, ...]:
    circuit = build_toy_circuit(params, params.blocked(x), d0_topmost=d0_topmost)
    dist = _group_outcomes(optics.outcome_distribution(optics.evolve_forward(circuit)))
    return tuple(dist[k] for k in OUTCOMES)


@lru_cache(maxsize=512)
def _chain_distribution(params: ProtocolParams, x: int) -> tuple[float, ...]:
    circuit = build_chain_circuit(params, params.blocked(x))
    dist = _group_outcomes(optics.outcome_distribution(optics.evolve_forward(circuit)))
    return tuple(dist[k] for k in OUTCOMES)


def round_distribution(params: ProtocolParams, x: int, d0_topmost: bool = False) -> dict[str, float]:
    """Outcome probabilities of one round, from exact circuit evolution."""
    _check_bit(x)
    return dict(zip(OUTCOMES, _round_distribution(params, int(x), d0_topmost)))


def chain_distribution(params: ProtocolParams, x: int) -> dict[str, float]:
    """Outcome probabilities for a photon fired directly into the inner chain."""
    _check_bit(x)
    return dict(zip(OUTCOMES, _chain_distribution(params, int(x))))


def analytic_round_distribution(params: ProtocolParams, x: int) -> dict[str, float]:
    """Closed-form lossless round distribution (the oracle for the circuit)."""
    if not params.lossless:
        raise LossUnsupportedHere("closed forms cover the lossless chain only")
    cos2 = math.cos(params.theta_out) ** 2
    sin2 = math.sin(params.theta_out) ** 2
    out = dict.fromkeys(OUTCOMES, 0.0)
    out[D0] = cos2
    if params.blocked(x):
        c2 = params.zeno_survival**2
        out[D1] = c2 * sin2
        out[BOB_ABSORBED] = (1.0 - c2) * sin2
    else:
        out[D3] = sin2
    return out


def coin_variant_distribution(params: ProtocolParams, x: int) -> dict[str, float]:
    """Outer splitter replaced by a biased coin.

    With probability ``cos(theta)**2`` Alice keeps the photon (scored as a D0
    click); otherwise it is fired straight into the inner chain.
    """
    fire = params.p
    chain = chain_distribution(params, x)
    out = {k: fire * v for k, v in chain.items()}
    out[D0] += 1.0 - fire
    return out


# ---------------------------------------------------------------- rounds


@dataclass(frozen=True)
class RoundOutcome:
    detector: str
    sent: Optional[int] = None
    x_est: Optional[int] = None
    success: bool = False

    @classmethod
    def from_detector(cls, detector: str, sent: Optional[int] = None) -> "RoundOutcome":
        if detector not in OUTCOMES:
            raise ValueError(f"unknown outcome {detector!r}")
        return cls(detector, sent, X_EST.get(detector), detector in SUCCESS)


def simulate_round(params: ProtocolParams, x: int, rng: np.random.Generator) -> RoundOutcome:
    detector = optics.sample_outcome(round_distribution(params, x), rng)
    return RoundOutcome.from_detector(detector, int(x))


def run_round_with_retries(
    params: ProtocolParams, x: int, rng: np.random.Generator, max_rounds: int = 10_000
) -> tuple[int, int]:
    """Repeat rounds until D0 or D1 fires; return ``(x_est, rounds_used)``."""
    if max_rounds < 1:
        raise InvalidParams("max_rounds must be >= 1")
    dist = round_distribution(params, x)
    for used in range(1, max_rounds + 1):
        detector = optics.sample_outcome(dist, rng)
        if detector in SUCCESS:
            return X_EST[detector], used
    raise RetriesExhausted(f"no D0/D1 click in {max_rounds} rounds")


def _cdf_table(dists: Sequence[dict[str, float]]) -> np.ndarray:
    return np.stack([optics._cdf([d[k] for k in OUTCOMES]) for d in dists])


def sample_round_outcomes(
    params: ProtocolParams, bits: np.ndarray, rng: np.random.Generator, chain_only: bool = False
) -> np.ndarray:
    """Outcome indices into ``OUTCOMES``, one independent round per entry of ``bits``."""
    bits = np.asarray(bits)
    source = chain_distribution if chain_only else round_distribution
    cdfs = _cdf_table([source(params, 0), source(params, 1)])
    u = rng.random(bits.shape)
    out = np.empty(bits.shape, dtype=np.int8)
    for b in (0, 1):
        mask = bits == b
        out[mask] = np.searchsorted(cdfs[b], u[mask], side="right")
    return out


# ---------------------------------------------------------------- messages


@dataclass(frozen=True)
class MessageResult:
    sent: tuple[int, ...]
    retained: bool
    decoded: Optional[tuple[int, ...]]
    all_correct: Optional[bool]
    per_bit_detectors: tuple[RoundOutcome, ...]


def _message_result(bits: Sequence[int], rounds: Sequence[RoundOutcome]) -> MessageResult:
    retained = all(r.success for r in rounds)
    decoded = tuple(r.x_est for r in rounds) if retained else None
    return MessageResult(
        sent=tuple(bits),
        retained=retained,
        decoded=decoded,
        all_correct=(decoded == tuple(bits)) if retained else None,
        per_bit_detectors=tuple(rounds),
    )


def send_message_postselected(
    params: ProtocolParams, bits: Sequence[int], rng: np.random.Generator
) -> MessageResult:
    """One photon per bit, no retries; the whole message is kept only if
    every photon reached D0 or D1."""
    bits = _check_bits(bits)
    idx = sample_round_outcomes(params, np.array(bits), rng)
    rounds = [RoundOutcome.from_detector(OUTCOMES[i], b) for i, b in zip(idx, bits)]
    return _message_result(bits, rounds)


@dataclass(frozen=True)
class MessageBatch:
    """Vectorised record of many messages: ``sent`` and ``outcomes`` are
    ``(n_messages, length)`` arrays, outcomes indexing ``OUTCOMES``."""

    sent: np.ndarray
    outcomes: np.ndarray

    @property
    def success(self) -> np.ndarray:
        return self.outcomes <= 1

    @property
    def retained(self) -> np.ndarray:
        return self.success.all(axis=1)

    @property
    def decoded(self) -> np.ndarray:
        # D0 -> 0, D1 -> 1; meaningful only where success
        return self.outcomes.astype(np.int8)

    @property
    def all_correct(self) -> np.ndarray:
        return self.retained & (self.decoded == self.sent).all(axis=1)

    def results(self) -> list[MessageResult]:
        out = []
        for bits, idx in zip(self.sent.tolist(), self.outcomes.tolist()):
            rounds = [RoundOutcome.from_detector(OUTCOMES[i], b) for i, b in zip(idx, bits)]
            out.append(_message_result(bits, rounds))
        return out


def simulate_messages(
    params: ProtocolParams,
    n_messages: int,
    length: int,
    rng: np.random.Generator,
    bits: Optional[Sequence[int]] = None,
) -> MessageBatch:
    """Many post-selected messages at once.

    If ``bits`` is None each message is drawn uniformly at random (one
    ``integers`` call), otherwise every message carries ``bits``.
    """
    if bits is None:
        sent = rng.integers(0, 2, size=(n_messages, length), dtype=np.int8)
    else:
        bits = _check_bits(bits)
        if len(bits) != length:
            raise InvalidParams("length does not match the bit list")
        sent = np.tile(np.array(bits, dtype=np.int8), (n_messages, 1))
    return MessageBatch(sent, sample_round_outcomes(params, sent, rng))


# ---------------------------------------------------------------- channel statistics


@dataclass(frozen=True)
class ChannelStats:
    """Statistics over post-selected data.

    ``joint[x][x_est]`` holds counts (sampled) or probabilities normalised
    over kept data (exact). ``retention`` is the kept fraction of rounds or
    messages; ``message_accuracy`` is the fraction of kept messages decoded
    without error (message mode only).
    """

    joint: tuple[tuple[float, float], tuple[float, float]]  # ints when counts
    accuracy0: Optional[float]
    accuracy1: Optional[float]
    retention: float
    mutual_information_bits: float
    kept: float
    total: float
    message_accuracy: Optional[float] = None


def mutual_information(joint) -> float:
    """Plug-in ``I(X; Y)`` in bits from a non-negative joint table."""
    j = np.asarray(joint, dtype=float)
    total = j.sum()
    if total <= 0:
        return 0.0
    p = j / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    mi = float(np.sum(p[nz] * np.log2(p[nz] / (px @ py)[nz])))
    return min(max(mi, 0.0), math.log2(min(j.shape)))


def stats_from_joint(joint, kept, total, message_accuracy=None) -> ChannelStats:
    j = np.asarray(joint)
    cast = int if np.issubdtype(j.dtype, np.integer) else float
    j = j.astype(float)
    if kept <= 0 or j.sum() <= 0:
        raise EmptyAfterPostselection("nothing survived post-selection")
    acc = []
    for x in (0, 1):
        row = j[x].sum()
        acc.append(float(j[x, x] / row) if row > 0 else None)
    return ChannelStats(
        joint=tuple(tuple(cast(v) for v in r) for r in j),
        accuracy0=acc[0],
        accuracy1=acc[1],
        retention=float(kept / total),
        mutual_information_bits=mutual_information(j),
        kept=cast(kept),
        total=cast(total),
        message_accuracy=message_accuracy,
    )


def joint_counts(sent: np.ndarray, x_est: np.ndarray) -> np.ndarray:
    sent = np.asarray(sent).ravel()
    x_est = np.asarray(x_est).ravel()
    counts = np.zeros((2, 2), dtype=np.int64)
    np.add.at(counts, (sent, x_est), 1)
    return counts


def channel_statistics(results: Sequence, mode: str = "per_round") -> ChannelStats:
    """Empirical channel statistics from ``RoundOutcome`` or ``MessageResult`` records."""
    results = list(results)
    if not results:
        raise EmptyAfterPostselection("no results given")
    if mode == "per_round":
        kept = [r for r in results if r.success]
        if any(r.sent is None for r in kept):
            raise InvalidParams("round outcomes need their sent bit")
        counts = np.zeros((2, 2), dtype=np.int64)
        for r in kept:
            counts[r.sent, r.x_est] += 1
        return stats_from_joint(counts, len(kept), len(results))
    if mode == "per_message":
        kept = [m for m in results if m.retained]
        counts = np.zeros((2, 2), dtype=np.int64)
        for m in kept:
            for x, y in zip(m.sent, m.decoded):
                counts[x, y] += 1
        accuracy = sum(m.all_correct for m in kept) / len(kept) if kept else None
        return stats_from_joint(counts, len(kept), len(results), accuracy)
    raise ValueError(f"mode must be 'per_round' or 'per_message', got {mode!r}")


def batch_statistics(batch: MessageBatch) -> ChannelStats:
    """``channel_statistics(..., 'per_message')`` on a vectorised batch."""
    kept = batch.retained
    counts = joint_counts(batch.sent[kept], batch.decoded[kept])
    n_kept = int(kept.sum())
    accuracy = float(batch.all_correct.sum() / n_kept) if n_kept else None
    return stats_from_joint(counts, n_kept, len(kept), accuracy)


def round_statistics(sent: np.ndarray, outcomes: np.ndarray) -> ChannelStats:
    """Per-round statistics from arrays of sent bits and outcome indices."""
    ok = outcomes <= 1
    counts = joint_counts(np.asarray(sent)[ok], np.asarray(outcomes)[ok])
    return stats_from_joint(counts, int(ok.sum()), ok.size)


# ---------------------------------------------------------------- closed forms


def success_probability(params: ProtocolParams, x: int) -> float:
    d = analytic_round_distribution(params, x)
    return d[D0] + d[D1]


def correct_and_success(params: ProtocolParams, x: int) -> float:
    d = analytic_round_distribution(params, x)
    return d[D1] if x == 1 else d[D0]


def exact_round_channel(params: ProtocolParams, prior_one: float = 0.5, retries: bool = False) -> ChannelStats:
    """Exact per-round channel over kept rounds.

    With ``retries`` every bit choice is repeated until a detection (so each
    bit ends up kept once and the kept-bit prior equals ``prior_one``);
    otherwise each bit gets one photon and only successful rounds count.
    """
    prior = (1.0 - prior_one, prior_one)
    joint = np.zeros((2, 2))
    retention = 0.0
    for x in (0, 1):
        d = analytic_round_distribution(params, x)
        s = d[D0] + d[D1]
        retention += prior[x] * s
        if s == 0:
            continue
        w = prior[x] if retries else prior[x] * s
        joint[x, 0] = w * d[D0] / s
        joint[x, 1] = w * d[D1] / s
    joint /= joint.sum()
    kept = 1.0 if retries else retention
    return stats_from_joint(joint, kept, 1.0)


def exact_message_retention(params: ProtocolParams, bits: Optional[Sequence[int]] = None, length: int = 16) -> float:
    """Probability that a message survives post-selection.

    ``bits=None`` averages over uniformly random messages of ``length`` bits.
    """
    if bits is not None:
        return math.prod(success_probability(params, b) for b in _check_bits(bits))
    mean = 0.5 * (success_probability(params, 0) + success_probability(params, 1))
    return mean**length


def exact_message_accuracy(params: ProtocolParams, bits: Optional[Sequence[int]] = None, length: int = 16) -> float:
    """Probability that a kept message is decoded with no bit error."""
    if bits is not None:
        bits = _check_bits(bits)
        num = math.prod(correct_and_success(params, b) for b in bits)
        return num / exact_message_retention(params, bits)
    num = 0.5 * (correct_and_success(params, 0) + correct_and_success(params, 1))
    den = 0.5 * (success_probability(params, 0) + success_probability(params, 1))
    return (num / den) ** length


def exact_message_bit_channel(params: ProtocolParams) -> ChannelStats:
    """Per-bit channel inside kept uniformly random messages.

    Bits of a kept message are independent, each distributed as a single
    post-selected round, so this equals the one-shot round channel.
    """
    return exact_round_channel(params, 0.5, retries=False)


# ---------------------------------------------------------------- Popescu variant


def live_positions(n_bits: int, p: float, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Boolean mask of the ``ceil(p * n_bits)`` live positions.

    Without ``rng`` the first positions are live; with it, a uniformly random
    subset of the same size.
    """
    n_live = min(n_bits, math.ceil(p * n_bits - 1e-12))
    mask = np.zeros(n_bits, dtype=bool)
    if rng is None:
        mask[:n_live] = True
    else:
        mask[rng.choice(n_bits, size=n_live, replace=False)] = True
    return mask


@dataclass(frozen=True)
class PopescuRun:
    """One message under the no-coin variant.

    ``guesses`` is 1 for a D1 click at a live position, None for a failed live
    position, and 0 (Alice's default guess) at every non-live position.
    """

    guesses: tuple[Optional[int], ...]
    live_mask: tuple[bool, ...]
    message_retained: bool
    stats: Optional[ChannelStats]
    outcomes: tuple[Optional[str], ...] = ()


def run_popescu_no_coin(
    params: ProtocolParams,
    bits: Sequence[int],
    rng: np.random.Generator,
    random_positions: bool = False,
) -> PopescuRun:
    """Basic apparatus for the first ``ceil(pN)`` bits, guess 0 for the rest.

    ``stats`` covers the guessed (non-live) positions only; None when the
    message has no such position.
    """
    bits = _check_bits(bits)
    live = live_positions(len(bits), params.p, rng if random_positions else None)
    sent = np.array(bits)
    live_idx = np.flatnonzero(live)
    idx = sample_round_outcomes(params, sent[live_idx], rng, chain_only=True)
    outcomes: list[Optional[str]] = [None] * len(bits)
    guesses: list[Optional[int]] = [0] * len(bits)
    for pos, i in zip(live_idx, idx):
        outcomes[pos] = OUTCOMES[i]
        guesses[pos] = 1 if OUTCOMES[i] == D1 else None
    retained = all(outcomes[p] == D1 for p in live_idx)
    guessed = ~live
    stats = None
    if guessed.any():
        counts = joint_counts(sent[guessed], np.zeros(int(guessed.sum()), dtype=int))
        stats = stats_from_joint(counts, int(guessed.sum()), int(guessed.sum()))
    return PopescuRun(tuple(guesses), tuple(bool(v) for v in live), retained, stats, tuple(outcomes))


@dataclass(frozen=True)
class PopescuBatch:
    sent: np.ndarray
    live_mask: np.ndarray
    outcomes: np.ndarray  # index into OUTCOMES at live positions, -1 elsewhere

    @property
    def retained(self) -> np.ndarray:
        d1 = OUTCOMES.index(D1)
        return np.where(self.live_mask, self.outcomes == d1, True).all(axis=1)

    @property
    def guesses(self) -> np.ndarray:
        """0 at guessed positions, 1 for D1 at live ones, -1 for failed live rounds."""
        d1 = OUTCOMES.index(D1)
        return np.where(self.live_mask, np.where(self.outcomes == d1, 1, -1), 0)

    def guessed_statistics(self) -> ChannelStats:
        guessed = ~self.live_mask
        counts = joint_counts(self.sent[guessed], self.guesses[guessed])
        n = int(guessed.sum())
        return stats_from_joint(counts, n, n)


def simulate_popescu(
    params: ProtocolParams,
    n_messages: int,
    length: int,
    rng: np.random.Generator,
    bits: Optional[Sequence[int]] = None,
    random_positions: bool = False,
) -> PopescuBatch:
    if bits is None:
        sent = rng.integers(0, 2, size=(n_messages, length), dtype=np.int8)
    else:
        sent = np.tile(np.array(_check_bits(bits), dtype=np.int8), (n_messages, 1))
    if random_positions:
        live = np.stack([live_positions(length, params.p, rng) for _ in range(n_messages)])
    else:
        live = np.tile(live_positions(length, params.p), (n_messages, 1))
    outcomes = np.full(sent.shape, -1, dtype=np.int8)
    outcomes[live] = sample_round_outcomes(params, sent[live], rng, chain_only=True)
    return PopescuBatch(sent, live, outcomes)


def exact_popescu_retention(params: ProtocolParams, bits: Sequence[int]) -> float:
    """Exact probability that every live photon reaches D1."""
    bits = _check_bits(bits)
    live = live_positions(len(bits), params.p)
    c2 = params.zeno_survival**2 if params.lossless else chain_distribution(params, 1)[D1]
    prob = 1.0
    for b, is_live in zip(bits, live):
        if is_live:
            prob *= c2 if params.blocked(b) else 0.0
    return prob


def exact_popescu_random_retention(params: ProtocolParams, length: int) -> float:
    """Retention for uniformly random messages: only the all-blocked live pattern survives."""
    n_live = int(live_positions(length, params.p).sum())
    c2 = params.zeno_survival**2
    return (0.5 * c2) ** n_live


# ---------------------------------------------------------------- sweeps

SWEEP_COLUMNS = (
    "theta_out",
    "sin2_theta",
    "n_inner",
    "retention",
    "accuracy",
    "accuracy1",
    "mutual_information",
    "expected_messages_until_one_retained",
    "sampled_retention",
    "sampled_accuracy",
    "sampled_accuracy1",
    "sampled_mutual_information",
    "retained_messages",
    "trials",
)


def sweep(
    grid: Iterable[ProtocolParams],
    message_length: int,
    trials: int,
    seed: int = 0,
) -> list[dict]:
    """Exact and sampled message-level statistics for each grid point.

    Grid point ``i`` draws from its own generator seeded with ``seed + i``.
    Exact columns come from closed forms over uniformly random messages;
    sampled columns are None when no message survived.
    """
    rows = []
    for i, params in enumerate(grid):
        rng = np.random.default_rng(seed + i)
        batch = simulate_messages(params, trials, message_length, rng)
        retention = exact_message_retention(params, None, message_length)
        bit_channel = exact_message_bit_channel(params)
        row = {
            "theta_out": params.theta_out,
            "sin2_theta": params.p,
            "n_inner": params.n_inner,
            "retention": retention,
            "accuracy": exact_message_accuracy(params, None, message_length),
            "accuracy1": bit_channel.accuracy1,
            "mutual_information": bit_channel.mutual_information_bits,
            "expected_messages_until_one_retained": 1.0 / retention if retention > 0 else math.inf,
            "sampled_retention": float(batch.retained.mean()),
            "sampled_accuracy": None,
            "sampled_accuracy1": None,
            "sampled_mutual_information": None,
            "retained_messages": int(batch.retained.sum()),
            "trials": trials,
        }
        try:
            stats = batch_statistics(batch)
        except EmptyAfterPostselection:
            pass
        else:
            row["sampled_accuracy"] = stats.message_accuracy
            row["sampled_accuracy1"] = stats.accuracy1
            row["sampled_mutual_information"] = stats.mutual_information_bits
        rows.append(row)
    return rows
