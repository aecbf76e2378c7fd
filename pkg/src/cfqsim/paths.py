"""Photon-presence criteria for pre- and post-selected single photons.

Two criteria are computed on the same circuit:

* weak trace: the first-order weak value ``<phi(t)|P|psi(t)> / <phi(t)|psi(t)>``
  of a mode projector, where ``psi`` evolves forward from the source and
  ``phi`` backward from the post-selected detector;
* consistent histories: the decoherence functional of a family of
  two-valued (Alice side / Bob side) projector chains ending on the
  post-selected detector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import optics, protocol
from .errors import MalformedFamily, ZeroPostselectionProbability
from .optics import Absorb, Circuit, EvolutionTrace, Rotation, Route
from .protocol import BLOCKER_PREFIX, BOB_ARM, LOSS_B_PREFIX, ProtocolParams

OVERLAP_TOL = 1e-14
ALICE, BOB = "AliceSide", "BobSide"
MAX_BRANCHES = 1 << 16


@dataclass(frozen=True)
class RegionSpec:
    name: str
    members: frozenset[tuple[int, str]]

    def validate(self, circuit: Circuit) -> None:
        for t, mode in self.members:
            if not 0 <= t <= circuit.n_steps:
                raise ValueError(f"region {self.name!r}: timestep {t} out of range")
            circuit.registry.index(mode)


def bob_modes(circuit: Circuit, blocker_only: bool = False) -> tuple[str, ...]:
    """Modes on Bob's side: the ``b`` arm, blocker sinks and ``b``-arm loss sinks."""
    out = []
    for name in circuit.registry.names:
        if name.startswith(BLOCKER_PREFIX):
            out.append(name)
        elif not blocker_only and (name == BOB_ARM or name.startswith(LOSS_B_PREFIX)):
            out.append(name)
    return tuple(out)


def bob_region(circuit: Circuit, blocker_only: bool = False) -> RegionSpec:
    """Every timestep occurrence of Bob's modes."""
    modes = bob_modes(circuit, blocker_only)
    members = frozenset((t, m) for t in range(circuit.n_steps + 1) for m in modes)
    return RegionSpec("bob_blockers" if blocker_only else "bob", members)


# ---------------------------------------------------------------- weak trace


def two_state_trace(circuit: Circuit, postselect: str) -> tuple[EvolutionTrace, EvolutionTrace]:
    forward = optics.evolve_forward(circuit)
    backward = optics.evolve_backward(circuit, postselect)
    if abs(forward.final.amp(postselect)) < OVERLAP_TOL:
        raise ZeroPostselectionProbability(f"{postselect} is never reached")
    return forward, backward


def weak_value_table(forward: EvolutionTrace, backward: EvolutionTrace):
    """Weak values of every mode projector at every boundary.

    Returns ``(values, overlaps)`` with ``values`` of shape
    ``(n_boundaries, n_modes)``; rows whose overlap is below ``OVERLAP_TOL``
    are NaN.
    """
    psi = forward.amplitudes()
    phi = backward.amplitudes()
    overlaps = np.sum(np.conj(phi) * psi, axis=1)
    products = np.conj(phi) * psi
    values = np.full(psi.shape, np.nan + 1j * np.nan)
    ok = np.abs(overlaps) >= OVERLAP_TOL
    values[ok] = products[ok] / overlaps[ok, None]
    return values, overlaps


@dataclass(frozen=True)
class WeakValueEntry:
    timestep: int
    mode: str
    forward_amp: complex
    backward_amp: complex
    weak_value: Optional[complex]  # None where the overlap vanishes

    @property
    def defined(self) -> bool:
        return self.weak_value is not None


@dataclass(frozen=True)
class WeakTraceReport:
    postselect: str
    region: str
    entries: tuple[WeakValueEntry, ...]
    max_abs_weak_value_in_region: float
    overlap: complex


def weak_value_profile(circuit: Circuit, postselect: str, region: RegionSpec) -> WeakTraceReport:
    region.validate(circuit)
    forward, backward = two_state_trace(circuit, postselect)
    values, overlaps = weak_value_table(forward, backward)
    reg = circuit.registry
    entries = []
    for t, mode in sorted(region.members, key=lambda m: (m[0], reg.index(m[1]))):
        i = reg.index(mode)
        wv = values[t, i]
        entries.append(
            WeakValueEntry(
                t,
                mode,
                complex(forward[t].amps[i]),
                complex(backward[t].amps[i]),
                None if np.isnan(wv) else complex(wv),
            )
        )
    defined = [abs(e.weak_value) for e in entries if e.defined]
    return WeakTraceReport(
        postselect=postselect,
        region=region.name,
        entries=tuple(entries),
        max_abs_weak_value_in_region=max(defined, default=0.0),
        overlap=complex(overlaps[-1]),
    )


def bob_presence_by_weak_trace(
    params: ProtocolParams,
    x: int,
    postselect: str,
    blocker_only: bool = False,
    d0_topmost: bool = False,
) -> float:
    """Largest |weak value| anywhere in Bob's region for this configuration."""
    circuit = protocol.build_toy_circuit(params, params.blocked(x), d0_topmost=d0_topmost)
    report = weak_value_profile(circuit, postselect, bob_region(circuit, blocker_only))
    return report.max_abs_weak_value_in_region


# ---------------------------------------------------------------- histories


@dataclass(frozen=True)
class HistoryFamily:
    """Two-outcome projector slices at the given timestep boundaries.

    At each slice the projector is onto ``bob_modes`` (BobSide) or onto its
    complement (AliceSide), so the pair is orthogonal and complete.
    """

    slice_timesteps: tuple[int, ...]
    bob_modes: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "slice_timesteps", tuple(int(t) for t in self.slice_timesteps))
        object.__setattr__(self, "bob_modes", frozenset(self.bob_modes))

    def validate(self, circuit: Circuit) -> None:
        ts = self.slice_timesteps
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise MalformedFamily("slice timesteps must be strictly increasing")
        if ts and not (0 <= ts[0] and ts[-1] <= circuit.n_steps):
            raise MalformedFamily(f"slice timesteps must lie in [0, {circuit.n_steps}]")
        unknown = self.bob_modes - set(circuit.registry.names)
        if unknown:
            raise MalformedFamily(f"unknown modes in family: {sorted(unknown)}")

    def histories(self) -> list[tuple[str, ...]]:
        return list(itertools.product((ALICE, BOB), repeat=len(self.slice_timesteps)))


def cycle_boundaries(circuit: Circuit) -> dict[str, int]:
    """Boundary index after the outer split and after each complete inner cycle."""
    out = {}
    for k, label in enumerate(circuit.step_labels):
        if label == "outer_split":
            out["outer_split"] = k + 1
        for prefix in ("inner_", "loss_", "block_"):
            if label.startswith(prefix):
                out["cycle_" + label[len(prefix):]] = k + 1
    return out


def default_family(circuit: Circuit, max_slices: Optional[int] = None, blocker_only: bool = False) -> HistoryFamily:
    """Slices after the outer split and after every inner cycle.

    ``max_slices`` thins the slices evenly (always keeping the first and
    last) to bound the family at ``2 ** max_slices`` histories.
    """
    slices = sorted(set(cycle_boundaries(circuit).values()))
    if max_slices is not None and len(slices) > max_slices:
        if max_slices < 1:
            raise MalformedFamily("max_slices must be >= 1")
        if max_slices == 1:
            slices = [slices[0]]
        else:
            picks = np.linspace(0, len(slices) - 1, max_slices).round().astype(int)
            slices = [slices[i] for i in sorted(set(picks.tolist()))]
    return HistoryFamily(tuple(slices), frozenset(bob_modes(circuit, blocker_only)))


def _relevant_masks(circuit: Circuit, postselect: str) -> np.ndarray:
    """Boolean ``(n_boundaries, n_modes)``: modes with a structural path to ``postselect``.

    Projector slices are diagonal, so amplitude outside these masks can never
    reach the post-selected detector.
    """
    reg = circuit.registry
    mask = np.zeros(len(reg), dtype=bool)
    mask[reg.index(postselect)] = True
    masks = [mask]
    for k in range(circuit.n_steps - 1, -1, -1):
        prev = mask.copy()
        for e in circuit.steps[k]:
            if isinstance(e, Rotation):
                iu, iv = reg.index(e.u), reg.index(e.v)
                c, s = math.cos(e.theta), math.sin(e.theta)
                reach_u = (c != 0 and mask[iu]) or (s != 0 and mask[iv])
                reach_v = (s != 0 and mask[iu]) or (c != 0 and mask[iv])
                prev[iu], prev[iv] = reach_u, reach_v
            else:
                pairs = e.permutation() if isinstance(e, Route) else [(e.source, e.sink), (e.sink, e.source)]
                for src, dst in pairs:
                    prev[reg.index(src)] = mask[reg.index(dst)]
        mask = prev
        masks.append(mask)
    masks.reverse()
    return np.stack(masks)


@dataclass(frozen=True)
class DecoherenceMatrix:
    """Decoherence functional ``D(h, h') = <psi| C_h^dag P_f C_h' |psi>``.

    ``histories`` lists the histories whose class-operator amplitude on the
    post-selected detector is not structurally zero; every other history of
    the family has an identically zero row and column.
    """

    family: HistoryFamily
    postselect: str
    histories: tuple[tuple[str, ...], ...]
    entries: np.ndarray
    postselect_probability: float
    consistent: bool
    eps: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def history_probabilities(self) -> dict[tuple[str, ...], float]:
        diag = np.diag(self.entries).real
        total = diag.sum()
        return {h: float(d / total) if total > 0 else 0.0 for h, d in zip(self.histories, diag)}

    def max_offdiag(self) -> float:
        if len(self.histories) < 2:
            return 0.0
        off = self.entries - np.diag(np.diag(self.entries))
        return float(np.max(np.abs(off)))


def history_amplitudes(
    circuit: Circuit, family: HistoryFamily, postselect: str, prune: bool = True
) -> tuple[list[tuple[str, ...]], np.ndarray]:
    """Amplitude ``<f| U C_h |psi_0>`` for each (non-pruned) history.

    Branch vectors are evolved as a stack. With ``prune``, components outside
    the structurally relevant modes are dropped and branches left with
    nothing relevant are discarded; without it all ``2**k`` histories are kept.
    """
    family.validate(circuit)
    reg = circuit.registry
    relevant = _relevant_masks(circuit, postselect)
    bob = np.array([m.name in family.bob_modes for m in reg])

    prefixes: list[tuple[str, ...]] = [()]
    vecs = optics.StateVector.basis(reg, circuit.source).amps[None, :].copy()
    t = 0
    for ts in family.slice_timesteps:
        vecs = circuit.propagate(vecs, t, ts)
        t = ts
        alice_part = np.where(bob, 0.0, vecs)
        bob_part = np.where(bob, vecs, 0.0)
        new_prefixes, new_vecs = [], []
        for label, part in ((ALICE, alice_part), (BOB, bob_part)):
            if prune:
                part = np.where(relevant[ts], part, 0.0)
            for h, v in zip(prefixes, part):
                if prune and not np.any(v != 0):
                    continue
                new_prefixes.append(h + (label,))
                new_vecs.append(v)
        if len(new_prefixes) > MAX_BRANCHES:
            raise MalformedFamily(f"more than {MAX_BRANCHES} live histories; use coarser slicing")
        order = sorted(range(len(new_prefixes)), key=lambda i: new_prefixes[i])
        prefixes = [new_prefixes[i] for i in order]
        vecs = np.array([new_vecs[i] for i in order]).reshape(len(order), len(reg))
    vecs = circuit.propagate(vecs, t, circuit.n_steps)
    return prefixes, vecs[:, reg.index(postselect)]


def decoherence_functional(
    circuit: Circuit,
    family: HistoryFamily,
    postselect: str,
    eps: float = 1e-10,
    prune: bool = True,
) -> DecoherenceMatrix:
    if not circuit.registry.mode(postselect).terminal:
        raise MalformedFamily(f"post-selection mode {postselect!r} is not terminal")
    forward = optics.evolve_forward(circuit)
    p_f = abs(forward.final.amp(postselect)) ** 2
    if math.sqrt(p_f) < OVERLAP_TOL:
        raise ZeroPostselectionProbability(f"{postselect} is never reached")
    histories, amps = history_amplitudes(circuit, family, postselect, prune=prune)
    entries = np.outer(np.conj(amps), amps)
    # rank-one post-selection makes D exactly Hermitian; symmetrise anyway
    entries = 0.5 * (entries + entries.conj().T)
    matrix = DecoherenceMatrix(
        family=family,
        postselect=postselect,
        histories=tuple(histories),
        entries=entries,
        postselect_probability=p_f,
        consistent=False,
        eps=eps,
    )
    object.__setattr__(matrix, "consistent", matrix.max_offdiag() <= eps)
    return matrix


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    max_offdiag: float
    bob_history_probability: float


def consistency_report(matrix: DecoherenceMatrix, eps: float = 1e-10) -> ConsistencyReport:
    """Medium-decoherence check plus the weight of histories that visit Bob."""
    max_off = matrix.max_offdiag()
    diag = np.diag(matrix.entries).real
    total = diag.sum()
    bob_weight = sum(d for h, d in zip(matrix.histories, diag) if BOB in h)
    return ConsistencyReport(
        consistent=max_off <= eps,
        max_offdiag=max_off,
        bob_history_probability=float(bob_weight / total) if total > 0 else 0.0,
    )


def bob_presence_by_histories(
    params: ProtocolParams,
    x: int,
    postselect: str,
    eps: float = 1e-10,
    max_slices: Optional[int] = None,
    blocker_only: bool = False,
    d0_topmost: bool = False,
) -> ConsistencyReport:
    circuit = protocol.build_toy_circuit(params, params.blocked(x), d0_topmost=d0_topmost)
    family = default_family(circuit, max_slices=max_slices, blocker_only=blocker_only)
    return consistency_report(decoherence_functional(circuit, family, postselect, eps), eps)
