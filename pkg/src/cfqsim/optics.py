"""Exact single-photon evolution over a registry of labelled optical modes.

A one-photon state is a complex amplitude per mode, so every optical element
is a small unitary acting on a handful of entries of that vector. Detectors
and absorbers are ordinary modes of kind ``detector`` / ``sink``; absorption
is a swap into an empty sink, which keeps the global norm at one and makes
absorbed probability directly readable.

Mode order in the registry is canonical: it fixes the order of outcome
distributions, the inverse-CDF order used for sampling, and serialisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import (
    MalformedCircuit,
    NegativeProbability,
    NonFiniteAmplitude,
    NotTerminal,
    TerminalModeReuse,
    UnknownMode,
    WrongDirection,
)

PATH = "path"
DETECTOR = "detector"
SINK = "sink"
MODE_KINDS = (PATH, DETECTOR, SINK)

NORM_TOL = 1e-12


@dataclass(frozen=True)
class Mode:
    name: str
    kind: str = PATH

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ValueError(f"mode kind must be one of {MODE_KINDS}, got {self.kind!r}")
        if not self.name:
            raise ValueError("mode name must be non-empty")

    @property
    def terminal(self) -> bool:
        return self.kind != PATH


@dataclass(frozen=True)
class Registry:
    """Ordered, name-unique collection of modes."""

    modes: tuple[Mode, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        index = {}
        for i, m in enumerate(modes):
            if m.name in index:
                raise ValueError(f"duplicate mode name {m.name!r}")
            index[m.name] = i
        object.__setattr__(self, "_index", index)

    @classmethod
    def of(cls, *specs: Union[Mode, str, tuple[str, str]]) -> "Registry":
        """Build from ``Mode`` objects, bare names (path modes) or ``(name, kind)``."""
        modes = []
        for s in specs:
            if isinstance(s, Mode):
                modes.append(s)
            elif isinstance(s, str):
                modes.append(Mode(s))
            else:
                modes.append(Mode(*s))
        return cls(tuple(modes))

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __contains__(self, name) -> bool:
        return name in self._index

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.modes)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownMode(f"mode {name!r} is not registered") from None

    def mode(self, name: str) -> Mode:
        return self.modes[self.index(name)]

    def terminals(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.modes if m.terminal)


@dataclass(frozen=True, eq=False)
class StateVector:
    registry: Registry
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128)
        if amps.shape != (len(self.registry),):
            raise ValueError(f"expected {len(self.registry)} amplitudes, got shape {amps.shape}")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, registry: Registry, name: str, amp: complex = 1.0) -> "StateVector":
        amps = np.zeros(len(registry), dtype=np.complex128)
        amps[registry.index(name)] = amp
        return cls(registry, amps)

    @classmethod
    def from_dict(cls, registry: Registry, amps: Mapping[str, complex]) -> "StateVector":
        vec = np.zeros(len(registry), dtype=np.complex128)
        for name, a in amps.items():
            vec[registry.index(name)] = a
        return cls(registry, vec)

    def amp(self, name: str) -> complex:
        return complex(self.amps[self.registry.index(name)])

    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amps, other.amps))

    def probabilities(self) -> dict[str, float]:
        p = np.abs(self.amps) ** 2
        return {name: float(x) for name, x in zip(self.registry.names, p)}

    def as_dict(self) -> dict[str, complex]:
        return {name: complex(a) for name, a in zip(self.registry.names, self.amps)}

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.registry == other.registry and np.array_equal(self.amps, other.amps)

    __hash__ = None


# ---------------------------------------------------------------- elements
#
# Each element acts in place on the last axis of an amplitude array, so the
# same code evolves a single state or a stack of branch vectors.


@dataclass(frozen=True)
class Rotation:
    """Real two-mode rotation: ``u -> cos(theta) u + sin(theta) v``,
    ``v -> -sin(theta) u + cos(theta) v``."""

    u: str
    v: str
    theta: float

    def __post_init__(self):
        if self.u == self.v:
            raise ValueError("rotation needs two distinct modes")

    def modes(self) -> tuple[str, ...]:
        return (self.u, self.v)

    def inputs(self) -> tuple[str, ...]:
        return (self.u, self.v)

    def adjoint(self) -> "Rotation":
        return Rotation(self.u, self.v, -self.theta)

    def act(self, amps: np.ndarray, registry: Registry) -> None:
        iu, iv = registry.index(self.u), registry.index(self.v)
        if not math.isfinite(self.theta):
            raise NonFiniteAmplitude(f"rotation angle {self.theta!r} is not finite")
        c, s = math.cos(self.theta), math.sin(self.theta)
        au = amps[..., iu].copy()
        av = amps[..., iv].copy()
        amps[..., iu] = c * au - s * av
        amps[..., iv] = s * au + c * av


@dataclass(frozen=True)
class Route:
    """Permutation of modes.

    ``mapping`` sends each key's amplitude to its value. It may be partial:
    targets that are not themselves keys hand their (normally empty) content
    back to the vacated keys, pairing both lists in mapping order, which
    closes the map into a permutation.
    """

    mapping: tuple[tuple[str, str], ...]

    def __init__(self, mapping: Union[Mapping[str, str], Sequence[tuple[str, str]]]):
        pairs = tuple(mapping.items()) if isinstance(mapping, Mapping) else tuple(
            (str(a), str(b)) for a, b in mapping
        )
        keys = [k for k, _ in pairs]
        vals = [v for _, v in pairs]
        if len(set(keys)) != len(keys) or len(set(vals)) != len(vals):
            raise ValueError("route mapping must be injective")
        object.__setattr__(self, "mapping", pairs)

    def permutation(self) -> tuple[tuple[str, str], ...]:
        keys = [k for k, _ in self.mapping]
        vals = [v for _, v in self.mapping]
        key_set, val_set = set(keys), set(vals)
        vacated = [k for k in keys if k not in val_set]
        extra = [v for v in vals if v not in key_set]
        return tuple(p for p in self.mapping if p[0] != p[1]) + tuple(zip(extra, vacated))

    def modes(self) -> tuple[str, ...]:
        seen = dict.fromkeys(k for pair in self.mapping for k in pair)
        return tuple(seen)

    def inputs(self) -> tuple[str, ...]:
        return tuple(src for src, _ in self.permutation())

    def adjoint(self) -> "Route":
        return Route(tuple((dst, src) for src, dst in self.permutation()))

    def act(self, amps: np.ndarray, registry: Registry) -> None:
        perm = self.permutation()
        if not perm:
            return
        src = [registry.index(s) for s, _ in perm]
        dst = [registry.index(d) for _, d in perm]
        amps[..., dst] = amps[..., src]


@dataclass(frozen=True)
class Absorb:
    """Move all amplitude from ``source`` into the empty sink mode ``sink``.

    Implemented as a swap of the two modes, so it is unitary and self-adjoint.
    """

    source: str
    sink: str

    def __post_init__(self):
        if self.source == self.sink:
            raise ValueError("absorber needs distinct source and sink")

    def modes(self) -> tuple[str, ...]:
        return (self.source, self.sink)

    def inputs(self) -> tuple[str, ...]:
        return (self.source, self.sink)

    def adjoint(self) -> "Absorb":
        return self

    def act(self, amps: np.ndarray, registry: Registry) -> None:
        i, j = registry.index(self.source), registry.index(self.sink)
        amps[..., [i, j]] = amps[..., [j, i]]


Element = Union[Rotation, Route, Absorb]


def _check_element(registry: Registry, e: Element) -> None:
    for name in e.modes():
        registry.index(name)
    if isinstance(e, Absorb) and registry.mode(e.sink).kind != SINK:
        raise MalformedCircuit(f"absorber target {e.sink!r} is not a sink mode")


def _check_terminal_inputs(registry: Registry, amps: np.ndarray, e: Element) -> None:
    for name in e.inputs():
        i = registry.index(name)
        if registry.modes[i].terminal and amps[i] != 0:
            raise TerminalModeReuse(f"terminal mode {name!r} already holds amplitude")


def _check_finite(amps: np.ndarray) -> None:
    if not np.all(np.isfinite(amps)):
        raise NonFiniteAmplitude("non-finite amplitude produced")


def apply_element(state: StateVector, e: Element) -> StateVector:
    """Return ``state`` transformed by a single element."""
    _check_element(state.registry, e)
    _check_terminal_inputs(state.registry, state.amps, e)
    amps = state.amps.copy()
    e.act(amps, state.registry)
    _check_finite(amps)
    return StateVector(state.registry, amps)


# ---------------------------------------------------------------- circuits


@dataclass(frozen=True)
class Circuit:
    """Timestep-ordered elements over a mode registry.

    Elements sharing a step must touch disjoint modes. ``step_labels`` is an
    optional tag per step that builders use to mark protocol stages.
    """

    registry: Registry
    steps: tuple[tuple[Element, ...], ...]
    source: str
    terminals: tuple[str, ...] = ()
    step_labels: tuple[str, ...] = ()

    def __post_init__(self):
        steps = tuple(tuple(s) for s in self.steps)
        object.__setattr__(self, "steps", steps)
        terminals = tuple(self.terminals) or self.registry.terminals()
        object.__setattr__(self, "terminals", terminals)
        labels = tuple(self.step_labels) or tuple(f"step_{i + 1}" for i in range(len(steps)))
        if len(labels) != len(steps):
            raise MalformedCircuit("one label per step required")
        object.__setattr__(self, "step_labels", labels)

        if self.registry.mode(self.source).terminal:
            raise MalformedCircuit(f"source {self.source!r} must be a path mode")
        for t in terminals:
            if not self.registry.mode(t).terminal:
                raise MalformedCircuit(f"{t!r} listed as terminal but is a path mode")
        for k, step in enumerate(steps):
            used: set[str] = set()
            for e in step:
                _check_element(self.registry, e)
                touched = set(e.modes())
                if touched & used:
                    raise MalformedCircuit(f"step {k + 1}: elements share modes {sorted(touched & used)}")
                used |= touched

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def apply_step(self, amps: np.ndarray, k: int) -> np.ndarray:
        """Apply step ``k`` (0-based) to a copy of ``amps`` (any leading batch shape)."""
        out = np.array(amps, dtype=np.complex128, copy=True)
        for e in self.steps[k]:
            e.act(out, self.registry)
        return out

    def apply_step_adjoint(self, amps: np.ndarray, k: int) -> np.ndarray:
        out = np.array(amps, dtype=np.complex128, copy=True)
        for e in reversed(self.steps[k]):
            e.adjoint().act(out, self.registry)
        return out

    def propagate(self, amps: np.ndarray, start: int, stop: int) -> np.ndarray:
        """Evolve amplitudes from timestep boundary ``start`` to ``stop``."""
        out = np.array(amps, dtype=np.complex128, copy=True)
        for k in range(start, stop):
            for e in self.steps[k]:
                e.act(out, self.registry)
        return out

    def path_mask(self) -> np.ndarray:
        return np.array([not m.terminal for m in self.registry])


@dataclass(frozen=True)
class EvolutionTrace:
    """States at every timestep boundary (``n_steps + 1`` of them)."""

    states: tuple[StateVector, ...]
    direction: str

    def __post_init__(self):
        if self.direction not in ("forward", "backward"):
            raise ValueError("direction must be 'forward' or 'backward'")
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, t: int) -> StateVector:
        return self.states[t]

    @property
    def final(self) -> StateVector:
        return self.states[-1]

    def amplitudes(self) -> np.ndarray:
        """Array of shape ``(n_boundaries, n_modes)``."""
        return np.stack([s.amps for s in self.states])


def _residual_on_paths(circuit: Circuit, amps: np.ndarray) -> float:
    mask = circuit.path_mask()
    return float(np.sum(np.abs(amps[mask]) ** 2))


def evolve_forward(circuit: Circuit, source_amp: complex = 1.0) -> EvolutionTrace:
    reg = circuit.registry
    state = StateVector.basis(reg, circuit.source, source_amp)
    states = [state]
    amps = state.amps
    for k, step in enumerate(circuit.steps):
        for e in step:
            _check_terminal_inputs(reg, amps, e)
        amps = circuit.apply_step(amps, k)
        _check_finite(amps)
        states.append(StateVector(reg, amps))
    leftover = _residual_on_paths(circuit, states[-1].amps)
    # a zero-step circuit is the trivial trace of its source
    if circuit.n_steps and leftover > NORM_TOL:
        raise MalformedCircuit(f"probability {leftover:.3e} left on non-terminal modes after the last step")
    return EvolutionTrace(tuple(states), "forward")


def evolve_backward(circuit: Circuit, postselect: str) -> EvolutionTrace:
    """Adjoint evolution of the post-selected basis co-state back to ``t = 0``.

    For every boundary ``t`` the overlap ``<backward[t]|forward[t]>`` equals
    the forward amplitude on ``postselect``.
    """
    reg = circuit.registry
    if not reg.mode(postselect).terminal or postselect not in circuit.terminals:
        raise NotTerminal(f"post-selection mode {postselect!r} is not a terminal of the circuit")
    amps = StateVector.basis(reg, postselect).amps
    states = [StateVector(reg, amps)]
    for k in range(circuit.n_steps - 1, -1, -1):
        amps = circuit.apply_step_adjoint(amps, k)
        _check_finite(amps)
        states.append(StateVector(reg, amps))
    states.reverse()
    return EvolutionTrace(tuple(states), "backward")


def outcome_distribution(trace: EvolutionTrace) -> dict[str, float]:
    """Born-rule probabilities on terminal modes, in registry order."""
    if trace.direction != "forward":
        raise WrongDirection("outcome distributions come from forward traces")
    final = trace.final
    reg = final.registry
    leftover = sum(abs(final.amps[i]) ** 2 for i, m in enumerate(reg) if not m.terminal)
    if leftover > NORM_TOL:
        raise MalformedCircuit(f"probability {leftover:.3e} left on non-terminal modes")
    return {m.name: float(abs(a) ** 2) for m, a in zip(reg, final.amps) if m.terminal}


# ---------------------------------------------------------------- sampling


def _cdf(probs: Sequence[float]) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("need a non-empty 1-d probability vector")
    if np.any(p < -1e-15) or not np.all(np.isfinite(p)):
        raise NegativeProbability(f"invalid probabilities {p.tolist()}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise NegativeProbability(f"probabilities sum to {total!r}, not 1")
    cdf = np.cumsum(p / total)
    # last non-empty bucket closes at exactly 1 so draws in [0, 1) always land
    cdf[np.flatnonzero(p)[-1]:] = 1.0
    return cdf


def sample_indices(probs: Sequence[float], rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorised inverse-CDF draws; index ``i`` refers to ``probs[i]``."""
    cdf = _cdf(probs)
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right")


def sample_outcome(dist: Mapping[str, float], rng: np.random.Generator) -> str:
    """Single inverse-CDF draw over ``dist`` in its iteration order.

    One uniform double is consumed per call, so a seeded generator gives the
    same outcome sequence for the same sequence of calls.
    """
    keys = list(dist)
    cdf = _cdf([dist[k] for k in keys])
    u = rng.random()
    return keys[int(np.searchsorted(cdf, u, side="right"))]
