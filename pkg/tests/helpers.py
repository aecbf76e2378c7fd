import math

import numpy as np

from cfqsim.optics import DETECTOR, PATH, SINK, Absorb, Circuit, Mode, Registry, Rotation, Route


def random_circuit(rng: np.random.Generator, max_modes: int = 64, max_steps: int = 64) -> Circuit:
    """Random well-formed circuit: rotations, routings and absorbers on path
    modes, then every path mode routed to its own detector."""
    n_path = int(rng.integers(2, max_modes // 3 + 1))
    n_sinks = max_modes - 2 * n_path
    n_steps = int(rng.integers(1, max_steps))  # plus the detection step
    paths = [f"p{i}" for i in range(n_path)]
    dets = [f"d{i}" for i in range(n_path)]
    sinks = [f"s{i}" for i in range(n_sinks)]
    registry = Registry(
        tuple(Mode(p, PATH) for p in paths)
        + tuple(Mode(d, DETECTOR) for d in dets)
        + tuple(Mode(s, SINK) for s in sinks)
    )
    free_sinks = list(sinks)
    steps = []
    for _ in range(n_steps):
        order = list(rng.permutation(paths))
        step = []
        while len(order) >= 2:
            kind = rng.integers(0, 4)
            if kind == 0 and free_sinks:
                step.append(Absorb(order.pop(), free_sinks.pop()))
            elif kind == 1 and len(order) >= 3:
                a, b, c = order.pop(), order.pop(), order.pop()
                step.append(Route({a: b, b: c, c: a}))
            elif kind == 2:
                a, b = order.pop(), order.pop()
                step.append(Rotation(a, b, float(rng.uniform(-math.pi, math.pi))))
            else:
                order.pop()
        steps.append(step)
    steps.append([Route(dict(zip(paths, dets)))])
    return Circuit(registry, steps, source=paths[int(rng.integers(n_path))])
