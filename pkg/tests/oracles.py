"""Independent reference computations used by the tests.

Everything here works on explicit dense matrices assembled from the element
definitions, and never calls the package's evolution code.
"""

import itertools
import math

import numpy as np

from cfqsim.optics import Absorb, Rotation, Route


def element_matrix(names, e):
    n = len(names)
    idx = {m: i for i, m in enumerate(names)}
    U = np.eye(n, dtype=complex)
    if isinstance(e, Rotation):
        i, j = idx[e.u], idx[e.v]
        c, s = math.cos(e.theta), math.sin(e.theta)
        U[i, i], U[j, i] = c, s  # column i is the image of |u>
        U[i, j], U[j, j] = -s, c
    elif isinstance(e, Absorb):
        i, j = idx[e.source], idx[e.sink]
        U[[i, j]] = U[[j, i]]
    elif isinstance(e, Route):
        keys = [k for k, _ in e.mapping]
        vals = [v for _, v in e.mapping]
        vacated = [k for k in keys if k not in vals]
        extra = [v for v in vals if v not in keys]
        moves = list(e.mapping) + list(zip(extra, vacated))
        touched = {a for a, _ in moves}
        for a, _ in moves:
            U[:, idx[a]] = 0
        for a, b in moves:
            U[idx[b], idx[a]] = 1
        assert len(touched) == len(moves)
    else:
        raise TypeError(e)
    return U


def step_matrices(circuit):
    names = circuit.registry.names
    mats = []
    for step in circuit.steps:
        U = np.eye(len(names), dtype=complex)
        for e in step:
            U = element_matrix(names, e) @ U
        mats.append(U)
    return mats


def dense_traces(circuit, postselect):
    """Forward states and backward co-states at every boundary via matrix products."""
    names = circuit.registry.names
    mats = step_matrices(circuit)
    psi = np.zeros(len(names), dtype=complex)
    psi[names.index(circuit.source)] = 1
    fwd = [psi]
    for U in mats:
        fwd.append(U @ fwd[-1])
    phi = np.zeros(len(names), dtype=complex)
    phi[names.index(postselect)] = 1
    bwd = [phi]
    for U in reversed(mats):
        bwd.append(U.conj().T @ bwd[-1])
    bwd.reverse()
    return np.array(fwd), np.array(bwd)


def dense_weak_value(circuit, postselect, t, modes):
    """<phi(t)| P |psi(t)> / <phi(t)|psi(t)> for the projector onto ``modes``."""
    fwd, bwd = dense_traces(circuit, postselect)
    names = circuit.registry.names
    P = np.zeros((len(names), len(names)))
    for m in modes:
        P[names.index(m), names.index(m)] = 1
    return (bwd[t].conj() @ P @ fwd[t]) / (bwd[t].conj() @ fwd[t])


def dense_decoherence(circuit, slices, bob_modes, postselect):
    """Brute-force decoherence functional over all 2**k histories."""
    names = circuit.registry.names
    n = len(names)
    mats = step_matrices(circuit)

    def evolve(a, b):
        U = np.eye(n, dtype=complex)
        for k in range(a, b):
            U = mats[k] @ U
        return U

    P_bob = np.diag([1.0 if m in bob_modes else 0.0 for m in names])
    P_alice = np.eye(n) - P_bob
    P_f = np.zeros((n, n))
    P_f[names.index(postselect), names.index(postselect)] = 1
    psi = np.zeros(n, dtype=complex)
    psi[names.index(circuit.source)] = 1

    histories = list(itertools.product(("AliceSide", "BobSide"), repeat=len(slices)))
    branch = []
    for h in histories:
        C = np.eye(n, dtype=complex)
        t = 0
        for label, ts in zip(h, slices):
            C = (P_bob if label == "BobSide" else P_alice) @ evolve(t, ts) @ C
            t = ts
        C = evolve(t, circuit.n_steps) @ C
        branch.append(C @ psi)
    D = np.array([[a.conj() @ P_f @ b for b in branch] for a in branch])
    return histories, D


def binomial_sigma(p, n):
    return math.sqrt(p * (1 - p) / n)


def plugin_mi(joint):
    """Mutual information in bits by direct summation (loops, no vectorisation)."""
    total = sum(sum(r) for r in joint)
    px = [sum(r) / total for r in joint]
    py = [sum(joint[i][j] for i in range(2)) / total for j in range(2)]
    mi = 0.0
    for i in range(2):
        for j in range(2):
            p = joint[i][j] / total
            if p > 0:
                mi += p * math.log2(p / (px[i] * py[j]))
    return mi
