"""Independent reference computations shared by the test modules.

Everything here is deliberately written the slow, explicit way so it
cannot share a bug with the library paths it checks.
"""

import numpy as np

from h2discord.statespace import BasisState


def brute_force_trace_B(rho_mat, space):
    """Photon-pair marginal by explicit summation over matter configs."""
    out = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for a2 in range(4):
            total = 0.0
            for code in range(32):
                b = tuple((code >> shift) & 1 for shift in range(4, -1, -1))
                s1 = space.get_index(BasisState(a >> 1, a & 1, *b))
                s2 = space.get_index(BasisState(a2 >> 1, a2 & 1, *b))
                if s1 is not None and s2 is not None:
                    total += rho_mat[s1, s2]
            out[a, a2] = total
    return out


def brute_force_trace_A(rho_mat, space):
    """Matter marginal by explicit summation over the photon labels."""
    labels = list(space.b_labels)
    out = np.zeros((len(labels), len(labels)), dtype=complex)
    for i, b in enumerate(labels):
        for j, b2 in enumerate(labels):
            total = 0.0
            for a in range(4):
                s1 = space.get_index(BasisState(a >> 1, a & 1, *b))
                s2 = space.get_index(BasisState(a >> 1, a & 1, *b2))
                if s1 is not None and s2 is not None:
                    total += rho_mat[s1, s2]
            out[i, j] = total
    return out


def tied_pattern_projectors(theta):
    """The signed coefficient pattern of the tied-angle, zero-phase family."""
    c, s = np.cos(theta), np.sin(theta)
    c0, c1, c2, c3, c4 = c**4, c**3 * s, c**2 * s**2, c * s**3, s**4
    pi0 = np.array([[c0, c1, c1, c2], [c1, c2, c2, c3],
                    [c1, c2, c2, c3], [c2, c3, c3, c4]])
    pi1 = np.array([[c2, c3, -c1, -c2], [c3, c4, -c2, -c3],
                    [-c1, -c2, c0, c1], [-c2, -c3, c1, c2]])
    pi2 = np.array([[c2, -c1, c3, -c2], [-c1, c0, -c2, c1],
                    [c3, -c2, c4, -c3], [-c2, c1, -c3, c2]])
    pi3 = np.array([[c4, -c3, -c3, c2], [-c3, c2, c2, -c1],
                    [-c3, c2, c2, -c1], [c2, -c1, -c1, c0]])
    return pi0, pi1, pi2, pi3


def random_density(rng, dim):
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    mat = raw @ raw.conj().T
    return mat / mat.trace()


def random_pure(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())
