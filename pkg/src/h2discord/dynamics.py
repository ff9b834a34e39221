"""Density-matrix evolution by an exact-unitary / Euler-dissipator split step.

Each step conjugates the state with the spectrally computed propagator
exp(-i H dt / hbar) and then adds the dissipator increment L(rho) dt.
The dissipator is exactly trace-free, so trace drift is round-off only
and is monitored rather than renormalized away.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotDensityMatrix, NotHermitian, PositivityLost, \
    SpaceMismatch, StateMissing
from .operators import JumpChannel, ModelParams, OperatorMatrix
from .statespace import INITIAL_COMPONENTS, StateSpace


@dataclass
class DensityMatrix:
    mat: np.ndarray
    space: StateSpace

    @classmethod
    def from_pure(cls, amplitudes: np.ndarray, space) -> "DensityMatrix":
        v = np.asarray(amplitudes, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), space)

    def trace(self) -> float:
        return float(self.mat.trace().real)

    def purity(self) -> float:
        return float((self.mat @ self.mat).trace().real)

    def herm_defect(self) -> float:
        return float(np.abs(self.mat - self.mat.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.mat)[0])

    def validate(self, trace_tol: float = 1e-9, herm_tol: float = 1e-12,
                 eig_floor: float = -1e-8):
        if abs(self.trace() - 1.0) > trace_tol:
            raise NotDensityMatrix(f"trace deviates by {self.trace() - 1.0:g}")
        if self.herm_defect() > herm_tol:
            raise NotDensityMatrix(f"hermiticity defect {self.herm_defect():g}")
        low = self.min_eigenvalue()
        if low < eig_floor:
            raise NotDensityMatrix(f"negative eigenvalue {low:g}")
        return self


@dataclass
class SimConfig:
    dt: float
    t_end: float
    record_stride: int = 1
    renormalize_trace: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least one step")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: list
    space: StateSpace
    params: Optional[ModelParams] = None

    def __len__(self):
        return len(self.times)

    def density(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.snapshots[i], self.space)

    def to_csv(self, path):
        """Full snapshot dump: t, re(rho_ij) row-major, im(rho_ij) row-major."""
        n = self.space.size
        header = ["t"]
        header += [f"re_rho_{i}_{j}" for i in range(n) for j in range(n)]
        header += [f"im_rho_{i}_{j}" for i in range(n) for j in range(n)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for t, rho in zip(self.times, self.snapshots):
                row = [repr(float(t))]
                row += [repr(float(x)) for x in rho.real.ravel()]
                row += [repr(float(x)) for x in rho.imag.ravel()]
                fh.write(",".join(row) + "\n")


def initial_state(space: StateSpace) -> DensityMatrix:
    """Equal-weight four-component superposition with alternating signs."""
    signs = (1.0, -1.0, 1.0, -1.0)
    v = np.zeros(space.size, dtype=complex)
    for state, sign in zip(INITIAL_COMPONENTS, signs):
        idx = space.get_index(state)
        if idx is None:
            raise StateMissing(
                f"space lacks initial component {state.to_string()}")
        v[idx] = 0.5 * sign
    return DensityMatrix(np.outer(v, v.conj()), space)


def make_propagator(H: OperatorMatrix, dt: float,
                    hbar: float = 1.0) -> OperatorMatrix:
    """exp(-i H dt / hbar) via spectral decomposition of Hermitian H."""
    mat = H.mat
    scale = max(1.0, float(np.abs(mat).max()))
    if np.abs(mat - mat.conj().T).max() > 1e-12 * scale:
        raise NotHermitian("propagator needs a Hermitian generator")
    evals, vecs = np.linalg.eigh(mat)
    phases = np.exp(-1j * evals * (dt / hbar))
    u = (vecs * phases) @ vecs.conj().T
    return OperatorMatrix(u, H.space)


def _lindblad_terms(channels):
    terms = []
    for ch in channels:
        a = ch.op.mat
        terms.append((ch.rate, a, a.conj().T, a.conj().T @ a))
    return terms


def _apply_dissipator(rho, terms):
    out = np.zeros_like(rho)
    for rate, a, adag, adag_a in terms:
        out += rate * (a @ rho @ adag
                       - 0.5 * (adag_a @ rho + rho @ adag_a))
    return out


def dissipator(rho: DensityMatrix, channels) -> np.ndarray:
    """Sum of the sandwich-minus-anticommutator increments, one per channel."""
    for ch in channels:
        if ch.op.space is not rho.space:
            raise SpaceMismatch("channel bound to a different space")
    return _apply_dissipator(rho.mat, _lindblad_terms(channels))


# Above this dimension the one-step superoperator (dim^2 x dim^2) is
# not worth building; below this stride the plain loop is fast enough.
_SUPEROP_MAX_DIM = 48
_SUPEROP_MIN_STRIDE = 16


def _step_superoperator(u, terms, dt):
    """One split step as a matrix on row-major vec(rho).

    vec(A rho B) = (A kron B^T) vec(rho), so the unitary conjugation is
    kron(U, conj(U)) and each dissipator term maps accordingly.  The
    composed map is identical to performing the two substeps.
    """
    dim = u.shape[0]
    m_unitary = np.kron(u, u.conj())
    m_diss = np.zeros((dim * dim, dim * dim), dtype=complex)
    eye = np.eye(dim)
    for rate, a, adag, adag_a in terms:
        m_diss += rate * (np.kron(a, a.conj())
                          - 0.5 * np.kron(adag_a, eye)
                          - 0.5 * np.kron(eye, adag_a.T))
    return (np.eye(dim * dim) + dt * m_diss) @ m_unitary


def _fix_trace_preservation(m, dim):
    """Remove the round-off trace-preservation defect of a step map.

    The exact split-step map preserves the trace; float matrix products
    lose that at the 1e-16 level, which compounds over long composed
    hops.  A rank-1 correction restores tr(M rho) = tr(rho) exactly.
    """
    id_vec = np.eye(dim, dtype=complex).reshape(-1)
    defect = id_vec @ m - id_vec
    return m - np.outer(id_vec / dim, defect)


def _record_points(n_steps, stride):
    """Step indices to record: every stride-th step plus the endpoint."""
    points = list(range(stride, n_steps + 1, stride))
    if not points or points[-1] != n_steps:
        points.append(n_steps)
    return points


def evolve(rho0: DensityMatrix, H: OperatorMatrix, channels,
           cfg: SimConfig, hbar: float = 1.0) -> Trajectory:
    """Propagate rho0 and record every record_stride steps plus the endpoint.

    The per-step map is fixed, so between recordings the steps are
    composed up front: closed runs hop with the exact spectral
    propagator for the whole interval, dissipative runs on small spaces
    apply a precomputed power of the one-step superoperator, and larger
    spaces fall back to stepping literally.
    """
    if rho0.space is not H.space:
        raise SpaceMismatch("state and Hamiltonian bound to different spaces")
    for ch in channels:
        if ch.op.space is not rho0.space:
            raise SpaceMismatch("channel bound to a different space")

    terms = _lindblad_terms(channels)
    n_steps = max(1, int(round(cfg.t_end / cfg.dt)))
    record_at = _record_points(n_steps, cfg.record_stride)
    dim = rho0.space.size

    rho = rho0.mat.astype(complex).copy()
    times = [0.0]
    snapshots = [rho.copy()]

    def record(step, rho):
        rho = 0.5 * (rho + rho.conj().T)
        if cfg.renormalize_trace:
            rho = rho / rho.trace().real
        low = float(np.linalg.eigvalsh(rho)[0])
        if low < -1e-6:
            raise PositivityLost(
                f"eigenvalue {low:g} at step {step}; reduce dt")
        times.append(step * cfg.dt)
        snapshots.append(rho.copy())
        return rho

    if not terms:
        # pure unitary: hop exactly over each recording interval
        hop_cache = {}
        previous = 0
        for step in record_at:
            hop = step - previous
            if hop not in hop_cache:
                hop_cache[hop] = make_propagator(H, cfg.dt * hop, hbar).mat
            u = hop_cache[hop]
            rho = u @ rho @ u.conj().T
            rho = record(step, rho)
            previous = step
    elif dim <= _SUPEROP_MAX_DIM and cfg.record_stride >= _SUPEROP_MIN_STRIDE:
        u = make_propagator(H, cfg.dt, hbar).mat
        m_step = _fix_trace_preservation(
            _step_superoperator(u, terms, cfg.dt), dim)
        power_cache = {}
        vec = rho.reshape(-1)
        previous = 0
        for step in record_at:
            hop = step - previous
            if hop not in power_cache:
                power_cache[hop] = _fix_trace_preservation(
                    np.linalg.matrix_power(m_step, hop), dim)
            vec = power_cache[hop] @ vec
            rho = record(step, vec.reshape(dim, dim))
            vec = rho.reshape(-1)
            previous = step
    else:
        u = make_propagator(H, cfg.dt, hbar).mat
        udag = u.conj().T
        record_set = set(record_at)
        for step in range(1, n_steps + 1):
            rho = u @ rho @ udag
            rho = rho + cfg.dt * _apply_dissipator(rho, terms)
            rho = 0.5 * (rho + rho.conj().T)
            if step in record_set:
                rho = record(step, rho)
    return Trajectory(np.array(times), snapshots, rho0.space)
