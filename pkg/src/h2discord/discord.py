"""Partial traces, entropies and measurement-optimized quantum discord.

The observed subsystem A is the photon pair (p1, p2); everything else
is the matter subsystem B.  States over a reduced StateSpace are first
embedded into the product of the full 4-dimensional A-label space with
the B-labels actually present, because a projective measurement on A
can push weight onto (A, B) combinations the reduced basis omits.

The measurement family is the product of two single-qubit bases

    v0 = cos(theta)|0> + sin(theta) e^{+i phi}|1>
    v1 = sin(theta) e^{-i phi}|0> - cos(theta)|1>

(and the primed pair for the second qubit), which is orthonormal for
every angle choice and reduces to the real-valued family at phi = 0.
Classical correlation maximizes over a deterministic coarse grid of
the free angles followed by coordinate-descent refinement; ties within
1e-9 nats resolve to the lexicographically smallest angle tuple, so
results are reproducible bit for bit.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import DensityMatrix
from .errors import AngleOutOfRange, NotDensityMatrix, SpaceMismatch

EPS_EIGENVALUE = 1e-12  # floor below which spectrum weight is treated as 0
EPS_OUTCOME = 1e-12     # outcomes rarer than this contribute nothing
TIE_TOL = 1e-9
_CHUNK = 8192

A_LABELS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class LabelSpace:
    """Index space of a subsystem marginal (photon pair or matter labels)."""
    kind: str
    labels: tuple


A_LABEL_SPACE = LabelSpace("photon-pair", A_LABELS)


def _b_label_space(space) -> LabelSpace:
    return LabelSpace("matter", tuple(space.b_labels))


def _embedded(rho: DensityMatrix) -> np.ndarray:
    """View rho as a (4, nB, 4, nB) array over A-label x present B-labels."""
    space = rho.space
    a = np.asarray(space.a_index)
    b = np.asarray(space.b_index)
    nb = len(space.b_labels)
    rho4 = np.zeros((4, nb, 4, nb), dtype=complex)
    rho4[a[:, None], b[:, None], a[None, :], b[None, :]] = rho.mat
    return rho4


def _entropy_from_eigs(w: np.ndarray) -> float:
    w = w[w > EPS_EIGENVALUE]
    if w.size == 0:
        return 0.0
    return max(0.0, float(-(w * np.log(w)).sum()))


def _entropy_psd(mat: np.ndarray) -> float:
    return _entropy_from_eigs(np.linalg.eigvalsh(mat))


def partial_trace_B(rho: DensityMatrix) -> DensityMatrix:
    """Trace out the matter labels; always a 4x4 photon-pair state."""
    reduced = np.einsum("abcb->ac", _embedded(rho))
    return DensityMatrix(reduced, A_LABEL_SPACE)


def partial_trace_A(rho: DensityMatrix) -> DensityMatrix:
    """Trace out the photon pair; indexed by the B-labels present."""
    reduced = np.einsum("abad->bd", _embedded(rho))
    return DensityMatrix(reduced, _b_label_space(rho.space))


def von_neumann_entropy(rho, trace_tol: float = 1e-6,
                        eig_floor: float = -1e-6) -> float:
    """Entropy -tr(rho ln rho) in nats; clamped at zero from below."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    scale = max(1.0, float(np.abs(mat).max()))
    if np.abs(mat - mat.conj().T).max() > 1e-9 * scale:
        raise NotDensityMatrix("matrix is not Hermitian")
    w = np.linalg.eigvalsh(mat)
    if abs(w.sum() - 1.0) > trace_tol:
        raise NotDensityMatrix(f"trace deviates by {w.sum() - 1.0:g}")
    if w[0] < eig_floor:
        raise NotDensityMatrix(f"negative eigenvalue {w[0]:g}")
    return _entropy_from_eigs(w)


def mutual_information(rho_AB: DensityMatrix) -> float:
    """S(A) + S(B) - S(AB) of the joint state."""
    rho4 = _embedded(rho_AB)
    s_a = _entropy_psd(np.einsum("abcb->ac", rho4))
    s_b = _entropy_psd(np.einsum("abad->bd", rho4))
    s_ab = von_neumann_entropy(rho_AB)
    return s_a + s_b - s_ab


@dataclass(frozen=True)
class MeasurementConfig:
    """Angles of one product measurement; tie flags override fields."""

    theta: float
    theta_prime: float
    phi: float = 0.0
    phi_prime: float = 0.0
    tie_thetas: bool = False
    tie_phis: bool = False
    zero_phases: bool = False

    def resolved(self) -> tuple:
        theta = self.theta
        theta_p = theta if self.tie_thetas else self.theta_prime
        if self.zero_phases:
            return theta, theta_p, 0.0, 0.0
        phi = self.phi
        phi_p = phi if self.tie_phis else self.phi_prime
        return theta, theta_p, phi, phi_p


@dataclass
class ProjectorSet:
    projectors: list
    source_config: MeasurementConfig


def _qubit_vectors(theta: float, phi: float):
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    v0 = np.array([c, s * e], dtype=complex)
    v1 = np.array([s * e.conjugate(), -c], dtype=complex)
    return v0, v1


def _basis_vectors(theta, theta_p, phi, phi_p):
    """The four two-qubit basis vectors, outcome order 00', 10', 01', 11'."""
    v0, v1 = _qubit_vectors(theta, phi)
    w0, w1 = _qubit_vectors(theta_p, phi_p)
    return np.stack([np.kron(v0, w0), np.kron(v1, w0),
                     np.kron(v0, w1), np.kron(v1, w1)])


def projector_set(config: MeasurementConfig) -> ProjectorSet:
    """Four rank-1 projectors from the product single-qubit bases."""
    theta, theta_p, phi, phi_p = config.resolved()
    for name, value, hi in (("theta", theta, np.pi / 2),
                            ("theta_prime", theta_p, np.pi / 2),
                            ("phi", phi, 2 * np.pi),
                            ("phi_prime", phi_p, 2 * np.pi)):
        if not -1e-12 <= value <= hi + 1e-12:
            raise AngleOutOfRange(f"{name}={value:g} outside [0, {hi:g}]")
    basis = _basis_vectors(theta, theta_p, phi, phi_p)
    projectors = [np.outer(b, b.conj()) for b in basis]
    return ProjectorSet(projectors, config)


def measured_conditional_entropy(rho_AB: DensityMatrix, pset: ProjectorSet):
    """Average post-measurement entropy of B.

    Returns (value, outcome probabilities, post-measurement B states);
    outcomes below the probability floor contribute nothing and their
    post state is None.
    """
    if isinstance(rho_AB.space, LabelSpace):
        raise SpaceMismatch("need a joint state over a StateSpace")
    rho4 = _embedded(rho_AB)
    b_space = _b_label_space(rho_AB.space)
    value = 0.0
    probs = []
    posts = []
    for proj in pset.projectors:
        sandwich = np.einsum("ae,ebfd,cf->abcd", proj, rho4, proj.conj())
        p = float(np.einsum("abab->", sandwich).real)
        probs.append(p)
        if p > EPS_OUTCOME:
            post = np.einsum("abad->bd", sandwich) / p
            posts.append(DensityMatrix(post, b_space))
            value += p * _entropy_psd(post)
        else:
            posts.append(None)
    return value, tuple(probs), posts


@dataclass(frozen=True)
class SearchConfig:
    """Grid-plus-refinement search over the measurement family."""

    theta_points: int = 17
    phi_points: int = 17
    tie_thetas: bool = False
    tie_phis: bool = False
    zero_phases: bool = False
    refine: bool = True
    refine_tol: float = 1e-4


_ANGLE_BOUNDS = {"theta": (0.0, np.pi / 2), "theta_prime": (0.0, np.pi / 2),
                 "phi": (0.0, 2 * np.pi), "phi_prime": (0.0, 2 * np.pi)}


def _free_axes(search: SearchConfig):
    thetas = np.linspace(0.0, np.pi / 2, search.theta_points)
    axes = [("theta", thetas)]
    if not search.tie_thetas:
        axes.append(("theta_prime", thetas))
    if not search.zero_phases:
        phis = np.linspace(0.0, 2 * np.pi, search.phi_points)
        axes.append(("phi", phis))
        if not search.tie_phis:
            axes.append(("phi_prime", phis))
    return axes


def _resolve_free(free: dict, search: SearchConfig):
    theta = free["theta"]
    theta_p = theta if search.tie_thetas else free["theta_prime"]
    if search.zero_phases:
        zero = np.zeros_like(theta)
        return theta, theta_p, zero, zero
    phi = free["phi"]
    phi_p = phi if search.tie_phis else free["phi_prime"]
    return theta, theta_p, phi, phi_p


class _Evaluator:
    """Batched conditional-entropy evaluation for one embedded state."""

    def __init__(self, rho4: np.ndarray):
        self.rho4 = rho4
        self.nb = rho4.shape[1]

    def _outcome_vectors(self, theta, theta_p, phi, phi_p):
        c, s = np.cos(theta), np.sin(theta)
        e = np.exp(1j * phi)
        v0 = np.stack([c + 0j, s * e], axis=-1)
        v1 = np.stack([s * e.conj(), -c + 0j], axis=-1)
        cp, sp = np.cos(theta_p), np.sin(theta_p)
        ep = np.exp(1j * phi_p)
        w0 = np.stack([cp + 0j, sp * ep], axis=-1)
        w1 = np.stack([sp * ep.conj(), -cp + 0j], axis=-1)

        def pair(x, y):
            return np.einsum("gi,gj->gij", x, y).reshape(-1, 4)

        return np.stack([pair(v0, w0), pair(v1, w0),
                         pair(v0, w1), pair(v1, w1)], axis=1)

    def conditional_entropies(self, theta, theta_p, phi, phi_p) -> np.ndarray:
        """Sum_k p_k S(rho_k) for a batch of angle tuples."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        theta_p = np.broadcast_to(theta_p, theta.shape)
        phi = np.broadcast_to(phi, theta.shape)
        phi_p = np.broadcast_to(phi_p, theta.shape)
        vectors = self._outcome_vectors(theta, theta_p, phi, phi_p)
        flat = vectors.reshape(-1, 4)
        contrib = np.empty(flat.shape[0])
        for start in range(0, flat.shape[0], _CHUNK):
            chunk = flat[start:start + _CHUNK]
            m = np.einsum("ga,abcd,gc->gbd", chunk.conj(), self.rho4,
                          chunk, optimize=True)
            w = np.linalg.eigvalsh(m)
            p = w.sum(axis=-1)
            safe_p = np.where(p > EPS_OUTCOME, p, 1.0)
            r = w / safe_p[:, None]
            r = np.where(r > EPS_EIGENVALUE, r, 1.0)
            ent = -(r * np.log(r)).sum(axis=-1)
            contrib[start:start + _CHUNK] = np.where(p > EPS_OUTCOME,
                                                     p * ent, 0.0)
        return contrib.reshape(len(theta), 4).sum(axis=-1)

    def value(self, angles4) -> float:
        theta, theta_p, phi, phi_p = angles4
        return float(self.conditional_entropies(
            np.array([theta]), np.array([theta_p]),
            np.array([phi]), np.array([phi_p]))[0])

    def probabilities(self, angles4) -> np.ndarray:
        vectors = self._outcome_vectors(*[np.array([a]) for a in angles4])[0]
        m = np.einsum("ga,abcd,gc->gbd", vectors.conj(), self.rho4, vectors)
        return np.einsum("gbb->g", m).real


def _grid_minimum(ev: _Evaluator, search: SearchConfig):
    axes = _free_axes(search)
    grids = np.meshgrid(*[values for _, values in axes], indexing="ij")
    flat = {name: grid.ravel() for (name, _), grid in zip(axes, grids)}
    values = ev.conditional_entropies(*_resolve_free(flat, search))
    # lexicographic tie-break: the ij-ordered grid enumerates angle
    # tuples in ascending order, so the first near-minimal index wins
    best = int(np.nonzero(values <= values.min() + TIE_TOL)[0][0])
    free = {name: float(flat[name][best]) for name, _ in axes}
    spacing = {name: float(vals[1] - vals[0]) if len(vals) > 1 else 0.1
               for name, vals in axes}
    return free, spacing, float(values[best])


def _refine(ev: _Evaluator, search: SearchConfig, free: dict,
            spacing: dict, f_best: float):
    names = list(free)
    for _ in range(12):
        moved = 0.0
        for name in names:
            lo_bound, hi_bound = _ANGLE_BOUNDS[name]
            lo = max(lo_bound, free[name] - spacing[name])
            hi = min(hi_bound, free[name] + spacing[name])
            if hi - lo <= search.refine_tol * 1e-3:
                continue

            def objective(x, _name=name):
                trial = dict(free)
                trial[_name] = x
                return ev.value(_resolve_scalar(trial, search))

            res = minimize_scalar(objective, bounds=(lo, hi),
                                  method="bounded",
                                  options={"xatol": search.refine_tol / 4})
            # ignore float-noise "improvements" so degenerate landscapes
            # (pure states) keep the grid tie-break angles
            if res.fun < f_best - 1e-12:
                moved = max(moved, abs(float(res.x) - free[name]))
                free[name] = float(res.x)
                f_best = float(res.fun)
        if moved < search.refine_tol:
            break
    return free, f_best


def _resolve_scalar(free: dict, search: SearchConfig):
    theta = free["theta"]
    theta_p = theta if search.tie_thetas else free["theta_prime"]
    if search.zero_phases:
        return theta, theta_p, 0.0, 0.0
    phi = free["phi"]
    phi_p = phi if search.tie_phis else free["phi_prime"]
    return theta, theta_p, phi, phi_p


def _search_minimum(rho4: np.ndarray, search: SearchConfig):
    ev = _Evaluator(rho4)
    free, spacing, f_best = _grid_minimum(ev, search)
    if search.refine:
        free, f_best = _refine(ev, search, free, spacing, f_best)
    angles = _resolve_scalar(free, search)
    value = ev.value(angles)
    probs = ev.probabilities(angles)
    config = MeasurementConfig(theta=angles[0], theta_prime=angles[1],
                               phi=angles[2], phi_prime=angles[3],
                               tie_thetas=search.tie_thetas,
                               tie_phis=search.tie_phis,
                               zero_phases=search.zero_phases)
    return value, config, probs


def classical_correlation(rho_AB: DensityMatrix,
                          search: Optional[SearchConfig] = None):
    """Maximized classical correlation J and the optimizing measurement."""
    if search is None:
        search = SearchConfig()
    rho4 = _embedded(rho_AB)
    s_b = _entropy_psd(np.einsum("abad->bd", rho4))
    value, config, _ = _search_minimum(rho4, search)
    return s_b - value, config


@dataclass
class DiscordPoint:
    """Entropies, correlations and the optimizing measurement at one time."""

    t: float
    s_a: float
    s_b: float
    s_ab: float
    mutual_info: float
    classical_corr: float
    discord: float
    argmin_config: MeasurementConfig
    outcome_probs: tuple

    CSV_HEADER = ("t,S_A,S_B,S_AB,I,J,D,"
                  "theta,theta_prime,phi,phi_prime,p0,p1,p2,p3")

    def csv_row(self) -> str:
        angles = self.argmin_config.resolved()
        fields = (self.t, self.s_a, self.s_b, self.s_ab, self.mutual_info,
                  self.classical_corr, self.discord, *angles,
                  *self.outcome_probs)
        return ",".join(repr(float(x)) for x in fields)

    def as_bits(self) -> "DiscordPoint":
        ln2 = np.log(2.0)
        return replace(self, s_a=self.s_a / ln2, s_b=self.s_b / ln2,
                       s_ab=self.s_ab / ln2,
                       mutual_info=self.mutual_info / ln2,
                       classical_corr=self.classical_corr / ln2,
                       discord=self.discord / ln2)

    def check(self):
        if abs(self.discord - (self.mutual_info - self.classical_corr)) > 1e-9:
            raise ValueError("discord is not I - J")
        if self.discord < -1e-9:
            raise ValueError(f"negative discord {self.discord:g}")
        if self.discord > self.s_a + 1e-6:
            raise ValueError("discord exceeds S(A)")
        if self.discord > self.mutual_info + 1e-9:
            raise ValueError("discord exceeds mutual information")
        if abs(sum(self.outcome_probs) - 1.0) > 1e-9:
            raise ValueError("outcome probabilities do not sum to 1")
        return self


def discord(rho_AB: DensityMatrix, search: Optional[SearchConfig] = None,
            t: float = 0.0) -> DiscordPoint:
    """Full discord record for one joint state."""
    if search is None:
        search = SearchConfig()
    rho4 = _embedded(rho_AB)
    s_a = _entropy_psd(np.einsum("abcb->ac", rho4))
    s_b = _entropy_psd(np.einsum("abad->bd", rho4))
    s_ab = _entropy_psd(rho_AB.mat)
    info = s_a + s_b - s_ab
    value, config, probs = _search_minimum(rho4, search)
    j = s_b - value
    return DiscordPoint(t=t, s_a=s_a, s_b=s_b, s_ab=s_ab, mutual_info=info,
                        classical_corr=j, discord=info - j,
                        argmin_config=config, outcome_probs=tuple(probs))
