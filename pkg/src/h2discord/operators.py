"""Ladder and flip operators, the system Hamiltonian and jump channels.

All matrices are dense complex arrays bound to a StateSpace.  Every
mode holds at most one quantum, so raising an occupied label gives the
zero vector.  On a reduced space an image state can be missing: in
table-compat (and full) mode the corresponding amplitude is dropped,
in closure mode this signals an inconsistent space and raises.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ImageOutsideSpace, SpaceMismatch
from .statespace import MODE_CLOSURE, BasisState, GatingPolicy, StateSpace


@dataclass(frozen=True)
class ModelParams:
    """Frequencies, couplings and rates, all angular (rad/s or 1/s).

    Defaults describe the closed reference model: coupling scale 1e7,
    resonant mode frequencies at ten times that scale, no dissipation.
    """

    hbar: float = 1.0
    freq_pht_up: float = 1.0e8
    freq_pht_down: float = 1.0e8
    freq_phn: float = 1.0e8
    g_up: float = 1.0e7
    g_down: float = 1.0e7
    g_bond: float = 5.0e6
    zeta: float = 1.0e7
    gamma_up: float = 0.0
    gamma_down: float = 0.0
    gamma_phn: float = 0.0
    influx_up: float = 0.0
    influx_down: float = 0.0
    influx_phn: float = 0.0

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        for name in ("freq_pht_up", "freq_pht_down", "freq_phn", "g_up",
                     "g_down", "g_bond", "zeta", "gamma_up", "gamma_down",
                     "gamma_phn", "influx_up", "influx_down", "influx_phn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def max_scale(self) -> float:
        """Largest frequency/coupling/rate, used for step-size defaults."""
        return max(self.freq_pht_up, self.freq_pht_down, self.freq_phn,
                   self.g_up, self.g_down, self.g_bond, self.zeta,
                   self.gamma_up, self.gamma_down, self.gamma_phn,
                   self.influx_up, self.influx_down, self.influx_phn)


@dataclass
class OperatorMatrix:
    mat: np.ndarray
    space: StateSpace

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.mat.conj().T, self.space)

    def _check(self, other):
        if self.space is not other.space:
            raise SpaceMismatch("operands bound to different spaces")

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.mat @ other.mat, self.space)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._check(other)
        return OperatorMatrix(self.mat + other.mat, self.space)


MODES = ("pht_up", "pht_down", "phn")
_MODE_FIELD = {"pht_up": "p1", "pht_down": "p2", "phn": "m"}
_FLIP_FIELD = {"e_up": "l1", "e_down": "l2", "bond": "L", "nucleus": "k"}


def _zeros(space):
    return np.zeros((space.size, space.size), dtype=complex)


def _target_index(space, target: BasisState, what: str):
    j = space.get_index(target)
    if j is None and space.mode == MODE_CLOSURE:
        raise ImageOutsideSpace(
            f"{what} maps into {target.to_string()}, absent from the space")
    return j


def ladder(mode: str, direction: str, space: StateSpace) -> OperatorMatrix:
    """Lowering/raising operator for one field mode."""
    if mode not in _MODE_FIELD:
        raise ValueError(f"unknown mode {mode!r}")
    if direction not in ("lower", "raise"):
        raise ValueError(f"unknown direction {direction!r}")
    field = _MODE_FIELD[mode]
    op = _zeros(space)
    for i, s in enumerate(space):
        occ = getattr(s, field)
        if direction == "lower" and occ == 1:
            target = s._replace(**{field: 0})
        elif direction == "raise" and occ == 0:
            target = s._replace(**{field: 1})
        else:
            continue  # lowering vacuum or raising past the one-quantum cap
        j = _target_index(space, target, f"{direction} {mode}")
        if j is not None:
            op[j, i] = 1.0
    return OperatorMatrix(op, space)


def flip(target: str, direction: str, space: StateSpace) -> OperatorMatrix:
    """Two-level flip operator for an electron, bond or position label."""
    if target not in _FLIP_FIELD:
        raise ValueError(f"unknown flip target {target!r}")
    if direction not in ("down", "up"):
        raise ValueError(f"unknown direction {direction!r}")
    field = _FLIP_FIELD[target]
    src = 1 if direction == "down" else 0
    op = _zeros(space)
    for i, s in enumerate(space):
        if getattr(s, field) != src:
            continue
        image = s._replace(**{field: 1 - src})
        j = _target_index(space, image, f"{direction} {target}")
        if j is not None:
            op[j, i] = 1.0
    return OperatorMatrix(op, space)


def build_hamiltonian(params: ModelParams, space: StateSpace,
                      gating: GatingPolicy = None) -> OperatorMatrix:
    """Assemble the system Hamiltonian over the given space.

    Free terms are diagonal in the occupation basis (the broken-bond
    flag counts as one phonon-frequency quantum).  The photon exchange
    terms act only while the bond is formed; the phonon/bond exchange
    and the nuclear hop follow the gating policy.  Each exchange entry
    is written together with its transpose, so the matrix is exactly
    real symmetric.
    """
    if gating is None:
        gating = GatingPolicy()
    h = _zeros(space)

    def couple(i, target, strength):
        if strength == 0:
            return
        j = _target_index(space, target, "interaction term")
        if j is not None:
            h[j, i] += strength
            h[i, j] += strength

    hbar = params.hbar
    for i, s in enumerate(space):
        h[i, i] += hbar * (params.freq_pht_up * (s.p1 + s.l1)
                           + params.freq_pht_down * (s.p2 + s.l2)
                           + params.freq_phn * (s.m + s.L))
        if s.L == 0:
            if s.p1 == 0 and s.l1 == 1:
                couple(i, s._replace(p1=1, l1=0), params.g_up)
            if s.p2 == 0 and s.l2 == 1:
                couple(i, s._replace(p2=1, l2=0), params.g_down)
        if s.m == 0 and s.L == 1 and \
                (s.k == 0 or not gating.bond_term_requires_colocated):
            couple(i, s._replace(m=1, L=0), params.g_bond)
        tunneling_open = (s.L == 1
                          or not gating.tunneling_requires_broken_bond)
        if params.zeta > 0 and tunneling_open:
            if gating.literal_tunneling_form:
                h[i, i] += params.zeta  # identity on the position label
            elif s.k == 0:
                couple(i, s._replace(k=1), params.zeta)
    return OperatorMatrix(h, space)


def total_excitations(space: StateSpace) -> OperatorMatrix:
    """Diagonal count of field quanta plus electron/bond excitations.

    The broken-bond flag counts as one quantum: it is the excitation
    that converts into a phonon when the bond forms.  The closed-model
    Hamiltonian commutes with this operator under default gating.
    """
    diag = np.array([s.p1 + s.p2 + s.m + s.l1 + s.l2 + s.L
                     for s in space], dtype=complex)
    return OperatorMatrix(np.diag(diag), space)


@dataclass
class JumpChannel:
    op: OperatorMatrix
    rate: float
    kind: str  # "dissipation" or "influx"
    mode_label: str


def build_jump_channels(params: ModelParams, space: StateSpace):
    """One lowering channel per positive decay rate, raising for influx."""
    channels = []
    rates = {"pht_up": params.gamma_up, "pht_down": params.gamma_down,
             "phn": params.gamma_phn}
    influxes = {"pht_up": params.influx_up, "pht_down": params.influx_down,
                "phn": params.influx_phn}
    for mode in MODES:
        if rates[mode] > 0:
            channels.append(JumpChannel(ladder(mode, "lower", space),
                                        rates[mode], "dissipation", mode))
    for mode in MODES:
        if influxes[mode] > 0:
            channels.append(JumpChannel(ladder(mode, "raise", space),
                                        influxes[mode], "influx", mode))
    return channels


def write_operator(path, op: OperatorMatrix, tol: float = 0.0):
    """Dump nonzero entries as `row col re im` lines for diffing."""
    lines = []
    for (r, c), v in np.ndenumerate(op.mat):
        if abs(v) > tol:
            lines.append(f"{r} {c} {v.real!r} {v.imag!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
