"""Seven-qubit occupation-number basis and reachable-state generation.

A basis configuration carries seven binary labels in the fixed order
(p1, p2, m, l1, l2, L, k): two photon modes, one phonon mode, two
electron orbitals (1 = excited), the covalent-bond flag (0 = formed,
1 = broken) and the nuclear-position flag (0 = same cavity,
1 = different cavities).  The first two labels form the observed
photon pair A, the remaining five the matter subsystem B.

The canonical integer encoding reads the labels as a 7-bit number with
p1 as the most significant bit, and every space orders its states by
ascending encoding.
"""

from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import EmptySeeds, SeedOutsideCompatTable

N_QUBITS = 7
FULL_DIM = 2**N_QUBITS
A_DIM = 4

MODE_FULL = "full"
MODE_CLOSURE = "closure"
MODE_TABLE = "table-compat"


class BasisState(NamedTuple):
    p1: int
    p2: int
    m: int
    l1: int
    l2: int
    L: int
    k: int

    def encode(self) -> int:
        value = 0
        for bit in self:
            value = (value << 1) | bit
        return value

    @classmethod
    def decode(cls, code: int) -> "BasisState":
        if not 0 <= code < FULL_DIM:
            raise ValueError(f"encoding {code} outside 0..{FULL_DIM - 1}")
        return cls(*((code >> shift) & 1 for shift in range(6, -1, -1)))

    @classmethod
    def from_string(cls, bits: str) -> "BasisState":
        if len(bits) != N_QUBITS or set(bits) - {"0", "1"}:
            raise ValueError(f"need a 7-character bitstring, got {bits!r}")
        return cls(*(int(c) for c in bits))

    def to_string(self) -> str:
        return "".join(str(bit) for bit in self)

    def a_label(self) -> tuple:
        return (self.p1, self.p2)

    def b_label(self) -> tuple:
        return (self.m, self.l1, self.l2, self.L, self.k)


def encode(state: BasisState) -> int:
    return BasisState(*state).encode()


def decode(code: int) -> BasisState:
    return BasisState.decode(code)


def split_labels(state: BasisState) -> tuple:
    """Split a state into its (photon-pair, matter) label tuples."""
    state = BasisState(*state)
    return state.a_label(), state.b_label()


@dataclass(frozen=True)
class GatingPolicy:
    """Switches resolving how the interaction terms act on the labels.

    tunneling_requires_broken_bond: the nuclear hop acts only while the
        bond is broken (a bound molecule cannot separate).
    bond_term_requires_colocated: the phonon/bond exchange acts only
        while the nuclei share a cavity.
    literal_tunneling_form: use the diagonal form of the tunneling term
        (a constant shift on the position label) instead of the
        transition form that actually moves the nuclei.
    """

    tunneling_requires_broken_bond: bool = True
    bond_term_requires_colocated: bool = True
    literal_tunneling_form: bool = False


# The 26-state reduced basis that compatibility mode restricts to: the
# set reachable from the standard four-component initial state under
# the gated interactions plus the three decay channels.
_TABLE_BITSTRINGS = (
    "0000000", "0100000", "1000000", "1100000", "0000010", "0000011",
    "0000100", "1000100", "0000110", "0000111", "0001000", "0101000",
    "0001010", "0001011", "0001100", "0001110", "0001111", "0010000",
    "0110000", "1010000", "1110000", "0010100", "1010100", "0011000",
    "0111000", "0011100",
)
TABLE_STATES = tuple(
    sorted((BasisState.from_string(s) for s in _TABLE_BITSTRINGS),
           key=BasisState.encode)
)
_TABLE_SET = frozenset(TABLE_STATES)

# Components of the standard initial state: both electrons on atomic
# orbitals, bond broken, nuclei together, no field quanta.
INITIAL_COMPONENTS = (
    BasisState.from_string("0000010"),
    BasisState.from_string("0000110"),
    BasisState.from_string("0001010"),
    BasisState.from_string("0001110"),
)


class StateSpace:
    """Ordered, indexed set of basis states."""

    def __init__(self, states: Iterable[BasisState], mode: str):
        self.states = tuple(sorted((BasisState(*s) for s in states),
                                   key=BasisState.encode))
        self.mode = mode
        self._index = {s: i for i, s in enumerate(self.states)}
        if len(self._index) != len(self.states):
            raise ValueError("duplicate states in space")
        # Matter labels actually present, in ascending label order.
        self.b_labels = tuple(sorted({s.b_label() for s in self.states}))
        b_pos = {b: i for i, b in enumerate(self.b_labels)}
        self.a_index = tuple(2 * s.p1 + s.p2 for s in self.states)
        self.b_index = tuple(b_pos[s.b_label()] for s in self.states)

    @property
    def size(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, state):
        return BasisState(*state) in self._index

    def index_of(self, state: BasisState) -> int:
        return self._index[BasisState(*state)]

    def get_index(self, state: BasisState):
        return self._index.get(BasisState(*state))

    def dump_lines(self):
        return [f"{i}\t{s.to_string()}" for i, s in enumerate(self.states)]

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.dump_lines()) + "\n")

    def __repr__(self):
        return f"StateSpace(mode={self.mode!r}, size={self.size})"


def full_space() -> StateSpace:
    return StateSpace((BasisState.decode(c) for c in range(FULL_DIM)),
                      MODE_FULL)


def table_space() -> StateSpace:
    """The canonical 26-state compatibility space."""
    return StateSpace(TABLE_STATES, MODE_TABLE)


def _neighbors(s: BasisState, params, gating: GatingPolicy,
               include_dissipation: bool):
    out = []
    if s.L == 0:
        # photon exchange, active only while the bond is formed
        if params.g_up > 0:
            if s.p1 == 0 and s.l1 == 1:
                out.append(s._replace(p1=1, l1=0))
            elif s.p1 == 1 and s.l1 == 0:
                out.append(s._replace(p1=0, l1=1))
        if params.g_down > 0:
            if s.p2 == 0 and s.l2 == 1:
                out.append(s._replace(p2=1, l2=0))
            elif s.p2 == 1 and s.l2 == 0:
                out.append(s._replace(p2=0, l2=1))
    if params.g_bond > 0 and (s.k == 0 or not gating.bond_term_requires_colocated):
        # bond formation releases a phonon, breaking absorbs one
        if s.m == 0 and s.L == 1:
            out.append(s._replace(m=1, L=0))
        elif s.m == 1 and s.L == 0:
            out.append(s._replace(m=0, L=1))
    if params.zeta > 0 and not gating.literal_tunneling_form:
        if s.L == 1 or not gating.tunneling_requires_broken_bond:
            out.append(s._replace(k=1 - s.k))
    if include_dissipation:
        # decay channels, applied forward; influx only when enabled
        if s.p1 == 1:
            out.append(s._replace(p1=0))
        if s.p2 == 1:
            out.append(s._replace(p2=0))
        if s.m == 1:
            out.append(s._replace(m=0))
        if params.influx_up > 0 and s.p1 == 0:
            out.append(s._replace(p1=1))
        if params.influx_down > 0 and s.p2 == 0:
            out.append(s._replace(p2=1))
        if params.influx_phn > 0 and s.m == 0:
            out.append(s._replace(m=1))
    return out


def generate_space(seeds, params, gating: GatingPolicy = None,
                   include_dissipation: bool = True,
                   mode: str = MODE_CLOSURE) -> StateSpace:
    """Breadth-first closure of the seeds under the active transitions.

    Every interaction with a positive coupling is applied in both
    directions, subject to the gating policy; with include_dissipation
    the decay channels are applied forward as well.  In table-compat
    mode the closure is intersected with the 26-state compatibility
    basis, and seeds outside that basis are rejected.
    """
    seeds = [BasisState(*s) for s in seeds]
    if not seeds:
        raise EmptySeeds("need at least one seed state")
    if gating is None:
        gating = GatingPolicy()
    if mode not in (MODE_FULL, MODE_CLOSURE, MODE_TABLE):
        raise ValueError(f"unknown space mode {mode!r}")
    if mode == MODE_FULL:
        return full_space()
    if mode == MODE_TABLE:
        outside = [s for s in seeds if s not in _TABLE_SET]
        if outside:
            listing = ", ".join(s.to_string() for s in outside)
            raise SeedOutsideCompatTable(
                f"seeds outside the compatibility basis: {listing}")

    seen = set(seeds)
    queue = deque(seeds)
    while queue:
        s = queue.popleft()
        for t in _neighbors(s, params, gating, include_dissipation):
            if t not in seen:
                seen.add(t)
                queue.append(t)

    if mode == MODE_TABLE:
        seen &= _TABLE_SET
    return StateSpace(seen, mode)
