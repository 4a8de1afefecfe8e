"""
Finite carriers standing in for a Polish space.

A StateSpace is an ordered tuple of states, each tagged as an Atom (a point)
or a Cell (a piece of a continuum with a positive reference width). Borel sets
become subsets of state indices, and the countable bases of open sets needed
by the superlevel and refinement algorithms are finite families of BasisSet.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .error_handling import CarrierTooLargeError, PreconditionError, SpaceError, SpaceMismatchError

logger = logging.getLogger(__name__)

DEFAULT_TAU_CONT = 0.05
MAX_FULL_BASIS_STATES = 16


class TopologyKind(str, Enum):
    """Topology of the carrier"""
    DISCRETE = "discrete"
    INTERVAL = "interval"
    TWO_SIDED_SEQUENCE = "two_sided_seq"
    MIXED = "mixed"


class StateTag(str, Enum):
    """Whether a state is a point or a discretization cell"""
    ATOM = "atom"
    CELL = "cell"


@dataclass(frozen=True)
class StateSpace:
    """Finite carrier of tagged states.

    State ids are the contiguous indices 0..n-1. Reference weights are 1 for
    atoms (counting measure) and the cell width for cells.
    """
    kind: TopologyKind
    labels: Tuple[str, ...]
    tags: Tuple[StateTag, ...]
    reference_weights: Tuple[float, ...]
    bounds: Optional[Tuple[float, float]] = None
    truncation: Optional[int] = None

    def __post_init__(self):
        n = len(self.labels)
        if n < 1:
            raise SpaceError("a state space needs at least one state")
        if len(self.tags) != n or len(self.reference_weights) != n:
            raise SpaceError("labels, tags and reference weights must have equal length")
        if len(set(self.labels)) != n:
            raise SpaceError("state labels must be unique")
        for label, weight in zip(self.labels, self.reference_weights):
            if not (math.isfinite(weight) and weight > 0):
                raise SpaceError(f"reference weight of state {label!r} must be positive, got {weight}")
        if self.kind is TopologyKind.TWO_SIDED_SEQUENCE:
            if self.truncation is None or n != 2 * self.truncation + 1:
                raise SpaceError("a two-sided sequence space of truncation N has exactly 2N+1 states")

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def states(self) -> range:
        return range(self.n)

    def is_atom(self, x: int) -> bool:
        return self.tags[x] is StateTag.ATOM

    @property
    def cell_mask(self) -> np.ndarray:
        return np.array([tag is StateTag.CELL for tag in self.tags], dtype=bool)

    @property
    def atom_mask(self) -> np.ndarray:
        return ~self.cell_mask

    def index(self, state: Union[int, str]) -> int:
        """Resolve a state id or label to its index."""
        if isinstance(state, (int, np.integer)) and not isinstance(state, bool):
            if 0 <= int(state) < self.n:
                return int(state)
            raise PreconditionError(f"unknown state id {state} (space has {self.n} states)")
        try:
            return self.labels.index(str(state))
        except ValueError:
            raise PreconditionError(f"unknown state label {state!r}") from None

    def sequence_index(self, position: Union[int, float]) -> int:
        """Index of the signed position n (or math.inf) on a two-sided sequence space."""
        if self.kind is not TopologyKind.TWO_SIDED_SEQUENCE:
            raise PreconditionError("sequence positions only exist on two-sided sequence spaces")
        N = self.truncation
        if position == math.inf:
            return 2 * N
        n = int(position)
        if n == 0 or abs(n) > N:
            raise PreconditionError(f"position {position} outside the truncation N={N}")
        return N + n if n < 0 else N + n - 1

    @property
    def sequence_positions(self) -> np.ndarray:
        """Signed positions per state; the point at infinity is reported as 0."""
        if self.kind is not TopologyKind.TWO_SIDED_SEQUENCE:
            raise PreconditionError("sequence positions only exist on two-sided sequence spaces")
        N = self.truncation
        return np.array(list(range(-N, 0)) + list(range(1, N + 1)) + [0], dtype=int)

    @property
    def midpoints(self) -> np.ndarray:
        """Cell midpoints on interval-like spaces (NaN for atoms)."""
        if self.bounds is None:
            raise PreconditionError("midpoints need an interval or mixed space")
        a = self.bounds[0]
        out = np.full(self.n, np.nan)
        left = a
        for x in self.states:
            if self.tags[x] is StateTag.CELL:
                out[x] = left + 0.5 * self.reference_weights[x]
                left += self.reference_weights[x]
        return out

    def subset_mask(self, subset: Iterable[int]) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        for x in subset:
            mask[self.index(x)] = True
        return mask

    def descriptor(self) -> Dict[str, object]:
        """JSON space descriptor."""
        if self.kind is TopologyKind.DISCRETE:
            return {"kind": self.kind.value, "n": self.n}
        if self.kind is TopologyKind.INTERVAL:
            return {"kind": self.kind.value, "n": self.n, "a": self.bounds[0], "b": self.bounds[1]}
        if self.kind is TopologyKind.TWO_SIDED_SEQUENCE:
            return {"kind": self.kind.value, "N": self.truncation}
        atoms = int(self.atom_mask.sum())
        return {"kind": self.kind.value, "n": self.n - atoms, "atoms": atoms,
                "a": self.bounds[0], "b": self.bounds[1]}


def _check_bounds(a: Optional[float], b: Optional[float]) -> Tuple[float, float]:
    if a is None or b is None:
        raise SpaceError("interval spaces need bounds a and b")
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise SpaceError(f"interval bounds must be finite, got ({a}, {b})")
    if not a < b:
        raise SpaceError(f"interval bounds need a < b, got ({a}, {b})")
    return a, b


def _check_size(value: Optional[int], name: str) -> int:
    if value is None or isinstance(value, bool) or int(value) != value or value < 1:
        raise SpaceError(f"{name} must be an integer >= 1, got {value!r}")
    return int(value)


def make_space(
    kind: Union[str, TopologyKind],
    n: Optional[int] = None,
    a: Optional[float] = None,
    b: Optional[float] = None,
    N: Optional[int] = None,
    atoms: Optional[int] = None,
) -> StateSpace:
    """Build a state space.

    Args:
        kind: discrete, interval, two_sided_seq or mixed
        n: number of states (discrete) or cells (interval, mixed)
        a, b: interval bounds (interval, mixed)
        N: truncation of the two-sided sequence space
        atoms: number of atoms placed before the cells (mixed)

    Returns:
        StateSpace satisfying all type invariants
    """
    try:
        kind = TopologyKind(kind)
    except ValueError:
        raise SpaceError(f"unknown space kind {kind!r}") from None

    if kind is TopologyKind.DISCRETE:
        n = _check_size(n, "n")
        return StateSpace(kind, tuple(str(i) for i in range(n)),
                          (StateTag.ATOM,) * n, (1.0,) * n)

    if kind is TopologyKind.TWO_SIDED_SEQUENCE:
        N = _check_size(N, "N")
        labels = [str(i) for i in range(-N, 0)] + [str(i) for i in range(1, N + 1)] + ["inf"]
        return StateSpace(kind, tuple(labels), (StateTag.ATOM,) * (2 * N + 1),
                          (1.0,) * (2 * N + 1), truncation=N)

    n = _check_size(n, "n")
    a, b = _check_bounds(a, b)
    width = (b - a) / n
    cell_labels = [f"c{i}" for i in range(n)]
    if kind is TopologyKind.INTERVAL:
        return StateSpace(kind, tuple(cell_labels), (StateTag.CELL,) * n, (width,) * n, bounds=(a, b))

    n_atoms = _check_size(atoms, "atoms")
    labels = [f"a{i}" for i in range(n_atoms)] + cell_labels
    tags = (StateTag.ATOM,) * n_atoms + (StateTag.CELL,) * n
    return StateSpace(kind, tuple(labels), tags, (1.0,) * n_atoms + (width,) * n, bounds=(a, b))


def check_same_space(*objects) -> StateSpace:
    """Return the common space of the given objects or raise SpaceMismatchError."""
    spaces = [obj if isinstance(obj, StateSpace) else obj.space for obj in objects]
    first = spaces[0]
    for other in spaces[1:]:
        if other != first:
            raise SpaceMismatchError(
                f"space mismatch: {first.kind.value} with {first.n} states vs "
                f"{other.kind.value} with {other.n} states"
            )
    return first


@dataclass(frozen=True)
class BasisSet:
    """Member of a countable basis of open sets"""
    space: StateSpace
    members: FrozenSet[int]
    generation: int = 0

    def __post_init__(self):
        if not self.members:
            raise PreconditionError("basis sets are nonempty")
        if any(not 0 <= x < self.space.n for x in self.members):
            raise PreconditionError("basis set members must be states of the space")

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, x: int) -> bool:
        return x in self.members

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.space.n)
        out[sorted(self.members)] = 1.0
        return out

    def sorted_members(self) -> List[int]:
        return sorted(self.members)


def union_of(first: BasisSet, second: BasisSet) -> BasisSet:
    check_same_space(first, second)
    return BasisSet(first.space, first.members | second.members,
                    max(first.generation, second.generation) + 1)


def _dedupe(sets: Iterable[BasisSet]) -> List[BasisSet]:
    seen = set()
    out = []
    for s in sets:
        if s.members not in seen:
            seen.add(s.members)
            out.append(s)
    return out


def _dyadic_blocks(space: StateSpace, cells: Sequence[int], depth: int) -> List[BasisSet]:
    blocks = []
    for g in range(depth + 1):
        size = 2 ** g
        for start in range(0, len(cells), size):
            blocks.append(BasisSet(space, frozenset(cells[start:start + size]), g))
        if size >= len(cells):
            break
    return blocks


def _with_pairwise_unions(base: List[BasisSet], generation: int) -> List[BasisSet]:
    base = _dedupe(base)
    unions = [BasisSet(s.space, s.members | t.members, generation)
              for s, t in itertools.combinations(base, 2)]
    return _dedupe(base + unions)


def generate_basis(space: StateSpace, depth: int) -> List[BasisSet]:
    """Finite, enumerable basis of open sets covering the space.

    Discrete spaces get the singletons and, for each generation g <= depth, the
    unions of g+1 singletons. Interval and mixed spaces get dyadic cell blocks
    up to the depth (atoms as singletons) plus pairwise unions. Two-sided
    sequence spaces get singletons of the isolated points and the tail
    neighbourhoods {inf} U {+-n : n >= m}, plus pairwise unions when depth >= 1.
    """
    if isinstance(depth, bool) or int(depth) != depth or depth < 0:
        raise PreconditionError(f"depth must be a nonnegative integer, got {depth!r}")
    depth = int(depth)

    if space.kind is TopologyKind.DISCRETE:
        family = []
        for g in range(min(depth, space.n - 1) + 1):
            family.extend(BasisSet(space, frozenset(c), g)
                          for c in itertools.combinations(space.states, g + 1))
        return family

    if space.kind is TopologyKind.TWO_SIDED_SEQUENCE:
        N = space.truncation
        base = [BasisSet(space, frozenset([x]), 0) for x in range(2 * N)]
        for m in range(N, 0, -1):
            tail = {space.sequence_index(n) for n in range(m, N + 1)}
            tail |= {space.sequence_index(-n) for n in range(m, N + 1)}
            tail.add(2 * N)
            base.append(BasisSet(space, frozenset(tail), 0))
        return _with_pairwise_unions(base, 1) if depth >= 1 else _dedupe(base)

    cells = [x for x in space.states if not space.is_atom(x)]
    base = [BasisSet(space, frozenset([x]), 0) for x in space.states if space.is_atom(x)]
    base.extend(_dyadic_blocks(space, cells, depth))
    return _with_pairwise_unions(base, depth + 1)


def full_basis(space: StateSpace, max_states: int = MAX_FULL_BASIS_STATES) -> List[BasisSet]:
    """All nonempty subsets, ordered by size then lexicographically."""
    if space.n > max_states:
        raise CarrierTooLargeError(
            f"full basis enumerates 2^{space.n} sets; limit is {max_states} states"
        )
    return [BasisSet(space, frozenset(c), size - 1)
            for size in range(1, space.n + 1)
            for c in itertools.combinations(space.states, size)]


def close_under_unions(family: Sequence[BasisSet], limit: int = 1 << 16) -> List[BasisSet]:
    """Smallest superfamily closed under finite unions."""
    if not family:
        return []
    check_same_space(*family)
    closed = _dedupe(family)
    known = {s.members for s in closed}
    frontier = list(closed)
    while frontier:
        fresh = []
        for s in frontier:
            for t in list(closed):
                u = s.members | t.members
                if u not in known:
                    known.add(u)
                    fresh.append(union_of(s, t))
                    if len(known) > limit:
                        raise CarrierTooLargeError(f"union closure exceeds {limit} sets")
        closed.extend(fresh)
        frontier = fresh
    return closed


def refine_to_disjoint(sets: Sequence[BasisSet]) -> Tuple[List[BasisSet], Dict[int, FrozenSet[int]]]:
    """Atoms of the algebra generated by the input sets, restricted to their union.

    Returns the disjoint refinement B~_0..B~_{M-1} (ordered by smallest member)
    and the membership map N(m) = {n : B~_m is contained in B_n}.
    """
    if not sets:
        raise PreconditionError("refine_to_disjoint needs at least one set")
    space = check_same_space(*sets)

    masks = np.array([s.indicator() > 0 for s in sets])
    covered = masks.any(axis=0)
    groups: Dict[Tuple[bool, ...], List[int]] = {}
    for x in np.flatnonzero(covered):
        signature = tuple(bool(v) for v in masks[:, x])
        groups.setdefault(signature, []).append(int(x))

    refined = []
    membership = {}
    for m, (signature, members) in enumerate(sorted(groups.items(), key=lambda item: item[1][0])):
        refined.append(BasisSet(space, frozenset(members), 0))
        membership[m] = frozenset(i for i, inside in enumerate(signature) if inside)
    logger.debug("Refined %d sets into %d disjoint pieces", len(sets), len(refined))
    return refined, membership


@dataclass(frozen=True, eq=False)
class BoundedFunction:
    """Bounded function given by its value per state"""
    space: StateSpace
    values: np.ndarray
    sup_norm: float = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.space.n,):
            raise PreconditionError(f"expected {self.space.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("bounded functions take finite values")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'sup_norm', float(np.max(np.abs(values))))

    def __call__(self, x: Union[int, str]) -> float:
        return float(self.values[self.space.index(x)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoundedFunction):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    __hash__ = None


def constant_function(space: StateSpace, value: float = 1.0) -> BoundedFunction:
    return BoundedFunction(space, np.full(space.n, float(value)))


def indicator_function(space: StateSpace, subset: Iterable[int]) -> BoundedFunction:
    return BoundedFunction(space, space.subset_mask(subset).astype(float))


def subset_patterns(n: int) -> np.ndarray:
    """All 2^n indicator vectors as rows, in binary counting order."""
    codes = np.arange(1 << n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(float)


def is_continuous(f: BoundedFunction, space: StateSpace, tolerance: float = DEFAULT_TAU_CONT) -> bool:
    """Continuity of f on the finite surrogate.

    Two-sided sequences: f(+-n) must be within tolerance of f(inf) on the outer
    tail band (the top quarter of the indices). Discrete: always continuous.
    Interval: cell-to-cell oscillation below tolerance; on mixed spaces atoms
    are isolated and only the cells are compared.
    """
    check_same_space(f, space)
    if space.kind is TopologyKind.DISCRETE:
        return True
    if space.kind is TopologyKind.TWO_SIDED_SEQUENCE:
        N = space.truncation
        start = max(N - N // 4, 1)
        at_infinity = f.values[2 * N]
        band = [space.sequence_index(s * n) for n in range(start, N + 1) for s in (1, -1)]
        return bool(np.max(np.abs(f.values[band] - at_infinity)) < tolerance)
    cells = f.values[space.cell_mask]
    if cells.size < 2:
        return True
    return bool(np.max(np.abs(np.diff(cells))) < tolerance)
