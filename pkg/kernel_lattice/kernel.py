"""
Bounded transition kernels on a finite carrier.

A kernel is stored as an n x n matrix whose row x is the signed measure
k(x, .), together with the diffuse part of every row. Diffuse row mass lives
on cells and stays spread whatever the source mass. The remaining row mass is
carried by points: it is atomic under a point mass, while on a cell target it
follows a spread source and stays diffuse. Lattice operations act on the two
parts of each row separately, which for purely atomic rows (the default) is
the entrywise rule on the matrix.
"""
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .error_handling import CarrierTooLargeError, PreconditionError
from .measure import SignedMeasure, Subset, _as_mask, total_variation
from .state_space import (
    BasisSet,
    StateSpace,
    check_same_space,
    full_basis,
    generate_basis,
    subset_patterns,
)

logger = logging.getLogger(__name__)

DEFAULT_N_ORACLE = 12


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Row-indexed family of signed measures k(x, .)"""
    space: StateSpace
    matrix: np.ndarray
    diffuse: Optional[np.ndarray] = None
    bound: float = field(init=False)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        n = self.space.n
        if matrix.shape != (n, n):
            raise PreconditionError(f"kernel matrix must be {n}x{n}, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise PreconditionError("kernel entries must be finite")
        if self.diffuse is None:
            diffuse = np.zeros((n, n))
        else:
            diffuse = np.array(self.diffuse, dtype=float)
            if diffuse.shape != (n, n) or not np.all(np.isfinite(diffuse)):
                raise PreconditionError(f"diffuse part must be a finite {n}x{n} matrix")
            if np.any(diffuse[:, self.space.atom_mask] != 0.0):
                raise PreconditionError("atoms cannot receive diffuse kernel mass")
        matrix.setflags(write=False)
        diffuse.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'diffuse', diffuse)
        variation = np.abs(matrix - diffuse) + np.abs(diffuse)
        object.__setattr__(self, 'bound', float(np.max(np.sum(variation, axis=1))))

    @property
    def atomic(self) -> np.ndarray:
        return self.matrix - self.diffuse

    @property
    def has_diffuse_rows(self) -> bool:
        return bool(np.any(self.diffuse != 0.0))

    def row(self, x: Union[int, str]) -> SignedMeasure:
        i = self.space.index(x)
        return SignedMeasure(self.space, self.matrix[i], self.diffuse[i])

    def rows(self) -> List[SignedMeasure]:
        return [SignedMeasure(self.space, r, d) for r, d in zip(self.matrix, self.diffuse)]

    def masses(self, subset: Subset) -> np.ndarray:
        """The function x -> k(x, A)."""
        return self.matrix[:, _as_mask(self.space, subset)].sum(axis=1)

    @property
    def total_masses(self) -> np.ndarray:
        """x -> k(x, Omega)"""
        return self.matrix.sum(axis=1)

    def allclose(self, other: "TransitionKernel", atol: float = 1e-12) -> bool:
        check_same_space(self, other)
        return bool(np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol)
                    and np.allclose(self.diffuse, other.diffuse, rtol=0.0, atol=atol))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransitionKernel):
            return NotImplemented
        return (self.space == other.space and np.array_equal(self.matrix, other.matrix)
                and np.array_equal(self.diffuse, other.diffuse))

    __hash__ = None

    def __add__(self, other: "TransitionKernel") -> "TransitionKernel":
        check_same_space(self, other)
        return TransitionKernel(self.space, self.matrix + other.matrix, self.diffuse + other.diffuse)

    def __sub__(self, other: "TransitionKernel") -> "TransitionKernel":
        check_same_space(self, other)
        return TransitionKernel(self.space, self.matrix - other.matrix, self.diffuse - other.diffuse)

    def __neg__(self) -> "TransitionKernel":
        return TransitionKernel(self.space, -self.matrix, -self.diffuse)

    def __mul__(self, scalar: float) -> "TransitionKernel":
        scalar = float(scalar)
        return TransitionKernel(self.space, scalar * self.matrix, scalar * self.diffuse)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"TransitionKernel(n={self.space.n}, bound={self.bound:.6g})"


def _from_parts(space: StateSpace, atomic: np.ndarray, diffuse: np.ndarray) -> TransitionKernel:
    return TransitionKernel(space, atomic + diffuse, diffuse)


def identity_kernel(space: StateSpace) -> TransitionKernel:
    return TransitionKernel(space, np.eye(space.n))


def zero_kernel(space: StateSpace) -> TransitionKernel:
    return TransitionKernel(space, np.zeros((space.n, space.n)))


def kernel_from_rows(rows: Sequence[SignedMeasure]) -> TransitionKernel:
    """Kernel whose row x is rows[x], split included."""
    if not rows:
        raise PreconditionError("a kernel needs one row per state")
    if not all(isinstance(r, SignedMeasure) for r in rows):
        raise PreconditionError("kernel rows must be signed measures")
    space = check_same_space(*rows)
    if len(rows) != space.n:
        raise PreconditionError(f"expected {space.n} rows, got {len(rows)}")
    return TransitionKernel(space, np.vstack([r.weights for r in rows]), np.vstack([r.diffuse for r in rows]))


def kernel_from_sparse(
    space: StateSpace,
    rows: Iterable[Tuple[int, Iterable[Tuple[int, float]]]]
) -> TransitionKernel:
    """Build a kernel from (source, [(target, weight), ...]) rows; missing rows are zero."""
    matrix = np.zeros((space.n, space.n))
    for source, entries in rows:
        i = space.index(source)
        for target, weight in entries:
            matrix[i, space.index(target)] += float(weight)
    return TransitionKernel(space, matrix)


def modulus(k: TransitionKernel) -> TransitionKernel:
    """|k|: row x is the total variation measure of k(x, .)."""
    return _from_parts(k.space, np.abs(k.atomic), np.abs(k.diffuse))


def positive_part(k: TransitionKernel) -> TransitionKernel:
    """k+ = (|k| + k) / 2"""
    return _from_parts(k.space, np.maximum(k.atomic, 0.0), np.maximum(k.diffuse, 0.0))


def negative_part(k: TransitionKernel) -> TransitionKernel:
    """k- = (|k| - k) / 2"""
    return _from_parts(k.space, np.maximum(-k.atomic, 0.0), np.maximum(-k.diffuse, 0.0))


def kernel_meet(first: TransitionKernel, second: TransitionKernel) -> TransitionKernel:
    check_same_space(first, second)
    return _from_parts(first.space, np.minimum(first.atomic, second.atomic),
                       np.minimum(first.diffuse, second.diffuse))


def kernel_join(first: TransitionKernel, second: TransitionKernel) -> TransitionKernel:
    check_same_space(first, second)
    return _from_parts(first.space, np.maximum(first.atomic, second.atomic),
                       np.maximum(first.diffuse, second.diffuse))


def kernel_leq(first: TransitionKernel, second: TransitionKernel, tol: float = 0.0) -> bool:
    check_same_space(first, second)
    return bool(np.all(first.atomic <= second.atomic + tol) and np.all(first.diffuse <= second.diffuse + tol))


def bound(k: TransitionKernel) -> float:
    """sup_x |k|(x, Omega)"""
    return k.bound


def compose(first: TransitionKernel, second: TransitionKernel) -> TransitionKernel:
    """Row x of the result is the integral of second(y, .) against first(x, dy).

    The point-carried image of the diffuse part of first(x, .) stays diffuse
    where it lands on a cell.
    """
    check_same_space(first, second)
    cells = first.space.cell_mask[None, :]
    carried = np.where(cells, first.diffuse @ second.atomic, 0.0)
    return TransitionKernel(first.space, first.matrix @ second.matrix,
                            first.matrix @ second.diffuse + carried)


def sign_pattern_family(
    space: StateSpace,
    n_oracle: int = DEFAULT_N_ORACLE,
    basis: Optional[Sequence[BasisSet]] = None
) -> np.ndarray:
    """Deterministic family of [-1, 1]-valued test functions, one per row.

    The constant 1 comes first, followed by 2*1_B - 1 for every basis set B.
    Without an explicit basis, the full basis is used when the carrier fits
    under n_oracle, otherwise the depth-1 generated basis.
    """
    if basis is None:
        basis = full_basis(space) if space.n <= n_oracle else generate_basis(space, 1)
    rows = [np.ones(space.n)]
    rows.extend(2.0 * b.indicator() - 1.0 for b in basis)
    return np.vstack(rows)


def tv_via_test_functions(
    k: TransitionKernel,
    x: Union[int, str],
    family_size: Optional[int] = None,
    basis: Optional[Sequence[BasisSet]] = None,
    n_oracle: int = DEFAULT_N_ORACLE
) -> float:
    """sup |<f, k(x, .)>| over the first family_size test functions."""
    family = sign_pattern_family(k.space, n_oracle, basis)
    if family_size is not None:
        if family_size < 1:
            raise PreconditionError("family_size must be at least 1")
        family = family[:family_size]
    row = k.matrix[k.space.index(x)]
    return float(np.max(np.abs(family @ row)))


def superlevel_union(k: TransitionKernel, alpha: float, basis: Sequence[BasisSet]) -> frozenset:
    """Union over the basis of {x : k(x, B) > alpha}."""
    if not alpha > 0:
        raise PreconditionError(f"alpha must be positive, got {alpha}")
    if not basis:
        raise PreconditionError("superlevel_union needs a nonempty basis")
    check_same_space(k, *basis)
    indicators = np.vstack([b.indicator() for b in basis])
    masses = k.matrix @ indicators.T
    return frozenset(int(x) for x in np.flatnonzero(np.any(masses > alpha, axis=1)))


def kernel_sequence_sup(
    kernels: Sequence[TransitionKernel],
    s_norm: float,
    dominating: Optional[TransitionKernel] = None,
    tol: float = 1e-12
) -> TransitionKernel:
    """Supremum of an order-bounded kernel sequence.

    The sequence is first replaced by its running joins k_1 v ... v k_n, which
    is increasing and has the same supremum.

    Raises:
        PreconditionError: empty input, a term that is not a kernel, a term
            above the dominating kernel, or a row mass of the supremum above
            s_norm
    """
    if not kernels:
        raise PreconditionError("kernel_sequence_sup needs at least one kernel")
    for i, k in enumerate(kernels):
        if not isinstance(k, TransitionKernel):
            raise PreconditionError(f"term {i} is a {type(k).__name__}, not a TransitionKernel")
    if dominating is not None and not isinstance(dominating, TransitionKernel):
        raise PreconditionError("dominating bound must be a TransitionKernel")
    if dominating is not None:
        check_same_space(dominating, *kernels)
        for i, k in enumerate(kernels):
            if not kernel_leq(k, dominating, tol):
                raise PreconditionError(f"kernel {i} is not dominated by the supplied bound")
    else:
        check_same_space(*kernels)

    running = kernels[0]
    for k in kernels[1:]:
        running = kernel_join(running, k)

    worst = float(np.max(np.abs(running.total_masses)))
    if worst > s_norm + tol:
        raise PreconditionError(f"sequence is not bounded by {s_norm}: row mass {worst}")
    logger.debug("Sequence supremum over %d kernels, largest row mass %.6g", len(kernels), worst)
    return running


def subset_masses(k: TransitionKernel, max_states: int = DEFAULT_N_ORACLE) -> np.ndarray:
    """Matrix of k(x, A) for every subset A (columns in binary counting order)."""
    if k.space.n > max_states:
        raise CarrierTooLargeError(f"subset enumeration limited to {max_states} states")
    return k.matrix @ subset_patterns(k.space.n).T


def row_total_variations(k: TransitionKernel) -> np.ndarray:
    """|k|(x, Omega) computed row by row through the measure module."""
    return np.array([total_variation(r) for r in k.rows()])
