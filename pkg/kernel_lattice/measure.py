"""
Signed measures on a finite carrier and their lattice operations.

Each measure keeps, per state, its total weight and the part of that weight
which is diffuse. Only Cell states can carry diffuse mass. Weights on Cell
states are diffuse unless stated otherwise, while dirac() is a point mass even
when it sits inside a cell. The atomic and diffuse parts are mutually
singular, so the lattice operations act on them separately; for measures in
the default split this is the plain entrywise rule.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .error_handling import PreconditionError
from .state_space import BasisSet, BoundedFunction, StateSpace, check_same_space

logger = logging.getLogger(__name__)

TAU_SUPP = 1e-12
SEQUENCE_INCREMENT_TOL = 1e-12

Subset = Union[BasisSet, Iterable[int], np.ndarray]


def _as_mask(space: StateSpace, subset: Subset) -> np.ndarray:
    if isinstance(subset, BasisSet):
        check_same_space(space, subset)
        return subset.indicator() > 0
    if isinstance(subset, np.ndarray) and subset.dtype == bool:
        if subset.shape != (space.n,):
            raise PreconditionError("subset mask has the wrong length")
        return subset
    return space.subset_mask(subset)


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    """Weight vector over a StateSpace"""
    space: StateSpace
    weights: np.ndarray
    diffuse: Optional[np.ndarray] = None

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (self.space.n,):
            raise PreconditionError(f"expected {self.space.n} weights, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise PreconditionError("measure weights must be finite")
        if self.diffuse is None:
            diffuse = np.where(self.space.cell_mask, weights, 0.0)
        else:
            diffuse = np.array(self.diffuse, dtype=float)
            if diffuse.shape != weights.shape or not np.all(np.isfinite(diffuse)):
                raise PreconditionError("diffuse part must be a finite vector over the same states")
            if np.any(diffuse[self.space.atom_mask] != 0.0):
                raise PreconditionError("atoms cannot carry diffuse mass")
        weights.setflags(write=False)
        diffuse.setflags(write=False)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'diffuse', diffuse)

    @property
    def atomic(self) -> np.ndarray:
        return self.weights - self.diffuse

    @property
    def is_default_split(self) -> bool:
        return bool(np.array_equal(self.diffuse, np.where(self.space.cell_mask, self.weights, 0.0)))

    def mass(self, subset: Subset) -> float:
        """mu(A)"""
        return float(np.sum(self.weights[_as_mask(self.space, subset)]))

    @property
    def total_mass(self) -> float:
        """mu(Omega)"""
        return float(np.sum(self.weights))

    def is_positive(self) -> bool:
        return bool(np.all(self.atomic >= 0) and np.all(self.diffuse >= 0))

    def support(self, tau: float = TAU_SUPP) -> np.ndarray:
        return np.abs(self.weights) > tau

    def allclose(self, other: "SignedMeasure", atol: float = 1e-12) -> bool:
        check_same_space(self, other)
        return bool(np.allclose(self.weights, other.weights, rtol=0.0, atol=atol)
                    and np.allclose(self.diffuse, other.diffuse, rtol=0.0, atol=atol))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignedMeasure):
            return NotImplemented
        return (self.space == other.space and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.diffuse, other.diffuse))

    __hash__ = None

    def __add__(self, other: "SignedMeasure") -> "SignedMeasure":
        check_same_space(self, other)
        return SignedMeasure(self.space, self.weights + other.weights, self.diffuse + other.diffuse)

    def __sub__(self, other: "SignedMeasure") -> "SignedMeasure":
        check_same_space(self, other)
        return SignedMeasure(self.space, self.weights - other.weights, self.diffuse - other.diffuse)

    def __neg__(self) -> "SignedMeasure":
        return SignedMeasure(self.space, -self.weights, -self.diffuse)

    def __mul__(self, scalar: float) -> "SignedMeasure":
        scalar = float(scalar)
        return SignedMeasure(self.space, scalar * self.weights, scalar * self.diffuse)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SignedMeasure(n={self.space.n}, weights={np.array2string(self.weights, precision=6)})"


def _from_parts(space: StateSpace, atomic: np.ndarray, diffuse: np.ndarray) -> SignedMeasure:
    return SignedMeasure(space, atomic + diffuse, diffuse)


def zero_measure(space: StateSpace) -> SignedMeasure:
    return SignedMeasure(space, np.zeros(space.n))


def dirac(space: StateSpace, x: Union[int, str]) -> SignedMeasure:
    """Unit point mass at x (atomic even on a Cell state)."""
    weights = np.zeros(space.n)
    weights[space.index(x)] = 1.0
    return SignedMeasure(space, weights, np.zeros(space.n))


def lebesgue(space: StateSpace) -> SignedMeasure:
    """Reference measure restricted to the cells (cell widths as diffuse mass)."""
    weights = np.where(space.cell_mask, np.array(space.reference_weights), 0.0)
    return SignedMeasure(space, weights)


def uniform_probability(space: StateSpace) -> SignedMeasure:
    return SignedMeasure(space, np.full(space.n, 1.0 / space.n))


def from_density(space: StateSpace, density: Sequence[float]) -> SignedMeasure:
    """Measure with the given density against the reference weights."""
    density = np.asarray(density, dtype=float)
    return SignedMeasure(space, density * np.array(space.reference_weights))


def restrict(mu: SignedMeasure, subset: Subset) -> SignedMeasure:
    """mu_A = mu(A intersect .)"""
    mask = _as_mask(mu.space, subset)
    return SignedMeasure(mu.space, np.where(mask, mu.weights, 0.0), np.where(mask, mu.diffuse, 0.0))


def total_variation(mu: SignedMeasure) -> float:
    """|mu|(Omega)"""
    return float(np.sum(np.abs(mu.atomic) + np.abs(mu.diffuse)))


def jordan_decomposition(mu: SignedMeasure) -> Tuple[SignedMeasure, SignedMeasure]:
    """Mutually singular (mu+, mu-) with mu = mu+ - mu-."""
    atomic, diffuse = mu.atomic, mu.diffuse
    positive = _from_parts(mu.space, np.maximum(atomic, 0.0), np.maximum(diffuse, 0.0))
    negative = _from_parts(mu.space, np.maximum(-atomic, 0.0), np.maximum(-diffuse, 0.0))
    return positive, negative


def hahn_sets(mu: SignedMeasure) -> Tuple[frozenset, frozenset]:
    """Hahn decomposition on the states; zero-weight states go to the negative set."""
    positive = frozenset(int(x) for x in np.flatnonzero(mu.weights > 0))
    negative = frozenset(mu.space.states) - positive
    return positive, negative


def integrate(f: BoundedFunction, mu: SignedMeasure) -> float:
    """<f, mu>"""
    check_same_space(f, mu)
    return float(np.dot(f.values, mu.weights))


def measure_sup(first: SignedMeasure, second: SignedMeasure) -> SignedMeasure:
    check_same_space(first, second)
    return _from_parts(first.space, np.maximum(first.atomic, second.atomic),
                       np.maximum(first.diffuse, second.diffuse))


def measure_inf(first: SignedMeasure, second: SignedMeasure) -> SignedMeasure:
    check_same_space(first, second)
    return _from_parts(first.space, np.minimum(first.atomic, second.atomic),
                       np.minimum(first.diffuse, second.diffuse))


def measure_leq(first: SignedMeasure, second: SignedMeasure, tol: float = 0.0) -> bool:
    check_same_space(first, second)
    return bool(np.all(first.atomic <= second.atomic + tol) and np.all(first.diffuse <= second.diffuse + tol))


def sequence_sup(
    terms: Sequence[SignedMeasure],
    bound: SignedMeasure,
    tol: float = SEQUENCE_INCREMENT_TOL
) -> SignedMeasure:
    """Setwise supremum of an increasing sequence dominated by ``bound``.

    Raises:
        PreconditionError: empty, non-monotone or unbounded input
    """
    if not terms:
        raise PreconditionError("sequence_sup needs at least one term")
    check_same_space(bound, *terms)
    for i, term in enumerate(terms):
        if not measure_leq(term, bound, tol):
            raise PreconditionError(f"term {i} is not dominated by the bound")
        if i and not measure_leq(terms[i - 1], term, tol):
            raise PreconditionError(f"sequence is not increasing at term {i}")

    result = terms[0]
    for term in terms[1:]:
        result = measure_sup(result, term)
    if len(terms) > 1:
        increment = total_variation(terms[-1] - terms[-2])
        if increment >= tol:
            logger.warning("Supremum taken over a finite prefix; last TV increment %.3e", increment)
    return result


def absolutely_continuous(mu: SignedMeasure, nu: SignedMeasure, tau: float = TAU_SUPP) -> bool:
    """mu << nu, compared on supports of the atomic and diffuse parts."""
    check_same_space(mu, nu)
    atomic_ok = np.all(~(np.abs(mu.atomic) > tau) | (np.abs(nu.atomic) > tau))
    diffuse_ok = np.all(~(np.abs(mu.diffuse) > tau) | (np.abs(nu.diffuse) > tau))
    return bool(atomic_ok and diffuse_ok)


def equivalent(mu: SignedMeasure, nu: SignedMeasure, tau: float = TAU_SUPP) -> bool:
    return absolutely_continuous(mu, nu, tau) and absolutely_continuous(nu, mu, tau)


def tv_distance(mu: SignedMeasure, nu: SignedMeasure) -> float:
    return total_variation(mu - nu)


def band_projection_ac(mu: SignedMeasure) -> SignedMeasure:
    """Projection onto the band of atomless measures: keeps the diffuse part."""
    return SignedMeasure(mu.space, mu.diffuse.copy(), mu.diffuse)
