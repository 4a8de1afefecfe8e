"""
Operators on measures: kernel operators, black-box linear maps, the
brute-force positive-part oracle and the weak-continuity diagnostics.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .error_handling import CarrierTooLargeError, PreconditionError
from .kernel import DEFAULT_N_ORACLE, TransitionKernel, kernel_from_rows, positive_part
from .measure import SignedMeasure, Subset, _as_mask, dirac, measure_leq, tv_distance
from .state_space import (
    BasisSet,
    BoundedFunction,
    StateSpace,
    TopologyKind,
    check_same_space,
    is_continuous,
    refine_to_disjoint,
    subset_patterns,
)

logger = logging.getLogger(__name__)

DEFAULT_WEAK_CONTINUITY_TOL = 1e-10
DEFAULT_LINEARITY_TOL = 1e-10


class MeasureOperator:
    """Operator (T mu)(A) = sum_x k(x, A) mu(x) induced by a transition kernel."""

    def __init__(self, kernel: TransitionKernel):
        self.kernel = kernel

    @property
    def space(self) -> StateSpace:
        return self.kernel.space

    @property
    def norm(self) -> float:
        """Operator norm on measures, equal to the kernel bound."""
        return self.kernel.bound

    def apply(self, mu: SignedMeasure) -> SignedMeasure:
        """Point masses pick up the rows as they are; spread mass keeps the
        point-carried part of the rows spread on cells."""
        check_same_space(self.kernel, mu)
        k = self.kernel
        carried = np.where(self.space.cell_mask, mu.diffuse @ k.atomic, 0.0)
        return SignedMeasure(self.space, mu.weights @ k.matrix, mu.weights @ k.diffuse + carried)

    def adjoint_apply(self, f: BoundedFunction) -> BoundedFunction:
        """(T* f)(x) = <f, k(x, .)>"""
        check_same_space(self.kernel, f)
        return BoundedFunction(self.space, self.kernel.matrix @ f.values)

    def __call__(self, mu: SignedMeasure) -> SignedMeasure:
        return self.apply(mu)

    def __repr__(self) -> str:
        return f"MeasureOperator({self.kernel!r})"


OperatorLike = Union[MeasureOperator, TransitionKernel]


def as_operator(T: OperatorLike) -> MeasureOperator:
    return T if isinstance(T, MeasureOperator) else MeasureOperator(T)


def apply(T: OperatorLike, mu: SignedMeasure) -> SignedMeasure:
    return as_operator(T).apply(mu)


def adjoint_apply(T: OperatorLike, f: BoundedFunction) -> BoundedFunction:
    return as_operator(T).adjoint_apply(f)


def random_measure(space: StateSpace, rng: np.random.Generator, positive: bool = False) -> SignedMeasure:
    """Random measure whose cell weights are split between atomic and diffuse parts."""
    low = 0.0 if positive else -1.0
    weights = rng.uniform(low, 1.0, space.n)
    diffuse = np.where(space.cell_mask, weights * rng.uniform(0.0, 1.0, space.n), 0.0)
    return SignedMeasure(space, weights, diffuse)


class BlackBoxOperator:
    """Opaque linear map on the signed measures of a space."""

    def __init__(self, space: StateSpace, action: Callable[[SignedMeasure], SignedMeasure], name: str = "B"):
        self.space = space
        self.action = action
        self.name = name

    @classmethod
    def from_kernel(cls, kernel: TransitionKernel, name: str = "T") -> "BlackBoxOperator":
        return cls(kernel.space, MeasureOperator(kernel).apply, name)

    def apply(self, mu: SignedMeasure) -> SignedMeasure:
        check_same_space(self.space, mu)
        result = self.action(mu)
        check_same_space(self.space, result)
        return result

    __call__ = apply

    def check_linearity(
        self,
        rng: Optional[np.random.Generator] = None,
        trials: int = 20,
        tol: float = DEFAULT_LINEARITY_TOL
    ) -> bool:
        """Spot-check B(a mu + b nu) = a B(mu) + b B(nu) on random inputs."""
        rng = rng if rng is not None else np.random.default_rng(0)
        for _ in range(trials):
            mu, nu = random_measure(self.space, rng), random_measure(self.space, rng)
            a, b = rng.uniform(-2.0, 2.0, 2)
            lhs = self.apply(a * mu + b * nu)
            rhs = a * self.apply(mu) + b * self.apply(nu)
            if tv_distance(lhs, rhs) > tol:
                logger.debug("%s failed the linearity spot-check", self.name)
                return False
        return True

    def __repr__(self) -> str:
        return f"BlackBoxOperator({self.name!r}, n={self.space.n})"


@dataclass
class LinearFunctional:
    """Linear map from signed measures to the reals."""
    space: StateSpace
    evaluate: Callable[[SignedMeasure], float]
    name: str = "phi"

    def __call__(self, mu: SignedMeasure) -> float:
        check_same_space(self.space, mu)
        return float(self.evaluate(mu))


def unit_mass_functional(space: StateSpace) -> LinearFunctional:
    """<1, .>"""
    return LinearFunctional(space, lambda mu: mu.total_mass, "1")


def diffuse_mass_functional(space: StateSpace) -> LinearFunctional:
    """Total mass of the atomless part; vanishes on every point mass."""
    return LinearFunctional(space, lambda mu: float(np.sum(mu.diffuse)), "phi_ac")


def rank_one_operator(phi: LinearFunctional, nu: SignedMeasure) -> BlackBoxOperator:
    """mu -> phi(mu) nu"""
    check_same_space(phi.space, nu)
    return BlackBoxOperator(nu.space, lambda mu: phi(mu) * nu, f"{phi.name} (x) nu")


def dominated_on(
    lower: BlackBoxOperator,
    upper: BlackBoxOperator,
    probes: Sequence[SignedMeasure],
    tol: float = 1e-12
) -> bool:
    """0 <= lower(mu) <= upper(mu) for every positive probe."""
    for mu in probes:
        if not mu.is_positive():
            raise PreconditionError("domination is checked on positive measures only")
        image = lower.apply(mu)
        if not (image.is_positive() and measure_leq(image, upper.apply(mu), tol)):
            return False
    return True


def positive_part_oracle(
    T: OperatorLike,
    mu: SignedMeasure,
    n_oracle: int = DEFAULT_N_ORACLE
) -> SignedMeasure:
    """T+ mu by enumeration of every indicator 0 <= g <= 1.

    For each target state j the value is max_g sum_x g(x) k(x, {j}) mu(x), the
    coordinatewise least upper bound of {T nu : 0 <= nu <= mu}. The atomic and
    diffuse images are mutually singular, so each is maximised on its own,
    with the point masses and the spread mass of mu chosen independently.
    Does not use the kernel positive part.
    """
    kernel = as_operator(T).kernel
    check_same_space(kernel, mu)
    if not mu.is_positive():
        raise PreconditionError("positive_part_oracle needs a positive measure")
    n = kernel.space.n
    if n > n_oracle:
        raise CarrierTooLargeError(f"oracle enumerates 2^{n} patterns; carrier limit is {n_oracle} states")

    patterns = subset_patterns(n)

    def best(weights: np.ndarray, matrix: np.ndarray) -> np.ndarray:
        return (patterns @ (matrix * weights[:, None])).max(axis=0)

    cells = kernel.space.cell_mask
    spread = np.where(cells, best(mu.diffuse, kernel.atomic), 0.0)
    diffuse = best(mu.atomic, kernel.diffuse) + best(mu.diffuse, kernel.diffuse) + spread
    atomic = best(mu.atomic, kernel.atomic) + np.where(cells, 0.0, best(mu.diffuse, kernel.atomic))
    return SignedMeasure(kernel.space, atomic + diffuse, diffuse)


def operator_positive_part(T: OperatorLike) -> MeasureOperator:
    """T+ as the operator of the kernel positive part."""
    return MeasureOperator(positive_part(as_operator(T).kernel))


def keylemma_lower_bound(
    T: OperatorLike,
    mu: SignedMeasure,
    A: Subset,
    alpha: float,
    basis: Sequence[BasisSet],
    epsilon: float = 0.0
) -> float:
    """Constructive lower bound for (T+ mu_A)(Omega).

    Builds E_n = A n {k(., B_n) > alpha}, the disjoint pieces Omega_n, the
    truncation N with mu(Omega_0 u ... u Omega_N) >= mu(A) - epsilon/alpha, and
    the disjoint refinement of B_0..B_N. Returns
    sum_m sum_{n in N(m)} int_{Omega_n} k(x, B~_m) dmu(x), which equals
    sum_n int_{Omega_n} k(x, B_n) dmu(x) and lies in
    [alpha mu(A) - epsilon, (T+ mu_A)(Omega)].

    Raises:
        PreconditionError: alpha <= 0, epsilon < 0, negative mu, alpha not
            below k+(., Omega) on A, or a basis that does not cover the
            superlevel set of A
    """
    kernel = as_operator(T).kernel
    space = check_same_space(kernel, mu, *basis)
    if not alpha > 0:
        raise PreconditionError(f"alpha must be positive, got {alpha}")
    if epsilon < 0:
        raise PreconditionError(f"epsilon must be nonnegative, got {epsilon}")
    if not mu.is_positive():
        raise PreconditionError("keylemma_lower_bound needs a positive measure")
    if not basis:
        raise PreconditionError("keylemma_lower_bound needs a nonempty basis")

    in_A = _as_mask(space, A)
    positive_mass = positive_part(kernel).total_masses
    if np.any(in_A & ~(positive_mass > alpha)):
        bad = int(np.flatnonzero(in_A & ~(positive_mass > alpha))[0])
        raise PreconditionError(
            f"alpha={alpha} is not below k+(x, Omega)={positive_mass[bad]} at state {bad}"
        )

    masses = np.column_stack([kernel.masses(b) for b in basis])
    pieces: List[np.ndarray] = []
    covered = np.zeros(space.n, dtype=bool)
    for n in range(len(basis)):
        E_n = in_A & (masses[:, n] > alpha)
        pieces.append(E_n & ~covered)
        covered |= E_n
    if np.any(in_A & ~covered):
        raise PreconditionError("basis does not resolve the superlevel set of A")

    target = mu.mass(in_A) - epsilon / alpha
    cumulative = np.cumsum([mu.mass(p) for p in pieces])
    # the last index always reaches mu(A), up to rounding
    reached = np.flatnonzero(cumulative >= target - 1e-12 * max(1.0, abs(target)))
    truncation = int(reached[0]) if reached.size else len(basis) - 1
    logger.debug("Key lemma truncation at N=%d of %d basis sets", truncation, len(basis))

    refined, membership = refine_to_disjoint(list(basis[:truncation + 1]))
    total = 0.0
    for m, piece in enumerate(refined):
        column = kernel.masses(piece)
        for n in sorted(membership[m]):
            total += float(np.sum(column[pieces[n]] * mu.weights[pieces[n]]))
    return total


def reconstruct_kernel(B: Union[BlackBoxOperator, MeasureOperator]) -> TransitionKernel:
    """Kernel with rows B(delta_x)."""
    return kernel_from_rows([B.apply(dirac(B.space, x)) for x in B.space.states])


@dataclass
class WeakContinuityReport:
    passed: bool
    max_deviation: float
    witness_index: Optional[int] = None
    witness: Optional[SignedMeasure] = field(default=None, repr=False)

    def __bool__(self) -> bool:
        return self.passed


def weak_continuity_check(
    B: Union[BlackBoxOperator, MeasureOperator],
    test_measures: Sequence[SignedMeasure],
    tol: float = DEFAULT_WEAK_CONTINUITY_TOL
) -> WeakContinuityReport:
    """Compare B with the operator of its reconstructed kernel on the test measures.

    Fails with the first test measure on which they differ by more than tol in
    total variation.
    """
    if not test_measures:
        raise PreconditionError("weak_continuity_check needs at least one test measure")
    surrogate = MeasureOperator(reconstruct_kernel(B))
    worst = 0.0
    witness_index = None
    for i, mu in enumerate(test_measures):
        deviation = tv_distance(surrogate.apply(mu), B.apply(mu))
        worst = max(worst, deviation)
        if deviation > tol and witness_index is None:
            witness_index = i
    if witness_index is not None:
        logger.info("Weak continuity fails on test measure %d (deviation %.3e)", witness_index, worst)
        return WeakContinuityReport(False, worst, witness_index, test_measures[witness_index])
    return WeakContinuityReport(True, worst)


def continuity_probes(space: StateSpace) -> List[BoundedFunction]:
    """Fixed family of bounded functions probed on a two-sided sequence space.

    Constants, decaying tails with value 0 at infinity, and ramps
    min(1, |n|/m) with value 1 at infinity.
    """
    if space.kind is not TopologyKind.TWO_SIDED_SEQUENCE:
        raise PreconditionError("continuity probes are defined on two-sided sequence spaces")
    N = space.truncation
    positions = space.sequence_positions.astype(float)
    finite = np.arange(space.n) != 2 * N
    abs_pos = np.where(finite, np.abs(positions), np.inf)

    probes = [np.ones(space.n), -np.ones(space.n)]
    for power in (1, 2):
        tail = np.where(finite, 1.0 / abs_pos ** power, 0.0)
        probes.append(tail)
        probes.append(np.sign(positions) * tail)
    m = 1
    while m <= N // 2:
        probes.append(np.where(finite, np.minimum(1.0, abs_pos / m), 1.0))
        m *= 2
    return [BoundedFunction(space, p) for p in probes]


def cb_invariance_check(T: OperatorLike, space: Optional[StateSpace] = None, tolerance: float = 0.05) -> bool:
    """Whether T* maps every continuous probe function to a continuous function."""
    operator = as_operator(T)
    space = space if space is not None else operator.space
    check_same_space(operator.kernel, space)
    if space.kind is not TopologyKind.TWO_SIDED_SEQUENCE:
        raise PreconditionError(f"cb_invariance_check needs a two-sided sequence space, got {space.kind.value}")

    for f in continuity_probes(space):
        if not is_continuous(f, space, tolerance):
            continue
        image = operator.adjoint_apply(f)
        if not is_continuous(image, space, tolerance):
            logger.debug("Adjoint image of a continuous probe is discontinuous")
            return False
    return True
