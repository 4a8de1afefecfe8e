"""
Markov chains and continuous-time Markov semigroups on a finite carrier.

A discrete model is given by its one-step kernel P and evaluated at integer
times by matrix powers. A continuous model is given by a rate matrix Q and
evaluated as exp(tQ), with scipy's Pade scaling-and-squaring as the primary
method and uniformization as the independent fallback and cross-check.
"""
import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.linalg import expm
from scipy.stats import poisson

from .error_handling import ConvergenceError, PreconditionError, ToleranceExceeded
from .kernel import TransitionKernel, identity_kernel
from .measure import SignedMeasure
from .state_space import StateSpace, make_space

logger = logging.getLogger(__name__)

MODEL_TOL = 1e-12
MARKOV_MASS_TOL = 1e-9
NEGATIVE_CLIP = 1e-13
UNIFORMIZATION_SCALE = 10.0
RESIDUAL_TOL = 1e-10


class Variant(str, Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


class SemigroupModel:
    """Discrete chain (step kernel P) or continuous semigroup (rate matrix Q).

    Evaluated kernels and invariant measures are cached; each cache entry is
    written once under a lock and only read afterwards.
    """

    def __init__(
        self,
        variant: Union[str, Variant],
        matrix,
        space: Optional[StateSpace] = None,
        tol: float = MODEL_TOL
    ):
        try:
            self.variant = Variant(variant)
        except ValueError:
            raise PreconditionError(f"unknown model variant {variant!r}") from None
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise PreconditionError(f"model matrix must be square, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise PreconditionError("model matrix entries must be finite")
        self.space = space if space is not None else make_space("discrete", n=matrix.shape[0])
        if self.space.n != matrix.shape[0]:
            raise PreconditionError(f"model matrix has {matrix.shape[0]} rows for {self.space.n} states")

        row_sums = matrix.sum(axis=1)
        if self.variant is Variant.DISCRETE:
            if np.any(matrix < 0):
                raise PreconditionError("step kernel entries must be nonnegative")
            if np.any(np.abs(row_sums - 1.0) > tol):
                raise PreconditionError(f"step kernel rows must sum to 1, got {row_sums.tolist()}")
        else:
            off_diagonal = matrix[~np.eye(matrix.shape[0], dtype=bool)]
            if np.any(off_diagonal < 0):
                raise PreconditionError("rate matrix off-diagonal entries must be nonnegative")
            if np.any(np.abs(row_sums) > tol):
                raise PreconditionError(f"rate matrix rows must sum to 0, got {row_sums.tolist()}")

        matrix.setflags(write=False)
        self.matrix = matrix
        self._lock = threading.Lock()
        self._kernels: Dict[float, TransitionKernel] = {}
        self._invariant: Dict[Tuple, "InvariantMeasureResult"] = {}

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def default_t0(self) -> Union[int, float]:
        return 1 if self.variant is Variant.DISCRETE else 1.0

    def check_time(self, t) -> Union[int, float]:
        if isinstance(t, bool) or not np.isfinite(t) or t < 0:
            raise PreconditionError(f"time must be a finite nonnegative number, got {t!r}")
        if self.variant is Variant.DISCRETE:
            if float(t) != int(t):
                raise PreconditionError(f"discrete models are evaluated at integer times, got {t!r}")
            return int(t)
        return float(t)

    def evaluate(self, t) -> TransitionKernel:
        t = self.check_time(t)
        cached = self._kernels.get(t)
        if cached is not None:
            return cached
        kernel = self._compute(t)
        with self._lock:
            return self._kernels.setdefault(t, kernel)

    def _spread(self, matrix: np.ndarray) -> TransitionKernel:
        # mass landing on a cell is spread over it
        return TransitionKernel(self.space, matrix, np.where(self.space.cell_mask[None, :], matrix, 0.0))

    def _compute(self, t) -> TransitionKernel:
        if t == 0:
            return identity_kernel(self.space)
        if self.variant is Variant.DISCRETE:
            return self._spread(np.linalg.matrix_power(self.matrix, t))

        result = expm(t * self.matrix)
        small = (result < 0) & (result > -NEGATIVE_CLIP)
        result[small] = 0.0
        if np.any(result < 0) or np.any(np.abs(result.sum(axis=1) - 1.0) > MARKOV_MASS_TOL):
            logger.warning("expm(%.6g Q) lost positivity or mass; falling back to uniformization", t)
            result = uniformized_expm(self.matrix, t)
        return self._spread(result)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SemigroupModel):
            return NotImplemented
        return (self.variant is other.variant and self.space == other.space
                and np.array_equal(self.matrix, other.matrix))

    __hash__ = None

    def __repr__(self) -> str:
        return f"SemigroupModel({self.variant.value}, n={self.n})"


def evaluate(
    model: SemigroupModel,
    t,
    cross_check: bool = False,
    tol: float = 1e-10
) -> TransitionKernel:
    """Kernel k_t of the model.

    With cross_check on a continuous model, the result is compared with the
    uniformization series.

    Raises:
        PreconditionError: negative t, or non-integer t on a discrete model
        ToleranceExceeded: the two matrix exponentials disagree beyond tol
    """
    kernel = model.evaluate(t)
    if cross_check and model.variant is Variant.CONTINUOUS:
        reference = uniformized_expm(model.matrix, float(t))
        deviation = float(np.max(np.abs(kernel.matrix - reference)))
        logger.debug("expm vs uniformization at t=%.6g: %.3e", float(t), deviation)
        if deviation > tol:
            raise ToleranceExceeded(f"matrix exponential methods disagree by {deviation:.3e} at t={t}")
    return kernel


def uniformized_expm(Q: np.ndarray, t: float, tol: float = 1e-15) -> np.ndarray:
    """exp(tQ) as a Poisson mixture of powers of I + Q/lambda.

    The time is first halved s times so that lambda*t/2^s stays below a fixed
    scale, then the result is squared s times.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    rate = float(np.max(np.abs(np.diag(Q)))) if n else 0.0
    if t == 0 or rate == 0:
        return np.eye(n)

    squarings = 0
    if rate * t > UNIFORMIZATION_SCALE:
        squarings = math.ceil(math.log2(rate * t / UNIFORMIZATION_SCALE))
    h = t / 2 ** squarings
    P = np.eye(n) + Q / rate
    lam = rate * h
    terms = int(poisson.ppf(1.0 - tol, lam)) + 2
    weights = poisson.pmf(np.arange(terms + 1), lam)

    result = np.zeros((n, n))
    power = np.eye(n)
    for w in weights:
        result += w * power
        power = power @ P
    for _ in range(squarings):
        result = result @ result
    return result


def is_markovian(k: TransitionKernel, tol: float = MARKOV_MASS_TOL) -> bool:
    """Every row is a probability measure."""
    return bool(np.all(k.matrix >= 0) and np.all(np.abs(k.total_masses - 1.0) <= tol))


@dataclass
class InvariantMeasureResult:
    measure: SignedMeasure
    unique: bool
    iterations: int
    residual: float


def _iteration_matrix(model: SemigroupModel) -> np.ndarray:
    if model.variant is Variant.DISCRETE:
        # lazy chain: same invariant measures, never periodic
        return 0.5 * (np.eye(model.n) + model.matrix)
    return model.evaluate(1.0).matrix


def _power_iteration(M: np.ndarray, start: np.ndarray, tol: float, max_iterations: int) -> Tuple[np.ndarray, int]:
    current = start
    previous_step = None
    for iteration in range(1, max_iterations + 1):
        following = current @ M
        step = float(np.sum(np.abs(following - current)))
        current = following
        if step == 0.0:
            return current, iteration
        if previous_step:
            ratio = step / previous_step
            if ratio < 1.0 and step * ratio / (1.0 - ratio) <= tol:
                return current, iteration
        previous_step = step
    raise ConvergenceError(f"power iteration did not reach {tol:g} within {max_iterations} iterations")


def invariant_measure(
    model: SemigroupModel,
    tol: float = 1e-12,
    max_iterations: int = 1_000_000,
    seed: int = 0,
    uniqueness_tol: float = 1e-9,
    residual_tol: float = RESIDUAL_TOL
) -> InvariantMeasureResult:
    """Invariant probability measure by power iteration from the uniform measure.

    A second run from a random point of the simplex flags non-uniqueness when
    it lands on a different fixed point.

    Raises:
        ConvergenceError: no convergence within max_iterations, or a result
            whose residual |pi k - pi| exceeds residual_tol
    """
    key = (tol, max_iterations, seed, uniqueness_tol, residual_tol)
    cached = model._invariant.get(key)
    if cached is not None:
        return cached

    M = _iteration_matrix(model)
    uniform = np.full(model.n, 1.0 / model.n)
    fixed, iterations = _power_iteration(M, uniform, tol, max_iterations)
    rng = np.random.default_rng(seed)
    other, _ = _power_iteration(M, rng.dirichlet(np.ones(model.n)), tol, max_iterations)

    fixed = np.clip(fixed, 0.0, None)
    fixed = fixed / fixed.sum()
    spread = float(np.sum(np.abs(fixed - other)))
    unique = spread <= uniqueness_tol
    if not unique:
        logger.warning("Invariant measure is not unique: second start differs by %.3e", spread)

    reference = model.evaluate(model.default_t0).matrix
    residual = float(np.sum(np.abs(fixed @ reference - fixed)))
    logger.debug("Invariant measure after %d iterations, residual %.3e", iterations, residual)
    if residual > residual_tol:
        raise ConvergenceError(f"invariant measure residual {residual:.3e} exceeds {residual_tol:g}")
    result = InvariantMeasureResult(SignedMeasure(model.space, fixed), unique, iterations, residual)
    with model._lock:
        return model._invariant.setdefault(key, result)
