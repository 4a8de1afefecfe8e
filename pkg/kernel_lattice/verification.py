"""
Randomized comparison of the kernel positive part with the brute-force oracle.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from .error_handling import CarrierTooLargeError
from .kernel import DEFAULT_N_ORACLE, TransitionKernel, positive_part
from .measure import SignedMeasure
from .operator import apply, positive_part_oracle
from .state_space import StateSpace, make_space
from .utils import make_rng

logger = logging.getLogger(__name__)

MAX_DEVIATION = 1e-12


def random_kernel(
    n: int,
    rng: np.random.Generator,
    low: float = -2.0,
    high: float = 2.0,
    space: Optional[StateSpace] = None,
    diffuse: bool = False
) -> TransitionKernel:
    """Kernel with independent uniform entries in [low, high].

    With diffuse=True every row also gets an independent uniform diffuse part
    on the cells, so both parts of a row can have opposite signs.
    """
    space = space if space is not None else make_space("discrete", n=n)
    atomic = rng.uniform(low, high, (space.n, space.n))
    if not diffuse:
        return TransitionKernel(space, atomic)
    spread = np.where(space.cell_mask[None, :], rng.uniform(low, high, (space.n, space.n)), 0.0)
    return TransitionKernel(space, atomic + spread, spread)


def random_positive_measure(space: StateSpace, rng: np.random.Generator) -> SignedMeasure:
    return SignedMeasure(space, rng.uniform(0.0, 1.0, space.n))


@dataclass
class PospartVerification:
    n: int
    trials: int
    seed: int
    max_deviation: float
    threshold: float = MAX_DEVIATION

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.threshold

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "max_deviation": self.max_deviation,
            "threshold": self.threshold,
            "passed": self.passed,
        }


def verify_positive_part(
    kernel: TransitionKernel,
    trials: int = 100,
    seed: int = 0,
    n_oracle: int = DEFAULT_N_ORACLE,
    threshold: float = MAX_DEVIATION
) -> PospartVerification:
    """Max deviation between the oracle and apply(positive_part(k), mu) over random positive mu.

    Raises:
        CarrierTooLargeError: the carrier exceeds n_oracle
    """
    if kernel.space.n > n_oracle:
        raise CarrierTooLargeError(
            f"carrier has {kernel.space.n} states; the oracle is limited to {n_oracle}"
        )
    rng = make_rng(seed)
    k_plus = positive_part(kernel)
    worst = 0.0
    for _ in range(trials):
        mu = random_positive_measure(kernel.space, rng)
        oracle = positive_part_oracle(kernel, mu, n_oracle)
        deviation = float(np.max(np.abs(oracle.weights - apply(k_plus, mu).weights)))
        worst = max(worst, deviation)
    logger.info("Positive part verified on %d measures: max deviation %.3e", trials, worst)
    return PospartVerification(kernel.space.n, trials, seed, worst, threshold)
