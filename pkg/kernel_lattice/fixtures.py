"""
Worked examples: the signed kernel on the two-sided sequence space, the
rank-one operator on a mixed atom/cell space, and small Markov models.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np

from .error_handling import PreconditionError
from .kernel import TransitionKernel, bound, kernel_from_sparse, modulus
from .measure import SignedMeasure, dirac, lebesgue, uniform_probability
from .operator import (
    BlackBoxOperator,
    adjoint_apply,
    cb_invariance_check,
    diffuse_mass_functional,
    rank_one_operator,
    unit_mass_functional,
)
from .parsers import parse_json
from .semigroup import SemigroupModel
from .state_space import StateSpace, constant_function, make_space
from .utils import get_data_dir

logger = logging.getLogger(__name__)

MIN_DEMO_TRUNCATION = 8


def sequence_example(N: int = 16) -> TransitionKernel:
    """k(n, .) = delta_n - delta_{n+1} for n >= 1, zero on the negative side and at infinity.

    The row at the truncation edge N sends its negative part to infinity.
    """
    space = make_space("two_sided_seq", N=N)
    rows = []
    for n in range(1, N + 1):
        successor = space.sequence_index(n + 1) if n < N else space.sequence_index(float("inf"))
        rows.append((space.sequence_index(n), [(space.sequence_index(n), 1.0), (successor, -1.0)]))
    return kernel_from_sparse(space, rows)


def sequence_example_report(N: int = 16, tolerance: float = 0.05) -> Dict[str, Any]:
    """k, |k|, T*1, U*1 and the continuity-invariance verdicts."""
    if N < MIN_DEMO_TRUNCATION:
        raise PreconditionError(f"sequence example needs N >= {MIN_DEMO_TRUNCATION}, got {N}")
    k = sequence_example(N)
    u = modulus(k)
    one = constant_function(k.space)
    t_star_one = adjoint_apply(k, one).values
    u_star_one = adjoint_apply(u, one).values
    positive = k.space.sequence_positions > 0
    return {
        "N": N,
        "labels": list(k.space.labels),
        "kernel": k.matrix.tolist(),
        "modulus": u.matrix.tolist(),
        "bound": {"T": bound(k), "U": bound(u)},
        "T_star_one": t_star_one.tolist(),
        "U_star_one": u_star_one.tolist(),
        "U_star_one_is_twice_positive_indicator": bool(np.array_equal(u_star_one, 2.0 * positive)),
        "cb_invariant": {"T": cb_invariance_check(k, tolerance=tolerance),
                         "U": cb_invariance_check(u, tolerance=tolerance)},
    }


@dataclass
class RankOneExample:
    """phi (x) nu with phi the atomless mass, and its dominating operator 1 (x) nu."""
    space: StateSpace
    nu: SignedMeasure
    operator: BlackBoxOperator
    dominating: BlackBoxOperator
    probes: List[SignedMeasure]


def rank_one_example(atoms: int = 2, cells: int = 8, a: float = 0.0, b: float = 1.0) -> RankOneExample:
    """Probes are the point masses at every state followed by the Lebesgue and uniform measures."""
    space = make_space("mixed", n=cells, a=a, b=b, atoms=atoms)
    nu = lebesgue(space)
    operator = rank_one_operator(diffuse_mass_functional(space), nu)
    dominating = rank_one_operator(unit_mass_functional(space), nu)
    probes = [dirac(space, x) for x in space.states]
    probes.extend([lebesgue(space), uniform_probability(space)])
    return RankOneExample(space, nu, operator, dominating, probes)


def signed_kernel() -> TransitionKernel:
    """[[1, -1], [0, 2]]"""
    return kernel_from_sparse(make_space("discrete", n=2), [(0, [(0, 1.0), (1, -1.0)]), (1, [(1, 2.0)])])


def two_state_chain() -> SemigroupModel:
    return SemigroupModel("discrete", [[0.9, 0.1], [0.2, 0.8]])


def two_state_generator() -> SemigroupModel:
    return SemigroupModel("continuous", [[-1.0, 1.0], [2.0, -2.0]])


def periodic_chain() -> SemigroupModel:
    return SemigroupModel("discrete", [[0.0, 1.0], [1.0, 0.0]])


def reducible_chain() -> SemigroupModel:
    """Two closed blocks {0, 1} and {2, 3}."""
    return SemigroupModel("discrete", [
        [0.5, 0.5, 0.0, 0.0],
        [0.5, 0.5, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.5],
        [0.0, 0.0, 0.5, 0.5],
    ])


PACKAGED_FIXTURES = {
    "signed_kernel": ("kernel", "signed_kernel.json"),
    "two_state_chain": ("model", "two_state_chain.json"),
    "two_state_generator": ("model", "two_state_generator.json"),
    "periodic_chain": ("model", "periodic_chain.json"),
    "reducible_chain": ("model", "reducible_chain.json"),
}


def load_fixture(name: str):
    """Load one of the JSON fixtures shipped in the package data directory."""
    if name not in PACKAGED_FIXTURES:
        raise PreconditionError(f"unknown fixture {name!r}; available: {sorted(PACKAGED_FIXTURES)}")
    kind, file_name = PACKAGED_FIXTURES[name]
    return parse_json(kind, get_data_dir() / file_name)
