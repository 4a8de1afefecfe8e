"""
Kernel Lattice Package
======================

Lattice theory of bounded transition kernels on finite carriers.

This package provides tools for:
- State spaces of atoms and cells, bases of open sets and disjoint refinements
- Signed measures with Jordan/Hahn decompositions and lattice operations
- Transition kernels: modulus, positive and negative parts, meet, join, composition
- Operators on measures, the brute-force positive-part oracle and weak continuity checks
- Markov chains and semigroups: stability hypotheses and total variation convergence

Main Components:
- state_space, measure, kernel, operator: the lattice core
- semigroup, doob: Markov models and their stability analysis
- parsers, schema, reports: JSON/CSV input and output
- cli: the ``kernel-lattice`` command

Example Usage:
    >>> from kernel_lattice import make_space, TransitionKernel, modulus
    >>> space = make_space("discrete", n=2)
    >>> modulus(TransitionKernel(space, [[1, -1], [0, 2]])).matrix.tolist()
    [[1.0, 1.0], [0.0, 2.0]]
"""

__version__ = "0.1.0"

from .error_handling import (
    CarrierTooLargeError,
    ConvergenceError,
    HypothesisFailure,
    KernelLatticeError,
    PreconditionError,
    SchemaError,
    SpaceMismatchError,
    ToleranceExceeded,
)
from .kernel import (
    TransitionKernel,
    bound,
    compose,
    kernel_join,
    kernel_leq,
    kernel_meet,
    modulus,
    negative_part,
    positive_part,
)
from .measure import SignedMeasure, dirac, jordan_decomposition, total_variation
from .operator import MeasureOperator, positive_part_oracle
from .semigroup import SemigroupModel, evaluate, invariant_measure
from .state_space import StateSpace, make_space

__all__ = [
    '__version__',
    'CarrierTooLargeError',
    'ConvergenceError',
    'HypothesisFailure',
    'KernelLatticeError',
    'PreconditionError',
    'SchemaError',
    'SpaceMismatchError',
    'ToleranceExceeded',
    'TransitionKernel',
    'bound',
    'compose',
    'kernel_join',
    'kernel_leq',
    'kernel_meet',
    'modulus',
    'negative_part',
    'positive_part',
    'SignedMeasure',
    'dirac',
    'jordan_decomposition',
    'total_variation',
    'MeasureOperator',
    'positive_part_oracle',
    'SemigroupModel',
    'evaluate',
    'invariant_measure',
    'StateSpace',
    'make_space',
]
