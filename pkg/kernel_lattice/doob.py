"""
Stability hypotheses for Markov semigroups and empirical convergence in
total variation to the invariant measure.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .error_handling import ConvergenceError, HypothesisFailure, PreconditionError
from .kernel import compose, kernel_meet
from .measure import SignedMeasure, dirac, equivalent, tv_distance
from .operator import apply
from .reports import CheckResult, HypothesisReport
from .semigroup import SemigroupModel, Variant, invariant_measure, is_markovian
from .state_space import BoundedFunction, constant_function, indicator_function

logger = logging.getLogger(__name__)

TAU_SUPP = 1e-12
TAU_SC = 1e-6
SEMIGROUP_LAW_TOL = 1e-10
DEFAULT_T_GRID = tuple(10.0 ** -k for k in range(9))
DISTANCE_FLOOR = 1e-12

HYPOTHESIS_CHECKS = (
    "markovian",
    "stochastic_continuity",
    "regularity",
    "regularity_propagation",
    "overlap",
    "expanding",
    "invariant_measure",
    "invariant_equivalence",
)


def _check_t0(model: SemigroupModel, t0) -> None:
    model.check_time(t0)
    if not t0 > 0:
        raise PreconditionError(f"t0 must be positive, got {t0!r}")


def default_probes(model: SemigroupModel) -> List[Tuple[BoundedFunction, int]]:
    """The constant 1 and every state indicator, each paired with every state."""
    functions = [constant_function(model.space)]
    functions.extend(indicator_function(model.space, [y]) for y in model.space.states)
    return [(f, x) for f in functions for x in model.space.states]


def stochastic_continuity_check(
    model: SemigroupModel,
    probes: Optional[Sequence[Tuple[BoundedFunction, int]]] = None,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    tau_sc: float = TAU_SC
) -> CheckResult:
    """|(T(t) f)(x) - f(x)| along a grid decreasing to 0.

    Passes when every deviation at the last grid time is below tau_sc.
    """
    if model.variant is not Variant.CONTINUOUS:
        raise PreconditionError("stochastic continuity needs a continuous-time model")
    if not t_grid:
        raise PreconditionError("t_grid must be nonempty")
    if np.any(np.diff(t_grid) >= 0) or t_grid[-1] < 0:
        raise PreconditionError("t_grid must decrease strictly towards 0")
    probes = list(probes) if probes is not None else default_probes(model)

    deviations = np.zeros((len(probes), len(t_grid)))
    for j, t in enumerate(t_grid):
        k = model.evaluate(t)
        for i, (f, x) in enumerate(probes):
            deviations[i, j] = abs(float(k.matrix[x] @ f.values) - f.values[x])

    worst = int(np.argmax(deviations[:, -1]))
    final = float(deviations[worst, -1])
    witness = {
        "probe": worst,
        "state": int(probes[worst][1]),
        "t": list(t_grid),
        "deviation": deviations[worst].tolist(),
    }
    return CheckResult("stochastic_continuity", final < tau_sc, final, witness)


def regularity_check(model: SemigroupModel, t0, tau: float = TAU_SUPP) -> CheckResult:
    """All rows of k_t0 are pairwise equivalent measures.

    On failure the witness names x, y and a set charged by k_t0(x, .) but not
    by k_t0(y, .).
    """
    _check_t0(model, t0)
    supports = np.abs(model.evaluate(t0).matrix) > tau
    for x in model.space.states:
        for y in model.space.states:
            only_x = supports[x] & ~supports[y]
            if np.any(only_x):
                witness = {"x": x, "y": y, "set": [int(s) for s in np.flatnonzero(only_x)]}
                return CheckResult("regularity", False, witness=witness)
    return CheckResult("regularity", True)


def regularity_propagation_check(
    model: SemigroupModel,
    t0,
    r_grid: Sequence,
    tol: float = SEMIGROUP_LAW_TOL,
    tau: float = TAU_SUPP
) -> CheckResult:
    """k_{t0+r} = k_r k_t0 and rows of k_{t0+r} equivalent to rows of k_t0, for every r."""
    if not regularity_check(model, t0, tau):
        raise PreconditionError(f"model is not {t0}-regular")
    base = model.evaluate(t0)
    base_support = np.abs(base.matrix[0]) > tau
    worst = 0.0
    for r in r_grid:
        later = model.evaluate(t0 + r)
        law_error = float(np.max(np.abs(later.matrix - compose(model.evaluate(r), base).matrix)))
        worst = max(worst, law_error)
        supports = np.abs(later.matrix) > tau
        if law_error > tol:
            return CheckResult("regularity_propagation", False, worst, {"r": r, "law_error": law_error})
        if np.any(supports != base_support[None, :]):
            return CheckResult("regularity_propagation", False, worst, {"r": r, "support_changed": True})
    return CheckResult("regularity_propagation", True, worst)


def overlap_check(model: SemigroupModel, s, r, tau: float = TAU_SUPP) -> CheckResult:
    """min_x q(x, Omega) > 0 for q = k_s meet k_r."""
    if not r > s >= 0:
        raise PreconditionError(f"overlap needs r > s >= 0, got s={s!r}, r={r!r}")
    q = kernel_meet(model.evaluate(s), model.evaluate(r))
    masses = q.total_masses
    x = int(np.argmin(masses))
    minimum = float(masses[x])
    return CheckResult("overlap", minimum > tau, minimum, {"x": x, "s": s, "r": r})


def expanding_check(model: SemigroupModel, t, mu_ref: SignedMeasure, tau: float = TAU_SUPP) -> CheckResult:
    """Every row of k_t charges every state in the support of mu_ref."""
    target = mu_ref.support(tau)
    k = model.evaluate(t)
    missing = (k.matrix <= tau) & target[None, :]
    if np.any(missing):
        x, y = (int(v) for v in np.argwhere(missing)[0])
        return CheckResult("expanding", False, witness={"x": x, "state": y, "t": t})
    return CheckResult("expanding", True)


def time_grid(model: SemigroupModel, t0, t_max, grid: str = "geometric") -> np.ndarray:
    """Strictly increasing times up to t_max: t0 * 2^j, or t0, 2 t0, 3 t0, ..."""
    if grid not in ("geometric", "linear"):
        raise PreconditionError(f"grid must be 'geometric' or 'linear', got {grid!r}")
    _check_t0(model, t0)
    if t_max < t0:
        raise PreconditionError(f"t_max={t_max} is below t0={t0}")
    times = []
    j = 0
    while True:
        t = t0 * 2 ** j if grid == "geometric" else t0 * (j + 1)
        if t > t_max:
            break
        times.append(t)
        j += 1
    return np.array(times, dtype=int if model.variant is Variant.DISCRETE else float)


def fit_rate(times: np.ndarray, distances: np.ndarray, window: int = 10, floor: float = DISTANCE_FLOOR) -> Optional[float]:
    """Geometric decay rate per unit time from a log-linear fit over the tail."""
    keep = distances > floor
    t, d = times[keep][-window:], distances[keep][-window:]
    if t.size < 2:
        return None
    slope, _ = np.polyfit(t.astype(float), np.log(d), 1)
    return float(np.exp(slope))


@dataclass
class ConvergenceTrace:
    """Distances ||T(t) nu - nu(Omega) mu|| over a time grid"""
    times: np.ndarray
    distances: np.ndarray
    rate: Optional[float]
    tol: float
    start: str = "nu"

    def __post_init__(self):
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise PreconditionError("trace times must be strictly increasing")
        if np.any(self.distances < 0):
            raise PreconditionError("trace distances are nonnegative")

    @property
    def terminal_distance(self) -> float:
        return float(self.distances[-1])

    @property
    def passed(self) -> bool:
        return self.terminal_distance <= self.tol

    @property
    def diverged(self) -> bool:
        """Distance never decreased over the whole trace while missing tol."""
        return (not self.passed) and bool(np.all(np.diff(self.distances) >= -DISTANCE_FLOOR))

    def hitting_time(self, tol: Optional[float] = None):
        """First grid time with distance at most tol, or None."""
        tol = self.tol if tol is None else tol
        hits = np.flatnonzero(self.distances <= tol)
        return self.times[hits[0]].item() if hits.size else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "tv_distance": self.distances})

    def to_dict(self) -> Dict[str, object]:
        return {
            "start": self.start,
            "rate": self.rate,
            "terminal_distance": self.terminal_distance,
            "passed": self.passed,
            "diverged": self.diverged,
            "hitting_time": self.hitting_time(),
        }


def traces_frame(traces: Sequence[ConvergenceTrace]) -> pd.DataFrame:
    """One table for several traces, with a leading start column when needed."""
    if len(traces) == 1:
        return traces[0].to_frame()
    frames = []
    for trace in traces:
        frame = trace.to_frame()
        frame.insert(0, "start", trace.start)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def doob_convergence(
    model: SemigroupModel,
    nu: SignedMeasure,
    t_max=128,
    tol: float = 1e-8,
    t0=None,
    grid: str = "geometric",
    fit_window: int = 10,
    mu: Optional[SignedMeasure] = None,
    start: str = "nu",
    seed: int = 0
) -> ConvergenceTrace:
    """Trace t -> ||T(t) nu - nu(Omega) mu|| with a fitted geometric rate.

    Raises:
        HypothesisFailure: the invariant measure is not unique
    """
    if mu is None:
        result = invariant_measure(model, seed=seed)
        if not result.unique:
            raise HypothesisFailure("convergence needs a unique invariant probability measure")
        mu = result.measure
    t0 = model.default_t0 if t0 is None else t0
    times = time_grid(model, t0, t_max, grid)
    limit = nu.total_mass * mu
    distances = np.array([tv_distance(apply(model.evaluate(t), nu), limit) for t in times])
    trace = ConvergenceTrace(times, distances, fit_rate(times, distances, fit_window), tol, start)
    if trace.diverged:
        logger.warning("Trace from %s does not decrease (distance %.3e)", start, trace.terminal_distance)
    logger.debug("Trace from %s: terminal %.3e, rate %s", start, trace.terminal_distance, trace.rate)
    return trace


def _propagation_grid(model: SemigroupModel, t0) -> Tuple:
    if model.variant is Variant.DISCRETE:
        return (0, 1, 2, 3)
    return (0.0, 0.1 * t0, t0, 10.0 * t0)


def doob_hypothesis_report(
    model: SemigroupModel,
    t0=None,
    t_max=128,
    tol: float = 1e-8,
    grid: str = "geometric",
    fit_window: int = 10,
    seed: int = 0,
    tau_supp: float = TAU_SUPP,
    tau_sc: float = TAU_SC,
    semigroup_law: float = SEMIGROUP_LAW_TOL,
    markov_mass: float = 1e-9,
    power_tol: float = 1e-12,
    max_iterations: int = 1_000_000
) -> Tuple[HypothesisReport, List[ConvergenceTrace]]:
    """Run every stability check and the convergence sweep from each point mass.

    Failures are report entries, never exceptions. Returns the report and the
    convergence traces (empty when no unique invariant measure exists).
    """
    t0 = model.default_t0 if t0 is None else t0
    _check_t0(model, t0)
    report = HypothesisReport()
    k_t0 = model.evaluate(t0)

    report.add(CheckResult("markovian", is_markovian(k_t0, markov_mass)
                           and is_markovian(model.evaluate(model.default_t0), markov_mass)))

    if model.variant is Variant.CONTINUOUS:
        report.add(stochastic_continuity_check(model, tau_sc=tau_sc))
    else:
        report.add(CheckResult("stochastic_continuity", None, detail="discrete time has no t -> 0 limit"))

    regular = report.add(regularity_check(model, t0, tau_supp))
    if regular:
        report.add(regularity_propagation_check(model, t0, _propagation_grid(model, t0), semigroup_law, tau_supp))
    else:
        report.add(CheckResult("regularity_propagation", None, detail="model is not t0-regular"))

    report.add(overlap_check(model, t0, 2 * t0, tau_supp))

    try:
        invariant = invariant_measure(model, power_tol, max_iterations, seed)
    except ConvergenceError as e:
        report.add(CheckResult("invariant_measure", False, detail=str(e)))
        for name in ("expanding", "invariant_equivalence", "convergence"):
            report.add(CheckResult(name, None, detail="no invariant measure"))
        return report, []

    mu = invariant.measure
    report.add(CheckResult("invariant_measure", invariant.unique, invariant.residual,
                           {"measure": mu.weights.tolist(), "iterations": invariant.iterations}))
    report.add(expanding_check(model, t0, mu, tau_supp))

    inequivalent = [x for x, row in enumerate(k_t0.rows()) if not equivalent(mu, row, tau_supp)]
    report.add(CheckResult("invariant_equivalence", not inequivalent,
                           witness={"rows": inequivalent} if inequivalent else None))
    report.notes["fixed_point_identification"] = {
        "dual_fixed_point": "constant function 1",
        "quasi_interior_fixed_point": "invariant measure",
    }

    if not invariant.unique:
        report.add(CheckResult("convergence", None, detail="invariant measure is not unique"))
        return report, []

    traces = [
        doob_convergence(model, dirac(model.space, x), t_max, tol, t0, grid, fit_window,
                         mu=mu, start=model.space.labels[x])
        for x in model.space.states
    ]
    worst = max(trace.terminal_distance for trace in traces)
    rates = [trace.rate for trace in traces if trace.rate is not None]
    report.add(CheckResult("convergence", all(trace.passed for trace in traces), worst,
                           {"rate": max(rates) if rates else None,
                            "diverged": [trace.start for trace in traces if trace.diverged]}))
    return report, traces


def hypotheses_hold(report: HypothesisReport) -> bool:
    return all(report[name].passed is not False for name in HYPOTHESIS_CHECKS if name in report)
