"""
Check results, hypothesis reports and deterministic JSON/CSV output.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Union

import numpy as np
import pandas as pd

from .measure import SignedMeasure

logger = logging.getLogger(__name__)


class CheckStatus(Enum):
    """Outcome of a single check"""
    PASSED = "pass"
    FAILED = "fail"
    NOT_APPLICABLE = "n/a"


@dataclass
class CheckResult:
    """One named check with an optional value and witness.

    passed is None when the check does not apply to the model.
    """
    name: str
    passed: Optional[bool]
    value: Optional[float] = None
    witness: Optional[Dict[str, Any]] = None
    detail: Optional[str] = None

    @property
    def status(self) -> CheckStatus:
        if self.passed is None:
            return CheckStatus.NOT_APPLICABLE
        return CheckStatus.PASSED if self.passed else CheckStatus.FAILED

    def __bool__(self) -> bool:
        return self.passed is True

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"pass": self.passed, "status": self.status.value}
        if self.value is not None:
            out["value"] = self.value
        if self.witness is not None:
            out["witness"] = self.witness
        if self.detail is not None:
            out["detail"] = self.detail
        return out


@dataclass
class HypothesisReport:
    """Ordered collection of checks for one model"""
    checks: Dict[str, CheckResult] = field(default_factory=dict)
    notes: Dict[str, Any] = field(default_factory=dict)

    def add(self, result: CheckResult) -> CheckResult:
        self.checks[result.name] = result
        return result

    def __getitem__(self, name: str) -> CheckResult:
        return self.checks[name]

    def __contains__(self, name: str) -> bool:
        return name in self.checks

    @property
    def failures(self) -> List[str]:
        return [name for name, check in self.checks.items() if check.passed is False]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {name: check.to_dict() for name, check in self.checks.items()}
        out["passed"] = self.passed
        out["failures"] = self.failures
        if self.notes:
            out["notes"] = self.notes
        return out


def to_jsonable(obj: Any) -> Any:
    """Convert results to plain JSON types."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (frozenset, set)):
        return sorted(to_jsonable(v) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, SignedMeasure):
        return to_jsonable(obj.weights)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def dumps(payload: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed indent, trailing newline)."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(payload: Any, path: Optional[Union[str, Path]] = None, stream: Optional[TextIO] = None) -> str:
    """Write JSON to a file, or to a stream when no path is given."""
    text = dumps(payload)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline="\n") as f:
            f.write(text)
        logger.info(f"Wrote JSON to {path}")
    elif stream is not None:
        stream.write(text)
    return text


def write_csv(frame: pd.DataFrame, path: Optional[Union[str, Path]] = None, stream: Optional[TextIO] = None) -> str:
    """Write a DataFrame as CSV without the index."""
    text = frame.to_csv(index=False, lineterminator="\n")
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline="") as f:
            f.write(text)
        logger.info(f"Wrote CSV to {path}")
    elif stream is not None:
        stream.write(text)
    return text


def measure_frame(mu: SignedMeasure) -> pd.DataFrame:
    """Measure as a state,weight table (states by label)."""
    return pd.DataFrame({"state": list(mu.space.labels), "weight": mu.weights})
