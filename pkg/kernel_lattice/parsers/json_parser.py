"""
JSON parsers for spaces, measures, bounded functions, kernels and models.

Floats pass through the json module unchanged, so parse(emit(x)) == x.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from ..error_handling import SchemaError, SpaceError
from ..kernel import TransitionKernel, kernel_from_sparse
from ..measure import SignedMeasure
from ..schema import (
    FunctionDocument,
    KernelDocument,
    MeasureDocument,
    ModelDocument,
    SpaceDocument,
    validate_document,
)
from ..semigroup import SemigroupModel
from ..state_space import BoundedFunction, StateSpace, make_space
from .base_parser import BaseParser

logger = logging.getLogger(__name__)


def _space_from_document(document: SpaceDocument, source: str) -> StateSpace:
    try:
        return make_space(document.kind, n=document.n, a=document.a, b=document.b,
                          N=document.N, atoms=document.atoms)
    except SpaceError as e:
        raise SchemaError(f"{source}: invalid space ({e})") from e


def _check_length(values: List[float], space: StateSpace, field: str, source: str) -> None:
    if len(values) != space.n:
        raise SchemaError(f"{source}: {field} has {len(values)} entries for {space.n} states")


class SpaceParser(BaseParser):
    """Parser for state space descriptors."""

    kind = "space"

    def parse_data(self, data: Any, source: str = "<input>") -> StateSpace:
        return _space_from_document(validate_document(SpaceDocument, data, source), source)

    def emit(self, obj: StateSpace) -> Dict[str, Any]:
        return obj.descriptor()


class MeasureParser(BaseParser):
    """Parser for signed measures; the diffuse part is emitted only when it differs from the default."""

    kind = "measure"

    def parse_data(self, data: Any, source: str = "<input>") -> SignedMeasure:
        document = validate_document(MeasureDocument, data, source)
        space = _space_from_document(document.space, source)
        _check_length(document.weights, space, "weights", source)
        if document.diffuse is not None:
            _check_length(document.diffuse, space, "diffuse", source)
        try:
            return SignedMeasure(space, document.weights, document.diffuse)
        except ValueError as e:
            raise SchemaError(f"{source}: {e}") from e

    def emit(self, obj: SignedMeasure) -> Dict[str, Any]:
        out: Dict[str, Any] = {"space": obj.space.descriptor(), "weights": obj.weights.tolist()}
        if not obj.is_default_split:
            out["diffuse"] = obj.diffuse.tolist()
        return out


class FunctionParser(BaseParser):
    """Parser for bounded functions."""

    kind = "function"

    def parse_data(self, data: Any, source: str = "<input>") -> BoundedFunction:
        document = validate_document(FunctionDocument, data, source)
        space = _space_from_document(document.space, source)
        _check_length(document.values, space, "values", source)
        return BoundedFunction(space, document.values)

    def emit(self, obj: BoundedFunction) -> Dict[str, Any]:
        return {"space": obj.space.descriptor(), "values": obj.values.tolist()}


class KernelParser(BaseParser):
    """Parser for transition kernels in dense or sparse row form."""

    kind = "kernel"

    def __init__(self, sparse: bool = False):
        self.sparse = sparse

    def parse_data(self, data: Any, source: str = "<input>") -> TransitionKernel:
        document = validate_document(KernelDocument, data, source)
        space = _space_from_document(document.space, source)
        diffuse = None
        if document.diffuse is not None:
            if len(document.diffuse) != space.n:
                raise SchemaError(f"{source}: diffuse has {len(document.diffuse)} entries for {space.n} states")
            for i, row in enumerate(document.diffuse):
                _check_length(row, space, f"diffuse.{i}", source)
            diffuse = np.array(document.diffuse, dtype=float)
        try:
            if document.is_sparse or not document.rows:
                rows = [(row.source, [(e.to, e.w) for e in row.entries]) for row in document.rows]
                matrix = kernel_from_sparse(space, rows).matrix
            else:
                if len(document.rows) != space.n:
                    raise SchemaError(f"{source}: rows has {len(document.rows)} entries for {space.n} states")
                for i, row in enumerate(document.rows):
                    _check_length(row, space, f"rows.{i}", source)
                matrix = np.array(document.rows, dtype=float)
            return TransitionKernel(space, matrix, diffuse)
        except SchemaError:
            raise
        except ValueError as e:
            raise SchemaError(f"{source}: {e}") from e

    def emit(self, obj: TransitionKernel) -> Dict[str, Any]:
        out: Dict[str, Any] = {"space": obj.space.descriptor()}
        if obj.has_diffuse_rows:
            out["diffuse"] = obj.diffuse.tolist()
        if not self.sparse:
            out["rows"] = obj.matrix.tolist()
            return out
        rows = []
        for i, row in enumerate(obj.matrix):
            entries = [{"to": int(j), "w": float(row[j])} for j in np.flatnonzero(row)]
            if entries:
                rows.append({"from": i, "entries": entries})
        out["rows"] = rows
        return out


class ModelParser(BaseParser):
    """Parser for discrete chains and continuous-time rate matrices."""

    kind = "model"

    def parse_data(self, data: Any, source: str = "<input>") -> SemigroupModel:
        document = validate_document(ModelDocument, data, source)
        space = _space_from_document(document.space, source) if document.space else None
        try:
            return SemigroupModel(document.variant, document.matrix, space)
        except ValueError as e:
            raise SchemaError(f"{source}: invalid model ({e})") from e

    def emit(self, obj: SemigroupModel) -> Dict[str, Any]:
        out: Dict[str, Any] = {"variant": obj.variant.value, "matrix": obj.matrix.tolist()}
        if obj.space.descriptor() != {"kind": "discrete", "n": obj.n}:
            out["space"] = obj.space.descriptor()
        return out


def parse_json(kind: str, file_path: Union[str, Path]) -> Any:
    """Parse a JSON document of the given kind."""
    from . import get_parser  # Import here to avoid circular imports

    parser = get_parser(kind)
    if parser is None:
        raise SchemaError(f"unknown document kind {kind!r}")
    return parser.parse(file_path)
