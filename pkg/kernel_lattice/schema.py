"""
Validated JSON documents for spaces, measures, functions, kernels and models.
"""
import logging
from typing import Any, List, Literal, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .error_handling import SchemaError

logger = logging.getLogger(__name__)

DocumentT = TypeVar("DocumentT", bound=BaseModel)


class SpaceDocument(BaseModel):
    """{"kind": ..., "n": ..., "a": ..., "b": ..., "N": ..., "atoms": ...}"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["discrete", "interval", "two_sided_seq", "mixed"]
    n: Optional[int] = None
    a: Optional[float] = None
    b: Optional[float] = None
    N: Optional[int] = None
    atoms: Optional[int] = None

    @model_validator(mode="after")
    def check_fields_for_kind(self):
        required = {
            "discrete": ("n",),
            "interval": ("n", "a", "b"),
            "two_sided_seq": ("N",),
            "mixed": ("n", "a", "b", "atoms"),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} space needs {', '.join(missing)}")
        return self


class MeasureDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    space: SpaceDocument
    weights: List[float]
    diffuse: Optional[List[float]] = None


class FunctionDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    space: SpaceDocument
    values: List[float]


class SparseEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    to: Union[int, str]
    w: float


class SparseRow(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    source: Union[int, str] = Field(alias="from")
    entries: List[SparseEntry] = Field(default_factory=list)


class KernelDocument(BaseModel):
    """Dense rows [[...], ...] or sparse rows [{"from": i, "entries": [{"to": j, "w": v}]}]

    An optional dense "diffuse" matrix holds the spread part of every row.
    """
    model_config = ConfigDict(extra="forbid")

    space: SpaceDocument
    rows: Union[List[List[float]], List[SparseRow]]
    diffuse: Optional[List[List[float]]] = None

    @property
    def is_sparse(self) -> bool:
        return bool(self.rows) and isinstance(self.rows[0], SparseRow)


class ModelDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variant: Literal["discrete", "continuous"]
    matrix: List[List[float]]
    space: Optional[SpaceDocument] = None

    @field_validator("matrix")
    @classmethod
    def validate_square(cls, v):
        if not v or any(len(row) != len(v) for row in v):
            raise ValueError("matrix must be square and nonempty")
        return v


def _field_path(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ())) or "<document>"
    return f"{location}: {first.get('msg', 'invalid value')}"


def validate_document(document_class: Type[DocumentT], data: Any, source: str = "<input>") -> DocumentT:
    """Validate raw JSON data; errors name the offending field.

    Raises:
        SchemaError: the data does not match the document schema
    """
    try:
        return document_class.model_validate(data)
    except ValidationError as e:
        message = f"{source}: invalid {document_class.__name__} at {_field_path(e)}"
        logger.debug(message)
        raise SchemaError(message) from e
