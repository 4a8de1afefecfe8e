"""
Base parser interface for kernel lattice documents.

Each parser turns one kind of JSON document into a domain object and back.
"""
import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..error_handling import SchemaError
from ..reports import write_json

logger = logging.getLogger(__name__)


class BaseParser(ABC):
    """Base class for all document parsers."""

    kind: str = "document"

    @abstractmethod
    def parse_data(self, data: Any, source: str = "<input>") -> Any:
        """Build the domain object from decoded JSON data.

        Args:
            data: Decoded JSON value
            source: Name used in error messages

        Returns:
            The domain object
        """

    @abstractmethod
    def emit(self, obj: Any) -> Dict[str, Any]:
        """Serialize the domain object to plain JSON data."""

    def parse(self, file_path: Union[str, Path]) -> Any:
        """Read and parse a UTF-8 JSON file.

        Raises:
            SchemaError: missing file, invalid JSON or schema violation
        """
        file_path = Path(file_path)
        if not file_path.exists():
            raise SchemaError(f"{self.kind} file not found: {file_path}")
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{file_path}: invalid JSON ({e.msg} at line {e.lineno})") from e
        logger.debug(f"Parsing {self.kind} from {file_path}")
        return self.parse_data(data, str(file_path))

    def dump(self, obj: Any, file_path: Optional[Union[str, Path]] = None) -> str:
        """Write the serialized object as deterministic JSON and return the text."""
        return write_json(self.emit(obj), file_path)


def get_parser(kind: str, **options: Any) -> Optional[BaseParser]:
    """Factory for the parser of a document kind.

    Args:
        kind: space, measure, function, kernel or model
        options: Parser options (e.g. sparse=True for kernels)

    Returns:
        Parser instance, or None for an unknown kind
    """
    from . import get_parser_class  # Import here to avoid circular imports

    parser_class = get_parser_class(kind)
    if parser_class and issubclass(parser_class, BaseParser):
        return parser_class(**options)
    return None
