"""
Parsers for the JSON documents read and written by the command line.

Each parser implements the BaseParser interface: parse(file_path) returns the
domain object, emit(obj) returns plain JSON data.
"""
from typing import Optional, Type

from .base_parser import BaseParser, get_parser
from .json_parser import (
    FunctionParser,
    KernelParser,
    MeasureParser,
    ModelParser,
    SpaceParser,
    parse_json,
)

__all__ = [
    'BaseParser',
    'SpaceParser',
    'MeasureParser',
    'FunctionParser',
    'KernelParser',
    'ModelParser',
    'get_parser',
    'get_parser_class',
    'parse_json',
]

# Dictionary mapping document kinds to parser classes
PARSER_CLASSES = {
    'space': SpaceParser,
    'measure': MeasureParser,
    'function': FunctionParser,
    'kernel': KernelParser,
    'model': ModelParser,
}


def get_parser_class(kind: str) -> Optional[Type[BaseParser]]:
    """Get the parser class for a document kind.

    Args:
        kind: Document kind (e.g., 'kernel')

    Returns:
        Parser class if available, None otherwise
    """
    return PARSER_CLASSES.get(kind.lower())
