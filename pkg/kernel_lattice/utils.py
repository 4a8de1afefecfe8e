import logging
import sys
from pathlib import Path
from typing import Optional, Union

import numpy as np

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_data_dir() -> Path:
    """Get the packaged fixture directory"""
    return Path(__file__).parent / "data"


def make_rng(seed: Optional[int] = 0) -> np.random.Generator:
    """Seeded generator used by every randomized sweep"""
    return np.random.default_rng(seed)


def setup_logging(
    level: str = 'INFO',
    fmt: str = LOG_FORMAT,
    log_file: Optional[Union[str, Path]] = None
) -> None:
    """Configure logging on stderr, plus a file when one is given.

    stdout is left to command output.
    """
    log_level = getattr(logging, level.upper(), logging.INFO)
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(level=log_level, format=fmt, handlers=handlers, force=True)
