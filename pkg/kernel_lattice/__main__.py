"""Main entry point: ``python -m kernel_lattice``.

Runs the command line interface with the given arguments.
"""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
