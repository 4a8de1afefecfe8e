import json
import logging
import traceback
from pathlib import Path
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_SPACE_MISMATCH = 3
EXIT_CARRIER_SIZE = 4
EXIT_HYPOTHESIS = 5
EXIT_TOLERANCE = 6


class KernelLatticeError(Exception):
    """Base exception for the kernel lattice package"""
    exit_code = 1


class SchemaError(KernelLatticeError):
    """Input document does not match its schema"""
    exit_code = EXIT_SCHEMA


class ConfigError(KernelLatticeError):
    """Base exception for configuration errors"""
    exit_code = EXIT_SCHEMA


class PreconditionError(KernelLatticeError, ValueError):
    """An operation was called outside its domain"""
    exit_code = EXIT_SCHEMA


class SpaceError(PreconditionError):
    """Invalid state space parameters"""


class SpaceMismatchError(KernelLatticeError, ValueError):
    """Objects living on different state spaces were combined"""
    exit_code = EXIT_SPACE_MISMATCH


class CarrierTooLargeError(KernelLatticeError, ValueError):
    """Brute-force enumeration requested on a carrier above the oracle cap"""
    exit_code = EXIT_CARRIER_SIZE


class HypothesisFailure(KernelLatticeError):
    """A stability hypothesis did not hold"""
    exit_code = EXIT_HYPOTHESIS


class ToleranceExceeded(KernelLatticeError):
    """A numerical result missed its tolerance"""
    exit_code = EXIT_TOLERANCE


class ConvergenceError(ToleranceExceeded):
    """An iteration hit its cap before reaching the tolerance"""


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code"""
    if isinstance(error, KernelLatticeError):
        return error.exit_code
    return 1


class LatticeExceptionHandler:
    """Centralized error handling and logging for CLI commands"""

    def __init__(self, error_log_dir: Optional[Path] = None):
        self.error_log_path = Path(error_log_dir) if error_log_dir else None
        if self.error_log_path is not None:
            self.error_log_path.mkdir(parents=True, exist_ok=True)

    def handle_error(
        self,
        error: Exception,
        command: str,
        stage: str,
        record: Optional[Dict[str, Any]] = None
    ) -> int:
        """
        Log an error with its context and return the exit code for it
        Args:
            error: The exception that occurred
            command: CLI command being run (e.g. 'kernel', 'doob')
            stage: Stage where the error occurred (load, compute, write)
            record: Extra context such as the input paths (optional)
        Returns:
            Exit code for the error
        """
        code = exit_code_for(error)
        if self.error_log_path is not None:
            error_info = {
                "command": command,
                "stage": stage,
                "error_type": type(error).__name__,
                "error_message": str(error),
                "exit_code": code,
                "traceback": traceback.format_exc(),
                "record_info": record if record else "N/A"
            }
            self.error_log_path.mkdir(parents=True, exist_ok=True)
            error_log_file = self.error_log_path / f"{command}_errors.log"
            with open(error_log_file, 'a', encoding='utf-8') as f:
                f.write(json.dumps(error_info) + "\n")

        if code == 1:
            logger.critical("Unexpected error in %s during %s: %s", command, stage, error, exc_info=True)
        else:
            logger.error("Error in %s during %s: %s", command, stage, error)
        return code

    def get_error_summary(self, command: str) -> Dict[str, Any]:
        """
        Get summary of logged errors for a command
        Args:
            command: CLI command name
        Returns:
            Dictionary with the total and a count per error type
        """
        if self.error_log_path is None:
            return {"total_errors": 0, "error_types": {}, "command": command}
        error_log_file = self.error_log_path / f"{command}_errors.log"
        if not error_log_file.exists():
            return {"total_errors": 0, "error_types": {}, "command": command}

        error_types: Dict[str, int] = {}
        total_errors = 0
        with open(error_log_file, 'r', encoding='utf-8') as f:
            for line in f:
                try:
                    error_info = json.loads(line)
                except json.JSONDecodeError:
                    continue
                error_type = error_info["error_type"]
                error_types[error_type] = error_types.get(error_type, 0) + 1
                total_errors += 1

        return {
            "total_errors": total_errors,
            "error_types": error_types,
            "command": command
        }


def get_exception_handler(error_log_dir: Optional[Path] = None) -> LatticeExceptionHandler:
    """Get the singleton exception handler instance

    Passing an error log directory replaces the instance.
    """
    if error_log_dir is not None or not hasattr(get_exception_handler, 'instance'):
        get_exception_handler.instance = LatticeExceptionHandler(error_log_dir)
    return get_exception_handler.instance
