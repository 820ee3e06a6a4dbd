"""
Error Handler
Provides stage context and error classification for the pipeline.
"""
from typing import Any, Callable

import structlog
from pydantic import ValidationError

from backend.utils.exceptions import ConfigurationError, StageError

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2


class ErrorHandler:

    def run_stage(self, stage: str, func: Callable, *args, **kwargs) -> Any:
        """Run one pipeline stage, tagging any failure with the stage name."""
        logger.debug("Stage started", stage=stage)
        try:
            result = func(*args, **kwargs)
        except StageError:
            raise
        except Exception as e:
            logger.error(
                "Stage failed",
                stage=stage,
                error_type=type(e).__name__,
                error=str(e),
            )
            raise StageError(stage, e) from e
        logger.debug("Stage finished", stage=stage)
        return result

    @staticmethod
    def exit_code(error: BaseException) -> int:
        """Map an exception to the CLI exit status."""
        if isinstance(error, StageError):
            error = error.cause
        if isinstance(error, (ConfigurationError, ValidationError, FileNotFoundError)):
            return EXIT_USAGE
        # numerical failures and anything unexpected inside a stage
        return EXIT_NUMERICAL
