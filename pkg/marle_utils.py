"""
Shared utilities for the Marle relaxation toolkit.
Contains the logger, environment settings and the exception hierarchy used by
every other module.
"""

import os
import logging
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Configure logging
logging.basicConfig(
    level=os.environ.get('MARLE_LOG_LEVEL', 'INFO').upper(),
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger('marle')

# Runtime settings read from the environment
SETTINGS = {
    'output_dir': os.environ.get('MARLE_OUTPUT_DIR', ''),
    'progress': os.environ.get('MARLE_PROGRESS', '1') != '0',
}

# ------------------------------------------------------------------
# Exceptions
# ------------------------------------------------------------------

class MarleError(Exception):
    """Base class of every error raised by the toolkit."""


class ValidationError(MarleError):
    """Invalid input values."""


class InvalidConstants(ValidationError):
    pass


class InvalidGridConfig(ValidationError):
    pass


class NegativeInternalEnergy(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class NegativeDistribution(ValidationError):
    pass


class CFLViolation(ValidationError):
    pass


class ConfigError(MarleError):
    """Problems with a run configuration file."""


class ParseError(ConfigError):
    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ConfigValidationError(ConfigError):
    pass


class NumericFailure(MarleError):
    """A computation could not produce a trustworthy number."""


class NonTimelikeFlux(NumericFailure):
    pass


class NegativeTimeComponent(NumericFailure):
    pass


class RatioOutOfRange(NumericFailure):
    pass


class BracketFailure(NumericFailure):
    pass


class ToleranceNotReached(NumericFailure):
    pass


class NonPositiveGamma(NumericFailure):
    pass


class ConservationSolveFailed(NumericFailure):
    pass


class StiffnessWarning(RuntimeWarning):
    """Explicit step too large for the stability region of the scheme."""


# ------------------------------------------------------------------
# Common helpers
# ------------------------------------------------------------------

def resolve_output_path(path):
    """
    Prepend MARLE_OUTPUT_DIR to relative output paths.

    Args:
        path: Output path from the run configuration

    Returns:
        str: Path to write to
    """
    if not path or os.path.isabs(path) or not SETTINGS['output_dir']:
        return path
    return os.path.join(SETTINGS['output_dir'], path)
