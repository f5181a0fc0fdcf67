"""Exception hierarchy for the micropump package.

Every exception carries an ``exit_code`` consumed by the CLI:
1 for input/validation problems, 2 for numerical failures.
"""


class MicropumpError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(MicropumpError, ValueError):
    """Bad, unknown, or missing configuration keys."""


class InvalidSpecError(MicropumpError, ValueError):
    """A domain object was constructed with out-of-range values."""


class CurveError(MicropumpError, ValueError):
    """A curve is too short or degenerate for the requested analysis."""


class DecompositionError(MicropumpError, ValueError):
    """Head-loss decomposition produced a negative remainder."""


class FitError(MicropumpError, ValueError):
    """A least-squares fit has degenerate input data."""


class SingularFitError(FitError):
    """Fit points coincide in the independent variable."""


class StepSizeError(MicropumpError, ValueError):
    """Requested integration step is too coarse for the drive period."""


class UnboundedAmplitudeError(MicropumpError, ArithmeticError):
    """Undamped oscillator evaluated exactly at resonance."""

    exit_code = 2


class CalibrationError(MicropumpError, ArithmeticError):
    """Calibration objective became non-finite."""

    exit_code = 2
