"""
app/errors.py

Exception hierarchy shared by the numerics, the service layer, the CLI and the HTTP route.

Every error carries the process exit code the CLI reports for it:
- 2 : validation problems (bad config, bad weight, precondition violated)
- 3 : numerical rejection (tail above tolerance, regime checks, search exhausted)
"""
from __future__ import annotations


class SteklovError(Exception):
    """Base class for toolkit failures."""

    exit_code: int = 1


class ConfigError(SteklovError):
    """Malformed run configuration, weight spec or weight file."""

    exit_code = 2


class WeightDomainError(SteklovError, ValueError):
    """A weight left its admissible domain (positivity, |w| < 1, finite samples)."""

    exit_code = 2


class NormalizationError(WeightDomainError):
    """The mean of 1/a differs from 1 by more than the assembly tolerance."""


class NumericalRejection(SteklovError):
    """A computation finished but its own error control refused the result."""

    exit_code = 3


class OperatorError(NumericalRejection, ValueError):
    """Matrix handed to the functional calculus is not Hermitian or not PSD."""


class TruncationRejected(NumericalRejection):
    """Estimated truncation tail is above tolerance; a larger N is needed."""


class QuadraticRegimeError(NumericalRejection):
    """Spectral data and the second-order closed form disagree; tau is too large."""


class SearchExhausted(NumericalRejection):
    """A scan (r, s or a bracket) ran out of range without finding its target."""


class FlowBreakdown(NumericalRejection):
    """Step size collapsed while integrating the deformation flow."""


def exit_code_for(ex: BaseException) -> int:
    """Map an exception to the CLI exit code (ValueError counts as validation)."""
    if isinstance(ex, SteklovError):
        return ex.exit_code
    if isinstance(ex, (ValueError, TypeError)):
        return 2
    return 1
