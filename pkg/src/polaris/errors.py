"""Exception hierarchy with stable machine-readable error codes.

Every error carries a ``code`` used in reports, service responses and CLI
output, and an ``exit_code`` matching the command-line contract
(1 validation, 2 infeasibility, 3 I/O).
"""

from __future__ import annotations


class PolarisError(Exception):
    code = "POLARIS_ERROR"
    exit_code = 1


class MalformedLineError(PolarisError):
    code = "MALFORMED_LINE"


class UnknownMilestoneError(PolarisError):
    code = "UNKNOWN_MILESTONE"


class NegativeTimestampError(PolarisError):
    code = "NEGATIVE_TS"


class EmptySamplesError(PolarisError):
    code = "EMPTY_SAMPLES"


class ZeroMedianError(PolarisError):
    code = "ZERO_MEDIAN"


class NonFiniteInputError(PolarisError):
    code = "NON_FINITE_INPUT"


class StageAbsentError(PolarisError):
    code = "STAGE_ABSENT"


class EmptyLogError(PolarisError):
    code = "EMPTY_LOG"


class ProfileImportError(PolarisError):
    code = "PROFILE_IMPORT"


class ServiceStateError(PolarisError):
    """Raised when an endpoint needs profiles that have not been loaded."""

    code = "NO_PROFILES_LOADED"


class NoFeasibleMechanismError(PolarisError):
    code = "NO_FEASIBLE_MECHANISM"
    exit_code = 2


class FixedMechanismUnavailableError(PolarisError):
    code = "FIXED_MECHANISM_UNAVAILABLE"
    exit_code = 2


class InfeasibleTargetError(PolarisError):
    """A calibration target cannot be met; carries the closest achievable values."""

    code = "INFEASIBLE_TARGET"
    exit_code = 2

    def __init__(self, notes):
        self.notes = tuple(notes)
        detail = "; ".join(str(n) for n in self.notes)
        super().__init__(f"infeasible calibration target(s): {detail}")
