from squid_modes.algo import EXIT_BAD_INPUT, EXIT_CALIBRATION_FAILURE, EXIT_SOLVER_FAILURE


class SquidModesError(Exception):
    exit_code = EXIT_SOLVER_FAILURE


class InputError(SquidModesError, ValueError):
    exit_code = EXIT_BAD_INPUT


class ParameterValidationError(InputError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(message)


class ProfileDomainError(InputError):
    pass


class SolverError(SquidModesError):
    exit_code = EXIT_SOLVER_FAILURE


class ModeSolverError(SolverError):
    pass


class BracketFailureError(ModeSolverError):
    """Internal error: a bracket that must contain a sign change did not."""


class PoleProximityError(ModeSolverError):
    def __init__(self, message: str, kd: float, denominator: float):
        self.kd = kd
        self.denominator = denominator
        super().__init__(message)


class NoRootInBracketError(ModeSolverError):
    pass


class NonConvergedTruncationError(ModeSolverError):
    pass


class SweepPointError(ModeSolverError):
    def __init__(self, amplitude: float, cause: Exception):
        self.amplitude = amplitude
        self.cause = cause
        super().__init__(f"solve failed at dEJ/EJ0={amplitude:.6g}: {cause}")


class ResonanceError(SolverError):
    pass


class DynamicsError(SolverError):
    pass


class StepResolutionError(DynamicsError):
    exit_code = EXIT_BAD_INPUT


class PositivityLossError(DynamicsError):
    pass


class FockOverflowError(DynamicsError):
    pass


class OracleError(SolverError):
    pass


class CFLViolationError(OracleError):
    exit_code = EXIT_BAD_INPUT


class InstabilityError(OracleError):
    pass


class InsufficientSamplesError(OracleError):
    exit_code = EXIT_BAD_INPUT


class CalibrationError(SquidModesError):
    exit_code = EXIT_CALIBRATION_FAILURE


class NonConvergenceError(CalibrationError):
    pass


class AmplitudeOutOfRangeError(CalibrationError):
    pass
