from typing import Optional


class ZetaLabError(RuntimeError):
    """
    Base error for every failure raised by the laboratory.

    Each error names the module and the operation that failed so the CLI can
    report where a run broke without a traceback.

    Attributes:
        module (str): Name of the failing module (e.g. "moments").
        operation (str): Name of the failing operation (e.g. "cumulants").
        exit_code (int): Process exit code used by the CLI.
    """

    exit_code = 3

    def __init__(self, message: str, module: str = "", operation: str = ""):
        self.module = module
        self.operation = operation
        self.detail = message
        prefix = f"[{module}.{operation}] " if module else ""
        super().__init__(f"{prefix}{message}")


class ConfigurationError(ZetaLabError, ValueError):
    exit_code = 2


class RangeError(ZetaLabError, ValueError):
    """A parameter lies outside the desk-scale evaluation window."""


class InsufficientTableError(ZetaLabError, ValueError):
    """A prime table does not reach the requested bound."""


class QuadratureError(ZetaLabError):
    """
    Quadrature did not reach its tolerance within the node budget.

    Attributes:
        best_estimate (complex | float): Last value computed before giving up.
        err_est (float): Error estimate attached to best_estimate.
    """

    def __init__(self, message: str, best_estimate=float("nan"), err_est: float = float("inf"),
                 module: str = "", operation: str = ""):
        self.best_estimate = best_estimate
        self.err_est = err_est
        shown = f"best estimate {best_estimate}, " if isinstance(best_estimate, (int, float, complex)) else ""
        super().__init__(f"{message} ({shown}error {err_est:.3e})", module, operation)


class NearZeroError(ZetaLabError):
    """|zeta| fell below the near-zero threshold on an evaluation path."""

    def __init__(self, message: str, point: Optional[complex] = None, module: str = "", operation: str = ""):
        self.point = point
        super().__init__(message, module, operation)


class OnContourRootError(ZetaLabError):
    """zeta(s) - a vanishes (numerically) on an integration contour."""

    def __init__(self, message: str, point: Optional[complex] = None, module: str = "", operation: str = ""):
        self.point = point
        super().__init__(message, module, operation)


class DegenerateWindowError(ZetaLabError):
    pass


class DegenerateRestrictionError(ZetaLabError):
    pass


class StepError(ZetaLabError, ValueError):
    pass


class CacheError(ZetaLabError):
    pass


class ComplexityGuardError(ZetaLabError, ValueError):
    pass


class AcceptanceError(ZetaLabError):
    exit_code = 4
