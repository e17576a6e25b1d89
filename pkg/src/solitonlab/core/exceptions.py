from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence


class SolitonLabError(RuntimeError):
    """Base class for failures that end an experiment stage."""

    exit_code = 1

    def __init__(self, message: str = "soliton lab failure") -> None:
        super().__init__(message)


class ConfigError(SolitonLabError):
    """Raised when an experiment configuration violates its invariants."""

    exit_code = 2

    def __init__(self, message: str = "invalid configuration", *, problems: Sequence[str] = ()) -> None:
        self.problems = list(problems)
        if self.problems:
            message = message + ": " + "; ".join(self.problems)
        super().__init__(message)


class CertificationError(SolitonLabError):
    """Raised when an analytic or spectral certificate fails."""

    exit_code = 3

    def __init__(self, message: str = "certificate failed", *, condition: str = "unknown") -> None:
        self.condition = condition
        super().__init__(message)


class NumericalError(SolitonLabError):
    """Raised when a numerical procedure cannot deliver a trustworthy result."""

    exit_code = 4

    def __init__(self, message: str = "numerical failure") -> None:
        super().__init__(message)


class ProfileError(NumericalError):
    """Raised when the profile iteration diverges or leaves the positive cone."""

    def __init__(self, message: str = "profile solve failed", *, residual: float | None = None) -> None:
        self.residual = residual
        if residual is not None:
            message = f"{message} (last residual {residual:.3e})"
        super().__init__(message)


class EigenSolverError(NumericalError):
    """Raised when an eigensolver does not converge."""

    def __init__(
        self, message: str = "eigensolver did not converge", *, trace: Iterable[float] = ()
    ) -> None:
        self.trace = list(trace)
        super().__init__(message)


class GuardViolationError(NumericalError):
    """Raised when the soliton reaches the guard band of the periodic box."""

    def __init__(self, message: str = "soliton reached boundary", *, time: float | None = None) -> None:
        self.time = time
        if time is not None:
            message = f"{message} at t={time:.6g}"
        super().__init__(message)


class IntegratorAccuracyError(NumericalError):
    """Raised when conserved quantities drift beyond their tolerance."""

    def __init__(
        self,
        message: str = "integrator accuracy exhausted",
        *,
        time: float | None = None,
        quantity: str | None = None,
        drift: float | None = None,
    ) -> None:
        self.time = time
        self.quantity = quantity
        self.drift = drift
        if quantity is not None and drift is not None:
            message = f"{message}: {quantity} drift {drift:.3e} at t={time:.6g}"
        super().__init__(message)


class DecompositionError(NumericalError):
    """Raised when the modulation Newton iteration fails to converge."""

    def __init__(
        self,
        message: str = "decomposition did not converge",
        *,
        history: Iterable[float] = (),
        time: float | None = None,
    ) -> None:
        self.history = list(history)
        self.time = time
        if time is not None:
            message = f"{message} at t={time:.6g}"
        super().__init__(message)


class ParameterDomainError(NumericalError):
    """Raised when a frequency update leaves the configured interval."""

    def __init__(self, message: str = "left parameter domain", *, mu: float | None = None) -> None:
        self.mu = mu
        if mu is not None:
            message = f"{message}: mu={mu:.6g}"
        super().__init__(message)


class GridMismatchError(ValueError):
    """Raised when fields defined on different grids are combined."""


class WindowMismatchError(ValueError):
    """Raised when trajectories do not share a comparison window."""


class RunStageError(SolitonLabError):
    """Wraps a stage failure with the stage name and partial artifacts."""

    def __init__(
        self, stage: str, cause: BaseException, artifacts: Sequence[Path] = ()
    ) -> None:
        self.stage = stage
        self.cause = cause
        self.artifacts = [Path(item) for item in artifacts]
        self.exit_code = getattr(cause, "exit_code", 4)
        super().__init__(f"stage '{stage}' failed: {cause}")
