"""
Exception hierarchy for the simulator.

Every error carries a user-facing message, an optional technical detail and
the process exit code the CLI should use when it reaches the top level.
"""
from typing import Any, Dict, Optional


class HypoElimError(Exception):
    """Base error with a user-friendly message."""
    exit_code = 1

    def __init__(self, message: str, technical_detail: Optional[str] = None):
        self.message = message
        self.technical_detail = technical_detail
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"error": type(self).__name__, "message": self.message}
        if self.technical_detail:
            payload["detail"] = self.technical_detail
        return payload


# ─────────────────────────────────────────────────────────────────────────────
# USAGE / IO (exit 2)
# ─────────────────────────────────────────────────────────────────────────────

class UsageError(HypoElimError):
    """Bad arguments, index out of range, dimension mismatch, IO failure."""
    exit_code = 2


class InstanceFormatError(UsageError):
    """Instance or config file is not valid JSON or violates the schema."""


class ParameterDomainError(UsageError):
    """A parameter vector is not valid for its distribution family."""


class SupportError(UsageError):
    """An observation lies outside the family's support."""


# ─────────────────────────────────────────────────────────────────────────────
# DOMAIN FAILURES (exit 1)
# ─────────────────────────────────────────────────────────────────────────────

class AssumptionViolation(HypoElimError):
    """The instance fails separation (A1) or validity (A3)."""


class NoSeparatingActionError(HypoElimError):
    """No action separates the alive hypotheses into two or more clusters."""


# ─────────────────────────────────────────────────────────────────────────────
# RUNTIME (exit 3)
# ─────────────────────────────────────────────────────────────────────────────

class StageOverrunError(HypoElimError):
    """A stage drew more samples than allowed; usually a bad proximity parameter."""
    exit_code = 3

    def __init__(self, message: str, diagnostics: Dict[str, Any]):
        self.diagnostics = diagnostics
        super().__init__(message, f"stage diagnostics: {diagnostics}")

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload["diagnostics"] = self.diagnostics
        return payload


class TrialFailedError(HypoElimError):
    """A Monte-Carlo trial failed; names the seed that reproduces it."""

    def __init__(self, cause: HypoElimError, seed_words: tuple):
        self.cause = cause
        self.seed_words = seed_words
        self.exit_code = cause.exit_code
        super().__init__(
            f"Trial with seed {seed_words} failed: {cause.message}",
            cause.technical_detail,
        )


class SampleCapReached(HypoElimError):
    """A trial hit the experiment's per-trial sample cap before terminating."""
    exit_code = 3

    def __init__(self, cap: int, used: int):
        self.cap = cap
        self.used = used
        super().__init__(f"trial stopped at the sample cap ({cap})", f"samples used: {used}")


class WinnerUniquenessError(HypoElimError):
    """More than one contestant satisfied the win condition at a stage end."""
    exit_code = 3
