"""Exception hierarchy shared by the scenario_io package.

Every error carries a short ``code`` string so the harness can journal and
count failures without parsing messages.
"""
from __future__ import annotations


class ScenarioIOError(Exception):
    code = "scenario-io-error"

    def __init__(self, message: str, code: str | None = None) -> None:
        super().__init__(message)
        if code is not None:
            self.code = code


class InstanceError(ScenarioIOError, ValueError):
    """Invalid parameters, contexts, actions or instance specs."""

    code = "invalid-instance"


class EmptyActionSpaceError(InstanceError):
    code = "empty-action-space"


class InfeasibleActionError(InstanceError):
    code = "infeasible-action"


class UnsupportedOracleError(ScenarioIOError, ValueError):
    code = "incenter-unsupported-oracle"


class SolverFailure(ScenarioIOError):
    """A solver returned a non-optimal status where an optimum was required."""

    code = "solver-failure"

    def __init__(self, message: str, status: str) -> None:
        super().__init__(message)
        self.status = status


class ZeroSubgradientError(ScenarioIOError, ArithmeticError):
    code = "zero-subgradient"


class LowDataRegimeError(ScenarioIOError, ValueError):
    code = "low-data-regime"
