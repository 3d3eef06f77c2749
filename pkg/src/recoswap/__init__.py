"""Recoverable detectable SWAP: simulator, recovery algorithms and checkers."""

from .core import BOTTOM, EventKind, HistoryEvent, InvariantViolation, OpIdentity, Value, Verdict
from .sim import CrashPlan, Model, Outcome, Policy, RunConfig, RunResult, run

__all__ = [
    "BOTTOM", "EventKind", "HistoryEvent", "InvariantViolation", "OpIdentity", "Value",
    "Verdict", "CrashPlan", "Model", "Outcome", "Policy", "RunConfig", "RunResult", "run",
]
