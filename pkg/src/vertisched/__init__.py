"""Intent-driven rescheduling for resource-constrained vertiport schedules."""

from .intent import (
    IntentConfig,
    IntentVector,
    RequestType,
    RescheduleRequest,
    interpret_intention,
)
from .logic import TriState
from .model import Instance, Schedule, check_schedule, make_instance, validate_instance
from .pipeline import DispatchConfig, RescheduleResult, dispatch, preprocess
from .solver import FixedAssignments, SolveConfig, SolveResult, brute_force_solve, solve

__version__ = "0.1.0"

__all__ = [
    "DispatchConfig",
    "FixedAssignments",
    "Instance",
    "IntentConfig",
    "IntentVector",
    "RequestType",
    "RescheduleRequest",
    "RescheduleResult",
    "Schedule",
    "SolveConfig",
    "SolveResult",
    "TriState",
    "brute_force_solve",
    "check_schedule",
    "dispatch",
    "interpret_intention",
    "make_instance",
    "preprocess",
    "solve",
    "validate_instance",
]
