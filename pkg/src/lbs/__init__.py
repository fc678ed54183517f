"""A stochastic pi-calculus in 3D space: parser, type checker and simulator."""
from .evaluation import EvalError, eval_expr, make_op_table
from .parser import ParseError, parse_expr, parse_process, parse_program, parse_type
from .runtime import (
    Blocked,
    CanonicalConfig,
    LocatedEntity,
    Model,
    NoEvents,
    ProgramError,
    Simulator,
    StepResult,
    check_configuration,
    enabled_events,
    initial_configuration,
    is_space_consistent,
    load,
    step,
)
from .scheduler import Event, EventSet, NoEvent, select_event
from .syntax import Mode, format_program
from .typecheck import check_program

__all__ = [
    "Blocked",
    "CanonicalConfig",
    "EvalError",
    "Event",
    "EventSet",
    "LocatedEntity",
    "Mode",
    "Model",
    "NoEvent",
    "NoEvents",
    "ParseError",
    "ProgramError",
    "Simulator",
    "StepResult",
    "check_configuration",
    "check_program",
    "enabled_events",
    "eval_expr",
    "format_program",
    "initial_configuration",
    "is_space_consistent",
    "load",
    "make_op_table",
    "parse_expr",
    "parse_process",
    "parse_program",
    "parse_type",
    "select_event",
    "step",
]
