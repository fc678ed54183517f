"""Big-step evaluation of closed expressions and the operator table.

Values are plain Python data: ``float`` for reals, :class:`~lbs.syntax.Chan`
for channel names, ``()`` for the empty tuple and ``tuple`` for tuples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from . import geometry
from .syntax import (
    FL,
    POINT,
    Chan,
    Const,
    Ident,
    Op,
    Prod,
    Proj,
    This,
    Tuple,
    Unit,
)


class EvalError(Exception):
    """A stuck expression; ``rule`` names the evaluation rule that failed."""

    def __init__(self, rule: str, message: str):
        self.rule = rule
        super().__init__(f"[{rule}] {message}")


def is_point(v) -> bool:
    return isinstance(v, tuple) and len(v) == 3 and all(isinstance(x, float) for x in v)


@dataclass(frozen=True)
class OpSpec:
    signatures: tuple  # of (argument type, result type)
    impl: Callable


def _binary(f):
    def impl(v):
        a, b = v
        return f(a, b)

    return impl


def _add(a, b):
    if isinstance(a, float):
        return a + b
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _sub(a, b):
    if isinstance(a, float):
        return a - b
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _mul(a, b):
    if isinstance(a, float) and isinstance(b, float):
        return a * b
    if isinstance(a, float):
        return (a * b[0], a * b[1], a * b[2])
    return (a[0] * b, a[1] * b, a[2] * b)


def _neg(a):
    if isinstance(a, float):
        return -a
    return (-a[0], -a[1], -a[2])


def make_op_table(glue_contact: float = 2.0) -> dict:
    """Operator name -> :class:`OpSpec`; ``glue_contact`` is the distance
    ``glue`` keeps between the two barycentres."""

    def glue(v):
        p, q = v
        try:
            return geometry.glue_point(p, q, glue_contact)
        except geometry.GeometryError as exc:
            raise EvalError("Exp.op", str(exc)) from None

    pair = lambda a, b: Prod((a, b))  # noqa: E731
    return {
        "glue": OpSpec(((pair(POINT, POINT), POINT),), glue),
        "add": OpSpec(((pair(FL, FL), FL), (pair(POINT, POINT), POINT)), _binary(_add)),
        "sub": OpSpec(((pair(FL, FL), FL), (pair(POINT, POINT), POINT)), _binary(_sub)),
        "mul": OpSpec(
            ((pair(FL, FL), FL), (pair(FL, POINT), POINT), (pair(POINT, FL), POINT)),
            _binary(_mul),
        ),
        "neg": OpSpec(((FL, FL), (POINT, POINT)), _neg),
    }


DEFAULT_OPS = make_op_table()


def type_of_op(name: str, arg_type, ops: dict = DEFAULT_OPS):
    """Result type of ``name`` applied to ``arg_type``, or None."""
    spec = ops.get(name)
    if spec is None:
        return None
    for arg, res in spec.signatures:
        if arg == arg_type:
            return res
    return None


def apply_op(name: str, v, ops: dict = DEFAULT_OPS):
    spec = ops.get(name)
    if spec is None:
        raise EvalError("Exp.op", f"unknown operator {name!r}")
    if not any(_value_matches(v, arg) for arg, _ in spec.signatures):
        raise EvalError("Exp.op", f"operator {name!r} not defined on {v!r}")
    return spec.impl(v)


def _value_matches(v, t) -> bool:
    if t == FL:
        return isinstance(v, float)
    if isinstance(t, Prod):
        return isinstance(v, tuple) and len(v) == len(t.items) and all(_value_matches(x, s) for x, s in zip(v, t.items))
    return False


def eval_expr(e, ops: dict = DEFAULT_OPS):
    """Evaluate a closed expression. A free identifier is a channel name."""
    match e:
        case Ident(name):
            return Chan(name)
        case Const(v):
            return float(v)
        case Unit():
            return ()
        case Tuple(items):
            return tuple(eval_expr(x, ops) for x in items)
        case Proj(x, i):
            v = eval_expr(x, ops)
            if not isinstance(v, tuple) or not 1 <= i <= len(v):
                raise EvalError("Exp.sel", f"cannot select component {i} of {v!r}")
            return v[i - 1]
        case Op(name, x):
            return apply_op(name, eval_expr(x, ops), ops)
        case This():
            raise EvalError("Exp.this", "'this' must be substituted before evaluation")
    raise TypeError(f"not an expression: {e!r}")


def eval_in_env(e, env: dict, this=None, ops: dict = DEFAULT_OPS):
    """Environment-passing evaluator: identifiers are looked up in ``env``
    (falling back to channel names) and ``this`` is bound to ``this``."""
    match e:
        case Ident(name):
            return env[name] if name in env else Chan(name)
        case Const(v):
            return float(v)
        case Unit():
            return ()
        case This():
            if this is None:
                raise EvalError("Exp.this", "'this' is unbound")
            return this
        case Tuple(items):
            return tuple(eval_in_env(x, env, this, ops) for x in items)
        case Proj(x, i):
            v = eval_in_env(x, env, this, ops)
            if not isinstance(v, tuple) or not 1 <= i <= len(v):
                raise EvalError("Exp.sel", f"cannot select component {i} of {v!r}")
            return v[i - 1]
        case Op(name, x):
            return apply_op(name, eval_in_env(x, env, this, ops), ops)
    raise TypeError(f"not an expression: {e!r}")


def as_real(v, what: str = "value") -> float:
    if not isinstance(v, float) or not math.isfinite(v):
        raise EvalError("Exp.const", f"{what} must be a finite real, got {v!r}")
    return v
