import math

import numpy as np
import pytest

from generators import CHANNEL_TYPES, random_expr, random_type, random_value
from lbs.evaluation import EvalError, apply_op, as_real, eval_expr, eval_in_env, make_op_table
from lbs.parser import parse_expr
from lbs.syntax import Chan, Mode, substitute_this, this_type, value_to_expr
from lbs.typecheck import type_of_value


@pytest.mark.parametrize(
    "src, value",
    [
        ("1 + 2 * 3", 7.0),
        ("<1,2,3> + <1,1,1>", (2.0, 3.0, 4.0)),
        ("2 * <1,2,3>", (2.0, 4.0, 6.0)),
        ("-<1,0,0>", (-1.0, -0.0, -0.0)),
        ("snd((1, a))", Chan("a")),
        ("(1, 2, 3).2", 2.0),
        ("()", ()),
        ("fst(fst(((<1,2,3>, 0.5), 2.0)))", (1.0, 2.0, 3.0)),
    ],
)
def test_eval_examples(src, value):
    assert eval_expr(parse_expr(src)) == value


def test_glue_keeps_contact_distance():
    v = eval_expr(parse_expr("glue(<10,0,0>, <1,0,0>)"))
    assert v == (3.0, 0.0, 0.0)
    ops = make_op_table(glue_contact=0.5)
    assert eval_expr(parse_expr("glue(<0,4,0>, <0,1,0>)"), ops) == (0.0, 1.5, 0.0)
    with pytest.raises(EvalError) as info:
        eval_expr(parse_expr("glue(<1,1,1>, <1,1,1>)"))
    assert info.value.rule == "Exp.op"


def test_stuck_expressions():
    with pytest.raises(EvalError) as info:
        eval_expr(parse_expr("fst(1.0)"))
    assert info.value.rule == "Exp.sel"
    with pytest.raises(EvalError):
        eval_expr(parse_expr("1.0 + <1,2,3>"))
    with pytest.raises(EvalError) as info:
        eval_expr(parse_expr("this"))
    assert info.value.rule == "Exp.this"
    with pytest.raises(EvalError):
        apply_op("nope", 1.0)


def test_as_real():
    assert as_real(2.0) == 2.0
    for bad in (math.inf, math.nan, (1.0, 2.0), Chan("a")):
        with pytest.raises(EvalError):
            as_real(bad)


def test_value_to_expr_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(300):
        t = random_type(rng)
        v = random_value(rng, t)
        assert eval_expr(value_to_expr(v)) == v


def test_environment_evaluator_agrees_with_substitution():
    rng = np.random.default_rng(2)
    for k in range(2000):
        mode = list(Mode)[k % 3]
        tt = this_type(mode)
        t = random_type(rng)
        e = random_expr(rng, t, this_type=tt)
        this = random_value(rng, tt)
        v = eval_in_env(e, {}, this)
        assert v == eval_expr(substitute_this(e, this))
        assert type_of_value(v, CHANNEL_TYPES) == t


def test_environment_lookup_falls_back_to_channel_names():
    assert eval_in_env(parse_expr("(x, c)"), {"x": 2.0}) == (2.0, Chan("c"))
