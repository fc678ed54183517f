import json

import numpy as np
import pytest

from generators import CHANNEL_TYPES, random_expr, random_type
from lbs.parser import parse_expr, parse_program
from lbs.syntax import FL, POINT, TOP, Ch, Chan, Mode, Prod, this_type
from lbs.typecheck import (
    TypeCheckError,
    TypeEnv,
    check_program,
    format_diagnostics,
    type_of_expr,
    type_of_value,
)
from negatives import NEGATIVES, program


def test_shipped_programs_are_well_typed(microtubules, bacteria):
    for src in (microtubules, bacteria):
        assert check_program(parse_program(src)).diagnostics == []


@pytest.mark.parametrize("what", sorted(NEGATIVES))
def test_negative_programs_name_their_rule(what):
    rule, src = NEGATIVES[what]
    diags = check_program(parse_program(src)).diagnostics
    assert diags and all(d.rule == rule for d in diags)
    assert all(d.span is not None and d.span.line > 0 for d in diags)


def test_template_is_well_typed():
    for mode, sub, run in [
        ("base", "this", "A(1.0)_<5.0,5.0,5.0>"),
        ("random", "(this, 0)", "A(1.0)_(<5.0,5.0,5.0>, 0)"),
        ("scale", "((fst(this), 0), 1)", "A(1.0)_((<5.0,5.0,5.0>, 0), 1)"),
    ]:
        assert check_program(parse_program(program(mode=mode, sub=sub, run=run))).ok


def test_mode_override_changes_the_subscript_rule(microtubules):
    prog = parse_program(microtubules)
    rules = {d.rule for d in check_program(prog, Mode.SCALE).diagnostics}
    assert "Ty.inst.RS" in rules
    rules = {d.rule for d in check_program(prog, Mode.RANDOM).diagnostics}
    assert "Ty.inst.R" in rules


@pytest.mark.parametrize(
    "mode, expected",
    [(Mode.BASE, POINT), (Mode.RANDOM, POINT), (Mode.SCALE, Prod((POINT, FL)))],
)
def test_this_type(mode, expected):
    assert type_of_expr(TypeEnv(), parse_expr("this"), mode) == expected


@pytest.mark.parametrize(
    "src, rule",
    [
        ("fst(1.0)", "Ty.sel"),
        ("(1.0, 2.0).3", "Ty.sel"),
        ("glue(1.0, 2.0)", "Ty.op"),
        ("<1,2,3> + 1.0", "Ty.op"),
        ("frob(1.0)", "Ty.op"),
        ("nope", "Ty.id"),
    ],
)
def test_expression_rules(src, rule):
    with pytest.raises(TypeCheckError) as info:
        type_of_expr(TypeEnv(dict(CHANNEL_TYPES)), parse_expr(src))
    assert info.value.diagnostic.rule == rule


def test_this_outside_definitions():
    with pytest.raises(TypeCheckError) as info:
        type_of_expr(TypeEnv(), parse_expr("fst(this)"), Mode.SCALE, allow_this=False)
    assert info.value.diagnostic.rule == "Ty.this.RS"


def test_operator_overloads():
    env = TypeEnv()
    assert type_of_expr(env, parse_expr("2.0 * <1,2,3>")) == POINT
    assert type_of_expr(env, parse_expr("<1,2,3> * 2.0")) == POINT
    assert type_of_expr(env, parse_expr("<1,2,3> - <1,1,1>")) == POINT
    assert type_of_expr(env, parse_expr("-(1.0 + 2.0)")) == FL


def test_random_expressions_have_their_generated_type():
    rng = np.random.default_rng(0)
    env = TypeEnv(dict(CHANNEL_TYPES))
    for k in range(500):
        mode = list(Mode)[k % 3]
        t = random_type(rng)
        e = random_expr(rng, t, this_type=this_type(mode))
        assert type_of_expr(env, e, mode) == t


def test_value_types():
    chans = {"a": Ch(TOP)}
    assert type_of_value(1.0, chans) == FL
    assert type_of_value((), chans) == TOP
    assert type_of_value((Chan("a"), (1.0, 2.0, 3.0)), chans) == Prod((Ch(TOP), POINT))
    with pytest.raises(TypeCheckError):
        type_of_value(Chan("b"), chans)


def test_diagnostic_formats():
    rule, src = NEGATIVES["payload of the wrong type"]
    diags = check_program(parse_program(src)).diagnostics
    text = format_diagnostics(diags, "p.lbs")
    assert text.startswith("p.lbs:") and f"[{rule}]" in text
    data = json.loads(format_diagnostics(diags, "p.lbs", as_json=True))
    assert data[0]["rule"] == rule and data[0]["file"] == "p.lbs" and data[0]["line"] == 7


def test_constants_are_typed_in_order():
    src = "#mode base\nval k = 1.0, p = <k, k, k>\nlet A()@world,k,sphere(k) = do delay@k; 0\nrun A()_p\n"
    assert check_program(parse_program(src)).ok
    bad = "#mode base\nval p = <k, 1, 1>, k = 1.0\nlet A()@world,k,sphere(k) = do delay@k; 0\nrun A()_p\n"
    assert {d.rule for d in check_program(parse_program(bad)).diagnostics} == {"Ty.id"}


def test_free_variables_in_definitions_are_reported():
    src = "#mode base\nlet A()@world,0,sphere(1) = do delay@1; A()_(this + <z, 0, 0>)\nrun A()_<0,0,0>\n"
    rules = [d.rule for d in check_program(parse_program(src)).diagnostics]
    assert "Ty.defs" in rules


def test_unknown_space_and_shape():
    src = "#mode base\nlet A()@Nowhere,0,cuboid(1,1,1) = do delay@1; 0\nrun A()_<0,0,0>\n"
    msgs = [d.message for d in check_program(parse_program(src)).diagnostics]
    assert any("Nowhere" in m for m in msgs) and any("sphere" in m for m in msgs)
