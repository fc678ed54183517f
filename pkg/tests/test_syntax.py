import pytest
from hypothesis import given
from hypothesis import strategies as st

from generators import choices, exprs, idents, processes, programs, types
from lbs import programs as shipped
from lbs.parser import ParseError, parse_expr, parse_process, parse_program, parse_type, read_mode_pragma
from lbs.syntax import (
    FL,
    POINT,
    TOP,
    Branch,
    Ch,
    ChannelDecl,
    Const,
    Delay,
    Ident,
    Input,
    Instance,
    Mode,
    Move,
    Nil,
    Op,
    Output,
    Prod,
    Proj,
    Restrict,
    RestrictedChoice,
    This,
    Tuple,
    Unit,
    alpha_equivalent,
    format_choice,
    format_expr,
    format_process,
    format_program,
    format_type,
    free_idents,
    free_names,
    free_vars,
    lift_to_scale,
    par_components,
    rename_restrictions,
    substitute,
    substitute_many,
    substitute_this,
)
from lbs.typecheck import check_program

# ---------------------------------------------------------------------------
# Printer / parser round trips


@given(exprs())
def test_expr_round_trip(e):
    assert parse_expr(format_expr(e)) == e


@given(types())
def test_type_round_trip(t):
    assert parse_type(format_type(t)) == t


@given(processes())
def test_process_round_trip(p):
    assert parse_process(format_process(p)) == p


@given(programs())
def test_program_round_trip(prog):
    text = format_program(prog)
    assert parse_program(text) == prog
    assert format_program(parse_program(text)) == text


@pytest.mark.parametrize("name", ["microtubules", "bacteria"])
def test_shipped_programs_round_trip(name):
    prog = parse_program(shipped.source(name))
    assert parse_program(format_program(prog)) == prog


# ---------------------------------------------------------------------------
# Concrete syntax


def test_operator_precedence_and_sugar():
    assert parse_expr("1 + 2 * 3") == Op("add", Tuple((Const(1.0), Op("mul", Tuple((Const(2.0), Const(3.0)))))))
    assert parse_expr("<1, 2, 3>") == Tuple((Const(1.0), Const(2.0), Const(3.0)))
    assert parse_expr("fst(this)") == Proj(This(), 1)
    assert parse_expr("snd(this)") == Proj(This(), 2)
    assert parse_expr("this.3") == Proj(This(), 3)
    assert parse_expr("-x") == Op("neg", Ident("x"))
    assert parse_expr("glue(this, u)") == Op("glue", Tuple((This(), Ident("u"))))
    assert parse_expr("()") == Unit()


def test_types():
    assert parse_type("fl*fl*fl") == POINT
    assert parse_type("ch()") == Ch(TOP)
    assert parse_type("chan()") == Ch(TOP)
    assert parse_type("ch(ch(),fl*fl*fl)") == Ch(Prod((Ch(TOP), POINT)))
    assert parse_type("(fl*fl)*fl") == Prod((Prod((FL, FL)), FL))


def test_multi_binder_input_and_multi_value_output():
    prog = parse_program(shipped.source("microtubules"))
    part = next(d for d in prog.defs if d.name == "MTPart")
    recv = part.body.branches[0]
    assert isinstance(recv.prefix, Input) and recv.prefix.chan == "MTConstruction"
    # ?a(x,u); P binds a pair and projects it in the continuation
    binder = recv.prefix.binder
    assert recv.cont == Instance(
        "MTLeft",
        Proj(Ident(binder), 1),
        Op("glue", Tuple((This(), Proj(Ident(binder), 2)))),
    )
    send = part.body.branches[1]
    assert send.prefix == Output("MTConstruction", Tuple((Ident("y"), This())))


def test_prefix_separators_and_defaults():
    choice = parse_process("new a@1.0,0.5:ch() (A()_this | B())")
    assert isinstance(choice, Restrict) and choice.decl.name == "a"
    assert par_components(choice.body) == [Instance("A", Unit(), This()), Instance("B", Unit(), None)]
    src = "#mode base\nlet A()@world,0.0,sphere(1.0) = do delay@2.0.A() or delay@1.0; 0 or mov.A()\nrun A()_<0,0,0>\n"
    d = parse_program(src).defs[0]
    assert [type(b.prefix) for b in d.body.branches] == [Delay, Delay, Move]
    assert d.body.branches[0].cont == Instance("A", Unit(), None)
    assert d.body.branches[1].cont == Nil()


def test_mode_pragma():
    assert read_mode_pragma("#mode random\nrun 0") is Mode.RANDOM
    assert read_mode_pragma("\n  #mode base\n") is Mode.BASE
    assert read_mode_pragma("# a comment\n#mode base") is None
    prog = parse_program("let A()@world,0,sphere(1) = do delay@1; 0\nrun A()_((<0,0,0>,0),1)")
    assert prog.mode is Mode.SCALE and not prog.mode_declared
    with pytest.raises(ParseError):
        read_mode_pragma("#mode fancy\n")


@pytest.mark.parametrize(
    "src, line, col",
    [
        ("run A(", 1, 7),
        ("let A()@world,0,sphere(1) =\n  do delay@1 0\nrun 0", 2, 14),
        ("new a@1,1:ch(\nrun 0", 2, 1),
        ("run A()_", 1, 9),
    ],
)
def test_parse_errors_have_positions(src, line, col):
    with pytest.raises(ParseError) as info:
        parse_program(src)
    assert (info.value.line, info.value.col) == (line, col), str(info.value)


# ---------------------------------------------------------------------------
# Free names and substitution


def test_free_names_and_vars():
    c = parse_process("new a@r,0.5:ch(fl) (A(x)_this | B(a, b))")
    assert free_idents(c) == {"r", "x", "b"}
    assert free_vars(c, names={"b"}) == {"r", "x"}
    assert free_names(c, names={"b"}) == {"b"}


def test_input_binds_its_variable():
    b = Branch(Input("a", "v"), Instance("A", Ident("v"), Ident("w")))
    assert free_idents(b) == {"a", "w"}


def test_substitution_avoids_capture():
    # (new y ... A(x, y))[y/x]: the restriction must be renamed
    p = Restrict(ChannelDecl("y", Const(1.0), Const(0.0), TOP), Instance("A", Tuple((Ident("x"), Ident("y"))), None))
    q = substitute_many(p, {"x": Ident("y")})
    assert isinstance(q, Restrict) and q.decl.name != "y"
    assert q.body.arg == Tuple((Ident("y"), Ident(q.decl.name)))
    assert "y" in free_idents(q)


def test_substitution_stops_at_shadowing_binders():
    b = Branch(Input("a", "x"), Instance("A", Ident("x"), None))
    assert substitute(b, "x", 3.0) == b
    p = Restrict(ChannelDecl("x", Ident("x"), Const(0.0), TOP), Instance("A", Ident("x"), None))
    q = substitute(p, "x", 2.0)
    # the rate is outside the binder's scope
    assert q.decl.rate == Const(2.0) and q.body.arg == Ident("x")


def test_substitute_this():
    p = parse_process("A(this.1)_((fst(this), 0), 1)")
    q = substitute_this(p, ((1.0, 2.0, 3.0), 1.5))
    assert "this" not in format_process(q)


@given(processes(), idents(), st.sampled_from(["k", "x", "v"]))
def test_substitution_free_names(p, x, y):
    q = substitute_many(p, {x: Ident(y)})
    expected = free_idents(p) - {x}
    if x in free_idents(p):
        expected |= {y}
    assert free_idents(q) == expected


@given(processes(), idents())
def test_substitution_of_absent_name_is_identity(p, x):
    if x not in free_idents(p):
        assert substitute_many(p, {x: Const(1.0)}) == p


@given(choices())
def test_renaming_restrictions_is_alpha_equivalent(c):
    counter = iter(range(10**6))
    decls, branches = rename_restrictions(c, lambda n: f"{n}#{next(counter)}")
    renamed = RestrictedChoice(tuple(decls), branches)
    assert alpha_equivalent(c, renamed)
    assert free_idents(renamed) == free_idents(c)


def test_alpha_equivalence_distinguishes_free_names():
    a = parse_process("new a@1,0:ch() A(a)")
    b = parse_process("new b@1,0:ch() A(b)")
    c = parse_process("new b@1,0:ch() A(a)")
    assert alpha_equivalent(a, b)
    assert not alpha_equivalent(a, c)


def test_lift_to_scale_preserves_typing(microtubules):
    prog = parse_program(microtubules)
    lifted = lift_to_scale(prog)
    assert lifted.mode is Mode.SCALE
    assert check_program(lifted).ok
    assert not check_program(prog, Mode.SCALE).ok
    with pytest.raises(ValueError):
        lift_to_scale(lifted)


def test_format_choice_is_parseable(bacteria):
    for d in parse_program(bacteria).defs:
        text = format_choice(d.body)
        assert text.startswith("do ") or text.startswith("(")
