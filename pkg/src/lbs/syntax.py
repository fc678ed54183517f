"""Abstract syntax, values, types and binder-aware utilities.

AST nodes are frozen dataclasses. Every node carries an optional source
``span`` that is excluded from equality, so structurally identical terms
compare equal wherever they came from.

Identifiers are a single namespace, as in the calculus: an identifier bound
by ``new`` is a channel name, one bound by an input prefix or an entity
parameter is a variable. At run time channel names are ordinary
identifiers, so substituting a channel value for a variable yields an
``Ident`` again.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


def _span():
    return field(default=None, compare=False, repr=False)


class Mode(enum.Enum):
    BASE = "base"
    RANDOM = "random"
    SCALE = "scale"


# --------------------------------------------------------------------------
# Types

@dataclass(frozen=True)
class Ch:
    payload: "TypeExpr"


@dataclass(frozen=True)
class Fl:
    pass


@dataclass(frozen=True)
class Prod:
    items: tuple

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("product types have arity >= 2")


@dataclass(frozen=True)
class Top:
    pass


TypeExpr = Union[Ch, Fl, Prod, Top]

FL = Fl()
TOP = Top()
POINT = Prod((FL, FL, FL))


def prod(*items: TypeExpr) -> TypeExpr:
    if not items:
        return TOP
    if len(items) == 1:
        return items[0]
    return Prod(tuple(items))


def this_type(mode: Mode) -> TypeExpr:
    if mode is Mode.SCALE:
        return Prod((POINT, FL))
    return POINT


def subscript_type(mode: Mode) -> TypeExpr:
    if mode is Mode.BASE:
        return POINT
    if mode is Mode.RANDOM:
        return Prod((POINT, FL))
    return Prod((Prod((POINT, FL)), FL))


# --------------------------------------------------------------------------
# Values: float | Chan | () | tuple of values (arity >= 2)

@dataclass(frozen=True)
class Chan:
    name: str

    def __repr__(self):
        return f"Chan({self.name!r})"


UNIT = ()


def is_value(v) -> bool:
    if isinstance(v, float):
        return True
    if isinstance(v, Chan):
        return True
    if isinstance(v, tuple):
        return len(v) != 1 and all(is_value(x) for x in v)
    return False


# --------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True)
class Ident:
    name: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Const:
    value: float
    span: Span | None = _span()


@dataclass(frozen=True)
class This:
    span: Span | None = _span()


@dataclass(frozen=True)
class Tuple:
    items: tuple
    span: Span | None = _span()

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("tuples have arity >= 2; use Unit for ()")


@dataclass(frozen=True)
class Unit:
    span: Span | None = _span()


@dataclass(frozen=True)
class Proj:
    expr: "Expression"
    index: int
    span: Span | None = _span()

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("projection index starts at 1")


@dataclass(frozen=True)
class Op:
    name: str
    arg: "Expression"
    span: Span | None = _span()


Expression = Union[Ident, Const, This, Tuple, Unit, Proj, Op]


def value_to_expr(v) -> Expression:
    if isinstance(v, float):
        return Const(v)
    if isinstance(v, int) and not isinstance(v, bool):
        return Const(float(v))
    if isinstance(v, Chan):
        return Ident(v.name)
    if isinstance(v, tuple):
        if not v:
            return Unit()
        return Tuple(tuple(value_to_expr(x) for x in v))
    raise TypeError(f"not a value: {v!r}")


def tuple_expr(items) -> Expression:
    items = tuple(items)
    if not items:
        return Unit()
    if len(items) == 1:
        return items[0]
    return Tuple(items)


# --------------------------------------------------------------------------
# Prefixes, processes, definitions

@dataclass(frozen=True)
class Delay:
    rate: Expression
    span: Span | None = _span()


@dataclass(frozen=True)
class Output:
    chan: str
    payload: Expression
    span: Span | None = _span()


@dataclass(frozen=True)
class Input:
    chan: str
    binder: str  # "_" binds nothing
    span: Span | None = _span()


@dataclass(frozen=True)
class Move:
    span: Span | None = _span()


Prefix = Union[Delay, Output, Input, Move]


@dataclass(frozen=True)
class Nil:
    span: Span | None = _span()


@dataclass(frozen=True)
class Instance:
    entity: str
    arg: Expression
    loc: Expression | None  # None: stay at the parent frame
    span: Span | None = _span()


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"
    span: Span | None = _span()


@dataclass(frozen=True)
class ChannelDecl:
    """``a@rate,radius:ch(payload)``; rate and radius are expressions."""

    name: str
    rate: Expression
    radius: Expression
    payload: TypeExpr
    span: Span | None = _span()

    @property
    def type(self) -> Ch:
        return Ch(self.payload)


@dataclass(frozen=True)
class Restrict:
    decl: ChannelDecl
    body: "Process"
    span: Span | None = _span()


Process = Union[Nil, Instance, Par, Restrict]


@dataclass(frozen=True)
class Branch:
    prefix: Prefix
    cont: Process
    span: Span | None = _span()


@dataclass(frozen=True)
class RestrictedChoice:
    restrictions: tuple  # of ChannelDecl
    branches: tuple  # of Branch

    def __post_init__(self):
        if not self.branches:
            raise ValueError("a choice needs at least one branch")


@dataclass(frozen=True)
class ShapeExpr:
    kind: str  # "sphere" | "cuboid"
    dims: tuple  # of Expression
    span: Span | None = _span()


@dataclass(frozen=True)
class SpaceExpr:
    shape: ShapeExpr
    anchor: Expression
    span: Span | None = _span()


@dataclass(frozen=True)
class SpaceRef:
    name: str  # "world" is the unbounded space
    span: Span | None = _span()


@dataclass(frozen=True)
class EntityDef:
    name: str
    params: tuple  # of (name, TypeExpr)
    body: RestrictedChoice
    space: SpaceRef | SpaceExpr
    step: Expression
    shape: ShapeExpr
    max_size: Expression | None = None
    span: Span | None = _span()

    @property
    def param_type(self) -> TypeExpr:
        return prod(*(t for _, t in self.params))

    @property
    def param_names(self) -> tuple:
        return tuple(n for n, _ in self.params)


@dataclass(frozen=True)
class Program:
    mode: Mode
    constants: tuple  # of (name, Expression)
    spaces: tuple  # of (name, SpaceExpr)
    channels: tuple  # of ChannelDecl
    defs: tuple  # of EntityDef
    initial: Process
    mode_declared: bool = field(default=False, compare=False)


def par(*procs: Process) -> Process:
    procs = [p for p in procs]
    if not procs:
        return Nil()
    out = procs[0]
    for p in procs[1:]:
        out = Par(out, p)
    return out


def par_components(p: Process) -> list:
    if isinstance(p, Par):
        return par_components(p.left) + par_components(p.right)
    return [p]


# --------------------------------------------------------------------------
# Free identifiers

def _expr_idents(e: Expression, out: set):
    match e:
        case Ident(name):
            out.add(name)
        case Tuple(items):
            for x in items:
                _expr_idents(x, out)
        case Proj(x, _) | Op(_, x):
            _expr_idents(x, out)
        case _:
            pass


def _free(term, exprs: set, chans: set):
    """Collect free identifiers of ``term``, split by position."""
    match term:
        case Ident() | Const() | This() | Tuple() | Unit() | Proj() | Op():
            _expr_idents(term, exprs)
        case Nil():
            pass
        case Instance(_, arg, loc):
            _expr_idents(arg, exprs)
            if loc is not None:
                _expr_idents(loc, exprs)
        case Par(l, r):
            _free(l, exprs, chans)
            _free(r, exprs, chans)
        case Restrict(decl, body):
            _expr_idents(decl.rate, exprs)
            _expr_idents(decl.radius, exprs)
            e2, c2 = set(), set()
            _free(body, e2, c2)
            e2.discard(decl.name)
            c2.discard(decl.name)
            exprs |= e2
            chans |= c2
        case Branch(prefix, cont):
            e2, c2 = set(), set()
            _free(cont, e2, c2)
            match prefix:
                case Delay(rate):
                    _expr_idents(rate, exprs)
                case Output(chan, payload):
                    chans.add(chan)
                    _expr_idents(payload, exprs)
                case Input(chan, binder):
                    chans.add(chan)
                    e2.discard(binder)
                    c2.discard(binder)
            exprs |= e2
            chans |= c2
        case RestrictedChoice(restrictions, branches):
            e2, c2 = set(), set()
            for b in branches:
                _free(b, e2, c2)
            # restrictions scope over the choice and over later declarations
            for decl in reversed(restrictions):
                e2.discard(decl.name)
                c2.discard(decl.name)
                _expr_idents(decl.rate, e2)
                _expr_idents(decl.radius, e2)
            exprs |= e2
            chans |= c2
        case EntityDef(_, params, body):
            e2, c2 = set(), set()
            _free(body, e2, c2)
            for n, _ in params:
                e2.discard(n)
                c2.discard(n)
            exprs |= e2
            chans |= c2
        case _:
            raise TypeError(f"not a term: {term!r}")


def free_idents(term) -> set:
    exprs, chans = set(), set()
    _free(term, exprs, chans)
    return exprs | chans


def free_vars(term, names: Iterable[str] = ()) -> set:
    """Free variables: free identifiers in expression positions, minus known
    channel ``names``."""
    exprs, chans = set(), set()
    _free(term, exprs, chans)
    return exprs - set(names)


def free_names(term, names: Iterable[str] = ()) -> set:
    """Free channel names: identifiers used as channels, plus expression
    identifiers that are known channel ``names``."""
    exprs, chans = set(), set()
    _free(term, exprs, chans)
    return chans | (exprs & set(names))


def contains_this(term) -> bool:
    match term:
        case This():
            return True
        case Tuple(items):
            return any(contains_this(x) for x in items)
        case Proj(x, _) | Op(_, x):
            return contains_this(x)
        case Ident() | Const() | Unit():
            return False
        case Instance(_, arg, loc):
            return contains_this(arg) or loc is None or contains_this(loc)
        case Par(l, r):
            return contains_this(l) or contains_this(r)
        case Restrict(d, body):
            return contains_this(d.rate) or contains_this(d.radius) or contains_this(body)
        case Nil():
            return False
    raise TypeError(f"not a term: {term!r}")


# --------------------------------------------------------------------------
# Capture-avoiding substitution

def fresh_ident(base: str, avoid: set) -> str:
    """The first primed variant ``base'n`` not in ``avoid``."""
    stem = base.split("'")[0]
    for n in itertools.count(1):
        name = f"{stem}'{n}"
        if name not in avoid:
            return name


def _subst_expr(e: Expression, m: dict) -> Expression:
    match e:
        case Ident(name):
            return m.get(name, e)
        case Tuple(items, span):
            return Tuple(tuple(_subst_expr(x, m) for x in items), span)
        case Proj(x, i, span):
            return Proj(_subst_expr(x, m), i, span)
        case Op(name, x, span):
            return Op(name, _subst_expr(x, m), span)
        case _:
            return e


def _subst_chan(name: str, m: dict) -> str:
    if name not in m:
        return name
    target = m[name]
    if not isinstance(target, Ident):
        raise TypeError(f"cannot substitute {target!r} in channel position {name!r}")
    return target.name


def _mapping_idents(m: dict) -> set:
    out = set()
    for e in m.values():
        _expr_idents(e, out)
    return out


def _under_binder(binder: str, body, m: dict):
    """Prepare to descend under ``binder``: returns (binder', body', m')."""
    m = {k: v for k, v in m.items() if k != binder}
    if not m or binder == "_":
        return binder, body, m
    if binder in _mapping_idents(m):
        new = fresh_ident(binder, free_idents(body) | _mapping_idents(m) | set(m))
        body = substitute_many(body, {binder: Ident(new)})
        binder = new
    return binder, body, m


def _subst_decl(d: ChannelDecl, m: dict) -> ChannelDecl:
    return replace(d, rate=_subst_expr(d.rate, m), radius=_subst_expr(d.radius, m))


def substitute_many(term, m: dict):
    """Simultaneous capture-avoiding substitution of expressions for identifiers."""
    if not m:
        return term
    match term:
        case Ident() | Const() | This() | Tuple() | Unit() | Proj() | Op():
            return _subst_expr(term, m)
        case Nil():
            return term
        case Instance(ent, arg, loc, span):
            return Instance(ent, _subst_expr(arg, m), None if loc is None else _subst_expr(loc, m), span)
        case Par(l, r, span):
            return Par(substitute_many(l, m), substitute_many(r, m), span)
        case Restrict(decl, body, span):
            decl = _subst_decl(decl, m)
            name, body, m2 = _under_binder(decl.name, body, m)
            return Restrict(replace(decl, name=name), substitute_many(body, m2), span)
        case Branch(prefix, cont, span):
            match prefix:
                case Delay(rate, ps):
                    return Branch(Delay(_subst_expr(rate, m), ps), substitute_many(cont, m), span)
                case Output(chan, payload, ps):
                    return Branch(
                        Output(_subst_chan(chan, m), _subst_expr(payload, m), ps),
                        substitute_many(cont, m),
                        span,
                    )
                case Input(chan, binder, ps):
                    chan = _subst_chan(chan, m)
                    binder, cont, m2 = _under_binder(binder, cont, m)
                    return Branch(Input(chan, binder, ps), substitute_many(cont, m2), span)
                case Move():
                    return Branch(prefix, substitute_many(cont, m), span)
        case RestrictedChoice(restrictions, branches):
            if not restrictions:
                return RestrictedChoice((), tuple(substitute_many(b, m) for b in branches))
            first, rest = restrictions[0], restrictions[1:]
            first = _subst_decl(first, m)
            inner = RestrictedChoice(rest, branches)
            name, inner, m2 = _under_binder(first.name, inner, m)
            inner = substitute_many(inner, m2)
            return RestrictedChoice((replace(first, name=name),) + inner.restrictions, inner.branches)
    raise TypeError(f"not a term: {term!r}")


def substitute(term, var: str, value):
    """``term[value/var]`` for a closed value (or expression)."""
    e = value if isinstance(value, (Ident, Const, This, Tuple, Unit, Proj, Op)) else value_to_expr(value)
    return substitute_many(term, {var: e})


def substitute_this(term, this_value):
    """Replace every ``this`` by ``this_value`` (a value or expression)."""
    e = this_value if isinstance(this_value, (Ident, Const, Tuple, Unit, Proj, Op)) else value_to_expr(this_value)

    def go(t):
        match t:
            case This():
                return e
            case Tuple(items, span):
                return Tuple(tuple(go(x) for x in items), span)
            case Proj(x, i, span):
                return Proj(go(x), i, span)
            case Op(name, x, span):
                return Op(name, go(x), span)
            case Ident() | Const() | Unit():
                return t
            case Nil():
                return t
            case Instance(ent, arg, loc, span):
                return Instance(ent, go(arg), None if loc is None else go(loc), span)
            case Par(l, r, span):
                return Par(go(l), go(r), span)
            case Restrict(d, body, span):
                return Restrict(replace(d, rate=go(d.rate), radius=go(d.radius)), go(body), span)
        raise TypeError(f"not a term: {t!r}")

    return go(term)


def rename_restrictions(choice: RestrictedChoice, fresh, only: int | None = None) -> tuple:
    """Give every restriction of ``choice`` a fresh name.

    Returns ``(decls, branches)`` with the renamed declarations and the
    branches rewritten accordingly. ``fresh`` maps a source name to a new
    channel name. With ``only`` set, just that branch is rewritten and
    returned (the others are about to be discarded).
    """
    if not choice.restrictions:
        return [], (choice.branches if only is None else (choice.branches[only],))
    m = {}
    decls = []
    for d in choice.restrictions:
        d = _subst_decl(d, m)
        new = fresh(d.name)
        m[d.name] = Ident(new)
        decls.append(replace(d, name=new))
    if only is not None:
        return decls, (substitute_many(choice.branches[only], m),)
    branches = tuple(substitute_many(b, m) for b in choice.branches)
    return decls, branches


def alpha_equivalent(a, b) -> bool:
    """Structural equality up to renaming of bound identifiers."""
    return _canon(a, {}, [0]) == _canon(b, {}, [0])


def _canon(t, env: dict, counter: list):
    def bind(name):
        counter[0] += 1
        env2 = dict(env)
        env2[name] = f"%{counter[0]}"
        return env2, env2[name]

    match t:
        case Ident(name):
            return Ident(env.get(name, name))
        case Tuple(items):
            return Tuple(tuple(_canon(x, env, counter) for x in items))
        case Proj(x, i):
            return Proj(_canon(x, env, counter), i)
        case Op(n, x):
            return Op(n, _canon(x, env, counter))
        case Const() | This() | Unit() | Nil():
            return t
        case Instance(ent, arg, loc):
            return Instance(ent, _canon(arg, env, counter), None if loc is None else _canon(loc, env, counter))
        case Par(l, r):
            return Par(_canon(l, env, counter), _canon(r, env, counter))
        case Restrict(d, body):
            d2 = replace(d, rate=_canon(d.rate, env, counter), radius=_canon(d.radius, env, counter))
            env2, n = bind(d.name)
            return Restrict(replace(d2, name=n), _canon(body, env2, counter))
        case Branch(prefix, cont):
            match prefix:
                case Delay(rate):
                    return Branch(Delay(_canon(rate, env, counter)), _canon(cont, env, counter))
                case Output(chan, payload):
                    return Branch(Output(env.get(chan, chan), _canon(payload, env, counter)), _canon(cont, env, counter))
                case Input(chan, binder):
                    env2, n = bind(binder)
                    return Branch(Input(env.get(chan, chan), n), _canon(cont, env2, counter))
                case Move():
                    return Branch(Move(), _canon(cont, env, counter))
        case RestrictedChoice(restrictions, branches):
            decls = []
            for d in restrictions:
                d2 = replace(d, rate=_canon(d.rate, env, counter), radius=_canon(d.radius, env, counter))
                env, n = bind(d.name)
                decls.append(replace(d2, name=n))
            return RestrictedChoice(tuple(decls), tuple(_canon(b, env, counter) for b in branches))
    raise TypeError(f"not a term: {t!r}")


# --------------------------------------------------------------------------
# Mode lifting

def lift_to_scale(program: Program) -> Program:
    """Rewrite a base-mode program for the scaling semantics.

    ``this`` becomes ``fst(this)`` and every subscript ``d`` becomes
    ``((d, 0), 1)``: no random translation and unit relative scale.
    """
    if program.mode is not Mode.BASE:
        raise ValueError("only base-mode programs can be lifted")
    fst_this = Proj(This(), 1)

    def lift_expr(e):
        return substitute_this(e, fst_this) if contains_this(e) else e

    def lift_proc(p):
        match p:
            case Nil():
                return p
            case Instance(ent, arg, loc, span):
                base = fst_this if loc is None else lift_expr(loc)
                return Instance(ent, lift_expr(arg), Tuple((Tuple((base, Const(0.0))), Const(1.0))), span)
            case Par(l, r, span):
                return Par(lift_proc(l), lift_proc(r), span)
            case Restrict(d, body, span):
                return Restrict(replace(d, rate=lift_expr(d.rate), radius=lift_expr(d.radius)), lift_proc(body), span)
        raise TypeError(p)

    def lift_prefix(pi):
        match pi:
            case Delay(rate, s):
                return Delay(lift_expr(rate), s)
            case Output(chan, payload, s):
                return Output(chan, lift_expr(payload), s)
        return pi

    defs = []
    for d in program.defs:
        body = RestrictedChoice(
            tuple(replace(r, rate=lift_expr(r.rate), radius=lift_expr(r.radius)) for r in d.body.restrictions),
            tuple(Branch(lift_prefix(b.prefix), lift_proc(b.cont), b.span) for b in d.body.branches),
        )
        defs.append(replace(d, body=body))
    return replace(program, mode=Mode.SCALE, defs=tuple(defs), initial=lift_proc(program.initial))


# --------------------------------------------------------------------------
# Pretty printing (concrete syntax accepted by the parser)

def format_type(t: TypeExpr, nested: bool = False) -> str:
    match t:
        case Fl():
            return "fl"
        case Top():
            return "top"
        case Ch(Top()):
            return "ch()"
        case Ch(p):
            return f"ch({format_type(p)})"
        case Prod(items):
            s = "*".join(format_type(x, nested=True) for x in items)
            return f"({s})" if nested else s
    raise TypeError(t)


def format_float(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = repr(float(x))
    return s


_INFIX = {"add": "+", "sub": "-", "mul": "*"}
_PREC = {"add": 1, "sub": 1, "mul": 2}


def _is_atomic(e) -> bool:
    match e:
        case Ident() | This() | Tuple() | Unit() | Proj():
            return True
        case Const(v):
            return v >= 0 or math.isnan(v)
        case Op(name, arg):
            return not (name in _INFIX and isinstance(arg, Tuple) and len(arg.items) == 2)
    return False


def _atom(e) -> str:
    s = format_expr(e)
    return s if _is_atomic(e) else f"({s})"


def format_expr(e: Expression) -> str:
    match e:
        case Ident(name):
            return name
        case Const(v):
            return format_float(v)
        case This():
            return "this"
        case Unit():
            return "()"
        case Tuple(items):
            return "(" + ", ".join(format_expr(x) for x in items) + ")"
        case Proj(x, i):
            inner = format_expr(x)
            if not _is_atomic(x) or isinstance(x, Proj):
                inner = f"({inner})"
            return f"{inner}.{i}"
        case Op(name, arg):
            if name in _INFIX and isinstance(arg, Tuple) and len(arg.items) == 2:
                a, b = arg.items
                return f"{_atom(a)} {_INFIX[name]} {_atom(b)}"
            if isinstance(arg, Tuple):
                return f"{name}{format_expr(arg)}"
            return f"{name}({format_expr(arg)})"
    raise TypeError(e)


def _format_args(arg: Expression) -> str:
    match arg:
        case Unit():
            return "()"
        case Tuple(items):
            return "(" + ", ".join(format_expr(x) for x in items) + ")"
    return f"({format_expr(arg)})"


def format_decl(d: ChannelDecl) -> str:
    return f"{d.name}@{format_expr(d.rate)},{format_expr(d.radius)}:{format_type(d.type)}"


def format_process(p: Process, top: bool = True) -> str:
    match p:
        case Nil():
            return "0"
        case Instance(ent, arg, loc):
            s = f"{ent}{_format_args(arg)}"
            if loc is not None:
                s += f"_{_atom(loc)}"
            return s
        case Par(l, r):
            right = format_process(r, top=False)
            if isinstance(r, Par):
                right = f"({right})"
            s = f"{format_process(l, top=False)} | {right}"
            return s if top else s
        case Restrict(d, body):
            inner = format_process(body)
            return f"new {format_decl(d)} ({inner})"
    raise TypeError(p)


def format_prefix(pi: Prefix) -> str:
    match pi:
        case Delay(rate):
            return f"delay@{_atom(rate)}"
        case Output(chan, Unit()):
            return f"!{chan}"
        case Output(chan, payload):
            return f"!{chan}{_format_args(payload)}"
        case Input(chan, "_"):
            return f"?{chan}"
        case Input(chan, binder):
            return f"?{chan}({binder})"
        case Move():
            return "mov"
    raise TypeError(pi)


def _format_cont(p: Process) -> str:
    s = format_process(p)
    return f"({s})" if isinstance(p, Par) else s


def format_choice(n: RestrictedChoice, indent: str = "  ") -> str:
    lines = [f"new {format_decl(d)}" for d in n.restrictions]
    for i, b in enumerate(n.branches):
        kw = "do" if i == 0 else "or"
        lines.append(f"{kw} {format_prefix(b.prefix)}; {_format_cont(b.cont)}")
    return "(" + ("\n" + indent).join(lines) + ")"


def format_shape(s: ShapeExpr) -> str:
    return f"{s.kind}(" + ", ".join(format_expr(d) for d in s.dims) + ")"


def format_space(s) -> str:
    if isinstance(s, SpaceRef):
        return s.name
    return f"{format_shape(s.shape)} @ {_atom(s.anchor)}"


def format_program(prog: Program) -> str:
    out = [f"#mode {prog.mode.value}"]
    for name, e in prog.constants:
        out.append(f"val {name} = {format_expr(e)}")
    for name, s in prog.spaces:
        out.append(f"val {name}:space = {format_space(s)}")
    for d in prog.channels:
        out.append(f"new {format_decl(d)}")
    for i, d in enumerate(prog.defs):
        kw = "let" if i == 0 else "and"
        params = ", ".join(f"{n}:{format_type(t)}" for n, t in d.params)
        geo = [format_space(d.space), format_expr(d.step), format_shape(d.shape)]
        if d.max_size is not None:
            geo.append(format_expr(d.max_size))
        out.append(f"{kw} {d.name}({params})@{','.join(geo)} =\n  {format_choice(d.body)}")
    out.append(f"run {format_process(prog.initial)}")
    return "\n".join(out) + "\n"
