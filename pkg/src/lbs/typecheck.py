"""Static semantics: expression typing, well-formed processes, definitions
and programs.

Every diagnostic names the typing rule whose premise failed, e.g.
``Ty.out`` for a payload mismatch or ``Ty.inst.RS`` for a subscript of the
wrong shape under the scaling semantics.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .evaluation import DEFAULT_OPS, type_of_op
from .syntax import (
    FL,
    POINT,
    TOP,
    Branch,
    Ch,
    Chan,
    Const,
    Delay,
    EntityDef,
    Ident,
    Input,
    Instance,
    Mode,
    Move,
    Nil,
    Op,
    Output,
    Par,
    Prod,
    Program,
    Proj,
    Restrict,
    RestrictedChoice,
    Span,
    SpaceExpr,
    SpaceRef,
    This,
    Tuple,
    Unit,
    format_type,
    free_vars,
    subscript_type,
    this_type,
)

INST_RULE = {Mode.BASE: "Ty.inst", Mode.RANDOM: "Ty.inst.R", Mode.SCALE: "Ty.inst.RS"}
THIS_RULE = {Mode.BASE: "Ty.this", Mode.RANDOM: "Ty.this", Mode.SCALE: "Ty.this.RS"}


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    message: str
    span: Span | None = None
    severity: str = "error"

    def format(self, path: str = "<input>") -> str:
        line, col = (self.span.line, self.span.col) if self.span else (0, 0)
        return f"{path}:{line}:{col}: [{self.rule}] {self.message}"

    def to_dict(self, path: str | None = None) -> dict:
        d = {
            "severity": self.severity,
            "rule": self.rule,
            "message": self.message,
            "line": self.span.line if self.span else None,
            "col": self.span.col if self.span else None,
        }
        if path is not None:
            d["file"] = path
        return d


class TypeCheckError(Exception):
    def __init__(self, diag: Diagnostic):
        self.diagnostic = diag
        super().__init__(diag.format())


@dataclass(frozen=True)
class TypeEnv:
    """Identifier (channel/variable) types and entity parameter types."""

    idents: dict = field(default_factory=dict)
    entities: dict = field(default_factory=dict)

    def extend(self, name: str, t) -> "TypeEnv":
        if name == "_":
            return self
        d = dict(self.idents)
        d.pop(name, None)  # re-insert so the latest binding is last
        d[name] = t
        return TypeEnv(d, self.entities)

    def with_entities(self, entities: dict) -> "TypeEnv":
        return TypeEnv(self.idents, {**self.entities, **entities})

    def lookup(self, name: str):
        return self.idents.get(name)


def _err(rule, message, node=None):
    return TypeCheckError(Diagnostic(rule, message, getattr(node, "span", None)))


def type_of_expr(env: TypeEnv, e, mode: Mode = Mode.SCALE, *, allow_this: bool = True, ops: dict = DEFAULT_OPS):
    """The type of ``e`` under ``env``; raises :class:`TypeCheckError`."""
    match e:
        case Ident(name):
            t = env.lookup(name)
            if t is None:
                raise _err("Ty.id", f"unbound identifier {name!r}", e)
            return t
        case Const():
            return FL
        case This():
            if not allow_this:
                raise _err(THIS_RULE[mode], "'this' used outside an entity definition", e)
            return this_type(mode)
        case Unit():
            return TOP
        case Tuple(items):
            return Prod(tuple(type_of_expr(env, x, mode, allow_this=allow_this, ops=ops) for x in items))
        case Proj(x, i):
            t = type_of_expr(env, x, mode, allow_this=allow_this, ops=ops)
            if not isinstance(t, Prod) or not 1 <= i <= len(t.items):
                raise _err("Ty.sel", f"cannot select component {i} of a value of type {format_type(t)}", e)
            return t.items[i - 1]
        case Op(name, x):
            t = type_of_expr(env, x, mode, allow_this=allow_this, ops=ops)
            if name not in ops:
                raise _err("Ty.op", f"unknown operator {name!r}", e)
            res = type_of_op(name, t, ops)
            if res is None:
                raise _err("Ty.op", f"operator {name!r} does not accept an argument of type {format_type(t)}", e)
            return res
    raise TypeError(f"not an expression: {e!r}")


def type_of_value(v, channels: dict):
    """Type of a run-time value; ``channels`` maps channel names to types."""
    if isinstance(v, float):
        return FL
    if isinstance(v, Chan):
        if v.name not in channels:
            raise TypeCheckError(Diagnostic("Ty.id", f"channel {v.name!r} not in the channel environment"))
        return channels[v.name]
    if v == ():
        return TOP
    if isinstance(v, tuple):
        return Prod(tuple(type_of_value(x, channels) for x in v))
    raise TypeError(f"not a value: {v!r}")


@dataclass
class _Checker:
    mode: Mode
    ops: dict
    diags: list = field(default_factory=list)

    def report(self, rule, message, node=None):
        self.diags.append(Diagnostic(rule, message, getattr(node, "span", None)))

    def expr(self, env, e, *, allow_this=True):
        try:
            return type_of_expr(env, e, self.mode, allow_this=allow_this, ops=self.ops)
        except TypeCheckError as exc:
            self.diags.append(exc.diagnostic)
            return None

    def expect(self, env, e, want, rule, what, *, allow_this=True, at=None):
        t = self.expr(env, e, allow_this=allow_this)
        if t is not None and t != want:
            node = e if getattr(e, "span", None) is not None or at is None else at
            self.report(rule, f"{what} has type {format_type(t)}, expected {format_type(want)}", node)
        return t

    def process(self, env, p, *, allow_this=True):
        match p:
            case Nil():
                pass
            case Instance(ent, arg, loc):
                rule = INST_RULE[self.mode]
                want = env.entities.get(ent)
                if want is None:
                    self.report(rule, f"unknown entity {ent!r}", p)
                    self.expr(env, arg, allow_this=allow_this)
                else:
                    self.expect(env, arg, want, rule, f"argument of {ent}", allow_this=allow_this, at=p)
                if loc is None:
                    if not allow_this:
                        self.report(rule, f"initial instance of {ent} needs an explicit location", p)
                else:
                    self.expect(env, loc, subscript_type(self.mode), rule, f"location of {ent}", allow_this=allow_this)
            case Par(l, r):
                self.process(env, l, allow_this=allow_this)
                self.process(env, r, allow_this=allow_this)
            case Restrict(decl, body):
                env = self.restriction(env, decl, allow_this=allow_this)
                self.process(env, body, allow_this=allow_this)
            case _:
                raise TypeError(f"not a process: {p!r}")

    def restriction(self, env, decl, *, allow_this=True):
        self.expect(env, decl.rate, FL, "Ty.restr", f"rate of {decl.name}", allow_this=allow_this)
        self.expect(env, decl.radius, FL, "Ty.restr", f"radius of {decl.name}", allow_this=allow_this)
        return env.extend(decl.name, Ch(decl.payload))

    def channel(self, env, name, rule, node):
        t = env.lookup(name)
        if t is None:
            self.report(rule, f"unbound channel {name!r}", node)
            return None
        if not isinstance(t, Ch):
            self.report(rule, f"{name!r} has type {format_type(t)}, not a channel type", node)
            return None
        return t

    def branch(self, env, b: Branch):
        match b.prefix:
            case Delay(rate):
                self.expect(env, rate, FL, "Ty.delay", "delay rate")
                self.process(env, b.cont)
            case Move():
                self.process(env, b.cont)
            case Output(chan, payload):
                t = self.channel(env, chan, "Ty.out", b.prefix)
                if t is None:
                    self.expr(env, payload)
                else:
                    self.expect(env, payload, t.payload, "Ty.out", f"payload sent on {chan}", at=b.prefix)
                self.process(env, b.cont)
            case Input(chan, binder):
                t = self.channel(env, chan, "Ty.in", b.prefix)
                if t is not None:
                    env = env.extend(binder, t.payload)
                self.process(env, b.cont)

    def choice(self, env, n: RestrictedChoice):
        for decl in n.restrictions:
            env = self.restriction(env, decl)
        for b in n.branches:
            self.branch(env, b)


def check_process(env: TypeEnv, r, mode: Mode = Mode.SCALE, *, ops: dict = DEFAULT_OPS, allow_this: bool = True) -> list:
    """Diagnostics for a process, a branch or a restricted choice."""
    c = _Checker(mode, ops)
    if isinstance(r, RestrictedChoice):
        c.choice(env, r)
    elif isinstance(r, Branch):
        c.branch(env, r)
    else:
        c.process(env, r, allow_this=allow_this)
    return c.diags


def env_of_channels(channels) -> dict:
    return {d.name: Ch(d.payload) for d in channels}


def env_of_defs(defs) -> dict:
    return {d.name: d.param_type for d in defs}


@dataclass
class CheckResult:
    program: Program
    mode: Mode
    diagnostics: list
    env: TypeEnv

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)


def check_program(prog: Program, mode: Mode | None = None, *, ops: dict = DEFAULT_OPS) -> CheckResult:
    """Well-formedness: ``env(E) |- D`` and ``env(E), env(D) |- P``."""
    mode = mode or prog.mode
    c = _Checker(mode, ops)

    seen = {}
    for d in prog.channels:
        if d.name in seen:
            c.report("Ty.env", f"channel {d.name!r} declared more than once (declared at most once in E)", d)
        seen[d.name] = d
    env = TypeEnv(env_of_channels(prog.channels))

    const_names = set()
    for name, e in prog.constants:
        if name in seen:
            c.report("Ty.env", f"{name!r} is declared both as a channel and as a constant", e)
        if name in const_names:
            c.report("Ty.env", f"constant {name!r} defined more than once", e)
        const_names.add(name)
        t = c.expr(env, e, allow_this=False)
        if t is not None:
            env = env.extend(name, t)

    for d in prog.channels:
        c.expect(env, d.rate, FL, "Ty.restr", f"rate of {d.name}", allow_this=False)
        c.expect(env, d.radius, FL, "Ty.restr", f"radius of {d.name}", allow_this=False)

    space_names = set()
    for name, s in prog.spaces:
        if name in space_names:
            c.report("Ty.env", f"space {name!r} defined more than once", s)
        space_names.add(name)
        _check_space(c, env, s)

    def_names = set()
    for d in prog.defs:
        if d.name in def_names:
            c.report("Ty.defs", f"entity {d.name!r} defined more than once (defined at most once in D)", d)
        def_names.add(d.name)
    env = env.with_entities(env_of_defs(prog.defs))

    for d in prog.defs:
        _check_def(c, env, d, space_names, set(seen) | const_names)

    c.process(env, prog.initial, allow_this=False)
    return CheckResult(prog, mode, c.diags, env)


def _check_space(c: _Checker, env, s: SpaceExpr):
    for dim in s.shape.dims:
        c.expect(env, dim, FL, "Ty.defs", f"{s.shape.kind} dimension", allow_this=False)
    c.expect(env, s.anchor, POINT, "Ty.defs", "space anchor", allow_this=False)


def _check_def(c: _Checker, env, d: EntityDef, space_names, global_names):
    if isinstance(d.space, SpaceRef):
        if d.space.name != "world" and d.space.name not in space_names:
            c.report("Ty.defs", f"unknown space {d.space.name!r} in definition of {d.name}", d.space)
    else:
        _check_space(c, env, d.space)
    if d.shape.kind != "sphere":
        c.report("Ty.defs", f"entity {d.name} must have a sphere shape", d.shape)
    for dim in d.shape.dims:
        c.expect(env, dim, FL, "Ty.defs", "shape dimension", allow_this=False)
    c.expect(env, d.step, FL, "Ty.defs", f"step of {d.name}", allow_this=False)
    if d.max_size is not None:
        c.expect(env, d.max_size, FL, "Ty.defs", f"max-size of {d.name}", allow_this=False)

    fv = free_vars(d.body, global_names) - set(d.param_names) - global_names
    if fv:
        c.report("Ty.defs", f"free variable(s) {', '.join(sorted(fv))} of {d.name} are not parameters", d)
    inner = env
    for name, t in d.params:
        inner = inner.extend(name, t)
    c.choice(inner, d.body)


def format_diagnostics(diags, path: str = "<input>", as_json: bool = False) -> str:
    if as_json:
        return json.dumps([d.to_dict(path) for d in diags], indent=2)
    return "\n".join(d.format(path) for d in diags)
