"""Recursive-descent parser for ``.lbs`` source files.

Concrete syntax summary::

    #mode base|random|scale                 (optional, first line)
    val Cytosol:space = cuboid(50.0,50.0,30.0) @ <1.0,2.0,24.0>
    val step = 0.0, stepP = 0.1
    new MTConstruction@0.116,rP:ch(ch(),fl*fl*fl)
    let X(x:T, ...)@Space,step,sphere(1.0)[,max_size] =
        ( new y@0.27,r:ch() do pi; P or pi. P ... )
    and Y(...)@... = ...
    run X()_p1 | X()_p2

Prefixes are ``?c(x)``, ``?c(x,u)``, ``?c``, ``!c(e)``, ``!c``,
``delay@e`` and ``mov``; either ``;`` or ``.`` separates a prefix from its
continuation. ``#`` and ``//`` start comments.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .syntax import (
    FL,
    TOP,
    Branch,
    Ch,
    ChannelDecl,
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
    Proj,
    Prod,
    Program,
    Restrict,
    RestrictedChoice,
    ShapeExpr,
    SpaceExpr,
    SpaceRef,
    Span,
    This,
    Tuple,
    Unit,
    fresh_ident,
    free_idents,
    par,
    substitute_many,
    tuple_expr,
)

KEYWORDS = {"val", "new", "let", "and", "run", "do", "or", "delay", "mov", "this", "inf"}
OP_ALIASES = {"+": "add", "-": "sub", "*": "mul"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>(?:\#|//)[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_']*)
  | (?P<punct>[()<>,:;.|@_!?*+\-=])
    """,
    re.VERBOSE,
)

_PRAGMA_RE = re.compile(r"^\s*#mode\s+(\w+)\s*$")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        exp = f" (expected {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{line}:{col}: {message}{exp}")


@dataclass
class Token:
    kind: str  # number | ident | kw | punct | eof
    text: str
    line: int
    col: int
    glued: bool = False  # no whitespace before this token

    @property
    def span(self) -> Span:
        return Span(self.line, self.col)


def tokenize(text: str) -> list[Token]:
    toks = []
    line, line_start, pos = 1, 0, 0
    glued = False
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
            glued = False
        elif kind in ("ws", "comment"):
            glued = False
        else:
            s = m.group()
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, s, line, col, glued))
            glued = True
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


def read_mode_pragma(text: str) -> Mode | None:
    for raw in text.splitlines():
        if not raw.strip():
            continue
        m = _PRAGMA_RE.match(raw)
        if m is None:
            return None
        try:
            return Mode(m.group(1))
        except ValueError:
            raise ParseError(f"unknown mode {m.group(1)!r}", 1, 1, {"base", "random", "scale"}) from None
    return None


@dataclass
class _Parser:
    toks: list
    i: int = 0
    constants: list = field(default_factory=list)
    spaces: list = field(default_factory=list)
    channels: list = field(default_factory=list)
    defs: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("punct", "kw")

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, expected, what: str | None = None):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(what or f"unexpected {found}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error({repr(text)})
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error({"identifier"})
        return self.advance()

    # -- program

    def program(self) -> None:
        while self.tok.kind != "eof":
            if self.at("val"):
                self.val_stmt()
            elif self.at("new"):
                self.advance()
                self.channels.append(self.decl())
            elif self.at("let"):
                self.advance()
                self.defs.append(self.entity_def())
                while self.accept("and"):
                    self.defs.append(self.entity_def())
            elif self.at("run"):
                self.advance()
                self.runs.append(self.process())
            else:
                self.error({"'val'", "'new'", "'let'", "'run'"})

    def val_stmt(self) -> None:
        self.expect("val")
        while True:
            name = self.ident()
            is_space = False
            if self.accept(":"):
                t = self.ident()
                if t.text != "space":
                    raise ParseError("only ':space' annotations are supported on val", t.line, t.col, {"space"})
                is_space = True
            self.expect("=")
            if is_space or self._at_shape():
                self.spaces.append((name.text, self.space_expr()))
            else:
                self.constants.append((name.text, self.expr()))
            if not self.accept(","):
                break

    def _at_shape(self) -> bool:
        return self.tok.kind == "ident" and self.tok.text in ("sphere", "cuboid") and self.peek().text == "("

    def shape(self) -> ShapeExpr:
        t = self.tok
        if not self._at_shape():
            self.error({"'sphere(...)'", "'cuboid(...)'"})
        self.advance()
        self.expect("(")
        dims = [self.expr()]
        while self.accept(","):
            dims.append(self.expr())
        self.expect(")")
        want = 1 if t.text == "sphere" else 3
        if len(dims) != want:
            raise ParseError(f"{t.text} takes {want} dimension(s), got {len(dims)}", t.line, t.col)
        return ShapeExpr(t.text, tuple(dims), t.span)

    def space_expr(self) -> SpaceExpr:
        t = self.tok
        sh = self.shape()
        self.expect("@")
        return SpaceExpr(sh, self.postfix(), t.span)

    def decl(self) -> ChannelDecl:
        name = self.ident()
        self.expect("@")
        rate = self.expr()
        self.expect(",")
        radius = self.expr()
        self.expect(":")
        t = self.tok
        ty = self.type_expr()
        if not isinstance(ty, Ch):
            raise ParseError("channel declarations need a channel type ch(T)", t.line, t.col, {"'ch(...)'"})
        return ChannelDecl(name.text, rate, radius, ty.payload, name.span)

    def entity_def(self) -> EntityDef:
        name = self.ident()
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                p = self.ident()
                self.expect(":")
                params.append((p.text, self.type_expr()))
                if not self.accept(","):
                    break
        self.expect(")")
        seen = set()
        for p, _ in params:
            if p in seen:
                raise ParseError(f"duplicate parameter {p!r}", name.line, name.col)
            seen.add(p)
        self.expect("@")
        if self._at_shape():
            space = self.space_expr()
        else:
            t = self.ident()
            space = SpaceRef(t.text, t.span)
        self.expect(",")
        step = self.expr()
        self.expect(",")
        shape = self.shape()
        max_size = None
        if self.accept(","):
            max_size = self.expr()
        self.expect("=")
        body = self.body()
        return EntityDef(name.text, tuple(params), body, space, step, shape, max_size, name.span)

    def body(self) -> RestrictedChoice:
        if self.accept("("):
            b = self.body()
            self.expect(")")
            return b
        decls = []
        while self.accept("new"):
            decls.append(self.decl())
        branches = []
        if self.accept("do"):
            branches.append(self.branch())
            while self.accept("or"):
                branches.append(self.branch())
        else:
            branches.append(self.branch())
        return RestrictedChoice(tuple(decls), tuple(branches))

    def branch(self) -> Branch:
        start = self.tok
        prefix, binders = self.prefix()
        if self.accept(";") or self.accept("."):
            cont = self.process()
        else:
            cont = Nil(start.span)
        if binders is not None:
            # ?c(x1,...,xn): one tuple binder, components by projection
            z = fresh_ident("z", free_idents(cont) | set(binders))
            cont = substitute_many(cont, {x: Proj(Ident(z), k + 1) for k, x in enumerate(binders) if x != "_"})
            prefix = Input(prefix.chan, z, prefix.span)
        return Branch(prefix, cont, start.span)

    def prefix(self):
        t = self.tok
        if self.accept("?"):
            chan = self.ident().text
            binders = []
            if self.accept("("):
                if not self.at(")"):
                    while True:
                        if self.accept("_"):
                            binders.append("_")
                        else:
                            binders.append(self.ident().text)
                        if not self.accept(","):
                            break
                self.expect(")")
            named = [b for b in binders if b != "_"]
            if len(set(named)) != len(named):
                raise ParseError("duplicate input binder", t.line, t.col)
            if len(binders) <= 1:
                return Input(chan, binders[0] if binders else "_", t.span), None
            return Input(chan, "_", t.span), binders
        if self.accept("!"):
            chan = self.ident().text
            payload = Unit(t.span)
            if self.at("(") and self.tok.glued:
                payload = self.arg_list()
            return Output(chan, payload, t.span), None
        if self.accept("delay"):
            self.expect("@")
            return Delay(self.expr(), t.span), None
        if self.accept("mov"):
            return Move(t.span), None
        self.error({"'?'", "'!'", "'delay'", "'mov'"})

    def arg_list(self):
        t = self.expect("(")
        items = []
        if not self.at(")"):
            items.append(self.expr())
            while self.accept(","):
                items.append(self.expr())
        self.expect(")")
        e = tuple_expr(items)
        if isinstance(e, Unit):
            return Unit(t.span)
        return e

    # -- processes

    def process(self):
        left = self.pterm()
        while self.accept("|"):
            right = self.pterm()
            left = Par(left, right, left.span)
        return left

    def pterm(self):
        t = self.tok
        if t.kind == "number" and t.text == "0":
            self.advance()
            return Nil(t.span)
        if self.accept("("):
            p = self.process()
            self.expect(")")
            return p
        if self.accept("new"):
            d = self.decl()
            return Restrict(d, self.pterm(), t.span)
        if t.kind == "ident":
            self.advance()
            if not self.at("("):
                self.error({"'('"})
            arg = self.arg_list()
            loc = None
            if self.accept("_"):
                loc = self.postfix()
            return Instance(t.text, arg, loc, t.span)
        self.error({"'0'", "'('", "'new'", "entity instance"})

    # -- types

    def type_expr(self):
        items = [self.type_atom()]
        while self.accept("*"):
            items.append(self.type_atom())
        if len(items) == 1:
            return items[0]
        return Prod(tuple(items))

    def type_atom(self):
        t = self.tok
        if self.accept("("):
            ty = self.type_expr()
            self.expect(")")
            return ty
        if t.kind == "ident" and t.text in ("ch", "chan"):
            self.advance()
            self.expect("(")
            if self.accept(")"):
                return Ch(TOP)
            items = [self.type_expr()]
            while self.accept(","):
                items.append(self.type_expr())
            self.expect(")")
            return Ch(items[0] if len(items) == 1 else Prod(tuple(items)))
        if t.kind == "ident" and t.text == "fl":
            self.advance()
            return FL
        if t.kind == "ident" and t.text in ("top", "unit"):
            self.advance()
            return TOP
        self.error({"'ch(...)'", "'fl'", "'top'", "'('"})

    # -- expressions

    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance()
            right = self.term()
            left = Op(OP_ALIASES[op.text], Tuple((left, right)), op.span)
        return left

    def term(self):
        left = self.unary()
        while self.at("*"):
            op = self.advance()
            right = self.unary()
            left = Op(OP_ALIASES[op.text], Tuple((left, right)), op.span)
        return left

    def unary(self):
        t = self.tok
        if self.accept("-"):
            if self.tok.kind == "number" or self.at("inf"):
                n = self.number()
                return self._postfix_tail(Const(-n.value, t.span))
            return Op("neg", self.unary(), t.span)
        return self.postfix()

    def number(self) -> Const:
        t = self.advance()
        if t.text == "inf":
            return Const(float("inf"), t.span)
        return Const(float(t.text), t.span)

    def postfix(self):
        return self._postfix_tail(self.primary())

    def _postfix_tail(self, e):
        # e.i projections; a "." followed by a continuation is a separator
        while self.at(".") and self.peek().kind == "number" and self.peek().glued:
            num = self.peek()
            parts = num.text.split(".")
            if not all(p.isdigit() for p in parts) or any(int(p) < 1 for p in parts):
                break
            self.i += 2
            for p in parts:
                e = Proj(e, int(p), num.span)
        return e

    def primary(self):
        t = self.tok
        if t.kind == "number" or self.at("inf"):
            return self.number()
        if self.accept("this"):
            return This(t.span)
        if t.kind == "ident":
            self.advance()
            if self.at("(") and self.tok.glued:
                arg = self.arg_list()
                if t.text in ("fst", "snd"):
                    return Proj(arg, 1 if t.text == "fst" else 2, t.span)
                return Op(t.text, arg, t.span)
            return Ident(t.text, t.span)
        if self.accept("("):
            items = []
            if not self.at(")"):
                items.append(self.expr())
                while self.accept(","):
                    items.append(self.expr())
            self.expect(")")
            if not items:
                return Unit(t.span)
            if len(items) == 1:
                return items[0]
            return Tuple(tuple(items), t.span)
        if self.accept("<"):
            items = [self.expr()]
            while self.accept(","):
                items.append(self.expr())
            self.expect(">")
            if len(items) < 2:
                raise ParseError("point literal needs at least two components", t.line, t.col)
            return Tuple(tuple(items), t.span)
        self.error({"expression"})


def parse_program(text: str) -> Program:
    """Parse a complete program. Raises :class:`ParseError`."""
    mode = read_mode_pragma(text)
    p = _Parser(tokenize(text))
    p.program()
    return Program(
        mode=mode or Mode.SCALE,
        constants=tuple(p.constants),
        spaces=tuple(p.spaces),
        channels=tuple(p.channels),
        defs=tuple(p.defs),
        initial=par(*p.runs),
        mode_declared=mode is not None,
    )


def parse_expr(text: str):
    p = _Parser(tokenize(text))
    e = p.expr()
    if p.tok.kind != "eof":
        p.error({"end of input"})
    return e


def parse_process(text: str):
    p = _Parser(tokenize(text))
    e = p.process()
    if p.tok.kind != "eof":
        p.error({"end of input"})
    return e


def parse_type(text: str):
    p = _Parser(tokenize(text))
    t = p.type_expr()
    if p.tok.kind != "eof":
        p.error({"end of input"})
    return t
