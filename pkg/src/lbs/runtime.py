"""Spatial configurations and the reduction machinery.

A run-time state is a canonical configuration: a channel environment plus a
list of located entities ``{X(v)}_(p,s)``. One step picks an enabled event,
rewrites the participating entities (``apply_event``), hoists restrictions
and distributes locations (``normalize``), evaluates arguments and subscripts
(``place``) and commits only if the result is space consistent.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .evaluation import EvalError, eval_expr, eval_in_env, is_point, make_op_table
from .geometry import EPS, ORIGIN, PlacedShape, Space, Sphere
from .scheduler import DEFAULT_LAMBDA_MOV, Event, EventSet, NoEvent, movement_propensity, select_event
from .syntax import (
    Ch,
    Delay,
    EntityDef,
    Ident,
    Input,
    Instance,
    Mode,
    Move,
    Nil,
    Output,
    Par,
    Process,
    Program,
    Restrict,
    RestrictedChoice,
    SpaceExpr,
    SpaceRef,
    contains_this,
    free_idents,
    rename_restrictions,
    substitute,
    substitute_many,
    value_to_expr,
)
from .typecheck import Diagnostic, TypeCheckError, check_program, type_of_value

DEFAULT_RETRIES = 16


class ProgramError(Exception):
    """The program is not well formed or its static parts do not evaluate."""

    def __init__(self, diagnostics: list):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(f"[{d.rule}] {d.message}" for d in self.diagnostics))


class EventRejected(Exception):
    """A candidate step cannot produce a configuration (stuck expression)."""


class InitialConfigError(Exception):
    """The initial configuration is not space consistent."""

    def __init__(self, message: str, violation: "Violation | None" = None):
        self.violation = violation
        super().__init__(message)


# --------------------------------------------------------------------------
# Static model: the program with constants folded and geometry evaluated


@dataclass(frozen=True)
class ChannelInfo:
    rate: float
    radius: float
    payload: object  # TypeExpr

    @property
    def type(self) -> Ch:
        return Ch(self.payload)


@dataclass(frozen=True)
class EntityInfo:
    name: str
    params: tuple  # parameter names
    param_type: object
    body: RestrictedChoice
    space: Space | None  # None is the unbounded world
    step: float
    shape: Sphere
    max_size: float = math.inf


@dataclass(frozen=True)
class Instantiated:
    """A definition body with its parameters replaced by an argument value."""

    restrictions: tuple  # of ChannelDecl
    branches: tuple  # of Branch
    local: frozenset  # names bound by the restrictions
    delay_rates: tuple  # per branch: a constant rate, or None
    n_mov: int


@dataclass
class Model:
    program: Program
    mode: Mode
    entities: dict  # name -> EntityInfo
    channels: dict  # name -> ChannelInfo, the initial environment
    spaces: dict  # name -> Space
    initial: Process
    glue_contact: float
    ops: dict
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_program(cls, program: Program, mode: Mode | None = None, glue_contact: float | None = None) -> "Model":
        mode = mode or program.mode
        result = check_program(program, mode)
        if not result.ok:
            raise ProgramError(result.diagnostics)
        try:
            model = _build(program, mode, 2.0 if glue_contact is None else glue_contact)
            if glue_contact is None:
                # glue keeps barycentres at twice the radius when all entities
                # are spheres of one radius
                radii = {e.shape.radius for e in model.entities.values()}
                if len(radii) == 1 and 2.0 * next(iter(radii)) != 2.0:
                    model = _build(program, mode, 2.0 * next(iter(radii)))
            return model
        except (EvalError, geometry.GeometryError, ValueError) as exc:
            raise ProgramError([Diagnostic("Ty.defs", str(exc))]) from None

    def instantiate(self, name: str, arg) -> Instantiated:
        key = (name, arg)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = _instantiate(self.entities[name], arg, self.ops)
        return hit

    def this_value(self, pos, scale: float):
        return (pos, scale) if self.mode is Mode.SCALE else pos

    def placed(self, e: "LocatedEntity") -> PlacedShape:
        return PlacedShape(self.entities[e.name].shape, e.pos, e.scale)

    def radius(self, e: "LocatedEntity") -> float:
        return self.entities[e.name].shape.radius * e.scale


def _build(program: Program, mode: Mode, glue_contact: float) -> Model:
    ops = make_op_table(glue_contact)
    values = {}
    for name, e in program.constants:
        values[name] = eval_expr(substitute_many(e, _const_map(values)), ops)
    cmap = _const_map(values)

    def ev(e, what):
        v = eval_expr(substitute_many(e, cmap), ops)
        if not isinstance(v, float) or not math.isfinite(v):
            raise ValueError(f"{what} must be a finite real, got {v!r}")
        return v

    def space_of(s: SpaceExpr) -> Space:
        dims = [ev(d, "space dimension") for d in s.shape.dims]
        anchor = eval_expr(substitute_many(s.anchor, cmap), ops)
        shape = Sphere(*dims) if s.shape.kind == "sphere" else geometry.Cuboid(*dims)
        return Space(shape, anchor)

    channels = {}
    for d in program.channels:
        rate, radius = ev(d.rate, f"rate of {d.name}"), ev(d.radius, f"radius of {d.name}")
        if rate < 0 or radius < 0:
            raise ValueError(f"channel {d.name} needs a non-negative rate and radius")
        channels[d.name] = ChannelInfo(rate, radius, d.payload)

    spaces = {name: space_of(s) for name, s in program.spaces}

    entities = {}
    for d in program.defs:
        match d.space:
            case SpaceRef("world"):
                space = None
            case SpaceRef(name):
                space = spaces[name]
            case SpaceExpr():
                space = space_of(d.space)
        step = ev(d.step, f"step of {d.name}")
        if step < 0:
            raise ValueError(f"step of {d.name} must be >= 0")
        max_size = math.inf if d.max_size is None else ev(d.max_size, f"max-size of {d.name}")
        if not max_size > 0:
            raise ValueError(f"max-size of {d.name} must be > 0")
        shape = Sphere(*(ev(x, "shape dimension") for x in d.shape.dims))
        body = _fold_constants(d, cmap)
        entities[d.name] = EntityInfo(d.name, d.param_names, d.param_type, body, space, step, shape, max_size)

    initial = substitute_many(program.initial, cmap)
    return Model(program, mode, entities, channels, spaces, initial, glue_contact, ops)


def _const_map(values: dict) -> dict:
    return {k: value_to_expr(v) for k, v in values.items()}


def _fold_constants(d: EntityDef, cmap: dict) -> RestrictedChoice:
    """Substitute constants into a body; parameters shadow constants."""
    m = {k: v for k, v in cmap.items() if k not in d.param_names}
    if not m:
        return d.body
    taken = set()
    for v in m.values():
        taken |= free_idents(v)
    clash = sorted(taken & set(d.param_names))
    if clash:
        raise ValueError(f"parameters {clash} of {d.name} clash with channel names used by constants")
    return substitute_many(d.body, m)


def _instantiate(info: EntityInfo, arg, ops: dict) -> Instantiated:
    params = info.params
    if len(params) == 1:
        m = {params[0]: value_to_expr(arg)}
    elif len(params) > 1:
        m = {p: value_to_expr(v) for p, v in zip(params, arg)}
    else:
        m = {}
    body = substitute_many(info.body, m)
    rates = []
    n_mov = 0
    for b in body.branches:
        rate = None
        match b.prefix:
            case Delay(r) if not contains_this(r):
                try:
                    rate = eval_expr(r, ops)
                except EvalError:
                    rate = None
            case Move():
                n_mov += 1
        rates.append(rate)
    return Instantiated(
        body.restrictions, body.branches, frozenset(d.name for d in body.restrictions), tuple(rates), n_mov
    )


# --------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True)
class LocatedEntity:
    uid: int
    name: str
    arg: object
    pos: tuple
    scale: float = 1.0


@dataclass
class ChannelEnv:
    """Channel name -> rate, radius and payload type, plus the fresh-name counter."""

    channels: dict
    counter: int = 0

    def __contains__(self, name):
        return name in self.channels

    def __getitem__(self, name) -> ChannelInfo:
        return self.channels[name]

    def __len__(self):
        return len(self.channels)

    def types(self) -> dict:
        return {k: v.type for k, v in self.channels.items()}


@dataclass
class CanonicalConfig:
    env: ChannelEnv
    entities: list
    time: float = 0.0
    next_uid: int = 0
    steps: int = 0

    def entity(self, uid: int) -> LocatedEntity:
        for e in self.entities:
            if e.uid == uid:
                return e
        raise KeyError(uid)

    def counts(self) -> dict:
        out = defaultdict(int)
        for e in self.entities:
            out[e.name] += 1
        return dict(sorted(out.items()))


class FreshNames:
    """Issues ``name#n`` channel names from a counter that is only committed
    once a step succeeds."""

    def __init__(self, env: ChannelEnv):
        self.taken = env.channels
        self.counter = env.counter

    def __call__(self, name: str) -> str:
        base = name.split("#")[0].split("'")[0]
        while True:
            self.counter += 1
            new = f"{base}#{self.counter}"
            if new not in self.taken:
                return new


class Draws:
    """Random translations for one candidate step; remembers whether any
    randomness was actually used so deterministic outcomes are not retried."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.random = False

    def rand(self, length: float):
        if not (length >= 0 and math.isfinite(length)):
            raise EventRejected(f"random translation length must be finite and >= 0, got {length!r}")
        if length > 0:
            self.random = True
        return geometry.rand_point(length, self.rng)


@dataclass(frozen=True)
class Located:
    """``{P}_(p,s)``; ``origin`` is the uid of the entity it evolved from."""

    proc: Process
    pos: tuple
    scale: float = 1.0
    origin: int | None = None


@dataclass
class PendingConfig:
    removed: tuple  # uids of the redex entities
    hoisted: list  # (name, ChannelInfo) already extruded
    parts: list  # of Located


@dataclass
class PreCanonical:
    hoisted: list  # (name, ChannelInfo)
    instances: list  # of (Instance, pos, scale, origin)


@dataclass(frozen=True)
class Violation:
    kind: str  # "containment" | "max_size" | "overlap"
    uids: tuple
    message: str


# --------------------------------------------------------------------------
# Events


def _frame_eval(e, model: Model, pos, scale, what: str):
    try:
        return eval_in_env(e, {}, model.this_value(pos, scale), model.ops)
    except EvalError as exc:
        raise EventRejected(f"{what}: {exc}") from None


def _eval_rate(e, model: Model, pos, scale, what: str) -> float:
    v = _frame_eval(e, model, pos, scale, what)
    if not isinstance(v, float) or not (v >= 0 and math.isfinite(v)):
        raise EventRejected(f"{what} must be a finite non-negative real, got {v!r}")
    return v


def enabled_events(state: CanonicalConfig, model: Model, lambda_mov: float = DEFAULT_LAMBDA_MOV) -> EventSet:
    """Every Delay, Com and Move candidate of ``state`` with its propensity."""
    mov_rate = movement_propensity(lambda_mov)
    events = []
    senders = defaultdict(list)
    receivers = defaultdict(list)
    for i, e in enumerate(state.entities):
        inst = model.instantiate(e.name, e.arg)
        for k, b in enumerate(inst.branches):
            match b.prefix:
                case Delay(rate):
                    r = inst.delay_rates[k]
                    if r is None:
                        try:
                            r = _eval_rate(rate, model, e.pos, e.scale, "delay rate")
                        except EventRejected:
                            continue
                    if r > 0:
                        events.append(Event("delay", r, e.uid, k))
                case Move():
                    if mov_rate > 0:
                        events.append(Event("move", mov_rate / inst.n_mov, e.uid, k))
                case Output(a, _) if a not in inst.local:
                    senders[a].append((i, k))
                case Input(a, _) if a not in inst.local:
                    receivers[a].append((i, k))
    if not senders:
        return EventSet(events)

    pos = np.array([e.pos for e in state.entities], dtype=float)
    rad = np.array([model.radius(e) for e in state.entities], dtype=float)
    for a, outs in senders.items():
        ins = receivers.get(a)
        info = state.env.channels.get(a)
        if not ins or info is None or info.rate <= 0:
            continue
        si = np.array([i for i, _ in outs])
        ri = np.array([j for j, _ in ins])
        gap = np.linalg.norm(pos[si][:, None, :] - pos[ri][None, :, :], axis=-1) - rad[si][:, None] - rad[ri][None, :]
        ok = (gap <= info.radius + EPS) & (si[:, None] != ri[None, :])
        for s, r in zip(*np.nonzero(ok)):
            (i, k), (j, l) = outs[s], ins[r]
            x, y = state.entities[i], state.entities[j]
            events.append(Event("com", info.rate, x.uid, k, y.uid, l, a))
    return EventSet(events)


def _open(e: LocatedEntity, model: Model, fresh, pos, scale, branch: int) -> tuple:
    """Rename the entity's restrictions apart, evaluate them at ``(pos, scale)``
    and return them with the chosen branch."""
    inst = model.instantiate(e.name, e.arg)
    decls, (chosen,) = rename_restrictions(RestrictedChoice(inst.restrictions, inst.branches), fresh, branch)
    hoisted = [
        (
            d.name,
            ChannelInfo(
                _eval_rate(d.rate, model, pos, scale, f"rate of {d.name}"),
                _eval_rate(d.radius, model, pos, scale, f"radius of {d.name}"),
                d.payload,
            ),
        )
        for d in decls
    ]
    return hoisted, chosen


def apply_event(state: CanonicalConfig, event: Event, draws: Draws, model: Model, fresh: FreshNames) -> PendingConfig:
    """Rewrite the redex of ``event``; the rest of the configuration is untouched."""
    x = state.entity(event.actor)
    match event.kind:
        case "delay":
            hoisted, b = _open(x, model, fresh, x.pos, x.scale, event.branch)
            return PendingConfig((x.uid,), hoisted, [Located(b.cont, x.pos, x.scale, x.uid)])
        case "move":
            step = model.entities[x.name].step
            length = step * x.scale if model.mode is Mode.SCALE else step
            pos = geometry.translate(x.pos, draws.rand(length))
            hoisted, b = _open(x, model, fresh, pos, x.scale, event.branch)
            return PendingConfig((x.uid,), hoisted, [Located(b.cont, pos, x.scale, x.uid)])
        case "com":
            y = state.entity(event.partner)
            hx, out = _open(x, model, fresh, x.pos, x.scale, event.branch)
            hy, inp = _open(y, model, fresh, y.pos, y.scale, event.partner_branch)
            if not (isinstance(out.prefix, Output) and isinstance(inp.prefix, Input)):
                raise EventRejected("communication branches do not match")
            v = _frame_eval(out.prefix.payload, model, x.pos, x.scale, "payload")
            q = inp.cont if inp.prefix.binder == "_" else substitute(inp.cont, inp.prefix.binder, v)
            parts = [Located(out.cont, x.pos, x.scale, x.uid), Located(q, y.pos, y.scale, y.uid)]
            return PendingConfig((x.uid, y.uid), hx + hy, parts)
    raise ValueError(f"unknown event kind {event.kind!r}")


def normalize(pending: PendingConfig, model: Model, fresh: FreshNames) -> PreCanonical:
    """Distribute locations over ``|`` and hoist every restriction outermost,
    renaming it fresh and evaluating its rate and radius at its location."""
    hoisted = list(pending.hoisted)
    instances = []

    def walk(p, pos, scale, origin):
        match p:
            case Nil():
                pass
            case Par(l, r):
                walk(l, pos, scale, origin)
                walk(r, pos, scale, origin)
            case Restrict(d, body):
                info = ChannelInfo(
                    _eval_rate(d.rate, model, pos, scale, f"rate of {d.name}"),
                    _eval_rate(d.radius, model, pos, scale, f"radius of {d.name}"),
                    d.payload,
                )
                new = fresh(d.name)
                hoisted.append((new, info))
                walk(substitute_many(body, {d.name: Ident(new)}), pos, scale, origin)
            case Instance():
                instances.append((p, pos, scale, origin))
            case _:
                raise TypeError(f"not a process: {p!r}")

    for part in pending.parts:
        walk(part.proc, part.pos, part.scale, part.origin)
    return PreCanonical(hoisted, instances)


def _default_loc(mode: Mode, pos, scale):
    if mode is Mode.BASE:
        return pos
    if mode is Mode.RANDOM:
        return (pos, 0.0)
    return ((pos, 0.0), 1.0)


def place(pre: PreCanonical, draws: Draws, model: Model) -> list:
    """Evaluate arguments and subscripts: ``[(name, arg, pos, scale, origin)]``."""
    out = []
    for inst, pos, scale, origin in pre.instances:
        if inst.entity not in model.entities:
            raise EventRejected(f"unknown entity {inst.entity!r}")
        arg = _frame_eval(inst.arg, model, pos, scale, f"argument of {inst.entity}")
        loc = (
            _default_loc(model.mode, pos, scale)
            if inst.loc is None
            else _frame_eval(inst.loc, model, pos, scale, f"subscript of {inst.entity}")
        )
        match model.mode:
            case Mode.BASE:
                new_pos, new_scale = loc, scale
            case Mode.RANDOM:
                p, c = _split(loc, 2)
                new_pos, new_scale = geometry.translate(p, draws.rand(c)), scale
            case Mode.SCALE:
                pc, cs = _split(loc, 2)
                p, cr = _split(pc, 2)
                if not (isinstance(cs, float) and cs > 0 and math.isfinite(cs)):
                    raise EventRejected(f"scaling factor must be a positive real, got {cs!r}")
                new_pos, new_scale = geometry.translate(p, draws.rand(cr * scale)), scale * cs
        if not is_point(new_pos) or not all(math.isfinite(c) for c in new_pos):
            raise EventRejected(f"location of {inst.entity} is not a finite point: {new_pos!r}")
        out.append((inst.entity, arg, new_pos, new_scale, origin))
    return out


def _split(v, n):
    if not isinstance(v, tuple) or len(v) != n:
        raise EventRejected(f"expected a {n}-tuple, got {v!r}")
    return v


# --------------------------------------------------------------------------
# Space consistency


def _entity_violation(e: LocatedEntity, model: Model) -> Violation | None:
    info = model.entities[e.name]
    if e.scale > info.max_size + EPS:
        return Violation("max_size", (e.uid,), f"{e.name} scale {e.scale} exceeds max-size {info.max_size}")
    if not geometry.contains(info.space, model.placed(e)):
        return Violation("containment", (e.uid,), f"{e.name} at {e.pos} leaves its confinement space")
    return None


def _overlap_violation(new: list, others: list, model: Model) -> Violation | None:
    """First overlapping pair among ``new x (others + new)``."""
    if not new:
        return None
    everyone = others + new
    pa = np.array([e.pos for e in new], dtype=float)
    ra = np.array([model.radius(e) for e in new], dtype=float)
    pb = np.array([e.pos for e in everyone], dtype=float)
    rb = np.array([model.radius(e) for e in everyone], dtype=float)
    d = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=-1)
    bad = d < ra[:, None] + rb[None, :] - EPS
    # a new entity is compared with earlier new ones only, and never with itself
    n_others = len(others)
    for i in range(len(new)):
        bad[i, n_others + i :] = False
    hits = np.argwhere(bad)
    for i, j in hits:
        a, b = new[i], everyone[j]
        if geometry.overlaps(model.placed(a), model.placed(b)):
            return Violation("overlap", (b.uid, a.uid), f"{b.name} and {a.name} overlap")
    return None


def is_space_consistent(entities: list, model: Model) -> tuple:
    """``(ok, first violation or None)`` for containment, max-size and disjointness."""
    for e in entities:
        v = _entity_violation(e, model)
        if v is not None:
            return False, v
    v = _overlap_violation(list(entities), [], model)
    return (v is None), v


def _check_products(survivors: list, products: list, model: Model) -> Violation | None:
    for e in products:
        v = _entity_violation(e, model)
        if v is not None:
            return v
    return _overlap_violation(products, survivors, model)


def check_configuration(state: CanonicalConfig, model: Model) -> list:
    """Run-time typing: every entity is defined and its argument has the
    parameter type under the current channel environment."""
    diags = []
    types = state.env.types()
    for e in state.entities:
        info = model.entities.get(e.name)
        if info is None:
            diags.append(Diagnostic("Ty.inst", f"entity {e.name!r} is not defined"))
            continue
        try:
            t = type_of_value(e.arg, types)
        except TypeCheckError as exc:
            diags.append(exc.diagnostic if hasattr(exc, "diagnostic") else Diagnostic("Ty.id", str(exc)))
            continue
        if t != info.param_type:
            diags.append(Diagnostic("Ty.inst", f"argument {e.arg!r} of {e.name} does not have the parameter type"))
        if not is_point(e.pos) or not all(math.isfinite(c) for c in e.pos):
            diags.append(Diagnostic("Ty.inst", f"{e.name} has a malformed position {e.pos!r}"))
        if not (e.scale > 0 and math.isfinite(e.scale)):
            diags.append(Diagnostic("Ty.inst", f"{e.name} has a malformed scale {e.scale!r}"))
        if model.mode is not Mode.SCALE and e.scale != 1.0:
            diags.append(Diagnostic("Ty.inst", f"{e.name} is scaled outside the scaling semantics"))
    return diags


# --------------------------------------------------------------------------
# Steps


@dataclass(frozen=True)
class StepResult:
    event: Event
    dt: float
    time: float
    consumed: tuple  # of LocatedEntity
    produced: tuple  # of LocatedEntity
    new_channels: tuple  # of (name, ChannelInfo)
    attempts: int = 1
    excluded: int = 0  # events found blocked at this instant before this one
    rejections: int = 0  # candidate outcomes that failed SC or evaluation


@dataclass(frozen=True)
class Blocked:
    """No enabled event can yield a space-consistent configuration."""

    excluded: int
    rejections: int = 0


@dataclass(frozen=True)
class NoEvents:
    """The event set is empty (total propensity zero)."""


@dataclass(frozen=True)
class Horizon:
    """The next event would happen after the time limit; nothing was committed."""

    time: float
    rejections: int = 0


def _try(state, event, rng, model):
    """One attempt at ``event``: ``(commit data or None, used randomness, violation)``."""
    draws = Draws(rng)
    fresh = FreshNames(state.env)
    try:
        pending = apply_event(state, event, draws, model, fresh)
        pre = normalize(pending, model, fresh)
        placed = place(pre, draws, model)
    except (EventRejected, geometry.GeometryError) as exc:
        return None, draws.random, str(exc)
    removed = set(pending.removed)
    survivors = [e for e in state.entities if e.uid not in removed]
    products = [LocatedEntity(-1 - k, *p[:4]) for k, p in enumerate(placed)]
    try:
        v = _check_products(survivors, products, model)
    except geometry.GeometryError as exc:
        return None, draws.random, str(exc)
    if v is not None:
        return None, draws.random, v
    return (pending, pre, placed, fresh), draws.random, None


def _commit(state: CanonicalConfig, event: Event, dt: float, data) -> tuple:
    pending, pre, placed, fresh = data
    removed = pending.removed
    by_origin = defaultdict(list)
    for k, p in enumerate(placed):
        by_origin[p[4]].append(k)
    # a participant that evolves into exactly one entity keeps its uid and slot
    uids = [None] * len(placed)
    for u in removed:
        ks = by_origin.get(u, [])
        if len(ks) == 1:
            uids[ks[0]] = u
    for k in range(len(placed)):
        if uids[k] is None:
            uids[k] = state.next_uid
            state.next_uid += 1
    produced = [LocatedEntity(uids[k], *placed[k][:4]) for k in range(len(placed))]
    by_uid = {e.uid: e for e in produced}
    consumed = tuple(state.entity(u) for u in removed)
    entities = []
    for e in state.entities:
        if e.uid not in removed:
            entities.append(e)
        elif e.uid in by_uid:
            entities.append(by_uid.pop(e.uid))
    entities.extend(e for e in produced if e.uid in by_uid)
    state.entities = entities
    for name, info in pre.hoisted:
        state.env.channels[name] = info
    state.env.counter = fresh.counter
    state.time += dt
    state.steps += 1
    return consumed, tuple(produced), tuple(pre.hoisted)


def step(
    state: CanonicalConfig,
    rng: np.random.Generator,
    model: Model,
    *,
    lambda_mov: float = DEFAULT_LAMBDA_MOV,
    retries: int = DEFAULT_RETRIES,
    max_time: float = math.inf,
):
    """Advance ``state`` in place by one committed event.

    Returns a :class:`StepResult`, or :class:`Blocked`, :class:`NoEvents` or
    :class:`Horizon` when nothing is committed. Events whose outcome is
    random are retried up to ``retries`` times; an event that cannot yield a
    space-consistent configuration is excluded and the choice is redrawn at
    the same instant among the remaining events.
    """
    events = enabled_events(state, model, lambda_mov)
    if not len(events):
        return NoEvents()
    excluded = 0
    rejections = 0
    while len(events):
        try:
            event, dt = select_event(events, rng)
        except NoEvent:
            break
        if state.time + dt > max_time:
            return Horizon(max_time, rejections)
        attempts = 0
        while True:
            attempts += 1
            data, random, _ = _try(state, event, rng, model)
            if data is not None:
                consumed, produced, channels = _commit(state, event, dt, data)
                return StepResult(event, dt, state.time, consumed, produced, channels, attempts, excluded, rejections)
            rejections += 1
            if not random or attempts >= retries:
                break
        events = events.without(event)
        excluded += 1
    return Blocked(excluded, rejections)


# --------------------------------------------------------------------------
# Initial configurations


def initial_configuration(
    model: Model,
    rng: np.random.Generator,
    *,
    scatter: dict | None = None,
    retries: int = DEFAULT_RETRIES,
    scatter_attempts: int = 10_000,
) -> CanonicalConfig:
    """Place the ``run`` process at the origin frame (scale 1).

    ``scatter`` maps a space name to a count: the instances confined to that
    space serve as templates and are replicated, cycling through them, at
    uniformly random SC positions inside it.
    """
    env = ChannelEnv(dict(model.channels))
    last = None
    for _ in range(max(1, retries)):
        draws = Draws(rng)
        fresh = FreshNames(env)
        try:
            pre = normalize(PendingConfig((), [], [Located(model.initial, ORIGIN, 1.0)]), model, fresh)
            placed = place(pre, draws, model)
        except EventRejected as exc:
            raise InitialConfigError(f"initial configuration does not evaluate: {exc}") from None
        entities = [LocatedEntity(k, *p[:4]) for k, p in enumerate(placed)]
        if scatter:
            entities = _scatter(entities, model, scatter, rng, scatter_attempts)
        ok, v = is_space_consistent(entities, model)
        if ok:
            channels = dict(env.channels)
            channels.update(pre.hoisted)
            return CanonicalConfig(ChannelEnv(channels, fresh.counter), entities, 0.0, len(entities))
        last = v
        if not draws.random:
            break
    raise InitialConfigError(f"initial configuration not space consistent: {last.message}", last)


def _scatter(entities: list, model: Model, scatter: dict, rng, attempts: int) -> list:
    keep = list(entities)
    for space_name, n in scatter.items():
        space = model.spaces.get(space_name)
        if space is None:
            raise InitialConfigError(f"unknown space {space_name!r}")
        templates = [e for e in keep if model.entities[e.name].space == space]
        if not templates:
            raise InitialConfigError(f"no run instance is confined to {space_name!r}")
        keep = [e for e in keep if model.entities[e.name].space != space]
        for k in range(n):
            t = templates[k % len(templates)]
            r = model.radius(t)
            for _ in range(attempts):
                try:
                    pos = geometry.sample_in_space(space, r, rng)
                except geometry.GeometryError as exc:
                    raise InitialConfigError(f"{t.name} does not fit in {space_name}: {exc}") from None
                cand = LocatedEntity(len(keep), t.name, t.arg, pos, t.scale)
                if _overlap_violation([cand], keep, model) is None:
                    keep.append(cand)
                    break
            else:
                raise InitialConfigError(f"could not scatter {n} instances in {space_name!r}")
    return [LocatedEntity(k, e.name, e.arg, e.pos, e.scale) for k, e in enumerate(keep)]


# --------------------------------------------------------------------------


class Simulator:
    """A single run: owns the rng and the mutable configuration."""

    def __init__(
        self,
        model: Model,
        *,
        seed=None,
        rng: np.random.Generator | None = None,
        state: CanonicalConfig | None = None,
        lambda_mov: float = DEFAULT_LAMBDA_MOV,
        retries: int = DEFAULT_RETRIES,
        scatter: dict | None = None,
    ):
        self.model = model
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.lambda_mov = movement_propensity(lambda_mov)
        self.retries = retries
        self.state = state if state is not None else initial_configuration(model, self.rng, scatter=scatter, retries=retries)
        self.halt = None
        self.rejections = 0

    def step(self, max_time: float = math.inf):
        r = step(self.state, self.rng, self.model, lambda_mov=self.lambda_mov, retries=self.retries, max_time=max_time)
        self.rejections += getattr(r, "rejections", 0)
        return r

    def run(self, max_steps: int | None = None, max_time: float = math.inf):
        """Yield committed steps until a limit is hit; the reason is left in
        ``self.halt`` ("max_steps", "max_time", "blocked" or "no_events")."""
        self.halt = None
        n = 0
        while max_steps is None or n < max_steps:
            r = self.step(max_time)
            match r:
                case StepResult():
                    n += 1
                    yield r
                case Horizon():
                    self.state.time = max_time
                    self.halt = "max_time"
                    return
                case Blocked():
                    self.halt = "blocked"
                    return
                case NoEvents():
                    self.halt = "no_events"
                    return
        self.halt = "max_steps"


def load(source: str, *, mode: Mode | None = None, glue_contact: float | None = None) -> Model:
    """Parse, check and build a model from program text."""
    from .parser import parse_program

    return Model.from_program(parse_program(source), mode, glue_contact)


__all__ = [
    "Blocked",
    "CanonicalConfig",
    "ChannelEnv",
    "ChannelInfo",
    "EntityInfo",
    "EventRejected",
    "Horizon",
    "InitialConfigError",
    "LocatedEntity",
    "Model",
    "NoEvents",
    "PendingConfig",
    "PreCanonical",
    "ProgramError",
    "Simulator",
    "StepResult",
    "Violation",
    "apply_event",
    "check_configuration",
    "enabled_events",
    "initial_configuration",
    "is_space_consistent",
    "load",
    "normalize",
    "place",
    "step",
]
