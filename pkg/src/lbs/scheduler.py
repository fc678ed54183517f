"""Event selection by Gillespie's direct method.

Reactions (delays and communications) race with their stochastic rates.
Movement branches have no rate of their own in the calculus; they enter the
race as pseudo-reactions with a configurable rate ``lambda_mov`` per branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

REACTION = "reaction"
MOVEMENT = "movement"

DEFAULT_LAMBDA_MOV = 1.0


class NoEvent(Exception):
    """Raised when the total propensity is zero."""


@dataclass(frozen=True)
class Event:
    """One enabled transition.

    ``actor`` is the uid of the (sending) entity and ``branch`` the index of
    the choice branch it takes; communications also name the receiving
    ``partner``, its ``partner_branch`` and the ``channel``.
    """

    kind: str  # "delay" | "com" | "move"
    propensity: float
    actor: int
    branch: int
    partner: int | None = None
    partner_branch: int | None = None
    channel: str | None = None

    @property
    def category(self) -> str:
        return MOVEMENT if self.kind == "move" else REACTION

    @property
    def key(self) -> tuple:
        """Identity of the event irrespective of its rate."""
        return (self.kind, self.actor, self.branch, self.partner, self.partner_branch, self.channel)


class EventSet:
    def __init__(self, events: Sequence[Event] = ()):
        for e in events:
            if not (e.propensity >= 0 and math.isfinite(e.propensity)):
                raise ValueError(f"invalid propensity {e.propensity} for {e}")
        self.events = [e for e in events if e.propensity > 0]
        self.propensities = np.array([e.propensity for e in self.events], dtype=float)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @property
    def total(self) -> float:
        return float(self.propensities.sum()) if self.events else 0.0

    def without(self, event: Event) -> "EventSet":
        out = EventSet.__new__(EventSet)
        keep = [i for i, e in enumerate(self.events) if e != event]
        out.events = [self.events[i] for i in keep]
        out.propensities = self.propensities[keep]
        return out

    def reactions(self) -> list:
        return [e for e in self.events if e.category == REACTION]


def select_event(events: EventSet, rng: np.random.Generator) -> tuple[Event, float]:
    """Draw ``(event, dt)``: ``dt ~ Exp(a0)`` and the event with probability
    proportional to its propensity."""
    a0 = events.total
    if not a0 > 0:
        raise NoEvent("total propensity is zero")
    dt = rng.exponential(1.0 / a0)
    u = rng.random() * a0
    cum = np.cumsum(events.propensities)
    idx = int(np.searchsorted(cum, u, side="right"))
    idx = min(idx, len(events.events) - 1)
    return events.events[idx], float(dt)


def movement_propensity(lambda_mov: float = DEFAULT_LAMBDA_MOV) -> float:
    """Rate of one movement branch. The jump length is the entity's step."""
    if lambda_mov < 0 or not math.isfinite(lambda_mov):
        raise ValueError("lambda_mov must be finite and >= 0")
    return lambda_mov
