"""Line-delimited JSON traces of a simulation run.

Each output line is one record with a ``record`` discriminator (``event``,
``population``, ``snapshot`` or ``summary``); the shipped JSON schema
describes all four.
"""
from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

from .syntax import Chan, format_type

SCHEMA_NAME = "trace.schema.json"


def load_schema() -> dict:
    text = resources.files("lbs.schemas").joinpath(SCHEMA_NAME).read_text(encoding="utf-8")
    return json.loads(text)


def value_to_json(v):
    """Reals stay numbers, channel names become strings, tuples become lists."""
    if isinstance(v, float):
        return v
    if isinstance(v, Chan):
        return v.name
    if isinstance(v, tuple):
        return [value_to_json(x) for x in v]
    raise TypeError(f"not a value: {v!r}")


def entity_record(e) -> dict:
    return {
        "uid": e.uid,
        "name": e.name,
        "args": value_to_json(e.arg),
        "position": list(e.pos),
        "scale": e.scale,
    }


def event_record(step_no: int, r) -> dict:
    ev = r.event
    return {
        "record": "event",
        "step": step_no,
        "t": r.time,
        "dt": r.dt,
        "kind": ev.kind,
        "channel": ev.channel,
        "rate": ev.propensity,
        "participants": [entity_record(e) for e in r.consumed],
        "products": [entity_record(e) for e in r.produced],
        "new_channels": [
            {"name": n, "rate": c.rate, "radius": c.radius, "type": format_type(c.type)} for n, c in r.new_channels
        ],
        "attempts": r.attempts,
        "excluded": r.excluded,
    }


def population_record(t: float, counts: dict) -> dict:
    return {"record": "population", "t": t, "counts": dict(sorted(counts.items()))}


def snapshot_record(t: float, entities) -> dict:
    return {"record": "snapshot", "t": t, "entities": [entity_record(e) for e in entities]}


def dumps(record: dict) -> str:
    return json.dumps(record, allow_nan=False, separators=(",", ":"))


class TraceWriter:
    """Writes ``events.jsonl``, ``populations.jsonl``, optionally
    ``snapshots.jsonl``, and ``summary.json`` into a directory."""

    def __init__(self, out_dir, snapshot_every: float | None = None):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.events = open(self.dir / "events.jsonl", "w", encoding="utf-8", newline="\n")
        self.populations = open(self.dir / "populations.jsonl", "w", encoding="utf-8", newline="\n")
        self.snapshot_every = snapshot_every
        self.snapshots = None
        self.next_snapshot = 0.0
        if snapshot_every is not None:
            if not (snapshot_every > 0 and math.isfinite(snapshot_every)):
                raise ValueError("snapshot interval must be a positive real")
            self.snapshots = open(self.dir / "snapshots.jsonl", "w", encoding="utf-8", newline="\n")

    def start(self, state):
        self.populations.write(dumps(population_record(state.time, state.counts())) + "\n")

    def snapshot_until(self, t: float, entities, inclusive: bool = False):
        """Emit the grid snapshots up to ``t`` for a configuration that held
        over that stretch of time."""
        if self.snapshots is None:
            return
        while self.next_snapshot < t or (inclusive and self.next_snapshot <= t):
            self.snapshots.write(dumps(snapshot_record(self.next_snapshot, entities)) + "\n")
            self.next_snapshot += self.snapshot_every

    def step(self, step_no: int, r, state, previous_entities):
        self.snapshot_until(r.time, previous_entities)
        self.events.write(dumps(event_record(step_no, r)) + "\n")
        self.populations.write(dumps(population_record(r.time, state.counts())) + "\n")

    def finish(self, state, summary: dict):
        self.snapshot_until(state.time, state.entities, inclusive=True)
        with open(self.dir / "summary.json", "w", encoding="utf-8", newline="\n") as f:
            f.write(json.dumps({"record": "summary", **summary}, allow_nan=False, indent=2, sort_keys=True) + "\n")
        self.close()

    def close(self):
        for f in (self.events, self.populations, self.snapshots):
            if f is not None and not f.closed:
                f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_jsonl(path) -> list:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
