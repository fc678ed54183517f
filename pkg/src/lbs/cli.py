"""Command-line driver: ``lbs check FILE`` and ``lbs run FILE``.

Exit codes: 0 success, 1 static or configuration error, 2 initial
configuration not space consistent, 3 I/O error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .parser import ParseError, parse_program
from .runtime import InitialConfigError, Model, ProgramError, Simulator
from .scheduler import DEFAULT_LAMBDA_MOV
from .syntax import Mode, Span
from .trace import TraceWriter
from .typecheck import Diagnostic, check_program, format_diagnostics

EXIT_OK, EXIT_STATIC, EXIT_INIT, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    path: str
    out: str = "lbs-out"
    mode: Mode | None = None
    seed: int = 0
    max_time: float = math.inf
    max_steps: float = 10_000
    lambda_mov: float = DEFAULT_LAMBDA_MOV
    snapshot_every: float | None = None
    scatter: dict = field(default_factory=dict)
    replicates: int = 1
    glue_contact: float | None = None

    def validate(self):
        if math.isinf(self.max_time) and math.isinf(self.max_steps):
            raise UsageError("max-time and max-steps cannot both be infinite")
        if self.max_time < 0 or self.max_steps < 0:
            raise UsageError("limits must be non-negative")
        if not (self.lambda_mov >= 0 and math.isfinite(self.lambda_mov)):
            raise UsageError("lambda-mov must be a finite non-negative real")
        if self.seed < 0:
            raise UsageError("seed must be a non-negative integer")
        if self.replicates < 1:
            raise UsageError("replicates must be >= 1")
        if self.glue_contact is not None and not (self.glue_contact > 0 and math.isfinite(self.glue_contact)):
            raise UsageError("glue-contact must be a positive real")
        if self.snapshot_every is not None and not (self.snapshot_every > 0 and math.isfinite(self.snapshot_every)):
            raise UsageError("snapshot-every must be a positive real")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_STATIC, f"{self.prog}: error: {message}\n")


def _scatter(text: str):
    name, sep, n = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError("expected SPACE=N")
    try:
        count = int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {n!r}") from None
    if count < 0:
        raise argparse.ArgumentTypeError("count must be >= 0")
    return name, count


def _steps(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid step count {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lbs", description="Check and simulate LBS programs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="parse and type-check a program")
    c.add_argument("file")
    c.add_argument("--mode", choices=[m.value for m in Mode], help="override the #mode pragma")
    c.add_argument("--json", action="store_true", help="print diagnostics as JSON")

    r = sub.add_parser("run", help="simulate a program and write traces")
    r.add_argument("file")
    r.add_argument("--seed", type=int, default=None, help="rng seed (default: $LBS_SEED or 0)")
    r.add_argument("--max-time", type=float, default=math.inf)
    r.add_argument("--max-steps", type=_steps, default=10_000)
    r.add_argument("--lambda-mov", type=float, default=DEFAULT_LAMBDA_MOV, help="rate of each entity's movement")
    r.add_argument("--snapshot-every", type=float, default=None, help="snapshot interval in time units")
    r.add_argument("--out", default="lbs-out", help="output directory")
    r.add_argument("--mode", choices=[m.value for m in Mode], help="override the #mode pragma")
    r.add_argument("--scatter", type=_scatter, action="append", default=[], metavar="SPACE=N")
    r.add_argument("--replicates", type=int, default=1)
    r.add_argument("--glue-contact", type=float, default=None, help="distance glue keeps between barycentres")
    return p


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _parse_error(path: str, exc: ParseError) -> Diagnostic:
    msg = exc.message
    if exc.expected:
        msg += f" (expected {', '.join(sorted(exc.expected))})"
    return Diagnostic("parse", msg, Span(exc.line, exc.col))


def cmd_check(path: str, mode: Mode | None = None, as_json: bool = False) -> int:
    try:
        text = _read(path)
    except OSError as exc:
        print(f"lbs: cannot read {path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    try:
        prog = parse_program(text)
    except ParseError as exc:
        diags = [_parse_error(path, exc)]
    else:
        diags = check_program(prog, mode).diagnostics
    if diags:
        print(format_diagnostics(diags, path, as_json), file=sys.stderr)
        return EXIT_STATIC
    if as_json:
        print("[]", file=sys.stderr)
    return EXIT_OK


def run_one(text: str, cfg: RunConfig, seed, out_dir: Path, replicate: int | None = None) -> int:
    """One simulation; ``seed`` is an int or a ``SeedSequence``."""
    model = Model.from_program(parse_program(text), cfg.mode, cfg.glue_contact)
    rng = np.random.default_rng(seed)
    sim = Simulator(model, rng=rng, lambda_mov=cfg.lambda_mov, scatter=cfg.scatter or None)
    max_steps = None if math.isinf(cfg.max_steps) else int(cfg.max_steps)
    with TraceWriter(out_dir, cfg.snapshot_every) as w:
        w.start(sim.state)
        previous = list(sim.state.entities)
        n = 0
        for r in sim.run(max_steps=max_steps, max_time=cfg.max_time):
            n += 1
            w.step(n, r, sim.state, previous)
            previous = list(sim.state.entities)
        summary = {
            "cause": sim.halt,
            "steps": n,
            "t_end": sim.state.time,
            "seed": cfg.seed,
            "mode": model.mode.value,
            "lambda_mov": cfg.lambda_mov,
            "rejections": sim.rejections,
            "channels": len(sim.state.env),
            "counts": sim.state.counts(),
        }
        if replicate is not None:
            summary["replicate"] = replicate
        w.finish(sim.state, summary)
    return EXIT_OK


def _replicate_job(job):
    text, cfg, seed, out_dir, k = job
    return run_one(text, cfg, seed, out_dir, k)


def cmd_run(cfg: RunConfig) -> int:
    try:
        cfg.validate()
    except UsageError as exc:
        print(f"lbs: {exc}", file=sys.stderr)
        return EXIT_STATIC
    try:
        text = _read(cfg.path)
    except OSError as exc:
        print(f"lbs: cannot read {cfg.path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    try:
        prog = parse_program(text)
        Model.from_program(prog, cfg.mode, cfg.glue_contact)
    except ParseError as exc:
        print(format_diagnostics([_parse_error(cfg.path, exc)], cfg.path), file=sys.stderr)
        return EXIT_STATIC
    except ProgramError as exc:
        print(format_diagnostics(exc.diagnostics, cfg.path), file=sys.stderr)
        return EXIT_STATIC
    out = Path(cfg.out)
    try:
        if cfg.replicates == 1:
            return run_one(text, cfg, cfg.seed, out)
        seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.replicates)
        jobs = [(text, cfg, s, out / f"replicate-{k:03d}", k) for k, s in enumerate(seeds)]
        with ProcessPoolExecutor(max_workers=min(cfg.replicates, os.cpu_count() or 1)) as pool:
            codes = list(pool.map(_replicate_job, jobs))
        return max(codes)
    except InitialConfigError as exc:
        print(f"lbs: {exc}", file=sys.stderr)
        return EXIT_INIT
    except OSError as exc:
        print(f"lbs: cannot write traces to {out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    mode = Mode(args.mode) if args.mode else None
    if args.command == "check":
        return cmd_check(args.file, mode, args.json)
    seed = args.seed
    if seed is None:
        env = os.environ.get("LBS_SEED")
        try:
            seed = int(env) if env else 0
        except ValueError:
            print(f"lbs: LBS_SEED must be an integer, got {env!r}", file=sys.stderr)
            return EXIT_STATIC
    scatter = {}
    for name, n in args.scatter:
        scatter[name] = scatter.get(name, 0) + n
    cfg = RunConfig(
        path=args.file,
        out=args.out,
        mode=mode,
        seed=seed,
        max_time=args.max_time,
        max_steps=args.max_steps,
        lambda_mov=args.lambda_mov,
        snapshot_every=args.snapshot_every,
        scatter=scatter,
        replicates=args.replicates,
        glue_contact=args.glue_contact,
    )
    return cmd_run(cfg)


if __name__ == "__main__":
    sys.exit(main())
