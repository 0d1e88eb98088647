"""``gstl`` command line: check | count | eval | compile | prove.

Exit status: 0 consistent / all true / valid, 1 inconsistent / some false /
invalid, 2 usage, file or parse error, 3 resource limit.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

from .compile import compile_theory, default_root
from .errors import GstlError, ResourceLimit
from .model import build_model, load_signal, single_node_model
from .proof import check_proof, parse_proof
from .semantics import EvalContext, evaluate
from .solve import check_consistency
from .syntax import TheorySet, load_theory

EXIT_OK, EXIT_NO, EXIT_ERROR, EXIT_LIMIT = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str | None = None
    formulas: str | None = None
    signal: str | None = None
    proof: str | None = None
    premises: str | None = None
    output: str | None = None
    map: str | None = None
    horizon: int = 0
    root: str | None = None
    epsilon: Fraction | None = None
    grounding: str = "expand"
    cnf: str = "distribution"
    patterns: str = "keep"
    count: bool = False
    count_method: str = "enumerate"
    max_models: int | None = None
    max_conflicts: int | None = None
    strict: bool = False
    format: str = "human"

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")


class _Report:
    """Collects ordered key/value facts and renders them for either format."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.headline = ""
        self.pairs: list = []
        self.details: list = []

    def add(self, key, value, human: str | None = None):
        self.pairs.append((key, value))
        if human is not None:
            self.details.append(human)

    def render(self) -> str:
        if self.fmt == "machine":
            return "".join(f"{k}={v}\n" for k, v in self.pairs)
        lines = [self.headline] if self.headline else []
        return "\n".join(lines + self.details) + "\n"


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_model(cfg: RunConfig, fallback_node: str = "v"):
    if cfg.model is None:
        return single_node_model(fallback_node)
    return build_model(_read(cfg.model), cfg.epsilon)


def _load_formulas(path: str | None) -> TheorySet:
    return TheorySet() if path is None else load_theory(_read(path))


def _plural(n: int, word: str) -> str:
    return f"{n} {word}" if n == 1 else f"{n} {word}s"


def cmd_check(cfg: RunConfig, out) -> int:
    sigma = _load_formulas(cfg.formulas)
    model = _load_model(cfg)
    root = cfg.root if cfg.root is not None else default_root(model)
    res = check_consistency(sigma, model, root, cfg.horizon, cfg.grounding, cfg.cnf,
                            count=cfg.count, count_method=cfg.count_method,
                            patterns=cfg.patterns, max_conflicts=cfg.max_conflicts,
                            max_models=cfg.max_models)
    c = res.cnf
    rep = _Report(cfg.format)
    rep.add("verdict", "consistent" if res.consistent else "inconsistent")
    rep.add("root", root)
    rep.add("horizon", cfg.horizon)
    rep.add("variables", len(c.atoms), f"variables: {len(c.atoms)}")
    rep.add("aux_variables", len(c.aux), f"auxiliary variables: {len(c.aux)}")
    rep.add("clauses", len(c.clauses), f"clauses: {len(c.clauses)}")
    if res.count is not None:
        rep.add("models", res.count)
    if res.consistent:
        if not c.atoms and not c.clauses:
            rep.headline = "Consistent, 1 model (trivial)"
        elif res.count is not None:
            rep.headline = (f"Consistent, {_plural(res.count, 'model')}, "
                            f"{_plural(len(c.atoms), 'variable')}")
        else:
            rep.headline = f"Consistent, {_plural(len(c.atoms), 'variable')}"
    else:
        step = res.conflict_step
        rep.headline = "Inconsistent" if step is None else f"Inconsistent (conflict at t={step})"
        rep.add("conflict_step", "" if step is None else step)
        atoms = " ".join(str(a) for a in res.conflict_atoms)
        rep.add("conflict_atoms", atoms, f"conflict atoms: {atoms}" if atoms else None)
        names = " ".join(res.conflict_formulas)
        rep.add("conflict_formulas", names, f"conflict formulas: {names}" if names else None)
    for note in c.diagnostics:
        rep.add("note", note, f"note: {note}")
    out.write(rep.render())
    return EXIT_OK if res.consistent else EXIT_NO


def cmd_count(cfg: RunConfig, out) -> int:
    return cmd_check(replace(cfg, count=True), out)


def cmd_eval(cfg: RunConfig, out) -> int:
    sigma = _load_formulas(cfg.formulas)
    sig_text = _read(cfg.signal)
    if cfg.model is None:
        probe, _ = load_signal(sig_text)
        nodes = sorted(probe.nodes())
        model = single_node_model(nodes[0] if len(nodes) == 1 else "v")
    else:
        model = _load_model(cfg)
    signal, interp = load_signal(sig_text, model)
    root = cfg.root if cfg.root is not None else default_root(model)
    ctx = EvalContext(model, signal, interp, root, 0)
    rep = _Report(cfg.format)
    results = []
    for name, f in sigma:
        r = evaluate(ctx, f, strict=cfg.strict)
        results.append(r)
        rep.add(name, "true" if r else "false", f"{name}: {'true' if r else 'false'}")
    rep.headline = f"{sum(results)} of {_plural(len(results), 'formula')} hold at {root}, t=0"
    out.write(rep.render())
    return EXIT_OK if all(results) else EXIT_NO


def cmd_compile(cfg: RunConfig, out) -> int:
    sigma = _load_formulas(cfg.formulas)
    model = _load_model(cfg)
    root = cfg.root if cfg.root is not None else default_root(model)
    c = compile_theory(sigma, model, root, cfg.horizon, cfg.grounding, cfg.cnf, cfg.patterns)
    dimacs, sidecar = c.to_dimacs(), c.sidecar_map()
    map_path = cfg.map or (cfg.output + ".map" if cfg.output else None)
    if cfg.output:
        Path(cfg.output).write_text(dimacs, encoding="utf-8")
    else:
        out.write(dimacs)
    if map_path:
        Path(map_path).write_text(sidecar, encoding="utf-8")
    if cfg.output:
        rep = _Report(cfg.format)
        rep.headline = f"wrote {cfg.output}" + (f" and {map_path}" if map_path else "")
        rep.add("cnf", cfg.output)
        rep.add("map", map_path or "")
        rep.add("variables", c.num_vars, f"variables: {c.num_vars} ({len(c.atoms)} atoms)")
        rep.add("clauses", len(c.clauses), f"clauses: {len(c.clauses)}")
        out.write(rep.render())
    return EXIT_OK


def cmd_prove(cfg: RunConfig, out) -> int:
    script = parse_proof(_read(cfg.proof))
    premises = None if cfg.premises is None else load_theory(_read(cfg.premises))
    res = check_proof(script, premises)
    rep = _Report(cfg.format)
    rep.headline = str(res)
    rep.add("verdict", "valid" if res.valid else "invalid")
    rep.add("steps", len(script))
    if not res.valid:
        rep.add("step", res.step)
        rep.add("reason", res.reason)
    out.write(rep.render())
    return EXIT_OK if res.valid else EXIT_NO


COMMANDS = {"check": cmd_check, "count": cmd_count, "eval": cmd_eval,
            "compile": cmd_compile, "prove": cmd_prove}
REQUIRED = {"check": ("formulas",), "count": ("formulas",), "eval": ("signal", "formulas"),
            "compile": ("formulas",), "prove": ("proof",)}


def _positive(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="spatial model document (.gm)")
    common.add_argument("--formulas", help="theory document (name: formula)")
    common.add_argument("--root", help="evaluation / grounding node (default: first top-layer node)")
    common.add_argument("--epsilon", type=Fraction, help="override the model's neighbor epsilon")
    common.add_argument("--format", choices=("human", "machine"), default="human")

    enc = argparse.ArgumentParser(add_help=False)
    enc.add_argument("--horizon", type=_positive, default=0)
    enc.add_argument("--grounding", choices=("expand", "abstract"), default="expand")
    enc.add_argument("--cnf", choices=("distribution", "equisatisfiable"), default="distribution")
    enc.add_argument("--patterns", choices=("keep", "resolve"), default="keep",
                     help="keep neighbor patterns symbolic or decide them from boxes")
    enc.add_argument("--max-conflicts", type=_positive)

    counting = argparse.ArgumentParser(add_help=False)
    counting.add_argument("--count-method", choices=("enumerate", "components"), default="enumerate")
    counting.add_argument("--max-models", "--limit", dest="max_models", type=_positive,
                          help="fail with exit 3 beyond this many models")

    p = argparse.ArgumentParser(prog="gstl", description="Spatial temporal logic toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    chk = sub.add_parser("check", parents=[common, enc, counting], help="decide consistency")
    chk.add_argument("--count", action="store_true", help="also count models")
    sub.add_parser("count", parents=[common, enc, counting], help="count models")
    ev = sub.add_parser("eval", parents=[common], help="evaluate formulas on a signal")
    ev.add_argument("--signal", help="signal document (.sig)")
    ev.add_argument("--strict", action="store_true",
                    help="error on references past the signal instead of reading false")
    cp = sub.add_parser("compile", parents=[common, enc], help="emit DIMACS and a variable map")
    cp.add_argument("-o", "--output", help="DIMACS path (default: stdout)")
    cp.add_argument("--map", help="variable map path (default: OUTPUT.map)")
    pr = sub.add_parser("prove", parents=[common], help="check a proof script")
    pr.add_argument("--proof", help="proof document")
    pr.add_argument("--premises", help="theory document of allowed premises")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in vars(ns).items() if k in fields and v is not None})


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    missing = [f"--{k}" for k in REQUIRED[ns.command] if getattr(ns, k, None) is None]
    if missing:
        err.write(f"gstl {ns.command}: missing {' '.join(missing)}\n")
        return EXIT_ERROR
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg, out)
    except ResourceLimit as exc:
        err.write(f"gstl: resource limit: {exc}\n")
        return EXIT_LIMIT
    except (GstlError, OSError, ValueError, KeyError) as exc:
        err.write(f"gstl: error: {exc}\n")
        return EXIT_ERROR


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
