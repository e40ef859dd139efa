"""``kwhcheck`` command line.

Exit codes: 0 pass, 1 input error, 2 verification failure,
3 simulation step budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import render
from .corpus import CORPUS_DIR, load_corpus
from .dsl import DslError, ProtocolAst, parse_protocol
from .engine import DEFAULT_BUDGET, SecurityLeak, build_kwh_tree, figure_view
from .verifier import analyze_shuffles, full_report

EXIT_OK, EXIT_INPUT, EXIT_FAIL, EXIT_BUDGET = 0, 1, 2, 3
COMMANDS = ("check", "tree", "simulate", "shuffles", "corpus")
FORMATS = ("text", "json", "dot")


@dataclass(frozen=True)
class CliConfig:
    command: str
    path: str | None = None
    format: str = "text"
    trials: int = 100_000
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    corpus: bool = False
    workers: int = 1
    steps: int = 10 ** 6
    output: str | None = None


class InputError(Exception):
    pass


def resolve(path: str, corpus: bool = False) -> Path:
    """Locate a protocol file; ``corpus/NAME`` and ``--corpus`` use the bundle."""
    p = Path(path)
    if p.exists() and not corpus:
        return p
    candidates = []
    if corpus or p.parts[:1] == ("corpus",):
        name = p.name if p.parts[:1] != ("corpus",) else str(Path(*p.parts[1:]))
        candidates = [CORPUS_DIR / name, CORPUS_DIR / f"{name}.cbp"]
    for c in candidates:
        if c.is_file():
            return c
    raise InputError(f"cannot read {path}: no such file")


def read_source(cfg: CliConfig, stdin=None) -> str:
    if cfg.path is None:
        raise InputError(f"{cfg.command} needs a protocol path ('-' reads stdin)")
    if cfg.path == "-":
        return (stdin or sys.stdin).read()
    path = resolve(cfg.path, cfg.corpus)
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {cfg.path}: {e.strerror}") from None


def load(cfg: CliConfig, stdin=None) -> ProtocolAst:
    source = read_source(cfg, stdin)
    try:
        return parse_protocol(source)
    except DslError as e:
        raise InputError(f"{cfg.path}:{e}") from None


def _need_format(cfg: CliConfig, allowed: tuple[str, ...]) -> None:
    if cfg.format not in allowed:
        raise InputError(f"{cfg.command} does not support --format {cfg.format}")


def cmd_check(cfg: CliConfig, out, stdin=None) -> int:
    _need_format(cfg, ("text", "json", "dot"))
    ast = load(cfg, stdin)
    report = full_report(ast, cfg.budget)
    if cfg.format == "json":
        out.write(render.report_to_json(report))
    elif cfg.format == "dot":
        out.write(render.tree_to_dot(report.tree) if report.tree else "")
    else:
        out.write(render.report_to_text(report))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_tree(cfg: CliConfig, out, stdin=None) -> int:
    ast = load(cfg, stdin)
    result = build_kwh_tree(ast, cfg.budget)
    tree = result.tree if isinstance(result, SecurityLeak) else result
    if cfg.format == "dot":
        out.write(render.tree_to_dot(tree))
    elif cfg.format == "json":
        view = figure_view(tree)
        out.write(json.dumps({
            "root": view.root,
            "boxes": {k: {s: str(p) for s, p in sorted(rows.items())} for k, rows in view.boxes.items()},
            "edges": [
                {"src": s, "label": lbl, "dst": d,
                 **({"pattern": pat} if pat is not None else {}),
                 **({"prob": render.rat(pr)} if pr is not None else {}),
                 **({"back": True} if i in view.back else {})}
                for i, (s, lbl, pat, pr, d) in enumerate(view.edges)
            ],
            "leaves": view.leaves,
            "leak": tree.leak.describe() if tree.leak else None,
            "error": tree.error,
        }, indent=2) + "\n")
    else:
        out.write(render.tree_to_text(tree))
    return EXIT_OK if tree.complete else EXIT_FAIL


def cmd_simulate(cfg: CliConfig, out, stdin=None) -> int:
    from .simulator import SimulationError, StepBudgetExceeded, estimate

    _need_format(cfg, ("text", "json"))
    if cfg.trials < 1:
        raise InputError("--trials must be at least 1")
    ast = load(cfg, stdin)
    try:
        stats = estimate(ast, cfg.trials, cfg.seed, workers=cfg.workers, budget=cfg.steps)
    except StepBudgetExceeded as e:
        print(f"kwhcheck: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (SimulationError, ValueError) as e:
        raise InputError(str(e)) from None
    if cfg.format == "json":
        out.write(json.dumps(stats.to_dict(), indent=2) + "\n")
    else:
        out.write(stats.to_text())
    return EXIT_OK if stats.all_outputs_correct else EXIT_FAIL


def cmd_shuffles(cfg: CliConfig, out, stdin=None) -> int:
    _need_format(cfg, ("text", "json"))
    analysis = analyze_shuffles(load(cfg, stdin))
    if cfg.format == "json":
        out.write(json.dumps([
            {"at": r.at, "perms": r.label(), "uniform": r.uniform, "closed": r.closed,
             "group_order": r.group_order} for r in analysis.rows], indent=2) + "\n")
    else:
        yn = {True: "yes", False: "no"}
        for r in analysis.rows:
            out.write(f"[{r.at}] {r.label()}: uniform={yn[r.uniform]} closed={yn[r.closed]} "
                      f"|⟨Π⟩|={r.group_order}\n")
    return EXIT_OK


def cmd_corpus(cfg: CliConfig, out, stdin=None) -> int:
    """List bundled protocols and check each against its stored report."""
    _need_format(cfg, ("text", "json"))
    rows = []
    for entry in load_corpus():
        fresh = render.report_to_json(full_report(entry.ast(), cfg.budget))
        rows.append({
            "name": entry.name,
            "path": str(entry.path),
            "negative": entry.negative,
            "figure": entry.figure is not None,
            "fixture": None if entry.report is None else fresh == entry.report,
        })
    if cfg.format == "json":
        out.write(json.dumps({"directory": str(CORPUS_DIR), "entries": rows}, indent=2) + "\n")
    else:
        out.write(f"corpus: {CORPUS_DIR}\n")
        for r in rows:
            tags = []
            if r["negative"]:
                tags.append("negative control")
            if r["figure"]:
                tags.append("figure")
            state = {None: "no fixture", True: "fixture ok", False: "FIXTURE MISMATCH"}[r["fixture"]]
            out.write(f"  {r['name']:<16} {state}" + (f" ({', '.join(tags)})" if tags else "") + "\n")
    return EXIT_FAIL if any(r["fixture"] is False for r in rows) else EXIT_OK


HANDLERS = {"check": cmd_check, "tree": cmd_tree, "simulate": cmd_simulate,
            "shuffles": cmd_shuffles, "corpus": cmd_corpus}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                        help="node budget for tree exploration (default %(default)s)")
    common.add_argument("--corpus", action="store_true",
                        help="resolve PATH against the bundled corpus")
    common.add_argument("-o", "--output", help="write to a file instead of stdout")

    parser = argparse.ArgumentParser(prog="kwhcheck", description="Verify, analyze and simulate card-based AND protocols.")
    parser.add_argument("--corpus", action="store_true", dest="show_corpus",
                        help="print the bundled corpus directory and exit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, help_ in (("check", "verify security, correctness and termination"),
                        ("tree", "print the KWH-tree (text, json or dot)"),
                        ("simulate", "Monte Carlo run on concrete decks"),
                        ("shuffles", "classify each shuffle"),
                        ("corpus", "list bundled protocols and check their fixtures")):
        p = sub.add_parser(name, parents=[common], help=help_)
        if name != "corpus":
            p.add_argument("path", help="protocol file, corpus/NAME.cbp, or - for stdin")
        if name == "simulate":
            p.add_argument("--trials", type=int, default=100_000)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--steps", type=int, default=10 ** 6,
                           help="per-trial step budget (default %(default)s)")
    return parser


def parse_config(argv) -> CliConfig | None:
    args = build_parser().parse_args(argv)
    if args.command is None:
        return None if args.show_corpus else CliConfig(command="")
    return CliConfig(
        command=args.command,
        path=getattr(args, "path", None),
        format=args.format,
        trials=getattr(args, "trials", 100_000),
        seed=getattr(args, "seed", 0),
        budget=args.budget,
        corpus=args.corpus,
        workers=getattr(args, "workers", 1),
        steps=getattr(args, "steps", 10 ** 6),
        output=args.output,
    )


def main(argv=None, stdout=None, stdin=None) -> int:
    stdout = stdout or sys.stdout
    try:
        cfg = parse_config(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT
    if cfg is None:
        stdout.write(f"{CORPUS_DIR}\n")
        return EXIT_OK
    if not cfg.command:
        build_parser().print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8") as fh:
                return HANDLERS[cfg.command](cfg, fh, stdin)
        return HANDLERS[cfg.command](cfg, stdout, stdin)
    except InputError as e:
        print(f"kwhcheck: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"kwhcheck: cannot write {cfg.output}: {e.strerror}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
