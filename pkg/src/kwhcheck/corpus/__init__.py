"""Bundled protocols with their expected reports and figure fixtures."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from ..dsl import ProtocolAst, parse_protocol

CORPUS_DIR = Path(__file__).resolve().parent

# hand-made negative controls
NEGATIVE = ("leaky_toy", "nonuniform_toy")


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    path: Path
    source: str
    report: str | None        # expected JSON report, byte for byte
    figure: dict | None       # transcribed KWH diagram, if the protocol has one

    @property
    def negative(self) -> bool:
        return self.name in NEGATIVE

    @property
    def report_path(self) -> Path:
        return self.path.with_suffix(".report.json")

    def ast(self) -> ProtocolAst:
        return parse_protocol(self.source)


def load_corpus(directory: Path | str | None = None) -> list[CorpusEntry]:
    """Every ``*.cbp`` in ``directory`` (the bundled corpus by default)."""
    root = Path(directory) if directory else CORPUS_DIR
    entries = []
    for path in sorted(root.glob("*.cbp")):
        report = path.with_suffix(".report.json")
        figure = path.with_suffix(".figure.json")
        entries.append(CorpusEntry(
            name=path.stem,
            path=path,
            source=path.read_text(encoding="utf-8"),
            report=report.read_text(encoding="utf-8") if report.exists() else None,
            figure=json.loads(figure.read_text(encoding="utf-8")) if figure.exists() else None,
        ))
    return entries


def get_entry(name: str) -> CorpusEntry:
    for entry in load_corpus():
        if entry.name == name:
            return entry
    raise KeyError(name)


def figure_result_leaves(figure: dict) -> int:
    return len(figure["leaves"])


def figure_back_edges(figure: dict) -> list[tuple[str, str]]:
    """Edges of a transcribed figure that close a cycle.

    An edge is closing when breadth-first search from the root has
    already discovered its target; it is a back edge when the target
    can also reach its source again.
    """
    succ: dict[str, list[str]] = {}
    for e in figure["edges"]:
        succ.setdefault(e["src"], []).append(e["dst"])

    def reaches(a: str, b: str) -> bool:
        seen, todo = {a}, [a]
        while todo:
            u = todo.pop()
            if u == b:
                return True
            for v in succ.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return False

    seen, queue, back = {figure["root"]}, deque([figure["root"]]), []
    while queue:
        u = queue.popleft()
        for v in succ.get(u, ()):
            if v in seen:
                if reaches(v, u):
                    back.append((u, v))
            else:
                seen.add(v)
                queue.append(v)
    return back


__all__ = ["CORPUS_DIR", "CorpusEntry", "NEGATIVE", "figure_back_edges", "figure_result_leaves",
           "get_entry", "load_corpus"]
