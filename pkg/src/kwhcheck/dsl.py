"""The ``.cbp`` protocol language: AST, parser, validator and renderer.

A protocol is a header (``protocol``, ``deck``, ``inputs``, ``mode``)
followed by labeled blocks of actions.  Control flow is goto based;
blocks fall through to the next block in file order.

    protocol four_card_and
    deck C H C H
    inputs a@(1,2) b@(3,4)
    mode committed

    start:
      shuffle uniform { id ; (1 3)(2 4) }
      turn {2}
      branch { "?H??" -> heart ; "?C??" -> club }
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Union

from .cards import Card, Permutation, PermutationError, ShuffleSpec, parse_cycles


class Mode(Enum):
    COMMITTED = "committed"
    OPEN_OUTPUT = "open-output"


class DslError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


@dataclass(frozen=True)
class Span:
    line: int
    column: int = 1


_NOSPAN = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Shuffle:
    entries: tuple[tuple[Permutation, Fraction], ...]
    uniform_syntax: bool = True
    span: Span | None = _NOSPAN

    @property
    def spec(self) -> ShuffleSpec:
        return ShuffleSpec(self.entries)

    def label(self) -> str:
        if self.uniform_syntax or len({w for _, w in self.entries}) == 1:
            return "(shuffle,{" + ",".join(str(p) for p, _ in self.entries) + "})"
        return "(shuffle,{" + ",".join(f"{p}:{w}" for p, w in self.entries) + "})"


@dataclass(frozen=True)
class Turn:
    positions: tuple[int, ...]
    span: Span | None = _NOSPAN

    def label(self) -> str:
        return "(turn,{" + ",".join(map(str, self.positions)) + "})"


@dataclass(frozen=True)
class Perm:
    perm: Permutation
    span: Span | None = _NOSPAN

    def label(self) -> str:
        return f"(perm,{self.perm})"


@dataclass(frozen=True)
class Result:
    x: int
    y: int
    span: Span | None = _NOSPAN

    def label(self) -> str:
        return f"(result,{self.x},{self.y})"


@dataclass(frozen=True)
class Branch:
    arms: tuple[tuple[str, str], ...]
    default: str | None = None
    span: Span | None = _NOSPAN

    def target(self, visible: str) -> str | None:
        for pattern, label in self.arms:
            if pattern == visible:
                return label
        return self.default

    def label(self) -> str:
        return "branch"


@dataclass(frozen=True)
class Goto:
    target: str
    span: Span | None = _NOSPAN

    def label(self) -> str:
        return f"goto {self.target}"


@dataclass(frozen=True)
class Output:
    arms: tuple[tuple[str, int], ...]
    default: int | None = None
    span: Span | None = _NOSPAN

    def bit(self, visible: str) -> int | None:
        for pattern, bit in self.arms:
            if pattern == visible:
                return bit
        return self.default

    def label(self) -> str:
        return "(output)"


Action = Union[Shuffle, Turn, Perm, Result, Branch, Goto, Output]
TERMINATORS = (Result, Output, Goto, Branch)


@dataclass(frozen=True)
class Commitment:
    owner: str
    x: int
    y: int


@dataclass(frozen=True)
class Block:
    label: str
    actions: tuple[Action, ...]
    span: Span | None = _NOSPAN


@dataclass(frozen=True)
class Program:
    """Flattened control flow: one program counter per action."""

    actions: tuple[Action, ...]
    labels: dict
    block_of: tuple[str, ...]

    def pc_of(self, label: str) -> int:
        return self.labels[label]


@dataclass(frozen=True)
class ProtocolAst:
    name: str
    deck: tuple[Card, ...]
    inputs: tuple[Commitment, Commitment]
    mode: Mode
    blocks: tuple[Block, ...]

    @property
    def n(self) -> int:
        return len(self.deck)

    def program(self) -> Program:
        actions: list[Action] = []
        labels: dict[str, int] = {}
        block_of: list[str] = []
        for block in self.blocks:
            labels[block.label] = len(actions)
            actions.extend(block.actions)
            block_of.extend([block.label] * len(block.actions))
        return Program(tuple(actions), labels, tuple(block_of))

    def shuffles(self) -> list[Shuffle]:
        return [a for b in self.blocks for a in b.actions if isinstance(a, Shuffle)]

    def initial_faces(self, a: int, b: int) -> tuple[Card, ...]:
        faces = list(self.deck)
        for c, bit in zip(self.inputs, (a, b)):
            faces[c.x - 1], faces[c.y - 1] = (
                (Card.CLUB, Card.HEART) if bit == 0 else (Card.HEART, Card.CLUB)
            )
        return tuple(faces)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line: int = 0
    column: int = 0

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


# -- parsing ---------------------------------------------------------------

_IDENT = r"[A-Za-z_][\w-]*"
_KEYWORDS = {"protocol", "deck", "inputs", "mode", "shuffle", "turn", "perm",
             "branch", "goto", "result", "output", "if", "else"}
_RE = {
    "protocol": re.compile(rf"^protocol\s+({_IDENT})$"),
    "deck": re.compile(r"^deck\s+(.+)$"),
    "inputs": re.compile(r"^inputs\s+(.+)$"),
    "mode": re.compile(r"^mode\s+(\S+)$"),
    "label": re.compile(rf"^({_IDENT})\s*:\s*(.*)$"),
    "shuffle": re.compile(r"^shuffle\s+(uniform|dist)\s*\{(.*)\}$"),
    "turn": re.compile(r"^turn\s*\{(.*)\}$"),
    "perm": re.compile(r"^perm\s+(.+)$"),
    "branch": re.compile(r"^branch\s*\{(.*)\}$"),
    "if": re.compile(rf'^if\s+"([^"]*)"\s+then\s+({_IDENT})\s+else\s+({_IDENT})$'),
    "goto": re.compile(rf"^goto\s+({_IDENT})$"),
    "result": re.compile(r"^result\s+(\d+)\s*[, ]\s*(\d+)$"),
    "output": re.compile(r"^output\s*\{(.*)\}$"),
}
_COMMIT_RE = re.compile(rf"({_IDENT})@\(\s*(\d+)\s*,\s*(\d+)\s*\)")
_ARM_RE = re.compile(rf'^(?:"([^"]*)"|(else))\s*->\s*({_IDENT}|\d+)$')
_PATTERN_RE = re.compile(r"^[?CH]+$")


def _logical_lines(text: str):
    """Yield ``(line_no, column, text)``, joining brace continuations."""
    pending = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if pending is not None:
            start, col, buf = pending
            buf = buf + " " + line.strip()
            if buf.count("{") <= buf.count("}"):
                pending = None
                yield start, col, buf
            else:
                pending = (start, col, buf)
            continue
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if stripped.count("{") > stripped.count("}"):
            pending = (no, col, stripped)
        else:
            yield no, col, stripped
    if pending is not None:
        raise DslError("unterminated '{'", pending[0], pending[1])


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.name = None
        self.deck = None
        self.inputs = None
        self.mode = None
        self.blocks: list[tuple[str, Span, list]] = []
        self.refs: list[tuple[str, int, int]] = []

    def n(self, line, col) -> int:
        if self.deck is None:
            raise DslError("'deck' must be declared first", line, col)
        return len(self.deck)

    def pos(self, tok: str, line: int, col: int) -> int:
        n = self.n(line, col)
        v = int(tok)
        if not 1 <= v <= n:
            raise DslError(f"position {v} out of range 1..{n}", line, col)
        return v

    def perm(self, text: str, line: int, col: int) -> Permutation:
        try:
            return parse_cycles(text, self.n(line, col))
        except PermutationError as e:
            raise DslError(str(e), line, col) from None

    def pattern(self, text: str, line: int, col: int) -> str:
        if not _PATTERN_RE.match(text):
            raise DslError(f"bad pattern {text!r}: use '?', 'C', 'H'", line, col)
        if len(text) != self.n(line, col):
            raise DslError(f"pattern {text!r} has {len(text)} positions, deck has {len(self.deck)}",
                           line, col)
        return text

    def arms(self, body: str, line: int, col: int):
        arms, default = [], None
        for part in (p.strip() for p in body.split(";")):
            if not part:
                continue
            m = _ARM_RE.match(part)
            if not m:
                raise DslError(f"malformed arm {part!r}", line, col)
            pat, is_else, target = m.groups()
            if is_else:
                if default is not None:
                    raise DslError("duplicate 'else' arm", line, col)
                default = target
            else:
                arms.append((self.pattern(pat, line, col), target))
        return arms, default

    def action(self, s: str, line: int, col: int) -> Action:
        span = Span(line, col)
        if m := _RE["shuffle"].match(s):
            kind, body = m.groups()
            entries = []
            parts = [p.strip() for p in body.split(";") if p.strip()]
            if not parts:
                raise DslError("shuffle needs at least one permutation", line, col)
            for part in parts:
                if kind == "uniform":
                    entries.append(self.perm(part, line, col))
                else:
                    perm_txt, sep, w = part.rpartition(":")
                    if not sep:
                        raise DslError(f"missing weight in {part!r}", line, col)
                    try:
                        weight = Fraction(w.strip())
                    except (ValueError, ZeroDivisionError):
                        raise DslError(f"bad weight {w.strip()!r}", line, col) from None
                    entries.append((self.perm(perm_txt, line, col), weight))
            if kind == "uniform":
                w = Fraction(1, len(entries))
                return Shuffle(tuple((p, w) for p in entries), True, span)
            return Shuffle(tuple(entries), False, span)
        if m := _RE["turn"].match(s):
            toks = m.group(1).replace(",", " ").split()
            if not all(t.isdigit() for t in toks):
                raise DslError(f"bad turn set {m.group(1)!r}", line, col)
            return Turn(tuple(self.pos(t, line, col) for t in toks), span)
        if m := _RE["perm"].match(s):
            return Perm(self.perm(m.group(1), line, col), span)
        if m := _RE["branch"].match(s):
            arms, default = self.arms(m.group(1), line, col)
            for _, target in arms:
                self.refs.append((target, line, col))
            if default is not None:
                self.refs.append((default, line, col))
            return Branch(tuple(arms), default, span)
        if m := _RE["if"].match(s):
            pat, then, other = m.groups()
            self.refs += [(then, line, col), (other, line, col)]
            return Branch(((self.pattern(pat, line, col), then),), other, span)
        if m := _RE["goto"].match(s):
            self.refs.append((m.group(1), line, col))
            return Goto(m.group(1), span)
        if m := _RE["result"].match(s):
            return Result(self.pos(m.group(1), line, col), self.pos(m.group(2), line, col), span)
        if m := _RE["output"].match(s):
            arms, default = self.arms(m.group(1), line, col)
            bits = []
            for pat, v in arms:
                if v not in ("0", "1"):
                    raise DslError(f"output arm must map to 0 or 1, got {v!r}", line, col)
                bits.append((pat, int(v)))
            if default is not None and default not in ("0", "1"):
                raise DslError(f"output arm must map to 0 or 1, got {default!r}", line, col)
            return Output(tuple(bits), None if default is None else int(default), span)
        word = s.split()[0] if s.split() else s
        raise DslError(f"syntax error near {word!r}", line, col)

    def header(self, key: str, m, line: int, col: int):
        if self.blocks:
            raise DslError(f"'{key}' must appear before the first block", line, col)
        if key == "protocol":
            if self.name is not None:
                raise DslError("duplicate 'protocol' line", line, col)
            self.name = m.group(1)
        elif key == "deck":
            if self.deck is not None:
                raise DslError("duplicate 'deck' line", line, col)
            try:
                self.deck = tuple(Card.from_letter(t) for t in m.group(1).split())
            except ValueError as e:
                raise DslError(str(e), line, col) from None
        elif key == "inputs":
            if self.inputs is not None:
                raise DslError("duplicate 'inputs' line", line, col)
            body = m.group(1)
            found = _COMMIT_RE.findall(body)
            if _COMMIT_RE.sub("", body).strip() or len(found) != 2:
                raise DslError("inputs must be two commitments like a@(1,2) b@(3,4)", line, col)
            comms = [Commitment(o, self.pos(x, line, col), self.pos(y, line, col))
                     for o, x, y in found]
            pos = [p for c in comms for p in (c.x, c.y)]
            if len(set(pos)) != 4:
                raise DslError("overlapping commitments", line, col)
            for c in comms:
                if {self.deck[c.x - 1], self.deck[c.y - 1]} != {Card.CLUB, Card.HEART}:
                    raise DslError(
                        f"deck/commitment mismatch: positions {c.x},{c.y} must hold one C and one H",
                        line, col)
            self.inputs = tuple(comms)
        elif key == "mode":
            try:
                self.mode = Mode(m.group(1))
            except ValueError:
                raise DslError(f"unknown mode {m.group(1)!r}", line, col) from None

    def run(self) -> ProtocolAst:
        for line, col, s in _logical_lines(self.text):
            for key in ("protocol", "deck", "inputs", "mode"):
                if s.split()[0] == key and (m := _RE[key].match(s)):
                    self.header(key, m, line, col)
                    break
            else:
                m = _RE["label"].match(s)
                if m and m.group(1) not in _KEYWORDS:
                    label, rest = m.groups()
                    if any(b[0] == label for b in self.blocks):
                        raise DslError(f"duplicate label {label!r}", line, col)
                    self._need_header(line, col)
                    self.blocks.append((label, Span(line, col), []))
                    if rest:
                        self.blocks[-1][2].append(self.action(rest, line, col))
                    continue
                self._need_header(line, col)
                if not self.blocks:
                    self.blocks.append(("start", Span(line, col), []))
                self.blocks[-1][2].append(self.action(s, line, col))
        self._need_header(1, 1)
        if not self.blocks or not any(b[2] for b in self.blocks):
            raise DslError("protocol has no actions", 1, 1)
        known = {b[0] for b in self.blocks}
        for target, line, col in self.refs:
            if target not in known:
                raise DslError(f"unknown label {target!r}", line, col)
        return ProtocolAst(
            self.name, self.deck, self.inputs, self.mode or Mode.COMMITTED,
            tuple(Block(label, tuple(acts), span) for label, span, acts in self.blocks),
        )

    def _need_header(self, line, col):
        for key, val in (("protocol", self.name), ("deck", self.deck), ("inputs", self.inputs)):
            if val is None:
                raise DslError(f"missing '{key}' declaration", line, col)


def parse_protocol(text: str) -> ProtocolAst:
    """Parse ``.cbp`` source; raises :class:`DslError` with line/column."""
    return _Parser(text).run()


# -- static validation -----------------------------------------------------

def validate(ast: ProtocolAst) -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    def err(msg, action=None, severity="error"):
        span = getattr(action, "span", None)
        diags.append(Diagnostic(severity, msg, span.line if span else 0, span.column if span else 0))

    program = ast.program()
    for act in program.actions:
        if isinstance(act, Shuffle):
            try:
                act.spec
            except ValueError as e:
                err(str(e), act)
        elif isinstance(act, Turn):
            if not act.positions:
                err("turn set must be nonempty", act)
            elif len(set(act.positions)) != len(act.positions):
                err("turn set lists a position twice", act)
        elif isinstance(act, Result):
            if act.x == act.y:
                err("result positions must be distinct", act)
            if ast.mode is Mode.OPEN_OUTPUT:
                err("result is only allowed in committed mode", act)
        elif isinstance(act, Output):
            if ast.mode is Mode.COMMITTED:
                err("output is only allowed in open-output mode", act)
            pats = [p for p, _ in act.arms]
            if len(set(pats)) != len(pats):
                err("output lists a pattern twice", act)
            if any("?" in p for p in pats):
                err("output patterns must show every card", act)
        elif isinstance(act, Branch):
            pats = [p for p, _ in act.arms]
            if len(set(pats)) != len(pats):
                err("branch patterns must not overlap", act)
            if not pats and act.default is None:
                err("branch has no arms", act)

    # reachability over the flattened program
    end = len(program.actions)
    reach = set()
    todo = [0]
    while todo:
        pc = todo.pop()
        if pc in reach:
            continue
        reach.add(pc)
        if pc == end:
            continue
        act = program.actions[pc]
        if isinstance(act, Goto):
            todo.append(program.pc_of(act.target))
        elif isinstance(act, Branch):
            todo.extend(program.pc_of(t) for _, t in act.arms)
            if act.default is not None:
                todo.append(program.pc_of(act.default))
        elif not isinstance(act, (Result, Output)):
            todo.append(pc + 1)
    if end in reach:
        last = program.actions[-1] if program.actions else None
        err("control can fall off the end without a result", last)
    for block in ast.blocks:
        pc = program.pc_of(block.label)
        if block.actions and pc not in reach:
            err(f"block {block.label!r} is unreachable", block, "warning")
    return diags


# -- canonical rendering ---------------------------------------------------

def _render_action(act: Action) -> str:
    if isinstance(act, Shuffle):
        if act.uniform_syntax:
            return "shuffle uniform { " + " ; ".join(str(p) for p, _ in act.entries) + " }"
        return "shuffle dist { " + " ; ".join(f"{p}: {w}" for p, w in act.entries) + " }"
    if isinstance(act, Turn):
        return "turn {" + ", ".join(map(str, act.positions)) + "}"
    if isinstance(act, Perm):
        return f"perm {act.perm}"
    if isinstance(act, Result):
        return f"result {act.x} {act.y}"
    if isinstance(act, Goto):
        return f"goto {act.target}"
    if isinstance(act, (Branch, Output)):
        kw = "branch" if isinstance(act, Branch) else "output"
        arms = [f'"{p}" -> {t}' for p, t in act.arms]
        if act.default is not None:
            arms.append(f"else -> {act.default}")
        return kw + " { " + " ; ".join(arms) + " }"
    raise TypeError(act)


def render_protocol(ast: ProtocolAst) -> str:
    lines = [
        f"protocol {ast.name}",
        "deck " + " ".join(c.letter for c in ast.deck),
        "inputs " + " ".join(f"{c.owner}@({c.x},{c.y})" for c in ast.inputs),
        f"mode {ast.mode.value}",
    ]
    for block in ast.blocks:
        lines.append("")
        lines.append(f"{block.label}:")
        lines.extend("  " + _render_action(a) for a in block.actions)
    return "\n".join(lines) + "\n"

