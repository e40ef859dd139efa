"""Verdicts over KWH-trees: security, correctness, termination, runtime."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .cards import Card, Permutation, generated_group, is_closed
from .dsl import (
    Branch, DslError, Goto, Mode, Output, Perm, ProtocolAst, Result, Shuffle, Turn,
    parse_protocol, validate,
)
from .engine import DEFAULT_BUDGET, KwhTree, SecurityLeak, build_kwh_tree
from .markov import DivergenceError, check_absorbing, expected_visits, hitting_probability
from .symbolic import x0_form_fraction, x1_form_fraction

_X0_SYMBOLS = ("X00", "X01", "X10")


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: str | None = None

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "PASS" if self.ok else f"FAIL ({self.witness})"


class TerminationClass(Enum):
    FINITE = "finite"
    LAS_VEGAS = "las-vegas"
    NON_CONVERGENT = "non-convergent"


@dataclass(frozen=True)
class Termination:
    kind: TerminationClass
    cycles: tuple[str, ...] = ()
    reason: str | None = None


class Metric(Enum):
    TURN_ACTIONS = "turn_actions"
    SHUFFLE_ACTIONS = "shuffle_actions"
    BRANCH_PASSES = "branch_passes"


def _as_tree(tree) -> KwhTree:
    return tree.tree if isinstance(tree, SecurityLeak) else tree


def _incomplete_reason(tree: KwhTree) -> str | None:
    if tree.leak is not None:
        return f"exploration stopped at a leak: {tree.leak.describe()}"
    if tree.error is not None:
        return f"exploration failed: {tree.error}"
    if tree.frontier:
        return f"node budget exhausted with {len(tree.frontier)} states unexplored"
    return None


def check_security(tree) -> Verdict:
    tree = _as_tree(tree)
    if tree.leak is not None:
        return Verdict(False, tree.leak.describe())
    reason = _incomplete_reason(tree)
    if reason:
        return Verdict(False, reason)
    if tree.mode is Mode.OPEN_OUTPUT:
        # the final view may depend on the inputs only through a AND b
        for leaf in tree.leaves:
            if leaf.kind != "output":
                continue
            if x0_form_fraction(leaf.poly) is None and x1_form_fraction(leaf.poly) is None:
                return Verdict(False, f"final view {leaf.pattern} has probability {leaf.poly}, "
                                      "not a multiple of X0 or of X1")
    return Verdict(True)


def check_correctness(tree) -> Verdict:
    tree = _as_tree(tree)
    reason = _incomplete_reason(tree)
    if reason:
        return Verdict(False, reason)
    if not tree.leaves:
        return Verdict(False, "no terminal state reached")
    for leaf in tree.leaves:
        if leaf.kind == "result":
            box = tree.nodes[leaf.node].box
            for seq, poly in box.rows:
                got = (seq.faces[leaf.x - 1], seq.faces[leaf.y - 1])
                coeffs = poly.coeffs
                if any(s in coeffs for s in _X0_SYMBOLS) and got != (Card.CLUB, Card.HEART):
                    return Verdict(False, f"{leaf.label} at row {seq.face_string()} ({poly}) "
                                          f"reads {got[0].letter}{got[1].letter}, expected CH")
                if "X11" in coeffs and got != (Card.HEART, Card.CLUB):
                    return Verdict(False, f"{leaf.label} at row {seq.face_string()} ({poly}) "
                                          f"reads {got[0].letter}{got[1].letter}, expected HC")
        else:
            coeffs = leaf.poly.coeffs
            if leaf.bit is None:
                return Verdict(False, f"final view {leaf.pattern} matches no output arm")
            if leaf.bit == 1 and any(s in coeffs for s in _X0_SYMBOLS):
                return Verdict(False, f"final view {leaf.pattern} outputs 1 but has {leaf.poly}")
            if leaf.bit == 0 and "X11" in coeffs:
                return Verdict(False, f"final view {leaf.pattern} outputs 0 but has {leaf.poly}")
    return Verdict(True)


def _transitions(tree: KwhTree) -> dict[int, list[tuple[int, Fraction]]]:
    trans: dict[int, list[tuple[int, Fraction]]] = {n.id: [] for n in tree.nodes}
    for e in tree.edges:
        trans[e.src].append((e.dst, e.prob))
    return trans


def _describe_edge(tree: KwhTree, e) -> str:
    return f"n{e.src} -> n{e.dst} ({e.label})"


def check_termination(tree) -> Termination:
    tree = _as_tree(tree)
    if tree.frontier:
        return Termination(TerminationClass.NON_CONVERGENT,
                           reason=_incomplete_reason(tree))
    cycles = tuple(_describe_edge(tree, e) for e in tree.back_edges)
    if not cycles:
        return Termination(TerminationClass.FINITE, reason=_incomplete_reason(tree))
    try:
        check_absorbing(_transitions(tree), tree.root)
    except DivergenceError as e:
        return Termination(TerminationClass.NON_CONVERGENT, cycles, str(e))
    return Termination(TerminationClass.LAS_VEGAS, cycles, _incomplete_reason(tree))


def _reveal_nodes(tree: KwhTree) -> set[int]:
    return {e.src for e in tree.edges if e.kind == "reveal"}


def _shuffle_nodes(tree: KwhTree) -> set[int]:
    return {n.id for n in tree.nodes if isinstance(tree.action_at(n.id), Shuffle)}


def expected_runtime(tree, metric: Metric | str) -> Fraction:
    """Exact expectation of an action count until termination.

    ``TURN_ACTIONS`` counts revealing turns, ``SHUFFLE_ACTIONS`` shuffles,
    and ``BRANCH_PASSES`` the revealing turns after the first one, i.e.
    the passes through the separating points once the initial split is
    made.  Raises :class:`DivergenceError` if termination is not certain.
    """
    tree = _as_tree(tree)
    metric = Metric(metric)
    reason = _incomplete_reason(tree)
    if reason:
        raise DivergenceError(reason)
    trans = _transitions(tree)
    visits = expected_visits(trans, tree.root)
    reveals = _reveal_nodes(tree)
    if metric is Metric.SHUFFLE_ACTIONS:
        return sum((visits.get(n, Fraction(0)) for n in _shuffle_nodes(tree)), Fraction(0))
    turns = sum((visits.get(n, Fraction(0)) for n in reveals), Fraction(0))
    if metric is Metric.TURN_ACTIONS:
        return turns
    if not reveals:
        return Fraction(0)
    return turns - hitting_probability(trans, tree.root, reveals)


def check_restart_free(ast: ProtocolAst) -> bool:
    """The commitments enter the deck once: no action of the language
    re-deals inputs, so every parsed protocol is restart-free."""
    vocabulary = (Shuffle, Turn, Perm, Result, Branch, Goto, Output)
    return all(isinstance(a, vocabulary) for a in ast.program().actions)


def _full_cycle_group(perms) -> bool:
    n = perms[0].n
    return len(perms) == n > 2 and any(
        len(c) == 1 and len(c[0]) == n for c in (p.cycles() for p in perms))


@dataclass(frozen=True)
class ShuffleRow:
    at: str
    perms: tuple[Permutation, ...]
    weights: tuple[Fraction, ...]
    uniform: bool
    closed: bool
    group_order: int

    def label(self) -> str:
        if self.uniform and self.closed and _full_cycle_group(self.perms):
            return f"cyclic {len(self.perms)}"
        if self.uniform:
            return "{" + ",".join(map(str, self.perms)) + "}"
        return "{" + ",".join(f"{p}:{w}" for p, w in zip(self.perms, self.weights)) + "}"


@dataclass(frozen=True)
class ShuffleAnalysis:
    rows: tuple[ShuffleRow, ...]

    @property
    def uniform(self) -> bool:
        return all(r.uniform for r in self.rows)

    @property
    def closed(self) -> bool:
        return all(r.closed for r in self.rows)


def analyze_shuffles(ast: ProtocolAst) -> ShuffleAnalysis:
    program = ast.program()
    rows = []
    for pc, act in enumerate(program.actions):
        if not isinstance(act, Shuffle):
            continue
        perms = tuple(p for p, _ in act.entries)
        weights = tuple(w for _, w in act.entries)
        rows.append(ShuffleRow(
            at=program.block_of[pc],
            perms=perms,
            weights=weights,
            uniform=len(set(weights)) == 1,
            closed=is_closed(perms),
            group_order=len(generated_group(perms)),
        ))
    return ShuffleAnalysis(tuple(rows))


@dataclass
class VerificationReport:
    protocol: str
    mode: Mode
    secure: Verdict
    correct: Verdict
    termination: Termination
    expected: dict[str, Fraction]
    restart_free: bool
    shuffles: ShuffleAnalysis
    diagnostics: list = field(default_factory=list)
    tree: KwhTree | None = field(default=None, repr=False)

    @property
    def finite(self) -> bool:
        return self.termination.kind is TerminationClass.FINITE

    @property
    def uniform(self) -> bool:
        return self.shuffles.uniform

    @property
    def closed(self) -> bool:
        return self.shuffles.closed

    @property
    def passed(self) -> bool:
        return self.secure.ok and self.correct.ok

    def table_row(self) -> dict[str, str]:
        yn = {True: "yes", False: "no"}
        return {"finite": yn[self.finite], "uniform": yn[self.uniform], "closed": yn[self.closed]}


def full_report(ast: ProtocolAst, budget: int = DEFAULT_BUDGET) -> VerificationReport:
    diagnostics = validate(ast)
    errors = [d for d in diagnostics if d.severity == "error"]
    shuffles = analyze_shuffles(ast)
    if errors:
        msg = "; ".join(str(d) for d in errors)
        bad = Verdict(False, f"invalid protocol: {msg}")
        return VerificationReport(ast.name, ast.mode, bad, bad,
                                  Termination(TerminationClass.NON_CONVERGENT, reason=msg),
                                  {}, check_restart_free(ast), shuffles, diagnostics)
    result = build_kwh_tree(ast, budget)
    tree = _as_tree(result)
    termination = check_termination(tree)
    expected: dict[str, Fraction] = {}
    if tree.complete and termination.kind is not TerminationClass.NON_CONVERGENT:
        for metric in Metric:
            expected[metric.value] = expected_runtime(tree, metric)
    return VerificationReport(
        protocol=ast.name,
        mode=ast.mode,
        secure=check_security(tree),
        correct=check_correctness(tree),
        termination=termination,
        expected=expected,
        restart_free=check_restart_free(ast),
        shuffles=shuffles,
        diagnostics=diagnostics,
        tree=tree,
    )


def report_from_source(text: str, budget: int = DEFAULT_BUDGET) -> VerificationReport:
    """Parse, validate, build and verify; raises :class:`DslError` on bad syntax."""
    return full_report(parse_protocol(text), budget)


__all__ = [
    "DslError", "Metric", "ShuffleAnalysis", "ShuffleRow", "Termination", "TerminationClass",
    "Verdict", "VerificationReport", "analyze_shuffles", "check_correctness", "check_restart_free",
    "check_security", "check_termination", "expected_runtime", "full_report", "report_from_source",
]
