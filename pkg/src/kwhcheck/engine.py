"""Symbolic execution of protocols into KWH-trees.

A node is a (box, program counter) pair.  A box maps every card
sequence still possible to its conditional probability polynomial.
Exploration is breadth-first; a successor equal to an already visited
node becomes an edge back to that node, which is how goto loops close.
"""
from __future__ import annotations

import dataclasses
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .cards import Permutation, Sequence, ShuffleSpec, apply_permutation
from .dsl import Branch, Goto, Mode, Output, Perm, ProtocolAst, Result, Shuffle, Turn
from .symbolic import (
    TOTAL,
    ZERO,
    ProbPoly,
    constant_fraction_of_total,
    poly_add,
    poly_normalize,
    poly_scale,
)

DEFAULT_BUDGET = 10_000


class ExecutionError(Exception):
    """The protocol performs an action that is not allowed in its state."""


@dataclass(frozen=True)
class Box:
    rows: tuple[tuple[Sequence, ProbPoly], ...]

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[Sequence, ProbPoly]] | Mapping) -> "Box":
        if isinstance(rows, Mapping):
            rows = rows.items()
        merged: dict[Sequence, ProbPoly] = {}
        for seq, poly in rows:
            merged[seq] = poly_add(merged.get(seq, ZERO), poly)
        items = tuple(sorted((s, p) for s, p in merged.items() if not p.is_zero()))
        if not items:
            raise ValueError("a box needs at least one row")
        if len({s.up for s, _ in items}) != 1:
            raise ValueError("all rows of a box must share one orientation")
        return cls(items)

    @classmethod
    def from_strings(cls, rows: Mapping[str, ProbPoly], up: Iterable[bool] | None = None) -> "Box":
        up = tuple(up) if up is not None else None
        return cls.from_rows((Sequence.from_string(s, up), p) for s, p in rows.items())

    @property
    def up(self) -> tuple[bool, ...]:
        return self.rows[0][0].up

    @property
    def n(self) -> int:
        return len(self.rows[0][0])

    def all_face_down(self) -> bool:
        return not any(self.up)

    def visible(self) -> str:
        return self.rows[0][0].visible()

    def total(self) -> ProbPoly:
        acc = ZERO
        for _, p in self.rows:
            acc = poly_add(acc, p)
        return acc

    def as_dict(self) -> dict[Sequence, ProbPoly]:
        return dict(self.rows)

    def face_rows(self) -> dict[str, ProbPoly]:
        return {s.face_string(): p for s, p in self.rows}

    def __str__(self) -> str:
        return "\n".join(f"{s} {p}" for s, p in self.rows)


@dataclass(frozen=True)
class SecurityLeak:
    """A turn whose outcome probability depends on the inputs."""

    pattern: str
    poly: ProbPoly
    action: str = ""
    node: int | None = None
    tree: "KwhTree | None" = field(default=None, compare=False, repr=False)

    def describe(self) -> str:
        return f"{self.action} outcome {self.pattern} has input-dependent probability {self.poly}"


def initial_box(ast: ProtocolAst) -> Box:
    rows = []
    for sym, (a, b) in zip(("X00", "X01", "X10", "X11"), ((0, 0), (0, 1), (1, 0), (1, 1))):
        seq = Sequence(ast.initial_faces(a, b), (False,) * ast.n)
        rows.append((seq, ProbPoly.symbol(sym)))
    return Box.from_rows(rows)


def apply_shuffle(box: Box, spec: ShuffleSpec) -> Box:
    if not box.all_face_down():
        raise ExecutionError(f"shuffle with face-up cards (visible {box.visible()})")
    out = []
    for seq, poly in box.rows:
        for perm, w in spec.entries:
            out.append((apply_permutation(seq, perm), poly_scale(poly, w)))
    return Box.from_rows(out)


def apply_perm(box: Box, p: Permutation) -> Box:
    if not box.all_face_down():
        raise ExecutionError(f"perm with face-up cards (visible {box.visible()})")
    return Box.from_rows((apply_permutation(s, p), poly) for s, poly in box.rows)


def apply_turn(box: Box, positions: Iterable[int]):
    """Flip ``positions``.

    Returns ``[(visible_pattern, probability, conditioned_box), ...]``
    sorted by pattern, or a :class:`SecurityLeak`.
    """
    positions = tuple(positions)
    if not positions:
        raise ExecutionError("turn of an empty position set")
    for p in positions:
        if not 1 <= p <= box.n:
            raise ExecutionError(f"turn position {p} out of range")
    up = list(box.up)
    for p in positions:
        up[p - 1] = not up[p - 1]
    up = tuple(up)
    revealed = [p - 1 for p in positions if up[p - 1]]
    groups: dict[tuple, list] = defaultdict(list)
    for seq, poly in box.rows:
        key = tuple(seq.faces[i] for i in revealed)
        groups[key].append((Sequence(seq.faces, up), poly))
    outcomes = []
    for key, rows in groups.items():
        total = ZERO
        for _, p in rows:
            total = poly_add(total, p)
        c = constant_fraction_of_total(total)
        pattern = rows[0][0].visible()
        if c is None:
            return SecurityLeak(pattern, total)
        outcomes.append((pattern, c, Box.from_rows((s, poly_normalize(p, c)) for s, p in rows)))
    outcomes.sort(key=lambda o: o[0])
    return outcomes


def apply_output(box: Box, action: Output) -> list[tuple[str, ProbPoly, int | None]]:
    """Turn every face-down card and classify each full sequence to a bit.

    The per-sequence polynomials are left unnormalized; they are the
    probability of that final view jointly with the inputs.
    """
    groups: dict[str, ProbPoly] = {}
    for seq, poly in box.rows:
        key = seq.face_string()
        groups[key] = poly_add(groups.get(key, ZERO), poly)
    return [(pat, poly, action.bit(pat)) for pat, poly in sorted(groups.items())]


# -- the tree --------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    id: int
    box: Box
    pc: int


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: str  # shuffle | perm | reveal | hide | branch | goto
    label: str
    prob: Fraction = Fraction(1)
    pattern: str | None = None
    closing: bool = False


@dataclass(frozen=True)
class Leaf:
    node: int
    kind: str  # result | output
    label: str
    x: int | None = None
    y: int | None = None
    pattern: str | None = None
    poly: ProbPoly | None = None
    bit: int | None = None


@dataclass
class KwhTree:
    ast: ProtocolAst
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    leaves: list[Leaf] = field(default_factory=list)
    root: int = 0
    leak: SecurityLeak | None = None
    error: str | None = None
    frontier: list[tuple[Box, int]] = field(default_factory=list)

    @property
    def mode(self) -> Mode:
        return self.ast.mode

    @property
    def exhausted(self) -> bool:
        return bool(self.frontier)

    @property
    def complete(self) -> bool:
        return self.leak is None and self.error is None and not self.frontier

    @property
    def back_edges(self) -> list[Edge]:
        """Edges into an earlier node that close a cycle.

        Closing edges that merely join two paths (no cycle) are excluded.
        """
        succ = defaultdict(list)
        for e in self.edges:
            succ[e.src].append(e.dst)
        return [e for e in self.edges if e.closing and _reaches(succ, e.dst, e.src)]

    def out_edges(self, node: int) -> list[Edge]:
        return [e for e in self.edges if e.src == node]

    def action_at(self, node: int):
        pc = self.nodes[node].pc
        actions = self.ast.program().actions
        return actions[pc] if pc < len(actions) else None

    def result_leaves(self) -> list[Leaf]:
        return [leaf for leaf in self.leaves if leaf.kind == "result"]


def _reaches(succ, a, b) -> bool:
    seen, todo = {a}, [a]
    while todo:
        u = todo.pop()
        if u == b:
            return True
        for v in succ[u]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return False


def build_kwh_tree(ast: ProtocolAst, budget: int = DEFAULT_BUDGET):
    """Explore ``ast`` symbolically.

    Returns a :class:`KwhTree`, or a :class:`SecurityLeak` (whose ``tree``
    holds the exploration up to the leaking turn).  Budget exhaustion and
    illegal actions are recorded on the tree (``frontier`` / ``error``).
    """
    program = ast.program()
    actions = program.actions
    tree = KwhTree(ast)
    index: dict[tuple[Box, int], int] = {}
    queue: deque[int] = deque()

    def add_node(box: Box, pc: int) -> int | None:
        if len(tree.nodes) >= budget:
            tree.frontier.append((box, pc))
            return None
        nid = len(tree.nodes)
        tree.nodes.append(Node(nid, box, pc))
        index[(box, pc)] = nid
        queue.append(nid)
        return nid

    def step(src: int, box: Box, pc: int, kind: str, label: str,
             prob=Fraction(1), pattern=None):
        key = (box, pc)
        if key in index:
            tree.edges.append(Edge(src, index[key], kind, label, prob, pattern, closing=True))
            return
        dst = add_node(box, pc)
        if dst is not None:
            tree.edges.append(Edge(src, dst, kind, label, prob, pattern))

    add_node(initial_box(ast), 0)
    while queue:
        nid = queue.popleft()
        node = tree.nodes[nid]
        box, pc = node.box, node.pc
        if pc >= len(actions):
            tree.error = f"control fell off the end of the protocol at node {nid}"
            break
        act = actions[pc]
        try:
            if isinstance(act, Shuffle):
                step(nid, apply_shuffle(box, act.spec), pc + 1, "shuffle", act.label())
            elif isinstance(act, Perm):
                step(nid, apply_perm(box, act.perm), pc + 1, "perm", act.label())
            elif isinstance(act, Turn):
                res = apply_turn(box, act.positions)
                if isinstance(res, SecurityLeak):
                    tree.leak = dataclasses.replace(res, action=act.label(), node=nid, tree=tree)
                    return tree.leak
                revealing = any(not box.up[p - 1] for p in act.positions)
                for pattern, prob, cond in res:
                    if revealing:
                        step(nid, cond, pc + 1, "reveal", act.label(), prob, pattern)
                    else:
                        step(nid, cond, pc + 1, "hide", act.label())
            elif isinstance(act, Branch):
                vis = box.visible()
                target = act.target(vis)
                if target is None:
                    raise ExecutionError(f"no branch arm matches visible pattern {vis}")
                step(nid, box, program.pc_of(target), "branch", f'"{vis}" -> {target}')
            elif isinstance(act, Goto):
                step(nid, box, program.pc_of(act.target), "goto", act.label())
            elif isinstance(act, Result):
                tree.leaves.append(Leaf(nid, "result", act.label(), x=act.x, y=act.y))
            elif isinstance(act, Output):
                for pattern, poly, bit in apply_output(box, act):
                    tree.leaves.append(Leaf(nid, "output", act.label(),
                                            pattern=pattern, poly=poly, bit=bit))
        except ExecutionError as e:
            tree.error = f"node {nid} ({act.label()}): {e}"
            break
    return tree


def check_conservation(tree: KwhTree) -> list[int]:
    """Ids of nodes whose row polynomials do not sum to X00+X01+X10+X11."""
    return [n.id for n in tree.nodes if n.box.total() != TOTAL]


# -- figure view -----------------------------------------------------------

SILENT = {"hide", "branch", "goto"}


@dataclass
class FigureView:
    """The tree as drawn in KWH diagrams: face-down bookkeeping removed.

    Nodes joined by re-hiding turns, branch jumps and gotos are merged
    into one box (they hold the same card sequences); the remaining
    edges are shuffles, perms, revealing turns and results.
    """

    root: str
    boxes: dict[str, dict[str, ProbPoly]]
    edges: list[tuple[str, str, str | None, Fraction | None, str]]
    leaves: list[str]
    back: set[int] = field(default_factory=set)  # indices into edges


def figure_view(tree: KwhTree) -> FigureView:
    parent = list(range(len(tree.nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for e in tree.edges:
        if e.kind in SILENT:
            ra, rb = find(e.src), find(e.dst)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    name = {}
    boxes: dict[str, dict[str, ProbPoly]] = {}
    for node in tree.nodes:
        r = find(node.id)
        cid = name.setdefault(r, f"n{r}")
        rows = node.box.face_rows()
        if cid in boxes and boxes[cid] != rows:
            raise AssertionError(f"merged nodes disagree on rows in {cid}")
        boxes[cid] = rows
    edges = []
    for e in tree.edges:
        if e.kind in SILENT:
            continue
        if e.kind == "reveal":
            edges.append((name[find(e.src)], e.label, e.pattern, e.prob,
                          name[find(e.dst)]))
        else:
            edges.append((name[find(e.src)], e.label, None, None, name[find(e.dst)]))
    leaves = []
    for i, leaf in enumerate(tree.leaves):
        lid = f"leaf{i}"
        leaves.append(lid)
        edges.append((name[find(leaf.node)], leaf.label, leaf.pattern, None, lid))

    succ = defaultdict(list)
    for src, _, _, _, dst in edges:
        succ[src].append(dst)
    order = {cid: int(cid[1:]) for cid in boxes}
    back = {i for i, (src, _, _, _, dst) in enumerate(edges)
            if dst in order and order[dst] <= order[src] and _reaches(succ, dst, src)}
    return FigureView(name[find(tree.root)], boxes, edges, leaves, back)


def compare_figure(view: FigureView, fixture: Mapping) -> list[str]:
    """Structural comparison against a transcribed figure.

    ``fixture`` has ``root``, ``boxes`` (name -> {faces: poly text}),
    ``edges`` (dicts with src, label, dst and optional pattern/prob) and
    ``leaves``.  Returns human-readable mismatches; empty means equal.
    """
    from .symbolic import parse_poly

    fx_boxes = {k: {s: parse_poly(p) for s, p in rows.items()} for k, rows in fixture["boxes"].items()}
    fx_leaves = set(fixture["leaves"])
    fx_out = defaultdict(dict)
    for e in fixture["edges"]:
        prob = Fraction(e["prob"]) if e.get("prob") is not None else None
        fx_out[e["src"]][(e["label"], e.get("pattern"))] = (prob, e["dst"])
    v_out = defaultdict(dict)
    for src, label, pattern, prob, dst in view.edges:
        key = (label, pattern)
        if key in v_out[src]:
            return [f"ambiguous edge {key} out of {src}"]
        v_out[src][key] = (prob, dst)
    v_leaves = set(view.leaves)

    problems = []
    mapping = {fixture["root"]: view.root}
    reverse = {view.root: fixture["root"]}
    queue = deque([fixture["root"]])
    while queue:
        f = queue.popleft()
        v = mapping[f]
        if (f in fx_leaves) != (v in v_leaves):
            problems.append(f"{f}: leaf/box mismatch")
            continue
        if f not in fx_leaves and fx_boxes.get(f) != view.boxes.get(v):
            problems.append(f"{f}: rows differ: expected {fx_boxes.get(f)}, got {view.boxes.get(v)}")
        if set(fx_out[f]) != set(v_out[v]):
            problems.append(f"{f}: out-edges differ: expected {sorted(fx_out[f], key=str)}, "
                            f"got {sorted(v_out[v], key=str)}")
            continue
        for key, (prob, fdst) in fx_out[f].items():
            vprob, vdst = v_out[v][key]
            if prob != vprob:
                problems.append(f"{f} {key}: probability {vprob}, expected {prob}")
            if fdst in mapping:
                if mapping[fdst] != vdst:
                    problems.append(f"{f} {key}: leads to a different node than {fdst}")
            elif vdst in reverse:
                problems.append(f"{f} {key}: {fdst} maps onto already matched {reverse[vdst]}")
            else:
                mapping[fdst] = vdst
                reverse[vdst] = fdst
                queue.append(fdst)
    all_fx = set(fx_boxes) | fx_leaves
    all_v = set(view.boxes) | v_leaves
    if not problems:
        if set(mapping) != all_fx:
            problems.append(f"unreached fixture nodes: {sorted(all_fx - set(mapping))}")
        if set(reverse) != all_v:
            problems.append(f"generated nodes absent from the figure: {sorted(all_v - set(reverse))}")
    return problems
