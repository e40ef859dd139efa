"""Independent reference computations used by the tests.

None of these reuse the package's symbolic engine or its linear solver:
  * groups are closed under products by fixed-point iteration on tuples;
  * protocols are expanded into an explicit Markov chain over concrete
    deck states for one input at a time and solved with sympy.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from fractions import Fraction

import sympy
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from kwhcheck.dsl import Branch, Goto, Output, Perm, Result, Shuffle, Turn

# -- permutation groups on 0-based image tuples ------------------------------


def perm_tuple(p) -> tuple[int, ...]:
    return tuple(p(i + 1) - 1 for i in range(p.n))


def tuple_compose(p, q):
    """``p`` first, then ``q``."""
    return tuple(q[p[i]] for i in range(len(p)))


def brute_group(perms) -> set[tuple[int, ...]]:
    elems = {perm_tuple(p) for p in perms}
    n = len(next(iter(elems)))
    elems.add(tuple(range(n)))
    while True:
        new = {tuple_compose(a, b) for a in elems for b in elems} | elems
        if new == elems:
            return elems
        elems = new


def brute_is_subgroup(perms) -> bool:
    elems = {perm_tuple(p) for p in perms}
    n = len(next(iter(elems)))
    if tuple(range(n)) not in elems:
        return False
    for a in elems:
        inv = tuple(sorted(range(n), key=lambda i: a[i]))
        if inv not in elems:
            return False
        for b in elems:
            if tuple_compose(a, b) not in elems:
                return False
    return True


def permute_string(faces: str, image: tuple[int, ...]) -> str:
    out = [""] * len(faces)
    for i, ch in enumerate(faces):
        out[image[i]] = ch
    return "".join(out)


# -- explicit chain over concrete deck states --------------------------------


def deal(ast, a: int, b: int) -> str:
    faces = [c.letter for c in ast.deck]
    for com, bit in zip(ast.inputs, (a, b)):
        faces[com.x - 1], faces[com.y - 1] = ("C", "H") if bit == 0 else ("H", "C")
    return "".join(faces)


class ConcreteChain:
    """All reachable (faces, face-up mask, pc) states for one input.

    Transitions carry exact probabilities; terminal states carry the
    output.  Every revealing turn is recorded as an event
    ``(pc, visible pattern)``.
    """

    def __init__(self, ast, a: int, b: int):
        self.program = ast.program()
        acts = self.program.actions
        start = (deal(ast, a, b), (False,) * ast.n, 0)
        self.start = start
        self.trans: dict = {}
        self.events: dict = {}      # state -> (pc, pattern) of the reveal made by leaving it
        self.shuffle_states: set = set()
        self.outputs: dict = {}     # terminal state -> bit or None
        todo = [start]
        seen = {start}
        while todo:
            s = todo.pop()
            faces, up, pc = s
            act = acts[pc]
            nxt: list = []
            if isinstance(act, Shuffle):
                self.shuffle_states.add(s)
                for p, w in act.entries:
                    nxt.append(((permute_string(faces, perm_tuple(p)), up, pc + 1), w))
            elif isinstance(act, Perm):
                nxt.append(((permute_string(faces, perm_tuple(act.perm)), up, pc + 1), Fraction(1)))
            elif isinstance(act, Turn):
                new_up = list(up)
                for q in act.positions:
                    new_up[q - 1] = not new_up[q - 1]
                if any(not up[q - 1] for q in act.positions):
                    vis = "".join(f if u else "?" for f, u in zip(faces, new_up))
                    self.events[s] = (pc, vis)
                nxt.append(((faces, tuple(new_up), pc + 1), Fraction(1)))
            elif isinstance(act, Branch):
                vis = "".join(f if u else "?" for f, u in zip(faces, up))
                nxt.append(((faces, up, self.program.pc_of(act.target(vis))), Fraction(1)))
            elif isinstance(act, Goto):
                nxt.append(((faces, up, self.program.pc_of(act.target)), Fraction(1)))
            elif isinstance(act, Result):
                pair = faces[act.x - 1] + faces[act.y - 1]
                self.outputs[s] = {"CH": 0, "HC": 1}.get(pair)
            elif isinstance(act, Output):
                self.outputs[s] = act.bit(faces)
            merged = defaultdict(Fraction)
            for t, w in nxt:
                merged[t] += w
            self.trans[s] = dict(merged)
            for t in merged:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        self.states = sorted(seen)
        self._visits = None

    def _solve(self, rhs_of):
        """Solve ``x = rhs + Q x`` (x indexed by state) with sympy's exact QQ domain."""
        idx = {s: i for i, s in enumerate(self.states)}
        n = len(self.states)
        rows = [[QQ(0)] * n for _ in range(n)]
        for s in self.states:
            i = idx[s]
            rows[i][i] += QQ(1)
            for t, w in self.trans[s].items():
                rows[i][idx[t]] -= QQ(w.numerator, w.denominator)
        a = DomainMatrix(rows, (n, n), QQ)
        b = DomainMatrix([[QQ(Fraction(rhs_of(s)).numerator, Fraction(rhs_of(s)).denominator)]
                          for s in self.states], (n, 1), QQ)
        x = a.lu_solve(b).to_Matrix()
        return {s: Fraction(int(sympy.fraction(x[idx[s]])[0]), int(sympy.fraction(x[idx[s]])[1]))
                for s in self.states}

    def expected(self, weight) -> Fraction:
        """Expected total of ``weight(state)`` collected before absorption."""
        return self._solve(weight)[self.start]

    def probability(self, hit) -> Fraction:
        """Probability of ever entering a state satisfying ``hit``."""
        idx = {s: i for i, s in enumerate(self.states)}
        n = len(self.states)
        rows = [[QQ(0)] * n for _ in range(n)]
        rhs = []
        for s in self.states:
            i = idx[s]
            rows[i][i] += QQ(1)
            if hit(s):
                rhs.append([QQ(1)])
                continue
            rhs.append([QQ(0)])
            for t, w in self.trans[s].items():
                rows[i][idx[t]] -= QQ(w.numerator, w.denominator)
        x = DomainMatrix(rows, (n, n), QQ).lu_solve(DomainMatrix(rhs, (n, 1), QQ)).to_Matrix()
        num, den = sympy.fraction(x[idx[self.start]])
        return Fraction(int(num), int(den))

    def expected_reveals(self) -> Fraction:
        return self.expected(lambda s: 1 if s in self.events else 0)

    def expected_shuffles(self) -> Fraction:
        return self.expected(lambda s: 1 if s in self.shuffle_states else 0)

    def prob_any_reveal(self) -> Fraction:
        return self.probability(lambda s: s in self.events)

    def expected_event(self, event) -> Fraction:
        return self.expected(lambda s: 1 if self.events.get(s) == event else 0)

    def event_kinds(self) -> set:
        return set(self.events.values())

    def transcript_distribution(self) -> dict:
        """Probability of each sequence of revealed patterns (acyclic chains only)."""
        dist: dict = defaultdict(Fraction)

        def walk(s, seen, prob, transcript):
            if s in seen:
                raise ValueError("chain has a cycle")
            if s in self.events:
                transcript = transcript + (self.events[s],)
            if not self.trans[s]:
                dist[transcript] += prob
                return
            for t, w in self.trans[s].items():
                walk(t, seen | {s}, prob * w, transcript)

        walk(self.start, frozenset(), Fraction(1), ())
        return dict(dist)

    def output_distribution(self) -> dict:
        dist: dict = defaultdict(Fraction)
        for s, bit in self.outputs.items():
            dist[bit] += self.probability(lambda t, s=s: t == s)
        return dict(dist)


# -- the five-card trick by direct enumeration -------------------------------


def five_card_trick_views(ast):
    """Final sequence -> {input: probability}, over 4 inputs x 5 rotations."""
    shuffle = next(a for a in ast.program().actions if isinstance(a, Shuffle))
    perm = next(a for a in ast.program().actions if isinstance(a, Perm))
    views: dict = defaultdict(lambda: defaultdict(Fraction))
    for a, b in itertools.product((0, 1), repeat=2):
        faces = permute_string(deal(ast, a, b), perm_tuple(perm.perm))
        for p, w in shuffle.entries:
            views[permute_string(faces, perm_tuple(p))][(a, b)] += w
    return {k: dict(v) for k, v in views.items()}


def hearts_adjacent(seq: str) -> bool:
    n = len(seq)
    return any(seq[i] == "H" and seq[(i + 1) % n] == "H" for i in range(n))
