"""Cards, deck sequences and permutation algebra.

Positions are 1-based throughout, as in the protocol notation.  A
permutation ``p`` acts on a sequence with the destination convention:
the card at position ``i`` moves to position ``p(i)``.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Sequence as _Seq


class PermutationError(ValueError):
    pass


class Card(IntEnum):
    CLUB = 0
    HEART = 1

    @property
    def letter(self) -> str:
        return "C" if self is Card.CLUB else "H"

    @property
    def glyph(self) -> str:
        return "♣" if self is Card.CLUB else "♥"

    @classmethod
    def from_letter(cls, ch: str) -> "Card":
        try:
            return {"C": cls.CLUB, "H": cls.HEART, "♣": cls.CLUB, "♥": cls.HEART}[ch]
        except KeyError:
            raise ValueError(f"not a card symbol: {ch!r}") from None


@dataclass(frozen=True, order=True)
class Sequence:
    """An ordered deck state: a face and an orientation per position."""

    faces: tuple[Card, ...]
    up: tuple[bool, ...]

    def __post_init__(self):
        if len(self.faces) != len(self.up) or not self.faces:
            raise ValueError("sequence needs one orientation per card and at least one card")

    @classmethod
    def from_string(cls, text: str, up: Iterable[bool] | None = None) -> "Sequence":
        faces = tuple(Card.from_letter(ch) for ch in text)
        return cls(faces, tuple(up) if up is not None else (False,) * len(faces))

    def __len__(self) -> int:
        return len(self.faces)

    def face_string(self) -> str:
        return "".join(c.letter for c in self.faces)

    def visible(self) -> str:
        return "".join(c.letter if u else "?" for c, u in zip(self.faces, self.up))

    def face_down(self) -> "Sequence":
        return Sequence(self.faces, (False,) * len(self.faces))

    def __str__(self) -> str:
        # face-up cards in lower case
        return "".join(c.letter.lower() if u else c.letter for c, u in zip(self.faces, self.up))


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


@dataclass(frozen=True, order=True)
class Permutation:
    """Bijection on positions 1..n, stored as the tuple of images."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        n = len(self.mapping)
        if sorted(self.mapping) != list(range(1, n + 1)):
            raise PermutationError(f"not a bijection on 1..{n}: {self.mapping}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i - 1]

    def is_identity(self) -> bool:
        return all(v == i for i, v in enumerate(self.mapping, 1))

    def cycles(self) -> list[tuple[int, ...]]:
        """Non-trivial cycles, each starting at its smallest element."""
        seen: set[int] = set()
        out = []
        for start in range(1, self.n + 1):
            if start in seen or self(start) == start:
                continue
            cyc = [start]
            seen.add(start)
            j = self(start)
            while j != start:
                cyc.append(j)
                seen.add(j)
                j = self(j)
            out.append(tuple(cyc))
        return out

    def __str__(self) -> str:
        if self.is_identity():
            return "id"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles())

    def __repr__(self) -> str:
        return f"Permutation({self}, n={self.n})"

    def then(self, other: "Permutation") -> "Permutation":
        return compose(self, other)


def parse_cycles(text: str, n: int) -> Permutation:
    """Parse cycle notation such as ``"(1 2)(3 5 4)"`` or ``"id"``."""
    s = text.strip()
    if n < 1:
        raise PermutationError("deck size must be positive")
    if s == "id":
        return Permutation.identity(n)
    if not s:
        raise PermutationError("empty permutation")
    mapping = list(range(1, n + 1))
    used: set[int] = set()
    pos = 0
    for m in _CYCLE_RE.finditer(s):
        if s[pos:m.start()].strip():
            raise PermutationError(f"unexpected text {s[pos:m.start()].strip()!r} in {text!r}")
        pos = m.end()
        body = m.group(1).replace(",", " ").split()
        if len(body) < 2:
            raise PermutationError(f"cycle needs at least two positions in {text!r}")
        try:
            cyc = [int(tok) for tok in body]
        except ValueError:
            raise PermutationError(f"non-integer position in {text!r}") from None
        for v in cyc:
            if not 1 <= v <= n:
                raise PermutationError(f"position {v} out of range 1..{n}")
            if v in used:
                raise PermutationError(f"position {v} repeated in {text!r}")
            used.add(v)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            mapping[a - 1] = b
    if s[pos:].strip() or pos == 0:
        raise PermutationError(f"malformed cycle notation: {text!r}")
    return Permutation(tuple(mapping))


def apply_permutation(seq: Sequence, p: Permutation) -> Sequence:
    if len(seq) != p.n:
        raise PermutationError(f"permutation on {p.n} positions applied to {len(seq)} cards")
    faces: list = [None] * p.n
    up: list = [None] * p.n
    for i, dst in enumerate(p.mapping):
        faces[dst - 1] = seq.faces[i]
        up[dst - 1] = seq.up[i]
    return Sequence(tuple(faces), tuple(up))


def compose(p: Permutation, q: Permutation) -> Permutation:
    """``p`` first, then ``q``."""
    if p.n != q.n:
        raise PermutationError("cannot compose permutations of different sizes")
    return Permutation(tuple(q(p(i)) for i in range(1, p.n + 1)))


def inverse(p: Permutation) -> Permutation:
    inv = [0] * p.n
    for i, v in enumerate(p.mapping, 1):
        inv[v - 1] = i
    return Permutation(tuple(inv))


class ShuffleSpec:
    """A shuffle (set of permutations, distribution), weights exact.

    Entries keep the order they were written in; equality and hashing
    ignore that order.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[tuple[Permutation, Fraction]]):
        entries = tuple((p, Fraction(w)) for p, w in entries)
        if not entries:
            raise ValueError("shuffle needs at least one permutation")
        sizes = {p.n for p, _ in entries}
        if len(sizes) != 1:
            raise ValueError("all permutations of a shuffle must act on the same deck size")
        if len({p for p, _ in entries}) != len(entries):
            raise ValueError("duplicate permutation in shuffle")
        if any(w <= 0 for _, w in entries):
            raise ValueError("shuffle weights must be positive")
        if sum(w for _, w in entries) != 1:
            raise ValueError("weights must sum to 1")
        self.entries = entries

    @classmethod
    def uniform(cls, perms: _Seq[Permutation]) -> "ShuffleSpec":
        w = Fraction(1, len(perms))
        return cls((p, w) for p in perms)

    @property
    def n(self) -> int:
        return self.entries[0][0].n

    @property
    def perms(self) -> tuple[Permutation, ...]:
        return tuple(p for p, _ in self.entries)

    def canonical(self) -> tuple[tuple[Permutation, Fraction], ...]:
        return tuple(sorted(self.entries))

    def __eq__(self, other):
        if not isinstance(other, ShuffleSpec):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def __len__(self):
        return len(self.entries)

    def label(self) -> str:
        """Set notation, e.g. ``{id,(1 3)(2 4)}``; weights shown if non-uniform."""
        if is_uniform(self):
            return "{" + ",".join(str(p) for p in self.perms) + "}"
        return "{" + ",".join(f"{p}:{w}" for p, w in self.entries) + "}"

    def __repr__(self):
        return f"ShuffleSpec({self.label()})"


def is_uniform(spec: ShuffleSpec) -> bool:
    return len({w for _, w in spec.entries}) == 1


def generated_group(perms: Iterable[Permutation]) -> list[Permutation]:
    """Subgroup generated by ``perms`` (BFS closure), sorted by mapping."""
    gens = list(perms)
    if not gens:
        raise ValueError("need at least one permutation")
    ident = Permutation.identity(gens[0].n)
    group = {ident}
    queue = deque([ident])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = compose(g, s)
            if h not in group:
                group.add(h)
                queue.append(h)
    return sorted(group)


def is_closed(perms: Iterable[Permutation]) -> bool:
    """True iff the set is a subgroup of the symmetric group."""
    pset = set(perms)
    if not pset:
        raise ValueError("need at least one permutation")
    n = next(iter(pset)).n
    if Permutation.identity(n) not in pset:
        return False
    return all(compose(p, q) in pset for p in pset for q in pset)
