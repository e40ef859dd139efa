"""Flat integer encoding of a protocol for the trial kernels.

Each action becomes one row ``(op, a, b, c)`` of ``code``:

    SHUFFLE  a = first row in perms/cum, b = count
    PERM     a = row in perms
    TURN     a = first entry in tpos, b = count, c = turn index
    BRANCH   a = first row in arms, b = count, c = default pc or -1
    GOTO     a = target pc
    RESULT   a, b = 0-based positions
    OUTPUT   a = first row in arms, b = count, c = default bit or -1

Visible states are coded base 3 (digit i: 0 club, 1 heart, 2 face down).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dsl import Branch, Goto, Output, Perm, ProtocolAst, Result, Shuffle, Turn

SHUFFLE, PERM, TURN, BRANCH, GOTO, RESULT, OUTPUT = range(7)

# 3**10 outcome cells per turn keeps the counters small
MAX_CARDS = 10
_DIGIT = {"C": 0, "H": 1, "?": 2}
_LETTER = "CH?"


def encode_pattern(pattern: str) -> int:
    return sum(_DIGIT[ch] * 3 ** i for i, ch in enumerate(pattern))


def decode_pattern(code: int, n: int) -> str:
    out = []
    for _ in range(n):
        code, d = divmod(code, 3)
        out.append(_LETTER[d])
    return "".join(out)


@dataclass(frozen=True, eq=False)
class Bytecode:
    n: int
    code: np.ndarray   # int64 (L, 4)
    perms: np.ndarray  # int64 (P, n), destination images
    cum: np.ndarray    # uint64 (P,), cumulative integer weights per shuffle
    arms: np.ndarray   # int64 (A, 2), (pattern code or bit, target)
    tpos: np.ndarray   # int64 (K,)
    turn_pcs: tuple[int, ...]

    @property
    def ncodes(self) -> int:
        return 3 ** self.n


def compile_protocol(ast: ProtocolAst) -> Bytecode:
    n = ast.n
    if n > MAX_CARDS:
        raise ValueError(f"the simulator supports decks of at most {MAX_CARDS} cards")
    program = ast.program()
    code, perms, cum, arms, tpos, turn_pcs = [], [], [], [], [], []
    for pc, act in enumerate(program.actions):
        if isinstance(act, Shuffle):
            denom = math.lcm(*(w.denominator for _, w in act.entries))
            if denom >= 1 << 62:
                raise ValueError("shuffle weights need a common denominator below 2**62")
            code.append((SHUFFLE, len(perms), len(act.entries), 0))
            total = 0
            for p, w in act.entries:
                total += int(w * denom)
                perms.append([p(i + 1) - 1 for i in range(n)])
                cum.append(total)
        elif isinstance(act, Perm):
            code.append((PERM, len(perms), 1, 0))
            perms.append([act.perm(i + 1) - 1 for i in range(n)])
            cum.append(1)
        elif isinstance(act, Turn):
            code.append((TURN, len(tpos), len(act.positions), len(turn_pcs)))
            tpos.extend(p - 1 for p in act.positions)
            turn_pcs.append(pc)
        elif isinstance(act, Branch):
            default = -1 if act.default is None else program.pc_of(act.default)
            code.append((BRANCH, len(arms), len(act.arms), default))
            arms.extend((encode_pattern(pat), program.pc_of(lbl)) for pat, lbl in act.arms)
        elif isinstance(act, Goto):
            code.append((GOTO, program.pc_of(act.target), 0, 0))
        elif isinstance(act, Result):
            code.append((RESULT, act.x - 1, act.y - 1, 0))
        elif isinstance(act, Output):
            default = -1 if act.default is None else act.default
            code.append((OUTPUT, len(arms), len(act.arms), default))
            arms.extend((encode_pattern(pat), bit) for pat, bit in act.arms)
        else:  # pragma: no cover
            raise TypeError(f"unknown action {act!r}")
    return Bytecode(
        n=n,
        code=np.array(code, dtype=np.int64).reshape(-1, 4),
        perms=np.array(perms, dtype=np.int64).reshape(-1, n),
        cum=np.array(cum, dtype=np.uint64),
        arms=np.array(arms, dtype=np.int64).reshape(-1, 2),
        tpos=np.array(tpos, dtype=np.int64),
        turn_pcs=tuple(turn_pcs),
    )
