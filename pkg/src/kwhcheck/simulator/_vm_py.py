"""Pure-Python trial kernel; the reference for ``_vm_ext``."""
from __future__ import annotations

from ._bytecode import BRANCH, GOTO, OUTPUT, PERM, RESULT, SHUFFLE, TURN
from ._rng import GOLDEN, MASK, mix64

OK, BUDGET, NO_OUTPUT, STUCK = range(4)


def run_trials(code, perms, cum, arms, tpos, faces0, key, t0, t1, budget, out, counts):
    """Run trials ``t0 .. t1-1`` of one input.

    Row ``t - t0`` of ``out`` receives (bit or stuck pc, reveals, shuffles,
    status); revealing-turn outcomes are added into ``counts``.
    """
    code = code.tolist()
    perms = perms.tolist()
    cum = [int(c) for c in cum]
    arms = arms.tolist()
    tpos = tpos.tolist()
    start = faces0.tolist()
    n = len(start)
    pow3 = [3 ** i for i in range(n)]
    seen: dict[tuple[int, int], int] = {}
    key = int(key)
    for t in range(t0, t1):
        state = mix64((key ^ t) + GOLDEN)
        faces = list(start)
        up = [False] * n
        pc = steps = reveals = shuffles = 0
        status, value = OK, -1
        while True:
            if steps >= budget:
                status = BUDGET
                break
            steps += 1
            if not 0 <= pc < len(code):
                status, value = STUCK, pc
                break
            op, a, b, c = code[pc]
            if op == SHUFFLE or op == PERM:
                if any(up):
                    status, value = STUCK, pc
                    break
                j = a
                if op == SHUFFLE:
                    shuffles += 1
                    d = cum[a + b - 1]
                    threshold = ((1 << 64) - d) % d
                    while True:
                        state = (state + GOLDEN) & MASK
                        r = mix64(state)
                        if r >= threshold:
                            break
                    v = r % d
                    while v >= cum[j]:
                        j += 1
                dest = perms[j]
                moved = [0] * n
                for i in range(n):
                    moved[dest[i]] = faces[i]
                faces = moved
                pc += 1
            elif op == TURN:
                revealing = False
                for k in range(a, a + b):
                    p = tpos[k]
                    if not up[p]:
                        revealing = True
                    up[p] = not up[p]
                if revealing:
                    reveals += 1
                    vis = 0
                    for i in range(n):
                        vis += (faces[i] if up[i] else 2) * pow3[i]
                    seen[c, vis] = seen.get((c, vis), 0) + 1
                pc += 1
            elif op == BRANCH:
                vis = 0
                for i in range(n):
                    vis += (faces[i] if up[i] else 2) * pow3[i]
                target = c
                for k in range(a, a + b):
                    if arms[k][0] == vis:
                        target = arms[k][1]
                        break
                if target < 0:
                    status, value = STUCK, pc
                    break
                pc = target
            elif op == GOTO:
                pc = a
            elif op == RESULT:
                fx, fy = faces[a], faces[b]
                if fx == 0 and fy == 1:
                    value = 0
                elif fx == 1 and fy == 0:
                    value = 1
                else:
                    status = NO_OUTPUT
                break
            else:  # OUTPUT
                vis = 0
                for i in range(n):
                    vis += faces[i] * pow3[i]
                value = c
                for k in range(a, a + b):
                    if arms[k][0] == vis:
                        value = arms[k][1]
                        break
                if value < 0:
                    status = NO_OUTPUT
                break
        row = out[t - t0]
        row[0], row[1], row[2], row[3] = value, reveals, shuffles, status
    for (c, vis), k in seen.items():
        counts[c, vis] += k
