# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial kernel; bit-for-bit the same walk as ``_vm_py``."""
from libc.stdint cimport int64_t, uint64_t

cdef enum:
    MAXN = 16

cdef enum:
    SHUFFLE, PERM, TURN, BRANCH, GOTO, RESULT, OUTPUT

cdef enum:
    OK, BUDGET, NO_OUTPUT, STUCK

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def run_trials(const int64_t[:, ::1] code, const int64_t[:, ::1] perms,
               const uint64_t[::1] cum, const int64_t[:, ::1] arms,
               const int64_t[::1] tpos, const int64_t[::1] faces0,
               uint64_t key, int64_t t0, int64_t t1, int64_t budget,
               int64_t[:, ::1] out, int64_t[:, ::1] counts):
    cdef Py_ssize_t n = faces0.shape[0], ncode = code.shape[0]
    cdef int64_t faces[MAXN]
    cdef int64_t moved[MAXN]
    cdef int64_t pow3[MAXN]
    cdef char up[MAXN]
    cdef int64_t t, pc, steps, reveals, shuffles, status, value, vis, target
    cdef int64_t op, a, b, c, i, j, k, p
    cdef uint64_t state, d, threshold, r, v
    cdef bint revealing, faceup
    if n > MAXN:
        raise ValueError("deck too large for the compiled kernel")
    pow3[0] = 1
    for i in range(1, n):
        pow3[i] = pow3[i - 1] * 3
    with nogil:
        for t in range(t0, t1):
            state = mix64((key ^ <uint64_t>t) + GOLDEN)
            for i in range(n):
                faces[i] = faces0[i]
                up[i] = 0
            pc = 0
            steps = 0
            reveals = 0
            shuffles = 0
            status = OK
            value = -1
            while True:
                if steps >= budget:
                    status = BUDGET
                    break
                steps += 1
                if pc < 0 or pc >= ncode:
                    status = STUCK
                    value = pc
                    break
                op = code[pc, 0]
                a = code[pc, 1]
                b = code[pc, 2]
                c = code[pc, 3]
                if op == SHUFFLE or op == PERM:
                    faceup = False
                    for i in range(n):
                        if up[i]:
                            faceup = True
                    if faceup:
                        status = STUCK
                        value = pc
                        break
                    j = a
                    if op == SHUFFLE:
                        shuffles += 1
                        d = cum[a + b - 1]
                        threshold = (0 - d) % d
                        while True:
                            state = state + GOLDEN
                            r = mix64(state)
                            if r >= threshold:
                                break
                        v = r % d
                        while v >= cum[j]:
                            j += 1
                    for i in range(n):
                        moved[perms[j, i]] = faces[i]
                    for i in range(n):
                        faces[i] = moved[i]
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
                        counts[c, vis] += 1
                    pc += 1
                elif op == BRANCH:
                    vis = 0
                    for i in range(n):
                        vis += (faces[i] if up[i] else 2) * pow3[i]
                    target = c
                    for k in range(a, a + b):
                        if arms[k, 0] == vis:
                            target = arms[k, 1]
                            break
                    if target < 0:
                        status = STUCK
                        value = pc
                        break
                    pc = target
                elif op == GOTO:
                    pc = a
                elif op == RESULT:
                    if faces[a] == 0 and faces[b] == 1:
                        value = 0
                    elif faces[a] == 1 and faces[b] == 0:
                        value = 1
                    else:
                        status = NO_OUTPUT
                    break
                else:
                    vis = 0
                    for i in range(n):
                        vis += faces[i] * pow3[i]
                    value = c
                    for k in range(a, a + b):
                        if arms[k, 0] == vis:
                            value = arms[k, 1]
                            break
                    if value < 0:
                        status = NO_OUTPUT
                    break
            out[t - t0, 0] = value
            out[t - t0, 1] = reveals
            out[t - t0, 2] = shuffles
            out[t - t0, 3] = status
