"""Exact absorbing Markov chain computations over rationals."""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence


class DivergenceError(ArithmeticError):
    """Some reachable state cannot reach an absorbing state."""


def solve(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Solve ``a x = b`` exactly by Gauss-Jordan elimination."""
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(rhs)] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [v / p for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def _reachable(trans: Mapping[int, Sequence[tuple[int, Fraction]]], start: int) -> list[int]:
    seen, order, todo = {start}, [start], [start]
    while todo:
        u = todo.pop()
        for v, _ in trans.get(u, ()):
            if v not in seen:
                seen.add(v)
                order.append(v)
                todo.append(v)
    return sorted(order)


def check_absorbing(trans: Mapping[int, Sequence[tuple[int, Fraction]]], start: int) -> None:
    """Raise :class:`DivergenceError` unless absorption is certain."""
    states = _reachable(trans, start)
    pred: dict[int, list[int]] = {s: [] for s in states}
    for u in states:
        for v, p in trans.get(u, ()):
            if p > 0:
                pred[v].append(u)
    good = {s for s in states if not trans.get(s)}
    todo = list(good)
    while todo:
        v = todo.pop()
        for u in pred[v]:
            if u not in good:
                good.add(u)
                todo.append(u)
    bad = [s for s in states if s not in good]
    if bad:
        raise DivergenceError(f"states {bad} never reach an absorbing state")


def expected_visits(trans: Mapping[int, Sequence[tuple[int, Fraction]]], start: int) -> dict[int, Fraction]:
    """Expected number of visits to every state reachable from ``start``.

    ``trans[u]`` lists ``(v, probability)``; states without transitions
    are absorbing.  Solves ``v = e_start + Q^T v``.
    """
    check_absorbing(trans, start)
    states = _reachable(trans, start)
    idx = {s: i for i, s in enumerate(states)}
    n = len(states)
    a = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for u in states:
        for v, p in trans.get(u, ()):
            a[idx[v]][idx[u]] -= p
    b = [Fraction(int(s == start)) for s in states]
    x = solve(a, b)
    return {s: x[idx[s]] for s in states}


def hitting_probability(trans: Mapping[int, Sequence[tuple[int, Fraction]]], start: int,
                        targets: set[int]) -> Fraction:
    """Probability of ever visiting a state in ``targets``."""
    check_absorbing(trans, start)
    states = _reachable(trans, start)
    idx = {s: i for i, s in enumerate(states)}
    n = len(states)
    a = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    b = [Fraction(0)] * n
    for u in states:
        i = idx[u]
        if u in targets:
            b[i] = Fraction(1)
            continue
        for v, p in trans.get(u, ()):
            a[i][idx[v]] -= p
    return solve(a, b)[idx[start]]
