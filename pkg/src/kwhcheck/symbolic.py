"""Exact probability polynomials over the four input symbols.

A :class:`ProbPoly` is a non-negative rational combination of
``X00, X01, X10, X11``, the probabilities of the input pair ``(a, b)``.
``X0`` (the three AND-false symbols) and ``X1`` (= ``X11``) are only
rendering shorthands.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

Rational = Fraction

SYMBOLS = ("X00", "X01", "X10", "X11")
_ZERO = Fraction(0)


@dataclass(frozen=True)
class ProbPoly:
    # dense coefficient vector in SYMBOLS order; zeros are canonical
    values: tuple[Fraction, Fraction, Fraction, Fraction] = (_ZERO, _ZERO, _ZERO, _ZERO)

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if len(vals) != 4:
            raise ValueError("a polynomial has exactly four coefficients")
        if any(v < 0 for v in vals):
            raise ValueError(f"negative coefficient in {vals}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def symbol(cls, name: str, coeff=1) -> "ProbPoly":
        vals = [_ZERO] * 4
        vals[SYMBOLS.index(name)] = Fraction(coeff)
        return cls(tuple(vals))

    @classmethod
    def from_coeffs(cls, coeffs: Mapping[str, Fraction]) -> "ProbPoly":
        vals = [_ZERO] * 4
        for k, v in coeffs.items():
            vals[SYMBOLS.index(k)] += Fraction(v)
        return cls(tuple(vals))

    @classmethod
    def total(cls) -> "ProbPoly":
        one = Fraction(1)
        return cls((one, one, one, one))

    @property
    def coeffs(self) -> dict[str, Fraction]:
        return {s: v for s, v in zip(SYMBOLS, self.values) if v}

    @property
    def x0(self) -> Fraction:
        return sum(self.values[:3], _ZERO)

    @property
    def x1(self) -> Fraction:
        return self.values[3]

    def is_zero(self) -> bool:
        return not any(self.values)

    def __add__(self, other: "ProbPoly") -> "ProbPoly":
        return poly_add(self, other)

    def __mul__(self, c) -> "ProbPoly":
        return poly_scale(self, Fraction(c))

    __rmul__ = __mul__

    def __str__(self) -> str:
        return render_poly(self)


ZERO = ProbPoly()
TOTAL = ProbPoly.total()


def poly_add(a: ProbPoly, b: ProbPoly) -> ProbPoly:
    return ProbPoly(tuple(x + y for x, y in zip(a.values, b.values)))


def poly_scale(a: ProbPoly, c: Fraction) -> ProbPoly:
    c = Fraction(c)
    if c < 0:
        raise ValueError("cannot scale a probability polynomial by a negative number")
    return ProbPoly(tuple(v * c for v in a.values))


def constant_fraction_of_total(a: ProbPoly) -> Fraction | None:
    """``c`` if ``a == c * (X00+X01+X10+X11)``, else ``None``."""
    first = a.values[0]
    if all(v == first for v in a.values):
        return first
    return None


def poly_normalize(a: ProbPoly, c: Fraction) -> ProbPoly:
    c = Fraction(c)
    if c <= 0:
        raise ZeroDivisionError("normalizing constant must be positive")
    return ProbPoly(tuple(v / c for v in a.values))


def evaluate(a: ProbPoly, dist: Mapping[str, Fraction]) -> Fraction:
    """Substitute numeric input probabilities (must sum to 1)."""
    probs = [Fraction(dist.get(s, 0)) for s in SYMBOLS]
    if any(p < 0 for p in probs) or sum(probs) != 1:
        raise ValueError("input distribution must be non-negative and sum to 1")
    return sum((v * p for v, p in zip(a.values, probs)), _ZERO)


def x0_form_fraction(a: ProbPoly) -> Fraction | None:
    """``c`` if ``a == c * X0`` with ``c > 0``."""
    v = a.values
    if v[3] == 0 and v[0] == v[1] == v[2] and v[0] > 0:
        return v[0]
    return None


def x1_form_fraction(a: ProbPoly) -> Fraction | None:
    """``c`` if ``a == c * X1`` with ``c > 0``."""
    v = a.values
    if not any(v[:3]) and v[3] > 0:
        return v[3]
    return None


def _term(coeff: Fraction, name: str) -> str:
    return name if coeff == 1 else f"{coeff} {name}"


def render_poly(a: ProbPoly) -> str:
    v = a.values
    if a.is_zero():
        return "0"
    terms = []
    if v[0] and v[0] == v[1] == v[2]:
        terms.append(_term(v[0], "X0"))
        if v[3]:
            terms.append(_term(v[3], "X1"))
    else:
        terms.extend(_term(c, s) for s, c in zip(SYMBOLS, v) if c)
    return " + ".join(terms)


_TERM_RE = re.compile(r"^\s*(?:(\d+(?:/\d+)?)\s*\*?\s*)?(X00|X01|X10|X11|X0|X1)\s*$")


def parse_poly(text: str) -> ProbPoly:
    """Inverse of :func:`render_poly`; accepts the ``X0``/``X1`` shorthands."""
    if text.strip() == "0":
        return ZERO
    total = ZERO
    for part in text.split("+"):
        m = _TERM_RE.match(part)
        if not m:
            raise ValueError(f"cannot parse polynomial term {part!r}")
        c = Fraction(m.group(1)) if m.group(1) else Fraction(1)
        name = m.group(2)
        if name == "X0":
            term = ProbPoly((c, c, c, _ZERO))
        elif name == "X1":
            term = ProbPoly.symbol("X11", c)
        else:
            term = ProbPoly.symbol(name, c)
        total = total + term
    return total
