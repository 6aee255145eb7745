"""Exact coefficient arithmetic.

Everything downstream computes over Q(i, sqrt(d)) for a single squarefree
d fixed per computation context (d is the squarefree part of r when working
with the order-r Lax operator; d = 1 degenerates to the Gaussian rationals).
Rationals are stdlib ``fractions.Fraction`` (always reduced, positive
denominator).  This module also provides the classical number sequences
(Bernoulli numbers and polynomials, Stirling-type gamma numbers) and the
tau-polynomial coefficient functions s_l used by the characteristic-class
machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

Rational = Fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)


def squarefree_part(n: int) -> tuple[int, int]:
    """Split n > 0 as s^2 * d with d squarefree; returns (d, s)."""
    if n <= 0:
        raise ValueError(f"need a positive integer, got {n}")
    d, s = n, 1
    k = 2
    while k * k <= d:
        while d % (k * k) == 0:
            d //= k * k
            s *= k
        k += 1
    return d, s


class AlgScalar:
    """An element a + b*i + c*sqrt(d) + e*i*sqrt(d) of Q(i, sqrt(d)).

    d is a fixed positive squarefree integer.  Values with c = e = 0 live in
    Q(i) and are compatible with any d (their d is normalised to 1); mixing
    two genuinely different extensions is an error.  Instances are immutable
    and hashable; equality is componentwise.
    """

    __slots__ = ("a", "b", "c", "e", "d")

    def __init__(self, a, b=0, c=0, e=0, d=1):
        a = Fraction(a)
        b = Fraction(b)
        c = Fraction(c)
        e = Fraction(e)
        if d == 1:
            a, c = a + c, _ZERO
            b, e = b + e, _ZERO
        elif c == 0 and e == 0:
            d = 1
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "d", d)

    def __setattr__(self, *args):
        raise AttributeError("AlgScalar is immutable")

    # -- context handling -------------------------------------------------

    @staticmethod
    def _join(x: "AlgScalar", y: "AlgScalar") -> int:
        if x.d == y.d:
            return x.d
        if x.d == 1:
            return y.d
        if y.d == 1:
            return x.d
        raise ValueError(f"mixed quadratic extensions: sqrt({x.d}) vs sqrt({y.d})")

    @staticmethod
    def coerce(value, d: int = 1) -> "AlgScalar":
        if isinstance(value, AlgScalar):
            return value
        return AlgScalar(Fraction(value), 0, 0, 0, d)

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not (self.a or self.b or self.c or self.e)

    def is_rational(self) -> bool:
        return not (self.b or self.c or self.e)

    def rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"not rational: {self}")
        return self.a

    def __bool__(self) -> bool:
        return not self.is_zero()

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = AlgScalar.coerce(other)
        d = AlgScalar._join(self, other)
        return AlgScalar(self.a + other.a, self.b + other.b,
                         self.c + other.c, self.e + other.e, d)

    __radd__ = __add__

    def __neg__(self):
        return AlgScalar(-self.a, -self.b, -self.c, -self.e, self.d)

    def __sub__(self, other):
        return self + (-AlgScalar.coerce(other))

    def __rsub__(self, other):
        return AlgScalar.coerce(other) + (-self)

    def __mul__(self, other):
        other = AlgScalar.coerce(other)
        d = AlgScalar._join(self, other)
        a1, b1, c1, e1 = self.a, self.b, self.c, self.e
        a2, b2, c2, e2 = other.a, other.b, other.c, other.e
        if not (c1 or e1 or c2 or e2):
            # Q(i) fast path
            return AlgScalar(a1 * a2 - b1 * b2, a1 * b2 + b1 * a2, 0, 0, 1)
        # i^2 = -1, sqrt(d)^2 = d, (i sqrt(d))^2 = -d
        a = a1 * a2 - b1 * b2 + d * (c1 * c2 - e1 * e2)
        b = a1 * b2 + b1 * a2 + d * (c1 * e2 + e1 * c2)
        c = a1 * c2 + c1 * a2 - (b1 * e2 + e1 * b2)
        e = a1 * e2 + e1 * a2 + b1 * c2 + c1 * b2
        return AlgScalar(a, b, c, e, d)

    __rmul__ = __mul__

    def conj_i(self):
        return AlgScalar(self.a, -self.b, self.c, -self.e, self.d)

    def conj_sqrt(self):
        return AlgScalar(self.a, self.b, -self.c, -self.e, self.d)

    def inverse(self) -> "AlgScalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero AlgScalar")
        if self.is_rational():
            return AlgScalar(1 / self.a)
        w = self.conj_i() * self.conj_sqrt() * self.conj_i().conj_sqrt()
        norm = self * w
        if not norm.is_rational():
            raise AssertionError("norm of AlgScalar must be rational")
        return w * AlgScalar(1 / norm.a)

    def __truediv__(self, other):
        return self * AlgScalar.coerce(other).inverse()

    def __rtruediv__(self, other):
        return AlgScalar.coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "AlgScalar":
        if n < 0:
            return self.inverse() ** (-n)
        result = AlgScalar(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparisons / hashing ----------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = AlgScalar(other)
        if not isinstance(other, AlgScalar):
            return NotImplemented
        if (self.c or self.e) and (other.c or other.e) and self.d != other.d:
            return False
        return (self.a, self.b, self.c, self.e) == (other.a, other.b, other.c, other.e)

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.e))

    def sort_key(self):
        return (self.a, self.b, self.c, self.e)

    def __repr__(self):
        return f"AlgScalar({self.a}, {self.b}, {self.c}, {self.e}, d={self.d})"

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for coef, unit in ((self.a, ""), (self.b, "i"),
                           (self.c, f"sqrt({self.d})"), (self.e, f"i*sqrt({self.d})")):
            if not coef:
                continue
            if not unit:
                parts.append(str(coef))
            elif coef == 1:
                parts.append(unit)
            elif coef == -1:
                parts.append(f"-{unit}")
            else:
                parts.append(f"{coef}*{unit}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- serialization -------------------------------------------------------

    def to_json(self):
        return [str(self.a), str(self.b), str(self.c), str(self.e)]

    @staticmethod
    def from_json(data, d: int = 1) -> "AlgScalar":
        a, b, c, e = (Fraction(x) for x in data)
        return AlgScalar(a, b, c, e, d)


def imaginary_unit() -> AlgScalar:
    return AlgScalar(0, 1)


def sqrt_minus(r: int) -> AlgScalar:
    """The fixed branch sqrt(-r) := i*sqrt(r) with sqrt(r) > 0."""
    d, s = squarefree_part(r)
    if d == 1:
        return AlgScalar(0, s)
    return AlgScalar(0, 0, 0, s, d)


def minus_r_half_power(r: int, m: int) -> AlgScalar:
    """(-r)^(m/2) computed as (i*sqrt(r))^m; m may be any integer."""
    return sqrt_minus(r) ** m


# -- Bernoulli numbers and polynomials ----------------------------------------


@lru_cache(maxsize=None)
def bernoulli_number(l: int) -> Fraction:
    """B_l with the B_1 = -1/2 convention (B_l := B_l(0))."""
    if l < 0:
        raise ValueError("Bernoulli index must be >= 0")
    if l == 0:
        return _ONE
    # sum_{j=0}^{l} C(l+1, j) B_j = 0 for l >= 1
    acc = _ZERO
    for j in range(l):
        acc += math.comb(l + 1, j) * bernoulli_number(j)
    return -acc / (l + 1)


def bernoulli_poly(l: int, x: Fraction) -> Fraction:
    """B_l(x) from the generating series t e^{xt}/(e^t - 1)."""
    if l < 0:
        raise ValueError("Bernoulli index must be >= 0")
    x = Fraction(x)
    return sum((math.comb(l, k) * bernoulli_number(k) * x ** (l - k)
                for k in range(l + 1)), start=_ZERO)


@lru_cache(maxsize=None)
def stirling_gamma(l: int, k: int) -> Fraction:
    """gamma(l, k) defined by sum_l gamma(l,k) z^l/l! = (e^z - 1)^k / k!.

    These are the Stirling numbers of the second kind; gamma(l, k) = 0
    for k > l.
    """
    if l < 0 or k < 0:
        raise ValueError("indices must be >= 0")
    if k == 0:
        return _ONE if l == 0 else _ZERO
    if k > l:
        return _ZERO
    # gamma(l+1, k) = k*gamma(l, k) + gamma(l, k-1)
    return k * stirling_gamma(l - 1, k) + stirling_gamma(l - 1, k - 1)


# -- the coefficient functions s_l(t) ------------------------------------------


@dataclass(frozen=True)
class SCoeffRep:
    """s_l as an exact polynomial in tau = t/(1-t).

    ``tau_coeffs[k]`` is the coefficient of tau^k; for l = 0 the function is
    -log(1-t), carried only as the ``logarithmic`` flag.
    """

    l: int
    tau_coeffs: tuple[Fraction, ...]
    logarithmic: bool = False

    def degree(self) -> int:
        return len(self.tau_coeffs) - 1


def s_coefficient(l: int) -> SCoeffRep:
    """s_l = B_l/l + (-1)^l sum_{k=1}^{l} (k-1)! tau^k gamma(l, k) for l >= 1."""
    if l < 0:
        raise ValueError("index must be >= 0")
    if l == 0:
        return SCoeffRep(0, (), logarithmic=True)
    coeffs = [_ZERO] * (l + 1)
    coeffs[0] = bernoulli_number(l) / l
    sign = 1 if l % 2 == 0 else -1
    for k in range(1, l + 1):
        coeffs[k] = sign * math.factorial(k - 1) * stirling_gamma(l, k)
    return SCoeffRep(l, tuple(coeffs))


def evaluate_s(rep: SCoeffRep, t: Fraction) -> Fraction:
    """Evaluate s_l at a rational t != 1 (pole of tau = t/(1-t))."""
    t = Fraction(t)
    if t == 1:
        raise ValueError("s_l has a pole at t = 1")
    if rep.logarithmic:
        raise ValueError("s_0 is logarithmic and has no rational closed form")
    tau = t / (1 - t)
    acc = _ZERO
    for k in range(rep.degree(), -1, -1):
        acc = acc * tau + rep.tau_coeffs[k]
    return acc
