"""Truncated pseudo-differential operator calculus.

A pseudo-differential operator is a Laurent series sum_{n <= m} a_n d_x^n
with differential-polynomial coefficients.  Truncation is explicit-window:
every operator carries the lowest order ``lo`` at which its coefficients
are still trustworthy (``lo = None`` marks a genuinely finite operator,
exact all the way down).  Products intersect windows pessimistically, so a
coefficient is either exact or unavailable, never silently wrong.

The commutation rule is d_x^k o a = sum_l binom(k, l) (d_x^l a) d_x^{k-l}
with the generalized binomial k(k-1)...(k-l+1)/l!, valid for k < 0 as well.
"""

from __future__ import annotations

from fractions import Fraction

from .diffpoly import DiffPoly, Ring


def gen_binom(k: int, l: int) -> Fraction:
    """Generalized binomial coefficient k(k-1)...(k-l+1)/l! for integer k."""
    num = 1
    for s in range(l):
        num *= k - s
    den = 1
    for s in range(2, l + 1):
        den *= s
    return Fraction(num, den)


class PseudoDiffOp:
    """Laurent series in d_x over a differential-polynomial ring.

    coeffs maps order -> DiffPoly for the stored window [lo, top]; orders
    below ``lo`` are unknown (unless lo is None), orders above ``top`` are
    exactly zero.
    """

    __slots__ = ("ring", "top", "lo", "coeffs")

    def __init__(self, ring: Ring, top: int, lo: int | None,
                 coeffs: dict[int, DiffPoly] | None = None):
        if lo is not None and lo > top:
            raise ValueError("empty validity window")
        self.ring = ring
        self.top = top
        self.lo = lo
        self.coeffs = {}
        if coeffs:
            for n, c in coeffs.items():
                if n > top or (lo is not None and n < lo):
                    raise ValueError(f"coefficient at order {n} outside window")
                if not c.is_zero():
                    self.coeffs[n] = c

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def dx(ring: Ring, power: int = 1, coeff=1) -> "PseudoDiffOp":
        c = DiffPoly.const(ring, coeff)
        return PseudoDiffOp(ring, power, None, {power: c})

    @staticmethod
    def from_poly(ring: Ring, f: DiffPoly) -> "PseudoDiffOp":
        return PseudoDiffOp(ring, 0, None, {0: f})

    def coeff(self, n: int) -> DiffPoly:
        if n > self.top:
            return DiffPoly.zero(self.ring)
        if self.lo is not None and n < self.lo:
            raise ValueError(f"order {n} is below the validity window [{self.lo}, {self.top}]")
        return self.coeffs.get(n, DiffPoly.zero(self.ring))

    def restrict(self, lo: int) -> "PseudoDiffOp":
        """Narrow the window from below (coefficients under lo are dropped)."""
        if self.lo is not None and lo < self.lo:
            raise ValueError("cannot widen a truncated window")
        return PseudoDiffOp(self.ring, self.top, lo,
                            {n: c for n, c in self.coeffs.items() if n >= lo})

    # -- ring operations ----------------------------------------------------------

    def __add__(self, other: "PseudoDiffOp") -> "PseudoDiffOp":
        self.ring.check_compatible(other.ring)
        if self.lo is None:
            lo = other.lo
        elif other.lo is None:
            lo = self.lo
        else:
            lo = max(self.lo, other.lo)
        top = max(self.top, other.top)
        out: dict[int, DiffPoly] = {}
        for n, c in self.coeffs.items():
            if lo is None or n >= lo:
                out[n] = c
        for n, c in other.coeffs.items():
            if lo is None or n >= lo:
                s = out.get(n, DiffPoly.zero(self.ring)) + c
                if s.is_zero():
                    out.pop(n, None)
                else:
                    out[n] = s
        return PseudoDiffOp(self.ring, top, lo, out)

    def __neg__(self) -> "PseudoDiffOp":
        return PseudoDiffOp(self.ring, self.top, self.lo,
                            {n: -c for n, c in self.coeffs.items()})

    def __sub__(self, other: "PseudoDiffOp") -> "PseudoDiffOp":
        return self + (-other)

    def scale(self, scalar) -> "PseudoDiffOp":
        return PseudoDiffOp(self.ring, self.top, self.lo,
                            {n: c * scalar for n, c in self.coeffs.items()})

    def __mul__(self, other: "PseudoDiffOp") -> "PseudoDiffOp":
        """Composition; output window is the pessimistic intersection.

        Unknown coefficients of the left factor below its window can feed
        output orders < self.lo + other.top, and symmetrically; both bounds
        are honoured.
        """
        self.ring.check_compatible(other.ring)
        top = self.top + other.top
        if self.lo is None and other.lo is None:
            lo = None
        elif self.lo is None:
            lo = other.lo + self.top
        elif other.lo is None:
            lo = self.lo + other.top
        else:
            lo = max(self.lo + other.top, other.lo + self.top)
        if lo is not None and lo > top:
            raise ValueError("empty validity window in product")
        acc: dict[int, DiffPoly] = {}
        for j, a in self.coeffs.items():
            for k, b in other.coeffs.items():
                if lo is None and j < 0 and not b.is_constant():
                    raise ValueError(
                        "product with negative orders is an infinite series; "
                        "restrict the window first")
                db = b
                l = 0
                while not db.is_zero():
                    if lo is not None and j + k - l < lo:
                        break
                    w = gen_binom(j, l)
                    if w:
                        order = j + k - l
                        term = a * db * w
                        acc[order] = acc.get(order, DiffPoly.zero(self.ring)) + term
                    if j >= 0 and l >= j:
                        break  # finite Leibniz expansion for differential powers
                    db = db.dx()
                    l += 1
        out: dict[int, DiffPoly] = {n: c for n, c in acc.items()
                                    if (lo is None or n >= lo) and not c.is_zero()}
        return PseudoDiffOp(self.ring, top, lo, out)

    def power(self, p: int) -> "PseudoDiffOp":
        if p < 1:
            raise ValueError("power must be >= 1")
        result = None
        base = self
        while p:
            if p & 1:
                result = base if result is None else result * base
            p >>= 1
            if p:
                base = base * base
        return result

    def commutator(self, other: "PseudoDiffOp") -> "PseudoDiffOp":
        return self * other - other * self

    # -- projections ------------------------------------------------------------------

    def plus_part(self) -> "PseudoDiffOp":
        """The differential-operator part (orders >= 0)."""
        if self.lo is not None and self.lo > 0:
            raise ValueError("window does not reach order 0")
        return PseudoDiffOp(self.ring, max(self.top, 0), None,
                            {n: c for n, c in self.coeffs.items() if n >= 0})

    def minus_part(self) -> "PseudoDiffOp":
        if self.lo is not None and self.lo > 0:
            raise ValueError("window does not reach order 0")
        return PseudoDiffOp(self.ring, -1, self.lo,
                            {n: c for n, c in self.coeffs.items() if n < 0})

    def residue(self) -> DiffPoly:
        """The coefficient of d_x^{-1}."""
        return self.coeff(-1)

    def __eq__(self, other):
        if not isinstance(other, PseudoDiffOp):
            return NotImplemented
        return (self.ring == other.ring and self.top == other.top
                and self.lo == other.lo and self.coeffs == other.coeffs)

    def render(self, names=None) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for n in sorted(self.coeffs, reverse=True):
            body = self.coeffs[n].render(names)
            if n == 0:
                parts.append(body)
                continue
            dx = "d_x" if n == 1 else f"d_x^{n}"
            if body == "1":
                parts.append(dx)
            elif body == "-1":
                parts.append(f"-{dx}")
            elif "+" in body or "-" in body[1:]:
                parts.append(f"({body})*{dx}")
            else:
                parts.append(f"{body}*{dx}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        window = f"[{self.lo}, {self.top}]" if self.lo is not None else f"(-inf, {self.top}]"
        return f"PseudoDiffOp({self.render()}; window {window})"

    def to_json_dict(self) -> dict:
        return {
            "top": self.top,
            "window": [self.lo, self.top],
            "coeffs": {str(n): c.to_json_dict()
                       for n, c in sorted(self.coeffs.items())},
        }


def pdo_plus_res(a: PseudoDiffOp) -> tuple[PseudoDiffOp, DiffPoly]:
    """(A_+, res A); the window must include order -1."""
    if a.lo is not None and a.lo > -1:
        raise ValueError("window does not include the residue order -1")
    return a.plus_part(), a.residue()


def pdo_root(a: PseudoDiffOp, m: int, depth: int) -> PseudoDiffOp:
    """The unique S = d_x + sum_{n>=0} s_n d_x^{-n} with S^m = A.

    A must be monic of top order m; ``depth`` counts the coefficients of S
    that are determined (window [2 - depth, 1]).  A's window must cover
    [m - depth + 1, m].
    """
    if m < 1:
        raise ValueError("root degree must be >= 1")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ring = a.ring
    if a.top != m or a.coeff(m) != DiffPoly.const(ring, 1):
        raise ValueError("operator must be monic of top order m")
    if a.lo is not None and a.lo > m - depth + 1:
        raise ValueError(
            f"input window [{a.lo}, {a.top}] too shallow for depth {depth}")
    if m == 1:
        return a.restrict(m - depth + 1)
    s = PseudoDiffOp.dx(ring)
    for t in range(depth - 1):
        # extend the window by one unknown order (set to zero), read off the
        # mismatch at order m - 1 - t, and solve m * s_t = mismatch
        probe = PseudoDiffOp(ring, 1, -t, dict(s.coeffs))
        target_order = m - 1 - t
        mismatch = a.coeff(target_order) - probe.power(m).coeff(target_order)
        new_coeffs = dict(s.coeffs)
        if not mismatch.is_zero():
            new_coeffs[-t] = mismatch / m
        s = PseudoDiffOp(ring, 1, -t, new_coeffs)
    return s


def pdo_frac_power(a: PseudoDiffOp, p: int, m: int, depth: int) -> PseudoDiffOp:
    """(A^{1/m})^p with window tracking; depth refers to the root."""
    return pdo_root(a, m, depth).power(p)


def root_depth_for_residue(p: int, margin: int = 2) -> int:
    """Root depth so that the residue of the p-th power is trustworthy.

    S to depth D gives S^p the window [p + 1 - D, p]; reaching order -1
    needs D >= p + 2.  Over-provisioned by ``margin`` to fail loudly rather
    than return a wrong residue after further compositions.
    """
    return p + 2 + margin
