"""Truncated Weyl algebra: star product, deformed commutators, f_r maps.

Elements are polynomials in Fourier modes p^alpha_k with |k| <= window and
coefficients polynomial in hbar and eps; the stored form is always normal
ordered (all nonpositive modes to the left, which is canonical because
modes of equal sign commute).  The star product moves the positive modes
of the left factor through the nonpositive modes of the right factor with
the chosen commutation rule:

  standard:  [p^a_k, p^b_j] = i hbar k eta^{ab} delta_{k+j,0}
  deformed:  [p^a_m, p^b_n] = hbar delta_{m+n,0} sum_j eps^j (im)^{j+1} K^{ab}_j

with the deformed constants read off a constant-coefficient hamiltonian
operator (entries sum_j K_j eps^j d_x^{j+1}) rather than hard-coded.
Within the finite window everything is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .diffpoly import PSeries, Ring
from .hamops import HamiltonianOperator
from .reconstruct import DR_DZ_SHIFTS
from .scalars import AlgScalar

Mode = tuple[int, int]  # (alpha, k)


@dataclass(frozen=True)
class StandardRule:
    """[p^a_k, p^b_j] = i hbar k eta^{ab} delta_{k+j,0}."""

    n_fields: int
    eta: tuple[tuple[Fraction, ...], ...]

    @staticmethod
    def from_eta(eta) -> "StandardRule":
        rows = tuple(tuple(Fraction(x) for x in row) for row in eta)
        return StandardRule(len(rows), rows)

    def bracket(self, x: Mode, y: Mode):
        """[(p_x, p_y)] as a list of (hbar_exp, eps_exp, AlgScalar)."""
        (a, k), (b, j) = x, y
        if k + j != 0:
            return []
        coeff = self.eta[a - 1][b - 1]
        if not coeff:
            return []
        return [(1, 0, AlgScalar(0, coeff * k))]


@dataclass(frozen=True)
class DeformedRule:
    """Constants K^{ab}_j of a good-form operator sum_j K_j eps^j d_x^{j+1}."""

    n_fields: int
    constants: tuple[tuple[int, int, int, Fraction], ...]  # (a, b, j, K_j)

    @staticmethod
    def from_operator(K: HamiltonianOperator) -> "DeformedRule":
        consts = []
        n = K.ring.n_fields
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                entry = K.entries[a - 1][b - 1]
                for power, coeff in entry.coeffs.items():
                    for (eps, jets), value in coeff.terms.items():
                        if jets or eps != power - 1:
                            raise ValueError(
                                "operator is not of the constant good form")
                        consts.append((a, b, eps, value.rational()))
        return DeformedRule(n, tuple(sorted(consts)))

    def bracket(self, x: Mode, y: Mode):
        (a, m), (b, n) = x, y
        if m + n != 0:
            return []
        out = []
        im = AlgScalar(0, m)
        for aa, bb, j, const in self.constants:
            if (aa, bb) != (a, b) or not const:
                continue
            out.append((1, j, im ** (j + 1) * const))
        return out


@dataclass(frozen=True)
class WeylContext:
    n_fields: int
    window: int
    d: int = 1


class WeylElement:
    """Normal-ordered polynomial in the modes with hbar/eps coefficients.

    terms: (hbar_exp, eps_exp, pkey) -> AlgScalar with pkey a sorted tuple
    of (alpha, k, power).
    """

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: WeylContext, terms: dict | None = None):
        self.ctx = ctx
        self.terms = {}
        if terms:
            for key, c in terms.items():
                if c:
                    self._check_key(key)
                    self.terms[key] = c

    def _check_key(self, key):
        _, _, pkey = key
        for alpha, k, power in pkey:
            if not 1 <= alpha <= self.ctx.n_fields:
                raise ValueError(f"field index {alpha} out of range")
            if abs(k) > self.ctx.window:
                raise ValueError(f"mode {k} outside window {self.ctx.window}")
            if power < 1:
                raise ValueError("powers must be positive")

    # -- constructors ----------------------------------------------------------------

    @staticmethod
    def zero(ctx: WeylContext) -> "WeylElement":
        return WeylElement(ctx)

    @staticmethod
    def one(ctx: WeylContext) -> "WeylElement":
        return WeylElement(ctx, {(0, 0, ()): AlgScalar(1)})

    @staticmethod
    def mode(ctx: WeylContext, alpha: int, k: int, coeff=1) -> "WeylElement":
        return WeylElement(ctx, {(0, 0, ((alpha, k, 1),)):
                                 AlgScalar.coerce(coeff, ctx.d)})

    @staticmethod
    def from_p_series(ps: PSeries, ctx: WeylContext) -> "WeylElement":
        terms = {}
        for (eps, pkey), c in ps.terms.items():
            terms[(0, eps, pkey)] = c
        return WeylElement(ctx, terms)

    # -- linear structure ---------------------------------------------------------------

    def _add_term(self, key, coeff):
        cur = self.terms.get(key)
        new = coeff if cur is None else cur + coeff
        if new:
            self.terms[key] = new
        elif cur is not None:
            del self.terms[key]

    def __add__(self, other: "WeylElement") -> "WeylElement":
        if self.ctx != other.ctx:
            raise ValueError("window/context mismatch")
        out = WeylElement(self.ctx, dict(self.terms))
        for key, c in other.terms.items():
            out._add_term(key, c)
        return out

    def __neg__(self):
        return WeylElement(self.ctx, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, scalar) -> "WeylElement":
        c = AlgScalar.coerce(scalar, self.ctx.d)
        return WeylElement(self.ctx, {k: v * c for k, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def is_zero(self) -> bool:
        return not self.terms

    def hbar_order(self) -> int:
        return min((h for h, _, _ in self.terms), default=0)

    def classical_limit(self) -> PSeries:
        """Set hbar = 0; the result is a commutative mode polynomial."""
        ring = Ring(self.ctx.n_fields, self.ctx.d)
        ps = PSeries(ring, self.ctx.window)
        for (h, eps, pkey), c in self.terms.items():
            if h == 0:
                ps._add_term((eps, pkey), c)
        return ps

    def render(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for (h, eps, pkey), c in sorted(self.terms.items()):
            factors = []
            if h:
                factors.append("hbar" if h == 1 else f"hbar^{h}")
            if eps:
                factors.append("eps" if eps == 1 else f"eps^{eps}")
            for alpha, k, power in pkey:
                base = f"p{alpha}[{k}]"
                factors.append(base if power == 1 else f"{base}^{power}")
            body = "*".join(factors) or "1"
            chunks.append(f"({c})*{body}")
        return " + ".join(chunks)

    def __repr__(self):
        return f"WeylElement({self.render()})"

    def to_json_dict(self, rule=None) -> dict:
        if rule is None:
            tag = "none"
        elif isinstance(rule, StandardRule):
            tag = "standard"
        elif isinstance(rule, DeformedRule):
            tag = "deformed"
        else:
            tag = str(rule)
        return {
            "N": self.ctx.n_fields,
            "window": self.ctx.window,
            "d": self.ctx.d,
            "rule": tag,
            "terms": [
                {"coeff": c.to_json(), "hbar": h, "eps": eps,
                 "modes": [[a, k, p] for a, k, p in pkey]}
                for (h, eps, pkey), c in sorted(self.terms.items())
            ],
        }


def _split_blocks(pkey):
    """Expand a stored monomial into (nonpositive, positive) factor words."""
    nonpos, pos = [], []
    for alpha, k, power in pkey:
        target = nonpos if k <= 0 else pos
        target.extend([(alpha, k)] * power)
    return tuple(sorted(nonpos, key=lambda m: (m[1], m[0]))), \
        tuple(sorted(pos, key=lambda m: (m[1], m[0])))


def _word_to_pkey(word) -> tuple:
    counts: dict = {}
    for mode in word:
        counts[mode] = counts.get(mode, 0) + 1
    return tuple(sorted((a, k, p) for (a, k), p in counts.items()))


_REORDER_MEMO: dict = {}


def _reorder(pos, nonpos, rule):
    """Normal-order (product of positive modes) x (product of nonpositive).

    Returns {(hbar, eps, nonpos_word, pos_word): AlgScalar}.
    """
    if not pos or not nonpos:
        return {(0, 0, nonpos, pos): AlgScalar(1)}
    key = (rule, pos, nonpos)
    if key in _REORDER_MEMO:
        return _REORDER_MEMO[key]
    x = pos[-1]
    head = pos[:-1]
    out: dict = {}

    def accumulate(target, key2, coeff):
        cur = target.get(key2)
        new = coeff if cur is None else cur + coeff
        if new:
            target[key2] = new
        elif cur is not None:
            del target[key2]

    # x through the whole nonpositive word: commutator terms first
    for s, y in enumerate(nonpos):
        for h, e, c in rule.bracket(x, y):
            reduced = nonpos[:s] + nonpos[s + 1:]
            for (h2, e2, np2, p2), c2 in _reorder(head, reduced, rule).items():
                accumulate(out, (h + h2, e + e2, np2, p2), c * c2)
    # and the fully commuted term with x appended on the right
    for (h2, e2, np2, p2), c2 in _reorder(head, nonpos, rule).items():
        accumulate(out, (h2, e2, np2,
                         tuple(sorted(p2 + (x,), key=lambda m: (m[1], m[0])))), c2)
    _REORDER_MEMO[key] = out
    return out


def weyl_star(a: WeylElement, b: WeylElement, rule) -> WeylElement:
    """The star product under the given commutation rule."""
    if a.ctx != b.ctx:
        raise ValueError("window/context mismatch")
    if rule.n_fields != a.ctx.n_fields:
        raise ValueError("rule and element field counts differ")
    out = WeylElement.zero(a.ctx)
    for (h1, e1, pk1), c1 in a.terms.items():
        np1, pos1 = _split_blocks(pk1)
        for (h2, e2, pk2), c2 in b.terms.items():
            np2, pos2 = _split_blocks(pk2)
            coeff = c1 * c2
            for (hc, ec, np_mid, pos_mid), cmid in _reorder(pos1, np2, rule).items():
                word = np1 + np_mid + pos_mid + pos2
                key = (h1 + h2 + hc, e1 + e2 + ec, _word_to_pkey(word))
                out._add_term(key, coeff * cmid)
    return out


def weyl_commutator(a: WeylElement, b: WeylElement, rule) -> WeylElement:
    return weyl_star(a, b, rule) - weyl_star(b, a, rule)


def f_r_map(r: int, a: WeylElement) -> WeylElement:
    """The isomorphism from the deformed to the standard algebra for r = 4, 5.

    On generators it mirrors the hierarchy-comparison Miura map, e.g.
    f_4(p~^1_n) = p^1_n - (eps^2/96) n^2 p^3_n, extended multiplicatively
    on normal-form monomials (images multiply with the standard star).
    """
    if r not in (4, 5) or r not in DR_DZ_SHIFTS:
        raise ValueError("f_r is defined for r = 4, 5")
    shifts = DR_DZ_SHIFTS[r]
    from .gdhier import eta_matrix

    rule = StandardRule.from_eta(eta_matrix(r))
    ctx = a.ctx

    def image(mode: Mode) -> WeylElement:
        alpha, n = mode
        out = WeylElement.mode(ctx, alpha, n)
        shift = shifts.get(alpha)
        if shift:
            beta, c = shift
            corr = WeylElement(ctx, {(0, 2, ((beta, n, 1),)):
                                     AlgScalar(-c * n * n)})
            out = out + corr
        return out

    result = WeylElement.zero(ctx)
    for (h, eps, pkey), coeff in a.terms.items():
        nonpos, pos = _split_blocks(pkey)
        acc = WeylElement(ctx, {(h, eps, ()): coeff})
        for mode in nonpos + pos:
            acc = weyl_star(acc, image(mode), rule)
        result = result + acc
    return result
