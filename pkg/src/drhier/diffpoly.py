"""Differential polynomials, local functionals and the Fourier dictionary.

A differential polynomial is a polynomial in jet variables u^alpha_i
(alpha = 1..N fields, i >= 0 the number of x-derivatives) together with a
formal parameter eps carrying degree -1 against deg u^alpha_i = i.  A local
functional is a differential polynomial considered modulo constants and
total x-derivatives; equality of local functionals is decided through the
variational derivative, whose kernel is exactly that quotient.

Representation: sparse dict from monomials to AlgScalar coefficients.  A
monomial is ``(eps_exponent, jets)`` where ``jets`` is a tuple of
``(alpha, order, power)`` triples sorted by (alpha, order); zero
coefficients are never stored.  Coefficients in the underived fields are
polynomial, not formal power series: an operation that would need a series
inverse fails loudly instead of truncating.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .scalars import AlgScalar

Monomial = tuple[int, tuple[tuple[int, int, int], ...]]


class Ring:
    """Context for differential polynomials: field count and scalar extension."""

    __slots__ = ("n_fields", "d")

    def __init__(self, n_fields: int, d: int = 1):
        if n_fields < 1:
            raise ValueError("need at least one field")
        self.n_fields = n_fields
        self.d = d

    def __eq__(self, other):
        return (isinstance(other, Ring)
                and self.n_fields == other.n_fields and self.d == other.d)

    def __hash__(self):
        return hash((self.n_fields, self.d))

    def __repr__(self):
        return f"Ring(n_fields={self.n_fields}, d={self.d})"

    def check_compatible(self, other: "Ring"):
        if self != other:
            raise ValueError(f"ring context mismatch: {self} vs {other}")

    def scalar(self, value) -> AlgScalar:
        return AlgScalar.coerce(value, self.d)


def _mul_jets(j1, j2):
    if not j1:
        return j2
    if not j2:
        return j1
    acc = dict()
    for alpha, order, power in j1:
        acc[(alpha, order)] = power
    for alpha, order, power in j2:
        key = (alpha, order)
        acc[key] = acc.get(key, 0) + power
    return tuple((a, o, p) for (a, o), p in sorted(acc.items()))


def monomial_sort_key(mon: Monomial):
    """Canonical term order: eps exponent, then graded-lex on jet variables."""
    eps, jets = mon
    return (eps, sum(p for _, _, p in jets), jets)


class DiffPoly:
    """Sparse differential polynomial over a fixed ring context."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: Ring, terms: dict | None = None):
        self.ring = ring
        self.terms = terms if terms is not None else {}

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero(ring: Ring) -> "DiffPoly":
        return DiffPoly(ring)

    @staticmethod
    def const(ring: Ring, value) -> "DiffPoly":
        c = ring.scalar(value)
        if not c:
            return DiffPoly(ring)
        return DiffPoly(ring, {(0, ()): c})

    @staticmethod
    def jet(ring: Ring, alpha: int, order: int, power: int = 1, coeff=1) -> "DiffPoly":
        if not 1 <= alpha <= ring.n_fields:
            raise ValueError(f"field index {alpha} out of range 1..{ring.n_fields}")
        if order < 0 or power < 0:
            raise ValueError("order and power must be >= 0")
        c = ring.scalar(coeff)
        if not c:
            return DiffPoly(ring)
        if power == 0:
            return DiffPoly(ring, {(0, ()): c})
        return DiffPoly(ring, {(0, ((alpha, order, power),)): c})

    @staticmethod
    def eps(ring: Ring, k: int = 1, coeff=1) -> "DiffPoly":
        c = ring.scalar(coeff)
        if not c:
            return DiffPoly(ring)
        return DiffPoly(ring, {(k, ()): c})

    def copy(self) -> "DiffPoly":
        return DiffPoly(self.ring, dict(self.terms))

    # -- predicates ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def constant_term(self) -> AlgScalar:
        return self.terms.get((0, ()), self.ring.scalar(0))

    def is_constant(self) -> bool:
        return all(not jets and eps == 0 for eps, jets in self.terms)

    def max_order(self, alpha: int | None = None) -> int:
        orders = [o for _, jets in self.terms for a, o, _ in jets
                  if alpha is None or a == alpha]
        return max(orders, default=-1)

    def max_eps(self) -> int:
        return max((eps for eps, _ in self.terms), default=0)

    def has_jets(self) -> bool:
        return any(o > 0 for _, jets in self.terms for _, o, _ in jets)

    # -- arithmetic ------------------------------------------------------------

    def _add_term(self, mon: Monomial, coeff: AlgScalar):
        cur = self.terms.get(mon)
        new = coeff if cur is None else cur + coeff
        if new:
            self.terms[mon] = new
        elif cur is not None:
            del self.terms[mon]

    def __add__(self, other):
        if isinstance(other, (int, Fraction, AlgScalar)):
            other = DiffPoly.const(self.ring, other)
        self.ring.check_compatible(other.ring)
        out = DiffPoly(self.ring, dict(self.terms))
        for mon, c in other.terms.items():
            out._add_term(mon, c)
        return out

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, AlgScalar)):
            other = DiffPoly.const(self.ring, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, AlgScalar)):
            c = self.ring.scalar(other)
            if not c:
                return DiffPoly(self.ring)
            return DiffPoly(self.ring, {m: v * c for m, v in self.terms.items()})
        self.ring.check_compatible(other.ring)
        out = DiffPoly(self.ring)
        if len(self.terms) > len(other.terms):
            left, right = other, self
        else:
            left, right = self, other
        for (e1, j1), c1 in left.terms.items():
            for (e2, j2), c2 in right.terms.items():
                out._add_term((e1 + e2, _mul_jets(j1, j2)), c1 * c2)
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self.ring.scalar(other)
        return self * c.inverse()

    def __pow__(self, n: int) -> "DiffPoly":
        if n < 0:
            raise ValueError("negative powers of differential polynomials")
        result = DiffPoly.const(self.ring, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, AlgScalar)):
            other = DiffPoly.const(self.ring, other)
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        return hash((self.ring, tuple(sorted(self.terms.items(),
                                             key=lambda kv: monomial_sort_key(kv[0])))))

    # -- calculus ---------------------------------------------------------------

    def dx(self) -> "DiffPoly":
        """Total x-derivative: sum over jets of u^alpha_{i+1} d/du^alpha_i."""
        out = DiffPoly(self.ring)
        for (eps, jets), c in self.terms.items():
            for idx, (alpha, order, power) in enumerate(jets):
                lowered = list(jets)
                if power == 1:
                    del lowered[idx]
                else:
                    lowered[idx] = (alpha, order, power - 1)
                mon = (eps, _mul_jets(tuple(lowered), ((alpha, order + 1, 1),)))
                out._add_term(mon, c * power)
        return out

    def dx_pow(self, k: int) -> "DiffPoly":
        f = self
        for _ in range(k):
            f = f.dx()
        return f

    def partial(self, alpha: int, order: int) -> "DiffPoly":
        """Plain partial derivative with respect to the jet variable u^alpha_order."""
        out = DiffPoly(self.ring)
        for (eps, jets), c in self.terms.items():
            for idx, (a, o, power) in enumerate(jets):
                if a == alpha and o == order:
                    lowered = list(jets)
                    if power == 1:
                        del lowered[idx]
                    else:
                        lowered[idx] = (a, o, power - 1)
                    out._add_term((eps, tuple(lowered)), c * power)
                    break
        return out

    def var_der(self, alpha: int) -> "DiffPoly":
        """Variational derivative sum_i (-d_x)^i d/du^alpha_i."""
        out = DiffPoly(self.ring)
        for i in range(self.max_order(alpha) + 1):
            p = self.partial(alpha, i)
            if p.is_zero():
                continue
            q = p.dx_pow(i)
            out = out + (q if i % 2 == 0 else -q)
        return out

    # -- grading ------------------------------------------------------------------

    @staticmethod
    def monomial_degree(mon: Monomial) -> int:
        """Differential degree: sum of jet orders times powers, minus eps exponent."""
        eps, jets = mon
        return sum(o * p for _, o, p in jets) - eps

    def degree_decompose(self) -> dict[int, "DiffPoly"]:
        pieces: dict[int, DiffPoly] = {}
        for mon, c in self.terms.items():
            deg = DiffPoly.monomial_degree(mon)
            pieces.setdefault(deg, DiffPoly(self.ring)).terms[mon] = c
        return pieces

    def is_homogeneous(self, degree: int | None = None) -> bool:
        degs = {DiffPoly.monomial_degree(m) for m in self.terms}
        if not degs:
            return True
        if degree is None:
            return len(degs) == 1
        return degs == {degree}

    def eps_decompose(self) -> dict[int, "DiffPoly"]:
        """Split by eps exponent; the pieces carry no eps factor."""
        pieces: dict[int, DiffPoly] = {}
        for (eps, jets), c in self.terms.items():
            pieces.setdefault(eps, DiffPoly(self.ring)).terms[(0, jets)] = c
        return pieces

    def eps_coefficient(self, k: int) -> "DiffPoly":
        out = DiffPoly(self.ring)
        for (eps, jets), c in self.terms.items():
            if eps == k:
                out.terms[(0, jets)] = c
        return out

    def eps_shift(self, k: int) -> "DiffPoly":
        if k == 0:
            return self
        return DiffPoly(self.ring, {(eps + k, jets): c
                                    for (eps, jets), c in self.terms.items()})

    def truncate_eps(self, emax: int) -> "DiffPoly":
        return DiffPoly(self.ring, {(eps, jets): c
                                    for (eps, jets), c in self.terms.items()
                                    if eps <= emax})

    # -- evaluation / substitution ---------------------------------------------

    def eval_zero(self) -> AlgScalar:
        """Value at u = 0 (and eps kept only at exponent zero)."""
        return self.constant_term()

    def substitute(self, images: dict[int, "DiffPoly"], out_ring: Ring | None = None) -> "DiffPoly":
        """Replace u^alpha_j by dx^j(images[alpha]); fields must be covered."""
        if out_ring is None:
            some = next(iter(images.values()), None)
            out_ring = some.ring if some is not None else self.ring
        cache: dict[tuple[int, int], DiffPoly] = {}

        def image_jet(alpha: int, order: int) -> DiffPoly:
            key = (alpha, order)
            if key not in cache:
                if alpha not in images:
                    raise KeyError(f"no substitution image for field {alpha}")
                if order == 0:
                    cache[key] = images[alpha]
                else:
                    cache[key] = image_jet(alpha, order - 1).dx()
            return cache[key]

        out = DiffPoly(out_ring)
        for (eps, jets), c in self.terms.items():
            prod = DiffPoly.const(out_ring, 1)
            for alpha, order, power in jets:
                prod = prod * image_jet(alpha, order) ** power
            contribution = (prod * out_ring.scalar(c)).eps_shift(eps)
            for mon, v in contribution.terms.items():
                out._add_term(mon, v)
        return out

    def map_fields(self, field_map: dict[int, int], out_ring: Ring) -> "DiffPoly":
        """Relabel field indices (a pure renaming, no calculus)."""
        out = DiffPoly(out_ring)
        for (eps, jets), c in self.terms.items():
            new = tuple(sorted((field_map[a], o, p) for a, o, p in jets))
            out._add_term((eps, new), out_ring.scalar(c))
        return out

    # -- rendering / serialization ------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: monomial_sort_key(kv[0]))

    def render(self, names=None, eps_name: str = "eps") -> str:
        """Deterministic plain-text rendering; names maps field index to symbol."""
        if self.is_zero():
            return "0"
        if names is None:
            names = {a: (f"u{a}" if self.ring.n_fields > 1 else "u")
                     for a in range(1, self.ring.n_fields + 1)}
        chunks = []
        for (eps, jets), c in self.sorted_terms():
            factors = []
            if eps:
                factors.append(eps_name if eps == 1 else f"{eps_name}^{eps}")
            for alpha, order, power in jets:
                base = names[alpha] if order == 0 else f"{names[alpha]}_{order}"
                factors.append(base if power == 1 else f"{base}^{power}")
            body = "*".join(factors)
            if not body:
                chunks.append(str(c) if c.is_rational() else f"({c})")
                continue
            if c == AlgScalar(1):
                chunks.append(body)
            elif c == AlgScalar(-1):
                chunks.append(f"-{body}")
            elif c.is_rational():
                chunks.append(f"{c}*{body}")
            else:
                chunks.append(f"({c})*{body}")
        text = " + ".join(chunks)
        return text.replace("+ -", "- ")

    def __repr__(self):
        return f"DiffPoly({self.render()})"

    def to_json_dict(self) -> dict:
        return {
            "N": self.ring.n_fields,
            "d": self.ring.d,
            "terms": [
                {"coeff": c.to_json(), "eps": eps,
                 "jets": [[a, o, p] for a, o, p in jets]}
                for (eps, jets), c in self.sorted_terms()
            ],
        }

    @staticmethod
    def from_json_dict(data: dict) -> "DiffPoly":
        ring = Ring(data["N"], data.get("d", 1))
        out = DiffPoly(ring)
        for term in data["terms"]:
            jets = tuple(sorted((a, o, p) for a, o, p in term["jets"]))
            coeff = AlgScalar.from_json(term["coeff"], ring.d)
            out._add_term((term.get("eps", 0), jets), coeff)
        return out


class LocalFunctional:
    """A differential polynomial modulo constants and total x-derivatives."""

    __slots__ = ("density",)

    def __init__(self, density: DiffPoly):
        self.density = density

    @property
    def ring(self) -> Ring:
        return self.density.ring

    @staticmethod
    def zero(ring: Ring) -> "LocalFunctional":
        return LocalFunctional(DiffPoly.zero(ring))

    def var_der(self, alpha: int) -> DiffPoly:
        return self.density.var_der(alpha)

    def __add__(self, other):
        return LocalFunctional(self.density + other.density)

    def __sub__(self, other):
        return LocalFunctional(self.density - other.density)

    def __neg__(self):
        return LocalFunctional(-self.density)

    def __mul__(self, scalar):
        return LocalFunctional(self.density * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return LocalFunctional(self.density / scalar)

    def truncate_eps(self, emax: int) -> "LocalFunctional":
        return LocalFunctional(self.density.truncate_eps(emax))

    def eps_coefficient(self, k: int) -> "LocalFunctional":
        return LocalFunctional(self.density.eps_coefficient(k))

    def __eq__(self, other):
        if not isinstance(other, LocalFunctional):
            return NotImplemented
        return local_eq(self, other)

    def __hash__(self):
        raise TypeError("LocalFunctional compares up to total derivatives; not hashable")

    def is_zero(self) -> bool:
        diff = self.density
        return all(diff.var_der(alpha).is_zero()
                   for alpha in range(1, self.ring.n_fields + 1))

    def canonical_density(self) -> DiffPoly:
        """Deterministic representative obtained by integration by parts.

        Repeatedly rewrites the largest monomial whose maximal jet variable
        (ordered by (order, field)) can shed one derivative without creating
        a larger monomial; pure constants are dropped.  Distinct functionals
        get distinct canonical densities within a fixed ring.
        """
        work = {mon: c for mon, c in self.density.terms.items() if mon[1]}
        out: dict[Monomial, AlgScalar] = {}
        ring = self.ring
        guard = 0
        while work:
            guard += 1
            if guard > 200000:
                raise RuntimeError("canonical_density failed to terminate")
            mon = max(work, key=monomial_sort_key)
            coeff = work.pop(mon)
            eps, jets = mon
            occurrences = [(o, a, p) for a, o, p in jets]
            o_max, a_max, p_max = max(occurrences)
            reducible = o_max > 0 and p_max == 1
            if reducible:
                for o, a, p in occurrences:
                    if (o, a) == (o_max, a_max):
                        continue
                    if (o + 1, a) < (o_max, a_max) or (a, o) == (a_max, o_max - 1):
                        continue
                    reducible = False
                    break
            if not reducible:
                cur = out.get(mon)
                new = coeff if cur is None else cur + coeff
                if new:
                    out[mon] = new
                elif cur is not None:
                    del out[mon]
                continue
            # m = A * u^{a}_{o}: replace by -dx(A) * u^{a}_{o-1} mod im(dx)
            rest = tuple(t for t in jets if t != (a_max, o_max, 1))
            a_poly = DiffPoly(ring, {(eps, rest): ring.scalar(1)})
            repl = -(a_poly.dx()) * DiffPoly.jet(ring, a_max, o_max - 1)
            self_coeff = repl.terms.pop(mon, None)
            scale = ring.scalar(1)
            if self_coeff is not None:
                # m appears in its own rewrite: solve (1 - c) m = rest
                scale = (ring.scalar(1) - self_coeff).inverse()
            for m2, c2 in repl.terms.items():
                if not m2[1]:
                    continue
                add = coeff * c2 * scale
                cur = work.get(m2)
                new = add if cur is None else cur + add
                if new:
                    work[m2] = new
                elif cur is not None:
                    del work[m2]
        return DiffPoly(ring, out)

    def render(self, names=None, eps_name: str = "eps") -> str:
        return self.canonical_density().render(names, eps_name)

    def __repr__(self):
        return f"LocalFunctional(int {self.density.render()} dx)"

    def to_json_dict(self) -> dict:
        data = self.canonical_density().to_json_dict()
        data["integrated"] = True
        return data

    @staticmethod
    def from_json_dict(data: dict) -> "LocalFunctional":
        return LocalFunctional(DiffPoly.from_json_dict(data))


def integrate(density: DiffPoly) -> LocalFunctional:
    return LocalFunctional(density)


def local_eq(h1: LocalFunctional, h2: LocalFunctional) -> bool:
    """True iff h1 and h2 differ by a constant plus a total x-derivative."""
    h1.ring.check_compatible(h2.ring)
    diff = h1.density - h2.density
    return all(diff.var_der(alpha).is_zero()
               for alpha in range(1, h1.ring.n_fields + 1))


def eps_dress(h: LocalFunctional | DiffPoly):
    """Promote an eps-free element to total degree zero: piece of differential
    degree k gains eps^k."""
    density = h.density if isinstance(h, LocalFunctional) else h
    if density.max_eps() > 0:
        raise ValueError("eps dressing expects an eps-free input")
    out = DiffPoly(density.ring)
    for (eps, jets), c in density.terms.items():
        deg = sum(o * p for _, o, p in jets)
        out._add_term((deg, jets), c)
    return LocalFunctional(out) if isinstance(h, LocalFunctional) else out


# -- Fourier dictionary ---------------------------------------------------------


PKey = tuple[tuple[int, int, int], ...]  # sorted (alpha, mode, power)


class PSeries:
    """Polynomial in Fourier modes p^alpha_k, |k| <= M, with eps powers.

    Only the frequency-zero (mode-sum zero) part of a local functional is
    retained; general elements track their mode sum per monomial implicitly
    through the stored keys.
    """

    __slots__ = ("ring", "window", "terms")

    def __init__(self, ring: Ring, window: int, terms: dict | None = None):
        if window < 1:
            raise ValueError("mode window must be >= 1")
        self.ring = ring
        self.window = window
        self.terms = terms if terms is not None else {}

    def _add_term(self, key, coeff: AlgScalar):
        cur = self.terms.get(key)
        new = coeff if cur is None else cur + coeff
        if new:
            self.terms[key] = new
        elif cur is not None:
            del self.terms[key]

    def __add__(self, other):
        if self.window != other.window:
            raise ValueError("mode window mismatch")
        out = PSeries(self.ring, self.window, dict(self.terms))
        for key, c in other.terms.items():
            out._add_term(key, c)
        return out

    def __sub__(self, other):
        return self + PSeries(other.ring, other.window,
                              {k: -c for k, c in other.terms.items()})

    def __mul__(self, scalar):
        c = self.ring.scalar(scalar)
        return PSeries(self.ring, self.window,
                       {k: v * c for k, v in self.terms.items()})

    __rmul__ = __mul__

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, PSeries):
            return NotImplemented
        return (self.ring == other.ring and self.window == other.window
                and self.terms == other.terms)

    @staticmethod
    def mode_sum(pkey: PKey) -> int:
        return sum(k * p for _, k, p in pkey)

    def sorted_terms(self):
        return sorted(self.terms.items())

    def render(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for (eps, pkey), c in self.sorted_terms():
            factors = []
            if eps:
                factors.append("eps" if eps == 1 else f"eps^{eps}")
            for alpha, k, power in pkey:
                base = f"p{alpha}[{k}]"
                factors.append(base if power == 1 else f"{base}^{power}")
            body = "*".join(factors) or "1"
            chunks.append(f"({c})*{body}")
        return " + ".join(chunks)

    def __repr__(self):
        return f"PSeries({self.render()})"


def lf_to_p_series(h: LocalFunctional, window: int) -> PSeries:
    """Mode-zero Fourier image of a local functional.

    Substitutes u^alpha_j = sum_{|k| <= window} (ik)^j p^alpha_k e^{ikx} and
    keeps the frequency-zero part; exact for every retained monomial.
    """
    ring = h.ring
    out = PSeries(ring, window)
    i_unit = AlgScalar(0, 1)
    mode_range = range(-window, window + 1)
    for (eps, jets), coeff in h.density.terms.items():
        factors = []
        for alpha, order, power in jets:
            factors.extend([(alpha, order)] * power)
        if not factors:
            continue  # constants are quotiented away

        def expand(idx, mode_sum, acc_coeff, acc_modes):
            if idx == len(factors):
                if mode_sum != 0:
                    return
                counts: dict[tuple[int, int], int] = {}
                for am in acc_modes:
                    counts[am] = counts.get(am, 0) + 1
                pkey = tuple((a, k, p) for (a, k), p in sorted(counts.items()))
                out._add_term((eps, pkey), acc_coeff)
                return
            alpha, order = factors[idx]
            remaining = len(factors) - idx - 1
            for k in mode_range:
                if k == 0 and order > 0:
                    continue
                # prune: remaining factors can shift the sum by at most window each
                if abs(mode_sum + k) > remaining * window:
                    continue
                factor = (i_unit * k) ** order if order else AlgScalar(1)
                expand(idx + 1, mode_sum + k, acc_coeff * factor,
                       acc_modes + ((alpha, k),))

        expand(0, 0, ring.scalar(coeff), ())
    return out
