"""Hamiltonian operators, Poisson brackets, flows and Miura transformations.

A DiffOperator is a finite sum of differential-polynomial coefficients times
nonnegative powers of d_x; composition normal-orders d_x to the right via
the Leibniz expansion.  A HamiltonianOperator is an N x N matrix of these,
inducing the bracket {f, g}_K = int (df/du^mu  K^{mu nu}  dg/du^nu) dx on
local functionals.  Miura transformations are near-identity changes of
field variables w^alpha = u^alpha + O(eps) by differential polynomials;
they transport functionals by substitution of the inverse map and operators
by the chain-rule conjugation formula.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .diffpoly import DiffPoly, LocalFunctional, Ring


class DiffOperator:
    """Finite map {j >= 0: coefficient} representing sum c_j d_x^j."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: Ring, coeffs: dict[int, DiffPoly] | None = None):
        self.ring = ring
        self.coeffs = {}
        if coeffs:
            for j, c in coeffs.items():
                if j < 0:
                    raise ValueError("differential operators have powers >= 0")
                if not c.is_zero():
                    self.coeffs[j] = c

    @staticmethod
    def zero(ring: Ring) -> "DiffOperator":
        return DiffOperator(ring)

    @staticmethod
    def dx(ring: Ring, power: int = 1, coeff=1) -> "DiffOperator":
        return DiffOperator(ring, {power: DiffPoly.const(ring, coeff)})

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        out = dict(self.coeffs)
        for j, c in other.coeffs.items():
            s = out.get(j, DiffPoly.zero(self.ring)) + c
            if s.is_zero():
                out.pop(j, None)
            else:
                out[j] = s
        return DiffOperator(self.ring, out)

    def __neg__(self) -> "DiffOperator":
        return DiffOperator(self.ring, {j: -c for j, c in self.coeffs.items()})

    def __sub__(self, other: "DiffOperator") -> "DiffOperator":
        return self + (-other)

    def scale(self, scalar) -> "DiffOperator":
        return DiffOperator(self.ring, {j: c * scalar for j, c in self.coeffs.items()})

    def compose(self, other: "DiffOperator") -> "DiffOperator":
        """self after other: (sum a_j d^j) o (sum b_k d^k), Leibniz to the right."""
        out = DiffOperator(self.ring)
        acc: dict[int, DiffPoly] = {}
        for j, a in self.coeffs.items():
            for k, b in other.coeffs.items():
                db = b
                for l in range(j + 1):
                    if not db.is_zero():
                        coeff = a * db * math.comb(j, l)
                        key = j - l + k
                        acc[key] = acc.get(key, DiffPoly.zero(self.ring)) + coeff
                    if l < j:
                        db = db.dx()
        for j, c in acc.items():
            if not c.is_zero():
                out.coeffs[j] = c
        return out

    def apply(self, f: DiffPoly) -> DiffPoly:
        out = DiffPoly.zero(self.ring)
        for j, c in self.coeffs.items():
            out = out + c * f.dx_pow(j)
        return out

    def truncate_eps(self, emax: int) -> "DiffOperator":
        return DiffOperator(self.ring,
                            {j: c.truncate_eps(emax) for j, c in self.coeffs.items()})

    def map_coeffs(self, fn) -> "DiffOperator":
        return DiffOperator(self.ring, {j: fn(c) for j, c in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.ring == other.ring and self.coeffs == other.coeffs

    def render(self, names=None) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for j in sorted(self.coeffs, reverse=True):
            c = self.coeffs[j]
            body = c.render(names)
            if j == 0:
                parts.append(body)
            else:
                dx = "d_x" if j == 1 else f"d_x^{j}"
                if body == "1":
                    parts.append(dx)
                elif body == "-1":
                    parts.append(f"-{dx}")
                elif ("+" in body or "-" in body[1:]):
                    parts.append(f"({body})*{dx}")
                else:
                    parts.append(f"{body}*{dx}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"DiffOperator({self.render()})"

    def to_json_dict(self) -> dict:
        return {str(j): c.to_json_dict() for j, c in sorted(self.coeffs.items())}


class HamiltonianOperator:
    """N x N matrix of differential operators defining a Poisson bracket."""

    __slots__ = ("ring", "entries")

    def __init__(self, ring: Ring, entries: list[list[DiffOperator]]):
        n = ring.n_fields
        if len(entries) != n or any(len(row) != n for row in entries):
            raise ValueError("operator matrix must be N x N")
        self.ring = ring
        self.entries = entries

    @staticmethod
    def zero(ring: Ring) -> "HamiltonianOperator":
        n = ring.n_fields
        return HamiltonianOperator(
            ring, [[DiffOperator.zero(ring) for _ in range(n)] for _ in range(n)])

    @staticmethod
    def eta_dx(ring: Ring, eta: list[list[Fraction]]) -> "HamiltonianOperator":
        """The standard operator eta * d_x for a constant symmetric eta."""
        n = ring.n_fields
        out = HamiltonianOperator.zero(ring)
        for a in range(n):
            for b in range(n):
                if eta[a][b]:
                    out.entries[a][b] = DiffOperator.dx(ring, 1, eta[a][b])
        return out

    def entry(self, alpha: int, beta: int) -> DiffOperator:
        """1-based field indexing."""
        return self.entries[alpha - 1][beta - 1]

    def apply_vector(self, vec: list[DiffPoly]) -> list[DiffPoly]:
        n = self.ring.n_fields
        out = []
        for a in range(n):
            acc = DiffPoly.zero(self.ring)
            for b in range(n):
                if not self.entries[a][b].is_zero():
                    acc = acc + self.entries[a][b].apply(vec[b])
            out.append(acc)
        return out

    def scale(self, scalar) -> "HamiltonianOperator":
        return HamiltonianOperator(
            self.ring, [[op.scale(scalar) for op in row] for row in self.entries])

    def __sub__(self, other: "HamiltonianOperator") -> "HamiltonianOperator":
        return HamiltonianOperator(
            self.ring,
            [[a - b for a, b in zip(ra, rb)]
             for ra, rb in zip(self.entries, other.entries)])

    def truncate_eps(self, emax: int) -> "HamiltonianOperator":
        return HamiltonianOperator(
            self.ring, [[op.truncate_eps(emax) for op in row] for row in self.entries])

    def __eq__(self, other):
        if not isinstance(other, HamiltonianOperator):
            return NotImplemented
        return self.ring == other.ring and self.entries == other.entries

    def render(self, names=None) -> str:
        rows = []
        for row in self.entries:
            rows.append("[" + ", ".join(op.render(names) for op in row) + "]")
        return "[" + "; ".join(rows) + "]"

    def __repr__(self):
        return f"HamiltonianOperator({self.render()})"

    def to_json_dict(self) -> dict:
        return {"N": self.ring.n_fields, "d": self.ring.d,
                "entries": [[op.to_json_dict() for op in row] for row in self.entries]}


# -- bracket and flows ------------------------------------------------------------


def bracket(h1: LocalFunctional, h2: LocalFunctional,
            K: HamiltonianOperator) -> LocalFunctional:
    """{h1, h2}_K = int dh1/du^mu K^{mu nu} dh2/du^nu dx."""
    h1.ring.check_compatible(h2.ring)
    h1.ring.check_compatible(K.ring)
    n = K.ring.n_fields
    right = [h2.var_der(b) for b in range(1, n + 1)]
    applied = K.apply_vector(right)
    density = DiffPoly.zero(K.ring)
    for a in range(n):
        left = h1.var_der(a + 1)
        if not left.is_zero() and not applied[a].is_zero():
            density = density + left * applied[a]
    return LocalFunctional(density)


def flow(h: LocalFunctional, K: HamiltonianOperator) -> list[DiffPoly]:
    """The evolutionary system du^alpha/dtau = K^{alpha mu} dh/du^mu."""
    h.ring.check_compatible(K.ring)
    n = K.ring.n_fields
    return K.apply_vector([h.var_der(b) for b in range(1, n + 1)])


def op_dress(K: HamiltonianOperator) -> HamiltonianOperator:
    """Give each degree-j piece of the d_x^i coefficient the weight eps^{i+j-1}.

    Requires an eps-free operator with vanishing (i, j) = (0, 0) component,
    which is forced by antisymmetry; the dressed bracket has degree 1.
    """
    ring = K.ring
    out = HamiltonianOperator.zero(ring)
    for a in range(ring.n_fields):
        for b in range(ring.n_fields):
            entry = K.entries[a][b]
            dressed: dict[int, DiffPoly] = {}
            for i, c in entry.coeffs.items():
                if c.max_eps() > 0:
                    raise ValueError("op_dress expects an eps-free operator")
                for j, piece in c.degree_decompose().items():
                    if i + j - 1 < 0:
                        raise ValueError(
                            "nonzero constant d_x^0 component; operator cannot be dressed")
                    shifted = piece.eps_shift(i + j - 1)
                    dressed[i] = dressed.get(i, DiffPoly.zero(ring)) + shifted
            out.entries[a][b] = DiffOperator(ring, dressed)
    return out


# -- Miura transformations -----------------------------------------------------------


class MiuraMap:
    """Change of variables w^alpha = u^alpha + sum_{k>=1} eps^k f_k^alpha,
    deg f_k^alpha = k."""

    __slots__ = ("ring", "entries")

    def __init__(self, ring: Ring, entries: list[DiffPoly]):
        if len(entries) != ring.n_fields:
            raise ValueError("need one entry per field")
        for alpha, w in enumerate(entries, start=1):
            lead = DiffPoly.jet(ring, alpha, 0)
            rest = w - lead
            for eps, piece in rest.eps_decompose().items():
                if eps < 1:
                    raise ValueError(f"entry {alpha}: non-identity eps^0 part")
                if not piece.is_homogeneous(eps):
                    raise ValueError(
                        f"entry {alpha}: eps^{eps} correction must have degree {eps}")
        self.ring = ring
        self.entries = entries

    @staticmethod
    def identity(ring: Ring) -> "MiuraMap":
        return MiuraMap(ring, [DiffPoly.jet(ring, a, 0)
                               for a in range(1, ring.n_fields + 1)])

    def is_identity(self) -> bool:
        return all(w == DiffPoly.jet(self.ring, a, 0)
                   for a, w in enumerate(self.entries, start=1))

    def max_eps(self) -> int:
        return max(w.max_eps() for w in self.entries)

    def __eq__(self, other):
        if not isinstance(other, MiuraMap):
            return NotImplemented
        return self.ring == other.ring and self.entries == other.entries

    def __repr__(self):
        body = ", ".join(w.render() for w in self.entries)
        return f"MiuraMap({body})"


def miura_compose(outer: MiuraMap, inner_images: list[DiffPoly],
                  emax: int) -> list[DiffPoly]:
    """Entries of outer with u^alpha replaced by inner_images, truncated."""
    images = {a + 1: img for a, img in enumerate(inner_images)}
    return [w.substitute(images, outer.ring).truncate_eps(emax)
            for w in outer.entries]


def miura_invert(m: MiuraMap, emax: int) -> MiuraMap:
    """Inverse map modulo eps^{emax+1} by successive substitution."""
    ring = m.ring
    identity = [DiffPoly.jet(ring, a, 0) for a in range(1, ring.n_fields + 1)]
    current = list(identity)
    for _ in range(emax + 1):
        composed = miura_compose(m, current, emax)
        current = [identity[a] - (composed[a] - current[a])
                   for a in range(ring.n_fields)]
    # verify: m o inverse = identity mod eps^{emax+1}
    check = miura_compose(m, current, emax)
    for a in range(ring.n_fields):
        if check[a] != identity[a]:
            raise AssertionError("miura inversion failed to close")
    return MiuraMap(ring, current)


def miura_push_poly(f, m: MiuraMap, emax: int):
    """Rewrite f(u) in the new variables: substitute u = m^{-1}(w), cut at eps^emax."""
    inverse = miura_invert(m, emax)
    images = {a + 1: img for a, img in enumerate(inverse.entries)}
    if isinstance(f, LocalFunctional):
        return LocalFunctional(
            f.density.substitute(images, m.ring).truncate_eps(emax))
    return f.substitute(images, m.ring).truncate_eps(emax)


def transport_operator(K: HamiltonianOperator, forward: list[DiffPoly],
                       inverse_images: dict[int, DiffPoly],
                       out_ring: Ring) -> HamiltonianOperator:
    """Chain-rule conjugation of an operator under w = forward(u):

    K_w^{ab} = sum_{p,q} (dw^a/du^mu_p) d_x^p o K^{mu nu} o (-d_x)^q o (dw^b/du^nu_q),
    with the coefficients re-expressed through the inverse change.
    """
    ring = K.ring
    n = ring.n_fields
    lefts: list[dict[int, DiffOperator]] = []
    rights: list[dict[int, DiffOperator]] = []
    for w in forward:
        left: dict[int, DiffOperator] = {}
        right: dict[int, DiffOperator] = {}
        for mu in range(1, n + 1):
            for p in range(w.max_order(mu) + 1):
                dw = w.partial(mu, p)
                if dw.is_zero():
                    continue
                left.setdefault(mu, DiffOperator.zero(ring))
                left[mu] = left[mu] + DiffOperator(ring, {p: dw})
                sign_dx = DiffOperator.dx(ring, p, (-1) ** p) if p else \
                    DiffOperator.dx(ring, 0)
                right.setdefault(mu, DiffOperator.zero(ring))
                right[mu] = right[mu] + sign_dx.compose(DiffOperator(ring, {0: dw}))
        lefts.append(left)
        rights.append(right)
    out = HamiltonianOperator.zero(out_ring)
    for a in range(n):
        for b in range(n):
            acc = DiffOperator.zero(ring)
            for mu, lop in lefts[a].items():
                for nu, rop in rights[b].items():
                    mid = K.entries[mu - 1][nu - 1]
                    if mid.is_zero():
                        continue
                    acc = acc + lop.compose(mid).compose(rop)
            out.entries[a][b] = DiffOperator(
                out_ring, {j: c.substitute(inverse_images, out_ring)
                           for j, c in acc.coeffs.items()})
    return out


def miura_push_operator(K: HamiltonianOperator, m: MiuraMap,
                        emax: int) -> HamiltonianOperator:
    """Operator transport under a Miura map, truncated at eps^emax."""
    inverse = miura_invert(m, emax)
    images = {a + 1: img for a, img in enumerate(inverse.entries)}
    moved = transport_operator(K, m.entries, images, m.ring)
    return moved.truncate_eps(emax)
