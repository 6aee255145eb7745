"""The r-th Gelfand-Dickey hierarchy and its r-spin normalization.

Everything is generated from the Lax operator L = d^r + f_{r-2} d^{r-2} +
... + f_0 over the (r-1)-field ring: the first hamiltonian structure K^GD
(read off the positive part of [X, L]), the Hamiltonians h^GD_m =
-r/(m+r) int res L^{(m+r)/r} dx, the flows dL/dT_m = [(L^{m/r})_+, L], the
change to normalized variables w^alpha = res L^{(r-alpha)/r} / ((r-alpha)
(-r)^{(r-alpha-1)/2}) and the rescaled operator/Hamiltonian pair
(K^{r-spin}, h^{r-spin}_{alpha,d}).  The dispersionless two-point data
consumed by the reconstruction recursion is the eps = 0 part of those
Hamiltonian densities.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .diffpoly import DiffPoly, LocalFunctional, Ring, eps_dress, integrate
from .hamops import (
    DiffOperator,
    HamiltonianOperator,
    flow,
    op_dress,
    transport_operator,
)
from .psido import PseudoDiffOp, pdo_root, root_depth_for_residue
from .scalars import AlgScalar, minus_r_half_power, squarefree_part


def eta_matrix(r: int) -> list[list[Fraction]]:
    """The r-spin pairing eta_{ab} = delta_{a+b,r} (its own inverse)."""
    n = r - 1
    return [[Fraction(1) if a + b == r else Fraction(0)
             for b in range(1, n + 1)] for a in range(1, n + 1)]


class GDContext:
    """Order r, truncation depth, and the Lax operator with its caches.

    The internal memo of Lax-root powers is per-context and unsynchronized;
    share contexts across threads only behind a lock, or use one per thread.
    """

    def __init__(self, r: int, depth: int):
        if r < 2:
            raise ValueError("need r >= 2")
        self.r = r
        self.depth = depth
        d, _ = squarefree_part(r)
        self.ring_f = Ring(r - 1, d)
        self.ring_w = Ring(r - 1, d)
        coeffs = {r: DiffPoly.const(self.ring_f, 1)}
        for i in range(r - 1):
            coeffs[i] = DiffPoly.jet(self.ring_f, i + 1, 0)
        self.lax = PseudoDiffOp(self.ring_f, r, None, coeffs)
        self._root: PseudoDiffOp | None = None
        self._root_powers: dict[int, PseudoDiffOp] = {}
        self._rspin_change = None
        self._rspin_operator = None

    def f_var(self, i: int, order: int = 0) -> DiffPoly:
        """The jet variable of f_i (0-based Lax index)."""
        return DiffPoly.jet(self.ring_f, i + 1, order)

    def w_var(self, alpha: int, order: int = 0) -> DiffPoly:
        return DiffPoly.jet(self.ring_w, alpha, order)

    def root(self) -> PseudoDiffOp:
        if self._root is None:
            self._root = pdo_root(self.lax, self.r, self.depth)
        return self._root

    def lax_power(self, p: int) -> PseudoDiffOp:
        """L^{p/r} to the context depth."""
        if p % self.r == 0:
            return self.lax.power(p // self.r)
        if p not in self._root_powers:
            self._root_powers[p] = self.root().power(p)
        return self._root_powers[p]

    def require_residue_depth(self, p: int):
        if self.depth < p + 2:
            raise ValueError(
                f"depth {self.depth} insufficient for res L^({p}/{self.r}); "
                f"need at least {p + 2}")


@lru_cache(maxsize=None)
def gd_context(r: int, depth: int | None = None, max_m: int | None = None) -> GDContext:
    """Context factory; the default depth covers h^GD_k for k = alpha + r*d <= max_m."""
    if depth is None:
        top = max_m if max_m is not None else 2 * r + 1
        depth = root_depth_for_residue(top + r)
    return GDContext(r, depth)


# -- first hamiltonian structure -----------------------------------------------------


def gd_operator(ctx: GDContext) -> HamiltonianOperator:
    """K^GD from [X, L]_+ = sum (K^GD)^{ab} X_b d^a for X = sum d^{-(b+1)} o X_b.

    Extraction adjoins temporary jet variables X_b to the ring, computes the
    commutator, and reads the coefficient operators off the terms linear in
    the X_b jets; the temporaries never escape.
    """
    r = ctx.r
    n = r - 1
    ext = Ring(2 * n, ctx.ring_f.d)
    lax_ext = PseudoDiffOp(
        ext, r, None,
        {k: c.map_fields({a: a for a in range(1, n + 1)}, ext)
         for k, c in ctx.lax.coeffs.items()})
    x_lo = -(r + 1)
    x_op = None
    for b in range(n):
        dinv = PseudoDiffOp(ext, -(b + 1), x_lo,
                            {-(b + 1): DiffPoly.const(ext, 1)})
        piece = dinv * PseudoDiffOp.from_poly(ext, DiffPoly.jet(ext, n + 1 + b, 0))
        x_op = piece if x_op is None else x_op + piece
    comm = x_op * lax_ext - lax_ext * x_op
    K = HamiltonianOperator.zero(ctx.ring_f)
    field_back = {a: a for a in range(1, n + 1)}
    for order in range(0, comm.top + 1):
        coeff = comm.coeff(order)
        if order > r - 2:
            if not coeff.is_zero():
                raise AssertionError(f"[X, L]_+ has unexpected order {order}")
            continue
        for (eps, jets), c in coeff.terms.items():
            x_jets = [(a, o, p) for a, o, p in jets if a > n]
            if len(x_jets) != 1 or x_jets[0][2] != 1:
                raise AssertionError("commutator is not linear in the temporaries")
            (xa, xo, _), = x_jets
            b = xa - (n + 1)
            rest = tuple(t for t in jets if t[0] <= n)
            rest_poly = DiffPoly(ext, {(eps, rest): c}).map_fields(field_back, ctx.ring_f)
            entry = K.entries[order][b]
            K.entries[order][b] = entry + DiffOperator(ctx.ring_f, {xo: rest_poly})
    return K


def gd_hamiltonian(ctx: GDContext, m: int) -> LocalFunctional:
    """h^GD_m = -r/(m+r) int res L^{(m+r)/r} dx for m >= 1 not divisible by r."""
    if m < 1:
        raise ValueError("need m >= 1")
    if m % ctx.r == 0:
        raise ValueError(f"m = {m} is divisible by r = {ctx.r}")
    p = m + ctx.r
    ctx.require_residue_depth(p)
    res = ctx.lax_power(p).residue()
    return integrate(res * Fraction(-ctx.r, m + ctx.r))


def gd_flow(ctx: GDContext, m: int) -> list[DiffPoly]:
    """dL/dT_m = [(L^{m/r})_+, L] as the list of df_i/dT_m, i = 0..r-2."""
    if m < 1:
        raise ValueError("need m >= 1")
    if m % ctx.r == 0:
        return [DiffPoly.zero(ctx.ring_f) for _ in range(ctx.r - 1)]
    if ctx.depth < m + 1:
        raise ValueError(f"depth {ctx.depth} insufficient for the T_{m} flow")
    lm_plus = ctx.lax_power(m).plus_part()
    comm = lm_plus * ctx.lax - ctx.lax * lm_plus
    for order in range(ctx.r - 1, comm.top + 1):
        if not comm.coeff(order).is_zero():
            raise AssertionError("GD flow does not preserve the Lax shape")
    return [comm.coeff(i) for i in range(ctx.r - 1)]


# -- the r-spin normalization -----------------------------------------------------------


class RSpinChange:
    """The change f -> w and its triangular inverse.

    forward[alpha-1] is w^alpha as a differential polynomial in the f's;
    inverse[i] is f_i in the w's.  Dressed variants carry eps^degree on each
    homogeneous piece.
    """

    __slots__ = ("r", "forward", "inverse", "forward_dressed", "inverse_dressed")

    def __init__(self, r, forward, inverse):
        self.r = r
        self.forward = forward
        self.inverse = inverse
        self.forward_dressed = [eps_dress(w) for w in forward]
        self.inverse_dressed = [eps_dress(g) for g in inverse]

    def inverse_images(self, dressed: bool = False) -> dict[int, DiffPoly]:
        src = self.inverse_dressed if dressed else self.inverse
        return {i + 1: g for i, g in enumerate(src)}

    def forward_images(self, dressed: bool = False) -> dict[int, DiffPoly]:
        src = self.forward_dressed if dressed else self.forward
        return {a + 1: w for a, w in enumerate(src)}


def rspin_change(ctx: GDContext) -> RSpinChange:
    """w^alpha = res L^{(r-alpha)/r} / ((r-alpha) (-r)^{(r-alpha-1)/2})."""
    if ctx._rspin_change is not None:
        return ctx._rspin_change
    r = ctx.r
    forward = []
    for alpha in range(1, r):
        p = r - alpha
        ctx.require_residue_depth(p)
        res = ctx.lax_power(p).residue()
        denom = AlgScalar(r - alpha) * minus_r_half_power(r, r - alpha - 1)
        forward.append(res * denom.inverse())
    # triangular inversion: every term of w^alpha besides its linear leading
    # term c_alpha f_{alpha-1} involves only f_k with k >= alpha
    inverse: dict[int, DiffPoly] = {}
    for alpha in range(r - 1, 0, -1):
        w = forward[alpha - 1]
        lead_mon = (0, ((alpha, 0, 1),))
        c_lead = w.terms.get(lead_mon)
        if c_lead is None:
            raise AssertionError(f"missing linear term f_{alpha-1} in w^{alpha}")
        rest = DiffPoly(ctx.ring_f,
                        {mon: c for mon, c in w.terms.items() if mon != lead_mon})
        for _, jets in rest.terms:
            for a, _, _ in jets:
                if a <= alpha:
                    raise AssertionError(
                        f"w^{alpha} is not triangular: contains f_{a-1}")
        substituted = rest.substitute(
            {a: inverse[a] for a in range(alpha + 1, r)}, ctx.ring_w) \
            if rest else DiffPoly.zero(ctx.ring_w)
        inverse[alpha] = (ctx.w_var(alpha) - substituted) * c_lead.inverse()
    ctx._rspin_change = RSpinChange(
        r, forward, [inverse[i + 1] for i in range(r - 1)])
    return ctx._rspin_change


def rspin_operator(ctx: GDContext) -> HamiltonianOperator:
    """K^{r-spin} = (-r)^{r/2} (K^GD transported to the w variables), dressed."""
    if ctx._rspin_operator is not None:
        return ctx._rspin_operator
    change = rspin_change(ctx)
    moved = transport_operator(gd_operator(ctx), change.forward,
                               change.inverse_images(), ctx.ring_w)
    scaled = moved.scale(minus_r_half_power(ctx.r, ctx.r))
    dressed = op_dress(scaled)
    for row in dressed.entries:
        for op in row:
            for c in op.coeffs.values():
                if any(jets for _, jets in c.terms):
                    raise AssertionError(
                        "K^{r-spin} is expected to have constant coefficients")
    ctx._rspin_operator = dressed
    return dressed


def rspin_factorial(r: int, alpha: int, d: int) -> int:
    """k!_r = prod_{i=0..d} (alpha + r i)."""
    out = 1
    for i in range(d + 1):
        out *= alpha + r * i
    return out


def rspin_hamiltonian(ctx: GDContext, alpha: int, d: int) -> LocalFunctional:
    """h^{r-spin}_{alpha,d} = h^GD_k[w] / ((-r)^{(r+k-1)/2 - d} k!_r), k = alpha + r d."""
    r = ctx.r
    if not 1 <= alpha <= r - 1:
        raise ValueError(f"alpha must be in 1..{r - 1}")
    if d < 0:
        raise ValueError("d must be >= 0")
    k = alpha + r * d
    h_gd = gd_hamiltonian(ctx, k)
    change = rspin_change(ctx)
    density_w = h_gd.density.substitute(change.inverse_images(), ctx.ring_w)
    scalar = (minus_r_half_power(r, r + k - 1 - 2 * d)
              * AlgScalar(rspin_factorial(r, alpha, d))).inverse()
    return eps_dress(integrate(density_w * scalar))


def rspin_system(ctx: GDContext, alpha: int, d: int) -> tuple[HamiltonianOperator,
                                                              LocalFunctional]:
    """The Dubrovin-Zhang pair (K^{r-spin}, h^{r-spin}_{alpha,d}) in w variables."""
    return rspin_operator(ctx), rspin_hamiltonian(ctx, alpha, d)


def gd_flow_via_hamiltonian(ctx: GDContext, m: int) -> list[DiffPoly]:
    """The same flow through K^GD and the variational derivative (cross-check)."""
    return flow(gd_hamiltonian(ctx, m), gd_operator(ctx))


# -- dispersionless two-point data --------------------------------------------------------


class OmegaTable:
    """Genus-zero two-point data derived from one Hamiltonian density.

    ``density`` is Omega_{alpha,p+1;1,0}: the eps = 0 part of the
    h^{r-spin}_{alpha,p} density, a jet-free polynomial in the w fields with
    zero constant term.  The two-index family Omega_{alpha,p;beta,0} is its
    plain partial derivative in u^beta.
    """

    __slots__ = ("ring", "alpha", "p", "density")

    def __init__(self, ring: Ring, alpha: int, p: int, density: DiffPoly):
        self.ring = ring
        self.alpha = alpha
        self.p = p
        self.density = density

    def two_index(self, beta: int) -> DiffPoly:
        return self.density.partial(beta, 0)


def dispersionless_omega(ctx: GDContext, alpha: int, p: int) -> OmegaTable:
    """Omega_{alpha,p+1;1,0} plus the derived family, from the gd chain."""
    h = rspin_hamiltonian(ctx, alpha, p)
    density = h.density.eps_coefficient(0)
    if density.has_jets():
        raise ValueError(
            "eps = 0 density depends on jet variables; normalization is broken")
    constant = density.constant_term()
    if constant:
        density = density - DiffPoly.const(ctx.ring_w, constant)
    return OmegaTable(ctx.ring_w, alpha, p, density)
