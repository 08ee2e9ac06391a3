"""Pairings, spectral numbers, boundary depth and nondegeneracy witnesses.

Op chains (chains of ``opposite(spec)``) use coordinates in which
L(d, c) = sum_i d_i c_i, Delta = tau o L, and the adjoint of a matrix A on C_k
is its transpose acting on D_{-k}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .fn_complex import (
    Chain,
    ComplexSpec,
    WindowInfeasible,
    boundary_apply,
    chain_zero,
    ell,
    opposite,
    rebase,
    reduce_mod_filtration,
    transpose,
)
from .novikov_arith import (
    NEG_INF,
    POS_INF,
    ExactValue,
    Lam,
    NovikovScalar,
    PrecisionExhausted,
    g_inv,
    tau_lam,
)
from .ortho_linalg import (
    _ff,
    OrthoBasis,
    WeightedSpace,
    apply_matrix,
    barcode_reduce,
    homology_basis,
    homology_generators,
    image_basis,
    kernel_basis,
    nu_bar_t,
    orthonormalize,
    project_optimal,
    rescale_basis,
    solve_in_subspace,
    vis_zero,
)


class UnsupportedAlpha(ValueError):
    """alpha is non-generic for the left witness (-alpha is an op action level)."""


# ---------------------------------------------------------------------------
# pairings


def pairing_L(d: Chain, c: Chain) -> Lam:
    if d.degree != -c.degree or len(d.coeffs) != len(c.coeffs):
        raise ValueError("L pairs D_{-k} with C_k")
    R = c.coeffs[0].R if c.coeffs else None
    if R is None:
        raise ValueError("empty degree")
    acc = R.zero()
    for a, b in zip(d.coeffs, c.coeffs):
        if not a.is_zero() and not b.is_zero():
            acc = acc + a * b
    return acc


def tau(x):
    """Coefficient of the identity element."""
    if isinstance(x, Lam):
        return tau_lam(x)
    if isinstance(x, NovikovScalar):
        ident = x.config.identity()
        if not x.cutoff > 0:
            raise PrecisionExhausted("identity coefficient lies beyond the cutoff")
        return x.term_dict().get(ident, x.config.field.zero())
    raise TypeError(f"cannot take tau of {type(x).__name__}")


def pairing_Delta(d: Chain, c: Chain):
    if not c.coeffs:
        return 0
    return tau(pairing_L(d, c))


def adjoint_matrix(A: Sequence[Sequence[Lam]]) -> tuple:
    """A* with Delta(A* d, c) = Delta(d, A c): the transpose in op coordinates."""
    return transpose(A)


def filtration_shift(A: Sequence[Sequence[Lam]], weights: Sequence[ExactValue]) -> ExactValue:
    """Least eps with l(Ac) <= l(c) + eps for all c (-inf for A = 0)."""
    best = NEG_INF
    for j, row in enumerate(A):
        for i, x in enumerate(row):
            if not x.is_zero():
                v = weights[j] - weights[i] - x.nu()
                if v > best:
                    best = v
    return best


# ---------------------------------------------------------------------------
# spectral numbers and boundary depth


def is_cycle(spec: ComplexSpec, c: Chain) -> bool:
    return boundary_apply(spec, c).is_zero()


def spectral_number(spec: ComplexSpec, c: Chain) -> ExactValue:
    """Least level in the homology class of the cycle c (-inf for boundaries)."""
    if not is_cycle(spec, c):
        raise ValueError("spectral_number needs a cycle")
    opt, _ = project_optimal(c, spec, with_b=False)
    return ell(spec, opt)


def boundary_depth(spec: ComplexSpec, k: int) -> ExactValue:
    """Longest finite bar of d: C_{k+1} -> C_k (0 if none)."""
    return barcode_reduce(spec).depth(k)


def _kernel_basis_of(spec: ComplexSpec, k: int) -> OrthoBasis:
    """Orthonormal basis of ker d_k inside C_k (action weights)."""
    return spec.memo(("kernel_basis", k), lambda: _build_kernel_basis(spec, k))


def _build_kernel_basis(spec: ComplexSpec, k: int) -> OrthoBasis:
    R = spec.ring
    n = spec.size(k)
    space = WeightedSpace(spec.config, tuple(spec.actions(k)))
    if spec.size(k - 1):
        Z = kernel_basis(spec.matrix(k), n, R)
    else:
        Z = tuple(tuple(R.one() if i == j else R.zero() for i in range(n)) for j in range(n))
    return orthonormalize(list(Z), space)


def boundary_depth_definition(spec: ComplexSpec, k: int) -> ExactValue:
    """max over an orthonormal basis x of Im d_{k+1} of (least primitive level - l(x))."""
    B = image_basis(spec, k)
    if not B.rank:
        return ExactValue(0)
    K = _kernel_basis_of(spec, k + 1)
    best = ExactValue(0)
    for x, prim in zip(B.vectors, B.transforms):
        opt = K.project(prim)
        depth = ell(spec, Chain(k + 1, opt)) - ell(spec, Chain(k, x))
        if depth > best:
            best = depth
    return best


def linking_form(spec: ComplexSpec, x: Chain, y: Chain, check: bool = True):
    """lambda(x, y) = Delta(x, c) for d c = y; x in Im(delta), y in Im(d)."""
    k = y.degree + 1
    if x.degree != -k:
        raise ValueError("linking form pairs Im(delta) in D_{-k} with Im(d) in C_{k-1}")
    M = spec.matrix(k)
    cols = [tuple(M[i][j] for i in range(spec.size(k - 1))) for j in range(spec.size(k))]
    sol = solve_in_subspace(y.coeffs, cols, WeightedSpace.zero(spec.config, spec.size(k - 1)))
    if not sol:
        raise ValueError("y is not a boundary")
    c = Chain(k, sol.coefficients)
    val = pairing_Delta(x, c)
    if check:
        rows = [tuple(M[i][j] for j in range(spec.size(k))) for i in range(spec.size(k - 1))]
        solx = solve_in_subspace(x.coeffs, rows, WeightedSpace.zero(spec.config, spec.size(k)))
        if not solx:
            raise ValueError("x is not an op boundary")
        d = Chain(-k + 1, solx.coefficients)
        other = pairing_Delta(d, y)
        if other != val:
            raise AssertionError("linking form depends on the primitive")
    return val


def boundary_depth_via_linking(spec: ComplexSpec, k: int) -> ExactValue:
    """-min({0} u {l(y) + l_op(x) : lambda(x, y) != 0}) over Im(delta) x Im(d_k).

    For orthonormal basis pairs (x_i, y_j) the rescalings g x_i, h y_j sweep
    lambda over the coefficients of L(x_i, c_j); the smallest exponent gives
    l(y_j) + l_op(x_i) + nu(L(x_i, c_j)).
    """
    if not spec.size(k) or not spec.size(k - 1):
        return ExactValue(0)
    Y = image_basis(spec, k - 1)
    op = opposite(spec)
    X = image_basis(op, -k)
    best = ExactValue(0)
    for x in X.vectors:
        lx = -nu_bar_t(x, X.space)
        for y, prim in zip(Y.vectors, Y.transforms):
            L = pairing_L(Chain(-k, x), Chain(k, prim))
            if L.is_zero():
                continue
            v = -nu_bar_t(y, Y.space) + lx + L.nu()
            if v < best:
                best = v
    return -best


def class_is_nonzero_in_quotient(spec: ComplexSpec, c: Chain, alpha: ExactValue) -> bool:
    """Is [c] != 0 in H(C^(alpha, inf))?  c must satisfy l(d c) <= alpha."""
    alpha = ExactValue.coerce(alpha)
    if not ell(spec, boundary_apply(spec, c)) <= alpha:
        raise ValueError("c is not a relative cycle: l(dc) > alpha")
    opt, _ = project_optimal(c, spec, with_b=False)
    return ell(spec, opt) > alpha


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True, eq=False)
class WitnessReport:
    side: str  # "right" | "left"
    alpha: ExactValue
    route: str  # "rebase" | "weighted" | "absolute"
    chain: Chain  # representative in C_k
    dual: Chain  # op chain in D_{-k}
    level: ExactValue  # l_op(dual) (right) or l(d chain) (left)
    pairing: object
    certificates: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.certificates.values())

    def revalidate(self, spec: ComplexSpec) -> dict:
        return certify(spec, self.side, self.alpha, self.chain, self.dual)

    def summary(self) -> str:
        lines = [
            f"side: {self.side}",
            f"alpha: {self.alpha}",
            f"route: {self.route}",
            f"level: {self.level}",
            f"pairing: {self.pairing}",
        ]
        for name, ok in self.certificates.items():
            lines.append(f"  {name}: {'pass' if ok else 'FAIL'}")
        return "\n".join(lines)


def certify(spec: ComplexSpec, side: str, alpha: ExactValue, c: Chain, d: Chain) -> dict:
    """Re-run every certificate from the chains alone."""
    op = opposite(spec)
    out = {}
    out["dual_cycle"] = boundary_apply(op, d).is_zero()
    out["dual_filtration"] = ell(op, d) < -alpha
    out["relative_cycle"] = ell(spec, boundary_apply(spec, c)) <= alpha
    out["pairing_nonzero"] = pairing_Delta(d, c) != 0
    return out


def _monomial_chain(R, n: int, i: int, g) -> tuple:
    return tuple(R.monomial(g) if j == i else R.zero() for j in range(n))


def _top_term(spec: ComplexSpec, c: Chain) -> tuple:
    """(i, g) with g p_i in the support of c at level l(c)."""
    lvl = ell(spec, c)
    for i, (t, x) in enumerate(zip(spec.actions(c.degree), c.coeffs)):
        if not x.is_zero() and t - x.nu() == lvl:
            return i, x.lead()[0]
    raise ValueError("zero chain")


def dual_witness_right(spec: ComplexSpec, alpha, c0: Chain, route: str = "auto") -> WitnessReport:
    """d0 in D_{-k} with delta d0 = 0, l_op(d0) < -alpha and Delta(d0, c0) != 0."""
    alpha = ExactValue.coerce(alpha)
    k = c0.degree
    R = spec.ring
    if not ell(spec, boundary_apply(spec, c0)) <= alpha:
        raise ValueError("c is not a relative cycle: l(dc) > alpha")
    c, _ = project_optimal(c0, spec, with_b=False)
    lc = ell(spec, c)
    if not lc > alpha:
        raise ValueError("class of c0 vanishes in the quotient")
    if route == "auto":
        route = "rebase" if spec.config.dense else "weighted"
    if route == "rebase":
        eps = (lc - alpha) / 4
        try:
            spec_r, rec = rebase(spec, k, alpha, eps)
        except WindowInfeasible:
            route = "weighted"
    if route == "rebase":
        cr = rec.chain_to_new(c, R)
        # zero weights after rebasing are the weights omega(g_i) before it
        cfg = spec.config
        shifted = WeightedSpace(cfg, tuple(cfg.omega_of(g) for g in rec.shifts))
        paths = spec.memo(("image_paths", k), dict)
        Bw = orthonormalize(_image_cols(spec, k), shifted, paths)
        space = WeightedSpace.zero(cfg, spec.size(k))
        U = rescale_basis(Bw, [R.monomial(g_inv(g)) for g in rec.shifts], space)
        c1 = Chain(k, U.project(cr.coeffs))
        i, g = _top_term(spec_r, c1)
        p = _monomial_chain(R, spec.size(k), i, g_inv(g))
        d0r = _apply_projector_transpose(U, p)
        d0 = rec.op_to_old(Chain(-k, d0r), R)
        c_rep = rec.chain_to_old(c1, R)
    elif route == "weighted":
        U = image_basis(spec, k)
        c1 = Chain(k, U.project(c.coeffs))
        i, g = _top_term(spec, c1)
        p = _monomial_chain(R, spec.size(k), i, g_inv(g))
        d0 = Chain(-k, _apply_projector_transpose(U, p))
        c_rep = c1
    else:
        raise ValueError(f"unknown route {route!r}")
    op = opposite(spec)
    certs = certify(spec, "right", alpha, c_rep, d0)
    certs["same_class"] = pairing_Delta(d0, c0) == pairing_Delta(d0, c_rep)
    return WitnessReport("right", alpha, route, c_rep, d0, ell(op, d0), pairing_Delta(d0, c_rep), certs)


def _image_cols(spec: ComplexSpec, k: int) -> list:
    n = spec.size(k)
    M = spec.matrix(k + 1)
    return [tuple(M[i][j] for i in range(n)) for j in range(spec.size(k + 1))]


def _apply_projector_transpose(B: OrthoBasis, p: Sequence[Lam]) -> tuple:
    """Pi'^T p for the complement projector of B."""
    M = B.projector_matrix()
    return apply_matrix(transpose(M), p, B.space.ring)


def _first_row_of_inverse(M: list, R) -> list:
    """Row 0 of M^-1, i.e. y with M^T y = e_0, by fraction-free Gauss-Jordan."""
    n = len(M)
    rows = [[M[j][i] for j in range(n)] + [R.one() if i == 0 else R.zero()] for i in range(n)]
    prev = R.one()
    for col in range(n):
        p = next(r for r in range(col, n) if not rows[r][col].is_zero())
        rows[col], rows[p] = rows[p], rows[col]
        piv = rows[col][col]
        for r in range(n):
            if r != col:
                f = rows[r][col]
                rows[r] = [_ff(piv, a, f, b, prev) if not f.is_zero() else _ff(piv, a, f, f, prev) for a, b in zip(rows[r], rows[col])]
        prev = piv
    return [rows[i][n] / rows[i][i] for i in range(n)]


def dual_witness_left(spec: ComplexSpec, alpha, d: Chain, route: str = "auto") -> WitnessReport:
    """Relative cycle c with l(d c) <= alpha and Delta(d, c) != 0 for an op cycle d."""
    alpha = ExactValue.coerce(alpha)
    k = -d.degree
    R = spec.ring
    op = opposite(spec)
    if not boundary_apply(op, d).is_zero():
        raise ValueError("d is not a delta-cycle")
    if not ell(op, d) < -alpha:
        raise ValueError("d does not lie in D^(-inf, -alpha)")
    # Im(delta) in D_{-k}: columns of M_k^T
    deltaU = _image_cols(op, -k)
    sol = solve_in_subspace(d.coeffs, deltaU, WeightedSpace.zero(spec.config, spec.size(k))) if deltaU else None
    if sol is None or not sol:
        B = image_basis(op, -k)
        d1 = B.project(d.coeffs)
        i, g = _top_term(op, Chain(-k, d1))
        p = _monomial_chain(R, spec.size(k), i, g_inv(g))
        c = Chain(k, _apply_projector_transpose(B, p))
        return _left_report(spec, alpha, "absolute", c, d)
    x0 = Chain(-k + 1, sol.coefficients)
    Kop = _kernel_basis_of(op, -k + 1)
    xstar = Chain(-k + 1, Kop.project(x0.coeffs))
    lx = ell(op, xstar)
    if lx < -alpha:
        raise ValueError("class of d vanishes in H(D^(-inf, -alpha))")
    if lx == -alpha:
        raise UnsupportedAlpha("only primitives at level -alpha exist; alpha is non-generic")
    if route == "auto":
        route = "rebase" if spec.config.dense else "weighted"
    if route == "rebase":
        eps = (lx + alpha) / 4
        try:
            op_r, rec = rebase(op, -k + 1, -alpha, eps)
        except WindowInfeasible:
            route = "weighted"
    if route == "rebase":
        space = WeightedSpace.zero(spec.config, spec.size(k - 1))
        x0r = rec.chain_to_new(x0, R)
    elif route == "weighted":
        op_r = op
        space = WeightedSpace(spec.config, tuple(op.actions(-k + 1)))
        x0r = x0
    else:
        raise ValueError(f"unknown route {route!r}")
    c = _left_core(op_r, k, d, x0r, space, R)
    c_rel = reduce_mod_filtration(spec, c, alpha)
    return _left_report(spec, alpha, route, c_rel, d)


def _left_core(op_r: ComplexSpec, k: int, d: Chain, x0: Chain, space: WeightedSpace, R) -> Chain:
    n = op_r.size(-k)  # = size of C_k
    m = op_r.size(-k + 1)
    delta = op_r.matrix(-k + 1)  # D_{-k+1} -> D_{-k}
    # orthonormal basis of ker(delta) and the primitive orthogonal to it
    if n:
        Z = kernel_basis(delta, m, R)
    else:
        Z = tuple(tuple(R.one() if i == j else R.zero() for i in range(m)) for j in range(m))
    if space.weights == tuple(op_r.actions(-k + 1)):
        KB = _kernel_basis_of(op_r, -k + 1)
    else:
        KB = orthonormalize(list(Z), space)
    x = KB.project(x0.coeffs)
    lev = nu_bar_t(x, space)
    j0 = next(j for j, xj in enumerate(x) if not xj.is_zero() and xj.nu() - space.weights[j] == lev)
    e, _ = x[j0].lead()
    shift = tuple(a - b for a, b in zip(e, space.split[j0][1]))
    xn = tuple(v * R.monomial(g_inv(shift)) for v in x)
    full = KB.vectors + (xn,)
    from .ortho_linalg import extend_orthonormal

    basis = extend_orthonormal(full, space)
    rest = basis[len(full):]
    # basis of D_{-k}: d, delta(x'_j), then standard vectors
    cols = [tuple(d.coeffs)] + [apply_matrix(delta, xv, R) for xv in rest]
    cand = [tuple(R.one() if i == j else R.zero() for i in range(n)) for j in range(n)]
    for e_vec in cand:
        if len(cols) == n:
            break
        trial = cols + [e_vec]
        sp0 = WeightedSpace.zero(space.config, n)
        if orthonormalize(trial, sp0).rank == len(trial):
            cols = trial
    Bm = [[cols[j][i] for j in range(n)] for i in range(n)]
    mu = _first_row_of_inverse(Bm, R)
    # p: top term of d; f = d_{i1} * k0^-1
    lvl_op = ell(op_r, d)
    i1 = next(
        i for i, (t, xv) in enumerate(zip(op_r.actions(-k), d.coeffs)) if not xv.is_zero() and t - xv.nu() == lvl_op
    )
    k0 = d.coeffs[i1].lead()[0]
    f = d.coeffs[i1] * R.monomial(g_inv(k0))
    f_nonneg = f - f.trunc_below(ExactValue(0))
    return Chain(k, tuple(mi * f_nonneg if not mi.is_zero() else mi for mi in mu))


def _left_report(spec: ComplexSpec, alpha: ExactValue, route: str, c: Chain, d: Chain) -> WitnessReport:
    certs = certify(spec, "left", alpha, c, d)
    return WitnessReport("left", alpha, route, c, d, ell(spec, boundary_apply(spec, c)), pairing_Delta(d, c), certs)


# ---------------------------------------------------------------------------
# spectral duality


@dataclass(frozen=True, eq=False)
class DualityReport:
    rho: ExactValue
    rho_op_best: ExactValue
    exact: bool
    grid: tuple  # (alpha, ok, rho_op of witness)
    lower_bound: tuple  # (rho_op(b), ok)
    best_witness: Chain | None = None

    @property
    def ok(self) -> bool:
        return self.exact and all(g[1] for g in self.grid) and all(b[1] for b in self.lower_bound)


def op_homology_samples(spec: ComplexSpec, k: int) -> list:
    """Op cycles in D_{-k}: homology generators and their pairwise sums."""
    op = opposite(spec)
    vecs = [Chain(-k, v) for v, _ in homology_generators(op, -k)]
    out = list(vecs)
    for a in range(len(vecs)):
        for b in range(a + 1, len(vecs)):
            out.append(vecs[a] + vecs[b])
    return out


def verify_spectral_duality(
    spec: ComplexSpec, c: Chain, grid: Sequence[ExactValue] = (), samples: Sequence[Chain] = ()
) -> DualityReport:
    """rho(a) = -inf{rho_op(b) : Delta(b, a) != 0}, both directions."""
    op = opposite(spec)
    rho = spectral_number(spec, c)
    if rho == NEG_INF:
        raise ValueError("c is a boundary")
    w = dual_witness_right(spec, rho - 1, c, route="weighted")
    best = spectral_number(op, w.dual)
    exact = best == -rho and pairing_Delta(w.dual, c) != 0 and w.ok
    grid_out = []
    for a in grid:
        if not a < rho:
            continue
        r = dual_witness_right(spec, a, c)
        ro = spectral_number(op, r.dual)
        grid_out.append((a, bool(r.ok and ro < -a and pairing_Delta(r.dual, c) != 0), ro))
    lower = []
    for b in list(samples) + op_homology_samples(spec, c.degree) + [w.dual]:
        if b.degree != -c.degree or not is_cycle(op, b) or pairing_Delta(b, c) == 0:
            continue
        ro = spectral_number(op, b)
        lower.append((ro, ro >= -rho))
    return DualityReport(rho, best, exact, tuple(grid_out), tuple(lower), w.dual)


def beta_triple(spec: ComplexSpec, k: int) -> tuple:
    """(beta_{k-1}(c), beta_{-k}(c_op), linking value)."""
    return (
        boundary_depth(spec, k - 1),
        boundary_depth(opposite(spec), -k),
        boundary_depth_via_linking(spec, k),
    )
