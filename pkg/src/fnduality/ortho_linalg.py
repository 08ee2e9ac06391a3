"""Non-Archimedean linear algebra over Lambda with weighted valuations.

For weights t, nu_bar_t(v) = min_j (nu(v_j) - t_j).  Write each weight as
t_j = tau_j + omega(gamma_j) with tau_j the canonical representative of its
class mod omega(Gamma0).  Values nu(v_j) - t_j from different classes never
coincide, so the minimum of nu_bar_t is attained inside a single class.  The
residue of v is the vector of leading coefficients of v_j * gamma_j^-1 over the
coordinates attaining the minimum.

A family is orthogonal iff, class by class, its residues are linearly
independent over K; it is orthonormal if in addition nu_bar_t(u) = -tau for
the class of u (which is 0 for zero weights).  Orthonormal bases come from a
weighted reduced row echelon form whose pivots minimise weighted valuations.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .novikov_arith import POS_INF, ExactValue, Lam, LamRing, ValuationConfig, g_inv, lam_dot


@dataclass(frozen=True, eq=False)
class WeightedSpace:
    config: ValuationConfig
    weights: tuple

    @staticmethod
    def zero(config: ValuationConfig, n: int) -> "WeightedSpace":
        return WeightedSpace(config, tuple(ExactValue(0) for _ in range(n)))

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def ring(self) -> LamRing:
        return self.config.lam

    @cached_property
    def split(self) -> tuple:
        """(tau_j, gamma_j) with t_j = tau_j + omega(gamma_j)."""
        return tuple(self.config.decompose(t) for t in self.weights)

    @cached_property
    def gammas(self) -> tuple:
        R = self.ring
        return tuple(R.monomial(g) for _, g in self.split)

    def tau(self, j: int) -> ExactValue:
        return self.split[j][0]

    def class_key(self, j: int) -> tuple:
        tau = self.split[j][0]
        return (tau.a, tau.b)

    def zero_vector(self) -> tuple:
        R = self.ring
        return tuple(R.zero() for _ in range(self.dim))

    def unit(self, j: int) -> tuple:
        """gamma_j e_j: the normalized j-th coordinate vector."""
        R = self.ring
        return tuple(self.gammas[j] if i == j else R.zero() for i in range(self.dim))


def nu_bar_t(v: Sequence[Lam], space: WeightedSpace) -> ExactValue:
    best = POS_INF
    for x, t in zip(v, space.weights):
        if not x.is_zero():
            val = x.nu() - t
            if val < best:
                best = val
    return best


def nu_bar(v: Sequence[Lam]) -> ExactValue:
    """Unweighted nu_bar: min_j nu(v_j)."""
    best = POS_INF
    for x in v:
        if not x.is_zero():
            val = x.nu()
            if val < best:
                best = val
    return best


def residue(v: Sequence[Lam], space: WeightedSpace) -> tuple:
    """(level, class key, leading monomial, {j: coefficient}) of a nonzero vector."""
    level = nu_bar_t(v, space)
    if level == POS_INF:
        raise ValueError("zero vector has no residue")
    coeffs = {}
    key = mono = None
    for j, x in enumerate(v):
        if x.is_zero() or x.nu() - space.weights[j] != level:
            continue
        e, c = x.lead()
        g = tuple(a - b for a, b in zip(e, space.split[j][1]))
        key, mono = space.class_key(j), g
        coeffs[j] = c
    return level, key, mono, coeffs


# ---------------------------------------------------------------------------
# vector helpers


def vadd(u, v):
    return tuple(a + b for a, b in zip(u, v))


def vsub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def vscale(lam: Lam, v):
    if lam.is_zero():
        return tuple(lam for _ in v)
    return tuple(lam * a if not a.is_zero() else a for a in v)


def vaxpy(u, lam: Lam, v):
    """u - lam * v."""
    if lam.is_zero():
        return tuple(u)
    return tuple(a - lam * b if not b.is_zero() else a for a, b in zip(u, v))


def vis_zero(v) -> bool:
    return all(x.is_zero() for x in v)


def veq(u, v) -> bool:
    return len(u) == len(v) and all(a == b for a, b in zip(u, v))


def combination(coeffs: Sequence[Lam], vectors: Sequence[Sequence[Lam]], R: LamRing, n: int) -> tuple:
    acc = tuple(R.zero() for _ in range(n))
    for c, v in zip(coeffs, vectors):
        if not c.is_zero():
            acc = vadd(acc, vscale(c, v))
    return acc


# ---------------------------------------------------------------------------
# linear algebra over K (residues)


def _k_dependency(rows: Sequence[dict], F) -> list | None:
    """Coefficients a (not all 0) with sum a_i rows_i = 0, or None if independent."""
    m = len(rows)
    work = [(dict(r), {i: F.one()}) for i, r in enumerate(rows)]
    pivots: list = []
    for i in range(m):
        vec, comb = work[i]
        for pc, (pv, pcomb) in pivots:
            c = vec.get(pc, F.zero())
            if c != 0:
                f = F.div(c, pv[pc])
                for key, val in pv.items():
                    vec[key] = F.sub(vec.get(key, F.zero()), F.mul(f, val))
                for key, val in pcomb.items():
                    comb[key] = F.sub(comb.get(key, F.zero()), F.mul(f, val))
        vec = {k: v for k, v in vec.items() if v != 0}
        if not vec:
            dep = [comb.get(j, F.zero()) for j in range(m)]
            lead = next(a for a in dep if a != 0)
            return [F.div(a, lead) for a in dep]
        pc = min(vec)
        pivots.append((pc, (vec, comb)))
    return None


@dataclass(frozen=True)
class OrthoCheck:
    ok: bool
    counterexample: tuple | None = None  # coefficients lambda (Lam) violating the identity
    reason: str = ""

    def __bool__(self):
        return self.ok


def is_orthonormal(vectors: Sequence[Sequence[Lam]], space: WeightedSpace) -> OrthoCheck:
    """Exact residue criterion; a failing family comes with a witness lambda."""
    R = space.ring
    F = space.config.field
    info = []
    for idx, v in enumerate(vectors):
        if vis_zero(v):
            lam = tuple(R.one() if i == idx else R.zero() for i in range(len(vectors)))
            return OrthoCheck(False, lam, "zero vector")
        level, key, mono, coeffs = residue(v, space)
        tau = space.split[next(iter(coeffs))][0]
        if level != -tau:
            lam = tuple(R.one() if i == idx else R.zero() for i in range(len(vectors)))
            return OrthoCheck(False, lam, f"vector {idx} not normalized: nu_bar_t = {level}, expected {-tau}")
        info.append((key, mono, coeffs))
    by_class: dict = {}
    for idx, (key, mono, coeffs) in enumerate(info):
        by_class.setdefault(key, []).append(idx)
    for key, idxs in by_class.items():
        dep = _k_dependency([info[i][2] for i in idxs], F)
        if dep is not None:
            lam = [R.zero() for _ in vectors]
            for i, a in zip(idxs, dep):
                if a != 0:
                    lam[i] = R.monomial(g_inv(info[i][1]), a)
            return OrthoCheck(False, tuple(lam), "residues linearly dependent")
    return OrthoCheck(True)


# ---------------------------------------------------------------------------
# weighted reduced row echelon form


@dataclass(frozen=True, eq=False)
class OrthoBasis:
    """Orthonormal basis R_i of span(inputs) in weighted RREF.

    R_i has gamma_{J_i} at its pivot column J_i and 0 at the other pivots.
    R_i = sum_m transforms[i][m] * inputs[m]; kernel rows give relations
    sum_m kernel[r][m] * inputs[m] = 0 spanning all relations.
    """

    space: WeightedSpace
    vectors: tuple
    pivots: tuple
    transforms: tuple
    kernel: tuple

    @property
    def rank(self) -> int:
        return len(self.vectors)

    def coordinates(self, w: Sequence[Lam]) -> tuple:
        """Coefficients a_i with w - sum a_i R_i supported off the pivots."""
        return tuple(w[J] / self.space.gammas[J] for J in self.pivots)

    def project(self, w: Sequence[Lam]) -> tuple:
        """Pi' w: complement coordinate projection; kernel = span."""
        R = self.space.ring
        neg = [R.one()] + [-a for a in self.coordinates(w)]
        return tuple(lam_dot(R, neg, [x] + [r[i] for r in self.vectors]) for i, x in enumerate(w))

    def projector_matrix(self) -> tuple:
        """N x N matrix of Pi' (acting on column vectors)."""
        N = self.space.dim
        R = self.space.ring
        M = [[R.one() if i == j else R.zero() for j in range(N)] for i in range(N)]
        for J, r in zip(self.pivots, self.vectors):
            gi = self.space.gammas[J].inverse()
            for i in range(N):
                if not r[i].is_zero():
                    M[i][J] = M[i][J] - r[i] * gi
        return tuple(tuple(row) for row in M)


def _ff(piv: Lam, a: Lam, f: Lam, b: Lam, d: Lam) -> Lam:
    """(piv * a - f * b) / d."""
    x = piv * a if not a.is_zero() else a
    if not b.is_zero():
        x = x - f * b
    return x.exact_div(d) if not d.is_one() else x


def orthonormalize(vectors: Sequence[Sequence[Lam]], space: WeightedSpace, paths: dict | None = None) -> OrthoBasis:
    """Weighted RREF of the span.  ``paths`` may be shared by calls on the same vectors
    under different weights: it caches elimination states by pivot sequence."""
    R = space.ring
    N = space.dim
    m = len(vectors)
    t = space.weights
    for v in vectors:
        if len(v) != N:
            raise ValueError("vector length does not match the space")
    rows = [list(v) for v in vectors]
    T = [[R.one() if i == j else R.zero() for j in range(m)] for i in range(m)]

    def wval(x: Lam, j: int):
        return x.nu() - t[j]

    prev = [R.one()]
    path = [()]

    def eliminate(i: int, j: int):
        path[0] = path[0] + ((i, j),)
        hit = paths.get(path[0]) if paths is not None else None
        if hit is not None:
            rows[:], T[:], prev[0] = hit[0], hit[1], hit[2]
            return
        # fraction-free (Bareiss) step: entries stay minors, so the division is exact
        piv, d = rows[i][j], prev[0]
        for i2 in range(m):
            if i2 == i or rows[i2][j].is_zero():
                continue
            f = rows[i2][j]
            rows[i2] = [_ff(piv, a, f, b, d) for a, b in zip(rows[i2], rows[i])]
            T[i2] = [_ff(piv, a, f, b, d) for a, b in zip(T[i2], T[i])]
        prev[0] = piv
        if paths is not None:
            paths[path[0]] = (list(rows), list(T), piv)

    pivot_of: dict = {}  # row -> column
    used_cols: set = set()
    while True:
        best = None
        for i in range(m):
            if i in pivot_of:
                continue
            for j in range(N):
                if j in used_cols or rows[i][j].is_zero():
                    continue
                val = wval(rows[i][j], j)
                if best is None or val < best[0]:
                    best = (val, i, j)
        if best is None:
            break
        _, i, j = best
        pivot_of[i] = j
        used_cols.add(j)
        eliminate(i, j)

    # pivot exchanges until every row attains its level at its pivot
    changed = True
    while changed:
        changed = False
        for i in sorted(pivot_of):
            J = pivot_of[i]
            cur = wval(rows[i][J], J)
            best = None
            for j in range(N):
                if j in used_cols or rows[i][j].is_zero():
                    continue
                val = wval(rows[i][j], j)
                if val < cur and (best is None or val < best[0]):
                    best = (val, j)
            if best is not None:
                j = best[1]
                used_cols.discard(J)
                used_cols.add(j)
                pivot_of[i] = j
                eliminate(i, j)
                changed = True

    order = sorted(pivot_of, key=lambda i: pivot_of[i])
    basis, pivots, trans = [], [], []
    for i in order:
        J = pivot_of[i]
        key = ("unit", path[0], i)
        if paths is None or key not in paths:
            s = rows[i][J].inverse()
            unit = (vscale(s, rows[i]), vscale(s, T[i]))
            if paths is not None:
                paths[key] = unit
        else:
            unit = paths[key]
        basis.append(vscale(space.gammas[J], unit[0]))
        trans.append(vscale(space.gammas[J], unit[1]))
        pivots.append(J)
    kernel = tuple(tuple(T[i]) for i in range(m) if i not in pivot_of)
    return OrthoBasis(space, tuple(basis), tuple(pivots), tuple(trans), kernel)


def rescale_basis(B: OrthoBasis, monos: Sequence[Lam], space: WeightedSpace) -> OrthoBasis:
    """B in coordinates x_j -> monos[j] x_j, as an orthonormal basis of ``space``."""
    vecs = tuple(tuple(m * x if not x.is_zero() else x for m, x in zip(monos, v)) for v in B.vectors)
    for v, J in zip(vecs, B.pivots):
        if not veq((v[J],), (space.gammas[J],)):
            raise ValueError("rescaled basis is not normalized for the target weights")
    return OrthoBasis(space, vecs, B.pivots, B.transforms, B.kernel)


def extend_orthonormal(
    basis: Sequence[Sequence[Lam]], space: WeightedSpace, ambient: Sequence[Sequence[Lam]] | None = None
) -> tuple:
    """Complete an orthonormal family to an orthonormal basis of Lambda^N.

    Candidates come from ``ambient`` (an orthonormal basis, default gamma_j e_j)
    and are added when their residue is new within its class.
    """
    chk = is_orthonormal(basis, space)
    if not chk.ok:
        raise ValueError(f"input is not orthonormal: {chk.reason}")
    F = space.config.field
    cands = ambient if ambient is not None else [space.unit(j) for j in range(space.dim)]
    out = [tuple(v) for v in basis]
    res: dict = {}
    for v in out:
        _, key, _, coeffs = residue(v, space)
        res.setdefault(key, []).append(coeffs)
    for c in cands:
        if len(out) == space.dim:
            break
        _, key, _, coeffs = residue(c, space)
        trial = res.get(key, []) + [coeffs]
        if _k_dependency(trial, F) is None:
            res[key] = trial
            out.append(tuple(c))
    if len(out) != space.dim:
        raise ValueError("ambient family does not complete the basis")
    return tuple(out)


def projector_onto_complement(U: Sequence[Sequence[Lam]], space: WeightedSpace) -> tuple:
    """Matrix of Pi' with ker Pi' = span(U), Pi'^2 = Pi', nu_bar_t non-decreasing."""
    return orthonormalize(U, space).projector_matrix()


def apply_matrix(M: Sequence[Sequence[Lam]], v: Sequence[Lam], R: LamRing) -> tuple:
    return tuple(lam_dot(R, row, v) for row in M)


def matmul(A: Sequence[Sequence[Lam]], B: Sequence[Sequence[Lam]], R: LamRing) -> tuple:
    n = len(B[0]) if B else 0
    out = []
    for row in A:
        out.append(tuple(lam_dot(R, row, [brow[j] for brow in B]) for j in range(n)))
    return tuple(out)


@dataclass(frozen=True)
class Membership:
    member: bool
    coefficients: tuple | None = None  # lambda with sum lambda_i u_i = v
    residual: tuple | None = None  # nonzero remainder certifying non-membership

    def __bool__(self):
        return self.member


def solve_in_subspace(v: Sequence[Lam], U: Sequence[Sequence[Lam]], space: WeightedSpace | None = None) -> Membership:
    R = v[0].R if v else None
    if space is None:
        cfg = v[0].R.config if v else U[0][0].R.config
        space = WeightedSpace.zero(cfg, len(v))
    R = space.ring
    if not U:
        return Membership(True, (), None) if vis_zero(v) else Membership(False, None, tuple(v))
    ob = orthonormalize(U, space)
    a = ob.coordinates(v)
    rem = ob.project(v)
    if not vis_zero(rem):
        return Membership(False, None, rem)
    lam = [R.zero() for _ in U]
    for ai, tr in zip(a, ob.transforms):
        for mi, x in enumerate(tr):
            if not x.is_zero():
                lam[mi] = lam[mi] + ai * x
    return Membership(True, tuple(lam), None)


def kernel_basis(M: Sequence[Sequence[Lam]], ncols: int, R: LamRing) -> tuple:
    """Basis of {x : M x = 0} as column vectors."""
    rows = len(M)
    cols = [tuple(M[i][j] for i in range(rows)) for j in range(ncols)]
    if rows == 0:
        return tuple(tuple(R.one() if i == j else R.zero() for i in range(ncols)) for j in range(ncols))
    space = WeightedSpace.zero(R.config, rows)
    return orthonormalize(cols, space).kernel


def rank(vectors: Sequence[Sequence[Lam]], space: WeightedSpace) -> int:
    return orthonormalize(vectors, space).rank if vectors else 0


# ---------------------------------------------------------------------------
# barcodes


def _vkey(v: ExactValue) -> tuple:
    return (float(v), v.a, v.b)


@dataclass(frozen=True, eq=False)
class Barcode:
    """finite[k]: bars (birth, death) of d: C_k -> C_{k-1}; infinite[k]: classes in H_k.

    Bars are reported at the levels of the complex's own representatives.
    Translating a bar by omega(g) gives the same bar, so equality compares
    canonical forms with the birth moved to its coset representative.
    """

    config: ValuationConfig
    finite: tuple  # ((k, ((birth, death), ...)), ...)
    infinite: tuple  # ((k, (value, ...)), ...)

    def finite_bars(self, k: int) -> tuple:
        return dict(self.finite).get(k, ())

    def infinite_bars(self, k: int) -> tuple:
        return dict(self.infinite).get(k, ())

    def key(self) -> tuple:
        cfg = self.config
        f = []
        for k, bars in self.finite:
            canon = sorted(
                (((b.a, b.b), (d.a, d.b)) for b, d in (canonical_bar(cfg, b0, d0) for b0, d0 in bars))
            )
            if canon:
                f.append((k, tuple(canon)))
        i = []
        for k, vals in self.infinite:
            canon = sorted((v.a, v.b) for v in (cfg.canonical(x) for x in vals))
            if canon:
                i.append((k, tuple(canon)))
        return tuple(f), tuple(i)

    def __eq__(self, other):
        if not isinstance(other, Barcode):
            return NotImplemented
        return self.key() == other.key()

    __hash__ = None

    def depth(self, k: int) -> ExactValue:
        """Longest finite bar of d: C_{k+1} -> C_k (0 if none)."""
        best = ExactValue(0)
        for b, d in self.finite_bars(k + 1):
            if b - d > best:
                best = b - d
        return best


def canonical_bar(cfg: ValuationConfig, birth: ExactValue, death: ExactValue) -> tuple:
    rep, g = cfg.decompose(birth)
    return rep, death - cfg.omega_of(g)


def finite_bars_of(spec, k: int, generators: bool = False) -> list:
    """Bars of d: C_k -> C_{k-1} by gap-minimal filtered elimination.

    The pivot of least gap s_j - t_i + nu(M_ij) admits filtered column and row
    operations clearing its row and column; both bases stay orthogonal, so
    the pivots are the singular values of d.  With ``generators`` each bar
    also carries its birth chain u (coefficient vector in C_k).
    """
    R = spec.ring
    M = [list(r) for r in spec.matrix(k)]
    s = spec.actions(k)
    t = spec.actions(k - 1)
    rows = list(range(len(t)))
    cols = list(range(len(s)))
    U = [[R.one() if a == b else R.zero() for a in range(len(s))] for b in range(len(s))] if generators else None
    bars = []
    while True:
        best = None
        for i in rows:
            for j in cols:
                x = M[i][j]
                if x.is_zero():
                    continue
                gap = s[j] - t[i] + x.nu()
                if best is None or gap < best[0]:
                    best = (gap, i, j)
        if best is None:
            break
        gap, i, j = best
        piv = M[i][j]
        if generators:
            bars.append((s[j], t[i] - piv.nu(), tuple(U[j])))
        else:
            bars.append((s[j], t[i] - piv.nu()))
        rows.remove(i)
        cols.remove(j)
        if generators:
            for j2 in cols:
                if not M[i][j2].is_zero():
                    U[j2] = list(vaxpy(U[j2], M[i][j2] / piv, U[j]))
        for i2 in rows:
            if M[i2][j].is_zero():
                continue
            f = M[i2][j] / piv
            for j2 in cols:
                if not M[i][j2].is_zero():
                    M[i2][j2] = M[i2][j2] - f * M[i][j2]
    return bars


def homology_basis(spec, k: int) -> tuple:
    """(boundary basis, homology generators) in degree k.

    The boundary basis is an orthonormal basis of Im d_{k+1}; the generators
    complete it to an orthonormal basis of ker d_k, so each generator has the
    least level in its homology class.
    """
    return spec.memo(("homology_basis", k), lambda: _homology_basis(spec, k))


def _homology_basis(spec, k: int) -> tuple:
    R = spec.ring
    n = spec.size(k)
    space = WeightedSpace(spec.config, tuple(spec.actions(k)))
    Z = kernel_basis(spec.matrix(k), n, R) if spec.size(k - 1) else tuple(
        tuple(R.one() if i == j else R.zero() for i in range(n)) for j in range(n)
    )
    Mk1 = spec.matrix(k + 1)
    img = [tuple(Mk1[i][j] for i in range(n)) for j in range(spec.size(k + 1))]
    B = orthonormalize(img, space) if img else orthonormalize([], space)
    proj = [B.project(z) for z in Z]
    H = orthonormalize(proj, space) if proj else orthonormalize([], space)
    return B, H


def homology_generators(spec, k: int) -> list:
    """(generator, level) per homology basis vector, rescaled so the level is the pivot action."""
    _, H = homology_basis(spec, k)
    out = []
    t = spec.actions(k)
    for v, J in zip(H.vectors, H.pivots):
        inv = H.space.gammas[J].inverse()
        out.append((tuple(x * inv if not x.is_zero() else x for x in v), t[J]))
    return out


def barcode_reduce(spec) -> Barcode:
    return spec.memo(("barcode",), lambda: _barcode_reduce(spec))


def _barcode_reduce(spec) -> Barcode:
    cfg = spec.config
    finite, infinite = [], []
    for k in spec.degrees:
        if spec.size(k - 1) and spec.has_boundary(k):
            bars = finite_bars_of(spec, k)
            bars.sort(key=lambda bd: (_vkey(bd[0]), _vkey(bd[1])))
            if bars:
                finite.append((k, tuple(bars)))
        _, H = homology_basis(spec, k)
        t = spec.actions(k)
        vals = sorted((t[J] for J in H.pivots), key=_vkey)
        if vals:
            infinite.append((k, tuple(vals)))
    return Barcode(cfg, tuple(finite), tuple(infinite))


# ---------------------------------------------------------------------------
# optimal representatives


def image_vectors(spec, k: int) -> list:
    """Columns of d_{k+1}: the images of the degree k+1 generators in C_k."""
    n = spec.size(k)
    M = spec.matrix(k + 1)
    return [tuple(M[i][j] for i in range(n)) for j in range(spec.size(k + 1))]


def image_basis(spec, k: int) -> OrthoBasis:
    """Orthonormal basis of Im(d_{k+1}) in C_k for the action weights."""

    def build():
        space = WeightedSpace(spec.config, tuple(spec.actions(k)))
        return orthonormalize(image_vectors(spec, k), space)

    return spec.memo(("image", k), build)


def project_optimal(c0, spec, k: int | None = None, with_b: bool = True) -> tuple:
    """(c, b0) with c = c0 - d b0 of least level among c0 - d b; b0 is None unless with_b."""
    from .fn_complex import Chain

    k = c0.degree if k is None else k
    if c0.degree != k:
        raise ValueError("chain degree mismatch")
    R = spec.ring
    B = image_basis(spec, k)
    c = B.project(c0.coeffs)
    if not with_b:
        return Chain(k, c), None
    a = B.coordinates(c0.coeffs)
    b = [lam_dot(R, a, [tr[m] for tr in B.transforms]) for m in range(spec.size(k + 1))]
    return Chain(k, c), Chain(k + 1, tuple(b))
