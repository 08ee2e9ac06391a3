"""Graded filtered Floer-Novikov complexes: data model, axioms, filtrations, I/O.

A complex stores one representative p_i per orbit, with grading k_i and action
t_i.  The boundary in degree k is a matrix M_k over Lambda with rows indexed by
degree k-1 orbits and columns by degree k orbits: d p_i = sum_j M_k[j][i] p_j.

Chains carry exact coefficients in K(Gamma0) (class ``Lam``).  A chain of the
opposite complex uses the coordinates mu_i = sum_h d_{i,h} h for the element
sum d_{i,h} h^-1 p_i, so the opposite complex is again an ordinary complex:
actions -t, gradings -k and boundary matrices transposed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .novikov_arith import (
    NEG_INF,
    POS_INF,
    ZERO,
    ConfigError,
    ExactValue,
    Field,
    Lam,
    NovikovScalar,
    ValuationConfig,
    format_basis_descriptor,
    g_inv,
    lam_dot,
    parse_basis_descriptor,
    combine,
    qsign,
)


class FncParseError(ValueError):
    """Malformed .fnc or chain input; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class WindowInfeasible(ValueError):
    """No group element moves an action into the requested window."""


@dataclass(frozen=True)
class Orbit:
    id: str
    grading: int
    action: ExactValue


@dataclass(frozen=True)
class Violation:
    kind: str  # "filtration" | "d-squared" | "shape" | "inexact"
    degree: int
    row: int
    col: int
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(f"{v.kind} (degree {v.degree}, entry [{v.row}][{v.col}]): {v.detail}" for v in self.violations)


@dataclass(frozen=True, eq=False)
class ComplexSpec:
    config: ValuationConfig
    orbits: tuple
    boundary: tuple = ()  # ((k, matrix), ...), k ascending, zero matrices omitted
    window: ExactValue | None = None

    def __post_init__(self):
        ids = [o.id for o in self.orbits]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate orbit ids")
        cleaned = []
        for k, m in sorted(self.boundary, key=lambda t: t[0]):
            m = tuple(tuple(row) for row in m)
            if any(not x.is_zero() for row in m for x in row):
                cleaned.append((k, m))
        object.__setattr__(self, "boundary", tuple(cleaned))

    # -- structure ---------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, ComplexSpec):
            return NotImplemented
        return (
            self.config == other.config
            and self.orbits == other.orbits
            and self.boundary == other.boundary
            and self.window == other.window
        )

    __hash__ = None

    @cached_property
    def _by_degree(self) -> dict:
        out: dict = {}
        for idx, o in enumerate(self.orbits):
            out.setdefault(o.grading, []).append(idx)
        return out

    @cached_property
    def _bmap(self) -> dict:
        return dict(self.boundary)

    @property
    def degrees(self) -> list:
        return sorted(self._by_degree)

    def gens(self, k: int) -> list:
        """Orbit indices of degree k, in declaration order."""
        return list(self._by_degree.get(k, ()))

    def size(self, k: int) -> int:
        return len(self._by_degree.get(k, ()))

    def actions(self, k: int) -> list:
        return [self.orbits[i].action for i in self.gens(k)]

    def index_of(self, orbit_id: str) -> tuple:
        """(degree, position within degree) of an orbit id."""
        for idx, o in enumerate(self.orbits):
            if o.id == orbit_id:
                return o.grading, self.gens(o.grading).index(idx)
        raise KeyError(orbit_id)

    def boundary_matrix(self, k: int) -> tuple:
        """Scalar matrix of d: C_k -> C_{k-1} (rows degree k-1, columns degree k)."""
        m = self._bmap.get(k)
        if m is not None:
            return m
        z = NovikovScalar.zero(self.config)
        return tuple(tuple(z for _ in range(self.size(k))) for _ in range(self.size(k - 1)))

    def has_boundary(self, k: int) -> bool:
        return k in self._bmap

    @cached_property
    def _lam_cache(self) -> dict:
        return {}

    def memo(self, key, build):
        """Per-spec cache for derived objects (specs are immutable)."""
        cache = self._lam_cache
        if key not in cache:
            cache[key] = build()
        return cache[key]

    def matrix(self, k: int) -> tuple:
        """Exact matrix of d: C_k -> C_{k-1} over K(Gamma0)."""
        cache = self._lam_cache
        if k not in cache:
            R = self.config.lam
            cache[k] = tuple(tuple(R.from_scalar(x) for x in row) for row in self.boundary_matrix(k))
        return cache[k]

    @property
    def ring(self):
        return self.config.lam

    @cached_property
    def spread(self) -> ExactValue:
        if not self.orbits:
            return ZERO
        ts = [o.action for o in self.orbits]
        return max(ts) - min(ts)

    @property
    def effective_window(self) -> ExactValue:
        """Window for series views: explicit, else 2*spread + 1."""
        if self.window is not None:
            return self.window
        return self.spread * 2 + 1

    def with_window(self, window: ExactValue | None) -> "ComplexSpec":
        return ComplexSpec(self.config, self.orbits, self.boundary, window)


# ---------------------------------------------------------------------------
# chains


@dataclass(frozen=True, eq=False)
class Chain:
    degree: int
    coeffs: tuple  # of Lam

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return self.degree == other.degree and len(self.coeffs) == len(other.coeffs) and all(
            a == b for a, b in zip(self.coeffs, other.coeffs)
        )

    __hash__ = None

    def is_zero(self) -> bool:
        return all(x.is_zero() for x in self.coeffs)

    def __add__(self, other: "Chain") -> "Chain":
        _same_degree(self, other)
        return Chain(self.degree, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "Chain") -> "Chain":
        _same_degree(self, other)
        return Chain(self.degree, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "Chain":
        return Chain(self.degree, tuple(-a for a in self.coeffs))

    def scale(self, lam: Lam) -> "Chain":
        return Chain(self.degree, tuple(lam * a for a in self.coeffs))


def _same_degree(a: Chain, b: Chain):
    if a.degree != b.degree or len(a.coeffs) != len(b.coeffs):
        raise ValueError("chains of different degree")


def chain_zero(spec: ComplexSpec, k: int) -> Chain:
    R = spec.ring
    return Chain(k, tuple(R.zero() for _ in range(spec.size(k))))


def chain_from_terms(spec: ComplexSpec, k: int, terms: Iterable) -> Chain:
    """Chain of degree k from (orbit_id, exponents, coefficient) triples."""
    per: dict = {}
    for oid, g, c in terms:
        deg, pos = spec.index_of(oid)
        if deg != k:
            raise ValueError(f"orbit {oid} has degree {deg}, not {k}")
        g = tuple(g)
        F = spec.config.field
        d = per.setdefault(pos, {})
        d[g] = F.add(d.get(g, F.zero()), F.coerce(c))
    R = spec.ring
    return Chain(k, tuple(R.from_terms(per.get(i, {})) for i in range(spec.size(k))))


def chain_gen(spec: ComplexSpec, orbit_id: str, g: Sequence[int] | None = None, coeff=1) -> Chain:
    deg, _ = spec.index_of(orbit_id)
    g = spec.config.identity() if g is None else tuple(g)
    return chain_from_terms(spec, deg, [(orbit_id, g, coeff)])


def chain_from_vector(k: int, vec: Sequence[Lam]) -> Chain:
    return Chain(k, tuple(vec))


def chain_terms(spec: ComplexSpec, c: Chain) -> list:
    """(orbit_id, exponents, coefficient) for a finitely supported chain."""
    out = []
    ids = [spec.orbits[i].id for i in spec.gens(c.degree)]
    for oid, x in zip(ids, c.coeffs):
        for g, v in sorted(x.laurent_terms().items()):
            out.append((oid, g, v))
    return out


# ---------------------------------------------------------------------------
# axioms and basic operations


def _scalar_min_int(cfg: ValuationConfig, x: NovikovScalar):
    return cfg.omega_int(x.terms[0][0]) if x.terms else None


def validate(spec: ComplexSpec) -> ValidationReport:
    """Check filtration axiom, exactness, shapes and d o d = 0."""
    cfg = spec.config
    out = []
    for k, m in spec.boundary:
        rows, cols = spec.size(k - 1), spec.size(k)
        if len(m) != rows or any(len(r) != cols for r in m):
            out.append(Violation("shape", k, -1, -1, f"expected {rows}x{cols} matrix"))
            continue
        tk = [cfg.scaled(t) for t in spec.actions(k)]
        tk1 = [cfg.scaled(t) for t in spec.actions(k - 1)]
        for j, row in enumerate(m):
            for i, x in enumerate(row):
                if not x.exact:
                    out.append(Violation("inexact", k, j, i, "boundary entries must be exact"))
                    continue
                if not x.terms:
                    continue
                A, B = _scalar_min_int(cfg, x)
                gapA = A - (tk1[j][0] - tk[i][0])
                gapB = B - (tk1[j][1] - tk[i][1])
                if qsign(gapA, gapB) <= 0:
                    nu_v = cfg.omega_of(x.terms[0][0])
                    out.append(
                        Violation(
                            "filtration",
                            k,
                            j,
                            i,
                            f"nu = {nu_v} is not > t_row - t_col = {spec.actions(k - 1)[j] - spec.actions(k)[i]}",
                        )
                    )
    if not out:
        out.extend(_check_d_squared(spec))
    return ValidationReport(tuple(out))


def _poly_matrix(spec: ComplexSpec, m: tuple):
    R = spec.ring
    r = spec.config.rank
    exps = [g for row in m for x in row for g, _ in x.terms]
    lo = [min([0] + [g[a] for g in exps]) for a in range(r)]
    F = spec.config.field
    conv = F.to_flint
    ctx = R.ctx
    if not any(lo):
        return [[ctx.from_dict({g: conv(c) for g, c in x.terms}) for x in row] for row in m]
    if r == 1:
        (l0,) = lo
        return [[ctx.from_dict({(g[0] - l0,): conv(c) for g, c in x.terms}) for x in row] for row in m]
    if r == 2:
        l0, l1 = lo
        return [[ctx.from_dict({(g[0] - l0, g[1] - l1): conv(c) for g, c in x.terms}) for x in row] for row in m]
    return [
        [ctx.from_dict({tuple(e - s for e, s in zip(g, lo)): conv(c) for g, c in x.terms}) for x in row]
        for row in m
    ]


def _check_d_squared(spec: ComplexSpec) -> list:
    out = []
    polys: dict = {}

    def poly(k):
        if k not in polys:
            polys[k] = _poly_matrix(spec, spec.boundary_matrix(k))
        return polys[k]

    for k, m in spec.boundary:
        if not spec.has_boundary(k - 1):
            continue
        A, B = poly(k - 1), poly(k)
        for a in range(len(A)):
            for b in range(len(B[0]) if B else 0):
                acc = None
                for j in range(len(B)):
                    x, y = A[a][j], B[j][b]
                    if x.is_zero() or y.is_zero():
                        continue
                    acc = x * y if acc is None else acc + x * y
                if acc is not None and not acc.is_zero():
                    out.append(Violation("d-squared", k, a, b, "(d_{k-1} d_k) entry is nonzero"))
    return out


def ell(spec: ComplexSpec, c: Chain) -> ExactValue:
    """Filtration level: max over the support of t_i - omega(g); -inf for 0."""
    best = NEG_INF
    for t, x in zip(spec.actions(c.degree), c.coeffs):
        if not x.is_zero():
            v = t - x.nu()
            if v > best:
                best = v
    return best


def boundary_apply(spec: ComplexSpec, c: Chain) -> Chain:
    k = c.degree
    if len(c.coeffs) != spec.size(k):
        raise ValueError("chain does not match the complex")
    M = spec.matrix(k)
    R = spec.ring
    return Chain(k - 1, tuple(lam_dot(R, row, c.coeffs) for row in M))


def mat_vec(M: Sequence[Sequence[Lam]], v: Sequence[Lam], R) -> tuple:
    return tuple(lam_dot(R, row, v) for row in M)


def transpose(M: Sequence[Sequence], ncols: int | None = None) -> tuple:
    if not M:
        return tuple(() for _ in range(ncols or 0))
    return tuple(tuple(M[j][i] for j in range(len(M))) for i in range(len(M[0])))


def opposite(spec: ComplexSpec) -> ComplexSpec:
    """Actions and gradings negated; delta in op degree -k+1 is M_k transposed."""

    def build():
        orbits = tuple(Orbit(o.id, -o.grading, -o.action) for o in spec.orbits)
        bnd = []
        for k, m in spec.boundary:
            bnd.append((-k + 1, transpose(m)))
        op = ComplexSpec(spec.config, orbits, tuple(bnd), spec.window)
        op._lam_cache[("opposite",)] = spec
        return op

    return spec.memo(("opposite",), build)


def filtered_member(spec: ComplexSpec, c: Chain, alpha: ExactValue, strict: bool = True) -> bool:
    lvl = ell(spec, c)
    return lvl < alpha if strict else lvl <= alpha


def reduce_mod_filtration(spec: ComplexSpec, c: Chain, alpha: ExactValue) -> Chain:
    """Drop every support term of action <= alpha (keep omega(g) < t_i - alpha)."""
    alpha = ExactValue.coerce(alpha)
    out = []
    for t, x in zip(spec.actions(c.degree), c.coeffs):
        out.append(x.trunc_below(t - alpha) if not x.is_zero() else x)
    return Chain(c.degree, tuple(out))


# ---------------------------------------------------------------------------
# change of representatives


def scalar_shift(x: NovikovScalar, g: Sequence[int]) -> NovikovScalar:
    """x * g for an exact scalar; translation keeps the term order."""
    if not x.terms:
        return x
    return NovikovScalar(x.config, tuple((tuple(a + b for a, b in zip(h, g)), c) for h, c in x.terms), x.cutoff)


@dataclass(frozen=True)
class RebaseRecord:
    """p'_i = g_i p_i in degree k.  c'_i = c_i g_i^-1 and op d'_i = d_i g_i."""

    degree: int
    shifts: tuple  # g_i per degree-k orbit

    def chain_to_new(self, c: Chain, R) -> Chain:
        if c.degree != self.degree:
            return c
        return Chain(c.degree, tuple(x * R.monomial(g_inv(g)) for x, g in zip(c.coeffs, self.shifts)))

    def chain_to_old(self, c: Chain, R) -> Chain:
        if c.degree != self.degree:
            return c
        return Chain(c.degree, tuple(x * R.monomial(g) for x, g in zip(c.coeffs, self.shifts)))

    def op_to_new(self, d: Chain, R) -> Chain:
        if d.degree != -self.degree:
            return d
        return Chain(d.degree, tuple(x * R.monomial(g) for x, g in zip(d.coeffs, self.shifts)))

    def op_to_old(self, d: Chain, R) -> Chain:
        if d.degree != -self.degree:
            return d
        return Chain(d.degree, tuple(x * R.monomial(g_inv(g)) for x, g in zip(d.coeffs, self.shifts)))


def apply_shifts(spec: ComplexSpec, k: int, shifts: Sequence) -> ComplexSpec:
    """Replace each degree-k representative p_i by g_i p_i."""
    cfg = spec.config
    shifts = [tuple(g) for g in shifts]
    idx = spec.gens(k)
    orbits = list(spec.orbits)
    for i, g in zip(idx, shifts):
        o = orbits[i]
        orbits[i] = Orbit(o.id, o.grading, o.action - cfg.omega_of(g))
    bmap = dict(spec.boundary)
    if k in bmap:
        m = bmap[k]
        bmap[k] = tuple(tuple(scalar_shift(x, shifts[i]) for i, x in enumerate(row)) for row in m)
    if k + 1 in bmap:
        m = bmap[k + 1]
        bmap[k + 1] = tuple(tuple(scalar_shift(x, g_inv(shifts[j])) for x in row) for j, row in enumerate(m))
    out = ComplexSpec(cfg, tuple(orbits), tuple(bmap.items()), spec.window)
    # carry the exact matrices across instead of rebuilding them
    R = spec.ring
    mono = [R.monomial(g) for g in shifts]
    inv = [R.monomial(g_inv(g)) for g in shifts]
    for j in (k, k + 1):
        if j not in bmap or j not in spec._lam_cache:
            continue
        M = spec.matrix(j)
        if j == k:
            M = tuple(tuple(x * mono[i] if not x.is_zero() else x for i, x in enumerate(row)) for row in M)
        else:
            M = tuple(tuple(x * inv[r] if not x.is_zero() else x for x in row) for r, row in enumerate(M))
        out._lam_cache[j] = M
    return out


def rebase(spec: ComplexSpec, k: int, alpha: ExactValue, eps: ExactValue) -> tuple:
    """Move every degree-k action into [alpha, alpha + eps) by group translation."""
    cfg = spec.config
    alpha = ExactValue.coerce(alpha)
    eps = ExactValue.coerce(eps)
    if not eps > 0:
        raise ValueError("eps must be positive")
    shifts = []
    for t in spec.actions(k):
        if alpha <= t < alpha + eps:
            shifts.append(cfg.identity())
            continue
        g = cfg.find_in_window(t - alpha - eps, t - alpha)
        if g is None:
            raise WindowInfeasible(f"no group element places action {t} in [{alpha}, {alpha + eps})")
        shifts.append(tuple(g))
    rec = RebaseRecord(k, tuple(shifts))
    return spec.memo(("rebase", k, rec.shifts), lambda: apply_shifts(spec, k, shifts)), rec


# ---------------------------------------------------------------------------
# text formats

_COMMENT = re.compile(r"#.*$")


def _coords(tokens: Sequence[str], n: int, line: int) -> tuple:
    if len(tokens) != n:
        raise FncParseError(line, f"expected {n} rational coordinates, got {len(tokens)}")
    try:
        return tuple(Fraction(t) for t in tokens)
    except (ValueError, ZeroDivisionError) as exc:
        raise FncParseError(line, f"bad rational: {exc}") from None


def _parse_terms(text: str, rank: int, F: Field, line: int, with_gen: bool) -> list:
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        gen = None
        if with_gen:
            if "*" not in part:
                raise FncParseError(line, f"term {part!r} lacks '* <gen-id>'")
            part, gen = part.rsplit("*", 1)
            gen = gen.strip()
            part = part.strip()
        if "@" not in part:
            raise FncParseError(line, f"term {part!r} lacks '@'")
        cs, es = part.split("@", 1)
        try:
            coeff = F.coerce(Fraction(cs.strip()))
        except (ValueError, ZeroDivisionError, ConfigError) as exc:
            raise FncParseError(line, f"bad coefficient {cs.strip()!r}: {exc}") from None
        exps = es.replace(",", " ").split()
        if len(exps) != rank:
            raise FncParseError(line, f"exponent vector needs {rank} entries, got {len(exps)}")
        try:
            g = tuple(int(e) for e in exps)
        except ValueError:
            raise FncParseError(line, f"exponents must be integers: {es.strip()!r}") from None
        out.append((coeff, g, gen))
    return out


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        s = _COMMENT.sub("", raw).strip()
        if s:
            yield no, s


def parse_fnc(text: str, check: bool = True) -> ComplexSpec:
    """Parse the .fnc format; with ``check`` the axioms must hold."""
    F = Field(0)
    basis = None
    rank = None
    omegas: list = []
    gens: list = []  # (line, id, grading, coords)
    bnds: list = []  # (line, src, dst, terms)
    window = None
    omega_line = 0
    pending_basis = 0
    pending_omega = 0
    basis_list: list = []
    basis_line = 0
    for no, s in _lines(text):
        toks = s.split()
        if pending_basis:
            for t in toks:
                try:
                    basis_list.append(parse_basis_descriptor(t))
                except (ConfigError, ValueError, ZeroDivisionError) as exc:
                    raise FncParseError(no, str(exc)) from None
            pending_basis -= len(toks)
            if pending_basis < 0:
                raise FncParseError(no, "too many basis descriptors")
            if pending_basis == 0:
                basis = tuple(basis_list)
            continue
        head = toks[0]
        if pending_omega and head != "omega":
            raise FncParseError(no, f"expected {pending_omega} more 'omega' lines")
        if head == "field":
            if len(toks) == 2 and toks[1] == "Q":
                F = Field(0)
            elif len(toks) == 3 and toks[1] == "GF":
                try:
                    F = Field(int(toks[2]))
                except (ValueError, ConfigError) as exc:
                    raise FncParseError(no, f"bad field: {exc}") from None
            else:
                raise FncParseError(no, "expected 'field Q' or 'field GF <p>'")
        elif head == "value_basis":
            try:
                n = int(toks[1])
            except (IndexError, ValueError):
                raise FncParseError(no, "expected 'value_basis <n>'") from None
            if n <= 0:
                raise FncParseError(no, "value_basis needs n >= 1")
            basis_line = no
            basis_list = []
            for t in toks[2:]:
                try:
                    basis_list.append(parse_basis_descriptor(t))
                except (ConfigError, ValueError, ZeroDivisionError) as exc:
                    raise FncParseError(no, str(exc)) from None
            pending_basis = n - len(basis_list)
            if pending_basis < 0:
                raise FncParseError(no, "too many basis descriptors")
            if pending_basis == 0:
                basis = tuple(basis_list)
        elif head == "gamma0_rank":
            if basis is None:
                raise FncParseError(no, "value_basis must precede gamma0_rank")
            try:
                rank = int(toks[1])
            except (IndexError, ValueError):
                raise FncParseError(no, "expected 'gamma0_rank <r>'") from None
            if rank <= 0:
                raise FncParseError(no, "gamma0_rank must be positive")
            pending_omega = rank
        elif head == "omega":
            if not pending_omega:
                raise FncParseError(no, "unexpected 'omega' line")
            omegas.append(_coords(toks[1:], len(basis), no))
            pending_omega -= 1
            if pending_omega == 0:
                omega_line = no
        elif head == "gen":
            if len(toks) < 6 or toks[2] != "grading" or toks[4] != "action":
                raise FncParseError(no, "expected 'gen <id> grading <k> action <coords>'")
            if basis is None:
                raise FncParseError(no, "value_basis must precede gen lines")
            try:
                k = int(toks[3])
            except ValueError:
                raise FncParseError(no, f"bad grading {toks[3]!r}") from None
            gens.append((no, toks[1], k, _coords(toks[5:], len(basis), no)))
        elif head == "bnd":
            if rank is None:
                raise FncParseError(no, "gamma0_rank must precede bnd lines")
            m = re.match(r"bnd\s+(\S+)\s+(\S+)\s*:(.*)$", s)
            if not m:
                raise FncParseError(no, "expected 'bnd <src> <dst> : <terms>'")
            bnds.append((no, m.group(1), m.group(2), _parse_terms(m.group(3), rank, F, no, False)))
        elif head == "window":
            if basis is None:
                raise FncParseError(no, "value_basis must precede window")
            window = (no, _coords(toks[1:], len(basis), no))
        else:
            raise FncParseError(no, f"unknown directive {head!r}")
    if pending_basis:
        raise FncParseError(basis_line, f"missing {pending_basis} basis descriptors")
    if basis is None or rank is None:
        raise FncParseError(0, "missing value_basis or gamma0_rank")
    if pending_omega:
        raise FncParseError(0, f"missing {pending_omega} omega lines")
    try:
        rows = [combine(basis, o) for o in omegas]
        cfg = ValuationConfig(tuple(rows), F, basis)
    except ConfigError as exc:
        raise FncParseError(omega_line, str(exc)) from None
    orbits = []
    line_of: dict = {}
    for no, oid, k, co in gens:
        if oid in line_of:
            raise FncParseError(no, f"duplicate generator id {oid!r}")
        line_of[oid] = no
        orbits.append(Orbit(oid, k, cfg.value(co)))
    pos: dict = {}
    deg_of: dict = {}
    counts: dict = {}
    for o in orbits:
        pos[o.id] = counts.get(o.grading, 0)
        counts[o.grading] = pos[o.id] + 1
        deg_of[o.id] = o.grading
    entries: dict = {}
    bline: dict = {}
    for no, src, dst, terms in bnds:
        for x in (src, dst):
            if x not in deg_of:
                raise FncParseError(no, f"unknown generator {x!r}")
        k = deg_of[src]
        if deg_of[dst] != k - 1:
            raise FncParseError(no, f"grading axiom: {src} has degree {k} but {dst} has degree {deg_of[dst]}")
        key = (k, pos[dst], pos[src])
        acc = entries.setdefault(key, {})
        for c, g, _ in terms:
            acc[g] = F.add(acc.get(g, F.zero()), c)
        bline.setdefault(key, no)
        bline.setdefault(("deg", k), no)
    mats: dict = {}
    for (k, j, i), terms in entries.items():
        if k not in mats:
            z = NovikovScalar.zero(cfg)
            mats[k] = [[z] * counts.get(k, 0) for _ in range(counts.get(k - 1, 0))]
        mats[k][j][i] = NovikovScalar.make(cfg, terms)
    win = None
    if window is not None:
        win = cfg.value(window[1])
        if not win > 0:
            raise FncParseError(window[0], "window must be positive")
    spec = ComplexSpec(cfg, tuple(orbits), tuple((k, m) for k, m in mats.items()), win)
    rep = validate(spec) if check else None
    if rep is not None and not rep.ok:
        v = rep.violations[0]
        if v.kind == "filtration":
            no = bline.get((v.degree, v.row, v.col), 0)
        else:
            no = bline.get(("deg", v.degree), 0)
        raise FncParseError(no, f"{v.kind} violation: {v.detail}")
    return spec


def _fmt_q(x: Fraction) -> str:
    return str(x)


def _fmt_coords(cfg: ValuationConfig, v: ExactValue) -> str:
    return " ".join(_fmt_q(c) for c in cfg.coords_of(v))


def _fmt_g(g) -> str:
    return " ".join(str(int(e)) for e in g)


def write_fnc(spec: ComplexSpec) -> str:
    cfg = spec.config
    lines = [f"field {cfg.field.name()}"]
    lines.append(f"value_basis {len(cfg.basis_reals)} " + " ".join(format_basis_descriptor(b) for b in cfg.basis_reals))
    lines.append(f"gamma0_rank {cfg.rank}")
    for w in cfg.omega_rows:
        lines.append(f"omega {_fmt_coords(cfg, w)}")
    for o in spec.orbits:
        lines.append(f"gen {o.id} grading {o.grading} action {_fmt_coords(cfg, o.action)}")
    for k, m in spec.boundary:
        src = [spec.orbits[i].id for i in spec.gens(k)]
        dst = [spec.orbits[i].id for i in spec.gens(k - 1)]
        for j, row in enumerate(m):
            for i, x in enumerate(row):
                if x.terms:
                    body = " ; ".join(f"{c}@{_fmt_g(g)}" for g, c in x.terms)
                    lines.append(f"bnd {src[i]} {dst[j]} : {body}")
    if spec.window is not None:
        lines.append(f"window {_fmt_coords(cfg, spec.window)}")
    return "\n".join(lines) + "\n"


def parse_chain(spec: ComplexSpec, text: str) -> Chain:
    """Parse 'chain <degree> : <coeff>@<exponents> * <gen-id> ; ...'."""
    found = None
    for no, s in _lines(text):
        m = re.match(r"chain\s+(-?\d+)\s*:(.*)$", s)
        if not m:
            raise FncParseError(no, "expected 'chain <degree> : <terms>'")
        if found is not None:
            raise FncParseError(no, "only one chain per file")
        k = int(m.group(1))
        terms = _parse_terms(m.group(2), spec.config.rank, spec.config.field, no, True)
        trip = []
        for c, g, gen in terms:
            try:
                deg, _ = spec.index_of(gen)
            except KeyError:
                raise FncParseError(no, f"unknown generator {gen!r}") from None
            if deg != k:
                raise FncParseError(no, f"generator {gen} has degree {deg}, chain has degree {k}")
            trip.append((gen, g, c))
        found = chain_from_terms(spec, k, trip)
    if found is None:
        raise FncParseError(0, "no chain line")
    return found


def write_chain(spec: ComplexSpec, c: Chain) -> str:
    terms = chain_terms(spec, c)
    body = " ; ".join(f"{v}@{_fmt_g(g)} * {oid}" for oid, g, v in terms)
    return f"chain {c.degree} : {body}\n"


def read_fnc(path, check: bool = True) -> ComplexSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_fnc(fh.read(), check)
