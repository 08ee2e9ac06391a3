"""Instance generation with ground truth, filtered scrambling, verification drivers and the CLI.

A normal-form instance is block diagonal: singletons s (infinite bars) and
pairs d u = c g v (finite bars).  Its bars, spectral numbers and boundary
depths are known in closed form, which makes it an oracle.  Scrambling
conjugates the boundary by random filtered automorphisms, which must leave
every invariant unchanged.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .duality_invariants import (
    UnsupportedAlpha,
    beta_triple,
    boundary_depth,
    boundary_depth_definition,
    dual_witness_left,
    dual_witness_right,
    pairing_Delta,
    spectral_number,
    verify_spectral_duality,
)
from .fn_complex import (
    Chain,
    ComplexSpec,
    FncParseError,
    Orbit,
    boundary_apply,
    ell,
    opposite,
    parse_chain,
    read_fnc,
    validate,
    write_chain,
    write_fnc,
)
from .novikov_arith import (
    ONE_V,
    SQRT2_V,
    ConfigError,
    ExactValue,
    Field,
    PrecisionExhausted,
    ValuationConfig,
    parse_basis_descriptor,
)
from .ortho_linalg import Barcode, barcode_reduce, finite_bars_of, homology_generators

DEGREES = (0, 1, 2, 3)


# ---------------------------------------------------------------------------
# configs and value encoding


def make_config(profile: str, field_spec: str = "q") -> ValuationConfig:
    F = Field(2) if field_spec == "gf2" else Field(0)
    if profile == "dense":
        return ValuationConfig((ONE_V, SQRT2_V), F, (ONE_V, SQRT2_V))
    if profile == "discrete":
        return ValuationConfig((ONE_V,), F, (ONE_V,))
    raise ConfigError(f"unknown profile {profile!r}")


def encode_value(v: ExactValue) -> list:
    return [str(v.a), str(v.b)]


def decode_value(x) -> ExactValue:
    return ExactValue(Fraction(x[0]), Fraction(x[1]))


def parse_value(cfg: ValuationConfig, text: str) -> ExactValue:
    """'3/2' or '1 1/2' (coordinates against the value basis) or '1+sqrt2'-style sums."""
    toks = text.replace(",", " ").split()
    if len(toks) == len(cfg.basis_reals) and all(_is_rational(t) for t in toks):
        return cfg.value([Fraction(t) for t in toks])
    if len(toks) == 1 and _is_rational(toks[0]):
        return ExactValue(Fraction(toks[0]))
    out = ExactValue(0)
    s = text.replace(" ", "").replace("-", "+-")
    for part in filter(None, s.split("+")):
        neg = part.startswith("-")
        part = part.lstrip("-")
        if "sqrt2" in part:
            coef = part.replace("sqrt2", "").rstrip("*") or "1"
            term = ExactValue(0, Fraction(coef))
        else:
            term = ExactValue(Fraction(part))
        out = out - term if neg else out + term
    return out


def _is_rational(t: str) -> bool:
    try:
        Fraction(t)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# normal form


@dataclass(frozen=True)
class Pair:
    degree: int  # degree of the birth generator u
    birth: ExactValue
    death: ExactValue
    g: tuple  # d u = coeff * g * v, t_v = death + omega(g)
    coeff: int = 1


@dataclass(frozen=True)
class NormalFormPlan:
    seed: int
    profile: str
    field_spec: str
    singles: tuple = ()  # ((degree, action), ...)
    pairs: tuple = ()  # (Pair, ...)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "profile": self.profile,
            "field": self.field_spec,
            "singles": [[k, encode_value(t)] for k, t in self.singles],
            "pairs": [
                [p.degree, encode_value(p.birth), encode_value(p.death), list(p.g), p.coeff] for p in self.pairs
            ],
        }

    @staticmethod
    def from_json(d: dict) -> "NormalFormPlan":
        return NormalFormPlan(
            d["seed"],
            d["profile"],
            d["field"],
            tuple((k, decode_value(t)) for k, t in d["singles"]),
            tuple(Pair(k, decode_value(b), decode_value(e), tuple(g), c) for k, b, e, g, c in d["pairs"]),
        )


@dataclass(frozen=True, eq=False)
class Oracle:
    barcode: Barcode
    rho: tuple  # ((orbit id, degree, value), ...) for the singleton classes
    beta: dict  # k -> longest finite bar of d_{k+1}
    pairs: tuple  # ((u id, v id, Pair), ...)

    def beta_at(self, k: int) -> ExactValue:
        return self.beta.get(k, ExactValue(0))


class PlanError(ValueError):
    pass


def gen_normal_form(plan: NormalFormPlan) -> tuple:
    """(spec, oracle) for a block-diagonal complex realizing the planned bars."""
    cfg = make_config(plan.profile, plan.field_spec)
    orbits = []
    entries: dict = {}
    rho, pairs_out = [], []
    finite: dict = {}
    infinite: dict = {}
    beta: dict = {}
    for n, (k, t) in enumerate(plan.singles):
        sid = f"s{n}"
        orbits.append(Orbit(sid, k, t))
        rho.append((sid, k, t))
        infinite.setdefault(k, []).append(t)
    for n, p in enumerate(plan.pairs):
        if not p.birth > p.death:
            raise PlanError(f"pair {n}: birth {p.birth} must exceed death {p.death}")
        if p.coeff % (cfg.field.p or sys.maxsize) == 0 or p.coeff == 0:
            raise PlanError(f"pair {n}: coefficient vanishes in {cfg.field.name()}")
        uid, vid = f"u{n}", f"v{n}"
        orbits.append(Orbit(uid, p.degree, p.birth))
        orbits.append(Orbit(vid, p.degree - 1, p.death + cfg.omega_of(p.g)))
        entries[(uid, vid)] = {tuple(p.g): p.coeff}
        pairs_out.append((uid, vid, p))
        finite.setdefault(p.degree, []).append((p.birth, p.death))
        L = p.birth - p.death
        if L > beta.get(p.degree - 1, ExactValue(0)):
            beta[p.degree - 1] = L
    orbits.sort(key=lambda o: o.grading)
    spec = _assemble(cfg, orbits, entries)
    bc = Barcode(
        cfg,
        tuple((k, tuple(v)) for k, v in sorted(finite.items())),
        tuple((k, tuple(v)) for k, v in sorted(infinite.items())),
    )
    return spec, Oracle(bc, tuple(rho), beta, tuple(pairs_out))


def _assemble(cfg: ValuationConfig, orbits: list, entries: dict) -> ComplexSpec:
    from .novikov_arith import NovikovScalar

    pos = {}
    by_deg: dict = {}
    for o in orbits:
        pos[o.id] = len(by_deg.setdefault(o.grading, []))
        by_deg[o.grading].append(o.id)
    grade = {o.id: o.grading for o in orbits}
    boundary = []
    for k in sorted(by_deg):
        if k - 1 not in by_deg:
            continue
        rows, cols = len(by_deg[k - 1]), len(by_deg[k])
        m = [[NovikovScalar.zero(cfg) for _ in range(cols)] for _ in range(rows)]
        for (src, dst), terms in entries.items():
            if grade[src] == k:
                m[pos[dst]][pos[src]] = NovikovScalar.make(cfg, terms)
        boundary.append((k, m))
    return ComplexSpec(cfg, tuple(orbits), tuple(boundary))


def action_grid(profile: str) -> list:
    """32 value-group points."""
    if profile == "dense":
        return [ExactValue(a, b) for a in range(8) for b in range(4)]
    return [ExactValue(a) for a in range(32)]


def coset_offsets(profile: str) -> list:
    return [ExactValue(0), ExactValue(Fraction(1, 3))] if profile == "dense" else [ExactValue(0), ExactValue(Fraction(1, 2))]


def _coeff(rng: random.Random, field_spec: str) -> int:
    return 1 if field_spec == "gf2" else rng.choice([1, -1, 2, -3])


def random_normal_form_plan(
    rng: random.Random,
    profile: str,
    field_spec: str = "q",
    max_orbits: int = 20,
    max_per_degree: int = 6,
    seed: int = 0,
) -> NormalFormPlan:
    cfg = make_config(profile, field_spec)
    grid, offs = action_grid(profile), coset_offsets(profile)
    load = {k: 0 for k in range(DEGREES[0] - 1, DEGREES[-1] + 1)}
    total = 0
    singles, pairs = [], []

    def point():
        return rng.choice(grid) + rng.choice(offs)

    for k in DEGREES:
        for _ in range(rng.randint(0, 2)):
            if total < max_orbits and load[k] < max_per_degree:
                singles.append((k, point()))
                load[k] += 1
                total += 1
    for _ in range(rng.randint(0, 7)):
        k = rng.choice(DEGREES[1:])
        if total + 2 > max_orbits or load[k] >= max_per_degree or load[k - 1] >= max_per_degree:
            continue
        a, b = point(), point()
        if a == b:
            continue
        birth, death = (a, b) if a > b else (b, a)
        g = tuple(rng.randint(-2, 2) for _ in range(cfg.rank))
        pairs.append(Pair(k, birth, death, g, _coeff(rng, field_spec)))
        load[k] += 1
        load[k - 1] += 1
        total += 2
    return NormalFormPlan(seed, profile, field_spec, tuple(singles), tuple(pairs))


# ---------------------------------------------------------------------------
# scrambling


@dataclass(frozen=True)
class Move:
    degree: int
    target: int  # position i within the degree
    source: int  # position j
    g: tuple
    coeff: int = 1


@dataclass(frozen=True)
class ScramblePlan:
    seed: int
    moves: tuple = ()

    def to_json(self) -> dict:
        return {"seed": self.seed, "moves": [[m.degree, m.target, m.source, list(m.g), m.coeff] for m in self.moves]}

    @staticmethod
    def from_json(d: dict) -> "ScramblePlan":
        return ScramblePlan(d["seed"], tuple(Move(k, i, j, tuple(g), c) for k, i, j, g, c in d["moves"]))


class MoveRejected(ValueError):
    def __init__(self, index: int, message: str):
        super().__init__(f"move {index}: {message}")
        self.index = index


@dataclass(frozen=True, eq=False)
class Scrambled:
    """Scrambled spec plus per-degree basis changes.

    T[k] has the new basis vectors as columns in old coordinates, so chains
    map by T^-1 and op chains by T^T.
    """

    spec: ComplexSpec
    T: dict
    Tinv: dict

    def chain_to_new(self, c: Chain) -> Chain:
        M = self.Tinv.get(c.degree)
        return c if M is None else Chain(c.degree, _mv(M, c.coeffs))

    def op_to_new(self, d: Chain) -> Chain:
        M = self.T.get(-d.degree)
        if M is None:
            return d
        n = len(M)
        return Chain(d.degree, tuple(_dot([M[r][i] for r in range(n)], d.coeffs) for i in range(n)))


def _dot(row, v):
    acc = None
    for x, y in zip(row, v):
        if x.is_zero() or y.is_zero():
            continue
        acc = x * y if acc is None else acc + x * y
    return acc if acc is not None else (v[0] - v[0])


def _mv(M, v):
    return tuple(_dot(row, v) for row in M)


def gen_scramble(spec: ComplexSpec, plan: ScramblePlan) -> Scrambled:
    """Apply p_i -> p_i + mu p_j for every move; each needs nu(mu) > t_j - t_i."""
    cfg = spec.config
    R = spec.ring
    mats = {k: [list(r) for r in spec.matrix(k)] for k in spec.degrees}
    T, Tinv = {}, {}
    for idx, mv in enumerate(plan.moves):
        k, i, j = mv.degree, mv.target, mv.source
        n = spec.size(k)
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise MoveRejected(idx, f"bad generator positions ({i}, {j}) in degree {k}")
        t = spec.actions(k)
        if not cfg.omega_of(mv.g) > t[j] - t[i]:
            raise MoveRejected(idx, "move is not filtered: needs omega(g) > t_j - t_i")
        if cfg.field.coerce(mv.coeff) == 0:
            raise MoveRejected(idx, "zero coefficient")
        mu = R.monomial(mv.g, mv.coeff)
        if k not in T:
            T[k] = [[R.one() if a == b else R.zero() for b in range(n)] for a in range(n)]
            Tinv[k] = [[R.one() if a == b else R.zero() for b in range(n)] for a in range(n)]
        Mk = mats.get(k)
        if Mk and spec.size(k - 1):
            for r in range(len(Mk)):
                if not Mk[r][j].is_zero():
                    Mk[r][i] = Mk[r][i] + mu * Mk[r][j]
        Mk1 = mats.get(k + 1)
        if Mk1 and spec.size(k + 1):
            Mk1[j] = [a - mu * b if not b.is_zero() else a for a, b in zip(Mk1[j], Mk1[i])]
        for r in range(n):
            if not T[k][r][j].is_zero():
                T[k][r][i] = T[k][r][i] + mu * T[k][r][j]
        Tinv[k][j] = [a - mu * b if not b.is_zero() else a for a, b in zip(Tinv[k][j], Tinv[k][i])]
    boundary = []
    for k, m in mats.items():
        if spec.size(k - 1) and spec.size(k):
            boundary.append((k, [[x.to_scalar() for x in row] for row in m]))
    out = ComplexSpec(cfg, spec.orbits, tuple(boundary), spec.window)
    return Scrambled(out, T, Tinv)


def random_scramble_plan(spec: ComplexSpec, rng: random.Random, n_moves: int = 50, seed: int = 0) -> ScramblePlan:
    cfg = spec.config
    field_spec = "gf2" if cfg.field.p == 2 else "q"
    degs = [k for k in spec.degrees if spec.size(k) >= 2]
    moves = []
    if not degs:
        return ScramblePlan(seed, ())
    while len(moves) < n_moves:
        k = rng.choice(degs)
        i, j = rng.sample(range(spec.size(k)), 2)
        t = spec.actions(k)
        theta = t[j] - t[i]
        width = ExactValue(rng.choice([Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3)]))
        g = cfg.find_in_window(theta, theta + width)
        if g is None:
            continue
        moves.append(Move(k, i, j, tuple(int(x) for x in g), _coeff(rng, field_spec)))
    return ScramblePlan(seed, tuple(moves))


# ---------------------------------------------------------------------------
# class sampling


@dataclass(frozen=True, eq=False)
class Sample:
    chain: Chain
    lo: ExactValue  # nonzero for alpha in [lo, hi) on the right side, (lo, hi) on the left
    hi: ExactValue
    label: str


def _unit(spec: ComplexSpec, k: int, pos: int) -> Chain:
    R = spec.ring
    return Chain(k, tuple(R.one() if a == pos else R.zero() for a in range(spec.size(k))))


def oracle_samples(spec: ComplexSpec, oracle: Oracle, scr: Scrambled | None = None) -> tuple:
    """Right samples (relative cycles) and left samples (op cycles) from the normal form."""
    from .novikov_arith import NEG_INF

    right, left = [], []
    to_new = scr.chain_to_new if scr else (lambda c: c)
    op_new = scr.op_to_new if scr else (lambda d: d)
    for sid, k, t in oracle.rho:
        _, pos = spec.index_of(sid)
        right.append(Sample(to_new(_unit(spec, k, pos)), NEG_INF, t, f"h:{sid}"))
        left.append(Sample(op_new(Chain(-k, _unit(spec, k, pos).coeffs)), NEG_INF, t, f"h*:{sid}"))
    for uid, vid, p in oracle.pairs:
        _, pu = spec.index_of(uid)
        right.append(Sample(to_new(_unit(spec, p.degree, pu)), p.death, p.birth, f"bar:{uid}"))
        u_op = Chain(-p.degree, _unit(spec, p.degree, pu).coeffs)
        left.append(Sample(op_new(u_op), p.death, p.birth, f"bar*:{uid}"))
    return right, left


def computed_samples(spec: ComplexSpec) -> tuple:
    """The same families computed from the complex itself (no oracle)."""
    from .novikov_arith import NEG_INF

    right, left = [], []
    op = opposite(spec)
    for k in spec.degrees:
        for v, lvl in homology_generators(spec, k):
            right.append(Sample(Chain(k, v), NEG_INF, lvl, f"h{k}"))
        if spec.size(k - 1) and spec.has_boundary(k):
            for b, d, u in finite_bars_of(spec, k, generators=True):
                right.append(Sample(Chain(k, u), d, b, f"bar{k}"))
    for j in op.degrees:
        for v, lvl in homology_generators(op, j):
            left.append(Sample(Chain(j, v), NEG_INF, -lvl, f"h*{j}"))
        if op.size(j - 1) and op.has_boundary(j):
            for b, d, u in finite_bars_of(op, j, generators=True):
                x = boundary_apply(op, Chain(j, u))
                left.append(Sample(x, -b, -d, f"bar*{j}"))
    return right, left


def alpha_grid(spec: ComplexSpec, n: int = 16) -> list:
    """n points spanning the action range, offset by 1/7 to stay off every action coset."""
    if not spec.orbits:
        return []
    ts = [o.action for o in spec.orbits]
    lo, hi = min(ts) - 1, max(ts)
    return [lo + (hi - lo) * Fraction(m, n - 1) + Fraction(1, 7) for m in range(n)]


def _generic_left(spec: ComplexSpec, k: int, alpha: ExactValue) -> bool:
    cfg = spec.config
    return not any(cfg.same_class(alpha, t) for t in spec.actions(k - 1))


# ---------------------------------------------------------------------------
# verification drivers


@dataclass
class Report:
    checks: dict = field(default_factory=dict)  # name -> bool
    notes: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def check(self, name: str, ok: bool, note: str = "") -> None:
        self.checks[name] = self.checks.get(name, True) and bool(ok)
        if not ok and note:
            self.notes.append(f"{name}: {note}")

    def bump(self, name: str, n: int = 1) -> None:
        self.counts[name] = self.counts.get(name, 0) + n

    def text(self) -> str:
        lines = [f"{k}: {'pass' if v else 'FAIL'}" for k, v in self.checks.items()]
        lines += [f"count {k}: {v}" for k, v in sorted(self.counts.items())]
        lines += [f"note {n}" for n in self.notes]
        return "\n".join(lines)


def check_axioms(spec: ComplexSpec, rep: Report) -> None:
    t0 = time.perf_counter()
    vr = validate(spec)
    rep.timings["validate"] = time.perf_counter() - t0
    rep.check("axioms", vr.ok, "; ".join(v.detail for v in vr.violations[:3]))


def _degree_range(spec: ComplexSpec) -> range:
    if not spec.orbits:
        return range(0)
    return range(min(spec.degrees) - 1, max(spec.degrees) + 2)


def check_boundary_depth(spec: ComplexSpec, rep: Report, oracle: Oracle | None = None) -> None:
    for k in _degree_range(spec):
        a, b, c = beta_triple(spec, k)
        d = boundary_depth_definition(spec, k - 1)
        ok = a == b == c == d
        if oracle is not None:
            ok = ok and a == oracle.beta_at(k - 1)
        rep.check("boundary_depth", ok, f"k={k}: barcode {a}, op {b}, linking {c}, definition {d}")
        # zero exactly when d_{k} vanishes; else at least the least generator-level drop
        beta = a
        if not spec.has_boundary(k):
            rep.check("zero_depth", beta == 0, f"beta_{k - 1} = {beta} with zero boundary")
        else:
            drops = []
            for pos in range(spec.size(k)):
                c0 = _unit(spec, k, pos)
                img = boundary_apply(spec, c0)
                if not img.is_zero():
                    drops.append(ell(spec, c0) - ell(spec, img))
            rep.check("zero_depth", beta > 0, f"beta_{k - 1} = 0 with nonzero boundary")
            rep.check("depth_lower_bound", beta >= min(drops), f"beta_{k - 1} = {beta} < {min(drops)}")


def check_barcode(spec: ComplexSpec, rep: Report, oracle: Oracle) -> None:
    rep.check("barcode", barcode_reduce(spec) == oracle.barcode)


def check_spectral(spec: ComplexSpec, rep: Report, oracle: Oracle | None, scr: Scrambled | None, grid) -> None:
    op = opposite(spec)
    if oracle is not None:
        right, left = oracle_samples(spec, oracle, scr)
        classes = [(s.chain, s.hi) for s in right if s.label.startswith("h:")]
        duals = [s.chain for s in left if s.label.startswith("h*:")]
        for (c, t), d in zip(classes, duals):
            rho = spectral_number(spec, c)
            rho_op = spectral_number(op, d)
            rep.check("rho_oracle", rho == t and rho_op == -t and pairing_Delta(d, c) != 0, f"rho {rho} op {rho_op} vs {t}")
    else:
        right, _ = computed_samples(spec)
        classes = [(s.chain, s.hi) for s in right if s.label.startswith("h")]
        duals = []
        for c, lvl in classes:
            rep.check("rho_generators", spectral_number(spec, c) == lvl == ell(spec, c))
    for c, _ in classes:
        dense = spec.config.dense
        r = verify_spectral_duality(spec, c, grid=grid if dense else (), samples=[d for d in duals if d.degree == -c.degree])
        rep.check("spectral_duality", r.ok, f"rho {r.rho} best {r.rho_op_best}")
        rep.bump("duality_classes")


def check_witnesses(spec: ComplexSpec, rep: Report, right, left, grid, sides=("right", "left")) -> None:
    if "right" in sides:
        t0 = time.perf_counter()
        for s in right:
            for a in grid:
                if not (s.lo <= a < s.hi):
                    continue
                w = dual_witness_right(spec, a, s.chain)
                again = w.revalidate(spec)
                rep.check("witness_right", w.ok and all(again.values()), f"{s.label} alpha {a}: {w.certificates}")
                rep.bump("witness_right")
        rep.timings["witness_right"] = time.perf_counter() - t0
    if "left" in sides:
        t0 = time.perf_counter()
        for s in left:
            k = -s.chain.degree
            for a in grid:
                if not (s.lo < a < s.hi) or not _generic_left(spec, k, a):
                    continue
                try:
                    w = dual_witness_left(spec, a, s.chain)
                except UnsupportedAlpha:
                    rep.bump("left_nongeneric")
                    continue
                again = w.revalidate(spec)
                rep.check("witness_left", w.ok and all(again.values()), f"{s.label} alpha {a}: {w.certificates}")
                rep.bump("witness_left")
        rep.timings["witness_left"] = time.perf_counter() - t0


def verify_instance(
    spec: ComplexSpec,
    oracle: Oracle | None = None,
    scr: Scrambled | None = None,
    checks: Sequence[str] = ("axioms", "barcode", "boundary_depth", "spectral", "nondeg"),
) -> Report:
    rep = Report()
    grid = alpha_grid(spec)
    if "axioms" in checks:
        check_axioms(spec, rep)
        if not rep.ok:
            return rep
    if "barcode" in checks and oracle is not None:
        check_barcode(spec, rep, oracle)
    if "boundary_depth" in checks:
        check_boundary_depth(spec, rep, oracle)
    if "spectral" in checks:
        check_spectral(spec, rep, oracle, scr, grid)
    if "nondeg" in checks:
        right, left = oracle_samples(spec, oracle, scr) if oracle is not None else computed_samples(spec)
        check_witnesses(spec, rep, right, left, grid)
    return rep


# ---------------------------------------------------------------------------
# fuzzing


@dataclass(frozen=True, eq=False)
class Instance:
    index: int
    plan: NormalFormPlan
    scramble: ScramblePlan
    normal: ComplexSpec
    oracle: Oracle
    scrambled: Scrambled

    @property
    def spec(self) -> ComplexSpec:
        return self.scrambled.spec


def instance_seed(seed: int, index: int) -> int:
    return random.Random(f"fnd:{seed}:{index}").getrandbits(48)


def make_instance(
    seed: int, index: int, profile: str, field_spec: str = "q", max_orbits: int = 20, moves: int = 50
) -> Instance:
    s = instance_seed(seed, index)
    rng = random.Random(s)
    if profile == "mixed":
        profile = rng.choice(["dense", "discrete"])
    if field_spec == "mixed":
        field_spec = rng.choice(["q", "gf2"])
    plan = random_normal_form_plan(rng, profile, field_spec, max_orbits, seed=s)
    normal, oracle = gen_normal_form(plan)
    sp = random_scramble_plan(normal, rng, moves, seed=s)
    return Instance(index, plan, sp, normal, oracle, gen_scramble(normal, sp))


def instance_from_plans(index: int, plan: NormalFormPlan, sp: ScramblePlan) -> Instance:
    normal, oracle = gen_normal_form(plan)
    return Instance(index, plan, sp, normal, oracle, gen_scramble(normal, sp))


def write_bundle(directory: str, inst: Instance, rep: Report) -> str:
    path = os.path.join(directory, f"failure-{inst.plan.seed}")
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "instance.fnc"), "w", encoding="utf-8") as fh:
        fh.write(write_fnc(inst.spec))
    with open(os.path.join(path, "plans.json"), "w", encoding="utf-8") as fh:
        json.dump({"index": inst.index, "normal": inst.plan.to_json(), "scramble": inst.scramble.to_json()}, fh, indent=1)
    with open(os.path.join(path, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(rep.text() + "\n")
    return path


def load_bundle(path: str) -> Instance:
    with open(os.path.join(path, "plans.json"), encoding="utf-8") as fh:
        d = json.load(fh)
    return instance_from_plans(d["index"], NormalFormPlan.from_json(d["normal"]), ScramblePlan.from_json(d["scramble"]))


@dataclass
class FuzzResult:
    passed: int = 0
    failed: int = 0
    bundles: list = field(default_factory=list)
    seconds: float = 0.0
    reports: list = field(default_factory=list)


def fuzz(
    seed: int,
    count: int,
    profile: str = "dense",
    field_spec: str = "q",
    max_orbits: int = 20,
    out_dir: str | None = None,
    checks: Sequence[str] = ("axioms", "barcode", "boundary_depth", "spectral", "nondeg"),
    log=None,
) -> FuzzResult:
    res = FuzzResult()
    t0 = time.perf_counter()
    for i in range(count):
        inst = make_instance(seed, i, profile, field_spec, max_orbits)
        rep = verify_instance(inst.spec, inst.oracle, inst.scrambled, checks)
        res.reports.append(rep)
        if rep.ok:
            res.passed += 1
        else:
            res.failed += 1
            if out_dir:
                res.bundles.append(write_bundle(out_dir, inst, rep))
        if log:
            log(f"instance {i}: {'pass' if rep.ok else 'FAIL'} ({len(inst.spec.orbits)} orbits)")
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# command line


EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_PRECISION = 0, 1, 2, 3

CSV_HEADER = "record,degree,first,second"


def _invariants_rows(spec: ComplexSpec, degree: int | None) -> list:
    rows = []
    bc = barcode_reduce(spec)
    degs = [degree] if degree is not None else list(_degree_range(spec))
    for k in degs:
        if spec.size(k):
            for n, (_, lvl) in enumerate(homology_generators(spec, k)):
                rows.append(("rho", k, str(n), str(lvl)))
        if spec.size(k) or spec.size(k + 1):
            rows.append(("beta", k, str(boundary_depth(spec, k)), ""))
        for b, d in bc.finite_bars(k):
            rows.append(("bar", k, str(b), str(d)))
        for v in bc.infinite_bars(k):
            rows.append(("infinite", k, str(v), "inf"))
    return rows


def cmd_validate(args) -> int:
    spec = read_fnc(args.file, check=False)
    vr = validate(spec)
    if vr.ok:
        print("valid")
        return EXIT_OK
    for v in vr.violations:
        print(f"{v.kind} degree {v.degree} row {v.row} col {v.col}: {v.detail}")
    return EXIT_FAIL


def cmd_invariants(args) -> int:
    spec = read_fnc(args.file)
    rows = _invariants_rows(spec, args.degree)
    if args.csv:
        print(CSV_HEADER)
        for r in rows:
            print(",".join(str(x) for x in r))
        return EXIT_OK
    for rec, k, a, b in rows:
        if rec == "rho":
            print(f"rho  degree {k} generator {a}: {b}")
        elif rec == "beta":
            print(f"beta_{k} = {a}")
        elif rec == "bar":
            print(f"bar  degree {k}: ({a}, {b})")
        else:
            print(f"bar  degree {k}: ({a}, inf)")
    return EXIT_OK


def cmd_opposite(args) -> int:
    spec = read_fnc(args.file)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(write_fnc(opposite(spec)))
    return EXIT_OK


def cmd_barcode(args) -> int:
    spec = read_fnc(args.file)
    bc = barcode_reduce(spec)
    for k, bars in bc.finite:
        for b, d in bars:
            print(f"degree {k}: ({b}, {d})")
    for k, vals in bc.infinite:
        for v in vals:
            print(f"degree {k}: ({v}, inf)")
    return EXIT_OK


def cmd_witness(args) -> int:
    spec = read_fnc(args.file)
    alpha = parse_value(spec.config, args.alpha)
    with open(args.chain, encoding="utf-8") as fh:
        text = fh.read()
    if args.side == "right":
        w = dual_witness_right(spec, alpha, parse_chain(spec, text))
    else:
        w = dual_witness_left(spec, alpha, parse_chain(opposite(spec), text))
    print(w.summary())
    print("chain: " + write_chain(spec, w.chain), end="")
    print("dual:  " + write_chain(opposite(spec), w.dual), end="")
    again = w.revalidate(spec)
    return EXIT_OK if w.ok and all(again.values()) else EXIT_FAIL


def cmd_verify(args) -> int:
    spec = read_fnc(args.file)
    checks = ["axioms"]
    if args.all or args.boundary_depth:
        checks.append("boundary_depth")
    if args.all or args.spectral_duality:
        checks.append("spectral")
    if args.all or args.nondeg:
        checks.append("nondeg")
    rep = verify_instance(spec, None, None, checks)
    print(rep.text())
    if "spectral" in checks:
        op = opposite(spec)
        right, _ = computed_samples(spec)
        for s in right:
            if s.label.startswith("h"):
                r = verify_spectral_duality(spec, s.chain)
                print(f"spectral duality degree {s.chain.degree}: rho = {r.rho}, best op = {r.rho_op_best}, exact {r.exact}")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_fuzz(args) -> int:
    log = print if args.verbose else None
    res = fuzz(args.seed, args.count, args.profile, args.field, args.max_orbits, args.out, log=log)
    total = res.passed + res.failed
    print(f"{res.passed}/{total} pass in {res.seconds:.2f} s ({res.seconds / max(total, 1):.3f} s per instance)")
    for b in res.bundles:
        print(f"failure bundle: {b}")
    return EXIT_OK if res.failed == 0 else EXIT_FAIL


def cmd_replay(args) -> int:
    inst = load_bundle(args.bundle)
    rep = verify_instance(inst.spec, inst.oracle, inst.scrambled)
    print(rep.text())
    return EXIT_OK if rep.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fnd", description="Filtered Novikov complexes: invariants and duality checks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check the complex axioms")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("invariants", help="spectral numbers, boundary depth and bars")
    s.add_argument("file")
    s.add_argument("--degree", type=int)
    s.add_argument("--csv", action="store_true")
    s.set_defaults(func=cmd_invariants)

    s = sub.add_parser("opposite", help="write the opposite complex")
    s.add_argument("file")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_opposite)

    s = sub.add_parser("barcode", help="print bars")
    s.add_argument("file")
    s.set_defaults(func=cmd_barcode)

    s = sub.add_parser("witness", help="nondegeneracy witness for a class")
    s.add_argument("file")
    s.add_argument("--side", choices=["right", "left"], required=True)
    s.add_argument("--alpha", required=True)
    s.add_argument("--chain", required=True)
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("verify", help="duality checks on one complex")
    s.add_argument("file")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--all", action="store_true")
    g.add_argument("--spectral-duality", action="store_true")
    g.add_argument("--boundary-depth", action="store_true")
    g.add_argument("--nondeg", action="store_true")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("fuzz", help="generate, scramble and verify random instances")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--profile", choices=["dense", "discrete", "mixed"], default="dense")
    s.add_argument("--field", choices=["q", "gf2", "mixed"], default="q")
    s.add_argument("--max-orbits", type=int, default=20)
    s.add_argument("--out", default="fuzz-failures")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_fuzz)

    s = sub.add_parser("replay", help="rerun a persisted failure bundle")
    s.add_argument("bundle")
    s.set_defaults(func=cmd_replay)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FncParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ConfigError, PlanError, MoveRejected) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except PrecisionExhausted as e:
        print(f"precision exhausted: {e}; retry with the window doubled", file=sys.stderr)
        return EXIT_PRECISION
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
