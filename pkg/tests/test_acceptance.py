"""Acceptance criteria, exact arithmetic, one summary line per criterion."""
import gc
import random
import time
from fractions import Fraction
from functools import lru_cache

from conftest import record
from fnduality.duality_invariants import (
    UnsupportedAlpha,
    adjoint_matrix,
    beta_triple,
    boundary_depth,
    boundary_depth_definition,
    class_is_nonzero_in_quotient,
    dual_witness_left,
    dual_witness_right,
    filtration_shift,
    pairing_Delta,
    pairing_L,
    spectral_number,
    tau,
    verify_spectral_duality,
)
from fnduality.fn_complex import Chain, boundary_apply, ell, mat_vec, opposite, validate
from fnduality.harness_cli import alpha_grid, make_config, make_instance, oracle_samples
from fnduality.novikov_arith import ExactValue, PrecisionExhausted, g_inv
from fnduality.ortho_linalg import (
    WeightedSpace,
    apply_matrix,
    barcode_reduce,
    homology_basis,
    homology_generators,
    image_basis,
    image_vectors,
    kernel_basis,
    matmul,
    nu_bar_t,
    orthonormalize,
    project_optimal,
    projector_onto_complement,
    solve_in_subspace,
    veq,
    vis_zero,
    vsub,
)


def timed(fn, *args):
    """(result, seconds) with the collector paused, as timeit does."""
    gc.disable()
    try:
        t0 = time.perf_counter()
        out = fn(*args)
        return out, time.perf_counter() - t0
    finally:
        gc.enable()


def degree_range(spec):
    if not spec.degrees:
        return range(0)
    return range(min(spec.degrees) - 1, max(spec.degrees) + 2)


def unit(spec, k, pos):
    R = spec.ring
    return Chain(k, tuple(R.one() if a == pos else R.zero() for a in range(spec.size(k))))


def rand_lam(R, rng, span=2, terms=3, rational=False):
    r = R.config.rank
    d = {}
    for _ in range(rng.randint(1, terms)):
        d[tuple(rng.randint(-span, span) for _ in range(r))] = rng.choice([1, -1, 2, 3])
    x = R.from_terms(d)
    if x.is_zero():
        x = R.one()
    if rational and rng.random() < 0.3:
        g = tuple(rng.randint(0, 2) for _ in range(r))
        if any(g):
            x = x / (R.one() + R.monomial(g))
    return x


def sparse_lam(R, rng, density=0.6, **kw):
    return rand_lam(R, rng, **kw) if rng.random() < density else R.zero()


# 1. axioms


def test_c01_axioms():
    n, worst, bad = 0, 0.0, []
    for i in range(1000):
        inst = make_instance(1001, i, "mixed", "mixed")
        spec = inst.spec
        dt = None
        for _ in range(3):  # best of three, as timeit does
            rep, t = timed(validate, spec)
            dt = t if dt is None else min(dt, t)
        worst = max(worst, dt)
        n += 1
        if not rep.ok or dt >= 0.010:
            bad.append((i, rep.ok, dt))
    ok = not bad and n == 1000
    record(1, "axioms", ok, f"{n} instances, slowest validate {worst * 1000:.2f} ms")
    assert ok, bad[:5]


# 2. orthonormality


def ortho_outputs(spec):
    out = []
    for k in spec.degrees:
        B, H = homology_basis(spec, k)
        out += [B, H, image_basis(spec, k)]
        vs = image_vectors(spec, k)
        if vs:
            out.append(orthonormalize(vs, WeightedSpace.zero(spec.config, spec.size(k))))
    return [b for b in out if b.rank]


def test_c02_orthonormality():
    rng = random.Random(2)
    outputs, tuples, failures = 0, 0, []
    for i in range(16):
        inst = make_instance(1002, i, "mixed", "mixed", max_orbits=14)
        R = inst.spec.ring
        for basis in ortho_outputs(inst.spec):
            outputs += 1
            sp = basis.space
            levels = [nu_bar_t(u, sp) for u in basis.vectors]
            if all(w == 0 for w in sp.weights) and any(v != 0 for v in levels):
                failures.append(("not normalized", i))
            for _ in range(100):
                lam = [sparse_lam(R, rng, rational=True) for _ in basis.vectors]
                if all(x.is_zero() for x in lam):
                    lam[0] = R.one()
                comb = [R.zero()] * sp.dim
                for x, u in zip(lam, basis.vectors):
                    if not x.is_zero():
                        comb = [a + x * b if not b.is_zero() else a for a, b in zip(comb, u)]
                lhs = nu_bar_t(comb, sp)
                rhs = min(x.nu() + v for x, v in zip(lam, levels) if not x.is_zero())
                tuples += 1
                if lhs != rhs:
                    failures.append((i, lhs, rhs))
    ok = not failures and outputs >= 100
    record(2, "orthonormality", ok, f"{outputs} orthonormalize outputs, {tuples} tuples, {len(failures)} failures")
    assert ok, failures[:5]


# 3. projector contract


def random_space(rng):
    profile = rng.choice(["dense", "dense", "discrete"])
    field = rng.choice(["q", "q", "gf2"])
    cfg = make_config(profile, field)
    N = rng.choice([1, 2, 2, 3, 3, 4, 4, 5, 6, 8])
    if profile == "dense":
        ws = [ExactValue(Fraction(rng.randint(-6, 6), rng.choice([1, 2, 3])), rng.randint(-2, 2)) for _ in range(N)]
    else:
        ws = [ExactValue(Fraction(rng.randint(-6, 6), rng.choice([1, 2]))) for _ in range(N)]
    if rng.random() < 0.25:
        return WeightedSpace.zero(cfg, N)
    return WeightedSpace(cfg, tuple(ws))


def test_c03_projector():
    rng = random.Random(3)
    failures, pairs = [], 0
    for trial in range(500):
        sp = random_space(rng)
        R, N = sp.ring, sp.dim
        m = rng.randint(0, N)
        U = [tuple(sparse_lam(R, rng, span=1, terms=2) for _ in range(N)) for _ in range(m)]
        if rng.random() < 0.2 and m >= 2:
            U.append(tuple(a + b for a, b in zip(U[0], U[1])))
        w = tuple(sparse_lam(R, rng, rational=True) for _ in range(N))
        P = projector_onto_complement(U, sp)
        Pw = apply_matrix(P, w, R)
        pairs += 1
        r = orthonormalize(U, sp).rank if U else 0
        # (i) kernel is span U
        k_ok = all(vis_zero(apply_matrix(P, u, R)) for u in U)
        k_ok = k_ok and len(kernel_basis(P, N, R)) == r
        k_ok = k_ok and (vis_zero(vsub(w, Pw)) or bool(solve_in_subspace(vsub(w, Pw), U, sp)))
        # (ii) filtration does not go up
        f_ok = nu_bar_t(Pw, sp) >= nu_bar_t(w, sp)
        # (iii) idempotent
        i_ok = veq(apply_matrix(P, Pw, R), Pw) and all(
            veq(a, b) for a, b in zip(matmul(P, P, R), P)
        )
        if not (k_ok and f_ok and i_ok):
            failures.append((trial, k_ok, f_ok, i_ok))
    ok = not failures and pairs == 500
    record(3, "projector contract", ok, f"{pairs} (U, w) pairs, {len(failures)} failures")
    assert ok, failures[:5]


# 4. optimal representative against exhaustive enumeration


def normal_optimum(inst, k, c0_n):
    """Optimal b and level in normal form: every v-coordinate in degree k is a boundary."""
    normal = inst.normal
    R = normal.ring
    coeffs = list(c0_n.coeffs)
    b = [R.zero() for _ in range(normal.size(k + 1))]
    for uid, vid, p in inst.oracle.pairs:
        if p.degree != k + 1:
            continue
        _, pu = normal.index_of(uid)
        _, pv = normal.index_of(vid)
        lam = coeffs[pv]
        if lam.is_zero():
            continue
        b[pu] = lam * R.monomial(g_inv(p.g)) / R.const(p.coeff)
        coeffs[pv] = R.zero()
    return Chain(k + 1, tuple(b)), ell(normal, Chain(k, tuple(coeffs)))


def enumerate_min(spec, c0, b_star, cap=12):
    """Least l(c0 - db) over b with GF(2) coefficients on a monomial window around b_star."""
    R = spec.ring
    k1 = c0.degree + 1
    monos = []
    for m, x in enumerate(b_star.coeffs):
        exps = set(e[0] for e in x.laurent_terms()) if not x.is_zero() else {0}
        for e in sorted(exps):
            monos.append((m, e))
    extra = []
    for m, e in list(monos):
        for de in (-1, 1):
            if (m, e + de) not in monos and (m, e + de) not in extra:
                extra.append((m, e + de))
    monos += extra[: max(0, cap - len(monos))]
    images = [boundary_apply(spec, Chain(k1, tuple(R.monomial((e,)) if a == m else R.zero() for a in range(spec.size(k1))))) for m, e in monos]
    best = ell(spec, c0)
    cur = c0
    # Gray code walk over all subsets
    for step in range(1, 2 ** len(monos)):
        bit = (step & -step).bit_length() - 1
        cur = cur - images[bit]
        v = ell(spec, cur)
        if v < best:
            best = v
    return best, len(monos)


def test_c04_optimal_representative():
    rng = random.Random(4)
    done, failures, i, sizes = 0, [], 0, []
    while done < 100:
        inst = make_instance(1004, i, "discrete", "gf2", max_orbits=5, moves=6)
        i += 1
        pair_degs = sorted({p.degree - 1 for _, _, p in inst.oracle.pairs})
        if not pair_degs:
            continue
        k = rng.choice(pair_degs)
        normal, spec, R = inst.normal, inst.spec, inst.spec.ring
        c0_n = Chain(k, tuple(rand_lam(R, rng, span=2, terms=2) for _ in range(normal.size(k))))
        c0 = inst.scrambled.chain_to_new(c0_n)
        b_n, level = normal_optimum(inst, k, c0_n)
        b_star = inst.scrambled.chain_to_new(b_n)
        c, b0 = project_optimal(c0, spec)
        got = ell(spec, c)
        ok = got == level and c == c0 - boundary_apply(spec, b0)
        ok = ok and ell(spec, c0 - boundary_apply(spec, b_star)) == level
        enum, nbits = enumerate_min(spec, c0, b_star)
        sizes.append(nbits)
        ok = ok and enum == level
        if not ok:
            failures.append((i - 1, got, level, enum))
        done += 1
    ok = not failures
    record(4, "optimal representative", ok, f"{done} GF(2) instances, enumeration up to 2^{max(sizes)} chains")
    assert ok, failures[:5]


# 5. adjoint


def delta_by_convolution(d, c, F):
    """sum_i sum_g c_{i,g} d_{i,g^-1}, from the coefficient dictionaries."""
    acc = F.zero()
    for x, y in zip(d.coeffs, c.coeffs):
        if x.is_zero() or y.is_zero():
            continue
        dx = x.laurent_terms()
        for g, cy in y.laurent_terms().items():
            cx = dx.get(g_inv(g))
            if cx is not None:
                acc = F.add(acc, F.mul(cx, cy))
    return acc


def test_c05_adjoint():
    rng = random.Random(5)
    triples, eps_checks, failures = 0, 0, []
    for a in range(100):
        inst = make_instance(1005, a, "mixed", "mixed", max_orbits=12, moves=20)
        spec = inst.spec
        op = opposite(spec)
        R, F = spec.ring, spec.config.field
        k = max(spec.degrees, key=spec.size)
        n = spec.size(k)
        A = tuple(tuple(sparse_lam(R, rng, density=0.5, span=1, terms=2) for _ in range(n)) for _ in range(n))
        As = adjoint_matrix(A)
        ts = spec.actions(k)
        eps = filtration_shift(A, ts)
        tight = False
        for _ in range(10):
            c = Chain(k, tuple(sparse_lam(R, rng) for _ in range(n)))
            d = Chain(-k, tuple(sparse_lam(R, rng) for _ in range(n)))
            Ac = Chain(k, mat_vec(A, c.coeffs, R))
            Asd = Chain(-k, mat_vec(As, d.coeffs, R))
            lhs, rhs = pairing_Delta(Asd, c), pairing_Delta(d, Ac)
            ok = lhs == rhs == delta_by_convolution(Asd, c, F) == delta_by_convolution(d, Ac, F)
            triples += 1
            if not Ac.is_zero() and not c.is_zero():
                ok = ok and ell(spec, Ac) <= ell(spec, c) + eps
                eps_checks += 1
            if not Asd.is_zero() and not d.is_zero():
                ok = ok and ell(op, Asd) <= ell(op, d) + eps
                eps_checks += 1
            if not ok:
                failures.append((a, lhs, rhs))
        # eps is attained on a generator
        for i in range(n):
            Ae = Chain(k, mat_vec(A, unit(spec, k, i).coeffs, R))
            if not Ae.is_zero() and ell(spec, Ae) == ts[i] + eps:
                tight = True
        if any(not x.is_zero() for row in A for x in row) and not tight:
            failures.append((a, "eps not attained"))
    ok = not failures and triples == 1000
    record(5, "adjoint", ok, f"{triples} triples, {eps_checks} shift bounds")
    assert ok, failures[:5]


# 6. right witnesses


def test_c06_right_witness():
    count, worst, failures, instances = 0, 0.0, [], 0
    for i in range(40):
        inst = make_instance(1006, i, "dense", "mixed")
        spec = inst.spec
        right, _ = oracle_samples(spec, inst.oracle, inst.scrambled)
        grid = alpha_grid(spec)
        spent = 0.0
        gc.collect()
        for s in right:
            for a in grid:
                if not (s.lo <= a < s.hi):
                    continue
                w, t = timed(dual_witness_right, spec, a, s.chain)
                spent += t
                again = w.revalidate(spec)
                certs = (again["dual_cycle"], again["dual_filtration"], again["pairing_nonzero"])
                if not (w.ok and all(certs) and all(again.values())):
                    failures.append((i, s.label, a))
                count += 1
        instances += 1
        worst = max(worst, spent)
        if spent >= 1.0:
            failures.append((i, "slow", spent))
    ok = not failures and count > 0
    record(6, "right witness", ok, f"{count} witnesses on {instances} dense instances, slowest instance {worst:.2f} s")
    assert ok, failures[:5]


# 7. left witnesses


def generic(spec, k, alpha):
    return not any(spec.config.same_class(alpha, t) for t in spec.actions(k - 1))


def test_c07_left_witness():
    count, failures, skipped = 0, [], 0
    for profile in ["dense", "discrete"]:
        for i in range(20):
            inst = make_instance(1007, i, profile, "mixed")
            spec = inst.spec
            _, left = oracle_samples(spec, inst.oracle, inst.scrambled)
            for s in left:
                k = -s.chain.degree
                for a in alpha_grid(spec):
                    if not (s.lo < a < s.hi):
                        continue
                    if not generic(spec, k, a):
                        skipped += 1
                        continue
                    try:
                        w = dual_witness_left(spec, a, s.chain)
                    except UnsupportedAlpha:
                        failures.append((profile, i, s.label, a, "unsupported"))
                        continue
                    again = w.revalidate(spec)
                    if not (w.ok and again["relative_cycle"] and again["pairing_nonzero"] and all(again.values())):
                        failures.append((profile, i, s.label, a))
                    count += 1
    ok = not failures and count > 0
    record(7, "left witness", ok, f"{count} witnesses, {skipped} non-generic alphas excluded")
    assert ok, failures[:5]


# 8. spectral duality


def test_c08_spectral_duality():
    classes, failures = {"dense": 0, "discrete": 0}, []
    for profile, n in [("discrete", 40), ("dense", 20)]:
        for i in range(n):
            inst = make_instance(1008, i, profile, "mixed")
            spec, op = inst.spec, opposite(inst.spec)
            right, left = oracle_samples(spec, inst.oracle, inst.scrambled)
            hs = [s for s in right if s.label.startswith("h:")]
            hd = [s for s in left if s.label.startswith("h*:")]
            grid = alpha_grid(spec) if profile == "dense" else ()
            for s, sd in zip(hs, hd):
                t = s.hi
                r = verify_spectral_duality(spec, s.chain, grid=grid, samples=[sd.chain])
                ok = r.ok and r.exact and r.rho == t and r.rho_op_best == -t
                ok = ok and spectral_number(op, sd.chain) == -t and pairing_Delta(sd.chain, s.chain) != 0
                ok = ok and all(b[1] for b in r.lower_bound) and all(g[1] for g in r.grid)
                if profile == "dense":
                    ok = ok and len(r.grid) > 0
                classes[profile] += 1
                if not ok:
                    failures.append((profile, i, s.label))
    ok = not failures and all(classes.values())
    record(8, "spectral duality", ok, f"{classes['discrete']} discrete and {classes['dense']} dense classes")
    assert ok, failures[:5]


# 9 and 10. boundary depth


def corpus_100():
    return [make_instance(1009, i, "dense" if i % 2 else "discrete", "mixed") for i in range(100)]


def test_c09_boundary_depth_triple():
    checks, failures = 0, []
    for inst in corpus_100():
        spec = inst.spec
        for k in degree_range(spec):
            a, b, c = beta_triple(spec, k)
            d = boundary_depth_definition(spec, k - 1)
            checks += 1
            if not (a == b == c == d == inst.oracle.beta_at(k - 1)):
                failures.append((inst.index, k, a, b, c, d))
    ok = not failures and checks > 0
    record(9, "boundary depth triple", ok, f"{checks} degree checks on 100 instances")
    assert ok, failures[:5]


def test_c10_zero_depth():
    zero, nonzero, failures = 0, 0, []
    for inst in corpus_100():
        spec = inst.spec
        for k in degree_range(spec):
            beta = boundary_depth(spec, k)
            if not spec.has_boundary(k + 1):
                zero += 1
                if beta != 0:
                    failures.append((inst.index, k, beta))
                continue
            nonzero += 1
            drops = []
            for pos in range(spec.size(k + 1)):
                c = unit(spec, k + 1, pos)
                img = boundary_apply(spec, c)
                if not img.is_zero():
                    drops.append(ell(spec, c) - ell(spec, img))
            if not (beta > 0 and beta >= min(drops)):
                failures.append((inst.index, k, beta, min(drops)))
    ok = not failures and zero > 0 and nonzero > 0
    record(10, "zero depth", ok, f"{zero} vanishing and {nonzero} nonzero boundary maps")
    assert ok, failures[:5]


# 11 and 12. scramble invariance and window robustness


def corpus_200(i):
    return make_instance(1011, i, "dense" if i % 2 else "discrete", "mixed", moves=50)


def invariants(spec, classes, duals):
    """Bars, rho of each class, beta per degree, homology levels, and truncated pairings."""
    op = opposite(spec)
    out = {"bars": barcode_reduce(spec)}
    out["rho"] = tuple(spectral_number(spec, c) for c in classes)
    out["rho_op"] = tuple(spectral_number(op, d) for d in duals)
    out["beta"] = tuple(boundary_depth(spec, k) for k in degree_range(spec))
    out["levels"] = tuple(
        tuple(sorted((str(lvl) for _, lvl in homology_generators(spec, k)))) for k in spec.degrees
    )
    win = spec.effective_window
    vals = []
    for d in duals:
        for c in classes:
            if d.degree == -c.degree:
                vals.append(tau(pairing_L(d, c).to_scalar(win)))
    out["pairings"] = tuple(vals)
    return out


@lru_cache(maxsize=None)
def scramble_data(i):
    inst = corpus_200(i)
    normal, spec, scr = inst.normal, inst.spec, inst.scrambled
    cls_n, dual_n = [], []
    for sid, k, t in inst.oracle.rho:
        _, pos = normal.index_of(sid)
        cls_n.append(unit(normal, k, pos))
        dual_n.append(Chain(-k, unit(normal, k, pos).coeffs))
    cls_s = [scr.chain_to_new(c) for c in cls_n]
    dual_s = [scr.op_to_new(d) for d in dual_n]
    return inst, (cls_n, dual_n), (cls_s, dual_s)


def test_c11_scramble_invariance():
    failures = 0
    bad = []
    for i in range(200):
        inst, (cn, dn), (cs, ds) = scramble_data(i)
        before = invariants(inst.normal, cn, dn)
        after = invariants(inst.spec, cs, ds)
        oracle_rho = tuple(t for _, _, t in inst.oracle.rho)
        ok = before == after and after["bars"] == inst.oracle.barcode
        ok = ok and after["rho"] == oracle_rho and after["rho_op"] == tuple(-t for t in oracle_rho)
        ok = ok and after["beta"] == tuple(inst.oracle.beta_at(k) for k in degree_range(inst.spec))
        ok = ok and len(inst.scramble.moves) in (0, 50)
        if not ok:
            failures += 1
            bad.append(i)
    ok = failures == 0
    record(11, "scramble invariance", ok, f"200 instances, 50-move scrambles, {failures} mismatches")
    assert ok, bad[:5]


def test_c12_window_robustness():
    mismatches, exhausted_default, exhausted_double = [], 0, 0
    for i in range(200):
        inst, _, (cs, ds) = scramble_data(i)
        spec = inst.spec
        try:
            base = invariants(spec, cs, ds)
        except PrecisionExhausted:
            exhausted_default += 1
            base = None
        wide = spec.with_window(spec.effective_window * 2)
        try:
            doubled = invariants(wide, cs, ds)
        except PrecisionExhausted:
            exhausted_double += 1
            continue
        if base is not None and base != doubled:
            mismatches.append(i)
    ok = not mismatches and exhausted_double == 0
    record(
        12,
        "window robustness",
        ok,
        f"200 instances, {len(mismatches)} changed, precision exhausted {exhausted_default} at default and {exhausted_double} at 2x",
    )
    assert ok, mismatches[:5]
