"""Exact arithmetic for the value group omega(Gamma0) and the Novikov field.

Three layers live here:

* ``ExactValue``: elements a + b*sqrt2 of Q(sqrt2) with exact ordering.
* ``NovikovScalar``: truncated series (sorted term list plus a cutoff),
  with precision propagation in the style of fixed-precision p-adics.
* ``Lam``: exact elements of the fraction field K(Gamma0) inside Lambda,
  stored as a reduced quotient of polynomials.  Every finitely supported
  scalar and every quotient of such is exact here, so linear algebra over
  Lambda never needs a truncation window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import flint

_S2 = math.sqrt(2.0)


class ConfigError(ValueError):
    """Malformed valuation configuration or mismatched group element."""


class PrecisionExhausted(ArithmeticError):
    """A coefficient needed by the computation lies beyond a cutoff."""


class NotInvertible(ZeroDivisionError):
    """Inversion of zero or of a scalar without a known leading term."""


def qsign(a, b) -> int:
    """Exact sign of a + b*sqrt2 for rational a, b."""
    if a >= 0 and b >= 0:
        return 0 if (a == 0 and b == 0) else 1
    if a <= 0 and b <= 0:
        return -1
    d = a * a - 2 * b * b
    if a > 0:
        return 1 if d > 0 else -1
    return -1 if d > 0 else 1


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


class ExactValue:
    """A real number a + b*sqrt2 with rational a, b, or +-infinity."""

    __slots__ = ("a", "b", "inf")

    def __init__(self, a=0, b=0, inf: int = 0):
        self.inf = inf
        if inf:
            self.a = Fraction(0)
            self.b = Fraction(0)
        else:
            self.a = _frac(a)
            self.b = _frac(b)

    @staticmethod
    def coerce(x) -> "ExactValue":
        if isinstance(x, ExactValue):
            return x
        return ExactValue(_frac(x), 0)

    def is_finite(self) -> bool:
        return self.inf == 0

    def __add__(self, other):
        o = ExactValue.coerce(other)
        if self.inf or o.inf:
            if self.inf and o.inf and self.inf != o.inf:
                raise ArithmeticError("inf - inf is undefined")
            return POS_INF if (self.inf or o.inf) > 0 else NEG_INF
        return ExactValue(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        if self.inf:
            return NEG_INF if self.inf > 0 else POS_INF
        return ExactValue(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-ExactValue.coerce(other))

    def __rsub__(self, other):
        return ExactValue.coerce(other) + (-self)

    def __mul__(self, k):
        if isinstance(k, ExactValue):
            if k.inf or self.inf:
                raise ArithmeticError("product with infinity")
            return ExactValue(self.a * k.a + 2 * self.b * k.b, self.a * k.b + self.b * k.a)
        k = _frac(k)
        if self.inf:
            if k == 0:
                raise ArithmeticError("0 * inf")
            return self if k > 0 else -self
        return ExactValue(self.a * k, self.b * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        if isinstance(k, ExactValue):
            if k.inf or self.inf:
                raise ArithmeticError("division with infinity")
            n = k.a * k.a - 2 * k.b * k.b
            if n == 0:
                raise ZeroDivisionError("division by zero value")
            return ExactValue((self.a * k.a - 2 * self.b * k.b) / n, (self.b * k.a - self.a * k.b) / n)
        return self * (1 / _frac(k))

    def sign(self) -> int:
        if self.inf:
            return self.inf
        return qsign(self.a, self.b)

    def _cmp(self, other) -> int:
        o = other if isinstance(other, ExactValue) else ExactValue.coerce(other)
        if self.inf or o.inf:
            return (self.inf > o.inf) - (self.inf < o.inf)
        if self.b == o.b:
            return (self.a > o.a) - (self.a < o.a)
        return qsign(self.a - o.a, self.b - o.b)

    def __eq__(self, other):
        if not isinstance(other, (ExactValue, int, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash((self.a, self.b, self.inf))

    def __float__(self):
        if self.inf:
            return math.inf * self.inf
        return float(self.a) + float(self.b) * _S2

    def floor(self) -> int:
        """Largest integer n with n <= self."""
        if self.inf:
            raise ArithmeticError("floor of infinity")
        n = math.floor(float(self))
        while ExactValue(self.a - n, self.b) < 0:
            n -= 1
        while ExactValue(self.a - n - 1, self.b) >= 0:
            n += 1
        return n

    def ceil(self) -> int:
        return -((-self).floor())

    def __repr__(self):
        return f"ExactValue({self})"

    def __str__(self):
        if self.inf:
            return "inf" if self.inf > 0 else "-inf"
        if self.b == 0:
            return str(self.a)
        bs = "sqrt2" if self.b == 1 else ("-sqrt2" if self.b == -1 else f"{self.b}*sqrt2")
        if self.a == 0:
            return bs
        if bs.startswith("-"):
            return f"{self.a} - {bs[1:]}"
        return f"{self.a} + {bs}"


POS_INF = ExactValue(inf=1)
NEG_INF = ExactValue(inf=-1)
ZERO = ExactValue(0, 0)
ONE_V = ExactValue(1, 0)
SQRT2_V = ExactValue(0, 1)


def cmp(a: ExactValue, b: ExactValue) -> str:
    """Exact ordering of two values: 'less', 'equal' or 'greater'."""
    c = ExactValue.coerce(a)._cmp(b)
    return "less" if c < 0 else ("equal" if c == 0 else "greater")


def parse_basis_descriptor(text: str) -> ExactValue:
    """Parse '1', 'sqrt2', or a rational multiple such as '3/2*sqrt2'."""
    t = text.strip()
    scale = Fraction(1)
    if "*" in t:
        s, t = t.split("*", 1)
        scale = Fraction(s.strip())
        t = t.strip()
    if t == "1":
        return ExactValue(scale, 0)
    if t == "sqrt2":
        return ExactValue(0, scale)
    raise ConfigError(f"unknown basis descriptor {text!r}")


def format_basis_descriptor(v: ExactValue) -> str:
    if v.b == 0 and v.a != 0:
        return "1" if v.a == 1 else f"{v.a}*1"
    if v.a == 0 and v.b != 0:
        return "sqrt2" if v.b == 1 else f"{v.b}*sqrt2"
    raise ConfigError(f"basis value {v} is not a multiple of 1 or sqrt2")


def combine(basis: Sequence[ExactValue], coords: Sequence) -> ExactValue:
    """sum coords_i * basis_i."""
    if len(coords) != len(basis):
        raise ConfigError(f"expected {len(basis)} coordinates, got {len(coords)}")
    out = ZERO
    for c, b in zip(coords, basis):
        out = out + b * _frac(c)
    return out


# ---------------------------------------------------------------------------
# coefficient fields


@dataclass(frozen=True)
class Field:
    """The coefficient field K: rationals (p == 0) or GF(p)."""

    p: int = 0

    def __post_init__(self):
        if self.p:
            if self.p < 2 or any(self.p % d == 0 for d in range(2, int(self.p ** 0.5) + 1)):
                raise ConfigError(f"{self.p} is not prime")

    @property
    def is_rational(self) -> bool:
        return self.p == 0

    def coerce(self, x):
        if self.p == 0:
            return _frac(x)
        if isinstance(x, str):
            x = Fraction(x.strip())
        if isinstance(x, Fraction):
            if x.denominator % self.p == 0:
                raise ConfigError(f"{x} has no image in GF({self.p})")
            return x.numerator * pow(x.denominator, -1, self.p) % self.p
        return int(x) % self.p

    def zero(self):
        return Fraction(0) if self.p == 0 else 0

    def one(self):
        return Fraction(1) if self.p == 0 else 1

    def add(self, a, b):
        return a + b if self.p == 0 else (a + b) % self.p

    def sub(self, a, b):
        return a - b if self.p == 0 else (a - b) % self.p

    def neg(self, a):
        return -a if self.p == 0 else (-a) % self.p

    def mul(self, a, b):
        return a * b if self.p == 0 else (a * b) % self.p

    def inv(self, a):
        if a == 0:
            raise NotInvertible("inverse of 0 in K")
        return 1 / a if self.p == 0 else pow(a, -1, self.p)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def to_flint(self, a):
        if self.p == 0:
            return a.numerator if a.denominator == 1 else flint.fmpq(a.numerator, a.denominator)
        return int(a)

    def from_flint(self, c):
        if self.p == 0:
            return Fraction(int(c.p), int(c.q))
        return int(c) % self.p

    def fmt(self, a) -> str:
        return str(a)

    def name(self) -> str:
        return "Q" if self.p == 0 else f"GF {self.p}"


# ---------------------------------------------------------------------------
# valuation configuration


Gamma0Elem = tuple  # integer exponent vector; group law is componentwise addition


def g_mul(g: Sequence[int], h: Sequence[int]) -> tuple:
    return tuple(x + y for x, y in zip(g, h))


def g_inv(g: Sequence[int]) -> tuple:
    return tuple(-x for x in g)


def _rank_q(rows: Sequence[Sequence[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(m[0]) if m else 0
    while rank < len(m) and col < ncols:
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[rank])]
        rank += 1
        col += 1
    return rank


def _solve2(a11, a12, a21, a22, b1, b2):
    det = a11 * a22 - a12 * a21
    return (b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det


@dataclass(frozen=True)
class ValuationConfig:
    """Value group basis, period map omega on Gamma0 = Z^r, and the field K."""

    omega_rows: tuple
    field: Field = Field(0)
    basis_reals: tuple = (ONE_V, SQRT2_V)

    def __post_init__(self):
        rows = tuple(ExactValue.coerce(x) for x in self.omega_rows)
        object.__setattr__(self, "omega_rows", rows)
        object.__setattr__(self, "basis_reals", tuple(ExactValue.coerce(x) for x in self.basis_reals))
        if not rows:
            raise ConfigError("rank of Gamma0 must be positive")
        if any(not x.is_finite() for x in rows):
            raise ConfigError("omega rows must be finite")
        if _rank_q([(x.a, x.b) for x in rows]) != len(rows):
            raise ConfigError("omega is not injective: rows are linearly dependent over Q")
        if not self.basis_reals:
            raise ConfigError("empty value basis")

    @property
    def rank(self) -> int:
        return len(self.omega_rows)

    @property
    def dense(self) -> bool:
        """True iff omega(Gamma0) is non-cyclic (hence dense)."""
        return self.rank >= 2

    @property
    def profile(self) -> str:
        return "dense" if self.dense else "discrete"

    def identity(self) -> tuple:
        return (0,) * self.rank

    def value(self, coords: Sequence) -> ExactValue:
        return combine(self.basis_reals, coords)

    def coords_of(self, v: ExactValue) -> tuple:
        """Rational coordinates of v against the value basis."""
        basis = self.basis_reals
        for i, bi in enumerate(basis):
            if v.b == 0 and bi.b == 0 and bi.a != 0:
                out = [Fraction(0)] * len(basis)
                out[i] = v.a / bi.a
                return tuple(out)
        for i in range(len(basis)):
            for j in range(i + 1, len(basis)):
                bi, bj = basis[i], basis[j]
                if bi.a * bj.b - bi.b * bj.a != 0:
                    x, y = _solve2(bi.a, bj.a, bi.b, bj.b, v.a, v.b)
                    out = [Fraction(0)] * len(basis)
                    out[i], out[j] = x, y
                    return tuple(out)
        for i, bi in enumerate(basis):
            if bi.a == 0 and bi.b != 0 and v.a == 0:
                out = [Fraction(0)] * len(basis)
                out[i] = v.b / bi.b
                return tuple(out)
        raise ConfigError(f"value {v} is not in the span of the value basis")

    def omega_of(self, g: Sequence[int]) -> ExactValue:
        if len(g) != self.rank:
            raise ConfigError(f"group element {tuple(g)} has length {len(g)}, expected {self.rank}")
        out = ZERO
        for e, w in zip(g, self.omega_rows):
            if e:
                out = out + w * e
        return out

    # -- integer form of omega, used on hot paths --------------------------
    @cached_property
    def _scale(self) -> int:
        den = 1
        for w in self.omega_rows:
            den = math.lcm(den, w.a.denominator, w.b.denominator)
        return den

    @cached_property
    def _int_rows(self) -> tuple:
        L = self._scale
        return tuple((int(w.a * L), int(w.b * L)) for w in self.omega_rows)

    def omega_int(self, g: Sequence[int]) -> tuple:
        A = B = 0
        for e, (a, b) in zip(g, self._int_rows):
            if e:
                e = int(e)
                A += e * a
                B += e * b
        return A, B

    def scaled(self, v: ExactValue) -> tuple:
        L = self._scale
        return v.a * L, v.b * L

    def unscale(self, A, B) -> ExactValue:
        L = self._scale
        return ExactValue(Fraction(A) / L, Fraction(B) / L)

    # -- lattice geometry ---------------------------------------------------
    def decompose(self, v: ExactValue) -> tuple:
        """Write v = rep + omega(g) with rep the canonical coset representative.

        The omega coordinates of rep lie in [0, 1); rep = 0 iff v is in omega(Gamma0).
        """
        rows = self.omega_rows
        if self.rank == 2:
            q1, q2 = _solve2(rows[0].a, rows[1].a, rows[0].b, rows[1].b, v.a, v.b)
            g = (math.floor(q1), math.floor(q2))
        else:
            w = rows[0]
            e = ExactValue(0, 1) if w.a != 0 else ExactValue(1, 0)
            q, _ = _solve2(w.a, e.a, w.b, e.b, v.a, v.b)
            g = (math.floor(q),)
        return v - self.omega_of(g), g

    def canonical(self, v: ExactValue) -> ExactValue:
        return self.decompose(v)[0]

    def in_group(self, v: ExactValue) -> bool:
        return self.decompose(v)[0] == ZERO

    def same_class(self, u: ExactValue, v: ExactValue) -> bool:
        return self.in_group(u - v)

    def find_in_window(self, lo: ExactValue, hi: ExactValue, max_steps: int = 200000):
        """Some g with lo < omega(g) <= hi, or None; smallest |g_2| first."""
        rows = self.omega_rows

        def solve1(w: ExactValue, target: ExactValue):
            # largest omega-multiple n*w with n*w <= target
            q = target / w
            return q.floor() if w > 0 else q.ceil()

        if self.rank == 1:
            n = solve1(rows[0], hi)
            return (n,) if rows[0] * n > lo else None
        w1, w2 = rows
        width = float(hi - lo)
        f1, f2, fhi = float(w1), float(w2), float(hi)
        for step in range(max_steps):
            g2 = (step + 1) // 2 * (1 if step % 2 else -1)
            t = fhi - g2 * f2
            approx = t - (math.floor(t / f1) if f1 > 0 else math.ceil(t / f1)) * f1
            if approx > width + 1e-9 * (1 + abs(fhi)):
                continue
            target = hi - w2 * g2
            n = solve1(w1, target)
            if w1 * n + w2 * g2 > lo:
                return (n, g2)
        return None

    @cached_property
    def lam(self) -> "LamRing":
        return LamRing(self)


# ---------------------------------------------------------------------------
# truncated Novikov scalars


def _lt_bound(cfg: ValuationConfig, AB: tuple, bound) -> bool:
    """omega (integer form AB) < bound (scaled pair or None for +inf)."""
    if bound is None:
        return True
    return qsign(AB[0] - bound[0], AB[1] - bound[1]) < 0


@dataclass(frozen=True)
class NovikovScalar:
    """Truncated element of Lambda: terms strictly increasing in omega, plus a cutoff.

    Coefficients at omega-values >= cutoff are unknown; cutoff = +inf means exact.
    """

    config: ValuationConfig
    terms: tuple = ()
    cutoff: ExactValue = POS_INF

    @staticmethod
    def make(config: ValuationConfig, terms, cutoff: ExactValue = POS_INF) -> "NovikovScalar":
        F = config.field
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for g, c in items:
            g = tuple(int(x) for x in g)
            if len(g) != config.rank:
                raise ConfigError(f"group element {g} has wrong length")
            acc[g] = F.add(acc.get(g, F.zero()), F.coerce(c))
        bound = None if not cutoff.is_finite() else config.scaled(cutoff)
        keyed = []
        for g, c in acc.items():
            if c == 0:
                continue
            AB = config.omega_int(g)
            if not _lt_bound(config, AB, bound):
                continue
            keyed.append((AB, g, c))
        keyed.sort(key=lambda t: float(t[0][0]) + float(t[0][1]) * _S2)
        _exact_sort(keyed)
        return NovikovScalar(config, tuple((g, c) for _, g, c in keyed), cutoff)

    @staticmethod
    def monomial(config: ValuationConfig, g, c=1) -> "NovikovScalar":
        return NovikovScalar.make(config, {tuple(g): c})

    @staticmethod
    def zero(config: ValuationConfig) -> "NovikovScalar":
        return NovikovScalar(config, (), POS_INF)

    @staticmethod
    def one(config: ValuationConfig) -> "NovikovScalar":
        return NovikovScalar.monomial(config, config.identity(), 1)

    @property
    def exact(self) -> bool:
        return not self.cutoff.is_finite()

    def is_zero(self) -> bool:
        return not self.terms and self.exact

    def term_dict(self) -> dict:
        return dict(self.terms)

    def coefficient(self, g) -> object:
        g = tuple(g)
        F = self.config.field
        for h, c in self.terms:
            if h == g:
                return c
        if self.config.omega_of(g) >= self.cutoff:
            raise PrecisionExhausted(f"coefficient at {g} lies beyond cutoff {self.cutoff}")
        return F.zero()

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, negate(other))

    def __neg__(self):
        return negate(self)

    def __mul__(self, other):
        return mul(self, other)

    def __str__(self):
        if not self.terms:
            body = "0"
        else:
            body = " + ".join(f"{c}*g{list(g)}" for g, c in self.terms)
        return body if self.exact else f"{body} + O({self.cutoff})"


def _exact_sort(keyed: list) -> None:
    """Repair float ordering with exact comparisons (insertion sort, nearly sorted input)."""
    for i in range(1, len(keyed)):
        j = i
        while j > 0:
            a, b = keyed[j - 1][0], keyed[j][0]
            if qsign(a[0] - b[0], a[1] - b[1]) > 0:
                keyed[j - 1], keyed[j] = keyed[j], keyed[j - 1]
                j -= 1
            else:
                break


def _check_same(x: NovikovScalar, y: NovikovScalar):
    if x.config != y.config:
        raise ConfigError("scalars from different configurations")


def omega_of(config: ValuationConfig, g: Sequence[int]) -> ExactValue:
    """omega(g) = sum g_j * omega_j."""
    return config.omega_of(g)


def nu(x: NovikovScalar) -> ExactValue:
    """Valuation: omega-value of the leading term; +inf for exact zero."""
    if x.terms:
        return x.config.omega_of(x.terms[0][0])
    if x.exact:
        return POS_INF
    raise PrecisionExhausted(f"valuation unknown: no terms below cutoff {x.cutoff}")


def _nu_lower(x: NovikovScalar) -> ExactValue:
    if x.terms:
        return x.config.omega_of(x.terms[0][0])
    return x.cutoff


def add(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    _check_same(x, y)
    F = x.config.field
    acc = dict(x.terms)
    for g, c in y.terms:
        acc[g] = F.add(acc.get(g, F.zero()), c)
    return NovikovScalar.make(x.config, acc, min(x.cutoff, y.cutoff))


def negate(x: NovikovScalar) -> NovikovScalar:
    F = x.config.field
    return NovikovScalar(x.config, tuple((g, F.neg(c)) for g, c in x.terms), x.cutoff)


def mul(x: NovikovScalar, y: NovikovScalar) -> NovikovScalar:
    _check_same(x, y)
    if x.is_zero() or y.is_zero():
        return NovikovScalar.zero(x.config)
    cut = min(x.cutoff + _nu_lower(y), y.cutoff + _nu_lower(x))
    return NovikovScalar.make(x.config, _mul_terms(x.config, x.terms, y.terms, cut), cut)


def _mul_terms(cfg: ValuationConfig, xt, yt, cutoff: ExactValue) -> dict:
    F = cfg.field
    bound = None if not cutoff.is_finite() else cfg.scaled(cutoff)
    acc: dict = {}
    for g, a in xt:
        for h, b in yt:
            k = tuple(p + q for p, q in zip(g, h))
            if bound is not None and not _lt_bound(cfg, cfg.omega_int(k), bound):
                continue
            acc[k] = F.add(acc.get(k, F.zero()), F.mul(a, b))
    return acc


def inv(x: NovikovScalar, window: ExactValue) -> NovikovScalar:
    """Inverse correct below window (and below the precision x supports)."""
    if not x.terms:
        if x.exact:
            raise NotInvertible("inverse of zero")
        raise PrecisionExhausted("leading term unknown")
    cfg = x.config
    F = cfg.field
    window = ExactValue.coerce(window)
    g0, c0 = x.terms[0]
    nu0 = cfg.omega_of(g0)
    cut = window
    if x.exact is False:
        cut = min(cut, x.cutoff - nu0 - nu0)
    ci = F.inv(c0)
    ginv = g_inv(g0)
    # x = c0*g0*(1 - E), E has positive valuations
    E = [(g_mul(g, ginv), F.neg(F.mul(c, ci))) for g, c in x.terms[1:]]
    lead = ((ginv, ci),)
    rel_cut = cut + nu0  # series in E needed below this relative bound
    total = _geometric(cfg, E, rel_cut)
    out = _mul_terms(cfg, lead, tuple(total.items()), cut)
    return NovikovScalar.make(cfg, out, cut)


def _geometric(cfg: ValuationConfig, E, cutoff: ExactValue) -> dict:
    """sum_k E^k truncated below cutoff; E must have positive valuations."""
    F = cfg.field
    one = cfg.identity()
    acc = {one: F.one()} if ExactValue(0) < cutoff else {}
    cur = dict(acc)
    while cur and E:
        cur = _mul_terms(cfg, tuple(cur.items()), E, cutoff)
        cur = {k: v for k, v in cur.items() if v != 0}
        for k, v in cur.items():
            acc[k] = F.add(acc.get(k, F.zero()), v)
    return {k: v for k, v in acc.items() if v != 0}


def conj(x: NovikovScalar) -> NovikovScalar:
    """Group inversion g -> g^-1 termwise; defined for exact scalars only."""
    if not x.exact:
        raise PrecisionExhausted("conj needs an exact scalar: truncated tails would lead")
    return NovikovScalar.make(x.config, {g_inv(g): c for g, c in x.terms})


# ---------------------------------------------------------------------------
# exact elements of K(Gamma0)


class LamRing:
    """Polynomial backend for exact elements of Lambda (flint multivariate)."""

    def __init__(self, config: ValuationConfig):
        self.config = config
        self.field = config.field
        self.r = config.rank
        names = tuple(f"x{i}" for i in range(self.r))
        if self.field.p == 0:
            self.ctx = flint.fmpq_mpoly_ctx.get(names, "lex")
        else:
            self.ctx = flint.nmod_mpoly_ctx.get(names, ordering="lex", modulus=self.field.p)
        self._one = self.ctx.from_dict({(0,) * self.r: 1})
        self._zero = self.ctx.from_dict({})

    def poly(self, terms: Mapping) -> object:
        F = self.field
        return self.ctx.from_dict({tuple(e): F.to_flint(c) for e, c in terms.items() if c != 0})

    def zero(self) -> "Lam":
        return Lam(self, self._zero, self._one, True)

    def one(self) -> "Lam":
        return Lam(self, self._one, self._one, True)

    def const(self, c) -> "Lam":
        c = self.field.coerce(c)
        if c == 0:
            return self.zero()
        return Lam(self, self.ctx.from_dict({(0,) * self.r: self.field.to_flint(c)}), self._one, True)

    def monomial(self, g: Sequence[int], c=1) -> "Lam":
        return self.from_terms({tuple(g): c})

    def from_terms(self, terms: Mapping) -> "Lam":
        """Finite Laurent sum {exponents: coefficient}."""
        F = self.field
        terms = {tuple(int(x) for x in e): F.coerce(c) for e, c in terms.items()}
        terms = {e: c for e, c in terms.items() if c != 0}
        if not terms:
            return self.zero()
        shift = [min(0, min(e[i] for e in terms)) for i in range(self.r)]
        num = self.poly({tuple(x - s for x, s in zip(e, shift)): c for e, c in terms.items()})
        den = self.ctx.from_dict({tuple(-s for s in shift): 1})
        return Lam(self, num, den, True)

    def from_scalar(self, x: NovikovScalar) -> "Lam":
        if not x.exact:
            raise PrecisionExhausted("only exact scalars embed exactly")
        return self.from_terms(dict(x.terms))


class Lam:
    """Exact element num/den of K(Gamma0), viewed inside the Novikov field."""

    __slots__ = ("R", "num", "den", "_nu", "_lead")

    def __init__(self, R: LamRing, num, den, reduced: bool = False):
        self.R = R
        if num.is_zero():
            self.num, self.den = R._zero, R._one
        else:
            if not reduced and den.is_one():
                reduced = True
            elif not reduced and (len(den) == 1 or len(num) == 1):
                # a monomial side: the gcd is the common monomial factor
                a, b = num.term_content().monoms()[0], den.term_content().monoms()[0]
                m = tuple(min(x, y) for x, y in zip(a, b))
                if any(m):
                    g = R.ctx.from_dict({m: 1})
                    num = num / g
                    den = den / g
            elif not reduced:
                g = num.gcd(den)
                if not g.is_one():
                    num = num / g
                    den = den / g
            if not reduced:
                lc = den.leading_coefficient()
                if lc != 1:
                    inv = 1 / lc if R.field.p == 0 else pow(int(lc), -1, R.field.p)
                    num = num * inv
                    den = den * inv
            self.num, self.den = num, den
        self._nu = None
        self._lead = None

    # -- arithmetic ------------------------------------------------------
    def _wrap(self, num, den) -> "Lam":
        return Lam(self.R, num, den)

    def __add__(self, o: "Lam") -> "Lam":
        if self.num.is_zero():
            return o
        if o.num.is_zero():
            return self
        if self.den == o.den:
            if self.den.is_one():
                return Lam(self.R, self.num + o.num, self.den, True)
            return self._wrap(self.num + o.num, self.den)
        return self._wrap(self.num * o.den + o.num * self.den, self.den * o.den)

    def __neg__(self) -> "Lam":
        return Lam(self.R, -self.num, self.den, True)

    def __sub__(self, o: "Lam") -> "Lam":
        return self + (-o)

    def __mul__(self, o) -> "Lam":
        if not isinstance(o, Lam):
            o = self.R.const(o)
        if self.num.is_zero() or o.num.is_zero():
            return self.R.zero()
        if self.den.is_one() and o.den.is_one():
            return Lam(self.R, self.num * o.num, self.den, True)
        if o.is_monomial() or self.is_monomial():
            # reduced times monomial: only a monomial factor can cancel
            return self._wrap_monomial(self.num * o.num, self.den * o.den)
        return self._wrap(self.num * o.num, self.den * o.den)

    def _wrap_monomial(self, num, den) -> "Lam":
        R = self.R
        a, b = num.term_content().monoms()[0], den.term_content().monoms()[0]
        m = tuple(min(x, y) for x, y in zip(a, b))
        if any(m):
            g = R.ctx.from_dict({m: 1})
            num, den = num / g, den / g
        lc = den.leading_coefficient()
        if lc != 1:
            inv = 1 / lc if R.field.p == 0 else pow(int(lc), -1, R.field.p)
            num, den = num * inv, den * inv
        return Lam(R, num, den, True)

    __rmul__ = __mul__

    def __truediv__(self, o: "Lam") -> "Lam":
        if o.num.is_zero():
            raise NotInvertible("division by zero in Lambda")
        return self._wrap(self.num * o.den, self.den * o.num)

    def exact_div(self, o: "Lam") -> "Lam":
        """self / o, skipping the gcd when o's numerator divides exactly."""
        if o.num.is_zero():
            raise NotInvertible("division by zero in Lambda")
        if self.num.is_zero():
            return self
        if len(self.den) == 1 and len(o.den) == 1:
            q, r = divmod(self.num, o.num)
            if r.is_zero():
                return Lam(self.R, q * o.den, self.den)
        return self / o

    def inverse(self) -> "Lam":
        if self.num.is_zero():
            raise NotInvertible("inverse of zero")
        return self._wrap(self.den, self.num)

    def shift(self, g: Sequence[int]) -> "Lam":
        """Multiply by the monomial g."""
        return self * self.R.monomial(g)

    def is_one(self) -> bool:
        return self.num == self.den

    def is_monomial(self) -> bool:
        return len(self.num) == 1 and len(self.den) == 1

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __eq__(self, o) -> bool:
        if not isinstance(o, Lam):
            return NotImplemented
        return self.num * o.den == o.num * self.den

    __hash__ = None

    # -- valuation -------------------------------------------------------
    def _min_term(self, poly):
        cfg = self.R.config
        best = None
        for e, c in poly.terms():
            AB = cfg.omega_int(e)
            if best is None or qsign(AB[0] - best[0][0], AB[1] - best[0][1]) < 0:
                best = (AB, e, c)
        return best

    def nu_int(self):
        """Valuation in integer form (A, B), meaning (A + B*sqrt2)/scale; None for 0."""
        if self._nu is None and not self.num.is_zero():
            n = self._min_term(self.num)
            d = self._min_term(self.den)
            self._nu = (n[0][0] - d[0][0], n[0][1] - d[0][1])
            F = self.R.field
            self._lead = (
                tuple(a - b for a, b in zip(n[1], d[1])),
                F.div(F.from_flint(n[2]), F.from_flint(d[2])),
            )
        return self._nu

    def nu(self) -> ExactValue:
        if self.num.is_zero():
            return POS_INF
        A, B = self.nu_int()
        return self.R.config.unscale(A, B)

    def lead(self) -> tuple:
        """(exponents, coefficient) of the leading term."""
        if self.num.is_zero():
            raise NotInvertible("zero has no leading term")
        self.nu_int()
        return self._lead

    def is_laurent(self) -> bool:
        return len(self.den) == 1

    def laurent_terms(self) -> dict:
        if not self.is_laurent():
            raise ValueError("not a finite Laurent sum")
        F = self.R.field
        (dexp, dc), = self.den.terms()
        dci = F.inv(F.from_flint(dc))
        return {
            tuple(a - b for a, b in zip(e, dexp)): F.mul(F.from_flint(c), dci)
            for e, c in self.num.terms()
        }

    def conj(self) -> "Lam":
        """g -> g^-1 on a finite Laurent sum."""
        return self.R.from_terms({g_inv(e): c for e, c in self.laurent_terms().items()})

    # -- series expansion ----------------------------------------------
    def expand(self, bound: ExactValue, inclusive: bool = False) -> dict:
        """All terms with omega < bound (or <= bound when inclusive)."""
        cfg = self.R.config
        F = self.R.field
        if self.num.is_zero() or not bound.is_finite() and bound.inf < 0:
            return {}
        if not bound.is_finite():
            return self.laurent_terms()
        bA, bB = cfg.scaled(bound)
        fb = float(bA) + float(bB) * _S2
        base = 1.0 + abs(float(bA)) + abs(float(bB)) * _S2

        def keep(AB):
            # floats decide unless the gap is within rounding error
            gap = AB[0] + AB[1] * _S2 - fb
            tol = 1e-9 * (base + abs(AB[0]) + abs(AB[1]) * _S2)
            if gap < -tol:
                return True
            if gap > tol:
                return False
            s = qsign(AB[0] - bA, AB[1] - bB)
            return s < 0 or (inclusive and s == 0)

        if self.is_laurent():
            return {e: c for e, c in self.laurent_terms().items() if keep(cfg.omega_int(e))}
        dAB, dexp, dc = self._min_term(self.den)
        dci = F.inv(F.from_flint(dc))
        E = []
        for e, c in self.den.terms():
            if tuple(e) == tuple(dexp):
                continue
            E.append((tuple(a - b for a, b in zip(e, dexp)), F.neg(F.mul(F.from_flint(c), dci))))
        Eo = [(g, c, cfg.omega_int(g)) for g, c in E]
        num = {}
        for e, c in self.num.terms():
            g = tuple(a - b for a, b in zip(e, dexp))
            num[g] = F.mul(F.from_flint(c), dci)
        acc: dict = {}
        cur = {g: c for g, c in num.items() if keep(cfg.omega_int(g))}
        while cur:
            for g, c in cur.items():
                acc[g] = F.add(acc.get(g, F.zero()), c)
            nxt: dict = {}
            for g, c in cur.items():
                gA, gB = cfg.omega_int(g)
                for h, d, (hA, hB) in Eo:
                    if not keep((gA + hA, gB + hB)):
                        continue
                    k = tuple(x + y for x, y in zip(g, h))
                    nxt[k] = F.add(nxt.get(k, F.zero()), F.mul(c, d))
            cur = {k: v for k, v in nxt.items() if v != 0}
        return {k: v for k, v in acc.items() if v != 0}

    def coefficient(self, g: Sequence[int]):
        g = tuple(g)
        F = self.R.field
        if self.num.is_zero():
            return F.zero()
        terms = self.expand(self.R.config.omega_of(g), inclusive=True)
        return terms.get(g, F.zero())

    def trunc_below(self, bound: ExactValue, inclusive: bool = False) -> "Lam":
        return self.R.from_terms(self.expand(bound, inclusive))

    def to_scalar(self, cutoff: ExactValue | None = None) -> NovikovScalar:
        """Truncated series view; exact when the element is a finite Laurent sum."""
        cfg = self.R.config
        if self.is_laurent() and (cutoff is None or not cutoff.is_finite()):
            return NovikovScalar.make(cfg, self.laurent_terms())
        if cutoff is None or not cutoff.is_finite():
            raise PrecisionExhausted("infinite series needs a finite cutoff")
        return NovikovScalar.make(cfg, self.expand(cutoff), cutoff)

    def __repr__(self):
        if self.is_laurent():
            return f"Lam({self.to_scalar()})"
        return f"Lam(({self.num})/({self.den}))"


def tau_lam(x: Lam):
    """Coefficient of the identity element."""
    F = x.R.field
    if x.is_zero():
        return F.zero()
    A, B = x.nu_int()
    if qsign(A, B) > 0:
        return F.zero()
    return x.coefficient((0,) * x.R.r)


def lam_vector(R: LamRing, entries: Iterable) -> tuple:
    return tuple(e if isinstance(e, Lam) else R.const(e) for e in entries)


def lam_dot(R: LamRing, xs: Iterable, ys: Iterable) -> Lam:
    """Sum of x*y with a single fraction reduction."""
    groups = []  # [den, num]
    for x, y in zip(xs, ys):
        if x.num.is_zero() or y.num.is_zero():
            continue
        den, num = x.den * y.den, x.num * y.num
        for g in groups:
            if g[0] == den:
                g[1] += num
                break
        else:
            groups.append([den, num])
    if not groups:
        return R.zero()
    # one reduction over the product of the distinct denominators
    den, num = groups[0]
    for d, n in groups[1:]:
        num, den = num * d + n * den, den * d
    return Lam(R, num, den)
