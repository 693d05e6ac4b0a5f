"""Local elementary divisors of matrices over the order at each finite place.

Every local computation happens in a finite residue ring Lambda/p^K (or its
split component Z/p^K, or M_2(Z/p^K) at split quaternion places).  The
elimination only uses transvections, so the recorded words replay exactly
in that residue ring and can later be approximated globally.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from math import gcd
from typing import Callable

from sympy import Matrix, factorint, sqrt_mod
from sympy.matrices.normalforms import smith_normal_form
from sympy.polys.domains import ZZ

from .algebra import (
    Algebra,
    AlgebraError,
    Place,
    classify_prime,
    regular_representation,
)
from .ideals import (
    LeftIdeal,
    ideal_from_generators,
    ideal_inverse_times,
    omega_minpoly,
    ramified_uniformizer,
    split_roots,
)
from .lattice import det_int

INF = float("inf")
MAX_RAISES = 8


def vp(x: int, p: int) -> float:
    if x == 0:
        return INF
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def frac_mod(c, mod: int) -> int:
    c = Fraction(c)
    if gcd(c.denominator, mod) != 1:
        raise AlgebraError("value is not integral at the modulus")
    return c.numerator * pow(c.denominator, -1, mod) % mod


# local rings

class ResidueRing:
    """Interface shared by the local residue rings used in elimination."""

    p: int
    K: int
    mod: int

    def zero(self):
        raise NotImplementedError

    def one(self):
        raise NotImplementedError


class ZpRing(ResidueRing):
    """Z/p^K with p-adic valuation."""

    commutative = True

    def __init__(self, p: int, K: int):
        self.p, self.K, self.mod = p, K, p ** K

    def zero(self):
        return 0

    def one(self):
        return 1

    def add(self, x, y):
        return (x + y) % self.mod

    def sub(self, x, y):
        return (x - y) % self.mod

    def neg(self, x):
        return -x % self.mod

    def mul(self, x, y):
        return x * y % self.mod

    def val(self, x):
        x %= self.mod
        return INF if x == 0 else vp(x, self.p)

    def left_quot(self, x, d):
        """q with q*d = x (exists when val(x) >= val(d))."""
        v = self.val(d)
        u = (d % self.mod) // self.p ** v
        return ((x % self.mod) // self.p ** v) * pow(u, -1, self.mod) % self.mod

    right_quot = left_quot

    def uniformizer_power(self, w):
        return pow(self.p, w, self.mod)

    def from_int(self, c):
        return c % self.mod


class OrderResidueRing(ResidueRing):
    """Lambda/p^K at a place where Lambda_p is a (possibly noncommutative) DVR.

    Valuation: nu_p(N(x)) at ramified places, nu_p(N(x))/2 at inert ones.
    """

    def __init__(self, alg: Algebra, p: int, K: int, ramified: bool):
        self.alg, self.p, self.K, self.mod = alg, p, K, p ** K
        self.ramified = ramified
        self.commutative = alg.kind == "quadratic"
        self._pi = ramified_uniformizer(alg, p) if ramified else alg.scalar(p)

    def zero(self):
        return self.alg.zero()

    def one(self):
        return self.alg.one()

    def _red(self, x):
        return tuple(c % self.mod for c in x)

    def add(self, x, y):
        return self._red(self.alg.add(x, y))

    def sub(self, x, y):
        return self._red(self.alg.sub(x, y))

    def neg(self, x):
        return self._red(self.alg.neg(x))

    def mul(self, x, y):
        return self._red(self.alg.mul(x, y))

    def val(self, x):
        x = self._red(x)
        if not any(x):
            return INF
        v = vp(int(self.alg.norm(x)), self.p)
        return v if self.ramified else v // 2

    def left_quot(self, x, d):
        q = self.alg.mul(x, self.alg.inverse(d))
        return tuple(frac_mod(c, self.mod) for c in q)

    def right_quot(self, x, d):
        q = self.alg.mul(self.alg.inverse(d), x)
        return tuple(frac_mod(c, self.mod) for c in q)

    def uniformizer_power(self, w):
        out = self.one()
        for _ in range(w):
            out = self.mul(out, self._pi)
        return out

    def from_int(self, c):
        return self._red(self.alg.scalar(c))


# transvection words

@dataclass(frozen=True)
class Transvection:
    side: str  # "left" | "right"
    i: int
    j: int
    a: tuple  # order element residue mod p^k (an int for Z/p^k words)


@dataclass
class TransvectionSeq:
    """Ordered transvections plus the trailing diagonal unit part.

    Left records are applied to the matrix from the left in list order,
    right records from the right in list order.
    """

    records: list = field(default_factory=list)
    units: list = field(default_factory=list)
    precision: int = 0

    def __len__(self):
        return len(self.records)


def apply_records(ring, A, records):
    """Replay transvection records on a square matrix over the ring."""
    A = [list(r) for r in A]
    n = len(A)
    for t in records:
        i, j, a = t.i, t.j, t.a
        if t.side == "left":
            A[i] = [ring.add(x, ring.mul(a, y)) for x, y in zip(A[i], A[j])]
        else:
            for r in range(n):
                A[r][j] = ring.add(A[r][j], ring.mul(A[r][i], a))
    return A


def _swap_records(ring, side, i, j):
    """Three transvections turning (r_i, r_j) into (r_j, -r_i) (rows or columns)."""
    one, mone = ring.one(), ring.neg(ring.one())
    if side == "left":
        return [Transvection("left", i, j, one), Transvection("left", j, i, mone), Transvection("left", i, j, one)]
    return [Transvection("right", j, i, one), Transvection("right", i, j, mone), Transvection("right", j, i, one)]


@dataclass
class Elimination:
    diagonal: list
    exponents: list
    left: list
    right: list


def eliminate(ring, A) -> Elimination:
    """Transvection-only Smith elimination over a local residue ring.

    Pivot: minimal valuation in the remaining block, ties by lowest row then
    column.  Returns the diagonal, exponents and the two words with
    L_t ... L_1 A R_1 ... R_s = diag.
    """
    n = len(A)
    A = [list(r) for r in A]
    left, right = [], []
    exps = []
    for k in range(n):
        best = None
        for r in range(k, n):
            for c in range(k, n):
                v = ring.val(A[r][c])
                if v != INF and (best is None or v < best[0]):
                    best = (v, r, c)
        if best is None:
            raise PrecisionError("remaining block vanishes modulo p^K")
        v, r, c = best
        if r != k:
            recs = _swap_records(ring, "left", k, r)
            A = apply_records(ring, A, recs)
            left += recs
        if c != k:
            recs = _swap_records(ring, "right", k, c)
            A = apply_records(ring, A, recs)
            right += recs
        d = A[k][k]
        for i in range(k + 1, n):
            if ring.val(A[i][k]) != INF:
                t = Transvection("left", i, k, ring.neg(ring.left_quot(A[i][k], d)))
                A = apply_records(ring, A, [t])
                left.append(t)
        for j in range(k + 1, n):
            if ring.val(A[k][j]) != INF:
                t = Transvection("right", k, j, ring.neg(ring.right_quot(A[k][j], d)))
                A = apply_records(ring, A, [t])
                right.append(t)
        exps.append(v)
    for i in range(n):
        for j in range(n):
            if i != j and ring.val(A[i][j]) != INF:
                raise AlgebraError("elimination left an off-diagonal entry")
    return Elimination([A[i][i] for i in range(n)], exps, left, right)


class PrecisionError(AlgebraError):
    pass


# split maps

@dataclass
class SplitQuadraticMap:
    """The two projections Lambda -> Z/p^K at a split prime (omega -> r1, r2)."""

    alg: Algebra
    p: int
    K: int
    r1: int
    r2: int

    @property
    def mod(self):
        return self.p ** self.K

    def phi(self, x, which: int = 1) -> int:
        r = self.r1 if which == 1 else self.r2
        return frac_mod(Fraction(x[0]) + Fraction(x[1]) * r, self.mod)

    def lift(self, t1: int, t2: int) -> tuple:
        """Element a of Lambda/p^K with phi1(a) = t1 and phi2(a) = t2."""
        mod = self.mod
        inv = pow((self.r1 - self.r2) % mod, -1, mod)
        c1 = (t1 - t2) * inv % mod
        c0 = (t1 - c1 * self.r1) % mod
        return (c0, c1)


def split_quadratic_map(alg: Algebra, p: int, K: int) -> SplitQuadraticMap:
    r1, r2 = split_roots(alg, p, K)
    return SplitQuadraticMap(alg, p, K, r1, r2)


def _mat_inv_mod(M, mod):
    n = len(M)
    A = [[c % mod for c in row] + [int(i == j) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        piv = next((r for r in range(c, n) if gcd(A[r][c], mod) == 1), None)
        if piv is None:
            raise AlgebraError("matrix is not invertible modulo the prime power")
        A[c], A[piv] = A[piv], A[c]
        inv = pow(A[c][c], -1, mod)
        A[c] = [x * inv % mod for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [(x - f * y) % mod for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


@dataclass
class SplitQuaternionMap:
    """Ring isomorphism Lambda/p^K -> M_2(Z/p^K) given by matrix units."""

    alg: Algebra
    p: int
    K: int
    units: dict  # (i, j) -> order element E_ij mod p^K
    _images: list = field(default_factory=list, repr=False)
    _inverse: list = field(default_factory=list, repr=False)

    @property
    def mod(self):
        return self.p ** self.K

    def to_mat(self, x):
        alg, mod = self.alg, self.mod
        x = tuple(frac_mod(c, mod) for c in x)
        out = [[0, 0], [0, 0]]
        for i in range(2):
            for j in range(2):
                y = alg.mul(alg.mul(self.units[(0, i)], x), self.units[(j, 0)])
                out[i][j] = int(alg.trace(y)) % mod
        return out

    def from_mat(self, A) -> tuple:
        """Order element (mod p^K) with the given matrix image."""
        vec = [A[0][0], A[0][1], A[1][0], A[1][1]]
        mod = self.mod
        return tuple(sum(vec[r] * self._inverse[r][c] for r in range(4)) % mod for c in range(4))

    def unit_matrix(self, i, j, t=1):
        A = [[0, 0], [0, 0]]
        A[i][j] = t % self.mod
        return self.from_mat(A)


def _quad_roots_mod_p(t, nrm, p):
    """Distinct roots of x^2 - t x + nrm mod p, or None."""
    if p == 2:
        roots = [r for r in (0, 1) if (r * r - t * r + nrm) % 2 == 0]
    else:
        disc = (t * t - 4 * nrm) % p
        if disc == 0:
            return None
        s = sqrt_mod(disc, p)
        if s is None:
            return None
        inv2 = pow(2, -1, p)
        roots = [(t + s) * inv2 % p, (t - s) * inv2 % p]
    roots = sorted(set(roots))
    return roots if len(roots) == 2 else None


def split_quaternion_residue(alg: Algebra, p: int, K: int, seed: int = 0) -> SplitQuaternionMap:
    """Splitting Lambda/p^K = M_2(Z/p^K) via a Hensel-lifted rank-one idempotent.

    Deterministic for a given seed; verified multiplicative on all basis products.
    """
    if alg.kind != "quaternion":
        raise AlgebraError("splitting maps exist only for quaternion orders")
    if alg.discriminant() % p == 0:
        raise AlgebraError(f"{p} is ramified; no splitting exists")
    mod = p ** K
    rng = random.Random(seed * 1000003 + p)

    def red(x):
        return tuple(c % mod for c in x)

    def mul(x, y):
        return red(alg.mul(x, y))

    one = alg.one()
    for _ in range(2000):
        z = tuple(rng.randint(-3, 3) for _ in range(4))
        roots = _quad_roots_mod_p(int(alg.trace(z)) % p, int(alg.norm(z)) % p, p)
        if roots is None:
            continue
        r1, r2 = roots
        inv = pow((r1 - r2) % mod, -1, mod)
        e = red(alg.scale(inv, alg.sub(z, alg.scalar(r2))))
        for _ in range(K + 2):
            e2 = mul(e, e)
            e = red(alg.sub(alg.scale(3, e2), alg.scale(2, mul(e2, e))))
        if mul(e, e) != e:
            raise AlgebraError("idempotent lifting failed")
        f = red(alg.sub(one, e))
        e12 = None
        for b in [alg.gen(s) for s in range(4)] + [tuple(rng.randint(-2, 2) for _ in range(4)) for _ in range(50)]:
            cand = mul(mul(e, b), f)
            if any(c % p for c in cand):
                e12 = cand
                break
        if e12 is None:
            continue
        x = None
        for b in [alg.gen(s) for s in range(4)] + [tuple(rng.randint(-2, 2) for _ in range(4)) for _ in range(50)]:
            cand = mul(mul(f, b), e)
            lam = int(alg.trace(mul(e12, cand))) % mod
            if lam % p:
                x = cand
                break
        if x is None:
            continue
        e21 = red(alg.scale(pow(lam, -1, mod), x))
        smap = SplitQuaternionMap(alg, p, K, {(0, 0): e, (1, 1): f, (0, 1): e12, (1, 0): e21})
        images = []
        for s in range(4):
            A = smap.to_mat(alg.gen(s))
            images.append([A[0][0], A[0][1], A[1][0], A[1][1]])
        try:
            inv_images = _mat_inv_mod(images, mod)
        except AlgebraError:
            continue
        # rows of inv_images express matrix units in the order basis
        smap._images = images
        smap._inverse = inv_images
        _verify_split_map(smap)
        return smap
    raise AlgebraError(f"could not split the order at {p}")


def _verify_split_map(smap: SplitQuaternionMap):
    alg, mod = smap.alg, smap.mod
    if smap.to_mat(alg.one()) != [[1 % mod, 0], [0, 1 % mod]]:
        raise AlgebraError("splitting map does not send 1 to the identity")
    for s in range(4):
        for t in range(4):
            x, y = alg.gen(s), alg.gen(t)
            A, B = smap.to_mat(x), smap.to_mat(y)
            AB = [[sum(A[i][k] * B[k][j] for k in range(2)) % mod for j in range(2)] for i in range(2)]
            if smap.to_mat(alg.mul(x, y)) != AB:
                raise AlgebraError("splitting map is not multiplicative")


def expand_split_quaternion(smap: SplitQuaternionMap, M):
    """The 2n x 2n matrix over Z/p^K of an n x n matrix over Lambda."""
    n = len(M)
    out = [[0] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            A = smap.to_mat(M[i][j])
            for a in range(2):
                for b in range(2):
                    out[2 * i + a][2 * j + b] = A[a][b]
    return out


def pull_back_split_quaternion(smap: SplitQuaternionMap, n: int, t: Transvection):
    """Order-level transvection records equal to one Z-level transvection."""
    bi, al = divmod(t.i, 2)
    bj, be = divmod(t.j, 2)
    if bi != bj:
        a = smap.unit_matrix(al, be, t.a)
        return [Transvection(t.side, bi, bj, a)]
    if n < 2:
        raise AlgebraError("same-block transvection needs n >= 2")
    u = 0 if bi != 0 else 1
    mod = smap.mod
    # e_{r,s}(t) = X Y X^-1 Y^-1 with X = e_{r,u}(t), Y = e_{u,s}(1)
    X = (bi, u, smap.unit_matrix(al, 0, t.a))
    Y = (u, bj, smap.unit_matrix(0, be, 1))
    Xi = (bi, u, smap.unit_matrix(al, 0, -t.a % mod))
    Yi = (u, bj, smap.unit_matrix(0, be, mod - 1))
    seq = [Yi, Xi, Y, X] if t.side == "left" else [X, Y, Xi, Yi]
    return [Transvection(t.side, i, j, a) for i, j, a in seq]


# profiles

@dataclass(frozen=True)
class LocalEDProfile:
    """Invariants per place; places with all-trivial data are omitted."""

    entries: tuple  # sorted tuple of (Place, invariants)

    @classmethod
    def from_dict(cls, d: dict) -> "LocalEDProfile":
        items = []
        for place, inv in d.items():
            inv = tuple(tuple(x) if isinstance(x, (list, tuple)) else x for x in inv)
            if _is_trivial(inv):
                continue
            items.append((place, inv))
        items.sort(key=lambda kv: kv[0].sort_key())
        return cls(tuple(items))

    def as_dict(self) -> dict:
        return dict(self.entries)

    def get(self, place: Place, n: int, pairs: bool = False):
        d = self.as_dict()
        if place in d:
            return d[place]
        return tuple((0, 0) for _ in range(n)) if pairs else tuple(0 for _ in range(n))

    def primes(self):
        return sorted({pl.p for pl, _ in self.entries})

    def to_json(self):
        return [{"place": pl.to_json(), "invariants": [list(x) if isinstance(x, tuple) else x for x in inv]} for pl, inv in self.entries]

    @classmethod
    def from_json(cls, data) -> "LocalEDProfile":
        d = {}
        for item in data:
            pl = Place(int(item["place"]["p"]), str(item["place"]["kind"]))
            d[pl] = tuple(tuple(x) if isinstance(x, list) else int(x) for x in item["invariants"])
        return cls.from_dict(d)


def _is_trivial(inv):
    for x in inv:
        if isinstance(x, tuple):
            if any(x):
                return False
        elif x:
            return False
    return True


@dataclass
class LocalSNF:
    place: Place
    invariants: tuple
    left: TransvectionSeq
    right: TransvectionSeq
    diagonal: list
    ring: object
    smap: object = None


def scale_primes(alg: Algebra, M) -> dict:
    """Primes dividing the restriction-of-scalars determinant, with valuations."""
    R = regular_representation(alg, M)
    det = det_int(R)
    if det == 0:
        raise AlgebraError("matrix is singular")
    return {int(p): int(e) for p, e in factorint(abs(det)).items()}


def _to_int_matrix(alg, M):
    out = []
    for row in M:
        r = []
        for x in row:
            if any(Fraction(c).denominator != 1 for c in x):
                raise AlgebraError("matrix entries must lie in the order")
            r.append(tuple(int(c) for c in x))
        out.append(r)
    return out


def default_precision(alg, M, p):
    return scale_primes(alg, M).get(p, 0) + 2


def local_unimodular_snf(alg: Algebra, M, place: Place, k: int | None = None) -> LocalSNF:
    """Local Smith form at a place with full transvection words.

    Quadratic places and ramified quaternion places yield n exponents; split
    quaternion places are handled by :func:`quaternion_local_snf`.
    """
    M = _to_int_matrix(alg, M)
    n = len(M)
    p = place.p
    K = k if k is not None else default_precision(alg, M, p)
    for attempt in range(MAX_RAISES):
        try:
            return _local_snf_at(alg, M, place, K)
        except PrecisionError:
            K *= 2
    raise AlgebraError("precision overflow after auto-raise limit")


def _local_snf_at(alg, M, place, K):
    n = len(M)
    p = place.p
    if alg.kind == "quaternion" and place.kind == "split":
        smap = split_quaternion_residue(alg, p, K)
        ring = ZpRing(p, K)
        big = expand_split_quaternion(smap, M)
        el = eliminate(ring, big)
        left = [r for t in el.left for r in pull_back_split_quaternion(smap, n, t)]
        right = [r for t in el.right for r in pull_back_split_quaternion(smap, n, t)]
        exps = sorted(el.exponents)
        inv = tuple((exps[2 * i], exps[2 * i + 1]) for i in range(n))
        units = []
        diag = []
        for i in range(n):
            d0, d1 = el.diagonal[2 * i], el.diagonal[2 * i + 1]
            diag.append(smap.from_mat([[d0, 0], [0, d1]]))
            u0 = ring.left_quot(d0, ring.uniformizer_power(el.exponents[2 * i]))
            u1 = ring.left_quot(d1, ring.uniformizer_power(el.exponents[2 * i + 1]))
            units.append(smap.from_mat([[u0, 0], [0, u1]]))
        seqL = TransvectionSeq(left, units, K)
        seqR = TransvectionSeq(right, [], K)
        return LocalSNF(place, inv, seqL, seqR, diag, OrderResidueRingSplit(alg, smap), smap)
    if alg.kind == "quadratic" and place.split:
        smap = split_quadratic_map(alg, p, K)
        which = 1 if place.kind == "split-first" else 2
        ring = ZpRing(p, K)
        local = [[smap.phi(x, which) for x in row] for row in M]
        el = eliminate(ring, local)

        def lift(t):
            a = smap.lift(t.a, 0) if which == 1 else smap.lift(0, t.a)
            return Transvection(t.side, t.i, t.j, a)

        units = [ring.left_quot(d, ring.uniformizer_power(v)) for d, v in zip(el.diagonal, el.exponents)]
        seqL = TransvectionSeq([lift(t) for t in el.left], units, K)
        seqR = TransvectionSeq([lift(t) for t in el.right], [], K)
        return LocalSNF(place, tuple(el.exponents), seqL, seqR, el.diagonal, ring, smap)
    ring = OrderResidueRing(alg, p, K, ramified=(place.kind == "ramified"))
    el = eliminate(ring, [[ring._red(x) for x in row] for row in M])
    units = [ring.right_quot(d, ring.uniformizer_power(v)) for d, v in zip(el.diagonal, el.exponents)]
    return LocalSNF(place, tuple(el.exponents), TransvectionSeq(el.left, units, K), TransvectionSeq(el.right, [], K), el.diagonal, ring)


class OrderResidueRingSplit:
    """Order residues mod p^K at a split quaternion place (arithmetic only)."""

    def __init__(self, alg, smap):
        self.alg, self.smap, self.p, self.K, self.mod = alg, smap, smap.p, smap.K, smap.mod

    def add(self, x, y):
        return tuple((a + b) % self.mod for a, b in zip(x, y))

    def mul(self, x, y):
        return tuple(c % self.mod for c in self.alg.mul(x, y))


def quaternion_local_snf(alg: Algebra, M, place: Place, k: int | None = None) -> LocalSNF:
    """Local invariants of a quaternion matrix (n >= 2): exponents or exponent pairs."""
    if alg.kind != "quaternion":
        raise AlgebraError("quaternion_local_snf needs a quaternion algebra")
    if len(M) < 2:
        raise AlgebraError("quaternion local elementary divisors need n >= 2")
    return local_unimodular_snf(alg, M, place, k)


def local_profile(alg: Algebra, M, require_rank: bool = True) -> LocalEDProfile:
    """Invariants at every place dividing the scale of M."""
    M = _to_int_matrix(alg, M)
    if alg.kind == "quaternion" and require_rank and len(M) < 2:
        raise AlgebraError("quaternion local elementary divisors need n >= 2")
    out = {}
    for p in sorted(scale_primes(alg, M)):
        for place in classify_prime(alg, p):
            out[place] = local_unimodular_snf(alg, M, place).invariants
    return LocalEDProfile.from_dict(out)


def replay_local(snf: LocalSNF, M):
    """Apply the recorded words to M in the local ring; returns the local matrix.

    The result must equal the recorded diagonal exactly.
    """
    alg = None
    place = snf.place
    ring = snf.ring
    if isinstance(ring, OrderResidueRingSplit):
        alg = ring.alg
        A = [[tuple(c % ring.mod for c in x) for x in row] for row in M]
        A = apply_records(_OrderRing(alg, ring.mod), A, snf.left.records)
        A = apply_records(_OrderRing(alg, ring.mod), A, snf.right.records)
        return A
    if isinstance(ring, ZpRing):
        smap = snf.smap
        which = 1 if place.kind == "split-first" else 2
        A = [[smap.phi(x, which) for x in row] for row in M]
        recs = [Transvection(t.side, t.i, t.j, smap.phi(t.a, which)) for t in snf.left.records + snf.right.records]
        return apply_records(ring, A, recs)
    A = [[ring._red(x) for x in row] for row in M]
    return apply_records(ring, A, snf.left.records + snf.right.records)


class _OrderRing:
    def __init__(self, alg, mod):
        self.alg, self.mod = alg, mod

    def add(self, x, y):
        return tuple((a + b) % self.mod for a, b in zip(x, y))

    def mul(self, x, y):
        return tuple(c % self.mod for c in self.alg.mul(x, y))


# global divisors (quadratic)

def det_quadratic(alg: Algebra, M):
    n = len(M)
    if n == 1:
        return M[0][0]
    total = alg.zero()
    for perm in permutations(range(n)):
        sign = 1
        for a in range(n):
            for b in range(a + 1, n):
                if perm[a] > perm[b]:
                    sign = -sign
        term = alg.scalar(sign)
        for r in range(n):
            term = alg.mul(term, M[r][perm[r]])
            if not any(term):
                break
        total = alg.add(total, term)
    return total


def global_eds_quadratic(alg: Algebra, M) -> list:
    """Elementary divisor ideals e_i = d_i / d_{i-1} from determinantal divisors."""
    if alg.kind != "quadratic":
        raise AlgebraError("global elementary divisors are defined for quadratic orders")
    M = _to_int_matrix(alg, M)
    n = len(M)
    if not any(det_quadratic(alg, M)):
        raise AlgebraError("matrix is singular")
    ds = [ideal_from_generators(alg, [alg.one()])]
    for i in range(1, n + 1):
        minors = []
        for rows in combinations(range(n), i):
            for cols in combinations(range(n), i):
                sub = [[M[r][c] for c in cols] for r in rows]
                dm = det_quadratic(alg, sub)
                if any(dm):
                    minors.append(dm)
        ds.append(ideal_from_generators(alg, minors))
    return [ideal_inverse_times(ds[i], ds[i - 1]) for i in range(1, n + 1)]


# restriction of scalars oracle

def restriction_of_scalars_snf(alg: Algebra, M) -> dict:
    """Exponents of the integer Smith form of the regular representation, per prime."""
    R = regular_representation(alg, _to_int_matrix(alg, M))
    S = smith_normal_form(Matrix(R), domain=ZZ)
    diag = [int(S[i, i]) for i in range(S.rows)]
    if any(x == 0 for x in diag):
        raise AlgebraError("matrix is singular")
    primes = set()
    for x in diag:
        primes |= set(factorint(abs(x)))
    return {p: sorted(int(vp(abs(x), p)) for x in diag) for p in sorted(primes)}


def expected_restriction_exponents(alg: Algebra, profile: LocalEDProfile, n: int) -> dict:
    """Multiset predicted from a local profile by the multiplicity rules."""
    out = {}
    for p in profile.primes():
        vals = []
        for place in classify_prime(alg, p):
            pairs = alg.kind == "quaternion" and place.kind == "split"
            inv = profile.get(place, n, pairs)
            for w in inv:
                if alg.kind == "quadratic":
                    if place.split:
                        vals.append(w)
                    elif place.kind == "inert":
                        vals += [w, w]
                    else:
                        vals += [(w + 1) // 2, w // 2]
                elif pairs:
                    vals += [w[0], w[0], w[1], w[1]]
                else:
                    vals += [(w + 1) // 2] * 2 + [w // 2] * 2
        out[p] = sorted(vals)
    return out
