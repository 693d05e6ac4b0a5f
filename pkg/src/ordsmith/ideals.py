"""Left ideals of the order as integer lattices, principality, class groups
and the class-sum test used by the existence decisions."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable

from sympy import sqrt_mod

from .algebra import Algebra, AlgebraError, Place, classify_prime
from .lattice import hnf, short_vectors, solve_integer


def search_bound_factor(default: int = 4) -> int:
    """Multiplier for short-vector bounds; ORDSMITH_SEARCH_BOUND overrides it."""
    raw = os.environ.get("ORDSMITH_SEARCH_BOUND")
    if raw:
        try:
            val = int(raw)
        except ValueError:
            return default
        if val > 0:
            return val
    return default


@dataclass(frozen=True)
class LeftIdeal:
    """A full-rank left ideal given by the HNF of a Z-basis (rows over the order basis)."""

    alg: Algebra = field(repr=False, compare=False, hash=False)
    rows: tuple

    @property
    def index(self) -> int:
        out = 1
        for i, r in enumerate(self.rows):
            out *= r[i]
        return out

    @property
    def norm(self) -> int:
        """Ideal norm: index for quadratic orders, reduced norm for quaternion orders."""
        idx = self.index
        if self.alg.kind == "quadratic":
            return idx
        root = isqrt(idx)
        if root * root != idx:
            raise AlgebraError("lattice index is not a square; not a left ideal")
        return root

    def basis(self):
        return [tuple(r) for r in self.rows]

    def contains(self, x) -> bool:
        if any(Fraction(c).denominator != 1 for c in x):
            return False
        return solve_integer(self.rows, [int(c) for c in x]) is not None

    def is_unit_ideal(self) -> bool:
        return self.index == 1

    def to_json(self):
        return [list(r) for r in self.rows]

    def __str__(self):
        n, g = two_generators(self)
        gs = self.alg.describe(g)
        return f"({n})" if gs == "0" or self.alg.is_scalar(g) and gcd(n, g[0]) == n else f"({n}, {gs})"


def ideal_from_generators(alg: Algebra, gens: Iterable) -> LeftIdeal:
    """Left ideal sum of Lambda*g over the generators."""
    rows = []
    for g in gens:
        if any(Fraction(c).denominator != 1 for c in g):
            raise AlgebraError("generators must lie in the order")
        g = tuple(int(c) for c in g)
        for k in range(alg.dim):
            rows.append(alg.mul(alg.gen(k), g))
    H = hnf(rows, alg.dim)
    if len(H) != alg.dim:
        raise AlgebraError("generators span the zero ideal or a lattice of lower rank")
    return LeftIdeal(alg, tuple(H))


def ideal_from_lattice(alg: Algebra, rows) -> LeftIdeal:
    """Wrap a Z-lattice (assumed closed under left multiplication)."""
    H = hnf(rows, alg.dim)
    if len(H) != alg.dim:
        raise AlgebraError("lattice is not of full rank")
    return LeftIdeal(alg, tuple(H))


def unit_ideal(alg: Algebra) -> LeftIdeal:
    return ideal_from_generators(alg, [alg.one()])


def ideal_sum(I: LeftIdeal, J: LeftIdeal) -> LeftIdeal:
    return ideal_from_lattice(I.alg, list(I.rows) + list(J.rows))


def ideal_equal(I: LeftIdeal, J: LeftIdeal) -> bool:
    return tuple(I.rows) == tuple(J.rows)


def ideal_product(I: LeftIdeal, J: LeftIdeal) -> LeftIdeal:
    """Lattice product I*J.  A left ideal when J is two-sided (always in the quadratic case)."""
    alg = I.alg
    rows = [alg.mul(x, y) for x in I.rows for y in J.rows]
    return ideal_from_lattice(alg, rows)


def ideal_product_twosided(I: LeftIdeal, J) -> LeftIdeal:
    """I times a two-sided factor: an integer, an element of Z, or a two-sided ideal.

    Raises when the requested factor is not two-sided.
    """
    alg = I.alg
    if isinstance(J, int):
        return ideal_from_lattice(alg, [[J * c for c in r] for r in I.rows])
    if isinstance(J, tuple):
        if alg.kind == "quaternion" and not alg.is_scalar(J):
            raise AlgebraError("right factor element is not central")
        return ideal_from_lattice(alg, [alg.mul(r, J) for r in I.rows])
    if alg.kind == "quaternion" and not is_two_sided(J):
        raise AlgebraError("right factor is not a two-sided ideal")
    return ideal_product(I, J)


def is_two_sided(I: LeftIdeal) -> bool:
    alg = I.alg
    return all(I.contains(alg.mul(r, alg.gen(k))) for r in I.rows for k in range(alg.dim))


def ideal_conj(I: LeftIdeal) -> LeftIdeal:
    """iota(I); a right ideal in general, a left ideal for quadratic orders."""
    alg = I.alg
    return ideal_from_lattice(alg, [alg.conj(r) for r in I.rows])


def ideal_divide(I: LeftIdeal, n: int) -> LeftIdeal:
    """I / n, which must be integral."""
    if any(c % n for r in I.rows for c in r):
        raise AlgebraError("ideal is not divisible by the integer")
    return ideal_from_lattice(I.alg, [[c // n for c in r] for r in I.rows])


def ideal_inverse_times(I: LeftIdeal, J: LeftIdeal) -> LeftIdeal:
    """I * J^{-1} for quadratic ideals, required to be integral."""
    return ideal_divide(ideal_product(I, ideal_conj(J)), J.norm)


def ideal_contains(I: LeftIdeal, J: LeftIdeal) -> bool:
    """J is a subset of I."""
    return all(I.contains(r) for r in J.rows)


def scalar_in_ideal(I: LeftIdeal) -> int:
    """Smallest positive integer contained in I."""
    n = len(I.rows)
    t = [Fraction(0)] * n
    target = [Fraction(1)] + [Fraction(0)] * (n - 1)
    # solve t * rows = target over Q; rows are upper triangular
    for c in range(n):
        acc = target[c] - sum(t[i] * I.rows[i][c] for i in range(c))
        t[c] = acc / I.rows[c][c]
    den = 1
    for v in t:
        den = den * v.denominator // gcd(den, v.denominator)
    return den


def two_generators(I: LeftIdeal):
    """(n, g) with I = Lambda*n + Lambda*g, n the least positive integer in I."""
    alg = I.alg
    n = scalar_in_ideal(I)
    cands = list(I.rows)
    cands += [alg.add(a, b) for i, a in enumerate(I.rows) for b in I.rows[i + 1:]]
    for g in cands:
        if ideal_equal(ideal_from_generators(alg, [alg.scalar(n), g]), I):
            return n, tuple(g)
    for val, v in short_vectors(gram_on_ideal(I), 8 * I.index * I.index + 16, limit=2000):
        g = element_of(I, v)
        if ideal_equal(ideal_from_generators(alg, [alg.scalar(n), g]), I):
            return n, g
    raise AlgebraError("no two-element generating set found")


def norm_gram(alg: Algebra):
    """Symmetric rational Gram matrix of the norm form on order coordinates."""
    q = alg._normq
    n = alg.dim
    return [[Fraction(q[i][j] + q[j][i], 2) for j in range(n)] for i in range(n)]


def gram_on_ideal(I: LeftIdeal):
    """Norm form restricted to the ideal, in coordinates of its HNF basis."""
    G = norm_gram(I.alg)
    B = I.rows
    n = len(B)
    GB = [[sum(G[a][b] * B[j][b] for b in range(n)) for j in range(n)] for a in range(n)]
    return [[sum(B[i][a] * GB[a][j] for a in range(n)) for j in range(n)] for i in range(n)]


def element_of(I: LeftIdeal, coords):
    n = len(I.rows)
    return tuple(sum(coords[i] * I.rows[i][k] for i in range(n)) for k in range(n))


@dataclass
class PrincipalityResult:
    principal: bool
    generator: tuple | None
    searched: int

    def __bool__(self):
        return self.principal


def is_principal(I: LeftIdeal) -> PrincipalityResult:
    """Decide whether I = Lambda*g.

    Enumerates the finite set {x in I : N(x) = norm of I} completely; a left
    ideal is principal iff this set is nonempty, and any member generates.
    In the quadratic case the answer is cross-checked against reduced forms.
    """
    alg = I.alg
    target = I.norm
    hits = [v for val, v in short_vectors(gram_on_ideal(I), target) if val == target]
    for v in hits:
        g = element_of(I, v)
        if ideal_equal(ideal_from_generators(alg, [g]), I):
            res = PrincipalityResult(True, g, len(hits))
            break
    else:
        res = PrincipalityResult(False, None, len(hits))
    if alg.kind == "quadratic":
        f = reduce_form(form_of_ideal(I))
        if (f == principal_form(alg.field_discriminant())) != res.principal:
            raise AlgebraError("principality search disagrees with reduced forms")
    return res


# binary quadratic forms

def principal_form(D: int):
    return (1, D % 2, (D % 2 - D) // 4)


def reduce_form(f):
    a, b, c = f
    while True:
        if c < a:
            a, b, c = c, -b, a
            continue
        if b > a or b <= -a:
            k = (a - b) // (2 * a)
            b2 = b + 2 * a * k
            c = (b2 * b2 - (b * b - 4 * a * c)) // (4 * a)
            b = b2
            continue
        if a == c and b < 0:
            b = -b
            continue
        return (a, b, c)


def compose_forms(f1, f2):
    """Gaussian composition of primitive forms of the same discriminant, reduced."""
    a1, b1, c1 = f1
    a2, b2, c2 = f2
    D = b1 * b1 - 4 * a1 * c1
    s = (b1 + b2) // 2
    # u*a1 + v*a2 + w*s = e
    g1, x1, y1 = _egcd(a1, a2)
    e, x2, w = _egcd(g1, s)
    u, v = x1 * x2, y1 * x2
    A = a1 * a2 // (e * e)
    B = b2 + 2 * a2 // e * (v * (s - b2) - w * c2)
    B %= 2 * A
    C = (B * B - D) // (4 * A)
    return reduce_form((A, B, C))


def inverse_form(f):
    return reduce_form((f[0], -f[1], f[2]))


def _egcd(a, b):
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def reduced_forms(D: int):
    """All reduced primitive positive definite forms of discriminant D < 0."""
    out = []
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if gcd(gcd(a, b), c) != 1:
                continue
            out.append((a, b, c))
        a += 1
    return out


def form_of_ideal(I: LeftIdeal):
    """Form N(x*alpha + y*beta)/N(I) for a positively oriented Z-basis of I."""
    alg = I.alg
    al, be = I.rows
    if al[0] * be[1] - al[1] * be[0] < 0:
        al, be = be, al
    n = I.norm
    return (alg.norm(al) // n, alg.trace(alg.mul(al, alg.conj(be))) // n, alg.norm(be) // n)


@dataclass
class IdealClassGroup:
    discriminant: int
    forms: list
    table: dict

    @property
    def order(self):
        return len(self.forms)

    def identity(self):
        return principal_form(self.discriminant)

    def class_of(self, I: LeftIdeal):
        return reduce_form(form_of_ideal(I))


def class_group_quadratic(alg: Algebra) -> IdealClassGroup:
    if alg.kind != "quadratic":
        raise AlgebraError("class groups are only built for quadratic orders")
    D = alg.field_discriminant()
    forms = reduced_forms(D)
    table = {(f, g): compose_forms(f, g) for f in forms for g in forms}
    return IdealClassGroup(D, forms, table)


# primes and realizing ideals

def hensel_roots(coeffs, p: int, k: int):
    """Roots mod p^k of the monic quadratic x^2 + c1 x + c0 (simple roots mod p only)."""
    c0, c1 = coeffs
    mod = p ** k
    roots = []
    for r in range(p):
        if (r * r + c1 * r + c0) % p == 0:
            roots.append(r)
    out = []
    for r in roots:
        deriv = (2 * r + c1) % p
        if deriv == 0:
            continue
        x = r
        m = p
        while m < mod:
            m = min(m * m, mod)
            fx = x * x + c1 * x + c0
            dx = 2 * x + c1
            x = (x - fx * pow(dx, -1, m)) % m
        out.append(x % mod)
    return sorted(out)


def omega_minpoly(alg: Algebra):
    """(c0, c1) with omega^2 + c1*omega + c0 = 0."""
    w = alg.gen(1)
    return (alg.norm(w), -alg.trace(w))


def split_roots(alg: Algebra, p: int, k: int):
    """(r1, r2): images of omega at the split-first and split-second places mod p^k."""
    c0, c1 = omega_minpoly(alg)
    if p != 2:
        disc = c1 * c1 - 4 * c0
        s = sqrt_mod(disc, p ** k)
        if s is None:
            raise AlgebraError(f"{p} is not split")
        inv2 = pow(2, -1, p ** k)
        roots = [((-c1 + s) * inv2) % p ** k, ((-c1 - s) * inv2) % p ** k]
        # choose the root congruent to the smaller residue mod p first
        roots.sort(key=lambda r: (r % p, r))
        return roots[0], roots[1]
    roots = hensel_roots((c0, c1), p, k)
    if len(roots) != 2:
        raise AlgebraError(f"{p} is not split")
    roots.sort(key=lambda r: (r % p, r))
    return roots[0], roots[1]


def prime_ideal(alg: Algebra, place: Place) -> LeftIdeal:
    """The prime ideal of the order at a place."""
    p = place.p
    if alg.kind == "quadratic":
        if place.kind == "inert":
            return ideal_from_generators(alg, [alg.scalar(p)])
        if place.kind == "ramified":
            c0, c1 = omega_minpoly(alg)
            r = next(r for r in range(p) if (r * r + c1 * r + c0) % p == 0)
            return ideal_from_generators(alg, [alg.scalar(p), (-r, 1)])
        r1, r2 = split_roots(alg, p, 1)
        r = r1 if place.kind == "split-first" else r2
        return ideal_from_generators(alg, [alg.scalar(p), (-r, 1)])
    if place.kind == "ramified":
        return ideal_from_generators(alg, [alg.scalar(p), ramified_uniformizer(alg, p)])
    raise AlgebraError("split quaternion places have no two-sided prime of index p^2")


def ramified_uniformizer(alg: Algebra, p: int):
    """An order element whose norm has p-valuation exactly one."""
    from itertools import product

    for bound in range(1, 6):
        for coeffs in product(range(-bound, bound + 1), repeat=alg.dim):
            n = alg.norm(coeffs)
            if n % p == 0 and n % (p * p) != 0:
                return tuple(coeffs)
    raise AlgebraError(f"no uniformizer found at {p}")


def ideal_power(I: LeftIdeal, e: int) -> LeftIdeal:
    out = unit_ideal(I.alg)
    for _ in range(e):
        out = ideal_product(out, I)
    return out


# class-sum test

@dataclass
class ClassSumResult:
    status: str  # "trivial" | "nontrivial" | "inconclusive"
    witness: object = None
    detail: str = ""


def class_sum_is_trivial(alg: Algebra, eds, n: int, bound: int | None = None) -> ClassSumResult:
    """Is the sum of the ideal classes of ``eds`` trivial?

    Quadratic: the product ideal is principal (witness: a generator), decided
    through reduced forms.  Quaternion (n >= 2): a free basis of the module
    realizing the ideals is searched with short vectors; a found basis is the
    witness, otherwise the answer is inconclusive with the bound used.
    """
    if alg.kind == "quadratic":
        prod_ideal = unit_ideal(alg)
        for I in eds:
            prod_ideal = ideal_product(prod_ideal, I)
        res = is_principal(prod_ideal)
        if res.principal:
            return ClassSumResult("trivial", res.generator, "product ideal is principal")
        cg = class_group_quadratic(alg)
        return ClassSumResult("nontrivial", cg.class_of(prod_ideal), "product ideal class is not principal")
    if n < 2:
        raise AlgebraError("the quaternion class-sum test needs rank n >= 2")
    from .unimodular import free_basis_quaternion

    mat, used = free_basis_quaternion(alg, list(eds), bound)
    if mat is not None:
        return ClassSumResult("trivial", mat, f"free basis found within bound {used}")
    return ClassSumResult("inconclusive", None, f"short-vector bound {used} exhausted")
