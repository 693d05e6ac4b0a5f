"""Exact arithmetic in a maximal order of an imaginary quadratic field or a
definite quaternion algebra over Q.

Elements are tuples of integers (or Fractions, for local computations) giving
coordinates over the fixed order basis.  The first basis element is always 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt, prod
from typing import Iterable, Sequence

from sympy import factorint, legendre_symbol
from sympy.ntheory.modular import crt as _int_crt

Elem = tuple


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class Place:
    """A finite place of the order above the rational prime ``p``."""

    p: int
    kind: str

    @property
    def split(self) -> bool:
        return self.kind.startswith("split")

    def to_json(self) -> dict:
        return {"p": self.p, "kind": self.kind}

    def sort_key(self):
        order = {"split-first": 0, "split-second": 1, "split": 0, "inert": 0, "ramified": 0}
        return (self.p, order[self.kind])


def _std_mul_quadratic(d, x, y):
    return (x[0] * y[0] + d * x[1] * y[1], x[0] * y[1] + x[1] * y[0])


def _std_mul_quaternion(a, b, x, y):
    x0, x1, x2, x3 = x
    y0, y1, y2, y3 = y
    return (
        x0 * y0 + a * x1 * y1 + b * x2 * y2 - a * b * x3 * y3,
        x0 * y1 + x1 * y0 - b * x2 * y3 + b * x3 * y2,
        x0 * y2 + x2 * y0 + a * x1 * y3 - a * x3 * y1,
        x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
    )


def _solve_rational(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]):
    """Solve v * rows = rhs for the row vector v (square, exact)."""
    n = len(rows)
    # transpose so that we solve A v^T = rhs^T
    aug = [[Fraction(rows[j][i]) for j in range(n)] + [Fraction(rhs[i])] for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            raise AlgebraError("order basis is linearly dependent")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [v * inv for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [vr - f * vc for vr, vc in zip(aug[r], aug[c])]
    return tuple(aug[i][n] for i in range(n))


def hilbert_symbol(a: int, b: int, p: int) -> int:
    """Hilbert symbol (a, b)_p for nonzero integers and a finite prime p."""
    def split(x):
        e = 0
        while x % p == 0:
            x //= p
            e += 1
        return e, x

    al, u = split(a)
    be, v = split(b)
    if p != 2:
        s = (-1) ** (al * be * ((p - 1) // 2))
        if be % 2:
            s *= legendre_symbol(u % p, p)
        if al % 2:
            s *= legendre_symbol(v % p, p)
        return s

    def eps(x):
        return ((x - 1) // 2) % 2

    def omg(x):
        return ((x * x - 1) // 8) % 2

    return (-1) ** ((eps(u) * eps(v) + al * omg(v) + be * omg(u)) % 2)


@dataclass(frozen=True)
class Algebra:
    """A maximal order in Q(sqrt d) or in the definite quaternion algebra (a, b | Q).

    ``basis`` holds the order basis as rational vectors over {1, sqrt d} or
    {1, i, j, k}.  Derived data (structure constants, traces, norm form) is
    computed once at construction.
    """

    kind: str
    d: int | None = None
    a: int | None = None
    b: int | None = None
    basis: tuple = ()
    dim: int = field(init=False)
    table: tuple = field(init=False, repr=False)
    traces: tuple = field(init=False, repr=False)
    _terms: tuple = field(init=False, repr=False)
    _normq: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind == "quadratic":
            d = self.d
            if d is None or d >= 0 or any(d % (q * q) == 0 for q in range(2, isqrt(-d) + 1)):
                raise AlgebraError("quadratic algebra needs a negative squarefree d")
            if not self.basis:
                omega = (Fraction(0), Fraction(1)) if d % 4 in (2, 3) else (Fraction(1, 2), Fraction(1, 2))
                object.__setattr__(self, "basis", ((Fraction(1), Fraction(0)), omega))
        elif self.kind == "quaternion":
            if self.a is None or self.b is None or self.a >= 0 or self.b >= 0:
                raise AlgebraError("quaternion algebra must be definite: a < 0 and b < 0")
            if len(self.basis) != 4:
                raise AlgebraError("quaternion order_basis needs four elements")
        else:
            raise AlgebraError(f"unknown algebra kind {self.kind!r}")
        basis = tuple(tuple(Fraction(c) for c in v) for v in self.basis)
        object.__setattr__(self, "basis", basis)
        dim = len(basis)
        object.__setattr__(self, "dim", dim)
        if basis[0] != tuple(Fraction(int(i == 0)) for i in range(dim)):
            raise AlgebraError("first order basis element must be 1")
        table = []
        for i in range(dim):
            row = []
            for j in range(dim):
                row.append(self.from_std(self.std_mul(basis[i], basis[j])))
            table.append(tuple(row))
        object.__setattr__(self, "table", tuple(table))
        terms = []
        for i in range(dim):
            for j in range(dim):
                for k, c in enumerate(table[i][j]):
                    if c != 0:
                        c = int(c) if c.denominator == 1 else c
                        terms.append((i, j, k, c))
        object.__setattr__(self, "_terms", tuple(terms))
        traces = tuple(2 * v[0] for v in basis)
        traces = tuple(int(t) if t.denominator == 1 else t for t in traces)
        object.__setattr__(self, "traces", traces)
        nq = [[self.std_mul(basis[i], self._std_conj(basis[j]))[0] for j in range(dim)] for i in range(dim)]
        nq = tuple(tuple(int(v) if v.denominator == 1 else v for v in r) for r in nq)
        object.__setattr__(self, "_normq", nq)

    # construction helpers
    @classmethod
    def quadratic(cls, d: int) -> "Algebra":
        return cls(kind="quadratic", d=d)

    @classmethod
    def quaternion(cls, a: int, b: int, basis) -> "Algebra":
        return cls(kind="quaternion", a=a, b=b, basis=tuple(tuple(v) for v in basis))

    @classmethod
    def from_json(cls, data: dict) -> "Algebra":
        kind = data.get("kind")
        if kind == "quadratic":
            if "d" not in data:
                raise AlgebraError("field 'd' missing")
            return cls.quadratic(int(data["d"]))
        if kind == "quaternion":
            for key in ("a", "b", "order_basis"):
                if key not in data:
                    raise AlgebraError(f"field {key!r} missing")
            basis = []
            for v in data["order_basis"]:
                if len(v) != 4:
                    raise AlgebraError("field 'order_basis': each element needs 4 coefficients")
                basis.append(tuple(Fraction(int(c[0]), int(c[1])) if isinstance(c, (list, tuple)) else Fraction(c) for c in v))
            return cls.quaternion(int(data["a"]), int(data["b"]), basis)
        raise AlgebraError(f"field 'kind': unknown value {kind!r}")

    def to_json(self) -> dict:
        if self.kind == "quadratic":
            return {"kind": "quadratic", "d": self.d}
        return {
            "kind": "quaternion",
            "a": self.a,
            "b": self.b,
            "order_basis": [[[c.numerator, c.denominator] for c in v] for v in self.basis],
        }

    # standard-basis arithmetic
    def std_mul(self, x, y):
        if self.kind == "quadratic":
            return _std_mul_quadratic(self.d, x, y)
        return _std_mul_quaternion(self.a, self.b, x, y)

    def _std_conj(self, x):
        return (x[0],) + tuple(-c for c in x[1:])

    def from_std(self, v) -> tuple:
        """Coordinates over the order basis of a rational standard vector."""
        return _solve_rational(self.basis, v)

    def to_std(self, x) -> tuple:
        return tuple(sum(Fraction(x[i]) * self.basis[i][k] for i in range(self.dim)) for k in range(self.dim))

    # order arithmetic
    def zero(self) -> Elem:
        return (0,) * self.dim

    def one(self) -> Elem:
        return (1,) + (0,) * (self.dim - 1)

    def scalar(self, c) -> Elem:
        return (c,) + (0,) * (self.dim - 1)

    def gen(self, i: int) -> Elem:
        return tuple(int(k == i) for k in range(self.dim))

    def mul(self, x, y) -> Elem:
        out = [0] * self.dim
        for i, j, k, c in self._terms:
            xi = x[i]
            if xi:
                yj = y[j]
                if yj:
                    out[k] += c * xi * yj
        return tuple(out)

    @staticmethod
    def add(x, y) -> Elem:
        return tuple(a + b for a, b in zip(x, y))

    @staticmethod
    def sub(x, y) -> Elem:
        return tuple(a - b for a, b in zip(x, y))

    @staticmethod
    def neg(x) -> Elem:
        return tuple(-a for a in x)

    @staticmethod
    def scale(c, x) -> Elem:
        return tuple(c * a for a in x)

    @staticmethod
    def is_zero(x) -> bool:
        return not any(x)

    def trace(self, x):
        return sum(t * c for t, c in zip(self.traces, x))

    def conj(self, x) -> Elem:
        """The involution: iota(x) = trace(x) - x."""
        t = self.trace(x)
        return (t - x[0],) + tuple(-c for c in x[1:])

    def norm(self, x):
        q = self._normq
        n = self.dim
        return sum(q[i][j] * x[i] * x[j] for i in range(n) if x[i] for j in range(n) if x[j])

    def inverse(self, x) -> Elem:
        """x^{-1} = iota(x) / N(x) with Fraction coordinates."""
        nx = Fraction(self.norm(x))
        if nx == 0:
            raise ZeroDivisionError("zero element has no inverse")
        return tuple(Fraction(c) / nx for c in self.conj(x))

    def is_scalar(self, x) -> bool:
        return not any(x[1:])

    def reduce(self, x, modulus: int) -> Elem:
        """Coordinate-wise reduction; Fraction entries must be integral at the modulus."""
        out = []
        for c in x:
            if isinstance(c, Fraction):
                if gcd(c.denominator, modulus) != 1:
                    raise AlgebraError("coefficient not integral at the modulus")
                c = c.numerator * pow(c.denominator, -1, modulus)
            out.append(c % modulus)
        return tuple(out)

    # invariants
    def discriminant(self) -> int:
        """Field discriminant (quadratic) or reduced discriminant (quaternion)."""
        n = self.dim
        gram = [[Fraction(self.trace(self.table[i][j])) for j in range(n)] for i in range(n)]
        det = _det_fraction(gram)
        if self.kind == "quadratic":
            return int(det)
        root = isqrt(abs(int(det)))
        if root * root != abs(det):
            raise AlgebraError("trace form determinant is not a square")
        return root

    def ramified_primes(self) -> tuple:
        """Finite primes where the quaternion algebra is a division algebra (Hilbert symbols)."""
        if self.kind != "quaternion":
            return ()
        cands = set(factorint(2 * self.a * self.b))
        return tuple(sorted(p for p in cands if hilbert_symbol(self.a, self.b, p) == -1))

    def field_discriminant(self) -> int:
        d = self.d
        return d if d % 4 == 1 else 4 * d

    def places(self, p: int) -> list:
        """Classify the prime p (see :func:`classify_prime`)."""
        return classify_prime(self, p)

    def describe(self, x) -> str:
        names = ["1", "w"] if self.kind == "quadratic" else ["1", "h1", "h2", "h3"]
        if self.kind == "quadratic" and self.d % 4 in (2, 3):
            names[1] = "rho"
        parts = []
        for c, nm in zip(x, names):
            if c == 0:
                continue
            if nm == "1":
                parts.append(str(c))
            elif c == 1:
                parts.append(nm)
            elif c == -1:
                parts.append("-" + nm)
            else:
                parts.append(f"{c}*{nm}")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"


def _det_fraction(m):
    m = [list(r) for r in m]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            if m[r][c]:
                f = m[r][c] / m[c][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return det


def classify_prime(alg: Algebra, p: int) -> list:
    """Places of ``alg`` above the prime p.

    Quadratic: one place for inert/ramified p, two conjugate places
    (split-first, split-second) for split p.  Quaternion: one place, ramified
    iff p divides the reduced discriminant.
    """
    if alg.kind == "quaternion":
        kind = "ramified" if alg.discriminant() % p == 0 else "split"
        return [Place(p, kind)]
    D = alg.field_discriminant()
    if D % p == 0:
        return [Place(p, "ramified")]
    if p == 2:
        split = D % 8 == 1
    else:
        split = legendre_symbol(D % p, p) == 1
    if split:
        return [Place(p, "split-first"), Place(p, "split-second")]
    return [Place(p, "inert")]


def crt_lift(alg: Algebra, targets: Iterable, default=None) -> Elem:
    """Element congruent to each residue modulo the given prime powers.

    ``targets`` is an iterable of (modulus, residue) with pairwise coprime
    moduli; congruence is coefficient-wise over the order basis.  Without
    targets the default (or zero) is returned.
    """
    targets = list(targets)
    if not targets:
        return tuple(default) if default is not None else alg.zero()
    seen = {}
    for mod, res in targets:
        for q in factorint(mod):
            if q in seen and seen[q] != (mod, tuple(res)):
                raise AlgebraError(f"inconsistent targets at the prime {q}")
            seen[q] = (mod, tuple(res))
    moduli = [m for m, _ in targets]
    out = []
    for k in range(alg.dim):
        residues = [alg.reduce(r, m)[k] for m, r in targets]
        val, total = _int_crt(moduli, residues)
        out.append(int(val))
    return tuple(out)


def int_crt(pairs) -> int:
    """Integer congruent to r mod m for each (m, r); smallest non-negative."""
    pairs = list(pairs)
    if not pairs:
        return 0
    val, _ = _int_crt([m for m, _ in pairs], [r % m for m, r in pairs])
    return int(val)


@dataclass
class ValidationReport:
    valid: bool
    discriminant: int | None
    failures: list

    def to_json(self):
        return {"valid": self.valid, "discriminant": self.discriminant, "failures": self.failures}


def validate_maximal_order(alg: Algebra) -> ValidationReport:
    """Check closure, integrality and the discriminant criterion for maximality."""
    failures = []
    for i in range(alg.dim):
        for j in range(alg.dim):
            if any(Fraction(c).denominator != 1 for c in alg.table[i][j]):
                failures.append(f"product of basis elements {i},{j} is not in the lattice")
    if failures:
        return ValidationReport(False, None, failures)
    for i, t in enumerate(alg.traces):
        if Fraction(t).denominator != 1:
            failures.append(f"basis element {i} has non-integral trace")
    try:
        disc = alg.discriminant()
    except AlgebraError as exc:
        return ValidationReport(False, None, failures + [str(exc)])
    if alg.kind == "quadratic":
        if disc != alg.field_discriminant():
            failures.append(f"discriminant {disc} differs from field discriminant {alg.field_discriminant()}")
    else:
        expected = prod(alg.ramified_primes())
        if disc != expected:
            failures.append(f"reduced discriminant {disc} differs from product of ramified primes {expected}")
    return ValidationReport(not failures, disc, failures)


# matrices over the order: lists of rows of element tuples

def mat_mul(alg: Algebra, A, B):
    n, k, m = len(A), len(B), len(B[0])
    zero = alg.zero()
    out = []
    for i in range(n):
        row = []
        Ai = A[i]
        for j in range(m):
            acc = zero
            for t in range(k):
                if any(Ai[t]) and any(B[t][j]):
                    acc = alg.add(acc, alg.mul(Ai[t], B[t][j]))
            row.append(acc)
        out.append(row)
    return out


def mat_identity(alg: Algebra, n: int):
    return [[alg.one() if i == j else alg.zero() for j in range(n)] for i in range(n)]


def mat_star(alg: Algebra, A):
    """Conjugate transpose."""
    return [[alg.conj(A[j][i]) for j in range(len(A))] for i in range(len(A[0]))]


def mat_scale(alg: Algebra, c, A):
    return [[alg.scale(c, x) for x in row] for row in A]


def mat_equal(A, B) -> bool:
    return len(A) == len(B) and all(tuple(x) == tuple(y) for ra, rb in zip(A, B) for x, y in zip(ra, rb))


def mat_is_integral(A) -> bool:
    return all(Fraction(c).denominator == 1 for row in A for x in row for c in x)


def mat_to_int(A):
    return [[tuple(int(c) for c in x) for x in row] for row in A]


def mat_inverse(alg: Algebra, A):
    """Exact inverse over the algebra (Fraction coordinates); raises if singular."""
    n = len(A)
    one = alg.one()
    M = [[tuple(Fraction(c) for c in x) for x in row] + [alg.scalar(Fraction(int(i == j))) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if any(M[r][c])), None)
        if piv is None:
            raise AlgebraError("matrix is singular")
        M[c], M[piv] = M[piv], M[c]
        inv = alg.inverse(M[c][c])
        M[c] = [alg.mul(inv, x) for x in M[c]]
        for r in range(n):
            if r != c and any(M[r][c]):
                f = M[r][c]
                M[r] = [alg.sub(x, alg.mul(f, y)) for x, y in zip(M[r], M[c])]
    del one
    return [row[n:] for row in M]


def regular_representation(alg: Algebra, A):
    """Integer matrix of the Z-linear map x -> x*A on row vectors in Lambda^n.

    Row (i, s) is the coordinate vector of b_s * (row i of A).
    """
    n, m = len(A), len(A[0])
    dim = alg.dim
    out = []
    for i in range(n):
        for s in range(dim):
            g = alg.gen(s)
            row = []
            for j in range(m):
                row.extend(alg.mul(g, A[i][j]))
            out.append(row)
    return out
