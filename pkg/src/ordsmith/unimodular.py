"""Unimodular equivalence, transform recovery by CRT approximation, and
existence/construction of matrices with prescribed elementary divisors."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product

from .algebra import (
    Algebra,
    AlgebraError,
    Place,
    classify_prime,
    crt_lift,
    mat_identity,
    mat_inverse,
    mat_is_integral,
    mat_mul,
    mat_to_int,
    regular_representation,
)
from .ideals import (
    LeftIdeal,
    class_group_quadratic,
    gram_on_ideal,
    element_of,
    ideal_conj,
    ideal_divide,
    ideal_equal,
    ideal_from_generators,
    ideal_from_lattice,
    ideal_power,
    ideal_product,
    ideal_sum,
    is_principal,
    prime_ideal,
    ramified_uniformizer,
    search_bound_factor,
    two_generators,
    unit_ideal,
)
from .lattice import det_int, hnf, short_vectors, solve_integer
from .localsnf import (
    LocalEDProfile,
    Transvection,
    _to_int_matrix,
    local_profile,
    local_unimodular_snf,
    scale_primes,
    split_quaternion_residue,
)


class NotEquivalentError(AlgebraError):
    pass


class InconclusiveError(AlgebraError):
    pass


class NoSuchMatrixError(AlgebraError):
    pass


def _check_pair(alg, M, M2):
    if len(M) != len(M2) or any(len(r) != len(M) for r in M) or any(len(r) != len(M2) for r in M2):
        raise AlgebraError("matrices must be square of the same size")
    if alg.kind == "quaternion" and len(M) < 2:
        raise AlgebraError("quaternion matrices need n >= 2")


def unimodular_equivalent(alg: Algebra, M, M2) -> bool:
    """U M V = M2 for some U, V in GL_n(Lambda), decided by local profiles."""
    _check_pair(alg, M, M2)
    return local_profile(alg, M) == local_profile(alg, M2)


def z_exponent(alg: Algebra, place: Place, inv) -> int:
    """Largest e with p^e needed to kill the local cokernel."""
    if not inv:
        return 0
    if alg.kind == "quaternion" and place.kind == "split":
        return max(max(x) for x in inv)
    w = max(inv)
    return (w + 1) // 2 if place.kind == "ramified" else w


def profile_scale(alg: Algebra, profile: LocalEDProfile) -> int:
    """m = prod p^{e_p} with m*M^{-1} integral for any M with this profile."""
    m = 1
    per = {}
    for place, inv in profile.entries:
        per[place.p] = max(per.get(place.p, 0), z_exponent(alg, place, inv))
    for p, e in per.items():
        m *= p ** e
    return m


def _vp(x, p):
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def approximate_unimodular(alg: Algebra, records, n: int, p: int, modulus: int, side: str | None = None):
    """Global product of transvections congruent to the local word.

    The result is congruent to the local word mod p^{v_p(modulus)} and to
    the identity modulo the prime-to-p part of the modulus.  Left records
    multiply from the left, right records from the right, in list order.
    """
    if n < 2 and records:
        raise AlgebraError("approximation by transvections needs n >= 2")
    e = _vp(modulus, p)
    pe = p ** e
    rest = modulus // pe
    U = mat_identity(alg, n)
    for t in records:
        targets = [(pe, t.a)]
        if rest > 1:
            targets.append((rest, alg.zero()))
        a = crt_lift(alg, targets)
        T = mat_identity(alg, n)
        T[t.i][t.j] = a
        s = side or t.side
        U = mat_mul(alg, T, U) if s == "left" else mat_mul(alg, U, T)
    return U


def invert_records(records):
    return [Transvection(t.side, t.i, t.j, tuple(-c for c in t.a) if isinstance(t.a, tuple) else -t.a) for t in reversed(records)]


def recovery_modulus(alg: Algebra, M2, n: int):
    prof = local_profile(alg, M2)
    m = profile_scale(alg, prof)
    return m, m ** (n + 1)


def recover_transform(alg: Algebra, M, M2):
    """Explicit U, V in GL_n(Lambda) with U M V = M2 (verified exactly).

    Per place the right words of both local Smith forms give V_p = R1 R2^{-1};
    the CRT approximations of all V_p multiply to V, and the remaining
    factor W = (M V) M2^{-1} is a global unit, so U = W^{-1}.
    """
    _check_pair(alg, M, M2)
    M = _to_int_matrix(alg, M)
    M2 = _to_int_matrix(alg, M2)
    n = len(M)
    if local_profile(alg, M) != local_profile(alg, M2):
        raise NotEquivalentError("local profiles differ")
    V = mat_identity(alg, n)
    if n >= 2:
        m, modulus = recovery_modulus(alg, M2, n)
        for p in sorted(scale_primes(alg, M2)):
            K = _vp(modulus, p) + 2
            for place in classify_prime(alg, p):
                s1 = local_unimodular_snf(alg, M, place, K)
                s2 = local_unimodular_snf(alg, M2, place, K)
                word = s1.right.records + invert_records(s2.right.records)
                V = mat_mul(alg, V, approximate_unimodular(alg, word, n, p, modulus, side="right"))
    Mh = mat_mul(alg, M, V)
    W = mat_mul(alg, Mh, mat_inverse(alg, M2))
    U = mat_inverse(alg, W)
    if not (mat_is_integral(W) and mat_is_integral(U)):
        raise AlgebraError("recovered factor is not a global unit")
    U = mat_to_int(U)
    V = mat_to_int(V)
    if mat_to_int(mat_mul(alg, mat_mul(alg, U, M), V)) != [list(r) for r in M2]:
        raise AlgebraError("recovered transforms fail verification")
    return U, V


def verify_transform(alg: Algebra, U, M, V, M2) -> bool:
    if not (is_unimodular(alg, U) and is_unimodular(alg, V)):
        return False
    return mat_to_int(mat_mul(alg, mat_mul(alg, U, M), V)) == mat_to_int(M2)


def is_unimodular(alg: Algebra, U) -> bool:
    if not mat_is_integral(U):
        return False
    try:
        inv = mat_inverse(alg, U)
    except AlgebraError:
        return False
    return mat_is_integral(inv)


# row modules

def row_module(alg: Algebra, rows, ncols: int):
    """HNF of the Z-span of Lambda * rows inside Lambda^ncols."""
    return tuple(hnf(regular_representation(alg, [list(r) for r in rows]), ncols * alg.dim))


def row_combination(alg: Algebra, A, B):
    """X over Lambda with X * A = B (row modules), or None."""
    R = regular_representation(alg, [list(r) for r in A])
    X = []
    for row in B:
        target = [c for x in row for c in x]
        coeffs = solve_integer(R, target)
        if coeffs is None:
            return None
        xrow = []
        for t in range(len(A)):
            c = coeffs[t * alg.dim:(t + 1) * alg.dim]
            xrow.append(tuple(c))
        X.append(xrow)
    return X


def same_row_module_witness(alg: Algebra, A, B):
    """(X, Y) with X*A = B and Y*B = A, certifying Lambda^k A = Lambda^l B."""
    X = row_combination(alg, A, B)
    Y = row_combination(alg, B, A)
    if X is None or Y is None:
        return None
    if mat_to_int(mat_mul(alg, X, A)) != mat_to_int(B) or mat_to_int(mat_mul(alg, Y, B)) != mat_to_int(A):
        raise AlgebraError("row-module witness failed verification")
    return X, Y


# profiles -> ideals

def check_profile(alg: Algebra, profile: LocalEDProfile, n: int):
    for place, inv in profile.entries:
        if place not in classify_prime(alg, place.p):
            raise AlgebraError(f"place {place.p}/{place.kind} does not exist for this order")
        if len(inv) != n:
            raise AlgebraError(f"place {place.p}: expected {n} invariants, got {len(inv)}")
        if alg.kind == "quaternion" and place.kind == "split":
            flat = []
            for pair in inv:
                if len(pair) != 2 or pair[0] > pair[1]:
                    raise AlgebraError(f"place {place.p}: pairs must satisfy eta1 <= eta2")
                flat += list(pair)
            if any(x < 0 for x in flat) or flat != sorted(flat):
                raise AlgebraError(f"place {place.p}: invariants violate the total-divisor chain")
        else:
            if any(not isinstance(x, int) or x < 0 for x in inv) or list(inv) != sorted(inv):
                raise AlgebraError(f"place {place.p}: exponents must be non-decreasing integers")


def realize_ideals(alg: Algebra, profile: LocalEDProfile, n: int):
    """Left ideals I_1..I_n whose local generators are the requested divisors.

    Returns a list of (ideal, (N, g)) with I = Lambda*N + Lambda*g.
    """
    check_profile(alg, profile, n)
    out = []
    if alg.kind == "quadratic":
        for i in range(n):
            I = unit_ideal(alg)
            for place, inv in profile.entries:
                if inv[i]:
                    I = ideal_product(I, ideal_power(prime_ideal(alg, place), inv[i]))
            out.append((I, two_generators(I)))
        return out
    for i in range(n):
        targets = []
        N = 1
        for place, inv in profile.entries:
            p = place.p
            if place.kind == "split":
                a, b = inv[i]
                if not (a or b):
                    continue
                k = b + 1
                smap = split_quaternion_residue(alg, p, k)
                g = smap.from_mat([[p ** a, 0], [0, p ** b]])
                N *= p ** b
            else:
                w = inv[i]
                if not w:
                    continue
                k = (w + 1) // 2 + 1
                pi = ramified_uniformizer(alg, p)
                g = alg.one()
                for _ in range(w):
                    g = alg.mul(g, pi)
                N *= p ** ((w + 1) // 2)
            targets.append((p ** k, g))
        g = crt_lift(alg, targets, default=alg.one())
        if not targets:
            g = alg.one()
        I = ideal_from_generators(alg, [alg.scalar(N), g])
        out.append((I, (N, g)))
    return out


def stacked_generator_matrix(alg: Algebra, realized, n: int):
    """The k x n matrix of two-element generators, placed in their columns.

    Principal rows collapse to one generator when N already lies in Lambda*g.
    """
    rows = []
    for i, (I, (N, g)) in enumerate(realized):
        if I.is_unit_ideal():
            gens = [alg.one()]
        elif ideal_equal(ideal_from_generators(alg, [alg.scalar(N)]), I):
            gens = [alg.scalar(N)]
        else:
            gens = [alg.scalar(N), g]
        for x in gens:
            row = [alg.zero()] * n
            row[i] = tuple(x)
            rows.append(row)
    return rows


@dataclass
class ExistenceResult:
    status: str  # "yes" | "no" | "inconclusive"
    witness: object = None
    detail: str = ""


def exists_with_eds(alg: Algebra, profile: LocalEDProfile, n: int, bound: int | None = None) -> ExistenceResult:
    """Decide whether some M in Inv_n(Lambda) has the given local profile."""
    if alg.kind == "quaternion" and n < 2:
        raise AlgebraError("quaternion existence needs n >= 2")
    realized = realize_ideals(alg, profile, n)
    ideals = [I for I, _ in realized]
    if alg.kind == "quadratic":
        prod_ideal = unit_ideal(alg)
        for I in ideals:
            prod_ideal = ideal_product(prod_ideal, I)
        res = is_principal(prod_ideal)
        if not res.principal:
            cls = class_group_quadratic(alg).class_of(prod_ideal)
            return ExistenceResult("no", None, f"product of divisors has class {cls}, not principal")
        M = steinitz_basis_quadratic(alg, ideals, res.generator)
        _assert_profile(alg, M, profile)
        return ExistenceResult("yes", M, "product of divisors is principal")
    M, used = free_basis_quaternion(alg, ideals, bound)
    if M is None:
        return ExistenceResult("inconclusive", None, f"free-basis search exhausted bound {used}")
    _assert_profile(alg, M, profile)
    return ExistenceResult("yes", M, f"free basis found within bound {used}")


def construct_with_eds(alg: Algebra, profile: LocalEDProfile, n: int, bound: int | None = None):
    res = exists_with_eds(alg, profile, n, bound)
    if res.status == "no":
        raise NoSuchMatrixError(res.detail)
    if res.status == "inconclusive":
        raise InconclusiveError(res.detail)
    return res.witness


def _assert_profile(alg, M, profile):
    got = local_profile(alg, M)
    if got != profile:
        raise AlgebraError(f"constructed matrix has profile {got.to_json()}, expected {profile.to_json()}")


# quadratic construction

def _fractional_mul(alg, x, I: LeftIdeal):
    return ideal_from_lattice(alg, [alg.mul(x, r) for r in I.rows])


def steinitz_basis_quadratic(alg: Algebra, ideals, generator=None):
    """Basis of I_1 + ... + I_n (one ideal per coordinate) when the product is principal.

    Pseudo-basis steps replace (C, v), (I, e) by (Lambda, a v + b e),
    (C I, c v + d e) with ad - bc = 1.
    """
    n = len(ideals)
    if generator is None:
        prod_ideal = unit_ideal(alg)
        for I in ideals:
            prod_ideal = ideal_product(prod_ideal, I)
        res = is_principal(prod_ideal)
        if not res.principal:
            raise NoSuchMatrixError("product of ideals is not principal")
        generator = res.generator
    vecs = [[alg.scalar(Fraction(int(i == j))) for j in range(n)] for i in range(n)]
    rows = []
    C = ideals[0]
    v = vecs[0]
    for k in range(1, n):
        I, e = ideals[k], vecs[k]
        a, b, c, d = _steinitz_coefficients(alg, C, I)
        f1 = [alg.add(alg.mul(a, x), alg.mul(b, y)) for x, y in zip(v, e)]
        f2 = [alg.add(alg.mul(c, x), alg.mul(d, y)) for x, y in zip(v, e)]
        rows.append(f1)
        C = ideal_product(C, I)
        v = f2
    rows.append([alg.mul(generator, x) for x in v])
    if not mat_is_integral(rows):
        raise AlgebraError("Steinitz basis is not integral")
    M = mat_to_int(rows)
    target = row_module(alg, [[I.rows[0] if j == i else alg.zero() for j in range(n)] for i, I in enumerate(ideals)]
                        + [[I.rows[1] if j == i else alg.zero() for j in range(n)] for i, I in enumerate(ideals)], n)
    if row_module(alg, M, n) != target:
        raise AlgebraError("Steinitz basis does not span the module")
    return M


def _steinitz_coefficients(alg, C: LeftIdeal, I: LeftIdeal):
    """a in C, b in I, c in I^{-1}, d in C^{-1} with ad - bc = 1."""
    a = min(C.rows, key=lambda r: alg.norm(r))
    A = ideal_divide(_fractional_mul(alg, a, ideal_conj(C)), C.norm)
    for val, vec in short_vectors(gram_on_ideal(I), 4 * I.norm * max(1, A.norm) ** 2 + 64):
        b = element_of(I, vec)
        B = ideal_divide(_fractional_mul(alg, b, ideal_conj(I)), I.norm)
        if ideal_sum(A, B).is_unit_ideal():
            break
    else:
        raise AlgebraError("no coprime element found")
    coeffs = solve_integer(list(A.rows) + list(B.rows), [1, 0])
    alpha = tuple(sum(coeffs[t] * A.rows[t][k] for t in range(len(A.rows))) for k in range(alg.dim))
    beta = alg.sub(alg.one(), alpha)
    d = alg.mul(alpha, alg.inverse(a))
    c = alg.neg(alg.mul(beta, alg.inverse(b)))
    return a, b, c, d


# quaternion construction

def _pair_gram(alg, I: LeftIdeal, J: LeftIdeal):
    GI, GJ = gram_on_ideal(I), gram_on_ideal(J)
    n = alg.dim
    G = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
    for a in range(n):
        for b in range(n):
            G[a][b] = Fraction(GI[a][b]) / I.norm
            G[n + a][n + b] = Fraction(GJ[a][b]) / J.norm
    return G


def _complete_columns(A):
    """Column-reduce the integer matrix A (r x c) to [D | 0].

    Returns (D, Vinv) where A V = [D | 0] for a unimodular V whose inverse is
    Vinv; rows r.. of Vinv span a complement of the row span when |det D| = 1.
    """
    r, c = len(A), len(A[0])
    A = [list(row) for row in A]
    Vinv = [[int(i == j) for j in range(c)] for i in range(c)]
    for i in range(r):
        while True:
            nz = [j for j in range(i, c) if A[i][j]]
            if not nz:
                break
            piv = min(nz, key=lambda j: abs(A[i][j]))
            if piv != i:
                for row in A:
                    row[i], row[piv] = row[piv], row[i]
                Vinv[i], Vinv[piv] = Vinv[piv], Vinv[i]
            done = True
            for j in range(i + 1, c):
                q = A[i][j] // A[i][i]
                if q:
                    for row in A:
                        row[j] -= q * row[i]
                    Vinv[i] = [x + q * y for x, y in zip(Vinv[i], Vinv[j])]
                if A[i][j]:
                    done = False
            if done:
                break
    D = [row[:r] for row in A]
    return D, Vinv


def _pair_nrd(alg, a, b, c, d):
    """Reduced norm of the quaternion matrix [[a, b], [c, d]]."""
    return (alg.norm(a) * alg.norm(d) + alg.norm(b) * alg.norm(c)
            - alg.trace(alg.mul(alg.mul(alg.conj(a), b), alg.mul(alg.conj(d), c))))


def solve_pair(alg: Algebra, I: LeftIdeal, J: LeftIdeal, bound: int):
    """2 x 2 matrix B with Lambda^2 B = I + J (direct sum), or None.

    First rows r1 = (x, y) run over short vectors with N(x) <= bound*nrd(I)
    and N(y) <= bound*nrd(J).  For each r1 the reduced norm is a quadratic
    form in the second row whose radical is Lambda*r1, so all completions
    are found by an exact enumeration on a complement of Lambda*r1.
    """
    n = alg.dim
    target = I.index * J.index
    want = I.norm * J.norm
    basis = [tuple(r) + (0,) * n for r in I.rows] + [(0,) * n + tuple(r) for r in J.rows]

    def split(v):
        return tuple(v[:n]), tuple(v[n:])

    for val, vec in short_vectors(_pair_gram(alg, I, J), 2 * bound):
        x = element_of(I, vec[:n])
        y = element_of(J, vec[n:])
        if alg.norm(x) > bound * I.norm or alg.norm(y) > bound * J.norm:
            continue
        # coordinates of Lambda*r1 in the lattice basis
        A = []
        for s in range(n):
            g = alg.gen(s)
            row = tuple(alg.mul(g, x)) + tuple(alg.mul(g, y))
            coords = solve_integer(basis, row)
            A.append(coords)
        D, Vinv = _complete_columns(A)
        if abs(det_int(D)) != 1:
            continue
        comp = [tuple(sum(Vinv[k][t] * basis[t][c] for t in range(2 * n)) for c in range(2 * n)) for k in range(n, 2 * n)]
        G = [[Fraction(0)] * n for _ in range(n)]
        qs = [_pair_nrd(alg, x, y, *split(u)) for u in comp]
        for i in range(n):
            G[i][i] = Fraction(qs[i])
            for j in range(i + 1, n):
                w = tuple(a + b for a, b in zip(comp[i], comp[j]))
                G[i][j] = G[j][i] = Fraction(_pair_nrd(alg, x, y, *split(w)) - qs[i] - qs[j], 2)
        try:
            sols = [v for v2, v in short_vectors(G, want) if v2 == want]
        except ValueError:
            continue
        for z in sols:
            r2 = tuple(sum(z[k] * comp[k][c] for k in range(n)) for c in range(2 * n))
            B = [[x, y], list(split(r2))]
            if abs(det_int(regular_representation(alg, B))) == target:
                return B
    return None


def free_basis_quaternion(alg: Algebra, ideals, bound: int | None = None):
    """Basis matrix of I_1 + ... + I_n (n >= 2) or (None, bound) if the search fails."""
    n = len(ideals)
    factor = bound if bound is not None else search_bound_factor()
    gens = []
    for I in ideals:
        res = is_principal(I)
        gens.append(res.generator if res.principal else None)
    one = unit_ideal(alg)
    rows = [[alg.zero()] * n for _ in range(n)]
    if all(g is not None for g in gens):
        for i, g in enumerate(gens):
            rows[i][i] = g
        return rows, factor
    carry = None  # (row vector, attached ideal, its generator if principal)
    for i in range(n):
        e_i = [alg.zero()] * n
        e_i[i] = alg.one()
        if carry is None:
            carry = (e_i, ideals[i], gens[i])
            continue
        vec, C, gC = carry
        B = _solve_pair_scaled(alg, C, gC, ideals[i], gens[i], factor)
        if B is None:
            return None, factor
        r1 = [alg.add(alg.mul(B[0][0], x), alg.mul(B[0][1], y)) for x, y in zip(vec, e_i)]
        r2 = [alg.add(alg.mul(B[1][0], x), alg.mul(B[1][1], y)) for x, y in zip(vec, e_i)]
        rows[i - 1] = r1
        carry = (r2, one, alg.one())
    rows[n - 1] = carry[0]
    return mat_to_int(rows), factor


def _solve_pair_scaled(alg, C, gC, I, gI, factor):
    """B with Lambda^2 B = C + I, scaling columns by generators of principal factors."""
    one = unit_ideal(alg)
    if gC is not None and gI is not None:
        return [[gC, alg.zero()], [alg.zero(), gI]]
    left = one if gC is not None else C
    right = one if gI is not None else I
    B = solve_pair(alg, left, right, factor)
    if B is None:
        return None
    sc = [gC if gC is not None else alg.one(), gI if gI is not None else alg.one()]
    return [[alg.mul(B[r][c], sc[c]) for c in range(2)] for r in range(2)]


# obstructions and diagonal forms

@dataclass
class IsolationReport:
    p: int
    profile: LocalEDProfile
    status: str
    detail: str

    def to_json(self):
        return {"p": self.p, "profile": self.profile.to_json(), "status": self.status, "detail": self.detail}


def primary_decomposition_obstruction(alg: Algebra, M) -> list:
    """Per prime of the profile: does a matrix with only that prime's data exist?"""
    n = len(M)
    prof = local_profile(alg, M)
    out = []
    for p in prof.primes():
        iso = LocalEDProfile.from_dict({pl: inv for pl, inv in prof.entries if pl.p == p})
        res = exists_with_eds(alg, iso, n)
        out.append(IsolationReport(p, iso, res.status, res.detail))
    return out


def diagonal_equivalent(alg: Algebra, M):
    """Is M unimodular-equivalent to a diagonal matrix?  Returns (answer, diagonal).

    Quadratic orders: a diagonal form diag(a_1..a_n) must distribute each
    place's exponents to the entries; the search runs over all such
    distributions and asks that each resulting ideal be principal.
    """
    if alg.kind != "quadratic":
        raise AlgebraError("diagonal-form search is implemented for quadratic orders")
    n = len(M)
    prof = local_profile(alg, M)
    places = list(prof.entries)
    choices = [sorted(set(permutations(inv))) for _, inv in places]
    primes_cache = {pl: prime_ideal(alg, pl) for pl, _ in places}
    for combo in product(*choices):
        entries = []
        for i in range(n):
            I = unit_ideal(alg)
            for (pl, _), perm in zip(places, combo):
                if perm[i]:
                    I = ideal_product(I, ideal_power(primes_cache[pl], perm[i]))
            res = is_principal(I)
            if not res.principal:
                break
            entries.append(res.generator)
        else:
            D = [[entries[i] if i == j else alg.zero() for j in range(n)] for i in range(n)]
            return True, D
    return False, None
