"""Symplectic similitudes M* J M = m J over the order: modular elementary
divisors, equivalence, transform recovery, the block-diagonal
correspondence, modular existence, pair predicates and right cosets."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

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
    mat_star,
    mat_to_int,
    regular_representation,
)
from .localsnf import (
    INF,
    LocalEDProfile,
    OrderResidueRing,
    Transvection,
    ZpRing,
    _to_int_matrix,
    eliminate,
    expand_split_quaternion,
    frac_mod,
    local_unimodular_snf,
    split_quadratic_map,
    split_quaternion_residue,
    vp,
)
from .unimodular import (
    NotEquivalentError,
    _complete_columns,
    exists_with_eds,
)
from .lattice import det_int


# the form and its generators

def J_matrix(alg: Algebra, n: int):
    J = [[alg.zero() for _ in range(2 * n)] for _ in range(2 * n)]
    for i in range(n):
        J[i][n + i] = alg.one()
        J[n + i][i] = alg.scalar(-1)
    return J


def is_similitude(alg: Algebra, M):
    """The multiplier m if M* J M = m J for a nonzero integer m, else None."""
    N = len(M)
    if N % 2 or any(len(r) != N for r in M):
        return None
    n = N // 2
    J = J_matrix(alg, n)
    P = mat_mul(alg, mat_mul(alg, mat_star(alg, M), J), M)
    mval = P[0][n]
    if not alg.is_scalar(mval) or mval[0] == 0 or Fraction(mval[0]).denominator != 1:
        return None
    m = int(mval[0])
    for i in range(N):
        for j in range(N):
            want = J[i][j]
            if tuple(P[i][j]) != tuple(m * c for c in want):
                return None
    return m


@dataclass(frozen=True)
class SpGen:
    """An elementary symplectic generator.

    kind psi: diag(I + a E_ij, I - iota(a) E_ji), i != j.
    kind up: I + a E_{i,n+j} + iota(a) E_{j,n+i}; for i = j, I + a E_{i,n+i} with a scalar.
    kind low: I + a E_{n+i,j} + iota(a) E_{n+j,i}; for i = j, I + a E_{n+i,i} with a scalar.
    """

    kind: str
    i: int
    j: int
    a: tuple


def sp_matrix(alg: Algebra, n: int, g: SpGen):
    X = mat_identity(alg, 2 * n)
    i, j, a = g.i, g.j, tuple(g.a)
    ia = alg.conj(a)
    if g.kind == "psi":
        if i == j:
            raise AlgebraError("psi generator needs i != j")
        X[i][j] = a
        X[n + j][n + i] = alg.neg(ia)
    elif g.kind == "up":
        if i == j:
            if not alg.is_scalar(a):
                raise AlgebraError("diagonal up generator needs a scalar")
            X[i][n + i] = a
        else:
            X[i][n + j] = a
            X[j][n + i] = ia
    elif g.kind == "low":
        if i == j:
            if not alg.is_scalar(a):
                raise AlgebraError("diagonal low generator needs a scalar")
            X[n + i][i] = a
        else:
            X[n + i][j] = a
            X[n + j][i] = ia
    else:
        raise AlgebraError(f"unknown generator kind {g.kind}")
    return X


def _neg_gen(alg, g: SpGen) -> SpGen:
    return SpGen(g.kind, g.i, g.j, alg.neg(tuple(g.a)))


def invert_word(alg, word):
    return [_neg_gen(alg, g) for g in reversed(word)]


def word_matrix(alg: Algebra, n: int, word, reduce_mod: int | None = None):
    """Product G_t ... G_1 for a left word applied in list order."""
    U = mat_identity(alg, 2 * n)
    for g in word:
        U = mat_mul(alg, sp_matrix(alg, n, g), U)
        if reduce_mod:
            U = [[tuple(frac_mod(c, reduce_mod) for c in x) for x in row] for row in U]
    return U


def _apply_left(ring, A, G):
    """A <- G A for a sparse generator G given as (identity + entries)."""
    n2 = len(A)
    rows = {}
    for r in range(n2):
        for c in range(n2):
            x = G[r][c]
            if r != c and ring.val(x) != INF:
                rows.setdefault(r, []).append((c, x))
    new = [list(row) for row in A]
    for r, terms in rows.items():
        for c, x in terms:
            new[r] = [ring.add(u, ring.mul(x, w)) for u, w in zip(new[r], A[c])]
    return new


def _apply_right(ring, A, G):
    n2 = len(A)
    cols = {}
    for r in range(n2):
        for c in range(n2):
            x = G[r][c]
            if r != c and ring.val(x) != INF:
                cols.setdefault(c, []).append((r, x))
    new = [list(row) for row in A]
    for c, terms in cols.items():
        for r, x in terms:
            for k in range(n2):
                new[k][c] = ring.add(new[k][c], ring.mul(A[k][r], x))
    return new


# profiles

@dataclass(frozen=True)
class ModularEDProfile:
    """Multiplier plus first-n invariants per place (conjugate split places explicit)."""

    m: int
    profile: LocalEDProfile

    def to_json(self):
        return {"m": self.m, "places": self.profile.to_json()}

    @classmethod
    def from_json(cls, data) -> "ModularEDProfile":
        return cls(int(data["m"]), LocalEDProfile.from_json(data["places"]))


def _place_val_of_m(alg, place: Place, m: int) -> int:
    v = vp(abs(m), place.p)
    if place.kind == "ramified":
        return 2 * v
    return v


def _gl_exponents(alg, M, place, k=None):
    """Sorted GL exponents at a place (Z-level exponents at split quaternion places)."""
    snf = local_unimodular_snf(alg, M, place, k)
    inv = snf.invariants
    if alg.kind == "quaternion" and place.kind == "split":
        return sorted(x for pair in inv for x in pair), snf
    return sorted(inv), snf


def modular_local_eds(alg: Algebra, M, place: Place):
    """First-n modular invariants of a similitude at one place."""
    M = _to_int_matrix(alg, M)
    m = is_similitude(alg, M)
    if m is None:
        raise AlgebraError("matrix is not a similitude")
    N = len(M)
    n = N // 2
    if alg.kind == "quaternion" and n < 2:
        raise AlgebraError("quaternion modular invariants need n >= 2")
    v = _place_val_of_m(alg, place, m)
    K = 2 * v + 4 if alg.kind == "quaternion" and place.kind == "split" else v + 3
    s, snf = _gl_exponents(alg, M, place, K)
    L = len(s)
    # at quadratic split places the duality pairs P with its conjugate (checked below)
    if not (alg.kind == "quadratic" and place.split):
        for i in range(L):
            if s[i] + s[L - 1 - i] != v:
                raise AlgebraError("symplectic exponent relation violated")
    lower = s[: L // 2]
    if alg.kind == "quaternion" and place.kind == "split":
        par = split_parity(alg, M, place.p, v)
        pairs = [[lower[2 * i], lower[2 * i + 1]] for i in range(n)]
        if par:
            pairs[-1][1] = v - pairs[-1][1]
        out = tuple(tuple(x) for x in pairs)
    else:
        out = tuple(lower)
    if alg.kind == "quadratic" and place.split:
        other = Place(place.p, "split-second" if place.kind == "split-first" else "split-first")
        s2, _ = _gl_exponents(alg, M, other, K)
        if tuple(s2[:n]) != tuple(sorted(v - x for x in s[n:])):
            raise AlgebraError("conjugate split places disagree with the duality rule")
    return out


def split_parity(alg: Algebra, M, p: int, v: int) -> int:
    """Family of the Lagrangian attached to a split quaternion similitude lattice.

    Y = p^{-floor(v/2)} L meet Z_p^{4n}, reduced mod p, is Lagrangian when no
    exponent equals v/2; the bit is its family relative to the top block.
    Returns 0 when some exponent is v/2.
    """
    N = len(M)
    K = v + 3
    smap = split_quaternion_residue(alg, p, K)
    A = expand_split_quaternion(smap, M)
    ring = ZpRing(p, K)
    el = eliminate(ring, A)
    c = v // 2
    if v % 2 == 0 and any(e == c for e in el.exponents):
        return 0
    size = len(A)
    Lmat = [[int(i == j) for j in range(size)] for i in range(size)]
    from .localsnf import apply_records

    Lmat = apply_records(ring, Lmat, el.left)
    Linv = _inv_mod_p([[x % p for x in row] for row in Lmat], p)
    cols = [i for i, e in enumerate(el.exponents) if e <= c]
    bottom_rows = list(range(size // 2, size))
    B = [[Linv[r][ci] % p for ci in cols] for r in bottom_rows]
    return _rank_mod_p(B, p) % 2


def _inv_mod_p(M, p):
    n = len(M)
    A = [[x % p for x in row] + [int(i == j) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        piv = next(r for r in range(c, n) if A[r][c] % p)
        A[c], A[piv] = A[piv], A[c]
        inv = pow(A[c][c], -1, p)
        A[c] = [x * inv % p for x in A[c]]
        for r in range(n):
            if r != c and A[r][c]:
                f = A[r][c]
                A[r] = [(x - f * y) % p for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


def _rank_mod_p(B, p):
    A = [list(r) for r in B]
    rank = 0
    rows = len(A)
    cols = len(A[0]) if A else 0
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if A[r][c] % p), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][c], -1, p)
        for r in range(rows):
            if r != rank and A[r][c] % p:
                f = A[r][c] * inv
                A[r] = [(x - f * y) % p for x, y in zip(A[r], A[rank])]
        rank += 1
    return rank


def modular_profile(alg: Algebra, M) -> ModularEDProfile:
    M = _to_int_matrix(alg, M)
    m = is_similitude(alg, M)
    if m is None:
        raise AlgebraError("matrix is not a similitude")
    d = {}
    from sympy import factorint

    for p in sorted(factorint(abs(m))):
        for place in classify_prime(alg, p):
            d[place] = modular_local_eds(alg, M, place)
    return ModularEDProfile(abs(m), LocalEDProfile.from_dict(d))


def modular_equivalent(alg: Algebra, M, M2) -> bool:
    """U M V = M2 with U, V in Sp_n(Lambda), up to the unit similitude of multiplier -1."""
    if len(M) != len(M2):
        raise AlgebraError("dimension mismatch")
    m1, m2 = is_similitude(alg, M), is_similitude(alg, M2)
    if m1 is None or m2 is None:
        raise AlgebraError("inputs must be similitudes")
    if abs(m1) != abs(m2):
        raise AlgebraError("multipliers differ beyond a unit")
    return modular_profile(alg, M) == modular_profile(alg, M2)


def neg_unit(alg: Algebra, n: int):
    """diag(I, -I), a similitude with multiplier -1."""
    X = mat_identity(alg, 2 * n)
    for i in range(n, 2 * n):
        X[i][i] = alg.scalar(-1)
    return X


# block-diagonal correspondence

def correspondence_inverse(alg: Algebra, N, m: int):
    """diag(N, m (N*)^{-1}); raises unless nu_p(N(e_n)) <= nu_p(m) at every place."""
    n = len(N)
    bad = side_condition_failures(alg, N, m)
    if bad:
        raise AlgebraError("side condition nu_p(N(e_n)) <= nu_p(m) fails at " + ", ".join(bad))
    Ninv = mat_inverse(alg, mat_star(alg, N))
    low = [[alg.mul(alg.scalar(m), x) for x in row] for row in Ninv]
    if not mat_is_integral(low):
        raise AlgebraError("m (N*)^{-1} is not integral: the top exponent exceeds nu(m)")
    out = []
    for i in range(n):
        out.append([tuple(x) for x in N[i]] + [alg.zero() for _ in range(n)])
    for i in range(n):
        out.append([alg.zero() for _ in range(n)] + [tuple(int(c) for c in x) for x in low[i]])
    return out


def _norm_val_top(alg, place, inv, profile=None):
    """nu_p of the norm of the last local elementary divisor."""
    if alg.kind == "quaternion":
        if place.kind == "split":
            return inv[-1][0] + inv[-1][1]
        return inv[-1]
    if place.kind == "inert":
        return 2 * inv[-1]
    if place.kind == "ramified":
        return inv[-1]
    return inv[-1]


def side_condition_failures(alg: Algebra, N, m: int):
    from .localsnf import local_profile

    prof = local_profile(alg, N)
    n = len(N)
    tops = {}
    for place, inv in prof.entries:
        tops.setdefault(place.p, 0)
        tops[place.p] += _norm_val_top(alg, place, inv)
    return [str(p) for p, t in sorted(tops.items()) if t > vp(abs(m), p)]


def upper_block(M):
    n = len(M) // 2
    return [row[:n] for row in M[:n]]


# local symplectic words (left words carrying the column lattice to a canonical one)

def _red_gen_matrix(ring, G):
    if isinstance(ring, ZpRing):
        return [[frac_mod(x, ring.mod) for x in row] for row in G]
    return [[tuple(frac_mod(c, ring.mod) for c in x) for x in row] for row in G]


class _Worker:
    """Applies generators to a working matrix and records the left word."""

    def __init__(self, alg, n, ring, A, expand=None):
        self.alg, self.n, self.ring, self.A = alg, n, ring, A
        self.expand = expand
        self.word = []

    def _mat(self, g):
        G = sp_matrix(self.alg, self.n, g)
        if self.expand is not None:
            return self.expand(G)
        return _red_gen_matrix(self.ring, G)

    def left(self, gens):
        """gens in matrix-product order (leftmost first)."""
        for g in reversed(gens):
            self.A = _apply_left(self.ring, self.A, self._mat(g))
            self.word.append(g)

    def right(self, gens):
        for g in gens:
            self.A = _apply_right(self.ring, self.A, self._mat(g))


def _scalar_part(alg, ring, x):
    return alg.scalar(frac_mod(x[0], ring.mod))


def nonsplit_symplectic_word(alg: Algebra, M, place: Place, K: int):
    """Symplectic elimination at a place where the completion is a DVR.

    Returns (left word, exponents); the exponents are nondecreasing and the
    word maps the column lattice of M onto the lattice of
    diag(pi^{e_1}, ..., pi^{e_n}, m pi^{-e_1}, ...).
    """
    n = len(M) // 2
    ring = OrderResidueRing(alg, place.p, K, ramified=(place.kind == "ramified"))
    W = _Worker(alg, n, ring, [[ring._red(x) for x in row] for row in M])
    one = alg.one()
    mone = alg.scalar(-1)

    def jswap(i):
        return [SpGen("up", i, i, one), SpGen("low", i, i, mone), SpGen("up", i, i, one)]

    exps = []
    for k in range(n):
        idx = list(range(k, n)) + list(range(n + k, 2 * n))
        best = None
        for r in idx:
            for c in idx:
                v = ring.val(W.A[r][c])
                if best is None or v < best[0]:
                    best = (v, r, c)
        _, r, c = best
        if r >= n:
            W.left(jswap(r - n))
            r -= n
        if r != k:
            W.left([SpGen("psi", r, k, one), SpGen("psi", k, r, mone), SpGen("psi", r, k, one)])
        if c >= n:
            W.right(jswap(c - n))
            c -= n
        if c != k:
            W.right([SpGen("psi", c, k, one), SpGen("psi", k, c, mone), SpGen("psi", c, k, one)])
        d = W.A[k][k]
        exps.append(ring.val(d))
        for i in range(k + 1, n):
            x = W.A[i][k]
            if ring.val(x) < K:
                W.left([SpGen("psi", i, k, ring.neg(ring.left_quot(x, d)))])
        for i in range(k + 1, n):
            x = W.A[n + i][k]
            if ring.val(x) < K:
                W.left([SpGen("low", i, k, ring.neg(ring.left_quot(x, d)))])
        x = W.A[n + k][k]
        if ring.val(x) < K:
            s = _scalar_part(alg, ring, ring.left_quot(x, d))
            W.left([SpGen("low", k, k, ring.neg(s))])
        for j in range(k + 1, n):
            y = W.A[k][j]
            if ring.val(y) < K:
                W.right([SpGen("psi", k, j, ring.neg(ring.right_quot(y, d)))])
        for j in range(k + 1, n):
            y = W.A[k][n + j]
            if ring.val(y) < K:
                W.right([SpGen("up", k, j, ring.neg(ring.right_quot(y, d)))])
        y = W.A[k][n + k]
        if ring.val(y) < K:
            s = _scalar_part(alg, ring, ring.right_quot(y, d))
            W.right([SpGen("up", k, k, ring.neg(s))])
    return W.word, tuple(exps), W.A


def split_quadratic_symplectic_word(alg: Algebra, M, p: int, K: int):
    """GL_{2n} elimination of the first split component, lifted to generators.

    Each Z-level transvection (i, j, t) becomes a generator whose first
    component is exactly that transvection.
    """
    n = len(M) // 2
    smap = split_quadratic_map(alg, p, K)
    ring = ZpRing(p, K)
    local = [[smap.phi(x, 1) for x in row] for row in M]
    el = eliminate(ring, local)
    word = []
    for t in el.left:
        i, j, a = t.i, t.j, t.a % ring.mod
        if i < n and j < n:
            word.append(SpGen("psi", i, j, smap.lift(a, 0)))
        elif i >= n and j >= n:
            word.append(SpGen("psi", j - n, i - n, smap.lift(0, -a % ring.mod)))
        elif i < n:
            jj = j - n
            word.append(SpGen("up", i, jj, alg.scalar(a) if jj == i else smap.lift(a, 0)))
        else:
            ii = i - n
            word.append(SpGen("low", ii, j, alg.scalar(a) if ii == j else smap.lift(a, 0)))
    return word, tuple(el.exponents), smap


def _zdual(z, n):
    b, a = divmod(z, 2)
    return 2 * ((b + n) % (2 * n)) + (1 - a)


def _root_gens(smap, n, r, s, t):
    """Generators (matrix-product order) whose Z-level action is
    row r += t row s together with the forced change on the dual rows."""
    alg = smap.alg
    mod = smap.mod
    br, ar = divmod(r, 2)
    bs, as_ = divmod(s, 2)
    E = smap.unit_matrix
    t %= mod

    def comm(kind, i, alpha, beta, x):
        # psi(e_ii(x E_ab)) as a commutator through a helper index
        u = 0 if i != 0 else 1
        X = SpGen(kind, i, u, E(alpha, 0, x))
        Y = SpGen(kind, u, i, E(0, beta, 1))
        Xi = SpGen(kind, i, u, E(alpha, 0, -x))
        Yi = SpGen(kind, u, i, E(0, beta, -1))
        return [X, Y, Xi, Yi]

    if br < n and bs < n:
        if br != bs:
            return [SpGen("psi", br, bs, E(ar, as_, t))]
        return comm("psi", br, ar, as_, t)
    if br >= n and bs >= n:
        i, j = br - n, bs - n
        if i != j:
            return [SpGen("psi", j, i, alg.conj(E(ar, as_, -t)))]
        return comm("psi", i, ar, as_, t)
    if br < n:
        i, j = br, bs - n
        if i != j:
            return [SpGen("up", i, j, E(ar, as_, t))]
        if ar != as_:
            raise AlgebraError("no root element adds a row to its dual")
        return [SpGen("up", i, i, alg.scalar(t))]
    i, j = br - n, bs
    if i != j:
        return [SpGen("low", i, j, E(ar, as_, t))]
    if ar != as_:
        raise AlgebraError("no root element adds a row to its dual")
    return [SpGen("low", i, i, alg.scalar(t))]


def split_quaternion_symplectic_word(alg: Algebra, M, p: int, v: int, K: int):
    """Orthogonal elimination at a split quaternion place using only
    images of symplectic generators on the left.

    Returns (left word, canonical exponents per Z position, smap).  The
    canonical lattice has sorted lower exponents in the top positions, with
    the last pair flipped when the Lagrangian parity is odd.
    """
    n = len(M) // 2
    smap = split_quaternion_residue(alg, p, K)
    ring = ZpRing(p, K)
    size = 4 * n

    def expand(G):
        out = [[0] * size for _ in range(size)]
        for bi in range(2 * n):
            for bj in range(2 * n):
                x = G[bi][bj]
                if not any(x):
                    continue
                if bi == bj and tuple(x) == tuple(alg.one()):
                    out[2 * bi][2 * bj] = 1
                    out[2 * bi + 1][2 * bj + 1] = 1
                    continue
                X = smap.to_mat(x)
                for a in range(2):
                    for b in range(2):
                        out[2 * bi + a][2 * bj + b] = X[a][b]
        return out

    W = _Worker(alg, n, ring, expand_split_quaternion(smap, M), expand)
    T = [z for z in range(2 * n)]  # top Z positions: blocks 0..n-1
    dual = lambda z: _zdual(z, n)

    def root(r, s, t):
        return _root_gens(smap, n, r, s, t)

    def row_swap(a, b):
        W.left(root(a, b, 1))
        W.left(root(b, a, -1))
        W.left(root(a, b, 1))

    def col_swap(c, k):
        W.right(root(c, k, 1))
        W.right(root(k, c, -1))
        W.right(root(c, k, 1))

    for k in range(2 * n):
        t = T[k]
        td = dual(t)
        rem = T[k:] + [dual(x) for x in T[k:]]
        best = None
        for r in rem:
            for c in rem:
                vv = ring.val(W.A[r][c])
                if best is None or vv < best[0]:
                    best = (vv, r, c)
        _, r, c = best
        if k == 2 * n - 1:
            break
        if r == td:
            row_swap(r, T[k + 1])
            r = T[k + 1]
        if r != t:
            row_swap(r, t)
        if c == td:
            col_swap(c, T[k + 1])
            c = T[k + 1]
        if c != t:
            col_swap(c, t)
        d = W.A[t][t]
        for r2 in rem:
            if r2 in (t, td):
                continue
            x = W.A[r2][t]
            if ring.val(x) < K:
                W.left(root(r2, t, -ring.left_quot(x, d) % ring.mod))
        for c2 in rem:
            if c2 in (t, td):
                continue
            y = W.A[t][c2]
            if ring.val(y) < K:
                W.right(root(t, c2, -ring.left_quot(y, d) % ring.mod))
    e = [min(ring.val(x) for x in W.A[T[k]]) for k in range(2 * n)]
    for k in range(2 * n):
        ed = min(ring.val(x) for x in W.A[dual(T[k])])
        if e[k] + ed != v:
            raise AlgebraError("split quaternion elimination lost precision")
    # canonical arrangement: double flips, then sort pairs
    low = [min(x, v - x) for x in e]
    flipped = [2 * x > v for x in e]
    F = [k for k in range(2 * n) if flipped[k]]
    balanced = [k for k in range(2 * n) if 2 * e[k] == v]
    odd_pair = None
    if len(F) % 2:
        if balanced:
            F.append(balanced[0])
        else:
            odd_pair = max(range(2 * n), key=lambda k: (low[k], k))
            F = sorted(set(F) ^ {odd_pair})
    for a, b in zip(F[0::2], F[1::2]):
        row_swap(T[a], dual(T[b]))
        row_swap(T[a], T[b])
        e[a], e[b] = v - e[a], v - e[b]
    key = [(low[k], k == odd_pair) for k in range(2 * n)]
    order = list(range(2 * n))
    for pos in range(2 * n):
        kmin = min(range(pos, 2 * n), key=lambda q: key[order[q]])
        if kmin != pos:
            row_swap(T[pos], T[kmin])
            order[pos], order[kmin] = order[kmin], order[pos]
            e[pos], e[kmin] = e[kmin], e[pos]
    return W.word, tuple(e), smap


def _local_canonical_word(alg, M, place: Place, m: int, K: int):
    """(left word, canonical signature) at one place; only split-first is used
    for split quadratic primes."""
    v = _place_val_of_m(alg, place, m)
    if alg.kind == "quaternion" and place.kind == "split":
        word, sig, _ = split_quaternion_symplectic_word(alg, M, place.p, v, K)
        return word, sig
    if alg.kind == "quadratic" and place.split:
        word, sig, _ = split_quadratic_symplectic_word(alg, M, place.p, K)
        return word, sig
    word, sig, _ = nonsplit_symplectic_word(alg, M, place, K)
    return word, sig


def approximate_symplectic(alg: Algebra, word, n: int, p: int, modulus: int):
    """Global product of generators congruent to the local word mod p^{v_p(modulus)}
    and to the identity modulo the prime-to-p part of the modulus."""
    e = vp(modulus, p)
    pe = p ** e
    rest = modulus // pe
    U = mat_identity(alg, 2 * n)
    for g in word:
        targets = [(pe, g.a)]
        if rest > 1:
            targets.append((rest, alg.zero()))
        a = crt_lift(alg, targets)
        U = mat_mul(alg, sp_matrix(alg, n, SpGen(g.kind, g.i, g.j, a)), U)
    return U


def symplectic_inverse(alg: Algebra, U, m: int = 1):
    """U^{-1} = m^{-1} J^{-1} U* J for a similitude with multiplier m."""
    n = len(U) // 2
    J = J_matrix(alg, n)
    Jinv = [[alg.neg(x) for x in row] for row in J]
    X = mat_mul(alg, mat_mul(alg, Jinv, mat_star(alg, U)), J)
    if m != 1:
        X = [[tuple(Fraction(c, m) for c in x) for x in row] for row in X]
    return X


def recovery_modulus_modular(m: int) -> int:
    from sympy import factorint

    out = 1
    for p, e in factorint(abs(m)).items():
        out *= p ** (e + 1)
    return out


def recover_modular_transform(alg: Algebra, M, M2):
    """(U, V) with U M V = M2, U in Sp_n(Lambda); V is symplectic, or has
    multiplier -1 when the multipliers of M and M2 differ in sign."""
    M = _to_int_matrix(alg, M)
    M2 = _to_int_matrix(alg, M2)
    m1, m2 = is_similitude(alg, M), is_similitude(alg, M2)
    if m1 is None or m2 is None:
        raise AlgebraError("inputs must be similitudes")
    if abs(m1) != abs(m2):
        raise NotEquivalentError("multipliers differ beyond a unit")
    n = len(M) // 2
    flip = m1 != m2
    target = mat_mul(alg, M2, neg_unit(alg, n)) if flip else M2
    if modular_profile(alg, M) != modular_profile(alg, target):
        raise NotEquivalentError("modular elementary divisors differ")
    m = m1
    modulus = recovery_modulus_modular(m)
    U = mat_identity(alg, 2 * n)
    from sympy import factorint

    for p in sorted(factorint(abs(m))):
        e = vp(modulus, p)
        for place in classify_prime(alg, p):
            if place.kind == "split-second":
                continue
            v = _place_val_of_m(alg, place, m)
            K = 3 * v + e + 6
            w1, s1 = _local_canonical_word(alg, M, place, m, K)
            w2, s2 = _local_canonical_word(alg, target, place, m, K)
            if s1 != s2:
                raise NotEquivalentError(f"local canonical forms differ at {place.p}")
            word = w1 + invert_word(alg, w2)
            U = mat_mul(alg, approximate_symplectic(alg, word, n, p, modulus), U)
    Ui = symplectic_inverse(alg, U)
    Minv = symplectic_inverse(alg, M, m)
    V = mat_mul(alg, Minv, mat_mul(alg, Ui, target))
    if not mat_is_integral(V):
        raise AlgebraError("recovered V is not integral")
    V = mat_to_int(V)
    if flip:
        V = mat_mul(alg, V, neg_unit(alg, n))
    if mat_mul(alg, mat_mul(alg, U, M), V) != [[tuple(x) for x in row] for row in M2]:
        raise AlgebraError("recovered transform failed verification")
    return U, V


# normalization, correspondence, existence

def normalize_block_diagonal(alg: Algebra, M, bound: int | None = None):
    """N with the first-n modular profile of M, so that M ~ diag(N, m (N*)^{-1})."""
    from .unimodular import construct_with_eds
    from .localsnf import local_profile

    prof = modular_profile(alg, M)
    n = len(M) // 2
    N = construct_with_eds(alg, prof.profile, n, bound)
    if local_profile(alg, N) != prof.profile:
        raise AlgebraError("normalized block has the wrong profile")
    return N


def correspondence(alg: Algebra, M, bound: int | None = None):
    return normalize_block_diagonal(alg, M, bound)


def check_modular_profile(alg: Algebra, mprof: ModularEDProfile, n: int):
    from .unimodular import check_profile

    if mprof.m == 0:
        raise AlgebraError("m: multiplier must be nonzero")
    check_profile(alg, mprof.profile, n)
    tops = {}
    for place, inv in mprof.profile.entries:
        if abs(mprof.m) % place.p:
            raise AlgebraError(f"places: prime {place.p} does not divide m")
        tops[place.p] = tops.get(place.p, 0) + _norm_val_top(alg, place, inv)
    for p, t in tops.items():
        if t > vp(abs(mprof.m), p):
            raise AlgebraError(f"places: top bound nu_p(N(e_n)) <= nu_p(m) fails at {p}")


def modular_exists_with_eds(alg: Algebra, mprof: ModularEDProfile, n: int, bound: int | None = None):
    """Existence of a similitude with the given multiplier and first-n profile.

    Decided on the first-n ideals through the unimodular criterion; the
    witness is diag(N, m (N*)^{-1}) for the constructed N.
    """
    from .unimodular import ExistenceResult

    check_modular_profile(alg, mprof, n)
    res = exists_with_eds(alg, mprof.profile, n, bound)
    if res.status != "yes":
        return res
    W = correspondence_inverse(alg, res.witness, mprof.m)
    if modular_profile(alg, W) != ModularEDProfile(abs(mprof.m), mprof.profile):
        raise AlgebraError("modular witness has the wrong profile")
    return ExistenceResult("yes", W, res.detail)


# pairs

@dataclass(frozen=True)
class PairPredicates:
    is_pair: bool
    is_coprime: bool
    associated: bool | None = None


def _rows_lattice(alg, rows):
    out = []
    for row in rows:
        for b in range(alg.dim):
            e = tuple(int(k == b) for k in range(alg.dim))
            v = []
            for x in row:
                v.extend(int(c) for c in alg.mul(e, x))
            out.append(v)
    return out


def pair_predicates(alg: Algebra, A, B, A2=None, B2=None) -> PairPredicates:
    """AB* = BA*; the block (A B) has trivial local elementary divisors;
    and, when (A2, B2) is given, A2 B* = B2 A*."""
    n = len(A)
    AB = mat_mul(alg, A, mat_star(alg, B))
    BA = mat_mul(alg, B, mat_star(alg, A))
    is_pair = AB == BA
    R = _rows_lattice(alg, [list(A[i]) + list(B[i]) for i in range(n)])
    D, _ = _complete_columns(R)
    coprime = abs(det_int(D)) == 1
    assoc = None
    if A2 is not None and B2 is not None:
        assoc = mat_mul(alg, A2, mat_star(alg, B)) == mat_mul(alg, B2, mat_star(alg, A))
    return PairPredicates(is_pair, coprime, assoc)


# right cosets (quadratic orders)

COSET_LIMIT = 5000


def _column_lattice_gens(alg, X):
    N = len(X)
    gens = []
    for j in range(N):
        for b in range(alg.dim):
            e = tuple(int(k == b) for k in range(alg.dim))
            v = []
            for r in range(N):
                v.extend(int(c) for c in alg.mul(X[r][j], e))
            gens.append(v)
    return gens


def _vec_apply(alg, G, v):
    N = len(G)
    d = alg.dim
    xs = [tuple(v[d * r: d * r + d]) for r in range(N)]
    out = []
    for r in range(N):
        acc = alg.zero()
        for c in range(N):
            if any(G[r][c]) and any(xs[c]):
                acc = alg.add(acc, alg.mul(G[r][c], xs[c]))
        out.extend(int(c) for c in acc)
    return out


def lattice_key(alg, X, mod: int | None = None):
    """Canonical HNF of the column lattice of X (optionally plus mod * Z^N)."""
    from .lattice import hnf

    gens = _column_lattice_gens(alg, X)
    size = len(gens[0])
    if mod:
        gens = [[x % mod for x in g] for g in gens]
        gens += [[mod * int(i == j) for j in range(size)] for i in range(size)]
    return tuple(tuple(r) for r in hnf(gens, size))


def _orbit_generators(alg, n):
    basis = [tuple(int(k == b) for k in range(alg.dim)) for b in range(alg.dim)]
    gens = []
    for i in range(n):
        gens.append(SpGen("up", i, i, alg.one()))
        gens.append(SpGen("low", i, i, alg.one()))
        for j in range(n):
            if i == j:
                continue
            for b in basis:
                gens += [SpGen("psi", i, j, b), SpGen("up", i, j, b), SpGen("low", i, j, b)]
    return gens


def local_lattice_orbit(alg: Algebra, M0, p: int, e: int, limit: int = COSET_LIMIT):
    """Lattices in the Sp(Lambda_p)-orbit of the column lattice of M0 mod p^e,
    each with a generator word reaching it (breadth first, deterministic)."""
    from .lattice import hnf

    mod = p ** e
    n = len(M0) // 2
    size = 2 * n * alg.dim
    gens = _orbit_generators(alg, n)
    mats = [sp_matrix(alg, n, g) for g in gens]
    start = lattice_key(alg, M0, mod)
    seen = {start: []}
    queue = [start]
    while queue:
        nxt = []
        for key in queue:
            word = seen[key]
            for g, G in zip(gens, mats):
                rows = [[x % mod for x in _vec_apply(alg, G, list(v))] for v in key]
                rows += [[mod * int(i == j) for j in range(size)] for i in range(size)]
                k2 = tuple(tuple(r) for r in hnf(rows, size))
                if k2 not in seen:
                    seen[k2] = word + [g]
                    nxt.append(k2)
                    if len(seen) > limit:
                        raise AlgebraError(f"coset enumeration exceeded the limit {limit}")
        queue = nxt
    return seen


def enumerate_right_cosets(alg: Algebra, mprof: ModularEDProfile, n: int, limit: int = COSET_LIMIT):
    """Representatives of Sp_n(Lambda) M Sp_n(Lambda) / Sp_n(Lambda).

    Local orbits of the column lattice are enumerated per prime dividing m
    and glued by approximation; distinct column lattices certify that no two
    representatives lie in the same right coset.
    """
    import json
    from sympy import factorint

    if alg.kind != "quadratic":
        raise AlgebraError("coset enumeration is implemented for quadratic orders")
    if n > 2:
        raise AlgebraError("coset enumeration supports n <= 2")
    res = modular_exists_with_eds(alg, mprof, n)
    if res.status != "yes":
        return []
    M0 = res.witness
    m = mprof.m
    fac = factorint(abs(m))
    orbits = []
    total = 1
    for p in sorted(fac):
        orb = local_lattice_orbit(alg, M0, p, fac[p], limit)
        orbits.append((p, sorted(orb.items())))
        total *= len(orb)
        if total > limit:
            raise AlgebraError(f"coset enumeration exceeded the limit {limit}")
    import itertools

    reps = []
    keys = set()
    for combo in itertools.product(*[items for _, items in orbits]):
        U = mat_identity(alg, 2 * n)
        for (p, _), (_, word) in zip(orbits, combo):
            U = mat_mul(alg, approximate_symplectic(alg, word, n, p, abs(m)), U)
        X = mat_mul(alg, U, M0)
        key = lattice_key(alg, X)
        if key in keys:
            raise AlgebraError("duplicate right coset produced")
        keys.add(key)
        reps.append([[tuple(int(c) for c in x) for x in row] for row in X])
    reps.sort(key=lambda X: json.dumps(X))
    return reps


def brute_force_right_cosets(alg: Algebra, mprof: ModularEDProfile, search: int = 3):
    """Count right cosets for n = 1 and prime m by scanning all Lambda-submodules
    L with m Lambda^2 in L of index m^2, keeping those spanned by the columns of
    a similitude with the target profile (found by a short search)."""
    import itertools

    m = abs(mprof.m)
    p = m
    from sympy import isprime

    if not isprime(p):
        raise AlgebraError("brute force supports prime multipliers only")
    d = alg.dim
    size = 2 * d
    target = ModularEDProfile(m, mprof.profile)
    omega = tuple(int(k == 1) for k in range(d))
    count = 0
    found = []
    for L in _subspaces(p, size, 2):
        rows = [list(r) for r in L]
        if not _omega_stable(alg, rows, omega, p):
            continue
        X = _find_similitude(alg, rows, p, search)
        if X is None:
            continue
        if modular_profile(alg, X) == target:
            count += 1
            found.append(X)
    return found


def _subspaces(p, N, k):
    """Reduced row echelon k x N matrices over F_p."""
    import itertools

    for pivots in itertools.combinations(range(N), k):
        free = [(r, c) for r in range(k) for c in range(N) if c > pivots[r] and c not in pivots]
        for vals in itertools.product(range(p), repeat=len(free)):
            M = [[0] * N for _ in range(k)]
            for r, c in enumerate(pivots):
                M[r][c] = 1
            for (r, c), x in zip(free, vals):
                M[r][c] = x
            yield M


def _omega_stable(alg, rows, omega, p):
    d = alg.dim
    span = _rank_mod_p(rows, p)
    for v in rows:
        w = []
        for r in range(len(v) // d):
            w.extend(int(c) for c in alg.mul(omega, tuple(v[d * r: d * r + d])))
        if _rank_mod_p(rows + [[x % p for x in w]], p) != span:
            return False
    return True


def _find_similitude(alg, rows, p, search):
    """Columns x1, x2 of the lattice rows + p Z^4 with x* J x = 0 and x1* J x2 = p."""
    import itertools

    d = alg.dim
    size = 2 * d
    basis = [list(r) for r in rows] + [[p * int(i == j) for j in range(size)] for i in range(size)]
    from .lattice import hnf

    B = hnf(basis, size)
    cands = []
    for coeffs in itertools.product(range(-search, search + 1), repeat=len(B)):
        v = [sum(c * b[k] for c, b in zip(coeffs, B)) for k in range(size)]
        if any(v):
            cands.append((tuple(v[:d]), tuple(v[d:])))
    J = J_matrix(alg, 1)

    def h(x, y):
        # x* J y for column vectors
        return alg.sub(alg.mul(alg.conj(x[0]), y[1]), alg.mul(alg.conj(x[1]), y[0]))

    iso = [x for x in cands if not any(h(x, x))]
    target = tuple(int(k == 0) * p for k in range(d))
    key = tuple(tuple(r) for r in B)
    for x in iso:
        for y in iso:
            if tuple(h(x, y)) != target:
                continue
            X = [[x[0], y[0]], [x[1], y[1]]]
            if lattice_key(alg, X) == key:
                return X
    return None
