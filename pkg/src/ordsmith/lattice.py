"""Integer lattice utilities: row Hermite normal form, determinants, exact
short-vector enumeration for positive definite rational forms."""

from __future__ import annotations

from fractions import Fraction
from math import floor, ceil, sqrt


def hnf(rows, ncols: int | None = None):
    """Row Hermite normal form of the Z-span of ``rows``.

    Returns the nonzero rows, upper triangular with positive pivots and
    entries above each pivot reduced into [0, pivot).
    """
    A = [list(map(int, r)) for r in rows if any(r)]
    if not A:
        return []
    m = ncols if ncols is not None else len(A[0])
    out = []
    col = 0
    while A and col < m:
        nz = [r for r in A if r[col] != 0]
        rest = [r for r in A if r[col] == 0]
        if not nz:
            col += 1
            continue
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            p = nz[0]
            new = [p]
            for r in nz[1:]:
                q = r[col] // p[col]
                r = [a - q * b for a, b in zip(r, p)]
                if r[col] != 0:
                    new.append(r)
                elif any(r):
                    rest.append(r)
            nz = new
        p = nz[0]
        if p[col] < 0:
            p = [-a for a in p]
        out.append(p)
        A = [r for r in rest if any(r)]
        col += 1
    # reduce above pivots
    for i in range(len(out)):
        pc = next(c for c in range(m) if out[i][c] != 0)
        for j in range(i):
            q = out[j][pc] // out[i][pc]
            if q:
                out[j] = [a - q * b for a, b in zip(out[j], out[i])]
    return [tuple(r) for r in out]


def hnf_with_transform(rows):
    """HNF H of the row span plus an integer matrix T with T * rows = H.

    Only used on small systems (solving linear combinations)."""
    A = [list(map(int, r)) for r in rows]
    k = len(A)
    m = len(A[0])
    T = [[int(i == j) for j in range(k)] for i in range(k)]
    r0 = 0
    for col in range(m):
        if r0 >= k:
            break
        while True:
            nz = [i for i in range(r0, k) if A[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(A[i][col]))
            A[r0], A[piv] = A[piv], A[r0]
            T[r0], T[piv] = T[piv], T[r0]
            done = True
            for i in range(r0 + 1, k):
                if A[i][col]:
                    q = A[i][col] // A[r0][col]
                    A[i] = [a - q * b for a, b in zip(A[i], A[r0])]
                    T[i] = [a - q * b for a, b in zip(T[i], T[r0])]
                    if A[i][col]:
                        done = False
            if done:
                break
        if any(A[i][col] for i in range(r0, k)):
            if A[r0][col] < 0:
                A[r0] = [-a for a in A[r0]]
                T[r0] = [-a for a in T[r0]]
            for i in range(r0):
                q = A[i][col] // A[r0][col]
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[r0])]
                    T[i] = [a - q * b for a, b in zip(T[i], T[r0])]
            r0 += 1
    return A[:r0], T[:r0]


def solve_integer(rows, target):
    """Integer vector c with sum c_i rows_i = target, or None."""
    H, T = hnf_with_transform(rows)
    coeffs = [0] * len(H)
    t = list(target)
    for i, h in enumerate(H):
        pc = next(c for c in range(len(h)) if h[c] != 0)
        for c in range(pc):
            if t[c] != 0:
                return None
        if t[pc] % h[pc]:
            return None
        q = t[pc] // h[pc]
        coeffs[i] = q
        t = [a - q * b for a, b in zip(t, h)]
    if any(t):
        return None
    out = [0] * len(rows)
    for i, q in enumerate(coeffs):
        if q:
            out = [a + q * b for a, b in zip(out, T[i])]
    return out


def det_int(M) -> int:
    """Exact determinant via fraction-free Bareiss elimination."""
    A = [list(map(int, r)) for r in M]
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if sw is None:
                return 0
            A[k], A[sw] = A[sw], A[k]
            sign = -sign
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i = A[i]
            row_k = A[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * A[n - 1][n - 1]


def index_of(basis_rows) -> int:
    """Index in Z^n of the full-rank lattice spanned by HNF rows."""
    idx = 1
    for i, r in enumerate(basis_rows):
        idx *= r[i] if len(basis_rows) == len(r) else 1
    return abs(idx)


def _ldl(gram):
    """Exact decomposition Q(x) = sum q_i (x_i + sum_{j>i} mu_ij x_j)^2."""
    n = len(gram)
    A = [[Fraction(v) for v in r] for r in gram]
    q = [Fraction(0)] * n
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        q[i] = A[i][i]
        if q[i] <= 0:
            raise ValueError("form is not positive definite")
        for j in range(i + 1, n):
            mu[i][j] = A[i][j] / q[i]
        for j in range(i + 1, n):
            for k in range(j, n):
                A[j][k] -= mu[i][j] * A[i][k]
                A[k][j] = A[j][k]
    return q, mu


def _gso(G):
    n = len(G)
    mu = [[Fraction(0)] * n for _ in range(n)]
    bs = [Fraction(0)] * n
    for i in range(n):
        for j in range(i):
            mu[i][j] = (G[i][j] - sum(mu[j][k] * mu[i][k] * bs[k] for k in range(j))) / bs[j]
        bs[i] = G[i][i] - sum(mu[i][k] ** 2 * bs[k] for k in range(i))
    return mu, bs


def lll_gram(gram, delta=Fraction(3, 4)):
    """LLL reduction of a positive definite Gram matrix (exact).

    Returns (T, G2) with T unimodular and G2 = T G T^t reduced.
    """
    n = len(gram)
    G = [[Fraction(v) for v in r] for r in gram]
    T = [[int(i == j) for j in range(n)] for i in range(n)]

    def addrow(k, j, q):
        # b_k -= q b_j
        T[k] = [a - q * b for a, b in zip(T[k], T[j])]
        for c in range(n):
            G[k][c] -= q * G[j][c]
        for r in range(n):
            G[r][k] -= q * G[r][j]

    k = 1
    while k < n:
        mu, bs = _gso(G)
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                addrow(k, j, q)
                mu, bs = _gso(G)
        if bs[k] < (delta - mu[k][k - 1] ** 2) * bs[k - 1]:
            T[k], T[k - 1] = T[k - 1], T[k]
            G[k], G[k - 1] = G[k - 1], G[k]
            for r in G:
                r[k], r[k - 1] = r[k - 1], r[k]
            k = max(k - 1, 1)
        else:
            k += 1
    return T, G


def short_vectors(gram, bound, limit: int | None = None):
    """All nonzero integer vectors x with x^T G x <= bound (one of each +-pair).

    The form is LLL-reduced first; enumeration then runs on the reduced basis
    and vectors are mapped back.  Yields (value, x).
    """
    n = len(gram)
    if n <= 1:
        yield from _short_vectors_raw(gram, bound, limit)
        return
    T, G2 = lll_gram(gram)
    for val, z in _short_vectors_raw(G2, bound, limit):
        yield val, tuple(sum(z[i] * T[i][c] for i in range(n)) for c in range(n))


def _short_vectors_raw(gram, bound, limit: int | None = None):
    """All nonzero integer vectors x with x^T G x <= bound (one of each +-pair).

    Exact Fincke-Pohst enumeration: ranges come from a float square root with
    a margin and every candidate is confirmed with rational arithmetic.
    Yields (value, x).  Stops after ``limit`` vectors if given.
    """
    n = len(gram)
    q, mu = _ldl(gram)
    bound = Fraction(bound)
    x = [0] * n
    count = 0

    def rec(i, remaining):
        nonlocal count
        if i < 0:
            return
        c = sum((mu[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        r = sqrt(float(remaining / q[i])) if remaining > 0 else 0.0
        lo = ceil(float(-c) - r) - 1
        hi = floor(float(-c) + r) + 1
        for v in range(lo, hi + 1):
            t = v + c
            used = q[i] * t * t
            if used > remaining:
                continue
            x[i] = v
            rest = remaining - used
            if i == 0:
                if any(x):
                    yield bound - rest, tuple(x)
            else:
                yield from rec(i - 1, rest)
        x[i] = 0

    seen = set()
    for val, vec in rec(n - 1, bound):
        neg = tuple(-a for a in vec)
        if neg in seen:
            continue
        seen.add(vec)
        yield val, vec
        count += 1
        if limit is not None and count >= limit:
            return


def vectors_of_value(gram, value):
    """Integer vectors x (up to sign) with x^T G x exactly equal to value."""
    return [v for val, v in short_vectors(gram, value) if val == value]
