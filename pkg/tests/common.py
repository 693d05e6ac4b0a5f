"""Shared algebras and random generators for the test suite."""

import random
from fractions import Fraction as F

from ordsmith.algebra import Algebra, mat_identity, mat_mul
from ordsmith.modular import SpGen, word_matrix

DISC17_BASIS = [
    (1, 0, 0, 0),
    (F(1, 2), 0, F(1, 2), 0),
    (F(1, 2), F(1, 2), F(1, 6), F(1, 6)),
    (F(-1, 2), 0, F(1, 6), F(-1, 3)),
]

# order basis coordinates of 1 and h2 in the (-17,-3) order
ONE4 = (1, 0, 0, 0)
H2 = (0, 0, 1, 0)
H3 = (0, 0, 0, 1)


def disc17_order():
    return Algebra.quaternion(-17, -3, DISC17_BASIS)


def disc3_order():
    """Maximal order <1, i, (1+j)/2, (i+k)/2> in (-1,-3)."""
    return Algebra.quaternion(-1, -3, [(1, 0, 0, 0), (0, 1, 0, 0), (F(1, 2), 0, F(1, 2), 0), (0, F(1, 2), 0, F(1, 2))])


def qsqrt(d):
    return Algebra.quadratic(d)


def el(alg, *coeffs):
    return tuple(coeffs) + (0,) * (alg.dim - len(coeffs))


def rand_elem(alg, rng, size=2):
    return tuple(rng.randint(-size, size) for _ in range(alg.dim))


def rand_matrix(alg, rng, n, size=3):
    return [[rand_elem(alg, rng, size) for _ in range(n)] for _ in range(n)]


def rand_unimodular(alg, rng, n, steps=6, size=2):
    U = mat_identity(alg, n)
    for _ in range(steps):
        i, j = rng.sample(range(n), 2)
        T = mat_identity(alg, n)
        T[i][j] = rand_elem(alg, rng, size)
        U = mat_mul(alg, T, U)
    return [[tuple(int(c) for c in x) for x in row] for row in U]


def rand_sp_word(alg, rng, n, steps=6, size=2):
    word = []
    for _ in range(steps):
        kind = rng.choice(["psi", "up", "low"] if n > 1 else ["up", "low"])
        if kind == "psi":
            i, j = rng.sample(range(n), 2)
            a = rand_elem(alg, rng, size)
        else:
            i, j = rng.randrange(n), rng.randrange(n)
            a = alg.scalar(rng.randint(-size, size)) if i == j else rand_elem(alg, rng, size)
        word.append(SpGen(kind, i, j, a))
    return word


def rand_symplectic(alg, rng, n, steps=6, size=2):
    U = word_matrix(alg, n, rand_sp_word(alg, rng, n, steps, size))
    return [[tuple(int(c) for c in x) for x in row] for row in U]


def as_int(M):
    return [[tuple(int(c) for c in x) for x in row] for row in M]


def rng_for(tag):
    return random.Random(repr(tag))
