"""Shared GF(p) routines built on the kernel backend.

Matrices at this layer are flat row-major `array('q')` buffers (or any
sequence of residues); everything returns fresh buffers. The incremental
`RefSystem` accumulator is what the backtracking solvers lean on.
"""

from __future__ import annotations

from array import array

from . import _kernels as K


def as_flat(seq):
    return seq if isinstance(seq, array) else array("q", seq)


def mat_mul_flat(a, ar, ac, b, bc, p):
    return K.mat_mul_flat(as_flat(a), ar, ac, as_flat(b), bc, p)


def rref_flat(a, r, c, p):
    return K.rref_flat(as_flat(a), r, c, p)


def rank_flat(a, r, c, p):
    return len(K.rref_flat(as_flat(a), r, c, p)[1])


def inverse_flat(a, n, p):
    """Inverse of an n x n matrix, or None if singular."""
    aug = array("q")
    for i in range(n):
        aug.extend(a[i * n : (i + 1) * n])
        aug.extend(1 if j == i else 0 for j in range(n))
    rows, pivots = K.rref_flat(aug, n, 2 * n, p)
    if pivots != list(range(n)):
        return None
    out = array("q", bytes(8 * n * n))
    for i in range(n):
        out[i * n : (i + 1) * n] = rows[i * 2 * n + n : (i + 1) * 2 * n]
    return out


def nullspace_flat(a, r, c, p):
    """Deterministic kernel basis: one vector per free column of the RREF."""
    rows, pivots = K.rref_flat(as_flat(a), r, c, p)
    pivot_set = set(pivots)
    basis = []
    for free in range(c):
        if free in pivot_set:
            continue
        v = array("q", bytes(8 * c))
        v[free] = 1
        for i, pv in enumerate(pivots):
            coef = rows[i * c + free]
            if coef:
                v[pv] = (-coef) % p
        basis.append(v)
    return basis


def solve_flat(a, r, c, rhs, p):
    """Particular solution of A x = rhs (free variables 0), or None."""
    aug = array("q")
    for i in range(r):
        aug.extend(a[i * c : (i + 1) * c])
        aug.append(rhs[i])
    rows, pivots = K.rref_flat(aug, r, c + 1, p)
    if pivots and pivots[-1] == c:
        return None
    x = array("q", bytes(8 * c))
    for i, pv in enumerate(pivots):
        x[pv] = rows[i * (c + 1) + c]
    return x


def is_zero(vec):
    return not any(vec)


class RefSystem:
    """Row-echelon accumulator over GF(p) with O(1) removal of the last
    insertions, which is what backtracking search needs.

    Rows are kept pivot-sorted with leading coefficient 1; rows are never
    back-substituted into each other, so inserting and removing a row leaves
    the others untouched.
    """

    __slots__ = ("width", "p", "rows", "pivots")

    def __init__(self, width, p):
        self.width = width
        self.p = p
        self.rows = array("q")
        self.pivots = []

    def residual(self, v):
        return K.ref_reduce(self.rows, self.pivots, self.width, v, self.p)

    def insert_residual(self, res):
        """Insert an already-reduced nonzero vector; returns an undo token."""
        lead = -1
        for j, val in enumerate(res):
            if val:
                lead = j
                break
        if lead < 0:
            raise ValueError("cannot insert a zero residual")
        inv = pow(res[lead], self.p - 2, self.p)
        if inv != 1:
            res = array("q", (val * inv % self.p for val in res))
        else:
            res = as_flat(res)
        pos = 0
        while pos < len(self.pivots) and self.pivots[pos] < lead:
            pos += 1
        self.rows[pos * self.width : pos * self.width] = res
        self.pivots.insert(pos, lead)
        return pos

    def remove_at(self, pos):
        del self.rows[pos * self.width : (pos + 1) * self.width]
        del self.pivots[pos]

    def add(self, v):
        """Reduce and insert v if independent; returns the undo token or None."""
        res = self.residual(v)
        if is_zero(res):
            return None
        return self.insert_residual(res)

    @property
    def rank(self):
        return len(self.pivots)

    def particular_solution(self):
        """Back-substitute an augmented system (last column = rhs).

        Free variables are 0. The system must be consistent, i.e. no pivot in
        the rhs column.
        """
        nvars = self.width - 1
        x = array("q", bytes(8 * nvars))
        for i in reversed(range(len(self.pivots))):
            pv = self.pivots[i]
            if pv >= nvars:
                raise ValueError("inconsistent system")
            base = i * self.width
            s = self.rows[base + nvars]
            for j in range(pv + 1, nvars):
                coef = self.rows[base + j]
                if coef and x[j]:
                    s -= coef * x[j]
            x[pv] = s % self.p
        return x
