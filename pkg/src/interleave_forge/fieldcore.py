"""Exact dense matrix algebra over small prime fields GF(p).

Every value is an immutable reduced residue; there is no floating point
anywhere in the package. Elimination uses deterministic first-nonzero
pivoting in natural row order, so all outputs are reproducible bit for bit.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass

from . import linalg

_PRIMES_TO_97 = frozenset(
    [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
     71, 73, 79, 83, 89, 97]
)


@dataclass(frozen=True)
class PrimeField:
    """GF(p) for a small prime modulus (p <= 97)."""

    p: int

    def __post_init__(self):
        if self.p not in _PRIMES_TO_97:
            raise ValueError(f"modulus must be a prime <= 97, got {self.p!r}")

    def reduce(self, value: int) -> int:
        return value % self.p

    def inv(self, value: int) -> int:
        value %= self.p
        if value == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(value, self.p - 2, self.p)

    def elements(self) -> range:
        return range(self.p)


class _SingularType:
    """Marker returned by mat_inverse for non-invertible input."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Singular"


SINGULAR = _SingularType()


@dataclass(frozen=True)
class FieldMatrix:
    """Immutable dense matrix over a prime field, row-major entries."""

    rows: int
    cols: int
    entries: tuple[int, ...]
    field: PrimeField

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative dimensions")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entry count does not match the shape")
        p = self.field.p
        if any(not 0 <= e < p for e in self.entries):
            object.__setattr__(
                self, "entries", tuple(e % p for e in self.entries)
            )

    @classmethod
    def from_rows(cls, rows, field: PrimeField) -> "FieldMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged rows")
        flat = tuple(e % field.p for r in rows for e in r)
        return cls(len(rows), ncols, flat, field)

    @classmethod
    def identity(cls, n: int, field: PrimeField) -> "FieldMatrix":
        return cls(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)), field)

    @classmethod
    def zeros(cls, rows: int, cols: int, field: PrimeField) -> "FieldMatrix":
        return cls(rows, cols, (0,) * (rows * cols), field)

    def at(self, i: int, j: int) -> int:
        """Entry at 0-based (i, j)."""
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[int, ...]:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def to_rows(self) -> list[list[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "FieldMatrix":
        flat = tuple(self.at(i, j) for j in range(self.cols) for i in range(self.rows))
        return FieldMatrix(self.cols, self.rows, flat, self.field)

    def submatrix(self, row_range: range, col_range: range) -> "FieldMatrix":
        flat = tuple(self.at(i, j) for i in row_range for j in col_range)
        return FieldMatrix(len(row_range), len(col_range), flat, self.field)

    def flat(self) -> array:
        return array("q", self.entries)


def _check_same_field(a: FieldMatrix, b: FieldMatrix):
    if a.field != b.field:
        raise ValueError("field mismatch")


def mat_mul(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    """Exact product mod p."""
    _check_same_field(a, b)
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    out = linalg.mat_mul_flat(a.flat(), a.rows, a.cols, b.flat(), b.cols, a.field.p)
    return FieldMatrix(a.rows, b.cols, tuple(out), a.field)


def mat_add(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    _check_same_field(a, b)
    if (a.rows, a.cols) != (b.rows, b.cols):
        raise ValueError("dimension mismatch")
    p = a.field.p
    return FieldMatrix(a.rows, a.cols, tuple((x + y) % p for x, y in zip(a.entries, b.entries)), a.field)


def mat_sub(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    _check_same_field(a, b)
    if (a.rows, a.cols) != (b.rows, b.cols):
        raise ValueError("dimension mismatch")
    p = a.field.p
    return FieldMatrix(a.rows, a.cols, tuple((x - y) % p for x, y in zip(a.entries, b.entries)), a.field)


def mat_rank(a: FieldMatrix) -> int:
    return linalg.rank_flat(a.flat(), a.rows, a.cols, a.field.p)


def mat_inverse(a: FieldMatrix):
    """Exact inverse, or the SINGULAR marker."""
    if a.rows != a.cols:
        raise ValueError("inverse requires a square matrix")
    out = linalg.inverse_flat(a.flat(), a.rows, a.field.p)
    if out is None:
        return SINGULAR
    return FieldMatrix(a.rows, a.cols, tuple(out), a.field)


def vstack(a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
    _check_same_field(a, b)
    if a.cols != b.cols:
        raise ValueError("dimension mismatch")
    return FieldMatrix(a.rows + b.rows, a.cols, a.entries + b.entries, a.field)


def complete_to_inverse(m: FieldMatrix, n: FieldMatrix) -> tuple[FieldMatrix, FieldMatrix]:
    """Extend a one-sided inverse pair to a full inverse pair.

    Given m (k x w) and n (w x k) with w > k and m @ n = I_k, produce
    (m_prime, n_prime) so that stacking m over m_prime and putting n next to
    n_prime multiplies to I_w. The completion: extend m to full rank by
    greedily independent unit rows m2, set m_prime = m2 - m2 @ n @ m, and read
    n_prime off the trailing columns of the block inverse.
    """
    _check_same_field(m, n)
    k, w = m.rows, m.cols
    if n.rows != w or n.cols != k:
        raise ValueError("shape mismatch between m and n")
    if w <= k:
        raise ValueError("m must have more columns than rows")
    if mat_mul(m, n) != FieldMatrix.identity(k, m.field):
        raise ValueError("precondition violated: m @ n is not the identity")
    p = m.field.p
    ref = linalg.RefSystem(w, p)
    for i in range(k):
        ref.add(array("q", m.row(i)))
    extra_rows = []
    for i in range(w):
        if len(extra_rows) == w - k:
            break
        unit = array("q", bytes(8 * w))
        unit[i] = 1
        if ref.add(unit) is not None:
            extra_rows.append([1 if j == i else 0 for j in range(w)])
    m2 = FieldMatrix.from_rows(extra_rows, m.field)
    m_prime = mat_sub(m2, mat_mul(mat_mul(m2, n), m))
    stacked = vstack(m, m_prime)
    inv = mat_inverse(stacked)
    if inv is SINGULAR:
        raise AssertionError("completion failed: stacked matrix is singular")
    n_prime = inv.submatrix(range(w), range(k, w))
    return m_prime, n_prime


def format_matrix_literal(a: FieldMatrix) -> str:
    """Text form `p=<p>; rows=<r>; cols=<c>; data=<rows ; separated>`."""
    data = "; ".join(" ".join(str(e) for e in a.row(i)) for i in range(a.rows))
    return f"p={a.field.p}; rows={a.rows}; cols={a.cols}; data={data}"


def parse_matrix_literal(text: str) -> FieldMatrix:
    fields = {}
    head, _, data = text.partition("data=")
    if not data and "data=" not in text:
        raise ValueError("matrix literal missing data section")
    for part in head.split(";"):
        part = part.strip()
        if not part:
            continue
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    try:
        p = int(fields["p"])
        rows = int(fields["rows"])
        cols = int(fields["cols"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed matrix literal header: {exc}") from exc
    field = PrimeField(p)
    row_texts = [r for r in data.split(";")] if data.strip() else []
    parsed = [[int(tok) for tok in r.split()] for r in row_texts]
    parsed = [r for r in parsed if r] if rows else []
    if len(parsed) != rows or any(len(r) != cols for r in parsed):
        raise ValueError("matrix literal data does not match the declared shape")
    return FieldMatrix.from_rows(parsed, field) if rows else FieldMatrix.zeros(rows, cols, field)
