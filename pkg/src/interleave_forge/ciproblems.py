"""Constrained invertibility problems over GF(p).

CI asks for square A, B with prescribed zero patterns P (on A) and Q (on B)
such that A @ B = I. GCI relaxes to rectangular A, B and only requires the
product to agree with the identity on a set R of entries. This module holds
verification, exact solvers, the GCI -> CI and 3SAT -> GCI reductions, and a
GF(2) CNF export.

All (row, column) index pairs in instances are 1-based, matching the visual
matrix notation used in the fixtures; matrices themselves are 0-based.
"""

from __future__ import annotations

import os
from array import array
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import product

from . import linalg
from .fieldcore import FieldMatrix, PrimeField
from .satcore import Cnf3, GeneralCnf, eval_assignment

DEFAULT_BUDGET = 10**8

THREADS_ENV_VAR = "INTERLEAVE_FORGE_THREADS"


class SolveStatus(Enum):
    SOLVED = "solved"
    NO_SOLUTION = "no_solution"
    BUDGET_EXCEEDED = "budget_exceeded"


class BudgetExceededError(Exception):
    """Raised by scan-style searches when a node budget runs out."""

    def __init__(self, nodes):
        super().__init__(f"search budget exceeded after {nodes} nodes")
        self.nodes = nodes


def _check_pairs(pairs, rows, cols, name):
    out = []
    for pair in pairs:
        i, j = pair
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise ValueError(f"{name} entry {pair} out of range")
        out.append((int(i), int(j)))
    return frozenset(out)


@dataclass(frozen=True)
class CiInstance:
    """Zero-pattern constrained invertibility instance (n, P, Q)."""

    n: int
    field: PrimeField
    P: frozenset
    Q: frozenset

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        object.__setattr__(self, "P", _check_pairs(self.P, self.n, self.n, "P"))
        object.__setattr__(self, "Q", _check_pairs(self.Q, self.n, self.n, "Q"))


@dataclass(frozen=True)
class GciInstance:
    """Generalized instance (n, m, P, Q, R): A is n x m, B is m x n."""

    n: int
    m: int
    field: PrimeField
    P: frozenset
    Q: frozenset
    R: frozenset

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("dimensions must be positive")
        object.__setattr__(self, "P", _check_pairs(self.P, self.n, self.m, "P"))
        object.__setattr__(self, "Q", _check_pairs(self.Q, self.m, self.n, "Q"))
        object.__setattr__(self, "R", _check_pairs(self.R, self.n, self.n, "R"))


@dataclass(frozen=True)
class CiSolution:
    A: FieldMatrix
    B: FieldMatrix


@dataclass(frozen=True)
class CiSearchResult:
    status: SolveStatus
    solution: CiSolution | None
    nodes: int


def verify_ci(inst: CiInstance, sol: CiSolution) -> bool:
    """Patterns hold and A @ B = I_n."""
    n = inst.n
    A, B = sol.A, sol.B
    if (A.rows, A.cols) != (n, n) or (B.rows, B.cols) != (n, n):
        raise ValueError("solution dimensions do not match the instance")
    if A.field != inst.field or B.field != inst.field:
        raise ValueError("field mismatch")
    if any(A.at(i - 1, j - 1) for i, j in inst.P):
        return False
    if any(B.at(i - 1, j - 1) for i, j in inst.Q):
        return False
    from .fieldcore import mat_mul

    return mat_mul(A, B) == FieldMatrix.identity(n, inst.field)


def verify_gci(inst: GciInstance, sol: CiSolution) -> bool:
    """Patterns hold and (A @ B) agrees with I_n on R."""
    A, B = sol.A, sol.B
    if (A.rows, A.cols) != (inst.n, inst.m) or (B.rows, B.cols) != (inst.m, inst.n):
        raise ValueError("solution dimensions do not match the instance")
    if A.field != inst.field or B.field != inst.field:
        raise ValueError("field mismatch")
    if any(A.at(i - 1, j - 1) for i, j in inst.P):
        return False
    if any(B.at(i - 1, j - 1) for i, j in inst.Q):
        return False
    from .fieldcore import mat_mul

    prod = mat_mul(A, B)
    return all(
        prod.at(i - 1, j - 1) == (1 if i == j else 0) for i, j in inst.R
    )


# --- CI solver ---------------------------------------------------------------
#
# Backtracking over the free entries of A in row-major order, values tried
# ascending, with three sound prunes layered on the plain rank prune:
#
#   * rank: the first k accepted rows must have rank k;
#   * per-column feasibility: for every column j of B carrying a constraint,
#     the affine system "accepted rows times x = e_j prefix, x zero on the
#     Q-pattern" must stay consistent (B's column j solves it, so pruning an
#     inconsistent branch never loses a solution);
#   * free-tail completion: rows past the last P-constrained row and columns
#     past the last Q-constrained column are unconstrained, so once the
#     constrained block is filled the search space collapses — pick any
#     feasible B-columns and complete with the one-sided-inverse padding
#     construction instead of enumerating the remaining rows.
#
# The first solution in this deterministic order is returned.


class _Budget:
    __slots__ = ("limit", "nodes")

    def __init__(self, limit):
        self.limit = limit
        self.nodes = 0

    def tick(self):
        self.nodes += 1
        if self.nodes > self.limit:
            raise BudgetExceededError(self.nodes)


def _complete_from_prefix(rows_acc, col_solutions, n, field):
    """Padding completion: rows_acc (k rows, rank k) plus chosen B-columns
    N with rows_acc @ N = I_k yield a full solution; remaining rows are
    extended greedily to full rank and corrected to annihilate N."""
    p = field.p
    k = len(rows_acc)
    ref = linalg.RefSystem(n, p)
    for row in rows_acc:
        ref.add(row)
    extra = []
    for i in range(n):
        if len(extra) == n - k:
            break
        unit = array("q", bytes(8 * n))
        unit[i] = 1
        if ref.add(unit) is not None:
            extra.append(unit)
    a_flat = array("q")
    for row in rows_acc:
        a_flat.extend(row)
    if extra:
        m2 = array("q")
        for row in extra:
            m2.extend(row)
        if k:
            n_mat = array("q", bytes(8 * n * k))
            for j, col in enumerate(col_solutions):
                for r in range(n):
                    n_mat[r * k + j] = col[r]
            m_flat = array("q")
            for row in rows_acc:
                m_flat.extend(row)
            m2n = linalg.mat_mul_flat(m2, n - k, n, n_mat, k, p)
            m2nm = linalg.mat_mul_flat(m2n, n - k, k, m_flat, n, p)
            for idx in range((n - k) * n):
                m2[idx] = (m2[idx] - m2nm[idx]) % p
        a_flat.extend(m2)
    b_flat = linalg.inverse_flat(a_flat, n, p)
    if b_flat is None:
        raise AssertionError("internal error: completed matrix is singular")
    A = FieldMatrix(n, n, tuple(a_flat), field)
    B = FieldMatrix(n, n, tuple(b_flat), field)
    return CiSolution(A, B)


def _solve_ci_branch(inst, budget, first_values):
    """Sequential search; row 0's first free entry restricted to first_values
    (None means unrestricted)."""
    n, p, field = inst.n, inst.field.p, inst.field
    pzero = [[False] * n for _ in range(n)]
    for i, j in inst.P:
        pzero[i - 1][j - 1] = True
    qzero = [[False] * n for _ in range(n)]
    for i, j in inst.Q:
        qzero[i - 1][j - 1] = True
    kstar = 0
    if inst.P:
        kstar = max(i for i, _ in inst.P)
    if inst.Q:
        kstar = max(kstar, max(j for _, j in inst.Q))

    free_cols = [[j for j in range(n) if not pzero[r][j]] for r in range(kstar)]
    col_positions = [[r for r in range(n) if not qzero[r][j]] for j in range(kstar)]
    # most-constrained columns first: earlier exits on doomed candidates
    col_order = sorted(range(kstar), key=lambda j: (len(col_positions[j]), j))

    rank_ref = linalg.RefSystem(n, p)
    col_sys = [linalg.RefSystem(len(col_positions[j]) + 1, p) for j in range(kstar)]
    rows_acc = []

    def descend(r):
        if r == kstar:
            cols = []
            for j in range(kstar):
                x = col_sys[j].particular_solution()
                full = array("q", bytes(8 * n))
                for idx, pos in enumerate(col_positions[j]):
                    full[pos] = x[idx]
                cols.append(full)
            return _complete_from_prefix(rows_acc, cols, n, field)
        free = free_cols[r]
        values_iter = product(range(p), repeat=len(free))
        for values in values_iter:
            if r == 0 and first_values is not None and free:
                if values[0] not in first_values:
                    continue
            budget.tick()
            row = array("q", bytes(8 * n))
            for pos, val in zip(free, values):
                row[pos] = val
            rank_res = rank_ref.residual(row)
            if linalg.is_zero(rank_res):
                continue
            undo = []
            feasible = True
            for j in col_order:
                sys_j = col_sys[j]
                width = sys_j.width
                eq = array("q", bytes(8 * width))
                for idx, pos in enumerate(col_positions[j]):
                    eq[idx] = row[pos]
                eq[width - 1] = 1 if r == j else 0
                res = sys_j.residual(eq)
                lead = -1
                for t in range(width):
                    if res[t]:
                        lead = t
                        break
                if lead == width - 1:
                    feasible = False
                    break
                if lead >= 0:
                    undo.append((j, sys_j.insert_residual(res)))
            if not feasible:
                for j, token in reversed(undo):
                    col_sys[j].remove_at(token)
                continue
            rank_token = rank_ref.insert_residual(rank_res)
            rows_acc.append(row)
            found = descend(r + 1)
            if found is not None:
                return found
            rows_acc.pop()
            rank_ref.remove_at(rank_token)
            for j, token in reversed(undo):
                col_sys[j].remove_at(token)
        return None

    try:
        solution = descend(0)
    except BudgetExceededError as exc:
        return CiSearchResult(SolveStatus.BUDGET_EXCEEDED, None, exc.nodes)
    if solution is None:
        return CiSearchResult(SolveStatus.NO_SOLUTION, None, budget.nodes)
    return CiSearchResult(SolveStatus.SOLVED, solution, budget.nodes)


def _worker_count(workers):
    if workers is not None:
        requested = workers
    else:
        requested = int(os.environ.get(THREADS_ENV_VAR, "1") or "1")
    return max(1, requested)


def solve_ci(inst: CiInstance, budget: int = DEFAULT_BUDGET, workers=None) -> CiSearchResult:
    """Search for a verified solution; deterministic across runs.

    Returns SOLVED with the first solution in search order, NO_SOLUTION after
    exhausting the (pruned) space, or BUDGET_EXCEEDED with the node count.
    With more than one worker the top-level branch on row 0's first free
    entry is split across threads; the merged outcome picks the earliest
    branch, matching the sequential result whenever the budget is not hit.
    """
    nworkers = _worker_count(workers)
    p = inst.field.p
    if nworkers <= 1 or p < 2:
        result = _solve_ci_branch(inst, _Budget(budget), None)
    else:
        nworkers = min(nworkers, p)
        chunks = [set() for _ in range(nworkers)]
        for v in range(p):
            chunks[v * nworkers // p].add(v)
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            futures = [
                pool.submit(_solve_ci_branch, inst, _Budget(budget), chunk)
                for chunk in chunks
            ]
            results = [f.result() for f in futures]
        nodes = sum(r.nodes for r in results)
        merged = None
        for r in results:
            if r.status is SolveStatus.SOLVED:
                merged = CiSearchResult(SolveStatus.SOLVED, r.solution, nodes)
                break
        if merged is None:
            if any(r.status is SolveStatus.BUDGET_EXCEEDED for r in results):
                merged = CiSearchResult(SolveStatus.BUDGET_EXCEEDED, None, nodes)
            else:
                merged = CiSearchResult(SolveStatus.NO_SOLUTION, None, nodes)
        result = merged
    if result.status is SolveStatus.SOLVED and not verify_ci(inst, result.solution):
        raise AssertionError("internal error: solver produced an invalid solution")
    return result


def solve_gci(inst: GciInstance, budget: int = DEFAULT_BUDGET) -> CiSearchResult:
    """Joint backtracking over (A, B): A row-major, then B column-major with
    the R constraints checked as each B column completes. Desk scale only."""
    n, m, p, field = inst.n, inst.m, inst.field.p, inst.field
    a_free = [
        (i, j) for i in range(n) for j in range(m) if (i + 1, j + 1) not in inst.P
    ]
    b_free_by_col = [
        [i for i in range(m) if (i + 1, c + 1) not in inst.Q] for c in range(n)
    ]
    r_by_col = [[] for _ in range(n)]
    for i, j in inst.R:
        r_by_col[j - 1].append(i - 1)
    A = [[0] * m for _ in range(n)]
    B = [[0] * n for _ in range(m)]
    budget_state = _Budget(budget)

    def fill_a(idx):
        if idx == len(a_free):
            return fill_b_col(0)
        i, j = a_free[idx]
        for val in range(p):
            budget_state.tick()
            A[i][j] = val
            if fill_a(idx + 1):
                return True
        A[i][j] = 0
        return False

    def fill_b_col(c):
        if c == n:
            return True
        free = b_free_by_col[c]

        def fill_entries(k):
            if k == len(free):
                for i in r_by_col[c]:
                    want = 1 if i == c else 0
                    acc = 0
                    for t in range(m):
                        acc += A[i][t] * B[t][c]
                    if acc % p != want:
                        return False
                return fill_b_col(c + 1)
            row = free[k]
            for val in range(p):
                budget_state.tick()
                B[row][c] = val
                if fill_entries(k + 1):
                    return True
            B[row][c] = 0
            return False

        return fill_entries(0)

    try:
        found = fill_a(0)
    except BudgetExceededError as exc:
        return CiSearchResult(SolveStatus.BUDGET_EXCEEDED, None, exc.nodes)
    if not found:
        return CiSearchResult(SolveStatus.NO_SOLUTION, None, budget_state.nodes)
    sol = CiSolution(FieldMatrix.from_rows(A, field), FieldMatrix.from_rows(B, field))
    if not verify_gci(inst, sol):
        raise AssertionError("internal error: GCI solver produced an invalid solution")
    return CiSearchResult(SolveStatus.SOLVED, sol, budget_state.nodes)


# --- GCI -> CI reduction -----------------------------------------------------


@dataclass(frozen=True)
class GciEmbedding:
    """Records which blocks of the padded CI solution carry the GCI matrices:
    A sits in the first n rows and m columns of the left factor, B in the
    first m rows and n columns of the right factor."""

    n: int
    m: int

    def restrict(self, sol: CiSolution) -> CiSolution:
        A = sol.A.submatrix(range(self.n), range(self.m))
        B = sol.B.submatrix(range(self.m), range(self.n))
        return CiSolution(A, B)


def gci_to_ci(inst: GciInstance) -> tuple[CiInstance, GciEmbedding]:
    """Pad a GCI instance to an equivalent CI instance of size n + m.

    Left factor rows 1..n are [A | D] with D diagonal-star, the remaining m
    rows are free; right factor rows 1..m are [B | free], the remaining n
    rows carry the complement-of-R zeros in their first n columns.
    """
    n, m = inst.n, inst.m
    size = n + m
    P2 = set(inst.P)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                P2.add((i, m + j))
    Q2 = set(inst.Q)
    for i, j in inst.R:
        Q2.add((m + i, j))
    return (
        CiInstance(size, inst.field, frozenset(P2), frozenset(Q2)),
        GciEmbedding(n, m),
    )


# --- 3SAT -> GCI reduction ---------------------------------------------------


@dataclass(frozen=True)
class SatGciDecoder:
    """Ties a GCI instance back to its source formula; variable k of the
    formula reads off the first row of A at column 3k+1 (1-based)."""

    formula: Cnf3
    instance: GciInstance


def sat3_to_gci(formula: Cnf3, field: PrimeField) -> tuple[GciInstance, SatGciDecoder]:
    """Build the variable/clause gadget instance A B = C for a 3CNF formula.

    A is (2n+1+m) x (3n+1): the first row interleaves the truth-value slots
    (a_k, b_k, 0) and ends in a star; each variable contributes the 2-row
    block (*,0,*)/(0,*,*); each clause appends a row whose only star is the
    last column. B is (3n+1) x (2n+1+m): column 1 has a lone star in its last
    row, each variable contributes a 3-row/2-column block, and each clause
    column has stars at the last row plus row 3k+1 per positive literal x_k
    and row 3k+2 per negative literal. R pins the upper-left (2n+1)^2 block
    to the identity, the rest of the first row to 0 and the rest of the
    diagonal to 1.
    """
    nv = formula.num_vars
    mc = len(formula.clauses)
    if nv < 1:
        raise ValueError("formula needs at least one variable")
    rows_a = 2 * nv + 1 + mc
    cols_a = 3 * nv + 1

    a_stars = {(1, cols_a)}
    for k in range(nv):
        a_stars.update({(1, 3 * k + 1), (1, 3 * k + 2)})
        a_stars.update({(2 * k + 2, 3 * k + 1), (2 * k + 2, 3 * k + 3)})
        a_stars.update({(2 * k + 3, 3 * k + 2), (2 * k + 3, 3 * k + 3)})
    for j in range(mc):
        a_stars.add((2 * nv + 1 + j + 1, cols_a))

    b_stars = {(cols_a, 1)}
    for k in range(nv):
        col_a, col_b = 2 * k + 2, 2 * k + 3
        b_stars.update({(3 * k + 1, col_a), (3 * k + 3, col_a)})
        b_stars.update({(3 * k + 2, col_b), (3 * k + 3, col_b)})
    for j, clause in enumerate(formula.clauses):
        col = 2 * nv + 1 + j + 1
        b_stars.add((cols_a, col))
        for var, neg in clause:
            b_stars.add((3 * var + (2 if neg else 1), col))

    P = frozenset(
        (i, j)
        for i in range(1, rows_a + 1)
        for j in range(1, cols_a + 1)
        if (i, j) not in a_stars
    )
    Q = frozenset(
        (i, j)
        for i in range(1, cols_a + 1)
        for j in range(1, rows_a + 1)
        if (i, j) not in b_stars
    )
    R = set()
    top = 2 * nv + 1
    for i in range(1, top + 1):
        for j in range(1, top + 1):
            R.add((i, j))
    for j in range(top + 1, rows_a + 1):
        R.add((1, j))
        R.add((j, j))
    inst = GciInstance(rows_a, cols_a, field, P, Q, frozenset(R))
    return inst, SatGciDecoder(formula, inst)


def extract_assignment(decoder: SatGciDecoder, sol: CiSolution):
    """Read the encoded truth assignment off a verified gadget solution:
    x_k is true iff A[1, 3k+1] is nonzero (false covers the both-zero case)."""
    if not verify_gci(decoder.instance, sol):
        raise ValueError("solution does not verify against the gadget instance")
    nv = decoder.formula.num_vars
    return tuple(sol.A.at(0, 3 * k) != 0 for k in range(nv))


def solve_sat_via_ci(formula: Cnf3, field: PrimeField, budget: int = DEFAULT_BUDGET):
    """Full reduction chain: 3SAT -> GCI -> CI -> solve -> decode.

    Returns (CiSearchResult, assignment or None). The assignment is present
    exactly when the CI search found a solution; it always satisfies the
    formula (checked)."""
    gci, decoder = sat3_to_gci(formula, field)
    ci, embedding = gci_to_ci(gci)
    result = solve_ci(ci, budget)
    if result.status is not SolveStatus.SOLVED:
        return result, None
    gci_sol = embedding.restrict(result.solution)
    assignment = extract_assignment(decoder, gci_sol)
    if not eval_assignment(formula, assignment):
        raise AssertionError("internal error: decoded assignment does not satisfy")
    return result, assignment


# --- CNF export (GF(2) only) -------------------------------------------------


@dataclass(frozen=True)
class CiCnfVarMap:
    """DIMACS variable ids: a_vars[i][j] and b_vars[i][j] are the entry
    variables (0-based indices into the matrices)."""

    instance: CiInstance
    a_vars: tuple
    b_vars: tuple
    num_vars: int


def ci_to_cnf(inst: CiInstance) -> tuple[GeneralCnf, CiCnfVarMap]:
    """Tseitin/parity encoding of "A @ B = I with the patterns" over GF(2).

    Entry variables come first (a then b, row-major); each product a_ik*b_kj
    gets a Tseitin variable, and each product entry is an XOR chain with
    fresh parity variables asserted to the identity bit. Pattern entries are
    unit-asserted false.
    """
    if inst.field.p != 2:
        raise ValueError("CNF export is defined over GF(2) only")
    n = inst.n
    a_vars = tuple(tuple(i * n + j + 1 for j in range(n)) for i in range(n))
    b_vars = tuple(tuple(n * n + i * n + j + 1 for j in range(n)) for i in range(n))
    next_var = 2 * n * n
    clauses = []
    for i, j in sorted(inst.P):
        clauses.append((-a_vars[i - 1][j - 1],))
    for i, j in sorted(inst.Q):
        clauses.append((-b_vars[i - 1][j - 1],))
    for i in range(n):
        for j in range(n):
            terms = []
            for k in range(n):
                next_var += 1
                t = next_var
                a, b = a_vars[i][k], b_vars[k][j]
                clauses.extend([(-t, a), (-t, b), (t, -a, -b)])
                terms.append(t)
            acc = terms[0]
            for t in terms[1:]:
                next_var += 1
                d = next_var
                # d <-> acc xor t
                clauses.extend(
                    [(-d, acc, t), (-d, -acc, -t), (d, -acc, t), (d, acc, -t)]
                )
                acc = d
            clauses.append((acc,) if i == j else (-acc,))
    cnf = GeneralCnf(next_var, tuple(clauses))
    return cnf, CiCnfVarMap(inst, a_vars, b_vars, next_var)


def decode_cnf_model(varmap: CiCnfVarMap, model) -> CiSolution:
    """Model -> verified CiSolution; raises if the model does not decode."""
    inst = varmap.instance
    n = inst.n
    A = [[1 if model[varmap.a_vars[i][j]] else 0 for j in range(n)] for i in range(n)]
    B = [[1 if model[varmap.b_vars[i][j]] else 0 for j in range(n)] for i in range(n)]
    sol = CiSolution(
        FieldMatrix.from_rows(A, inst.field), FieldMatrix.from_rows(B, inst.field)
    )
    if not verify_ci(inst, sol):
        raise ValueError("model does not decode to a valid solution")
    return sol


# --- JSON interchange --------------------------------------------------------


def instance_to_json(inst) -> dict:
    if isinstance(inst, CiInstance):
        return {
            "kind": "ci",
            "n": inst.n,
            "p": inst.field.p,
            "P": sorted([list(t) for t in inst.P]),
            "Q": sorted([list(t) for t in inst.Q]),
        }
    if isinstance(inst, GciInstance):
        return {
            "kind": "gci",
            "n": inst.n,
            "m": inst.m,
            "p": inst.field.p,
            "P": sorted([list(t) for t in inst.P]),
            "Q": sorted([list(t) for t in inst.Q]),
            "R": sorted([list(t) for t in inst.R]),
        }
    raise TypeError(f"not an instance: {inst!r}")


def instance_from_json(data: dict):
    kind = data.get("kind")
    field = PrimeField(int(data["p"]))
    pairs = lambda key: frozenset(tuple(map(int, t)) for t in data.get(key, []))
    if kind == "ci":
        return CiInstance(int(data["n"]), field, pairs("P"), pairs("Q"))
    if kind == "gci":
        return GciInstance(
            int(data["n"]), int(data["m"]), field, pairs("P"), pairs("Q"), pairs("R")
        )
    raise ValueError(f"unknown instance kind: {kind!r}")
