"""One-sided machinery: eps-trivial kernels and cokernels, s-t-trivial
morphism existence, injections and surjections between staircase sums, the
completion of an interleaving from an injection, and the 3SAT-to-surjection
gadget.

Two routes are implemented and cross-tested everywhere: a combinatorial
fast path for staircase sums (alive-summand profiles; a kernel condition on
staircase sums collapses to pointwise injectivity because their internal
maps are injective, and surjectivity onto a staircase sum is decided at the
target corner points), and a general path on presentations that checks the
zero-map conditions on a join-closed critical grid.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product

from . import linalg
from .ciproblems import BudgetExceededError, DEFAULT_BUDGET
from .fieldcore import FieldMatrix, PrimeField
from .interleaving import (
    InterleavingCertificate,
    MorphismMatrix,
    shift_morphism,
    shift_structure_morphism,
    sum_matrix_morphism,
    sum_presentation,
)
from .presentation import (
    GradedPresentation,
    PresentationMorphism,
    critical_grid,
    direct_sum,
    eval_space,
    internal_map,
    shift_presentation,
)
from .satcore import Cnf3
from .staircase import (
    Point2,
    Staircase,
    StaircaseSum,
    dual_staircase,
    normalize,
    point,
    rat,
    staircase_subset,
)


class Infinite:
    """Distinct unbounded value for the s/t triviality parameters."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"


INF = Infinite()


def _check_param(v):
    if v is INF:
        return v
    v = rat(v)
    if v < 0:
        raise ValueError("triviality parameters must be nonnegative")
    return v


@dataclass(frozen=True)
class TrivialityParams:
    """Kernel bound s and cokernel bound t; INF disables a side."""

    s: object
    t: object

    def __post_init__(self):
        object.__setattr__(self, "s", _check_param(self.s))
        object.__setattr__(self, "t", _check_param(self.t))


class SearchStatus(Enum):
    FOUND = "found"
    NONE = "none"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class OneSidedResult:
    status: SearchStatus
    matrix: MorphismMatrix | None
    nodes: int


# --- general path: triviality on presentations --------------------------------


def kernel_eps_trivial(f: PresentationMorphism, eps) -> bool:
    """ker(f_p) -> ker(f_{p+eps}) is the zero map at every point.

    Checking the join-closed grid of both modules' grades (plus their
    eps-translates) decides the condition everywhere: an arbitrary point
    sees the same born data as the join of the grades below it, and pushing
    through a smaller relation set only helps.
    """
    eps = rat(eps)
    grid = critical_grid([f.source, f.target], shifts=[eps])
    for q in grid.points:
        mat = f.matrix_at(q)
        kernel = linalg.nullspace_flat(
            mat.flat(), mat.rows, mat.cols, f.source.field.p
        )
        if not kernel:
            continue
        step = internal_map(f.source, q, q.translated(eps))
        for vec in kernel:
            pushed = linalg.mat_mul_flat(
                step.flat(), step.rows, step.cols, vec, 1, f.source.field.p
            )
            if not linalg.is_zero(pushed):
                return False
    return True


def cokernel_eps_trivial(f: PresentationMorphism, eps) -> bool:
    """coker(f_p) -> coker(f_{p+eps}) is the zero map at every point, i.e.
    the image of the target's step map lands inside the image of f."""
    eps = rat(eps)
    p = f.target.field.p
    grid = critical_grid([f.source, f.target], shifts=[eps])
    for q in grid.points:
        q_eps = q.translated(eps)
        fmat = f.matrix_at(q_eps)
        step = internal_map(f.target, q, q_eps)
        if step.cols == 0:
            continue
        combined = []
        for r in range(fmat.rows):
            combined.extend(fmat.row(r))
            combined.extend(step.row(r))
        rank_f = linalg.rank_flat(fmat.flat(), fmat.rows, fmat.cols, p)
        rank_c = linalg.rank_flat(
            combined, fmat.rows, fmat.cols + step.cols, p
        )
        if rank_c != rank_f:
            return False
    return True


# --- fast path: alive-summand profiles ----------------------------------------


def _threshold_table(summands, xs, delta):
    """Per summand, the minimal y making it alive at each x (corners shifted
    down-left by delta); None where no corner is in range."""
    tables = []
    for s in summands:
        corners = [(a.x - delta, a.y - delta) for a in s.corners]
        xs_sorted = [c[0] for c in corners]
        prefix_min = []
        best = None
        for _, y in corners:
            best = y if best is None or y < best else best
            prefix_min.append(best)
        row = []
        for x in xs:
            k = bisect_right(xs_sorted, x)
            row.append(prefix_min[k - 1] if k else None)
        tables.append(row)
    return tables


def realized_profiles(views):
    """Realized tuples of alive-summand bitmasks over the plane.

    views: list of (StaircaseSum, delta); the mask of view v at point p has
    bit i set when summand i of the sum is alive at p + (delta, delta).
    Masks are piecewise constant on the grid of shifted corner coordinates,
    so scanning the coordinate product grid realizes every tuple.
    """
    xs = sorted(
        {a.x - d for (sm, d) in views for s in sm.summands for a in s.corners}
    )
    ys = sorted(
        {a.y - d for (sm, d) in views for s in sm.summands for a in s.corners}
    )
    tables = [_threshold_table(sm.summands, xs, d) for (sm, d) in views]
    profiles = set()
    for xi in range(len(xs)):
        col_thresholds = [
            [table[i][xi] for i in range(len(table))] for table in tables
        ]
        for y in ys:
            masks = []
            for thresholds in col_thresholds:
                mask = 0
                for i, thr in enumerate(thresholds):
                    if thr is not None and y >= thr:
                        mask |= 1 << i
                masks.append(mask)
            profiles.add(tuple(masks))
    return profiles


def _submatrix_flat(mat: FieldMatrix, row_mask: int, col_mask: int):
    rows = [j for j in range(mat.rows) if row_mask >> j & 1]
    cols = [i for i in range(mat.cols) if col_mask >> i & 1]
    flat = [mat.at(r, c) for r in rows for c in cols]
    return flat, len(rows), len(cols)


def staircase_injective(m_sum, n_sum, matrix: FieldMatrix, profiles=None) -> bool:
    """Pointwise injectivity of the summand-matrix morphism, which for
    staircase sums is equivalent to eps-trivial kernel for every finite eps
    (their internal maps are injective)."""
    p = matrix.field.p
    if profiles is None:
        profiles = realized_profiles([(m_sum, Fraction(0)), (n_sum, Fraction(0))])
        profiles = {(src, tgt) for src, tgt in profiles}
    seen = set()
    for profile in profiles:
        src, tgt = profile[0], profile[1]
        if not src or (src, tgt) in seen:
            continue
        seen.add((src, tgt))
        flat, nr, nc = _submatrix_flat(matrix, tgt, src)
        if linalg.rank_flat(flat, nr, nc, p) != nc:
            return False
    return True


def staircase_cokernel_trivial(m_sum, n_sum, matrix: FieldMatrix, eps, profiles=None) -> bool:
    """eps-trivial cokernel of the summand-matrix morphism: for every point,
    target summands alive there must lie in the image of the map at the
    eps-translate."""
    eps = rat(eps)
    p = matrix.field.p
    if profiles is None:
        profiles = realized_profiles(
            [(n_sum, Fraction(0)), (m_sum, eps), (n_sum, eps)]
        )
    seen = set()
    for profile in profiles:
        tgt_now, src_eps, tgt_eps = profile[-3], profile[-2], profile[-1]
        key = (tgt_now, src_eps, tgt_eps)
        if not tgt_now or key in seen:
            continue
        seen.add(key)
        flat, nr, nc = _submatrix_flat(matrix, tgt_eps, src_eps)
        rank_f = linalg.rank_flat(flat, nr, nc, p)
        rows_tgt = [j for j in range(matrix.rows) if tgt_eps >> j & 1]
        unit_cols = [j for j in rows_tgt if tgt_now >> j & 1]
        aug = []
        for ridx, j in enumerate(rows_tgt):
            aug.extend(flat[ridx * nc : (ridx + 1) * nc])
            aug.extend(1 if j == u else 0 for u in unit_cols)
        rank_aug = linalg.rank_flat(aug, nr, nc + len(unit_cols), p)
        if rank_aug != rank_f:
            return False
    return True


def staircase_surjective(m_sum, n_sum, matrix: FieldMatrix) -> bool:
    """Surjectivity checked at the target corner points only: pushing a
    corner certificate up keeps its coordinates, so corner surjectivity
    propagates to every point."""
    p = matrix.field.p
    for corner in {a for t in n_sum.summands for a in t.corners}:
        src = 0
        for i, s in enumerate(m_sum.summands):
            if any(b.le(corner) for b in s.corners):
                src |= 1 << i
        tgt = 0
        for j, t in enumerate(n_sum.summands):
            if any(b.le(corner) for b in t.corners):
                tgt |= 1 << j
        flat, nr, nc = _submatrix_flat(matrix, tgt, src)
        if linalg.rank_flat(flat, nr, nc, p) != nr:
            return False
    return True


def containment_pattern(m_sum, n_sum):
    """Free positions (target j, source i) of a plain morphism M -> N."""
    free = [
        [staircase_subset(s, t) for s in m_sum.summands] for t in n_sum.summands
    ]
    return free


def _pattern_matrices(m_sum, n_sum, p):
    """All summand matrices respecting containment, enumerated row-major
    over (target, source) with values ascending."""
    nt, ns = len(n_sum.summands), len(m_sum.summands)
    free = containment_pattern(m_sum, n_sum)
    positions = [(j, i) for j in range(nt) for i in range(ns) if free[j][i]]
    for values in product(range(p), repeat=len(positions)):
        entries = [[0] * ns for _ in range(nt)]
        for (j, i), v in zip(positions, values):
            entries[j][i] = v
        yield FieldMatrix.from_rows(entries, m_sum.field)


def exists_st_trivial_morphism(
    m_sum: StaircaseSum,
    n_sum: StaircaseSum,
    params: TrivialityParams,
    budget: int = DEFAULT_BUDGET,
) -> OneSidedResult:
    """Search for a morphism M -> N with s-trivial kernel and t-trivial
    cokernel over the containment pattern. Both INF parameters make the zero
    morphism a certificate."""
    if m_sum.field != n_sum.field:
        raise ValueError("field mismatch")
    p = m_sum.field.p
    need_kernel = params.s is not INF
    need_coker = params.t is not INF
    base_views = [(m_sum, Fraction(0)), (n_sum, Fraction(0))]
    if need_coker:
        t = params.t
        views = base_views + [(n_sum, Fraction(0)), (m_sum, t), (n_sum, t)]
    else:
        views = base_views
    profiles = realized_profiles(views)
    inj_profiles = {(pr[0], pr[1]) for pr in profiles}
    cok_profiles = {(pr[2], pr[3], pr[4]) for pr in profiles} if need_coker else None
    nodes = 0
    for matrix in _pattern_matrices(m_sum, n_sum, p):
        nodes += 1
        if nodes > budget:
            return OneSidedResult(SearchStatus.BUDGET_EXCEEDED, None, nodes)
        if need_kernel and not staircase_injective(
            m_sum, n_sum, matrix, inj_profiles
        ):
            continue
        if need_coker:
            if params.t == 0:
                if not staircase_surjective(m_sum, n_sum, matrix):
                    continue
            elif not staircase_cokernel_trivial(
                m_sum, n_sum, matrix, params.t, cok_profiles
            ):
                continue
        mm = MorphismMatrix(matrix, len(m_sum.summands), len(n_sum.summands))
        return OneSidedResult(SearchStatus.FOUND, mm, nodes)
    return OneSidedResult(SearchStatus.NONE, None, nodes)


def exists_surjection(
    m_sum: StaircaseSum, n_sum: StaircaseSum, budget: int = DEFAULT_BUDGET
) -> OneSidedResult:
    """Search for a surjective morphism M -> N (0-trivial cokernel)."""
    return _exists_one_sided(m_sum, n_sum, budget, surjection=True)


def exists_injection(
    m_sum: StaircaseSum, n_sum: StaircaseSum, budget: int = DEFAULT_BUDGET
) -> OneSidedResult:
    """Search for an injective morphism M -> N (0-trivial kernel)."""
    return _exists_one_sided(m_sum, n_sum, budget, surjection=False)


def _exists_one_sided(m_sum, n_sum, budget, surjection):
    """Column-major backtracking over pattern-respecting matrices with the
    rank checks fired as soon as their source columns are all assigned."""
    if m_sum.field != n_sum.field:
        raise ValueError("field mismatch")
    p = m_sum.field.p
    nt, ns = len(n_sum.summands), len(m_sum.summands)
    free = containment_pattern(m_sum, n_sum)

    checks = []  # (trigger_col, tgt_mask, src_mask)
    if surjection:
        for corner in sorted(
            {a for t in n_sum.summands for a in t.corners}, key=Point2.sort_key
        ):
            src = sum(
                1 << i
                for i, s in enumerate(m_sum.summands)
                if any(b.le(corner) for b in s.corners)
            )
            tgt = sum(
                1 << j
                for j, t in enumerate(n_sum.summands)
                if any(b.le(corner) for b in t.corners)
            )
            if not tgt:
                continue
            trigger = max((i for i in range(ns) if src >> i & 1), default=-1)
            checks.append((trigger, tgt, src))
    else:
        profiles = realized_profiles([(m_sum, Fraction(0)), (n_sum, Fraction(0))])
        for src, tgt in sorted({(pr[0], pr[1]) for pr in profiles}):
            if not src:
                continue
            trigger = max(i for i in range(ns) if src >> i & 1)
            checks.append((trigger, tgt, src))
    for trigger, tgt, src in checks:
        if trigger < 0:
            # target alive where no source is: no surjection can exist
            return OneSidedResult(SearchStatus.NONE, None, 0)
    by_trigger = [[] for _ in range(ns)]
    for trigger, tgt, src in checks:
        by_trigger[trigger].append((tgt, src))

    entries = [[0] * ns for _ in range(nt)]
    budget_state = {"nodes": 0}

    def passes(tgt, src):
        rows = [j for j in range(nt) if tgt >> j & 1]
        cols = [i for i in range(ns) if src >> i & 1]
        flat = [entries[j][i] for j in rows for i in cols]
        rank = linalg.rank_flat(flat, len(rows), len(cols), p)
        return rank == (len(rows) if surjection else len(cols))

    def fill_col(i):
        if i == ns:
            mm = MorphismMatrix(
                FieldMatrix.from_rows(entries, m_sum.field), ns, nt
            )
            return mm
        rows_free = [j for j in range(nt) if free[j][i]]
        for values in product(range(p), repeat=len(rows_free)):
            budget_state["nodes"] += 1
            if budget_state["nodes"] > budget:
                raise BudgetExceededError(budget_state["nodes"])
            first = next((v for v in values if v), None)
            if first is not None and first != 1:
                continue  # column scaling normalization
            for j in rows_free:
                entries[j][i] = 0
            for j, v in zip(rows_free, values):
                entries[j][i] = v
            if all(passes(tgt, src) for tgt, src in by_trigger[i]):
                found = fill_col(i + 1)
                if found is not None:
                    return found
        for j in rows_free:
            entries[j][i] = 0
        return None

    try:
        found = fill_col(0)
    except BudgetExceededError as exc:
        return OneSidedResult(SearchStatus.BUDGET_EXCEEDED, None, exc.nodes)
    if found is None:
        return OneSidedResult(SearchStatus.NONE, None, budget_state["nodes"])
    return OneSidedResult(SearchStatus.FOUND, found, budget_state["nodes"])


# --- interleaving completion ----------------------------------------------------


def complete_interleaving_from_injection(
    f: PresentationMorphism, eps
) -> InterleavingCertificate:
    """Complete an injective morphism f: M -> N^eps with 2eps-trivial
    cokernel to an eps-interleaving pair (f, g).

    g sends a class n at p to the unique preimage under f at p + eps of the
    2eps-step of n; preconditions are verified and the output pair is
    re-verified before returning.
    """
    eps = rat(eps)
    if not f.is_valid():
        raise ValueError("f is not a morphism")
    if not kernel_eps_trivial(f, 0):
        raise ValueError("f is not injective")
    if not cokernel_eps_trivial(f, 2 * eps):
        raise ValueError("f does not have a 2*eps-trivial cokernel")
    m = f.source
    n_eps = f.target
    n = shift_presentation(n_eps, -eps)
    m_eps = shift_presentation(m, eps)
    p = m.field.p
    ngen_m = len(m.generators)
    images = []
    for j, grade in enumerate(n.generators):
        at = grade.translated(eps)
        fmat = f.matrix_at(at)
        target_space = eval_space(n_eps, at)
        unit = [1 if t == j else 0 for t in range(len(n.generators))]
        rhs = target_space.coords(unit)
        x = linalg.solve_flat(fmat.flat(), fmat.rows, fmat.cols, rhs, p)
        if x is None:
            raise AssertionError("internal error: preimage missing despite cokernel bound")
        source_space = eval_space(m, at)
        acc = [0] * ngen_m
        for k in range(source_space.dim):
            if x[k]:
                rep = source_space.rep_full(k, ngen_m)
                for idx, val in enumerate(rep):
                    if val:
                        acc[idx] = (acc[idx] + x[k] * val) % p
        images.append(tuple(acc))
    g = PresentationMorphism(n, m_eps, images)
    if not g.is_valid():
        raise AssertionError("internal error: completed g is not a morphism")
    g_shift = shift_morphism(g, eps)
    f_shift = shift_morphism(f, eps)
    if not g_shift.compose(f).equal_mod_relations(shift_structure_morphism(m, 2 * eps)):
        raise AssertionError("internal error: g fails the first composite")
    if not f_shift.compose(g).equal_mod_relations(shift_structure_morphism(n, 2 * eps)):
        raise AssertionError("internal error: g fails the second composite")
    return InterleavingCertificate(eps, f, g)


# --- duality ---------------------------------------------------------------------


def dual_sum_presentation(s_sum: StaircaseSum, z_cut) -> GradedPresentation:
    """Direct sum of the dual-staircase presentations (one generator each)."""
    return direct_sum(
        [dual_staircase(s, z_cut, s_sum.field) for s in s_sum.summands]
    )


def dual_matrix_morphism(
    m_sum: StaircaseSum, n_sum: StaircaseSum, matrix: FieldMatrix, z_cut
) -> PresentationMorphism:
    """Dual of the summand-matrix morphism M -> N: the transposed matrix as
    a morphism N* -> M* between the dual presentations (one generator per
    summand, both placed at (-z, -z))."""
    dual_m = dual_sum_presentation(m_sum, z_cut)
    dual_n = dual_sum_presentation(n_sum, z_cut)
    ns = len(m_sum.summands)
    images = []
    for j in range(len(n_sum.summands)):
        images.append(tuple(matrix.at(j, i) for i in range(ns)))
    return PresentationMorphism(dual_n, dual_m, images)


# --- 3SAT -> surjection gadget ----------------------------------------------------


@dataclass(frozen=True)
class SurjectionGadget:
    """Staircase sums M (names A, B, M_i^r) and N (names N1, N2) whose
    surjection existence encodes satisfiability of the source formula."""

    M: StaircaseSum
    N: StaircaseSum
    q: int
    names: tuple[str, ...]
    corner_assignment: tuple  # ((Point2, frozenset of names), ...)


def sat3_to_surjection(formula: Cnf3, field: PrimeField) -> SurjectionGadget:
    """Corner bookkeeping along the antidiagonal (k, -k), one corner per
    element of the label set: a, b, then g_i^r, then g_i^{r,s}, then
    h_j^{y,z,w}. Each label's subset of summand names decides which
    staircases get the corner; the resulting 2 x (nq+2) surjection search is
    equivalent to satisfiability of the formula.
    """
    q = field.p
    nv = formula.num_vars
    m_names = ["A", "B"] + [
        f"M_{i}^{r}" for i in range(1, nv + 1) for r in range(1, q + 1)
    ]
    n_names = ["N1", "N2"]
    assignment = []

    def add(labels):
        assignment.append(frozenset(labels))

    add({"A", "N1"})
    add({"B", "N2"})
    for i in range(1, nv + 1):
        for r in range(1, q + 1):
            add({"A", f"M_{i}^{r}", "N1", "N2"})
    for i in range(1, nv + 1):
        for r in range(1, q + 1):
            for s in range(r + 1, q + 1):
                add({f"M_{i}^{r}", f"M_{i}^{s}", "N1", "N2"})
    for j, clause in enumerate(formula.clauses):
        ordered = sorted(clause)
        index_sets = []
        for var, neg in ordered:
            index_sets.append(list(range(2, q + 1)) if neg else [1])
        for y in index_sets[0]:
            for z in index_sets[1]:
                for w in index_sets[2]:
                    add(
                        {
                            "B",
                            f"M_{ordered[0][0] + 1}^{y}",
                            f"M_{ordered[1][0] + 1}^{z}",
                            f"M_{ordered[2][0] + 1}^{w}",
                            "N1",
                            "N2",
                        }
                    )
    corners = [point(k, -k) for k in range(1, len(assignment) + 1)]
    corner_assignment = tuple(zip(corners, assignment))

    def staircase_for(name):
        pts = [c for c, labels in corner_assignment if name in labels]
        return normalize(pts)

    M = StaircaseSum(tuple(staircase_for(nm) for nm in m_names), field)
    N = StaircaseSum(tuple(staircase_for(nm) for nm in n_names), field)
    return SurjectionGadget(M, N, q, tuple(m_names + n_names), corner_assignment)
