"""Interleaving deciders and distances for staircase sums and general
presentations, the CI-to-modules gadget, and the indecomposable wrap.

For equal-count staircase sums, a morphism between the sums is a scalar
matrix (rows indexed by target summands, columns by source summands) whose
entry may be nonzero only when the source staircase sits inside the
eps-shifted target staircase; a pair of such matrices is an interleaving
exactly when they are mutually inverse. Deciding eps-interleaving is
therefore a CI instance built from the directed-shift-distance pattern.
The general path enumerates hom-space combinations on presentations and is
used as the cross-validating oracle.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product

from . import linalg
from .ciproblems import (
    BudgetExceededError,
    CiInstance,
    DEFAULT_BUDGET,
    SolveStatus,
    solve_ci,
)
from .fieldcore import FieldMatrix
from .presentation import (
    GradedPresentation,
    PresentationMorphism,
    Relation,
    add_morphisms,
    direct_sum,
    eval_space,
    hom_space,
    scale_morphism,
    shift_presentation,
)
from .staircase import (
    Point2,
    Staircase,
    StaircaseSum,
    dshift_distance,
    normalize,
    point,
    rat,
    staircase_presentation,
    staircase_subset,
)


class DecideStatus(Enum):
    YES = "yes"
    NO = "no"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class MorphismMatrix:
    """Scalar matrix of a staircase-sum morphism: rows = target summands,
    columns = source summands."""

    matrix: FieldMatrix
    source_count: int
    target_count: int


@dataclass(frozen=True)
class InterleavingCertificate:
    """eps plus the morphism pair; matrices on the staircase path,
    generator-image morphisms on the presented path."""

    eps: Fraction
    f: object
    g: object


@dataclass(frozen=True)
class InterleavingDecision:
    status: DecideStatus
    certificate: InterleavingCertificate | None
    nodes: int


def distance_matrices(m_sum: StaircaseSum, n_sum: StaircaseSum):
    """(d_s(S_i, T_j))_{ij} and (d_s(T_j, S_i))_{ji} as nested lists."""
    fwd = [
        [dshift_distance(s, t) for t in n_sum.summands] for s in m_sum.summands
    ]
    bwd = [
        [dshift_distance(t, s) for s in m_sum.summands] for t in n_sum.summands
    ]
    return fwd, bwd


def pattern_at(m_sum: StaircaseSum, n_sum: StaircaseSum, eps):
    """Zero patterns of the eps-interleaving CI instance (1-based pairs).

    A nonzero component M_i -> N_j^eps exists exactly when the directed
    shift distance d_s(S_i, T_j) is at most eps, so P forbids pairs with
    d_s(S_i, T_j) > eps and Q forbids (j, i) with d_s(T_j, S_i) > eps.
    """
    if len(m_sum.summands) != len(n_sum.summands):
        raise ValueError("staircase paths require equal summand counts")
    eps = rat(eps)
    fwd, bwd = distance_matrices(m_sum, n_sum)
    n = len(m_sum.summands)
    P = frozenset(
        (i + 1, j + 1) for i in range(n) for j in range(n) if fwd[i][j] > eps
    )
    Q = frozenset(
        (j + 1, i + 1) for j in range(n) for i in range(n) if bwd[j][i] > eps
    )
    return P, Q


def decide_interleaving_staircase(
    m_sum: StaircaseSum, n_sum: StaircaseSum, eps, budget: int = DEFAULT_BUDGET
) -> InterleavingDecision:
    """eps-interleaving decision through the pattern CI instance."""
    if m_sum.field != n_sum.field:
        raise ValueError("field mismatch")
    eps = rat(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    P, Q = pattern_at(m_sum, n_sum, eps)
    n = len(m_sum.summands)
    inst = CiInstance(n, m_sum.field, P, Q)
    result = solve_ci(inst, budget)
    if result.status is SolveStatus.BUDGET_EXCEEDED:
        return InterleavingDecision(DecideStatus.BUDGET_EXCEEDED, None, result.nodes)
    if result.status is SolveStatus.NO_SOLUTION:
        return InterleavingDecision(DecideStatus.NO, None, result.nodes)
    f_mat = MorphismMatrix(result.solution.A.transpose(), n, n)
    g_mat = MorphismMatrix(result.solution.B.transpose(), n, n)
    cert = InterleavingCertificate(eps, f_mat, g_mat)
    return InterleavingDecision(DecideStatus.YES, cert, result.nodes)


def interleaving_candidates(m_sum: StaircaseSum, n_sum: StaircaseSum):
    """Candidate eps values: 0 and every pairwise directed distance.

    Feasibility depends only on the zero pattern, which changes exactly at
    the pairwise d_s values and relaxes as eps grows; at the largest value
    the identity matrices are feasible, so the minimum lives in this set.
    """
    fwd, bwd = distance_matrices(m_sum, n_sum)
    values = {Fraction(0)}
    for row in fwd:
        values.update(row)
    for row in bwd:
        values.update(row)
    return sorted(values)


def interleaving_distance_staircase(
    m_sum: StaircaseSum, n_sum: StaircaseSum, budget: int = DEFAULT_BUDGET
) -> Fraction:
    """Smallest feasible candidate eps, scanned in ascending order."""
    for eps in interleaving_candidates(m_sum, n_sum):
        decision = decide_interleaving_staircase(m_sum, n_sum, eps, budget)
        if decision.status is DecideStatus.BUDGET_EXCEEDED:
            raise BudgetExceededError(decision.nodes)
        if decision.status is DecideStatus.YES:
            return eps
    raise AssertionError("internal error: maximal candidate must interleave")


# --- CI -> staircase modules gadget -------------------------------------------


def ci_to_modules(inst: CiInstance) -> tuple[StaircaseSum, StaircaseSum]:
    """The dichotomy gadget: staircase sums whose interleaving distance is 1
    when the instance is solvable and 3 otherwise.

    Both base staircases run along the antidiagonal through (-t, t) for
    t = -4n^2 .. 4n^2 in steps of 2; the t<0 side of S and the t>0 side of T
    are pre-shifted by (1,1), and the t=0 corner stays put in both. The k-th
    P entry owns the left-side corner at t = 4k-2 (every other corner, so
    modifications never interact); Q entries own the mirrored right-side
    corners. S_i deepens its P(i,j) corners by (2,2) and retracts its Q(j,i)
    corners by (-2,-2); T_j does the opposite, which pins the directed
    distances to 3 on the pattern and 1 elsewhere.
    """
    n = inst.n
    bound = 4 * n * n
    s_base = {}
    t_base = {}
    for t in range(-bound, bound + 1, 2):
        base = point(-t, t)
        shifted = point(-t - 1, t - 1)
        s_base[t] = shifted if t < 0 else base
        t_base[t] = shifted if t > 0 else base

    p_slot = {}
    for k, entry in enumerate(sorted(inst.P), start=1):
        p_slot[entry] = 4 * k - 2
    q_slot = {}
    for k, entry in enumerate(sorted(inst.Q), start=1):
        q_slot[entry] = -(4 * k - 2)

    def deepen(pt: Point2) -> Point2:
        return pt.shifted(2)

    def retract(pt: Point2) -> Point2:
        return pt.shifted(-2)

    s_summands = []
    for i in range(1, n + 1):
        corners = dict(s_base)
        for (pi, pj), t in p_slot.items():
            if pi == i:
                corners[t] = deepen(corners[t])
        for (qj, qi), t in q_slot.items():
            if qi == i:
                corners[t] = retract(corners[t])
        s_summands.append(normalize(corners.values()))
    t_summands = []
    for j in range(1, n + 1):
        corners = dict(t_base)
        for (pi, pj), t in p_slot.items():
            if pj == j:
                corners[t] = retract(corners[t])
        for (qj, qi), t in q_slot.items():
            if qj == j:
                corners[t] = deepen(corners[t])
        t_summands.append(normalize(corners.values()))
    return (
        StaircaseSum(tuple(s_summands), inst.field),
        StaircaseSum(tuple(t_summands), inst.field),
    )


# --- staircase sums as presentations ------------------------------------------


def sum_presentation(s_sum: StaircaseSum) -> GradedPresentation:
    return direct_sum(
        [staircase_presentation(s, s_sum.field) for s in s_sum.summands]
    )


def _gen_offsets(s_sum: StaircaseSum):
    offsets = []
    total = 0
    for s in s_sum.summands:
        offsets.append(total)
        total += len(s.corners)
    return offsets, total


def sum_matrix_morphism(
    m_sum: StaircaseSum,
    n_sum: StaircaseSum,
    matrix: FieldMatrix,
    source_pres: GradedPresentation | None = None,
    target_pres: GradedPresentation | None = None,
) -> PresentationMorphism:
    """Presentation morphism of a summand scalar matrix (rows = target
    summands, cols = source summands). A nonzero scalar requires containment
    of the source staircase in the target staircase; the image of a corner
    generator is the class of the target summand at that corner, represented
    by the first born corner generator."""
    if matrix.rows != len(n_sum.summands) or matrix.cols != len(m_sum.summands):
        raise ValueError("matrix shape does not match the summand counts")
    source = source_pres if source_pres is not None else sum_presentation(m_sum)
    target = target_pres if target_pres is not None else sum_presentation(n_sum)
    n_offsets, n_total = _gen_offsets(n_sum)
    images = []
    for i, s in enumerate(m_sum.summands):
        for corner in s.corners:
            acc = [0] * n_total
            for j, t in enumerate(n_sum.summands):
                c = matrix.at(j, i)
                if not c:
                    continue
                rep = None
                for idx, b in enumerate(t.corners):
                    if b.le(corner):
                        rep = n_offsets[j] + idx
                        break
                if rep is None:
                    raise ValueError(
                        "nonzero component without staircase containment"
                    )
                acc[rep] = (acc[rep] + c) % n_sum.field.p
            images.append(tuple(acc))
    return PresentationMorphism(source, target, images)


# --- presented-path decider ----------------------------------------------------


def _coords_of_column(space, mat_images, col, ngen):
    full = [row[col] for row in mat_images]
    return space.coords(full)


def decide_interleaving_presented(
    m: GradedPresentation, n: GradedPresentation, eps, budget: int = DEFAULT_BUDGET
) -> InterleavingDecision:
    """eps-interleaving decision on presentations.

    Enumerates f over the hom space Hom(m, n^eps) coefficient by coefficient
    and solves linearly for a partner g with both composites equal to the
    2eps shift; equality of morphisms is checked on generator classes, which
    determines them. Budget guards the p^(dim+dim) combination count.
    """
    if m.field != n.field:
        raise ValueError("field mismatch")
    eps = rat(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    p = m.field.p
    n_eps = shift_presentation(n, eps)
    m_eps = shift_presentation(m, eps)
    m_2eps = shift_presentation(m, 2 * eps)
    n_2eps = shift_presentation(n, 2 * eps)
    f_basis = hom_space(m, n_eps)
    g_basis = hom_space(n, m_eps)
    r, s = len(f_basis), len(g_basis)
    if p ** (r + s) > budget:
        return InterleavingDecision(DecideStatus.BUDGET_EXCEEDED, None, p ** (r + s))

    ngen_m = len(m.generators)
    ngen_n = len(n.generators)
    # image matrices: rows = target generators, cols = source generators
    f_mats = [
        [[fb.gen_images[i][t] for i in range(ngen_m)] for t in range(ngen_n)]
        for fb in f_basis
    ]
    g_mats = [
        [[gb.gen_images[j][t] for j in range(ngen_n)] for t in range(ngen_m)]
        for gb in g_basis
    ]

    def matmul(a, b, rows, inner, cols):
        out = [[0] * cols for _ in range(rows)]
        for i in range(rows):
            ai = a[i]
            oi = out[i]
            for k in range(inner):
                v = ai[k]
                if v:
                    bk = b[k]
                    for j in range(cols):
                        if bk[j]:
                            oi[j] = (oi[j] + v * bk[j]) % p
        return out

    # precomputed quotient coordinates of (G_b F_a) e_i and (F_a G_b) e_j
    m_spaces = [eval_space(m_2eps, g) for g in m.generators]
    n_spaces = [eval_space(n_2eps, g) for g in n.generators]
    gf_coords = [[None] * s for _ in range(r)]
    fg_coords = [[None] * s for _ in range(r)]
    for a in range(r):
        for b in range(s):
            gf = matmul(g_mats[b], f_mats[a], ngen_m, ngen_n, ngen_m)
            fg = matmul(f_mats[a], g_mats[b], ngen_n, ngen_m, ngen_n)
            gf_coords[a][b] = [
                _coords_of_column(m_spaces[i], gf, i, ngen_m) for i in range(ngen_m)
            ]
            fg_coords[a][b] = [
                _coords_of_column(n_spaces[j], fg, j, ngen_n) for j in range(ngen_n)
            ]
    rhs_m = [
        m_spaces[i].coords([1 if t == i else 0 for t in range(ngen_m)])
        for i in range(ngen_m)
    ]
    rhs_n = [
        n_spaces[j].coords([1 if t == j else 0 for t in range(ngen_n)])
        for j in range(ngen_n)
    ]
    total_rows = sum(sp.dim for sp in m_spaces) + sum(sp.dim for sp in n_spaces)

    nodes = 0
    for lam in product(range(p), repeat=r):
        nodes += 1
        mat = array("q", bytes(8 * total_rows * s)) if s else array("q")
        rhs = array("q", bytes(8 * total_rows))
        row0 = 0
        for i in range(ngen_m):
            d = m_spaces[i].dim
            for b in range(s):
                for a in range(r):
                    if lam[a]:
                        col = gf_coords[a][b][i]
                        for t in range(d):
                            if col[t]:
                                idx = (row0 + t) * s + b
                                mat[idx] = (mat[idx] + lam[a] * col[t]) % p
            for t in range(d):
                rhs[row0 + t] = rhs_m[i][t]
            row0 += d
        for j in range(ngen_n):
            d = n_spaces[j].dim
            for b in range(s):
                for a in range(r):
                    if lam[a]:
                        col = fg_coords[a][b][j]
                        for t in range(d):
                            if col[t]:
                                idx = (row0 + t) * s + b
                                mat[idx] = (mat[idx] + lam[a] * col[t]) % p
            for t in range(d):
                rhs[row0 + t] = rhs_n[j][t]
            row0 += d
        if s:
            mu = linalg.solve_flat(mat, total_rows, s, rhs, p)
            if mu is None:
                continue
        else:
            if any(rhs):
                continue
            mu = array("q")
        f = _combo(f_basis, lam, m, n_eps)
        g = _combo(g_basis, mu, n, m_eps)
        if not _verify_interleaving_pair(f, g, m, n, eps):
            raise AssertionError("internal error: solved pair failed verification")
        cert = InterleavingCertificate(eps, f, g)
        return InterleavingDecision(DecideStatus.YES, cert, nodes)
    return InterleavingDecision(DecideStatus.NO, None, nodes)


def _combo(basis, coeffs, source, target):
    terms = [scale_morphism(b, c) for b, c in zip(basis, coeffs) if c]
    if not terms:
        from .presentation import zero_morphism

        return zero_morphism(source, target)
    return add_morphisms(terms)


def shift_morphism(f: PresentationMorphism, eps) -> PresentationMorphism:
    """The eps-shift of a morphism: same generator images between the
    shifted presentations."""
    return PresentationMorphism(
        shift_presentation(f.source, eps),
        shift_presentation(f.target, eps),
        f.gen_images,
    )


def shift_structure_morphism(m: GradedPresentation, eps) -> PresentationMorphism:
    """Sh_M(eps): the canonical morphism M -> M^eps on identity images."""
    n = len(m.generators)
    return PresentationMorphism(
        m,
        shift_presentation(m, eps),
        [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)],
    )


def _verify_interleaving_pair(f, g, m, n, eps) -> bool:
    if not f.is_valid() or not g.is_valid():
        return False
    g_shift = shift_morphism(g, eps)
    f_shift = shift_morphism(f, eps)
    comp_m = g_shift.compose(f)
    comp_n = f_shift.compose(g)
    return comp_m.equal_mod_relations(
        shift_structure_morphism(m, 2 * eps)
    ) and comp_n.equal_mod_relations(shift_structure_morphism(n, 2 * eps))


# --- indecomposable wrap --------------------------------------------------------


def wrap_anchor(s_sum: StaircaseSum) -> Fraction:
    """Default wrap anchor x: one past the largest corner coordinate."""
    out = None
    for s in s_sum.summands:
        for a in s.corners:
            m = max(a.x, a.y)
            out = m if out is None else max(out, m)
    return out + 1


def indecomposable_wrap(s_sum: StaircaseSum, x=None) -> GradedPresentation:
    """Wrap a staircase sum into an indecomposable module.

    Beyond the anchor point u = (x, x) the module is collapsed through a
    ladder of unit rectangles along the antidiagonal: at grades s_i with
    s_i = x + 7 + i/(n+1), rectangle i keeps a single surviving class (the
    i-th projection for i >= 1, the sum of all coordinates for i = 0) and
    everything dies past the rectangle corners. Wrapping two sums for a
    comparison must use a common x so the ladders align.
    """
    n = len(s_sum.summands)
    if n == 0:
        raise ValueError("cannot wrap an empty sum")
    base = sum_presentation(s_sum)
    x = wrap_anchor(s_sum) if x is None else rat(x)
    offsets, total = _gen_offsets(s_sum)
    rep = offsets  # first corner generator per summand

    def s_coord(i: int) -> Fraction:
        return x + 7 + Fraction(i, n + 1)

    relations = list(base.relations)

    def unit_row(idx, coeff=1):
        row = [0] * total
        row[idx] = coeff % s_sum.field.p
        return row

    # rectangle 0 at (s_0, s_n): kernel of the coordinate sum
    grade = Point2(s_coord(0), s_coord(n))
    for j in range(1, n):
        row = [0] * total
        row[rep[j]] = 1
        row[rep[0]] = s_sum.field.p - 1
        relations.append(Relation(grade, tuple(row)))
    # rectangle i at (s_i, s_{n-i}): kernel of the i-th projection
    for i in range(1, n + 1):
        grade = Point2(s_coord(i), s_coord(n - i))
        for j in range(n):
            if j != i - 1:
                relations.append(Relation(grade, tuple(unit_row(rep[j]))))
    # zero corners (s_i, s_{n+1-i}): kill the survivor
    for i in range(0, n + 2):
        grade = Point2(s_coord(i), s_coord(n + 1 - i))
        survivor = min(max(i, 1), n) - 1
        relations.append(Relation(grade, tuple(unit_row(rep[survivor]))))
    return GradedPresentation(base.generators, tuple(relations), s_sum.field)
