"""Finitely presented two-parameter persistence modules.

A presentation is a list of generator grades plus relation rows graded in
the plane; the module at a point p is the span of the generators born at
or below p, modulo the relations born at or below p. Pointwise data (born
sets, relation span, quotient basis) is computed lazily per point and
cached on the presentation object.

Morphisms are stored by generator images: for each source generator, a
coefficient vector over the target's generators supported on those born at
the source generator's grade. Two morphisms are equal exactly when their
generator images agree modulo the target relations at the generator grades,
which is what the deciders check.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .fieldcore import FieldMatrix, PrimeField
from .staircase import Point2, rat


@dataclass(frozen=True)
class Relation:
    grade: Point2
    coeffs: tuple[int, ...]


@dataclass(frozen=True)
class GradedPresentation:
    generators: tuple[Point2, ...]
    relations: tuple[Relation, ...]
    field: PrimeField

    def __post_init__(self):
        p = self.field.p
        fixed = []
        dirty = False
        for rel in self.relations:
            coeffs = rel.coeffs
            if len(coeffs) != len(self.generators):
                raise ValueError("relation width does not match generator count")
            if any(not 0 <= c < p for c in coeffs):
                coeffs = tuple(c % p for c in coeffs)
                dirty = True
            for idx, c in enumerate(coeffs):
                if c and not self.generators[idx].le(rel.grade):
                    raise ValueError(
                        "relation involves a generator not yet born at its grade"
                    )
            fixed.append(Relation(rel.grade, coeffs))
        if dirty:
            object.__setattr__(self, "relations", tuple(fixed))
        object.__setattr__(self, "_space_cache", {})

    def grades(self):
        return [g for g in self.generators] + [r.grade for r in self.relations]


class PointSpace:
    """Pointwise data of a presentation at one grade.

    born: generator indices alive at the point (ascending);
    rel_rows/rel_pivots: RREF of the born relations restricted to born
    columns; quotient_positions: positions into `born` of the greedy unit
    coset representatives; a precomputed solve matrix turns any born-support
    vector into quotient coordinates.
    """

    __slots__ = (
        "grade", "p", "born", "born_index", "rel_rows", "rel_pivots", "dim",
        "quotient_positions", "_coord_matrix",
    )

    def __init__(self, pres: GradedPresentation, grade: Point2):
        p = pres.field.p
        self.grade = grade
        self.p = p
        self.born = [
            i for i, g in enumerate(pres.generators) if g.le(grade)
        ]
        self.born_index = {g: k for k, g in enumerate(self.born)}
        width = len(self.born)
        rel_flat = array("q")
        nrel = 0
        for rel in pres.relations:
            if rel.grade.le(grade):
                rel_flat.extend(rel.coeffs[g] for g in self.born)
                nrel += 1
        self.rel_rows, self.rel_pivots = linalg.rref_flat(rel_flat, nrel, width, p)
        rank = len(self.rel_pivots)
        self.dim = width - rank
        # greedy unit representatives in generator order
        ref = linalg.RefSystem(width, p)
        for i in range(rank):
            ref.insert_residual(self.rel_rows[i * width : (i + 1) * width])
        picked = []
        for pos in range(width):
            if len(picked) == self.dim:
                break
            unit = array("q", bytes(8 * width))
            unit[pos] = 1
            if ref.add(unit) is not None:
                picked.append(pos)
        self.quotient_positions = tuple(picked)
        # solve matrix: v = sum lambda_k e_{picked_k} + sum mu_r rel_r, so
        # [lambda; mu] = inverse(S^T) v with S = [units; relations]
        if width:
            s_t = array("q", bytes(8 * width * width))
            for col, pos in enumerate(picked):
                s_t[pos * width + col] = 1
            for r in range(rank):
                for row in range(width):
                    s_t[row * width + self.dim + r] = self.rel_rows[r * width + row]
            inv = linalg.inverse_flat(s_t, width, p)
            if inv is None:
                raise AssertionError("internal error: coordinate matrix singular")
            self._coord_matrix = inv
        else:
            self._coord_matrix = array("q")

    def restrict(self, full_vector):
        """Full generator-width vector -> born-support vector; nonzero
        coefficients on unborn generators are rejected."""
        out = array("q", bytes(8 * len(self.born)))
        support = set(self.born)
        for idx, val in enumerate(full_vector):
            if val:
                if idx not in support:
                    raise ValueError("vector supported on an unborn generator")
                out[self.born_index[idx]] = val
        return out

    def coords_born(self, born_vector):
        """Quotient coordinates of a born-support vector."""
        width = len(self.born)
        if width == 0:
            return array("q")
        out = linalg.mat_mul_flat(self._coord_matrix, width, width, born_vector, 1, self.p)
        return out[: self.dim]

    def coords(self, full_vector):
        return self.coords_born(self.restrict(full_vector))

    def rep_full(self, k, num_generators):
        """k-th quotient representative as a full generator-width vector."""
        v = array("q", bytes(8 * num_generators))
        v[self.born[self.quotient_positions[k]]] = 1
        return v

    def in_relation_span(self, born_vector) -> bool:
        res = linalg.as_flat(born_vector)
        res = _kernel_reduce(self.rel_rows, self.rel_pivots, len(self.born), res, self.p)
        return linalg.is_zero(res)


def _kernel_reduce(rows, pivots, width, v, p):
    from . import _kernels as K

    return K.ref_reduce(rows, pivots, width, v, p)


def eval_space(pres: GradedPresentation, p: Point2) -> PointSpace:
    cache = getattr(pres, "_space_cache")
    space = cache.get(p)
    if space is None:
        space = PointSpace(pres, p)
        cache[p] = space
    return space


def eval_dim(pres: GradedPresentation, p: Point2) -> int:
    return eval_space(pres, p).dim


def internal_map(pres: GradedPresentation, p: Point2, q: Point2) -> FieldMatrix:
    """Matrix of the structure map M_p -> M_q in the quotient bases."""
    if not p.le(q):
        raise ValueError("internal maps exist only along the order")
    sp, sq = eval_space(pres, p), eval_space(pres, q)
    ngen = len(pres.generators)
    cols = []
    for k in range(sp.dim):
        cols.append(sq.coords(sp.rep_full(k, ngen)))
    flat = tuple(cols[k][r] for r in range(sq.dim) for k in range(sp.dim))
    return FieldMatrix(sq.dim, sp.dim, flat, pres.field)


def direct_sum(presentations) -> GradedPresentation:
    presentations = list(presentations)
    if not presentations:
        raise ValueError("empty direct sum")
    field = presentations[0].field
    if any(m.field != field for m in presentations):
        raise ValueError("field mismatch in direct sum")
    gens = []
    rels = []
    offset = 0
    total = sum(len(m.generators) for m in presentations)
    for m in presentations:
        gens.extend(m.generators)
        for rel in m.relations:
            coeffs = [0] * total
            for idx, c in enumerate(rel.coeffs):
                coeffs[offset + idx] = c
            rels.append(Relation(rel.grade, tuple(coeffs)))
        offset += len(m.generators)
    return GradedPresentation(tuple(gens), tuple(rels), field)


def shift_presentation(pres: GradedPresentation, eps) -> GradedPresentation:
    """The eps-shift: every grade moves by (-eps, -eps)."""
    eps = rat(eps)
    return GradedPresentation(
        tuple(g.shifted(eps) for g in pres.generators),
        tuple(Relation(r.grade.shifted(eps), r.coeffs) for r in pres.relations),
        pres.field,
    )


@dataclass(frozen=True)
class CriticalGrid:
    points: tuple[Point2, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "points", tuple(sorted(set(self.points), key=Point2.sort_key))
        )


def critical_grid(presentations, shifts=()) -> CriticalGrid:
    """All generator/relation grades of the inputs, each also translated by
    every shift in the list, closed under pairwise join."""
    pts = set()
    for m in presentations:
        for g in m.grades():
            pts.add(g)
            for s in shifts:
                pts.add(g.translated(s))
    frontier = set(pts)
    while frontier:
        new = set()
        for a in frontier:
            for b in pts:
                j = a.join(b)
                if j not in pts and j not in new:
                    new.add(j)
        pts |= new
        frontier = new
    return CriticalGrid(tuple(pts))


# --- morphisms ---------------------------------------------------------------


class PresentationMorphism:
    """Morphism given by generator images.

    `gen_images[i]` is a full target-generator-width coefficient tuple for
    the image of source generator i, supported on target generators born at
    the source generator's grade.
    """

    __slots__ = ("source", "target", "gen_images")

    def __init__(self, source, target, gen_images):
        self.source = source
        self.target = target
        self.gen_images = tuple(tuple(v) for v in gen_images)
        if len(self.gen_images) != len(source.generators):
            raise ValueError("one image per source generator required")
        for img in self.gen_images:
            if len(img) != len(target.generators):
                raise ValueError("image width does not match the target")

    def __eq__(self, other):
        return (
            isinstance(other, PresentationMorphism)
            and self.source == other.source
            and self.target == other.target
            and self.gen_images == other.gen_images
        )

    def __hash__(self):
        return hash((id(self.source), id(self.target), self.gen_images))

    def is_valid(self) -> bool:
        """Every source relation maps into the target relation span at its
        grade; this is exactly well-definedness of the morphism."""
        for rel in self.source.relations:
            space = eval_space(self.target, rel.grade)
            w = _combine(self.gen_images, rel.coeffs, self.target.field.p)
            if not space.in_relation_span(space.restrict(w)):
                return False
        return True

    def image_of(self, full_source_vector):
        p = self.target.field.p
        return _combine(self.gen_images, full_source_vector, p)

    def matrix_at(self, pt: Point2) -> FieldMatrix:
        """Matrix M_pt -> N_pt in the stored quotient bases."""
        sm = eval_space(self.source, pt)
        sn = eval_space(self.target, pt)
        ngen = len(self.source.generators)
        cols = []
        for k in range(sm.dim):
            rep = sm.rep_full(k, ngen)
            cols.append(sn.coords(self.image_of(rep)))
        flat = tuple(cols[k][r] for r in range(sn.dim) for k in range(sm.dim))
        return FieldMatrix(sn.dim, sm.dim, flat, self.target.field)

    def compose(self, inner: "PresentationMorphism") -> "PresentationMorphism":
        """self after inner."""
        if inner.target is not self.source and inner.target != self.source:
            raise ValueError("composition mismatch")
        images = [self.image_of(img) for img in inner.gen_images]
        return PresentationMorphism(inner.source, self.target, images)

    def equal_mod_relations(self, other: "PresentationMorphism") -> bool:
        """Equality as morphisms: generator images agree modulo the target
        relations at each source generator grade."""
        if other.source != self.source or other.target != self.target:
            return False
        p = self.target.field.p
        for i, grade in enumerate(self.source.generators):
            diff = tuple(
                (a - b) % p for a, b in zip(self.gen_images[i], other.gen_images[i])
            )
            if not any(diff):
                continue
            space = eval_space(self.target, grade)
            if not space.in_relation_span(space.restrict(diff)):
                return False
        return True

    def is_zero(self) -> bool:
        return self.equal_mod_relations(zero_morphism(self.source, self.target))


def _combine(gen_images, coeffs, p):
    width = len(gen_images[0]) if gen_images else 0
    out = [0] * width
    for c, img in zip(coeffs, gen_images):
        if c:
            for idx, val in enumerate(img):
                if val:
                    out[idx] = (out[idx] + c * val) % p
    return tuple(out)


def identity_morphism(pres: GradedPresentation) -> PresentationMorphism:
    n = len(pres.generators)
    return PresentationMorphism(
        pres, pres, [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    )


def zero_morphism(source, target) -> PresentationMorphism:
    width = len(target.generators)
    return PresentationMorphism(
        source, target, [(0,) * width for _ in source.generators]
    )


def scale_morphism(f: PresentationMorphism, scalar: int) -> PresentationMorphism:
    p = f.target.field.p
    return PresentationMorphism(
        f.source, f.target,
        [tuple(scalar * v % p for v in img) for img in f.gen_images],
    )


def add_morphisms(fs) -> PresentationMorphism:
    fs = list(fs)
    p = fs[0].target.field.p
    width = len(fs[0].target.generators)
    images = []
    for i in range(len(fs[0].source.generators)):
        acc = [0] * width
        for f in fs:
            for idx, val in enumerate(f.gen_images[i]):
                if val:
                    acc[idx] = (acc[idx] + val) % p
        images.append(tuple(acc))
    return PresentationMorphism(fs[0].source, fs[0].target, images)


def hom_space(m: GradedPresentation, n: GradedPresentation):
    """Basis of the morphism space Hom(m, n).

    A morphism is a choice, for each generator of m, of an element of n at
    that grade, such that every relation of m maps to zero at its grade.
    Solving in pointwise quotient coordinates keeps the linear system small;
    the basis is returned as PresentationMorphism objects.
    """
    if m.field != n.field:
        raise ValueError("field mismatch")
    p = m.field.p
    gen_spaces = [eval_space(n, g) for g in m.generators]
    offsets = []
    total = 0
    for sp in gen_spaces:
        offsets.append(total)
        total += sp.dim
    rows_flat = array("q")
    nrows = 0
    for rel in m.relations:
        target_space = eval_space(n, rel.grade)
        if target_space.dim == 0:
            continue
        block = [[0] * total for _ in range(target_space.dim)]
        for i, c in enumerate(rel.coeffs):
            if not c or gen_spaces[i].dim == 0:
                continue
            tmat = internal_map(n, m.generators[i], rel.grade)
            for r in range(target_space.dim):
                for k in range(gen_spaces[i].dim):
                    v = tmat.at(r, k)
                    if v:
                        col = offsets[i] + k
                        block[r][col] = (block[r][col] + c * v) % p
        for r in range(target_space.dim):
            rows_flat.extend(block[r])
            nrows += 1
    basis_vectors = linalg.nullspace_flat(rows_flat, nrows, total, p)
    ngen_n = len(n.generators)
    morphisms = []
    for vec in basis_vectors:
        images = []
        for i, sp in enumerate(gen_spaces):
            acc = [0] * ngen_n
            for k in range(sp.dim):
                coef = vec[offsets[i] + k]
                if coef:
                    rep = sp.rep_full(k, ngen_n)
                    for idx, val in enumerate(rep):
                        if val:
                            acc[idx] = (acc[idx] + coef * val) % p
            images.append(tuple(acc))
        morphisms.append(PresentationMorphism(m, n, images))
    return morphisms


def hom_contains(basis, f: PresentationMorphism) -> bool:
    """Membership of f in the span of a hom basis (as morphisms)."""
    if not basis:
        return f.is_zero()
    p = f.target.field.p
    from itertools import product as _product

    for coeffs in _product(range(p), repeat=len(basis)):
        candidate = add_morphisms(
            [scale_morphism(b, c) for b, c in zip(basis, coeffs)]
        )
        if candidate.equal_mod_relations(f):
            return True
    return False


# --- JSON interchange --------------------------------------------------------


def presentation_to_json(pres: GradedPresentation) -> dict:
    from .staircase import point_to_json

    return {
        "p": pres.field.p,
        "generators": [point_to_json(g) for g in pres.generators],
        "relations": [
            {"grade": point_to_json(r.grade), "coeffs": list(r.coeffs)}
            for r in pres.relations
        ],
    }


def presentation_from_json(data: dict) -> GradedPresentation:
    from .staircase import point_from_json

    field = PrimeField(int(data["p"]))
    gens = tuple(point_from_json(g) for g in data["generators"])
    rels = tuple(
        Relation(point_from_json(r["grade"]), tuple(int(c) for c in r["coeffs"]))
        for r in data.get("relations", [])
    )
    return GradedPresentation(gens, rels, field)
