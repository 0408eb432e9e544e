"""Staircases in the plane: corner antichains, shifts, the directed shift
distance, and export to graded presentations (including duals).

Coordinates are exact rationals, so every comparison and every distance in
the package is decidable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .fieldcore import PrimeField


def rat(value) -> Fraction:
    """Coerce int/str/Fraction to an exact rational; floats are rejected."""
    if isinstance(value, float):
        raise TypeError("floats are not allowed; use int, str or Fraction")
    return Fraction(value)


@dataclass(frozen=True)
class Point2:
    x: Fraction
    y: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", rat(self.x))
        object.__setattr__(self, "y", rat(self.y))

    def le(self, other: "Point2") -> bool:
        """Product order: componentwise <=."""
        return self.x <= other.x and self.y <= other.y

    def join(self, other: "Point2") -> "Point2":
        """Least common successor."""
        return Point2(max(self.x, other.x), max(self.y, other.y))

    def shifted(self, eps) -> "Point2":
        eps = rat(eps)
        return Point2(self.x - eps, self.y - eps)

    def translated(self, eps) -> "Point2":
        eps = rat(eps)
        return Point2(self.x + eps, self.y + eps)

    def neg(self) -> "Point2":
        return Point2(-self.x, -self.y)

    def sort_key(self):
        return (self.x, self.y)


def point(x, y) -> Point2:
    return Point2(rat(x), rat(y))


@dataclass(frozen=True)
class Staircase:
    """Upward-closed union of quadrants over pairwise incomparable corners,
    stored sorted by increasing x (hence strictly decreasing y)."""

    corners: tuple[Point2, ...]

    def __post_init__(self):
        if not self.corners:
            raise ValueError("a staircase needs at least one corner")
        for a, b in zip(self.corners, self.corners[1:]):
            if not (a.x < b.x and a.y > b.y):
                raise ValueError(
                    "corners must be pairwise incomparable and sorted by x; "
                    "use normalize()"
                )


def normalize(corners) -> Staircase:
    """Drop dominated corners, deduplicate, and sort."""
    pts = sorted(set(corners), key=Point2.sort_key)
    if not pts:
        raise ValueError("a staircase needs at least one corner")
    kept = []
    best_y = None
    for p in pts:
        if best_y is None or p.y < best_y:
            kept.append(p)
            best_y = p.y
    return Staircase(tuple(kept))


def contains(s: Staircase, p: Point2) -> bool:
    """Point membership: some corner lies at or below p."""
    return any(a.le(p) for a in s.corners)


def staircase_subset(s: Staircase, t: Staircase) -> bool:
    """S contained in T; corners decide containment for upward-closed sets."""
    return all(contains(t, a) for a in s.corners)


def shift(s: Staircase, eps) -> Staircase:
    """Shift by (eps, eps): every corner a becomes a - (eps, eps)."""
    eps = rat(eps)
    return Staircase(tuple(a.shifted(eps) for a in s.corners))


def dshift_distance(s: Staircase, t: Staircase) -> Fraction:
    """Directed shift distance: least eps >= 0 with S inside the eps-shift
    of T. Closed form: max over corners a of S of the cheapest corner of T,
    where covering a by corner b costs max(b.x - a.x, b.y - a.y)."""
    worst = Fraction(0)
    for a in s.corners:
        best = None
        for b in t.corners:
            cost = max(b.x - a.x, b.y - a.y)
            if best is None or cost < best:
                best = cost
        if best > worst:
            worst = best
    return worst


@dataclass(frozen=True)
class StaircaseSum:
    """Ordered direct sum of staircase modules over a common field."""

    summands: tuple[Staircase, ...]
    field: PrimeField

    def __post_init__(self):
        if not self.summands:
            raise ValueError("a staircase sum needs at least one summand")

    def shifted(self, eps) -> "StaircaseSum":
        return StaircaseSum(tuple(shift(s, eps) for s in self.summands), self.field)


def staircase_presentation(s: Staircase, field: PrimeField):
    """Graded presentation of the staircase module: one generator per corner,
    and for consecutive corners the relation e_i = e_{i+1} graded at their
    join (a_{i+1}.x, a_i.y)."""
    from .presentation import GradedPresentation, Relation

    k = len(s.corners)
    relations = []
    for i in range(k - 1):
        a, b = s.corners[i], s.corners[i + 1]
        coeffs = [0] * k
        coeffs[i] = 1
        coeffs[i + 1] = field.p - 1
        relations.append(Relation(a.join(b), tuple(coeffs)))
    return GradedPresentation(tuple(s.corners), tuple(relations), field)


def max_abs_coordinate(staircases) -> Fraction:
    out = Fraction(0)
    for s in staircases:
        for a in s.corners:
            out = max(out, abs(a.x), abs(a.y))
    return out


def default_z_cut(staircases) -> Fraction:
    """Finite stand-in for infinity: beyond every coordinate in play."""
    return max_abs_coordinate(staircases) + 8


def dual_staircase(s: Staircase, z_cut, field: PrimeField):
    """Presentation of the dual of the staircase interior: the reflection
    q -> -q of the open staircase, with the generator at (-z, -z) standing in
    for minus infinity.

    Relations sit at the negated corners, the negated joins, and the two
    boundary rays (-(min x), -z) and (-z, -(min y)).
    """
    from .presentation import GradedPresentation, Relation

    z = rat(z_cut)
    if z <= max_abs_coordinate([s]):
        raise ValueError("z_cut must exceed every corner coordinate in absolute value")
    gen = Point2(-z, -z)
    grades = [a.neg() for a in s.corners]
    grades.extend(
        s.corners[i].join(s.corners[i + 1]).neg() for i in range(len(s.corners) - 1)
    )
    grades.append(Point2(-s.corners[0].x, -z))
    grades.append(Point2(-z, -s.corners[-1].y))
    relations = tuple(Relation(g, (1,)) for g in grades)
    return GradedPresentation((gen,), relations, field)


# --- JSON interchange --------------------------------------------------------


def _rat_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def point_to_json(p: Point2):
    return [_rat_str(p.x), _rat_str(p.y)]


def point_from_json(data) -> Point2:
    return Point2(rat(data[0]), rat(data[1]))


def staircase_to_json(s: Staircase) -> dict:
    return {"corners": [point_to_json(a) for a in s.corners]}


def staircase_from_json(data: dict) -> Staircase:
    return normalize([point_from_json(c) for c in data["corners"]])


def sum_to_json(s: StaircaseSum) -> dict:
    return {"p": s.field.p, "summands": [staircase_to_json(x) for x in s.summands]}


def sum_from_json(data: dict) -> StaircaseSum:
    field = PrimeField(int(data["p"]))
    return StaircaseSum(
        tuple(staircase_from_json(x) for x in data["summands"]), field
    )
