"""Ideal points of the product X1 x X2 with the max metric.

An ideal point is either singular, the Busemann function of one factor, or
regular, ``z -> max{b_xi(z1), b_xi2(z2) - C}`` for a pair of boundary points and
a real offset ``C``.  Horofunction values are normalised to vanish at the base
pair, so ``C < 0`` subtracts ``-C``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence, Union

import numpy as np

from . import free_group_tree as ft
from . import hyperbolic_plane as hp
from .spaces import H2Space, Space, TreeSpace, to_json_value


@dataclass(frozen=True)
class ProductPoint:
    x: Any
    y: Any

    def to_json(self):
        return [to_json_value(self.x), to_json_value(self.y)]


@dataclass(frozen=True)
class BasePair:
    o: Any
    o2: Any


@dataclass(frozen=True)
class Singular:
    factor: int
    xi: Any

    def __post_init__(self):
        if self.factor not in (1, 2):
            raise ValueError(f"factor must be 1 or 2, got {self.factor}")

    def to_json(self):
        return {"kind": "singular", "factor": self.factor, "xi": to_json_value(self.xi)}


@dataclass(frozen=True)
class Regular:
    xi: Any
    xi2: Any
    c: Any

    def __post_init__(self):
        if not math.isfinite(float(self.c)):
            raise ValueError("regular points need a finite offset C")

    def to_json(self):
        return {"kind": "regular", "xi": to_json_value(self.xi),
                "xi2": to_json_value(self.xi2), "c": to_json_value(self.c)}


@dataclass(frozen=True)
class Undecided:
    reason: str

    def to_json(self):
        return {"kind": "undecided", "reason": self.reason}


MaxBoundaryPoint = Union[Singular, Regular]


@dataclass(frozen=True)
class JoinPoint:
    """Point ``(xi, xi2, s)`` of the join; ``xi2`` is unused at ``s = 1`` and ``xi`` at ``s = 0``."""

    xi: Any
    xi2: Any
    s: float


def sigma(c: float) -> float:
    return 0.5 * (1.0 + math.tanh(float(c) / 2.0))


def sigma_inverse(s: float) -> float:
    return 2.0 * math.atanh(2.0 * s - 1.0)


def join_coordinates(b: MaxBoundaryPoint) -> JoinPoint:
    if isinstance(b, Singular):
        return JoinPoint(b.xi, None, 1.0) if b.factor == 1 else JoinPoint(None, b.xi, 0.0)
    return JoinPoint(b.xi, b.xi2, sigma(b.c))


def from_join(j: JoinPoint) -> MaxBoundaryPoint:
    if j.s >= 1.0:
        return Singular(1, j.xi)
    if j.s <= 0.0:
        return Singular(2, j.xi2)
    return Regular(j.xi, j.xi2, sigma_inverse(j.s))


def boundary_point_from_json(obj, s1: Space, s2: Space) -> MaxBoundaryPoint:
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "singular":
        factor = int(obj["factor"])
        space = s1 if factor == 1 else s2
        return Singular(factor, space.boundary_from_json(obj["xi"]))
    if kind == "regular":
        c = obj["c"]
        c = ft.Fraction(str(c)) if s1.exact and s2.exact else float(c)
        return Regular(s1.boundary_from_json(obj["xi"]), s2.boundary_from_json(obj["xi2"]), c)
    raise ValueError(f"not a max-boundary point: {obj!r}")


# ---------------------------------------------------------------------------


@dataclass
class ClassifyParams:
    tail_fraction: float = 0.25
    gap_tol: float | None = None
    gap_threshold: float | None = None
    direction_tol: float = 1e-6
    divergence_radius: float = 5.0


class MaxProduct:
    """The product ``s1 x s2`` with the max metric."""

    def __init__(self, s1: Space, s2: Space):
        self.s1 = s1
        self.s2 = s2

    def __repr__(self):
        return f"MaxProduct({self.s1!r}, {self.s2!r})"

    @property
    def exact(self) -> bool:
        return self.s1.exact and self.s2.exact

    def space(self, factor: int) -> Space:
        return self.s1 if factor == 1 else self.s2

    def dmax(self, p: ProductPoint, q: ProductPoint):
        return max(self.s1.distance(p.x, q.x), self.s2.distance(p.y, q.y))

    def horofunction_value(self, b: MaxBoundaryPoint, base: BasePair, z: ProductPoint):
        if isinstance(b, Singular):
            if b.factor == 1:
                return self.s1.busemann(b.xi, base.o, z.x)
            return self.s2.busemann(b.xi, base.o2, z.y)
        b1 = self.s1.busemann(b.xi, base.o, z.x)
        b2 = self.s2.busemann(b.xi2, base.o2, z.y)
        return max(b1, b2 - b.c) - max(0, -b.c)

    def rebase(self, b: MaxBoundaryPoint, old: BasePair, new: BasePair) -> MaxBoundaryPoint:
        if isinstance(b, Singular) or old == new:
            return b
        c = (b.c + self.s1.busemann(b.xi, old.o, new.o)
             - self.s2.busemann(b.xi2, old.o2, new.o2))
        return Regular(b.xi, b.xi2, c)

    def boundary_action(self, g1, g2, b: MaxBoundaryPoint, base: BasePair) -> MaxBoundaryPoint:
        if isinstance(b, Singular):
            g = g1 if b.factor == 1 else g2
            return Singular(b.factor, self.space(b.factor).apply(g, b.xi))
        s1, s2 = self.s1, self.s2
        c = (b.c + s1.busemann(b.xi, base.o, s1.apply(s1.inverse(g1), base.o))
             - s2.busemann(b.xi2, base.o2, s2.apply(s2.inverse(g2), base.o2)))
        return Regular(s1.apply(g1, b.xi), s2.apply(g2, b.xi2), c)

    def act(self, g1, g2, p: ProductPoint) -> ProductPoint:
        return ProductPoint(self.s1.apply(g1, p.x), self.s2.apply(g2, p.y))

    def same_point(self, a: MaxBoundaryPoint, b: MaxBoundaryPoint, c_tol: float = 1e-6,
                   dir_tol: float | None = None) -> bool:
        if type(a) is not type(b):
            return False
        if isinstance(a, Singular):
            return (a.factor == b.factor
                    and self.space(a.factor).boundary_equal(a.xi, b.xi, dir_tol))
        return (self.s1.boundary_equal(a.xi, b.xi, dir_tol)
                and self.s2.boundary_equal(a.xi2, b.xi2, dir_tol)
                and abs(a.c - b.c) <= c_tol)

    # -- classification ----------------------------------------------------

    def gaps(self, seq: Sequence[ProductPoint], base: BasePair) -> list:
        return [self.s1.distance(p.x, base.o) - self.s2.distance(p.y, base.o2) for p in seq]

    def classify_sequence(self, seq: Sequence[ProductPoint], base: BasePair,
                          params: ClassifyParams | None = None):
        """Decide the limit of a diverging sequence from its tail.

        Returns ``Regular``, ``Singular`` or ``Undecided``.  Raises ``ValueError``
        when the tail stays within ``divergence_radius`` of the base pair.
        """
        p = params or ClassifyParams()
        n = len(seq)
        if n < 4:
            raise ValueError("need at least 4 sequence points")
        start = min(int(math.floor(n * (1.0 - p.tail_fraction))), n - 2)
        tail = list(seq[start:])
        base_pt = ProductPoint(base.o, base.o2)
        reach = min(float(self.dmax(q, base_pt)) for q in tail)
        if reach <= p.divergence_radius:
            raise ValueError(f"sequence is not diverging: tail stays within "
                             f"{reach:.6g} <= {p.divergence_radius} of the base")
        gap_tol = p.gap_tol if p.gap_tol is not None else (0 if self.exact else 1e-6)
        threshold = p.gap_threshold if p.gap_threshold is not None else 10.0 * math.log10(n)
        gaps = self.gaps(tail, base)
        spread = max(gaps) - min(gaps)

        if spread <= gap_tol:
            d1 = _direction(self.s1, [q.x for q in tail], base.o, p.direction_tol)
            d2 = _direction(self.s2, [q.y for q in tail], base.o2, p.direction_tol)
            if isinstance(d1, str):
                return Undecided(f"factor 1: {d1}")
            if isinstance(d2, str):
                return Undecided(f"factor 2: {d2}")
            return Regular(d1, d2, gaps[-1])

        mags = [abs(g) for g in gaps]
        growing = all(b > a for a, b in zip(mags, mags[1:]))
        same_sign = all(g > 0 for g in gaps) or all(g < 0 for g in gaps)
        if growing and same_sign and mags[-1] > threshold:
            factor = 1 if gaps[-1] > 0 else 2
            pts = [q.x if factor == 1 else q.y for q in tail]
            o = base.o if factor == 1 else base.o2
            d = _direction(self.space(factor), pts, o, p.direction_tol)
            if isinstance(d, str):
                return Undecided(f"factor {factor}: {d}")
            return Singular(factor, d)
        if growing and same_sign:
            return Undecided(f"gap grows but stays below threshold {threshold:.6g}")
        return Undecided(f"gap is not Cauchy over the tail (spread {float(spread):.6g})")


def _direction(space: Space, pts: list, o, tol: float):
    """Boundary limit of the points, or a string explaining why none was found."""
    if isinstance(space, H2Space):
        try:
            angles = [hp.limit_direction(x, o) for x in pts]
        except ValueError as exc:
            return str(exc)
        ref = angles[-1]
        worst = max(hp.angular_distance(a, ref) for a in angles)
        if worst > tol:
            return f"direction not Cauchy (angular spread {worst:.3g})"
        return ref
    if isinstance(space, TreeSpace):
        # the part shared by the last two points is what the tail has settled on
        words = [x.vertex + (x.edge or "") for x in pts[-2:]]
        k = ft.common_prefix_length(words[0], words[-1])
        end = ft.infer_end(words[-1][:k] if k else words[-1], space.rank)
        if end is None:
            return "no eventually periodic pattern in the tail"
        prods = [space.gromov_product(x, end, space.origin) for x in pts]
        if any(b < a for a, b in zip(prods, prods[1:])) or not prods[-1] > prods[0]:
            return "tail does not approach the inferred end"
        return end
    raise TypeError(f"unsupported space {space!r}")


def sequence_consistency(prod: MaxProduct, seq: Sequence[ProductPoint], base: BasePair,
                         b: MaxBoundaryPoint, grid: Sequence[ProductPoint]) -> float:
    """Max over the grid of ``|dmax(seq_N, z) - dmax(seq_N, base) - h_b(z)|`` at the last point."""
    last = seq[-1]
    base_pt = ProductPoint(base.o, base.o2)
    ref = prod.dmax(last, base_pt)
    worst = 0.0
    for z in grid:
        val = prod.dmax(last, z) - ref - prod.horofunction_value(b, base, z)
        worst = max(worst, abs(float(val)))
    return worst


def horofunction_grid(prod: MaxProduct, b: MaxBoundaryPoint, base: BasePair,
                      grid: Sequence[ProductPoint]) -> np.ndarray:
    return np.array([float(prod.horofunction_value(b, base, z)) for z in grid])
