"""Uniform adapters over the two model spaces.

Generic code (products, projections, spectra) talks to a ``Space`` object and
never inspects point types directly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Any

from . import free_group_tree as ft
from . import hyperbolic_plane as hp


class Space:
    """Interface shared by the hyperbolic plane and the free-group trees."""

    name: str
    exact: bool
    origin: Any

    def distance(self, a, b): ...
    def midpoint(self, a, b): ...
    def point_along(self, a, b, t): ...
    def point_toward(self, x, xi, t): ...
    def busemann(self, xi, base, z): ...
    def gromov_product(self, x, y, o): ...
    def apply(self, g, x): ...
    def compose(self, g, h): ...
    def inverse(self, g): ...
    def identity(self): ...
    def translation_length(self, g): ...
    def project_to_geodesic(self, forward, backward, o): ...
    def boundary_equal(self, a, b, tol=None) -> bool: ...
    def is_boundary(self, x) -> bool: ...

    def as_number(self, v):
        return v


class H2Space(Space):
    name = "h2"
    exact = False
    default_tol = 1e-9

    def __init__(self):
        self.origin = hp.HPoint(0.0, 0.0)

    def __repr__(self):
        return "H2Space()"

    def __eq__(self, other):
        return isinstance(other, H2Space)

    def __hash__(self):
        return hash("h2")

    def distance(self, a, b):
        return hp.distance(a, b)

    def midpoint(self, a, b):
        return hp.midpoint(a, b)

    def point_along(self, a, b, t):
        return hp.point_along(a, b, t)

    def point_toward(self, x, xi, t):
        return hp.point_toward(x, xi, t)

    def busemann(self, xi, base, z):
        return hp.busemann(xi, base, z)

    def gromov_product(self, x, y, o):
        return hp.gromov_product(x, y, o)

    def apply(self, g, x):
        return hp.apply(g, x)

    def compose(self, g, h):
        return hp.compose(g, h)

    def inverse(self, g):
        return hp.inverse(g)

    def identity(self):
        return hp.IDENTITY

    def translation_length(self, g):
        return hp.translation_length(g)

    def project_to_geodesic(self, forward, backward, o):
        return hp.project_to_geodesic(forward, backward, o)

    def boundary_equal(self, a, b, tol=None):
        return hp.same_boundary(a, b, self.default_tol if tol is None else tol)

    def boundary_separation(self, a, b):
        return hp.angular_distance(a, b)

    def is_boundary(self, x):
        return isinstance(x, hp.HBoundary)

    def as_number(self, v):
        return float(v)

    # serialisation
    def point_from_json(self, obj):
        if not isinstance(obj, (list, tuple)) or len(obj) != 2:
            raise ValueError(f"H2 point must be [u, v], got {obj!r}")
        return hp.HPoint(float(obj[0]), float(obj[1]))

    def boundary_from_json(self, obj):
        if not isinstance(obj, dict) or "angle" not in obj:
            raise ValueError(f"H2 boundary point must be {{'angle': ...}}, got {obj!r}")
        return hp.HBoundary(float(obj["angle"]))

    def isometry_from_json(self, obj):
        return hp.HIsometry.from_matrix(obj)


class TreeSpace(Space):
    exact = True
    default_tol = 0

    def __init__(self, rank: int = 2):
        ft.alphabet(rank)
        self.rank = rank
        self.name = f"tree{rank}"
        self.origin = ft.vertex("", rank)

    def __repr__(self):
        return f"TreeSpace({self.rank})"

    def __eq__(self, other):
        return isinstance(other, TreeSpace) and other.rank == self.rank

    def __hash__(self):
        return hash(("tree", self.rank))

    def distance(self, a, b):
        return ft.tree_distance(a, b)

    def midpoint(self, a, b):
        return ft.tree_midpoint(a, b)

    def point_along(self, a, b, t):
        return ft.point_along(a, b, t)

    def point_toward(self, x, xi, t):
        return ft.point_toward_end(x, xi, t)

    def busemann(self, xi, base, z):
        return ft.tree_busemann(xi, base, z)

    def gromov_product(self, x, y, o):
        return ft.tree_gromov_product(x, y, o)

    def apply(self, g, x):
        return ft.tree_apply(g, x)

    def compose(self, g, h):
        return g.compose(h)

    def inverse(self, g):
        return g.inverse()

    def identity(self):
        return ft.TreeIsometry("", self.rank)

    def translation_length(self, g):
        return ft.tree_translation_length(g)

    def project_to_geodesic(self, forward, backward, o):
        gp = ft.tree_gromov_product(forward, backward, o)
        if gp == math.inf:
            raise ValueError("geodesic endpoints must differ")
        return ft.point_toward_end(o, forward, gp)

    def boundary_equal(self, a, b, tol=None):
        return a == b

    def boundary_separation(self, a, b):
        """exp(-(a|b)_e), the visual distance on ends."""
        if a == b:
            return 0.0
        return math.exp(-float(ft.tree_gromov_product(a, b, self.origin)))

    def is_boundary(self, x):
        return isinstance(x, ft.TreeEnd)

    def point_from_json(self, obj):
        if isinstance(obj, str):
            return ft.vertex(obj, self.rank)
        try:
            off = Fraction(str(obj.get("offset", "0")))
            edge = obj.get("edge")
            if off == 0:
                return ft.vertex(obj["vertex"], self.rank)
            return ft.point_on_edge(obj["vertex"], edge, off, self.rank)
        except (AttributeError, KeyError, TypeError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed tree point {obj!r}") from exc

    def boundary_from_json(self, obj):
        if not isinstance(obj, dict) or "period" not in obj:
            raise ValueError(f"tree end must be {{'prefix', 'period'}}, got {obj!r}")
        return ft.TreeEnd(obj.get("prefix", ""), obj["period"], self.rank)

    def isometry_from_json(self, obj):
        if not isinstance(obj, str):
            raise ValueError(f"tree isometry must be a word string, got {obj!r}")
        return ft.TreeIsometry(obj, self.rank)


H2 = H2Space()


def space_from_name(name: str, rank: int = 2) -> Space:
    if name == "h2":
        return H2
    if name == "tree":
        return TreeSpace(rank)
    if name.startswith("tree") and name[4:].isdigit():
        return TreeSpace(int(name[4:]))
    raise ValueError(f"unknown space {name!r}")


def to_json_value(x):
    """JSON form of points, boundary points, isometries and numbers."""
    if hasattr(x, "to_json"):
        return x.to_json()
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x
