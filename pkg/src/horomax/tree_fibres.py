"""Fibres of the midpoint projection T x T -> T over diagonal points.

The fibre over ``(a, a)`` consists of pairs ``(x, y)`` whose midpoint is ``a``.
Starting from ``(a, a)`` both coordinates move away from ``a`` at unit speed in
different directions; a fibre vertex appears whenever one of them reaches a
vertex of the tree.  All times and lengths are exact fractions.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from . import free_group_tree as ft


@dataclass(frozen=True)
class Vertex:
    def describe(self) -> str:
        return "vertex"


@dataclass(frozen=True)
class EdgeMidpoint:
    def describe(self) -> str:
        return "midpoint"


@dataclass(frozen=True)
class Generic:
    L: Fraction

    def __post_init__(self):
        L = Fraction(self.L)
        if not 0 < L < Fraction(1, 2):
            raise ValueError(f"generic base needs 0 < L < 1/2, got {L}")
        object.__setattr__(self, "L", L)

    def describe(self) -> str:
        return f"generic({self.L})"


BaseKind = Union[Vertex, EdgeMidpoint, Generic]


def parse_base_kind(text: str, L: Optional[str] = None) -> BaseKind:
    text = text.lower()
    if text == "vertex":
        return Vertex()
    if text in ("midpoint", "edge-midpoint", "edgemidpoint"):
        return EdgeMidpoint()
    if text == "generic":
        if L is None:
            raise ValueError("generic base needs L")
        return Generic(Fraction(L))
    raise ValueError(f"unknown base kind {text!r}")


def base_point(base: BaseKind, rank: int) -> ft.TreePoint:
    """The point a: the identity, or a point on the edge from the identity labelled ``a``."""
    if isinstance(base, Vertex):
        return ft.vertex("", rank)
    s = Fraction(1, 2) if isinstance(base, EdgeMidpoint) else base.L
    return ft.point_on_edge("", "a", s, rank)


@dataclass(frozen=True)
class FibrePoint:
    x: ft.TreePoint
    y: ft.TreePoint


@dataclass(frozen=True)
class _Cursor:
    """A coordinate heading to vertex ``target`` (away from a), ``left`` away from it."""

    point: ft.TreePoint
    target: str
    left: Fraction
    came_from: Optional[str]


@dataclass
class FibreGraph:
    arity: int
    base: BaseKind
    radius: Fraction
    a: ft.TreePoint
    vertices: list[FibrePoint] = field(default_factory=list)
    times: list[Fraction] = field(default_factory=list)
    edges: list[tuple[int, int, Fraction]] = field(default_factory=list)
    frontier: set[int] = field(default_factory=set)
    root: int = 0

    def degrees(self) -> list[int]:
        deg = [0] * len(self.vertices)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def interior(self) -> list[int]:
        return [i for i in range(len(self.vertices)) if i != self.root and i not in self.frontier]

    def to_json_obj(self) -> dict:
        return {
            "arity": self.arity,
            "base": self.base.describe(),
            "radius": str(self.radius),
            "root": self.root,
            "vertices": [{"id": i, "x": v.x.to_json(), "y": v.y.to_json(),
                          "time": str(self.times[i]), "frontier": i in self.frontier}
                         for i, v in enumerate(self.vertices)],
            "edges": [{"source": i, "target": j, "length": str(L)} for i, j, L in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=1)

    def to_dot(self) -> str:
        deg = self.degrees()
        lines = [f'graph fibre {{', f'  // arity={self.arity} base={self.base.describe()} '
                 f'radius={self.radius}']
        for i in range(len(self.vertices)):
            shape = "doublecircle" if i == self.root else ("point" if i in self.frontier else "circle")
            lines.append(f'  n{i} [label="{deg[i]}", shape={shape}];')
        for i, j, L in self.edges:
            lines.append(f'  n{i} -- n{j} [label="{L}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "target", "length", "source_time", "target_time"])
        for i, j, L in self.edges:
            w.writerow([i, j, str(L), str(self.times[i]), str(self.times[j])])
        return buf.getvalue()


def _initial_pairs(base: BaseKind, rank: int) -> list[tuple[_Cursor, _Cursor]]:
    a = base_point(base, rank)
    letters = ft.alphabet(rank)
    if isinstance(base, Vertex):
        return [(_Cursor(a, c1, Fraction(1), ""), _Cursor(a, c2, Fraction(1), ""))
                for c1 in letters for c2 in letters if c1 != c2]
    L = a.offset
    back = _Cursor(a, "", L, "a")
    fwd = _Cursor(a, "a", 1 - L, "")
    return [(back, fwd), (fwd, back)]


def _advance(c: _Cursor, dt: Fraction, rank: int) -> _Cursor:
    target = ft.vertex(c.target, rank)
    return _Cursor(ft.point_along(c.point, target, dt), c.target, c.left - dt, c.came_from)


def _branches(c: _Cursor, rank: int) -> list[_Cursor]:
    if c.left != 0:
        return [c]
    here = c.target
    out = []
    for letter in ft.alphabet(rank):
        nxt = ft.mul(here, letter)
        if nxt == c.came_from:
            continue
        out.append(_Cursor(ft.vertex(here, rank), nxt, Fraction(1), here))
    return out


def build_fibre(arity: int, base: BaseKind, radius) -> FibreGraph:
    """Exact fibre over (a, a) out to max-distance ``radius`` from the root.

    ``arity`` is the rank n of the free group; the tree has valence 2n.
    Vertices whose next event lies beyond the radius are kept as frontier leaves.
    """
    radius = Fraction(radius)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    a = base_point(base, arity)
    g = FibreGraph(arity, base, radius, a)
    g.vertices.append(FibrePoint(a, a))
    g.times.append(Fraction(0))
    queue = deque()
    for cx, cy in _initial_pairs(base, arity):
        queue.append((0, cx, cy))
    while queue:
        parent, cx, cy = queue.popleft()
        dt = min(cx.left, cy.left)
        t = g.times[parent] + dt
        if t > radius:
            g.frontier.add(parent)
            continue
        cx, cy = _advance(cx, dt, arity), _advance(cy, dt, arity)
        idx = len(g.vertices)
        g.vertices.append(FibrePoint(cx.point, cy.point))
        g.times.append(t)
        g.edges.append((parent, idx, dt))
        for bx in _branches(cx, arity):
            for by in _branches(cy, arity):
                queue.append((idx, bx, by))
    return g


def expected_profile(arity: int, base: BaseKind) -> dict:
    """Degrees predicted by counting branch choices at each event."""
    v = 2 * arity
    if isinstance(base, Vertex):
        return {"root": v * (v - 1), "interior": (v - 1) ** 2 + 1}
    if isinstance(base, EdgeMidpoint):
        return {"root": 2, "interior": (v - 1) ** 2 + 1}
    return {"root": 2, "interior": v}


@dataclass
class FibreReport:
    ok: bool
    message: str
    edge: Optional[int] = None
    vertex: Optional[int] = None

    def __str__(self):
        return "PASS" if self.ok else f"FAIL: {self.message}"


def _expected_length(base: BaseKind, parent_edge_len: Optional[Fraction], parent_is_root: bool):
    if isinstance(base, Vertex):
        return Fraction(1)
    if isinstance(base, EdgeMidpoint):
        return Fraction(1, 2) if parent_is_root else Fraction(1)
    L = base.L
    if parent_is_root:
        return L
    return 1 - 2 * L if parent_edge_len in (L, 2 * L) else 2 * L


def validate_fibre(g: FibreGraph, base: Optional[BaseKind] = None) -> FibreReport:
    """Independent re-check of tree shape, midpoints, degrees and edge lengths."""
    base = base if base is not None else g.base
    n = len(g.vertices)
    if len(g.edges) != n - 1:
        return FibreReport(False, f"{len(g.edges)} edges for {n} vertices: not a tree")
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (i, j, L) in enumerate(g.edges):
        if L <= 0:
            return FibreReport(False, f"edge {k} has nonpositive length {L}", edge=k)
        adj[i].append((j, k))
        adj[j].append((i, k))
    # orient from the root, recording the incoming edge of each vertex
    incoming: list[Optional[int]] = [None] * n
    seen = [False] * n
    seen[g.root] = True
    order = [g.root]
    for u in order:
        for v, k in adj[u]:
            if not seen[v]:
                seen[v] = True
                incoming[v] = k
                order.append(v)
    if not all(seen):
        return FibreReport(False, "graph is disconnected")
    a = base_point(base, g.arity)
    for i, p in enumerate(g.vertices):
        if ft.tree_midpoint(p.x, p.y) != a:
            return FibreReport(False, f"vertex {i} has midpoint off the base point", vertex=i)
        if ft.tree_distance(p.x, a) != ft.tree_distance(p.y, a):
            return FibreReport(False, f"vertex {i} is not balanced about the base", vertex=i)
    prof = expected_profile(g.arity, base)
    deg = [len(x) for x in adj]
    if deg[g.root] != prof["root"]:
        return FibreReport(False, f"root degree {deg[g.root]} != {prof['root']}", vertex=g.root)
    for i in g.interior():
        if deg[i] != prof["interior"]:
            return FibreReport(False, f"vertex {i} degree {deg[i]} != {prof['interior']}", vertex=i)
    for v in order[1:]:
        k = incoming[v]
        i, j, L = g.edges[k]
        parent = i if j == v else j
        parent_len = None if parent == g.root else g.edges[incoming[parent]][2]
        want = _expected_length(base, parent_len, parent == g.root)
        if L != want:
            return FibreReport(False, f"edge {k} has length {L}, expected {want}", edge=k)
    return FibreReport(True, "PASS")


def contract_edges(g: FibreGraph, length: Fraction) -> tuple[list[int], int]:
    """Degrees after contracting every edge of the given length, and the merged root class."""
    n = len(g.vertices)
    parent = list(range(n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for i, j, L in g.edges:
        if L == length:
            parent[find(i)] = find(j)
    deg = Counter()
    for i, j, L in g.edges:
        if L != length:
            deg[find(i)] += 1
            deg[find(j)] += 1
    classes = sorted({find(u) for u in range(n)})
    return [deg[c] for c in classes], classes.index(find(g.root))


def base_kind_at(position) -> BaseKind:
    """Base kind of the point at ``position`` along an edge (0 and 1 are vertices)."""
    p = Fraction(position)
    if not 0 <= p <= 1:
        raise ValueError(f"position {p} outside [0, 1]")
    if p in (0, 1):
        return Vertex()
    if p == Fraction(1, 2):
        return EdgeMidpoint()
    return Generic(min(p, 1 - p))


@dataclass
class ProfileRow:
    position: Fraction
    kind: str
    root_degree: int
    interior_degrees: list[int]
    edge_lengths: list[Fraction]
    n_vertices: int
    valid: bool


def fibre_quotient_profile(arity: int, positions, radius=2) -> list[ProfileRow]:
    rows = []
    for pos in positions:
        kind = base_kind_at(pos)
        g = build_fibre(arity, kind, radius)
        deg = g.degrees()
        rows.append(ProfileRow(
            Fraction(pos), kind.describe(), deg[g.root],
            sorted({deg[i] for i in g.interior()}),
            sorted({L for _, _, L in g.edges}),
            len(g.vertices), validate_fibre(g).ok))
    return rows
