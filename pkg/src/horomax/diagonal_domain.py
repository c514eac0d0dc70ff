"""Diagonal actions on X x X: geodesics as regular points, the extended midpoint
projection, large limit set sampling and discontinuity-domain probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from . import free_group_tree as ft
from . import hyperbolic_plane as hp
from .max_boundary import (BasePair, ClassifyParams, MaxProduct, ProductPoint, Regular,
                           Singular, Undecided)
from .spaces import H2Space, Space


@dataclass(frozen=True)
class ParamGeodesic:
    """Unit-speed bi-infinite geodesic: endpoints plus the time-zero point."""

    forward: Any
    backward: Any
    basepoint: Any


def make_geodesic(space: Space, forward, backward, basepoint=None) -> ParamGeodesic:
    """Geodesic between two boundary points; ``basepoint`` defaults to the projection of the origin."""
    if space.boundary_equal(forward, backward, 0):
        raise ValueError("geodesic endpoints must differ")
    if basepoint is None:
        basepoint = space.project_to_geodesic(forward, backward, space.origin)
    else:
        off = float(space.gromov_product(forward, backward, basepoint))
        if abs(off) > 1e-9:
            raise ValueError(f"basepoint is {off:.3g} off the geodesic")
    return ParamGeodesic(forward, backward, basepoint)


def geodesic_point(space: Space, g: ParamGeodesic, t):
    if t == 0:
        return g.basepoint
    return space.point_toward(g.basepoint, g.forward if t > 0 else g.backward, abs(t))


def shift(space: Space, g: ParamGeodesic, t) -> ParamGeodesic:
    """Reparameterise so the new time zero is the old time ``t``."""
    return ParamGeodesic(g.forward, g.backward, geodesic_point(space, g, t))


def geodesic_offset(space: Space, forward, backward, p, base: BasePair):
    """``C`` of the geodesic through ``p``: b_backward(p) - b_forward(p)."""
    return space.busemann(backward, base.o2, p) - space.busemann(forward, base.o, p)


def geodesic_to_regular(space: Space, g: ParamGeodesic, base: BasePair) -> Regular:
    return Regular(g.forward, g.backward, geodesic_offset(space, g.forward, g.backward,
                                                          g.basepoint, base))


def regular_to_geodesic(space: Space, b: Regular, base: BasePair) -> ParamGeodesic:
    if not isinstance(b, Regular):
        raise TypeError("only regular points correspond to geodesics")
    if space.boundary_equal(b.xi, b.xi2, 0):
        raise ValueError("diagonal regular point: no geodesic joins a boundary point to itself")
    p0 = space.project_to_geodesic(b.xi, b.xi2, base.o)
    # the offset grows at rate 2 when moving towards xi
    t = (b.c - geodesic_offset(space, b.xi, b.xi2, p0, base)) / 2
    if t >= 0:
        p = space.point_toward(p0, b.xi, t)
    else:
        p = space.point_toward(p0, b.xi2, -t)
    return ParamGeodesic(b.xi, b.xi2, p)


def project_interior(space: Space, p: ProductPoint):
    return space.midpoint(p.x, p.y)


def project_boundary(space: Space, b, base: BasePair):
    """Extended projection: a point of X for off-diagonal regular points, else a boundary point."""
    if isinstance(b, Singular):
        return b.xi
    if space.boundary_equal(b.xi, b.xi2, 0):
        return b.xi
    return regular_to_geodesic(space, b, base).basepoint


# ---------------------------------------------------------------------------
# identities used in the continuity argument for the projection


def midpoint_identity_residual(space: Space, x, y, o) -> float:
    """``2(x|m)_o - [(x|y)_o + d(m,o) + (d(x,o) - d(y,o))/2]`` with m the midpoint."""
    m = space.midpoint(x, y)
    lhs = 2 * space.gromov_product(x, m, o)
    rhs = (space.gromov_product(x, y, o) + space.distance(m, o)
           + (space.distance(x, o) - space.distance(y, o)) / 2)
    return float(lhs - rhs)


def geodesic_sum_residual(space: Space, g: ParamGeodesic, o) -> float:
    """``(p|xi)_o + (p|xi')_o - d(p,o) - (xi|xi')_o`` for p = g(0)."""
    p = g.basepoint
    lhs = space.gromov_product(p, g.forward, o) + space.gromov_product(p, g.backward, o)
    rhs = space.distance(p, o) + space.gromov_product(g.forward, g.backward, o)
    return float(lhs - rhs)


def geodesic_offset_residual(space: Space, g: ParamGeodesic, o) -> float:
    """``(p|xi')_o - (p|xi)_o + C_g/2`` for p = g(0) and the offset C_g of the geodesic."""
    p = g.basepoint
    c = geodesic_offset(space, g.forward, g.backward, p, BasePair(o, o))
    return float(space.gromov_product(p, g.backward, o) - space.gromov_product(p, g.forward, o)
                 + c / 2)


# ---------------------------------------------------------------------------
# groups


@dataclass
class GroupSpec:
    space: Space
    generators: list
    word_length_cap: int = 6

    def __post_init__(self):
        if not self.generators:
            raise ValueError("a group needs at least one generator")
        if self.word_length_cap < 1:
            raise ValueError("word length cap must be >= 1")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def letter_image(self, c: str):
        i = ord(c.lower()) - ord("a")
        g = self.generators[i]
        return self.space.inverse(g) if c.isupper() else g

    def element(self, word: str):
        out = self.space.identity()
        for c in word:
            out = self.space.compose(out, self.letter_image(c))
        return out

    def elements(self, cap: Optional[int] = None) -> list[tuple[str, Any]]:
        """(word, isometry) for all reduced words up to the cap, shortlex."""
        cap = self.word_length_cap if cap is None else cap
        out = {"": self.space.identity()}
        order = []
        for w in ft.reduced_words(self.rank, cap):
            if w:
                out[w] = self.space.compose(out[w[:-1]], self.letter_image(w[-1]))
            order.append((w, out[w]))
        return order


def schottky_generators(trace: float = 3.0, angle: float = math.pi / 2) -> list[hp.HIsometry]:
    """Two hyperbolic generators of equal trace with axes crossing at the origin.

    The first translates along the diameter from angle pi to angle 0, the
    second is its rotation by ``angle``.  For trace above 2*sqrt(2) and a right
    angle the ping-pong lemma makes them free generators of a Schottky group.
    """
    lam = 2.0 * math.acosh(trace / 2.0)
    a = hp.translation(lam)
    r = hp.rotation(angle)
    return [a, hp.compose(r, hp.compose(a, hp.inverse(r)))]


# ---------------------------------------------------------------------------
# limit set sampling


@dataclass
class LimitSetSample:
    directions: list
    resolution: float


@dataclass
class LimitPointRecord:
    word: str
    seed: int
    power_max: int
    result: Any
    predicted: Optional[Regular]


@dataclass
class LimitSetReport:
    records: list[LimitPointRecord]
    points: list
    sample: LimitSetSample
    max_gap_excess: float
    n_gap_checks: int


def orbit_gap_excess(spec: GroupSpec, seeds: Sequence[ProductPoint], base: BasePair,
                     cap: Optional[int] = None) -> tuple[float, int]:
    """max over words and seeds of ``|d(gx,o) - d(gy,o)| - d(x,y)``, and the number of checks."""
    space = spec.space
    elems = spec.elements(cap)
    worst = -math.inf
    count = 0
    if isinstance(space, H2Space):
        alpha = np.array([g.alpha for _, g in elems])
        beta = np.array([g.beta for _, g in elems])
        for s in seeds:
            gx = hp.mobius_many(alpha, beta, s.x.z)
            gy = hp.mobius_many(alpha, beta, s.y.z)
            gap = np.abs(hp.distance_many(gx, base.o.z) - hp.distance_many(gy, base.o2.z))
            worst = max(worst, float(np.max(gap)) - hp.distance(s.x, s.y))
            count += len(elems)
        return worst, count
    for s in seeds:
        dxy = space.distance(s.x, s.y)
        for _, g in elems:
            gap = abs(space.distance(space.apply(g, s.x), base.o)
                      - space.distance(space.apply(g, s.y), base.o2))
            worst = max(worst, gap - dxy)
            count += 1
    return worst, count


def _power_sequence(space: Space, g, seed: ProductPoint, kmax: int) -> list[ProductPoint]:
    seq = []
    x, y = seed.x, seed.y
    for _ in range(kmax):
        x, y = space.apply(g, x), space.apply(g, y)
        seq.append(ProductPoint(x, y))
    return seq


def _predicted_limit(space: Space, word: str, g, seed: ProductPoint, base: BasePair):
    """Limit of (g^k x, g^k y): both factors go to the attracting end, C from the repelling one."""
    if isinstance(space, H2Space):
        attract, repel = hp.fixed_points(g)
    else:
        conj, core = ft.cyclic_reduction(g.word)
        attract = ft.TreeEnd(conj, core, space.rank)
        repel = ft.TreeEnd(conj, ft.inv_word(core), space.rank)
    c = (space.busemann(repel, base.o, seed.x) - space.busemann(repel, base.o, seed.y)
         + space.busemann(attract, base.o2, base.o))
    return Regular(attract, attract, c)


def sample_large_limit_set(spec: GroupSpec, seeds: Sequence[ProductPoint], base: BasePair,
                           word_len: int = 2, max_depth: float = 20.0,
                           params: ClassifyParams | None = None,
                           resolution: float = 1e-3,
                           gap_cap: Optional[int] = None) -> LimitSetReport:
    """Classify the limits of ``(w^k x, w^k y)`` for short cyclic words and every seed.

    Powers are taken until the orbit reaches ``max_depth`` from the base (this
    keeps double precision meaningful in the disk model).  The orbit-gap bound
    is checked separately over all words up to ``gap_cap``.
    """
    space = spec.space
    prod = MaxProduct(space, space)
    if params is None:
        # directions are only resolved to the declared resolution
        params = ClassifyParams(direction_tol=resolution)
    records = []
    points = []
    for word in ft.cyclic_words(spec.rank, word_len):
        g = spec.element(word)
        tau = float(space.translation_length(g))
        if tau <= 0:
            continue
        for i, seed in enumerate(seeds):
            start = float(max(space.distance(seed.x, base.o), space.distance(seed.y, base.o2)))
            kmax = max(int((max_depth - start) / tau), 4)
            seq = _power_sequence(space, g, seed, kmax)
            try:
                res = prod.classify_sequence(seq, base, params)
            except ValueError as exc:
                res = Undecided(str(exc))
            pred = _predicted_limit(space, word, g, seed, base)
            records.append(LimitPointRecord(word, i, kmax, res, pred))
            if isinstance(res, (Regular, Singular)):
                points.append(res)
    directions = []
    for b in points:
        xi = b.xi
        if all(space.boundary_separation(xi, d) > resolution for d in directions):
            directions.append(xi)
    excess, n = orbit_gap_excess(spec, seeds, base, gap_cap if gap_cap is not None
                                 else spec.word_length_cap)
    return LimitSetReport(records, points, LimitSetSample(directions, resolution), excess, n)


def in_omega_max(space: Space, b, lam: LimitSetSample, base: BasePair, margin: float) -> bool:
    """Membership in the discontinuity domain, robustified by a margin around sampled limit directions."""
    if not lam.directions:
        raise ValueError("limit set sample is empty")
    if isinstance(b, Regular) and not space.boundary_equal(b.xi, b.xi2, lam.resolution):
        return True
    xi = project_boundary(space, b, base)
    return all(space.boundary_separation(xi, d) > margin for d in lam.directions)


# ---------------------------------------------------------------------------
# dynamical relation probe


@dataclass
class ProbeReport:
    related: bool
    best_score: float
    witness_word: Optional[str]
    witness_candidate: Optional[str]
    threshold: float
    cap: int
    escape_radius: float
    n_words: int
    n_candidates: int

    def to_json(self):
        return {k: (v if not (isinstance(v, float) and math.isinf(v)) else "inf")
                for k, v in self.__dict__.items()}


def _probe_grid(space: Space, base: BasePair, radius: float, n: int, rng) -> list[ProductPoint]:
    pts = [ProductPoint(base.o, base.o2)]
    if isinstance(space, H2Space):
        def rand_pt(o):
            return hp.point_toward(o, hp.HBoundary(rng.uniform(0, 2 * math.pi)),
                                   rng.uniform(0, radius))
    else:
        letters = ft.alphabet(space.rank)

        def rand_pt(o):
            w = "".join(rng.choice(letters) for _ in range(int(radius)))
            return space.point_along(o, ft.vertex(w, space.rank), rng.integers(0, int(radius) + 1))
    for _ in range(n - 1):
        pts.append(ProductPoint(rand_pt(base.o), rand_pt(base.o2)))
    return pts


def approximants(space: Space, b, base: BasePair, depths: Sequence[float]) -> list[ProductPoint]:
    """Product points converging to ``b`` along rays from the base pair."""
    out = []
    for t in depths:
        if isinstance(b, Singular):
            if b.factor == 1:
                out.append(ProductPoint(space.point_toward(base.o, b.xi, t), base.o2))
            else:
                out.append(ProductPoint(base.o, space.point_toward(base.o2, b.xi, t)))
        else:
            c = b.c
            t1, t2 = t + c / 2, t - c / 2
            if t1 < 0 or t2 < 0:
                continue
            out.append(ProductPoint(space.point_toward(base.o, b.xi, t1),
                                    space.point_toward(base.o2, b.xi2, t2)))
    return out


def dynamical_relation_probe(spec: GroupSpec, b1, b2, base: BasePair,
                             seeds: Sequence[ProductPoint] = (), trials: int = 12,
                             threshold: float = 0.05, escape_radius: float = 5.0,
                             seed: int = 0, depths: Sequence[float] = (6, 9, 12, 15),
                             seed_word_len: int = 3, grid_radius: float = 2.0) -> ProbeReport:
    """Search for z close to ``b1`` and a far-moving group element with gz close to ``b2``.

    Closeness to an ideal point is the sup over a fixed grid of
    ``|dmax(z, w) - dmax(z, base) - h(w)|``.  The score of a pair (z, g) is the
    larger of the two closeness errors; only elements moving the base pair by
    more than ``escape_radius`` count.  ``related`` means the best score is at
    most ``threshold``.
    """
    space = spec.space
    prod = MaxProduct(space, space)
    rng = np.random.default_rng(seed)
    grid = _probe_grid(space, base, grid_radius, trials, rng)
    h1 = np.array([float(prod.horofunction_value(b1, base, w)) for w in grid])
    h2 = np.array([float(prod.horofunction_value(b2, base, w)) for w in grid])
    elems = spec.elements()
    base_pt = ProductPoint(base.o, base.o2)

    cands: list[tuple[str, ProductPoint]] = []
    for i, z in enumerate(approximants(space, b1, base, depths)):
        cands.append((f"ray{i}", z))
    if seeds:
        for w, g in spec.elements(min(seed_word_len, spec.word_length_cap)):
            for j, s in enumerate(seeds):
                cands.append((f"{w or 'e'}*seed{j}", prod.act(g, g, s)))

    escaping = [(w, g) for w, g in elems
                if float(prod.dmax(prod.act(g, g, base_pt), base_pt)) > escape_radius]
    best = (math.inf, None, None)
    if isinstance(space, H2Space):
        best = _probe_h2(prod, cands, escaping, grid, h1, h2, base)
    else:
        for cname, z in cands:
            e1 = _mismatch(prod, z, grid, h1, base_pt)
            if e1 >= best[0]:
                continue
            for w, g in escaping:
                e2 = _mismatch(prod, prod.act(g, g, z), grid, h2, base_pt)
                score = max(e1, e2)
                if score < best[0]:
                    best = (score, w, cname)
    return ProbeReport(best[0] <= threshold, best[0], best[1], best[2], threshold,
                       spec.word_length_cap, escape_radius, len(escaping), len(cands))


def _mismatch(prod: MaxProduct, z: ProductPoint, grid, h, base_pt) -> float:
    ref = prod.dmax(z, base_pt)
    vals = np.array([float(prod.dmax(z, w) - ref) for w in grid])
    return float(np.max(np.abs(vals - h)))


def _probe_h2(prod, cands, escaping, grid, h1, h2, base: BasePair):
    best = (math.inf, None, None)
    if not escaping:
        return best
    alpha = np.array([g.alpha for _, g in escaping])
    beta = np.array([g.beta for _, g in escaping])
    gx_grid = np.array([w.x.z for w in grid])
    gy_grid = np.array([w.y.z for w in grid])
    base_pt = ProductPoint(base.o, base.o2)
    with np.errstate(all="ignore"):
        for cname, z in cands:
            e1 = _mismatch(prod, z, grid, h1, base_pt)
            if e1 >= best[0]:
                continue
            zx = hp.mobius_many(alpha, beta, z.x.z)[:, None]
            zy = hp.mobius_many(alpha, beta, z.y.z)[:, None]
            ref = np.maximum(hp.distance_many(zx, base.o.z), hp.distance_many(zy, base.o2.z))
            vals = np.maximum(hp.distance_many(zx, gx_grid[None, :]),
                              hp.distance_many(zy, gy_grid[None, :])) - ref
            e2 = np.max(np.abs(vals - h2[None, :]), axis=1)
            e2 = np.where(np.isfinite(e2), e2, np.inf)
            k = int(np.argmin(e2))
            score = max(e1, float(e2[k]))
            if score < best[0]:
                best = (score, escaping[k][0], cname)
    return best
