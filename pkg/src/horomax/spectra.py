"""Pairs of free-group representations into the model spaces.

Marked length spectra, the orbit coarse-equivalence constant, an orbit-matching
almost-isometry between the targets, the map F between discontinuity domains
and its K / 4K / 6K bounds, and regularity of product limit points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import free_group_tree as ft
from . import hyperbolic_plane as hp
from .diagonal_domain import regular_to_geodesic
from .max_boundary import BasePair, MaxProduct, Regular
from .spaces import H2Space, Space, TreeSpace, space_from_name, to_json_value


# ---------------------------------------------------------------------------
# representations


@dataclass
class Representation:
    space: Space
    images: dict
    base: Any
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.images:
            raise ValueError("a representation needs at least one generator image")
        letters = ft.alphabet(len(self.images))[: len(self.images)]
        if sorted(self.images) != letters:
            raise ValueError(f"generator names must be {letters}, got {sorted(self.images)}")

    @property
    def rank(self) -> int:
        return len(self.images)

    def letter_image(self, c: str):
        g = self.images[c.lower()]
        return self.space.inverse(g) if c.isupper() else g

    def element(self, word: str):
        out = self.space.identity()
        for c in word:
            out = self.space.compose(out, self.letter_image(c))
        return out

    def elements(self, cap: int) -> list[tuple[str, Any]]:
        if cap not in self._cache:
            table = {"": self.space.identity()}
            order = []
            for w in ft.reduced_words(self.rank, cap):
                if w:
                    table[w] = self.space.compose(table[w[:-1]], self.letter_image(w[-1]))
                order.append((w, table[w]))
            self._cache[cap] = order
        return self._cache[cap]

    def orbit(self, cap: int, x=None) -> list:
        x = self.base if x is None else x
        return [self.space.apply(g, x) for _, g in self.elements(cap)]

    def conjugate(self, h, base=None) -> "Representation":
        """The representation ``g -> h g h^-1`` based at ``h(base)``."""
        s = self.space
        imgs = {k: s.compose(h, s.compose(g, s.inverse(h))) for k, g in self.images.items()}
        return Representation(s, imgs, s.apply(h, self.base) if base is None else base)

    def injectivity_defect(self, cap: int, tol: float = 1e-9) -> Optional[tuple[str, str]]:
        """First pair of distinct words with coinciding orbit points, or None."""
        words = [w for w, _ in self.elements(cap)]
        d = orbit_distance_matrix(self, cap)
        np.fill_diagonal(d, np.inf)
        i, j = np.unravel_index(int(np.argmin(d)), d.shape)
        if d[i, j] <= tol:
            return words[min(i, j)], words[max(i, j)]
        return None

    def to_json(self):
        return {"target": "h2" if isinstance(self.space, H2Space) else "tree",
                "rank": self.rank,
                "generators": {k: to_json_value(v) for k, v in sorted(self.images.items())},
                "base": to_json_value(self.base)}


def representation_from_json(obj) -> Representation:
    if not isinstance(obj, dict):
        raise ValueError("representation JSON must be an object")
    try:
        target = obj["target"]
        gens = obj["generators"]
        rank = int(obj.get("rank", len(gens)))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed representation: missing {exc}") from exc
    if not isinstance(gens, dict) or len(gens) != rank:
        raise ValueError("generators must be an object with one entry per generator")
    tree_rank = int(obj.get("tree_rank", rank)) if target == "tree" else rank
    space = space_from_name(target, tree_rank)
    images = {k: space.isometry_from_json(v) for k, v in gens.items()}
    base = space.point_from_json(obj["base"]) if "base" in obj else space.origin
    return Representation(space, images, base)


def tree_representation(rank: int = 2, perm: Optional[dict] = None) -> Representation:
    """Left multiplication (optionally with relabelled generators) on the Cayley tree."""
    space = TreeSpace(rank)
    letters = ft.alphabet(rank)[:rank]
    perm = perm or {c: c for c in letters}
    return Representation(space, {c: ft.TreeIsometry(perm[c], rank) for c in letters}, space.origin)


def h2_representation(generators: Sequence[hp.HIsometry], base: Optional[hp.HPoint] = None):
    letters = ft.alphabet(len(generators))[: len(generators)]
    space = H2Space()
    return Representation(space, dict(zip(letters, generators)),
                          base if base is not None else space.origin)


def mirror(g: hp.HIsometry) -> hp.HIsometry:
    """Conjugate by the orientation-reversing reflection z -> -conj(z) of the upper half-plane."""
    return hp.HIsometry(g.a, -g.b, -g.c, g.d)


# ---------------------------------------------------------------------------
# spectra


def enumerate_conjugacy_classes(rank: int, cap: int) -> list[str]:
    """One cyclically reduced representative per conjugacy class of length <= cap."""
    if cap < 1:
        return []
    return [w for w in ft.cyclic_words(rank, cap)]


def marked_spectrum(rho: Representation, words: Sequence[str]) -> dict:
    return {w: rho.space.translation_length(rho.element(w)) for w in words}


@dataclass
class SpectrumTable:
    rows: list[tuple[str, Any, Any]]
    cap: int

    def to_csv_rows(self):
        return [(w, float(t1), float(t2), abs(float(t1) - float(t2))) for w, t1, t2 in self.rows]


def spectrum_table(r1: Representation, r2: Representation, cap: int) -> SpectrumTable:
    if r1.rank != r2.rank:
        raise ValueError("representations of groups of different rank")
    words = enumerate_conjugacy_classes(r1.rank, cap)
    s1, s2 = marked_spectrum(r1, words), marked_spectrum(r2, words)
    return SpectrumTable([(w, s1[w], s2[w]) for w in words], cap)


@dataclass
class SpectrumVerdict:
    passed: bool
    max_diff: float
    witness: Optional[str]
    tol: float
    cap: int

    def to_json(self):
        return {"verdict": "PASS" if self.passed else "FAIL", "max_diff": self.max_diff,
                "witness": self.witness, "tol": self.tol, "cap": self.cap}


def spectrum_equality_test(t: SpectrumTable, tol: float = 1e-6) -> SpectrumVerdict:
    """PASS iff every tabulated translation length pair agrees within tol; witness is the first violator."""
    worst = 0.0
    witness = None
    for w, t1, t2 in t.rows:
        diff = abs(float(t1) - float(t2))
        worst = max(worst, diff)
        if witness is None and diff > tol:
            witness = w
    return SpectrumVerdict(witness is None, worst, witness, tol, t.cap)


# ---------------------------------------------------------------------------
# orbit distances


def _tree_vertex_matrix(words: Sequence[str], rank: int) -> np.ndarray:
    letters = {c: i + 1 for i, c in enumerate(ft.alphabet(rank))}
    n = max((len(w) for w in words), default=0)
    codes = np.zeros((len(words), max(n, 1)), dtype=np.int8)
    for i, w in enumerate(words):
        codes[i, :len(w)] = [letters[c] for c in w]
    lengths = np.array([len(w) for w in words])
    eq = (codes[:, None, :] == codes[None, :, :]) & (codes[:, None, :] != 0)
    lcp = np.cumprod(eq, axis=2).sum(axis=2)
    return (lengths[:, None] + lengths[None, :] - 2 * lcp).astype(float)


def distance_matrix(space: Space, pts: Sequence) -> np.ndarray:
    """Pairwise distances as floats (exact integers for tree vertices)."""
    if isinstance(space, H2Space):
        z = np.array([p.z for p in pts])
        d = hp.distance_many(z[:, None], z[None, :])
        np.fill_diagonal(d, 0.0)
        return d
    if all(p.is_vertex for p in pts):
        return _tree_vertex_matrix([p.vertex for p in pts], space.rank)
    n = len(pts)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = float(space.distance(pts[i], pts[j]))
    return d


def orbit_distance_matrix(rho: Representation, cap: int) -> np.ndarray:
    return distance_matrix(rho.space, rho.orbit(cap))


@dataclass
class CoarseEstimate:
    c_est: float
    witness: tuple[str, str]
    cap: int


def coarse_equivalence_profile(r1: Representation, r2: Representation,
                               caps: Sequence[int]) -> list[CoarseEstimate]:
    """sup over word pairs of the orbit distance mismatch, for each cap (computed once)."""
    top = max(caps)
    words = [w for w, _ in r1.elements(top)]
    diff = np.abs(orbit_distance_matrix(r1, top) - orbit_distance_matrix(r2, top))
    lengths = np.array([len(w) for w in words])
    out = []
    for cap in caps:
        mask = lengths <= cap
        sub = np.where(mask[:, None] & mask[None, :], diff, -np.inf)
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        val = float(sub[i, j])
        if val <= 0.0:
            out.append(CoarseEstimate(max(val, 0.0), ("", ""), cap))
        else:
            out.append(CoarseEstimate(val, (words[i], words[j]), cap))
    return out


def coarse_equivalence_estimate(r1: Representation, r2: Representation, cap: int) -> CoarseEstimate:
    return coarse_equivalence_profile(r1, r2, [cap])[0]


# ---------------------------------------------------------------------------
# almost-isometries


class AlmostIsometry:
    """A map between the target spaces with an almost-inverse and a boundary extension."""

    source: Space
    target: Space
    K: float

    def f(self, x): ...
    def f_inv(self, y): ...
    def f_inf(self, xi): ...


class IdentityMap(AlmostIsometry):
    def __init__(self, space: Space):
        self.source = self.target = space
        self.K = 0

    def f(self, x):
        return x

    def f_inv(self, y):
        return y

    def f_inf(self, xi):
        return xi


def _h2_chart(s1_base, s1_dir, s2_base, s2_dir) -> hp.HIsometry:
    """Isometry taking s1_base to s2_base and the direction to s1_dir onto the direction to s2_dir."""
    t1 = hp.moving_to_origin(s1_base)
    t2 = hp.moving_to_origin(s2_base)
    a1 = hp.limit_direction(hp.apply(t1, s1_dir), hp.HPoint(0.0, 0.0)).angle
    a2 = hp.limit_direction(hp.apply(t2, s2_dir), hp.HPoint(0.0, 0.0)).angle
    return hp.compose(hp.inverse(t2), hp.compose(hp.rotation(a2 - a1), t1))


class _OrbitMatch:
    """One direction of the orbit matching: X_src -> X_dst."""

    def __init__(self, src: Representation, dst: Representation, cap: int, align: str):
        self.src, self.dst = src, dst
        elems_src = src.elements(cap)
        elems_dst = dst.elements(cap)
        self.words = [w for w, _ in elems_src]
        self.g_src = [g for _, g in elems_src]
        self.g_dst = [g for _, g in elems_dst]
        self.orbit_src = [src.space.apply(g, src.base) for g in self.g_src]
        self.chart = None
        if isinstance(src.space, H2Space) and isinstance(dst.space, H2Space):
            a_src = src.space.apply(src.element(align), src.base)
            a_dst = dst.space.apply(dst.element(align), dst.base)
            self.chart = _h2_chart(src.base, a_src, dst.base, a_dst)
            self._z = np.array([p.z for p in self.orbit_src])
        elif isinstance(src.space, TreeSpace) and all(p.is_vertex for p in self.orbit_src):
            self._index = {p.vertex: i for i, p in enumerate(self.orbit_src)}

    def nearest(self, x) -> int:
        if isinstance(self.src.space, H2Space):
            d = hp.distance_many(self._z, x.z)
            return int(np.argmin(d))
        if hasattr(self, "_index") and x.is_vertex and x.vertex in self._index:
            return self._index[x.vertex]
        d = [self.src.space.distance(p, x) for p in self.orbit_src]
        return int(min(range(len(d)), key=d.__getitem__))

    def __call__(self, x):
        i = self.nearest(x)
        if self.chart is None:
            return self.dst.space.apply(self.g_dst[i], self.dst.base)
        local = hp.apply(hp.inverse(self.g_src[i]), x)
        return hp.apply(self.g_dst[i], hp.apply(self.chart, local))


class OrbitAlmostIsometry(AlmostIsometry):
    """``f(x) = rho2(g) chart(rho1(g)^-1 x)`` with ``g`` the nearest orbit word.

    Orbit points map exactly to orbit points.  Between two hyperbolic planes the
    chart is the isometry matching base points and the direction of the
    ``align`` generator's orbit; otherwise points snap to the matched orbit point.
    """

    def __init__(self, r1: Representation, r2: Representation, cap: int, align: str = "a",
                 boundary_depth: float = 16.0):
        self.r1, self.r2, self.cap = r1, r2, cap
        self.source, self.target = r1.space, r2.space
        self._fwd = _OrbitMatch(r1, r2, cap, align)
        self._bwd = _OrbitMatch(r2, r1, cap, align)
        self.boundary_depth = boundary_depth
        self.K = math.nan

    def f(self, x):
        return self._fwd(x)

    def f_inv(self, y):
        return self._bwd(y)

    def f_inf(self, xi):
        if self._fwd.chart is not None:
            # f agrees with a fixed isometry up to bounded error near the base; the
            # direction of f along a long ray stabilises at the image end
            far = hp.point_toward(self.r1.base, xi, self.boundary_depth)
            return hp.limit_direction(self.f(far), self.r2.base)
        src = self.source
        if isinstance(src, H2Space):
            far = src.point_toward(self.r1.base, xi, self.boundary_depth)
        else:
            far = src.point_toward(src.origin, xi, int(self.boundary_depth))
        y = self.f(far)
        if isinstance(self.target, H2Space):
            return hp.limit_direction(y, self.r2.base)
        return ft.infer_end(y.vertex + (y.edge or ""), self.target.rank)


@dataclass
class AlmostIsometryData:
    f: AlmostIsometry
    samples: list[tuple[Any, Any]]
    K_est: float
    K_orbit: float
    inverse_defect: float
    matching_variation: Optional[float]
    cap: int


def _sample_points(rho: Representation, n: int, radius: float, rng, cap: int) -> list:
    space = rho.space
    pts = []
    for _ in range(n):
        if isinstance(space, H2Space):
            p = hp.point_toward(rho.base, hp.HBoundary(rng.uniform(0, 2 * math.pi)),
                                rng.uniform(0, radius))
        else:
            letters = ft.alphabet(space.rank)
            w = "".join(rng.choice(letters) for _ in range(int(rng.integers(0, int(radius) + 1))))
            p = ft.vertex(rho.base.vertex + w, space.rank) if rho.base.is_vertex else rho.base
        word = "".join(rng.choice(ft.alphabet(rho.rank)) for _ in range(int(rng.integers(0, cap + 1))))
        pts.append(space.apply(rho.element(ft.reduce_word(word)), p))
    return pts


def orbit_almost_isometry(r1: Representation, r2: Representation, cap: int,
                          n_samples: int = 40, radius: float = 1.0, seed: int = 0,
                          align: str = "a") -> AlmostIsometryData:
    """Build the orbit-matching map and measure its distortion on orbit and random points."""
    f = OrbitAlmostIsometry(r1, r2, cap, align)
    rng = np.random.default_rng(seed)
    orbit1 = r1.orbit(cap)
    extra = _sample_points(r1, n_samples, radius, rng, max(cap // 2, 1))
    xs = orbit1 + extra
    ys = [f.f(x) for x in xs]
    d1 = distance_matrix(r1.space, xs)
    d2 = distance_matrix(r2.space, ys)
    diff = np.abs(d1 - d2)
    n_orbit = len(orbit1)
    K_orbit = float(np.max(diff[:n_orbit, :n_orbit]))
    K_est = float(np.max(diff))
    back = [f.f_inv(y) for y in ys]
    defect = max(float(r1.space.distance(b, x)) for b, x in zip(back, xs))
    variation = None
    if f._fwd.chart is not None and r1.rank >= 2:
        other = OrbitAlmostIsometry(r1, r2, cap, "b" if align != "b" else "a")
        variation = max(float(r2.space.distance(f.f(x), other.f(x))) for x in extra)
    f.K = K_est
    return AlmostIsometryData(f, list(zip(xs, ys)), K_est, K_orbit, defect, variation, cap)


# ---------------------------------------------------------------------------
# the map F and its bounds


@dataclass
class FValue:
    point: Regular
    tail_spread: float


def f_map(f: AlmostIsometry, z: Regular, o1, o2, n_grid: Sequence) -> FValue:
    """F(z) for z in the diagonal discontinuity domain of X1 x X1 (base (o1, o1)).

    The offset is the tail maximum over the second half of ``n_grid`` of
    ``d1(G(n), o1) - d2(f(G(-n)), f(o1))`` where ``G`` is the geodesic of ``z``.
    """
    s1, s2 = f.source, f.target
    g = regular_to_geodesic(s1, z, BasePair(o1, o1))
    fo = f.f(o1)
    vals = []
    for n in n_grid:
        fwd = s1.point_toward(g.basepoint, g.forward, n)
        bwd = s1.point_toward(g.basepoint, g.backward, n)
        vals.append(s1.distance(fwd, o1) - s2.distance(f.f(bwd), fo))
    tail = vals[len(vals) // 2:]
    h = max(tail)
    spread = float(h - min(tail))
    return FValue(Regular(z.xi, f.f_inf(z.xi2), h), spread)


@dataclass
class BoundsReport:
    K: float
    max_i: float
    max_iii: float
    max_6k: float
    slack: float
    violations: list
    n_checks: int

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self):
        return {"K": self.K, "max_i": self.max_i, "max_iii": self.max_iii, "max_6k": self.max_6k,
                "slack": self.slack, "violations": self.violations, "n_checks": self.n_checks,
                "verdict": "PASS" if self.passed else "FAIL"}


def fmap_bounds_check(r1: Representation, r2: Representation, f: AlmostIsometry,
                      samples: Sequence[Regular], words: Sequence[str],
                      n_grid: Sequence, K: Optional[float] = None) -> BoundsReport:
    """Check |h2(F z) - h1 z| <= K, |h2(F gz) - h2(g F z)| <= 4K and |h1(gz) - h2(gy)| <= 6K.

    The first two carry a finite-horizon slack equal to the tail spreads of the
    F values involved; the third is exact up to 1e-9.
    """
    K = float(f.K if K is None else K)
    s1, s2 = r1.space, r2.space
    o1 = r1.base
    o2 = f.f(o1)
    p11 = MaxProduct(s1, s1)
    p12 = MaxProduct(s1, s2)
    b11 = BasePair(o1, o1)
    b12 = BasePair(o1, o2)
    viol = []
    mi = miii = m6 = 0.0
    worst_slack = 0.0
    checks = 0
    for k, z in enumerate(samples):
        Fz = f_map(f, z, o1, o2, n_grid)
        e = abs(float(Fz.point.c - z.c))
        mi = max(mi, e)
        worst_slack = max(worst_slack, Fz.tail_spread)
        checks += 1
        if e > K + Fz.tail_spread + 1e-9:
            viol.append({"bound": "K", "sample": k, "word": "", "value": e})
        y = Regular(z.xi, f.f_inf(z.xi2), z.c)
        for w in words:
            g1, g2 = r1.element(w), r2.element(w)
            gz = p11.boundary_action(g1, g1, z, b11)
            Fgz = f_map(f, gz, o1, o2, n_grid)
            gFz = p12.boundary_action(g1, g2, Fz.point, b12)
            e3 = abs(float(Fgz.point.c - gFz.c))
            slack = Fgz.tail_spread + Fz.tail_spread
            worst_slack = max(worst_slack, slack)
            miii = max(miii, e3)
            if e3 > 4 * K + slack + 1e-9:
                viol.append({"bound": "4K", "sample": k, "word": w, "value": e3})
            gy = p12.boundary_action(g1, g2, y, b12)
            e6 = abs(float(gz.c - gy.c))
            m6 = max(m6, e6)
            if e6 > 6 * K + 1e-9:
                viol.append({"bound": "6K", "sample": k, "word": w, "value": e6})
            checks += 2
    return BoundsReport(K, mi, miii, m6, worst_slack, viol, checks)


# ---------------------------------------------------------------------------
# product limit set regularity


@dataclass
class RegularityVerdict:
    verdict: str
    max_gap: float
    bound: float
    witness: Optional[str]
    growth: Optional[float]
    c_est: float

    def to_json(self):
        return dict(self.__dict__)


def product_limitset_regularity(r1: Representation, r2: Representation,
                                seeds: Sequence[tuple[Any, Any]], cap: int,
                                powers: int = 6) -> RegularityVerdict:
    """Check the orbit gap bound C_est + d1(x,o) + d2(y,o').

    When the bound fails, the gap along powers of the witness word is fitted
    to a line and the slope reported.
    """
    c_est = coarse_equivalence_estimate(r1, r2, cap).c_est
    s1, s2 = r1.space, r2.space
    elems1, elems2 = r1.elements(cap), r2.elements(cap)
    worst, worst_excess, witness, bound_at = 0.0, -math.inf, None, 0.0
    for x, y in seeds:
        bound = c_est + float(s1.distance(x, r1.base)) + float(s2.distance(y, r2.base))
        for (w, g1), (_, g2) in zip(elems1, elems2):
            gap = abs(float(s1.distance(s1.apply(g1, x), r1.base)
                            - s2.distance(s2.apply(g2, y), r2.base)))
            if gap - bound > worst_excess:
                worst_excess, bound_at = gap - bound, bound
            if gap > worst:
                worst, witness = gap, w
    if worst_excess <= 1e-9:
        return RegularityVerdict("REGULAR", worst, bound_at, None, None, c_est)
    table = spectrum_table(r1, r2, min(cap, 3))
    word = max(table.rows, key=lambda r: abs(float(r[1]) - float(r[2])))[0]
    x, y = seeds[0]
    ks = np.arange(1, powers + 1)
    gaps = []
    for k in ks:
        g1, g2 = r1.element(word * int(k)), r2.element(word * int(k))
        gaps.append(abs(float(s1.distance(s1.apply(g1, x), r1.base)
                              - s2.distance(s2.apply(g2, y), r2.base))))
    slope = float(np.polyfit(ks, gaps, 1)[0])
    return RegularityVerdict("SINGULAR-EVIDENCE", worst, bound_at, word, slope, c_est)


def lemma_gap_bound_excess(r1: Representation, r2: Representation, x, y, cap: int,
                           c_est: float) -> float:
    """max of |d1(g x, g' x) - d2(g y, g' y)| - [C_est + 2(d1(x,o) + d2(y,o'))] over word pairs."""
    p1 = [r1.space.apply(g, x) for _, g in r1.elements(cap)]
    p2 = [r2.space.apply(g, y) for _, g in r2.elements(cap)]
    diff = np.abs(distance_matrix(r1.space, p1) - distance_matrix(r2.space, p2))
    bound = c_est + 2 * (float(r1.space.distance(x, r1.base)) + float(r2.space.distance(y, r2.base)))
    return float(np.max(diff)) - bound
