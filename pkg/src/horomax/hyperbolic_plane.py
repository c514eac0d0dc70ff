"""Poincare disk model of the hyperbolic plane.

Points are stored as disk coordinates ``(u, v)``.  Isometries are real 2x2
matrices of determinant one acting on the upper half-plane; their action on
the disk is obtained by conjugating with the Cayley map ``w -> (w - i)/(w + i)``,
which sends ``infinity`` to the boundary angle 0 and ``0`` to the angle pi.

Everything here is a pure function on immutable values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

BOUNDARY_EPS = 1e-12
ANGLE_TOL = 1e-9
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HPoint:
    u: float
    v: float

    def __post_init__(self):
        u, v = float(self.u), float(self.v)
        if not (math.isfinite(u) and math.isfinite(v)):
            raise ValueError(f"non-finite disk coordinates ({u}, {v})")
        if u * u + v * v >= 1.0 - BOUNDARY_EPS:
            raise ValueError(f"point ({u}, {v}) is not inside the disk margin")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def z(self) -> complex:
        return complex(self.u, self.v)

    @classmethod
    def from_complex(cls, z: complex) -> "HPoint":
        return cls(z.real, z.imag)

    def to_json(self):
        return [self.u, self.v]


@dataclass(frozen=True)
class HBoundary:
    angle: float

    def __post_init__(self):
        a = math.fmod(float(self.angle), TWO_PI)
        if a < 0:
            a += TWO_PI
        if a >= TWO_PI:
            a = 0.0
        object.__setattr__(self, "angle", a)

    @property
    def zeta(self) -> complex:
        return cmath.exp(1j * self.angle)

    @classmethod
    def from_complex(cls, z: complex) -> "HBoundary":
        return cls(math.atan2(z.imag, z.real))

    def to_json(self):
        return {"angle": self.angle}


def angular_distance(a: HBoundary, b: HBoundary) -> float:
    d = abs(a.angle - b.angle)
    return min(d, TWO_PI - d)


def same_boundary(a: HBoundary, b: HBoundary, tol: float = ANGLE_TOL) -> bool:
    return angular_distance(a, b) <= tol


@dataclass(frozen=True)
class HIsometry:
    """Orientation-preserving isometry given by a real matrix ``[[a, b], [c, d]]``."""

    a: float
    b: float
    c: float
    d: float
    alpha: complex = field(init=False, repr=False, compare=False)
    beta: complex = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if not det > 0:
            raise ValueError(f"isometry matrix must have positive determinant, got {det}")
        s = math.sqrt(det)
        a, b, c, d = self.a / s, self.b / s, self.c / s, self.d / s
        for name, val in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "alpha", complex(a + d, b - c) / 2.0)
        object.__setattr__(self, "beta", complex(a - d, -(b + c)) / 2.0)

    @classmethod
    def from_matrix(cls, m) -> "HIsometry":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def from_disk(cls, alpha: complex, beta: complex) -> "HIsometry":
        """Build from the disk form ``z -> (alpha z + beta) / (conj(beta) z + conj(alpha))``."""
        return cls(alpha.real + beta.real, alpha.imag - beta.imag,
                   -alpha.imag - beta.imag, alpha.real - beta.real)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def trace(self) -> float:
        return self.a + self.d

    def to_json(self):
        return [[self.a, self.b], [self.c, self.d]]


HPointOrBoundary = Union[HPoint, HBoundary]

IDENTITY = HIsometry(1.0, 0.0, 0.0, 1.0)


# ---------------------------------------------------------------------------
# group operations and constructors


def compose(g: HIsometry, h: HIsometry) -> HIsometry:
    """``g o h`` (apply ``h`` first)."""
    return HIsometry(g.a * h.a + g.b * h.c, g.a * h.b + g.b * h.d,
                     g.c * h.a + g.d * h.c, g.c * h.b + g.d * h.d)


def inverse(g: HIsometry) -> HIsometry:
    return HIsometry(g.d, -g.b, -g.c, g.a)


def power(g: HIsometry, n: int) -> HIsometry:
    if n < 0:
        return power(inverse(g), -n)
    out = IDENTITY
    base = g
    while n:
        if n & 1:
            out = compose(out, base)
        base = compose(base, base)
        n >>= 1
    return out


def rotation(theta: float) -> HIsometry:
    """Rotation of the disk about the origin by ``theta``."""
    return HIsometry.from_disk(cmath.exp(0.5j * theta), 0j)


def translation(t: float) -> HIsometry:
    """Translation by ``t`` along the diameter from angle pi towards angle 0."""
    return HIsometry(math.exp(t / 2), 0.0, 0.0, math.exp(-t / 2))


def hyperbolic_with_axis(forward: HBoundary, backward: HBoundary, length: float) -> HIsometry:
    """Hyperbolic isometry translating by ``length`` from ``backward`` towards ``forward``."""
    if forward == backward:
        raise ValueError("axis endpoints must differ")
    to_origin = moving_to_origin(project_to_geodesic(forward, backward, HPoint(0.0, 0.0)))
    frame = compose(inverse(to_origin), rotation(apply(to_origin, forward).angle))
    return compose(frame, compose(translation(length), inverse(frame)))


def moving_to_origin(p: HPoint) -> HIsometry:
    """The transvection ``z -> (z - p)/(1 - conj(p) z)`` taking ``p`` to the origin."""
    z = p.z
    s = math.sqrt(_one_minus_abs2(z))
    return HIsometry.from_disk(complex(1.0 / s), -z / s)


# ---------------------------------------------------------------------------
# action


def _mobius(alpha: complex, beta: complex, z: complex) -> complex:
    return (alpha * z + beta) / (beta.conjugate() * z + alpha.conjugate())


def apply(g: HIsometry, x: HPointOrBoundary) -> HPointOrBoundary:
    if isinstance(x, HBoundary):
        w = _mobius(g.alpha, g.beta, x.zeta)
        return HBoundary.from_complex(w)
    return HPoint.from_complex(_mobius(g.alpha, g.beta, x.z))


def _to_chart(p: complex, z: complex) -> complex:
    return (z - p) / (1 - p.conjugate() * z)


def _from_chart(p: complex, w: complex) -> complex:
    return (w + p) / (1 + p.conjugate() * w)


# ---------------------------------------------------------------------------
# metric quantities


def _one_minus_abs2(z: complex) -> float:
    r = abs(z)
    return (1.0 - r) * (1.0 + r)


def distance(a: HPoint, b: HPoint) -> float:
    za, zb = a.z, b.z
    num = abs(za - zb)
    if num == 0.0:
        return 0.0
    den = abs(1 - za.conjugate() * zb)
    r = num / den
    # 1 - r^2 = (1-|a|^2)(1-|b|^2)/|1 - conj(a) b|^2, avoids cancellation in 1 - r
    one_minus_r2 = _one_minus_abs2(za) * _one_minus_abs2(zb) / (den * den)
    return 2.0 * math.log1p(r) - math.log(one_minus_r2)


def distance_from_origin(a: HPoint) -> float:
    r = abs(a.z)
    return 2.0 * math.log1p(r) - math.log(_one_minus_abs2(a.z))


def point_toward(x: HPoint, target: HPointOrBoundary, t: float) -> HPoint:
    """Point at distance ``t`` from ``x`` on the geodesic towards ``target``."""
    p = x.z
    if isinstance(target, HBoundary):
        w = _to_chart(p, target.zeta)
    else:
        w = _to_chart(p, target.z)
        if w == 0:
            return x
    direction = w / abs(w)
    return HPoint.from_complex(_from_chart(p, math.tanh(t / 2.0) * direction))


def point_along(a: HPoint, b: HPoint, t: float) -> HPoint:
    return point_toward(a, b, t)


def midpoint(a: HPoint, b: HPoint) -> HPoint:
    if a == b:
        return a
    return point_toward(a, b, distance(a, b) / 2.0)


def reflect_through_point(a: HPoint, x: HPoint) -> HPoint:
    """Geodesic symmetry ``s_a``: the point with ``a`` as midpoint of ``[x, s_a x]``."""
    p = a.z
    return HPoint.from_complex(_from_chart(p, -_to_chart(p, x.z)))


def _busemann_origin(zeta: complex, z: complex) -> float:
    return math.log(abs(zeta - z) ** 2 / _one_minus_abs2(z))


def busemann(xi: HBoundary, base: HPoint, z: HPoint) -> float:
    """Busemann function of ``xi`` normalised to vanish at ``base``."""
    zeta = xi.zeta
    return _busemann_origin(zeta, z.z) - _busemann_origin(zeta, base.z)


def gromov_product(x: HPointOrBoundary, y: HPointOrBoundary, o: HPoint) -> float:
    if isinstance(x, HPoint) and isinstance(y, HPoint):
        return 0.5 * (distance(x, o) + distance(y, o) - distance(x, y))
    if isinstance(x, HBoundary) and isinstance(y, HBoundary):
        if x == y:
            return math.inf
        w1 = _to_chart(o.z, x.zeta)
        w2 = _to_chart(o.z, y.zeta)
        chord = abs(w1 / abs(w1) - w2 / abs(w2))
        if chord == 0.0:
            return math.inf
        return -math.log(chord / 2.0)
    if isinstance(x, HBoundary):
        x, y = y, x
    return 0.5 * (distance(x, o) - busemann(y, o, x))


def translation_length(g: HIsometry) -> float:
    tr = abs(g.trace)
    if tr <= 2.0 + 1e-9:
        return 0.0
    return 2.0 * math.acosh(tr / 2.0)


def fixed_points(g: HIsometry) -> tuple[HBoundary, HBoundary]:
    """(attracting, repelling) boundary fixed points of a hyperbolic isometry."""
    if translation_length(g) == 0.0:
        raise ValueError("isometry is not hyperbolic")
    alpha, beta = g.alpha, g.beta
    # fixed points of the disk action solve conj(beta) z^2 - 2i Im(alpha) z - beta = 0
    disc = math.sqrt(max(abs(beta) ** 2 - alpha.imag ** 2, 0.0))
    roots = [(1j * alpha.imag + s) / beta.conjugate() for s in (disc, -disc)]
    # derivative at a fixed point is 1/(conj(beta) z + conj(alpha))^2
    roots.sort(key=lambda z: -abs(beta.conjugate() * z + alpha.conjugate()))
    return HBoundary.from_complex(roots[0]), HBoundary.from_complex(roots[1])


# ---------------------------------------------------------------------------
# geodesics


@dataclass(frozen=True)
class HGeodesic:
    forward: HBoundary
    backward: HBoundary
    basepoint: HPoint

    def __post_init__(self):
        if self.forward == self.backward:
            raise ValueError("geodesic endpoints must differ")
        w1 = _to_chart(self.basepoint.z, self.forward.zeta)
        w2 = _to_chart(self.basepoint.z, self.backward.zeta)
        if abs(w1 / abs(w1) + w2 / abs(w2)) > 1e-9:
            raise ValueError("basepoint does not lie on the geodesic")

    def reversed(self) -> "HGeodesic":
        return HGeodesic(self.backward, self.forward, self.basepoint)


def geodesic_point(g: HGeodesic, t: float) -> HPoint:
    if t == 0:
        return g.basepoint
    return point_toward(g.basepoint, g.forward if t > 0 else g.backward, abs(t))


def project_to_geodesic(forward: HBoundary, backward: HBoundary, o: HPoint) -> HPoint:
    """Orthogonal projection of ``o`` onto the geodesic with the given endpoints."""
    p = o.z
    w1 = _to_chart(p, forward.zeta)
    w2 = _to_chart(p, backward.zeta)
    w1, w2 = w1 / abs(w1), w2 / abs(w2)
    sh = abs(w1 - w2) / 2.0
    ch = abs(w1 + w2) / 2.0
    if ch < 1e-15:
        return o
    r = (1.0 - sh) / ch
    direction = (w1 + w2) / abs(w1 + w2)
    return HPoint.from_complex(_from_chart(p, r * direction))


def geodesic_through(forward: HBoundary, backward: HBoundary,
                     near: HPoint | None = None) -> HGeodesic:
    """Geodesic between two ideal points, based at the projection of ``near`` (default origin)."""
    near = near if near is not None else HPoint(0.0, 0.0)
    base = project_to_geodesic(forward, backward, near)
    return HGeodesic(forward, backward, base)


def limit_direction(x: HPoint, o: HPoint) -> HBoundary:
    """Boundary point hit by the ray from ``o`` through ``x``."""
    w = _to_chart(o.z, x.z)
    if w == 0:
        raise ValueError("direction undefined at the base point")
    return HBoundary.from_complex(_from_chart(o.z, w / abs(w)))


# ---------------------------------------------------------------------------
# vectorised helpers (used by orbit enumerations)


def distance_many(za: np.ndarray, zb: np.ndarray) -> np.ndarray:
    """Elementwise (broadcasting) distances between arrays of complex disk points."""
    za = np.asarray(za, dtype=complex)
    zb = np.asarray(zb, dtype=complex)
    num = np.abs(za - zb)
    den = np.abs(1 - np.conj(za) * zb)
    ra, rb = np.abs(za), np.abs(zb)
    one_minus = (1 - ra) * (1 + ra) * (1 - rb) * (1 + rb) / (den * den)
    r = num / den
    return 2.0 * np.log1p(r) - np.log(one_minus)


def mobius_many(alpha: np.ndarray, beta: np.ndarray, z) -> np.ndarray:
    return (alpha * z + beta) / (np.conj(beta) * z + np.conj(alpha))
