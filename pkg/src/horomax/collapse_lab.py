"""Collapse of normal fibres along a geodesic ray.

A ray ``r`` starts at ``r(0)``; at time ``t`` we step a distance ``s`` from
``r(t)`` in the two opposite directions of a unit vector ``V`` making angle
``theta`` with the direction back to ``r(0)``.  With ``d_+`` and ``d_-`` the
distances of the two endpoints from ``r(0)``, the hyperbolic law of cosines gives

    cosh d_pm = cosh s cosh t -/+ cos(theta) sinh s sinh t,

and ``d_+ - d_-`` tends to ``-2 artanh(cos(theta) tanh s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import hyperbolic_plane as hp

_DIRECT_LIMIT = 30.0  # compute arcosh directly while log(cosh d) stays below this
_OVERFLOW_GUARD = 600.0  # beyond this sinh overflows and the log form takes over


@dataclass(frozen=True)
class CollapseConfig:
    s: float
    theta: float
    t_max: float = 30.0
    t_grid: tuple = field(default=())

    def __post_init__(self):
        if not self.s >= 0:
            raise ValueError(f"s must be >= 0, got {self.s}")
        if not 0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        grid = tuple(float(t) for t in self.t_grid)
        if any(t <= 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_grid must be positive and increasing")
        object.__setattr__(self, "t_grid", grid)


def _coefficients(cfg: CollapseConfig, sign: int) -> tuple[float, float]:
    """cosh d = (A e^t + B e^-t)/2 for the + (sign=+1) or - (sign=-1) endpoint."""
    c = math.cos(cfg.theta)
    ch, sh = math.cosh(cfg.s), math.sinh(cfg.s)
    return ch - sign * c * sh, ch + sign * c * sh


def _log_cosh_distance(A: float, B: float, t: float) -> float:
    return t + math.log(A / 2.0) + math.log1p((B / A) * math.exp(-2.0 * t))


def _arcosh_from_log(lx: float) -> float:
    if lx < _DIRECT_LIMIT:
        x = math.exp(lx)
        if x < 1.0:
            if x < 1.0 - 1e-12:
                raise ValueError(f"arcosh argument {x} < 1: invalid configuration")
            return 0.0
        return math.acosh(x)
    return lx + math.log1p(math.sqrt(-math.expm1(-2.0 * lx)))


def _half_angle_distance(cfg: CollapseConfig, t: float, sign: int) -> float:
    """d from (cosh d - 1)/2 = sinh^2((s-t)/2) + w sinh s sinh t, a sum of nonnegative terms.

    ``w`` is sin^2(theta/2) for the + endpoint and cos^2(theta/2) for the - endpoint.
    """
    w = math.sin(cfg.theta / 2) ** 2 if sign == 1 else math.cos(cfg.theta / 2) ** 2
    u = math.sinh((cfg.s - t) / 2) ** 2 + w * math.sinh(cfg.s) * math.sinh(t)
    return 2.0 * math.asinh(math.sqrt(u))


def dplus_dminus(cfg: CollapseConfig, t: float) -> tuple[float, float]:
    if t < 0:
        raise ValueError("t must be >= 0")
    out = []
    for sign in (1, -1):
        if t + cfg.s < _OVERFLOW_GUARD:
            out.append(_half_angle_distance(cfg, t, sign))
        else:
            A, B = _coefficients(cfg, sign)
            out.append(_arcosh_from_log(_log_cosh_distance(A, B, t)))
    return out[0], out[1]


def predicted_limit(cfg: CollapseConfig) -> float:
    return -2.0 * math.atanh(math.cos(cfg.theta) * math.tanh(cfg.s))


def gap_error(cfg: CollapseConfig, t: float) -> float:
    """``(d_+ - d_-)(t) - predicted`` evaluated without cancellation.

    Valid while both cosh d_pm are large enough for the log form, which is
    what the convergence-rate fit needs far beyond double-precision gaps.
    """
    total = 0.0
    for sign, weight in ((1, 1.0), (-1, -1.0)):
        A, B = _coefficients(cfg, sign)
        lx = _log_cosh_distance(A, B, t)
        eps = math.exp(-2.0 * lx)
        tail = math.log1p(-eps / (2.0 * (1.0 + math.sqrt(1.0 - eps))))
        total += weight * (math.log1p((B / A) * math.exp(-2.0 * t)) + tail)
    return total


def convergence_rate(cfg: CollapseConfig, t1: float = 10.0, t2: float = 20.0) -> float:
    """Fitted exponent k in |error(t)| ~ exp(k t) between two times (nan if the error vanishes)."""
    e1, e2 = abs(gap_error(cfg, t1)), abs(gap_error(cfg, t2))
    if e1 == 0.0 or e2 == 0.0:
        return math.nan
    return (math.log(e2) - math.log(e1)) / (t2 - t1)


@dataclass
class SweepRow:
    s: float
    theta: float
    t: float
    gap: float
    predicted: float
    error: float
    rate: float


def collapse_sweep(s_values: Sequence[float], theta_values: Sequence[float],
                   t_max: float = 30.0) -> list[SweepRow]:
    rows = []
    for s in s_values:
        for th in theta_values:
            cfg = CollapseConfig(float(s), float(th), t_max)
            dp, dm = dplus_dminus(cfg, t_max)
            pred = predicted_limit(cfg)
            gap = dp - dm
            rows.append(SweepRow(cfg.s, cfg.theta, t_max, gap, pred, abs(gap - pred),
                                 convergence_rate(cfg)))
    return rows


def default_grid(n: int = 20, s_max: float = 3.0) -> tuple[np.ndarray, np.ndarray]:
    return np.linspace(0.0, s_max, n), np.linspace(0.0, math.pi, n)


def realize_in_disk(cfg: CollapseConfig, t: float) -> tuple[hp.HPoint, hp.HPoint, hp.HPoint]:
    """Concrete points ``(r(t), q_+, q_-)`` in the disk with ``r(0)`` at the origin.

    The ray runs along the positive real axis and ``q_+`` sits in the direction
    at angle ``theta`` from the tangent pointing back to the origin.
    """
    p = complex(math.tanh(t / 2.0), 0.0)
    w = math.tanh(cfg.s / 2.0) * complex(math.cos(math.pi - cfg.theta),
                                          math.sin(math.pi - cfg.theta))
    rt = hp.HPoint.from_complex(p)
    qp = hp.HPoint.from_complex(hp._from_chart(p, w))
    qm = hp.HPoint.from_complex(hp._from_chart(p, -w))
    return rt, qp, qm
