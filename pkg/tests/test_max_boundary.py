import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horomax import free_group_tree as ft
from horomax import hyperbolic_plane as hp
from horomax.max_boundary import (BasePair, ClassifyParams, JoinPoint, MaxProduct, ProductPoint,
                                  Regular, Singular, Undecided, boundary_point_from_json, from_join,
                                  join_coordinates, sigma, sigma_inverse)
from horomax.spaces import H2, TreeSpace

T2 = TreeSpace(2)
P = MaxProduct(H2, H2)
TP = MaxProduct(T2, T2)
BASE = BasePair(H2.origin, H2.origin)
TBASE = BasePair(T2.origin, T2.origin)

angles = st.floats(0, 2 * math.pi, allow_nan=False)


@st.composite
def h2_points(draw, r_max=2.0):
    return hp.point_toward(H2.origin, hp.HBoundary(draw(angles)), draw(st.floats(0, r_max)))


@st.composite
def regulars(draw):
    return Regular(hp.HBoundary(draw(angles)), hp.HBoundary(draw(angles)),
                   draw(st.floats(-4, 4, allow_nan=False)))


def _limit_value(prod, seq_point, base, z):
    bp = ProductPoint(base.o, base.o2)
    return prod.dmax(seq_point, z) - prod.dmax(seq_point, bp)


def test_horofunction_vanishes_at_base():
    b = Regular(hp.HBoundary(0.3), hp.HBoundary(2.0), -1.5)
    assert P.horofunction_value(b, BASE, ProductPoint(H2.origin, H2.origin)) == pytest.approx(0.0)


@settings(max_examples=60, deadline=None)
@given(angles, angles, st.floats(-3, 3), h2_points(), h2_points())
def test_regular_horofunction_is_limit_of_distance_functions(a1, a2, c, zx, zy):
    xi, xi2 = hp.HBoundary(a1), hp.HBoundary(a2)
    t = 18.0
    # gap d1 - d2 tends to c when the second coordinate runs c behind
    far = ProductPoint(hp.point_toward(H2.origin, xi, t), hp.point_toward(H2.origin, xi2, t - c))
    z = ProductPoint(zx, zy)
    b = Regular(xi, xi2, c)
    assert P.horofunction_value(b, BASE, z) == pytest.approx(_limit_value(P, far, BASE, z), abs=1e-6)


def test_singular_horofunction_is_factor_busemann():
    xi = hp.HBoundary(1.0)
    z = ProductPoint(hp.HPoint(0.2, 0.1), hp.HPoint(-0.3, 0.4))
    assert P.horofunction_value(Singular(1, xi), BASE, z) == pytest.approx(hp.busemann(xi, H2.origin, z.x))
    assert P.horofunction_value(Singular(2, xi), BASE, z) == pytest.approx(hp.busemann(xi, H2.origin, z.y))


def test_rebase_toward_xi_decreases_offset():
    xi, xi2 = hp.HBoundary(0.0), hp.HBoundary(2.0)
    b = Regular(xi, xi2, 0.7)
    t = 1.25
    new = BasePair(hp.point_toward(H2.origin, xi, t), H2.origin)
    assert P.rebase(b, BASE, new).c == pytest.approx(0.7 - t, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(regulars(), h2_points(), h2_points(), h2_points(), h2_points())
def test_rebase_preserves_horofunction_up_to_constant(b, o1, o2, zx, zy):
    new = BasePair(o1, o2)
    nb = P.rebase(b, BASE, new)
    z = ProductPoint(zx, zy)
    w = ProductPoint(H2.origin, hp.HPoint(0.1, 0.2))
    d_old = P.horofunction_value(b, BASE, z) - P.horofunction_value(b, BASE, w)
    d_new = P.horofunction_value(nb, new, z) - P.horofunction_value(nb, new, w)
    assert d_new == pytest.approx(d_old, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(regulars(), h2_points(), h2_points(), angles, angles)
def test_boundary_action_is_pushforward(b, zx, zy, r1, r2):
    g1 = hp.compose(hp.moving_to_origin(hp.HPoint(0.2, -0.1)), hp.rotation(r1))
    g2 = hp.compose(hp.moving_to_origin(hp.HPoint(-0.3, 0.2)), hp.rotation(r2))
    gb = P.boundary_action(g1, g2, b, BASE)
    z = ProductPoint(zx, zy)
    w = ProductPoint(hp.HPoint(0.1, 0.0), H2.origin)
    # h_{gb}(gz) - h_{gb}(gw) = h_b(z) - h_b(w)
    lhs = P.horofunction_value(gb, BASE, P.act(g1, g2, z)) - P.horofunction_value(gb, BASE, P.act(g1, g2, w))
    rhs = P.horofunction_value(b, BASE, z) - P.horofunction_value(b, BASE, w)
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_tree_boundary_action_exact():
    b = Regular(ft.TreeEnd("", "a"), ft.TreeEnd("b", "ab"), Fraction(3, 2))
    g = ft.TreeIsometry("Ab")
    gb = TP.boundary_action(g, g, b, TBASE)
    assert isinstance(gb.c, Fraction)
    for zx, zy in [("", "b"), ("aa", "Ba"), ("bab", "")]:
        z = ProductPoint(ft.vertex(zx), ft.vertex(zy))
        gz = TP.act(g, g, z)
        o = ProductPoint(T2.origin, T2.origin)
        go = TP.act(g, g, o)
        assert (TP.horofunction_value(gb, TBASE, gz) - TP.horofunction_value(gb, TBASE, go)
                == TP.horofunction_value(b, TBASE, z))


def test_join_round_trip_and_sigma():
    assert sigma(0.0) == 0.5
    for c in (-5.0, -0.3, 0.0, 2.2):
        assert sigma_inverse(sigma(c)) == pytest.approx(c, abs=1e-12)
    b = Regular(hp.HBoundary(1.0), hp.HBoundary(2.0), 0.4)
    back = from_join(join_coordinates(b))
    assert back.c == pytest.approx(0.4) and back.xi == b.xi
    assert from_join(JoinPoint(hp.HBoundary(1.0), None, 1.0)) == Singular(1, hp.HBoundary(1.0))
    assert from_join(JoinPoint(None, hp.HBoundary(1.0), 0.0)) == Singular(2, hp.HBoundary(1.0))


def test_json_round_trip():
    b = Regular(ft.TreeEnd("a", "b"), ft.TreeEnd("", "A"), Fraction(-3, 2))
    assert boundary_point_from_json(b.to_json(), T2, T2) == b
    s = Singular(2, hp.HBoundary(0.5))
    assert boundary_point_from_json(s.to_json(), H2, H2) == s
    with pytest.raises(ValueError):
        boundary_point_from_json({"kind": "nope"}, H2, H2)


# --- classification --------------------------------------------------------

def _ray(o, xi, ts):
    return [hp.point_toward(o, xi, t) for t in ts]


TS = [0.5 * n for n in range(1, 41)]


def test_classify_paired_rays_h2():
    xi, xi2 = hp.HBoundary(0.0), hp.HBoundary(1.0)
    seq = [ProductPoint(x, y) for x, y in zip(_ray(H2.origin, xi, TS), _ray(H2.origin, xi2, [t + 1 for t in TS]))]
    res = P.classify_sequence(seq, BASE)
    assert isinstance(res, Regular)
    assert res.c == pytest.approx(-1.0, abs=1e-6)


def test_classify_fixed_second_coordinate_is_singular():
    xi = hp.HBoundary(2.0)
    seq = [ProductPoint(x, hp.HPoint(0.1, 0.1)) for x in _ray(H2.origin, xi, TS)]
    res = P.classify_sequence(seq, BASE)
    assert isinstance(res, Singular) and res.factor == 1
    assert hp.angular_distance(res.xi, xi) < 1e-6


def test_classify_first_coordinate_fixed_is_factor_two():
    seq = [ProductPoint(ft.vertex("b"), ft.vertex("a" * n)) for n in range(1, 41)]
    assert TP.classify_sequence(seq, TBASE) == Singular(2, ft.TreeEnd("", "a"))


def test_classify_oscillating_is_undecided():
    seq = [ProductPoint(ft.vertex("a" * n), ft.vertex("b" * (n + 2 * (n % 2)))) for n in range(1, 41)]
    assert isinstance(TP.classify_sequence(seq, TBASE), Undecided)


def test_classify_tree_offset_is_exact_fraction():
    seq = [ProductPoint(ft.point_on_edge("a" * n, "a", Fraction(1, 3)), ft.vertex("B" * n))
           for n in range(1, 41)]
    res = TP.classify_sequence(seq, TBASE)
    assert res == Regular(ft.TreeEnd("", "a"), ft.TreeEnd("", "B"), Fraction(1, 3))


def test_classify_bounded_sequence_rejected():
    seq = [ProductPoint(H2.origin, hp.HPoint(0.1, 0.0))] * 20
    with pytest.raises(ValueError):
        P.classify_sequence(seq, BASE)


def test_gap_threshold_flag_controls_singular_detection():
    # the gap grows to 40 but stays below a threshold of 100
    seq = [ProductPoint(ft.vertex("a" * n), T2.origin) for n in range(1, 41)]
    assert isinstance(TP.classify_sequence(seq, TBASE, ClassifyParams(gap_threshold=100)), Undecided)
    assert isinstance(TP.classify_sequence(seq, TBASE), Singular)


def test_same_point_tolerances():
    a = Regular(hp.HBoundary(0.0), hp.HBoundary(1.0), 0.5)
    b = Regular(hp.HBoundary(1e-10), hp.HBoundary(1.0), 0.5 + 1e-8)
    assert P.same_point(a, b)
    assert not P.same_point(a, Regular(a.xi, a.xi2, 0.6))
    assert not P.same_point(a, Singular(1, a.xi))


def test_regular_requires_finite_offset():
    with pytest.raises(ValueError):
        Regular(hp.HBoundary(0.0), hp.HBoundary(1.0), math.inf)


def test_gaps_vectorizable():
    seq = [ProductPoint(hp.HPoint(0.1 * k, 0.0), H2.origin) for k in range(5)]
    g = np.array(P.gaps(seq, BASE), dtype=float)
    assert np.all(np.diff(g) > 0)
