from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pacal import discrete as ds
from pacal.errors import DomainError
from pacal.gallery import make
from pacal.space import BoxDomain
from oracles import rot

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
small = arrays(np.float64, 2, elements=st.floats(-0.5, 0.5, allow_nan=False))
point = arrays(np.float64, 2, elements=st.floats(-2.0, 2.0, allow_nan=False))
# mixed_exp2d stretches steps by up to e^|y|; this keeps every step inside [-4, 4]^2
inner = arrays(np.float64, 2, elements=st.floats(-1.0, 1.0, allow_nan=False))


def test_flat_values(flat, rng):
    for _ in range(20):
        p, u, v, w = rng.uniform(-1, 1, (4, 2))
        assert np.array_equal(ds.deviation(flat, u, v, p), v)
        assert np.array_equal(ds.dissociation(flat, u, v, p), [0, 0])
        assert np.array_equal(ds.deviation2(flat, u, v, w, p), w)
        assert np.array_equal(ds.dissociation2(flat, u, v, w, p), [0, 0])
        assert np.allclose(ds.displacement(flat, u, v, p), p + u + v, rtol=0, atol=1e-15)
        assert np.allclose(ds.displacement2(flat, u, v, w, p), p + u + v + w, rtol=0, atol=1e-15)
        assert np.array_equal(ds.discrete_torsion(flat, u, v, p), [0, 0])
        assert np.array_equal(ds.discrete_riemann(flat, u, v, w, p), [0, 0])


def test_rotation_deviation_and_dissociation(rotation):
    sys = rotation.system
    assert np.allclose(ds.deviation(sys, E1, E1, [0, 0]), [np.cos(1), np.sin(1)], atol=1e-15)
    assert np.allclose(ds.dissociation(sys, E1, E1, [0, 0]), [np.cos(1) - 1, np.sin(1)], atol=1e-15)
    assert np.array_equal(ds.deviation(sys, E1, [0, 0], [0, 0]), [0, 0])


def test_vec_forms(mixed, rng):
    sys = mixed.system
    for _ in range(10):
        p, u, v = rng.uniform(-0.5, 0.5, (3, 2))
        expect = sys.act(sys.step(p, u), v) - sys.act(p, v)
        assert np.array_equal(ds.dissociation(sys, u, v, p, vec=True), expect)
        assert np.array_equal(ds.deviation(sys, u, v, p, vec=True), sys.act(sys.step(p, u), v))


def test_second_order_zero_cases(mixed, rng):
    sys = mixed.system
    p, u, v, w = rng.uniform(-0.5, 0.5, (4, 2))
    assert np.array_equal(ds.dissociation2(sys, [0, 0], v, w, p), [0, 0])
    assert np.array_equal(ds.dissociation2(sys, u, [0, 0], w, p), [0, 0])


def test_rotation_deviation2_closed_form(rotation):
    sys = rotation.system
    # G_v w at 0 with v = e2 stays at x0 = 0, so only R(1) from the u-step survives
    expect = rot(1.0) @ E1
    assert np.allclose(ds.deviation2(sys, E1, E2, E1, [0, 0]), expect, atol=1e-15)
    lhs = ds.dissociation2(sys, E1, E2, E1, [0, 0])
    rhs = ds.dissociation2_expanded(sys, E1, E2, E1, [0, 0])
    assert np.allclose(lhs, rhs, atol=1e-15)


def test_rotation_displacements(rotation):
    sys = rotation.system
    c, s = np.cos(1), np.sin(1)
    assert np.allclose(ds.displacement(sys, E1, E1, [0, 0]), [1 + c, s], atol=1e-15)
    assert np.array_equal(ds.displacement(sys, [0, 0], [0, 0], [0.3, 0.2]), [0.3, 0.2])
    assert np.allclose(ds.displacement2(sys, E1, E2, E1, [0, 0]), [1 - s + c, c + s], atol=1e-15)
    assert np.array_equal(ds.displacement2(sys, E1, E2, [0, 0], [0, 0]),
                          ds.displacement(sys, E1, E2, [0, 0]))


def test_rotation_torsion_and_bracket(rotation):
    sys = rotation.system
    t = ds.discrete_torsion(sys, E1, E2, [0, 0])
    assert np.allclose(t, [-np.sin(1), np.cos(1) - 1], atol=1e-15)
    assert np.allclose(ds.displacement_bracket(sys, E1, E2, [0, 0]), sys.act([0, 0], t), atol=1e-15)
    assert np.array_equal(ds.discrete_torsion(sys, E1, E1, [0, 0]), [0, 0])


def test_mixed_riemann_forms_and_brackets():
    # the iterated displacement from the origin reaches x0 > 4, so widen the box
    sys = make("mixed_exp2d", domain=BoxDomain.cube(2, 6.0)).system
    p = np.zeros(2)
    r_d = ds.discrete_riemann(sys, E1, E2, E1, p)
    r_g = ds.discrete_riemann(sys, E1, E2, E1, p, form="G")
    assert np.linalg.norm(r_d) > 0.1
    assert np.allclose(r_d, r_g, rtol=1e-12, atol=1e-14)
    lhs = ds.discrete_riemann(sys, E1, E2, E1, p, vec=True)
    rhs = ds.displacement2_bracket(sys, E1, E2, E1, p) - ds.displacement_bracket(sys, E1, E2, p)
    assert np.allclose(lhs, rhs, atol=1e-12)
    c = ds.discrete_cumulative(sys, E1, E2, E1, p, vec=True)
    assert np.allclose(c, ds.displacement2_bracket(sys, E1, E2, E1, p), atol=1e-12)


def test_constant_frame_bracket_equals_riemann():
    sys = make("rotation2d", omega=[0.0, 0.0]).system
    p, u, v, w = np.array([0.1, 0.2]), E1 * 0.3, E2 * 0.4, np.array([0.5, -0.1])
    assert np.allclose(ds.displacement2_bracket(sys, u, v, w, p),
                       ds.discrete_riemann(sys, u, v, w, p, vec=True), atol=1e-15)


def test_cumulative_with_zero_w_is_torsion(mixed):
    sys = mixed.system
    u, v, p = np.array([0.2, -0.1]), np.array([0.3, 0.4]), np.array([0.1, 0.1])
    assert np.array_equal(ds.discrete_cumulative(sys, u, v, [0, 0], p),
                          ds.discrete_torsion(sys, u, v, p))
    assert np.linalg.norm(ds.discrete_torsion(sys, u, v, p)) > 0


@given(inner, small, small, small)
@settings(max_examples=200, deadline=None)
def test_antisymmetry_bit_exact(p, u, v, w):
    sys = make("mixed_exp2d").system
    assert np.array_equal(ds.discrete_torsion(sys, u, v, p), -ds.discrete_torsion(sys, v, u, p))
    assert np.array_equal(ds.discrete_riemann(sys, u, v, w, p), -ds.discrete_riemann(sys, v, u, w, p))
    assert np.array_equal(ds.discrete_cumulative(sys, u, v, w, p),
                          -ds.discrete_cumulative(sys, v, u, w, p))


@given(point, small, small, small)
@settings(max_examples=100, deadline=None)
def test_bracket_identities(p, u, v, w):
    sys = make("rotation2d", omega=[0.7, -0.4]).system
    scale = max(1.0, np.linalg.norm(ds.displacement2(sys, u, v, w, p)))
    t_vec = sys.act(p, ds.discrete_torsion(sys, u, v, p))
    assert np.linalg.norm(t_vec - ds.displacement_bracket(sys, u, v, p)) <= 1e-12 * scale
    c_vec = ds.discrete_cumulative(sys, u, v, w, p, vec=True)
    assert np.linalg.norm(c_vec - ds.displacement2_bracket(sys, u, v, w, p)) <= 1e-12 * scale


def test_transport_flat_and_empty(flat):
    v = np.array([0.3, -0.7])
    path = ds.PolyPath(np.zeros(2), (E1, E2, -E1, -E2))
    assert np.array_equal(ds.transport(flat, v, path), v)
    assert np.array_equal(ds.transport(flat, v, ds.PolyPath(np.zeros(2))), v)


def test_transport_square_loop_rotation(rotation):
    sys = rotation.system
    steps = (E1, E2, -E1, -E2)
    # oracle: walk the chart with closed-form frames and chain the frame ratios
    pts = [np.zeros(2)]
    mats = []
    for u in steps:
        q = pts[-1] + rot(pts[-1][0]) @ u
        mats.append(np.linalg.inv(rot(pts[-1][0])) @ rot(q[0]))
        pts.append(q)
    expect = np.array([1.0, 0.0])
    for m in mats:
        expect = m @ expect
    res = ds.transport(sys, [1.0, 0.0], ds.PolyPath(np.zeros(2), steps), full_output=True)
    assert np.allclose(res.final, expect, atol=1e-14)
    assert np.allclose(res.points[-1], pts[-1], atol=1e-14)


def test_transport_domain_exit_reports_step(flat):
    path = ds.PolyPath(np.zeros(2), (E1 * 2, E1 * 2, E1 * 2))
    with pytest.raises(DomainError) as info:
        ds.transport(flat, E2, path)
    assert info.value.step == 2


def test_discrete_curvature_map(mixed, rng):
    sys = mixed.system
    p = np.array([0.1, -0.2])
    cmap = ds.discrete_curvature(sys, p)
    u, v = rng.uniform(-0.3, 0.3, (2, 2))
    assert np.array_equal(cmap.apply(u, v), ds.dissociation(sys, u, v, p))
    assert np.allclose(cmap.matrix(u) @ v, cmap.apply(u, v), atol=1e-14)
