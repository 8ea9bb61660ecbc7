import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iga_contact.errors import ConfigurationError, DomainError
from iga_contact.geometry import quarter_annulus, rectangle
from iga_contact.splines import (
    KnotVector,
    NurbsPatch2D,
    boundary_curve,
    eval_basis,
    graded_breaks,
    greville_points,
    physical_basis,
    refine_knots,
    refine_to_breaks,
    tensor_basis,
)


@st.composite
def knot_vectors(draw):
    p = draw(st.integers(1, 4))
    inner = draw(st.lists(st.floats(0.01, 0.99), min_size=0, max_size=6))
    inner = sorted(inner)
    # cap multiplicities at p
    kept = []
    for x in inner:
        if kept.count(x) < p:
            kept.append(x)
    return KnotVector(p, np.r_[[0.0] * (p + 1), kept, [1.0] * (p + 1)])


def test_quadratic_bernstein_values():
    kv = KnotVector(2, [0, 0, 0, 1, 1, 1])
    _, N = eval_basis(kv, 0.0)
    np.testing.assert_allclose(N[0], [1, 0, 0], atol=0)
    _, N = eval_basis(kv, 0.5)
    np.testing.assert_allclose(N[0], [0.25, 0.5, 0.25], rtol=1e-15)


def test_right_endpoint_belongs_to_last_span():
    kv = KnotVector.uniform(3, 4)
    span, N = eval_basis(kv, 1.0)
    assert span == kv.n - 1
    np.testing.assert_allclose(N[0], [0, 0, 0, 1], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(knot_vectors(), st.floats(0.0, 1.0))
def test_partition_of_unity_and_non_negativity(kv, xi):
    _, N = eval_basis(kv, xi)
    assert abs(N[0].sum() - 1.0) <= 1e-14
    assert np.all(N[0] >= -1e-15)


@settings(max_examples=60, deadline=None)
@given(knot_vectors(), st.floats(0.0, 1.0))
def test_derivatives_match_finite_differences(kv, xi):
    p = kv.degree
    h = 1e-6
    # stay away from knots so the FD stencil lies in one span
    if np.min(np.abs(kv.knots - xi)) < 10 * h:
        return
    span, N = eval_basis(kv, xi, min(2, p))
    s1, Np = eval_basis(kv, xi + h, 1)
    s0, Nm = eval_basis(kv, xi - h, 1)
    assert s1 == s0 == span
    fd1 = (Np[0] - Nm[0]) / (2 * h)
    assert np.allclose(N[1], fd1, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(N[1]).max()))
    if p >= 2:
        fd2 = (Np[1] - Nm[1]) / (2 * h)
        assert np.allclose(N[2], fd2, rtol=1e-6, atol=1e-6 * max(1.0, np.abs(N[2]).max()))


def test_out_of_range_parameter_raises():
    kv = KnotVector.uniform(2, 3)
    with pytest.raises(DomainError):
        eval_basis(kv, 1.5)
    with pytest.raises(DomainError):
        eval_basis(kv, 0.5, 3)


@pytest.mark.parametrize(
    "degree, knots, expected",
    [
        (2, [0, 0, 0, 1, 1, 1], [0, 0.5, 1]),
        (2, [0, 0, 0, 0.5, 1, 1, 1], [0, 0.25, 0.75, 1]),
        (3, [0, 0, 0, 0, 1, 2, 3, 3, 3, 3], [0, 1 / 3, 1, 2, 8 / 3, 3]),
    ],
)
def test_greville_examples(degree, knots, expected):
    np.testing.assert_allclose(greville_points(KnotVector(degree, knots)), expected, rtol=1e-15)


@settings(max_examples=40, deadline=None)
@given(knot_vectors())
def test_greville_endpoints_and_order(kv):
    g = greville_points(kv)
    assert g.size == kv.n
    assert g[0] == kv.knots[0] and g[-1] == kv.knots[-1]
    assert np.all(np.diff(g) >= 0)


def test_invalid_knot_vectors():
    with pytest.raises(ConfigurationError):
        KnotVector(2, [0, 0, 1, 1, 1])  # not open
    with pytest.raises(ConfigurationError):
        KnotVector(2, [0, 0, 0, 0.6, 0.5, 1, 1, 1])
    with pytest.raises(ConfigurationError):
        KnotVector(2, [0, 0, 0, 0.5, 0.5, 0.5, 1, 1, 1])


def test_identity_patch_maps_parameters():
    patch = rectangle(0, 0, 1, 1, (4, 5), 2, spacing="greville")
    for xi, eta in [(0.0, 0.0), (0.3, 0.7), (1.0, 0.25)]:
        np.testing.assert_allclose(patch.evaluate(xi, eta)["x"], [xi, eta], atol=1e-15)


def test_quarter_annulus_is_exact():
    patch = quarter_annulus(0.5, 2.0, degree=2, u_breaks=np.linspace(0, 1, 5))
    for xi in np.linspace(0, 1, 23):
        assert abs(np.linalg.norm(patch.evaluate(xi, 1.0)["x"]) - 2.0) <= 1e-14
        assert abs(np.linalg.norm(patch.evaluate(xi, 0.0)["x"]) - 0.5) <= 1e-14


def test_rational_partition_of_unity(rng):
    patch = quarter_annulus(0.1, 1.0, degree=3, u_breaks=np.linspace(0, 1, 4))
    pts = rng.random((100, 2))
    for xi, eta in pts:
        tb = tensor_basis(patch, [xi], [eta], 0)
        assert abs(tb.R.sum() - 1.0) <= 1e-14


def test_physical_gradients_match_fd(rng):
    patch = quarter_annulus(0.2, 1.0, degree=3, u_breaks=np.linspace(0, 1, 4))
    pb = physical_basis(patch, [0.37], [0.61], second=True)
    coef = rng.standard_normal(patch.n_control_points)
    idx = pb.index[0]
    g = pb.grad[0].T @ coef[idx]
    # FD in parameter space combined with the inverse Jacobian
    h = 1e-6

    def val(u, v):
        q = physical_basis(patch, [u], [v])
        return q.R[0] @ coef[q.index[0]], q.X[0]

    fu = (val(0.37 + h, 0.61)[0] - val(0.37 - h, 0.61)[0]) / (2 * h)
    fv = (val(0.37, 0.61 + h)[0] - val(0.37, 0.61 - h)[0]) / (2 * h)
    np.testing.assert_allclose(pb.jac[0].T @ g, [fu, fv], rtol=1e-6)


def test_boundary_curves():
    sq = rectangle(0, 0, 1, 1, (4, 4), 2)
    c = boundary_curve(sq, "south")
    np.testing.assert_allclose(c.evaluate(0.0)[0], [0, 0], atol=1e-15)
    np.testing.assert_allclose(c.evaluate(1.0)[0], [1, 0], atol=1e-15)
    assert np.allclose(c.evaluate(0.4)[0][1], 0.0)
    ann = quarter_annulus(0.5, 1.0, degree=2, u_breaks=np.linspace(0, 1, 3))
    inner = boundary_curve(ann, "south")
    for t in np.linspace(0, 1, 11):
        assert abs(np.linalg.norm(inner.evaluate(t)[0]) - 0.5) <= 1e-14
        s = ann.evaluate(t, 0.0)["x"]
        np.testing.assert_allclose(inner.evaluate(t)[0], s, atol=1e-15)
    np.testing.assert_array_equal(inner.greville(), greville_points(ann.knot_u))


def test_knot_insertion_preserves_geometry(rng):
    kv = KnotVector(2, [0, 0, 0, 1, 1, 1])
    cp = rng.random((3, 3, 2))
    w = 0.5 + rng.random((3, 3))
    patch = NurbsPatch2D(kv, kv, cp, w)
    ref = refine_knots(patch, "u", [0.5])
    assert ref.knot_u.n == 4
    for xi, eta in rng.random((50, 2)):
        np.testing.assert_allclose(ref.evaluate(xi, eta)["x"], patch.evaluate(xi, eta)["x"],
                                   atol=1e-12)
    ref = refine_knots(ref, "u", [0.5])
    with pytest.raises(ConfigurationError):
        refine_knots(ref, "u", [0.5])


def test_graded_refinement_follows_rule():
    br = graded_breaks(50, 0.8, 0.1, "start")
    assert br.size == 51
    assert np.sum(br[1:] <= 0.1 + 1e-14) == 40
    patch = refine_to_breaks(quarter_annulus(0.01, 1.0, degree=3), br, graded_breaks(50, 0.8, 0.1, "end"))
    assert patch.knot_u.n_elements == 50 and patch.knot_v.n_elements == 50
    b = patch.knot_v.breaks
    assert np.sum(b[:-1] >= 0.9 - 1e-14) == 40
