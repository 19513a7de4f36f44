import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from gibc.errors import DeformationTooLarge, GeometryError, InvalidArgument
from gibc.geometry import (CIRCLE, INTERIOR, OBSTACLE, BoundaryCurve, PerturbationField,
                           apply_deformation, build_annulus_mesh, layer_fractions, make_circle,
                           make_ellipse, make_perturbed_ellipse, read_mesh, spectral_derivative,
                           upsample, validate_curve, write_mesh)


def arclength(a, b, gamma=0.0, m=1):
    """Adaptive quadrature of the parametric speed."""
    def speed(t):
        dx = -a * (np.sin(t) + gamma * m * np.sin(m * t))
        dy = b * (np.cos(t) + gamma * m * np.cos(m * t))
        return np.hypot(dx, dy)
    pieces = np.linspace(0, 2 * np.pi, 4 * m + 1)
    return sum(quad(speed, lo, hi, epsabs=1e-14, epsrel=1e-14, limit=200)[0]
               for lo, hi in zip(pieces[:-1], pieces[1:]))


def test_circle_perimeter():
    assert make_circle(0.35, 256).perimeter == pytest.approx(2 * np.pi * 0.35, abs=1e-10)


def test_ellipse_perimeter_against_quadrature():
    assert abs(make_ellipse(0.4, 0.3, 512).perimeter - arclength(0.4, 0.3)) <= 1e-8


def test_ellipse_mirror_symmetry():
    c = make_ellipse(0.4, 0.3, 128)
    mirrored = c.nodes[(-np.arange(128)) % 128] * [1, -1]
    assert np.allclose(c.nodes, mirrored, atol=1e-12, rtol=0)


def test_weights_sum_to_perimeter_and_tangents_unit():
    c = make_ellipse(0.4, 0.3, 64)
    assert c.weights.sum() == pytest.approx(c.perimeter, rel=1e-12)
    assert np.allclose(np.linalg.norm(c.tangents, axis=1), 1.0)
    # outward normals point away from the origin on a convex curve
    assert np.all(np.sum(c.normals * c.nodes, axis=1) > 0)


def test_small_node_count_rejected():
    with pytest.raises(InvalidArgument):
        make_ellipse(0.4, 0.3, 15)
    with pytest.raises(InvalidArgument):
        make_ellipse(-0.4, 0.3, 64)


def test_zero_perturbation_is_the_ellipse():
    a = make_ellipse(0.4, 0.3, 128)
    b = make_perturbed_ellipse(0.4, 0.3, 0.0, 20, 128)
    assert np.array_equal(a.nodes, b.nodes)


def test_perturbation_displacement_bound():
    a = make_ellipse(0.4, 0.3, 512)
    b = make_perturbed_ellipse(0.4, 0.3, 0.01, 20, 512)
    disp = np.linalg.norm(b.nodes - a.nodes, axis=1).max()
    assert 0 < disp <= 0.4 * 0.01 * np.sqrt(2)


def test_perturbed_perimeter_against_quadrature():
    c = make_perturbed_ellipse(0.4, 0.3, 0.03, 20, 512)
    assert c.perimeter > make_ellipse(0.4, 0.3, 512).perimeter
    assert abs(c.perimeter - arclength(0.4, 0.3, 0.03, 20)) <= 1e-8


def test_large_oscillation_self_intersects():
    with pytest.raises(GeometryError):
        make_perturbed_ellipse(0.4, 0.3, 0.2, 20, 512)


@pytest.mark.parametrize("gamma", [0.0, 0.01, 0.02, 0.03])
def test_star_shaped_for_small_oscillations(gamma):
    c = make_perturbed_ellipse(0.4, 0.3, gamma, 20, 512)
    validate_curve(c)
    assert np.all(c.radii > 0)


def test_validate_rejects_non_star_shaped():
    t = 2 * np.pi * np.arange(64) / 64
    nodes = np.column_stack([np.cos(t) + 0.3, np.sin(t)]) * 0.1 + [0.5, 0.0]
    bad = BoundaryCurve(t, nodes, nodes, np.ones(64))
    with pytest.raises(GeometryError):
        validate_curve(bad)


def test_zero_and_translation_deformations():
    c = make_ellipse(0.4, 0.3, 64)
    same = apply_deformation(c, PerturbationField.zero())
    assert np.array_equal(same.nodes, c.nodes)
    moved = apply_deformation(c, PerturbationField.translation([0.01, 0.0]))
    assert np.array_equal(moved.nodes, c.nodes + [0.01, 0.0])


def test_oscillation_field_reproduces_perturbed_ellipse():
    c = make_ellipse(0.4, 0.3, 256)
    field = PerturbationField.oscillation(0.4, 0.3, 0.01, 20)
    moved = apply_deformation(c, field)
    ref = make_perturbed_ellipse(0.4, 0.3, 0.01, 20, 256)
    assert np.allclose(moved.nodes, ref.nodes, atol=1e-12, rtol=0)
    assert np.allclose(moved.derivatives, ref.derivatives, atol=1e-9, rtol=0)


def test_deformation_too_large():
    c = make_ellipse(0.4, 0.3, 128)
    field = PerturbationField.oscillation(0.4, 0.3, 0.04, 20)
    assert field.norm(c) >= 1
    with pytest.raises(DeformationTooLarge):
        apply_deformation(c, field)


def test_oscillation_jacobian_matches_finite_differences():
    field = PerturbationField.oscillation(0.4, 0.3, 0.02, 5)
    x = np.array([[0.3, 0.1], [-0.2, 0.25], [0.1, -0.28]])
    h = 1e-6
    J = field.jacobian(x)
    for col in range(2):
        e = np.zeros(2)
        e[col] = h
        fd = (field.value(x + e) - field.value(x - e)) / (2 * h)
        assert np.allclose(J[:, :, col], fd, atol=1e-7)


def test_negated_deformation_is_first_order_inverse():
    c = make_ellipse(0.4, 0.3, 128)
    field = PerturbationField.oscillation(0.4, 0.3, 1e-3 / 0.4 / 20, 20)
    assert field.norm(c) < 1e-2
    there = apply_deformation(c, field)
    back = apply_deformation(there, -field)
    assert np.max(np.abs(back.nodes - c.nodes)) <= 1e-5


def test_spectral_derivative_and_upsample():
    t = 2 * np.pi * np.arange(32) / 32
    f = np.column_stack([np.cos(3 * t), np.sin(2 * t)])
    assert np.allclose(spectral_derivative(f), np.column_stack([-3 * np.sin(3 * t), 2 * np.cos(2 * t)]))
    fine = upsample(f, 4)
    tf = 2 * np.pi * np.arange(128) / 128
    assert np.allclose(fine, np.column_stack([np.cos(3 * tf), np.sin(2 * tf)]))


def test_mesh_counts_and_markers():
    m = build_annulus_mesh(make_circle(0.35, 64), 0.8, 8)
    assert m.n_vertices == 64 * 9
    assert len(m.triangles) == 64 * 8 * 2
    assert np.sum(m.markers == OBSTACLE) == 64
    assert np.sum(m.markers == CIRCLE) == 64
    assert np.sum(m.markers == INTERIOR) == 64 * 7
    assert np.allclose(np.linalg.norm(m.vertices[m.circle_vertices], axis=1), 0.8, atol=1e-12, rtol=0)


def test_mesh_obstacle_vertices_are_curve_nodes():
    c = make_perturbed_ellipse(0.4, 0.3, 0.02, 20, 256)
    m = build_annulus_mesh(c, 0.8, 16)
    assert np.array_equal(m.vertices[m.obstacle_vertices], c.nodes)


def annulus_defect(n_b, n_r):
    m = build_annulus_mesh(make_ellipse(0.4, 0.3, n_b), 0.8, n_r)
    areas = m.signed_areas()
    assert np.all(areas > 0)
    return abs(areas.sum() - (np.pi * 0.64 - np.pi * 0.12))


def test_mesh_area_and_refinement():
    exact = np.pi * 0.64 - np.pi * 0.12
    d1 = annulus_defect(256, 24)
    assert d1 <= 0.005 * exact
    assert d1 / annulus_defect(512, 48) >= 3


def test_mesh_is_conforming():
    m = build_annulus_mesh(make_ellipse(0.4, 0.3, 64), 0.8, 6)
    edges = np.sort(np.concatenate([m.triangles[:, [0, 1]], m.triangles[:, [1, 2]],
                                    m.triangles[:, [2, 0]]]), axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    # boundary edges (obstacle and circle) appear once, every other edge twice
    assert np.sum(counts == 1) == 2 * 64
    assert set(np.unique(counts)) == {1, 2}


def test_mesh_rejects_bad_input():
    c = make_ellipse(0.4, 0.3, 64)
    with pytest.raises(InvalidArgument):
        build_annulus_mesh(c, 0.8, 3)
    with pytest.raises(InvalidArgument):
        build_annulus_mesh(c, 0.35, 8)


@given(n_r=st.integers(4, 60), grading=st.floats(1.0, 1.5))
def test_layer_fractions_monotone(n_r, grading):
    s = layer_fractions(n_r, grading)
    assert s[0] == 0 and s[-1] == 1
    assert np.all(np.diff(s) > 0)
    # layers thicken away from the obstacle
    assert np.all(np.diff(np.diff(s)) >= -1e-15)


def test_mesh_file_round_trip(tmp_path):
    m = build_annulus_mesh(make_ellipse(0.4, 0.3, 32), 0.8, 4)
    path = tmp_path / "mesh.txt"
    write_mesh(m, path)
    v, t, mk = read_mesh(path)
    assert np.array_equal(v, m.vertices)
    assert np.array_equal(t, m.triangles)
    assert np.array_equal(mk, m.markers)
