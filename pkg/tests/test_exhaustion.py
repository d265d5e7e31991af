import numpy as np
import pytest

from evosq.errors import FormatError, MeshError
from evosq.exhaustion import (
    SurfaceMesh,
    collar_map_samples,
    exhaustion_order,
    load_mesh,
    push_through,
    smooth_min,
    smooth_min_nary,
    verify_order,
)
from evosq.meshes import annulus_mesh, disk_mesh, save_off, sphere_mesh, strip_mesh
from evosq.rng import SplitMix64


# -- smoothed minimum ---------------------------------------------------------


def test_smooth_min_bracket_sweep():
    rng = SplitMix64(42)
    eps = 0.3
    worst = 0.0
    for _ in range(5000):
        x = 10.0 * (rng.next_float() - 0.5)
        y = 10.0 * (rng.next_float() - 0.5)
        v = smooth_min(x, y, eps)
        m = min(x, y)
        assert m <= v <= m + 0.5 * eps + 1e-12
        worst = max(worst, v - m)
    # the bound is attained (at x == y) up to sweep granularity
    assert worst > 0.1


def test_smooth_min_exact_at_ties():
    # ties are exact; the excess grows with |x - y| toward (but below) eps/2
    assert smooth_min(1.0, 1.0, 0.3) == 1.0
    near = smooth_min(1.0, 1.1, 0.3) - 1.0
    far = smooth_min(1.0, 9.0, 0.3) - 1.0
    assert 0.0 < near < far < 0.15


def test_smooth_min_symmetric():
    assert smooth_min(1.0, 2.0, 0.2) == smooth_min(2.0, 1.0, 0.2)
    v = smooth_min(-5.0, 7.0, 0.2)
    assert -5.0 <= v <= -5.0 + 0.1


def test_smooth_min_eps_validation():
    with pytest.raises(ValueError, match="positive"):
        smooth_min(1.0, 2.0, 0.0)
    with pytest.raises(ValueError, match="positive"):
        smooth_min_nary([1.0, 2.0, 3.0], -0.1)


def test_nary_bound_and_pairwise_failure():
    # the pairwise eps/2 excess bound does not survive three arguments:
    # this triple exceeds it, while the (n-1) eps / 2 bound still holds
    vals, eps = (-2.0, 2.0, 2.0), 1.0
    v = smooth_min_nary(vals, eps)
    excess = v - min(vals)
    assert excess > 0.5 * eps
    assert excess <= (len(vals) - 1) * eps / 2


def test_nary_sweep_holds_general_bound():
    rng = SplitMix64(7)
    for n in (3, 4, 5):
        for _ in range(400):
            vals = [6.0 * (rng.next_float() - 0.5) for _ in range(n)]
            v = smooth_min_nary(vals, 0.4)
            assert min(vals) <= v <= min(vals) + (n - 1) * 0.2 + 1e-12


def test_nary_edge_cases():
    assert smooth_min_nary([3.5], 0.2) == 3.5
    assert smooth_min_nary([1.0, 2.0], 0.2) == smooth_min(1.0, 2.0, 0.2)
    with pytest.raises(ValueError, match="at least one"):
        smooth_min_nary([], 0.2)
    with pytest.raises(ValueError, match="pairwise folds"):
        smooth_min_nary(list(range(9)), 0.2)


# -- mesh construction and parsing ----------------------------------------------


def test_mesh_boundary_detection():
    m = strip_mesh(3, 2)
    assert m.n_triangles == 12
    assert not m.is_closed()
    assert len(m.boundary_vertices) == 10  # all perimeter vertices of a 3x2 grid
    s = sphere_mesh(1)
    assert s.is_closed()
    assert s.boundary_edges == []


def test_mesh_validation_errors():
    tri = np.array([[0, 1, 2]])
    with pytest.raises(MeshError, match="vertices"):
        SurfaceMesh(np.zeros((3,)), tri)
    with pytest.raises(MeshError, match="out of range"):
        SurfaceMesh(np.zeros((2, 3)), tri)
    with pytest.raises(MeshError, match="degenerate"):
        SurfaceMesh(np.zeros((3, 3)), np.array([[0, 1, 1]]))
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [2, 0, 0]])
    with pytest.raises(MeshError, match="not edge-manifold"):
        SurfaceMesh(verts, np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]]))
    with pytest.raises(MeshError, match="inconsistent orientation"):
        SurfaceMesh(verts, np.array([[0, 1, 2], [0, 1, 3]]))


def test_off_round_trip(tmp_path):
    m = annulus_mesh(2, 8)
    p = tmp_path / "annulus.off"
    save_off(p, m)
    back = load_mesh(p)
    assert np.array_equal(back.triangles, m.triangles)
    assert np.allclose(back.vertices, m.vertices)


def test_off_accepts_comments(tmp_path):
    p = tmp_path / "tri.off"
    p.write_text("OFF # header\n# a comment line\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    m = load_mesh(p)
    assert m.n_triangles == 1


def test_off_parse_errors(tmp_path):
    p = tmp_path / "bad.off"
    p.write_text("PLY\n3 1 0\n")
    with pytest.raises(FormatError, match="not an OFF file"):
        load_mesh(p)
    p.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 2 3\n")
    with pytest.raises(FormatError, match="4-gon"):
        load_mesh(p)
    p.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n")
    with pytest.raises(FormatError, match="malformed"):
        load_mesh(p)


# -- exhaustion order and verification --------------------------------------------


def test_exhaustion_deterministic():
    m = annulus_mesh(4, 12)
    o1, c1 = exhaustion_order(m)
    o2, c2 = exhaustion_order(m)
    assert o1 == o2
    assert c1 == c2
    assert verify_order(m, o1, c1)


def test_exhaustion_covers_all_triangles():
    m = disk_mesh(5, 16)
    order, certs = exhaustion_order(m)
    assert sorted(order) == list(range(m.n_triangles))
    kinds = {c["kind"] for c in certs}
    assert kinds == {"collar", "growth"}
    assert verify_order(m, order, certs)


def test_exhaustion_refuses_closed_surface():
    with pytest.raises(MeshError, match="closed surface"):
        exhaustion_order(sphere_mesh(1))


def test_exhaustion_reports_unreachable_component():
    # strip with boundary plus a disjoint tetrahedron (closed component)
    strip = strip_mesh(1, 1)
    nv = len(strip.vertices)
    tet_verts = np.array([[3.0, 0, 0], [4, 0, 0], [3.5, 1, 0], [3.5, 0.5, 1]])
    tet_faces = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]]) + nv
    m = SurfaceMesh(
        np.vstack([strip.vertices, tet_verts]),
        np.vstack([strip.triangles, tet_faces]),
    )
    with pytest.raises(MeshError, match="unreachable simplices"):
        exhaustion_order(m)


def test_verify_rejects_tampered_donor():
    m = annulus_mesh(3, 10)
    order, certs = exhaustion_order(m)
    bad = [dict(c) for c in certs]
    for c in bad:
        if c["kind"] == "growth":
            c["donor"] = order[-1] if c["triangle"] != order[-1] else order[-2]
            break
    with pytest.raises(MeshError, match="unabsorbed donor|not an edge"):
        verify_order(m, order, bad)


def test_verify_rejects_tampered_edge():
    m = annulus_mesh(3, 10)
    order, certs = exhaustion_order(m)
    bad = [dict(c) for c in certs]
    for c in bad:
        if c["kind"] == "growth":
            c["edge"] = (0, len(m.vertices) - 1)
            break
    with pytest.raises(MeshError, match="not an edge"):
        verify_order(m, order, bad)


def test_verify_rejects_reordered_pairs():
    m = strip_mesh(4, 4)
    order, certs = exhaustion_order(m)
    swapped = list(order)
    swapped[0], swapped[-1] = swapped[-1], swapped[0]
    with pytest.raises(MeshError, match="names triangle"):
        verify_order(m, swapped, certs)


def test_verify_rejects_non_permutation():
    m = strip_mesh(2, 2)
    order, certs = exhaustion_order(m)
    with pytest.raises(MeshError, match="permutation"):
        verify_order(m, [order[0]] * len(order), certs)
    with pytest.raises(MeshError, match="certificate count"):
        verify_order(m, order, certs[:-1])


def test_verify_rejects_unknown_kind():
    m = strip_mesh(2, 2)
    order, certs = exhaustion_order(m)
    bad = [dict(c) for c in certs]
    bad[0]["kind"] = "teleport"
    with pytest.raises(MeshError, match="unknown certificate kind"):
        verify_order(m, order, bad)


def test_verify_rejects_fake_collar():
    # inner triangles of a large disk touch no boundary vertex
    m = disk_mesh(6, 12)
    order, certs = exhaustion_order(m)
    bad = [dict(c) for c in certs]
    victim = next(i for i, c in enumerate(bad) if c["kind"] == "growth")
    bad[victim] = {"kind": "collar", "triangle": bad[victim]["triangle"]}
    with pytest.raises(MeshError, match="does not touch the boundary"):
        verify_order(m, order, bad)


# -- push-through maps -------------------------------------------------------------


def test_push_through_veronese_on_edge():
    # points on the shared edge press to the Veronese parameterization
    for t in (0.2, 0.5, 0.8):
        region, out = push_through((t, 1.0 - t, 0.0))
        assert region == "new"
        assert np.allclose(out, (t**2, (1 - t) ** 2, 2 * t * (1 - t)))
        assert sum(out) == pytest.approx(1.0)


def test_push_through_identity_outside_tube():
    b = (0.2, 0.2, 0.6)  # s = b_opp / (x1 x2) far above 0.6
    region, out = push_through(b)
    assert region == "donor"
    assert out == b


def test_push_through_simplex_preservation():
    rng = SplitMix64(3)
    for _ in range(2000):
        a, b = rng.next_float(), rng.next_float()
        c = rng.next_float()
        s = a + b + c
        bary = (a / s, b / s, c / s)
        region, out = push_through(bary)
        assert region in ("donor", "new")
        assert min(out) > -1e-12
        assert abs(sum(out) - 1.0) < 1e-9


def test_push_through_depth_monotone_near_edge():
    # deeper donor points press less far into the neighbor
    x1 = x2 = 0.5
    outs = []
    for bo in (0.0, 0.05, 0.1):
        b1, b2 = x1 * (1 - bo), x2 * (1 - bo)
        region, out = push_through((b1, b2, bo))
        assert region == "new"
        outs.append(out[2])
    assert outs[0] > outs[1] > outs[2]


def test_collar_map_sampling_clean():
    m = annulus_mesh(3, 12)
    order, certs = exhaustion_order(m)
    res = collar_map_samples(m, order, certs, samples_per_cell=4)
    assert res["growth_steps"] > 0
    assert res["collisions"] == 0
    assert res["min_new_samples"] >= 1
    assert res["min_pair_distance"] > 1e-9


def test_collar_map_sampling_validates_density():
    with pytest.raises(MeshError, match=">= 4"):
        collar_map_samples(strip_mesh(2, 2), samples_per_cell=2)
