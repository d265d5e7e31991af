import numpy as np
import pytest

from evosq.errors import DepthIndexError, GeometryError
from evosq.geometry import (
    build_warped_geometry,
    conformal_potential,
    derivative_matrix,
    fd_weights,
    make_profile,
    slice_data,
    sobolev_apply,
    sobolev_norm,
)


# -- profiles ---------------------------------------------------------------


def test_disk_profile():
    p = make_profile("disk")
    assert p.T == 1.0
    assert p.cap == "center"
    assert p.r(0.0) == 1.0
    assert np.isclose(p.r(0.4), 0.6)
    assert np.isclose(p.rp(0.2), -1.0)


def test_annulus_profile():
    p = make_profile("annulus", rho=0.25)
    assert np.isclose(p.T, 0.75)
    assert p.cap == "dirichlet"
    assert np.isclose(p.r(p.T), 0.25)


def test_flat_cylinder_profile():
    p = make_profile("flat-cylinder", T=0.8)
    assert p.cap == "dirichlet"
    ts = np.linspace(0, 0.8, 9)
    assert np.allclose(p.r(ts), 1.0)
    assert np.allclose(p.rp(ts), 0.0)


def test_custom_profile_interpolates_samples():
    ts = np.linspace(0.0, 1.0, 9)
    rs = 1.0 + 0.3 * np.sin(ts)
    p = make_profile("custom", t_samples=ts, r_samples=rs, cap="dirichlet")
    assert np.allclose(p.r(ts), rs)
    assert p.T == 1.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"name": "annulus", "rho": 0.0},
        {"name": "annulus", "rho": 1.0},
        {"name": "annulus", "rho": -0.5},
        {"name": "flat-cylinder", "T": 0.0},
        {"name": "nosuch"},
    ],
)
def test_invalid_profiles(kwargs):
    name = kwargs.pop("name")
    with pytest.raises(GeometryError, match="invalid profile"):
        make_profile(name, **kwargs)


def test_custom_profile_validation():
    with pytest.raises(GeometryError, match="4 matching samples"):
        make_profile("custom", t_samples=[0, 1], r_samples=[1, 1], cap="dirichlet")
    with pytest.raises(GeometryError, match="increase"):
        make_profile(
            "custom", t_samples=[0, 0.5, 0.4, 1], r_samples=[1, 1, 1, 1], cap="dirichlet"
        )
    with pytest.raises(GeometryError, match="positive"):
        make_profile(
            "custom", t_samples=[0, 0.3, 0.6, 1], r_samples=[1, 0.5, -0.1, 1], cap="dirichlet"
        )
    with pytest.raises(GeometryError, match="unknown cap"):
        make_profile(
            "custom", t_samples=[0, 0.3, 0.6, 1], r_samples=[1, 1, 1, 1], cap="mystery"
        )


def test_profile_shift():
    p = make_profile("annulus", rho=0.25)
    q = p.shifted(0.2)
    assert np.isclose(q.T, p.T - 0.2)
    assert np.isclose(q.r(0.1), p.r(0.3))
    assert q.descriptor() != p.descriptor()
    with pytest.raises(GeometryError):
        p.shifted(0.75)
    with pytest.raises(GeometryError):
        p.shifted(-0.1)


# -- finite difference weights ----------------------------------------------


def test_fd_weights_polynomial_exactness():
    # stencil weights must differentiate polynomials exactly up to degree n-1
    x = np.array([0.0, 0.31, 0.74, 1.2])
    x0 = 0.5
    for m in (1, 2):
        w = fd_weights(x, x0, m)
        for deg in range(4):
            exact = 0.0
            if m == 1 and deg >= 1:
                exact = deg * x0 ** (deg - 1)
            if m == 2 and deg >= 2:
                exact = deg * (deg - 1) * x0 ** (deg - 2)
            assert abs(w @ x**deg - exact) < 1e-12


def test_derivative_matrix_on_smooth_function():
    ts = np.linspace(0.0, 1.0, 201)
    f = np.exp(ts)
    D1 = derivative_matrix(ts, 1)
    D2 = derivative_matrix(ts, 2)
    assert np.max(np.abs(D1 @ f - f)) < 5e-5
    assert np.max(np.abs(D2 @ f - f)) < 5e-3


# -- grid assembly ----------------------------------------------------------


def test_collar_grid_nodes(annulus_geometry):
    g = annulus_geometry
    assert np.allclose(g.collar_ts, np.linspace(0.0, 0.3, g.M + 1))
    # tail continues to the cap with a near-matching step
    assert np.isclose(g.ts[-1], g.T)
    assert np.all(np.diff(g.ts) > 0)


def test_center_cap_stops_short():
    g = build_warped_geometry("disk", N=16, M=16, eps=0.3)
    assert g.cap == "center"
    assert g.ts[-1] < g.T
    r_prev, r_last = g.cap_decay_pair
    assert r_prev > r_last > 0


def test_cap_decay_pair_requires_center_cap(annulus_geometry):
    with pytest.raises(GeometryError, match="center"):
        annulus_geometry.cap_decay_pair


@pytest.mark.parametrize(
    "kwargs,match",
    [
        ({"N": 7, "M": 16, "eps": 0.3}, "even"),
        ({"N": 4, "M": 16, "eps": 0.3}, "even"),
        ({"N": 16, "M": 4, "eps": 0.3}, "M must be"),
        ({"N": 16, "M": 16, "eps": 0.9}, "depth exceeds"),
        ({"N": 16, "M": 16, "eps": -0.1}, "depth exceeds"),
        ({"N": 16, "M": 16, "eps": 0.0}, "depth exceeds"),
    ],
)
def test_grid_validation(kwargs, match):
    with pytest.raises(GeometryError, match=match):
        build_warped_geometry(make_profile("annulus", rho=0.25), **kwargs)


def test_no_room_before_center_cap():
    # eps so close to the cap that the tail cannot hold the decay cell
    with pytest.raises(GeometryError, match="no room"):
        build_warped_geometry("disk", N=16, M=64, eps=0.99)


def test_dimension_tag_validation():
    with pytest.raises(GeometryError, match="dimension_tag"):
        build_warped_geometry("disk", N=16, M=16, eps=0.3, dim=3)


def test_slice_data_fields(annulus_geometry):
    g = annulus_geometry
    s0 = slice_data(g, 0)
    assert s0.t == 0.0
    assert np.isclose(s0.r, 1.0)
    assert np.isclose(s0.weight, 2 * np.pi / g.N)
    assert np.isclose(s0.mu_dot, -1.0)  # d/dt log r at t=0 for r = 1 - t
    sM = slice_data(g, g.M)
    assert np.isclose(sM.t, g.eps)


def test_slice_index_bounds(annulus_geometry):
    with pytest.raises(DepthIndexError):
        slice_data(annulus_geometry, annulus_geometry.M + 1)
    with pytest.raises(DepthIndexError):
        slice_data(annulus_geometry, -1)
    # also catchable as a plain IndexError
    with pytest.raises(IndexError):
        slice_data(annulus_geometry, annulus_geometry.M + 1)


def test_hash_distinguishes_geometries(annulus_geometry):
    g2 = build_warped_geometry(make_profile("annulus", rho=0.25), N=32, M=64, eps=0.3)
    assert annulus_geometry.hash() == g2.hash()
    g3 = build_warped_geometry(make_profile("annulus", rho=0.25), N=64, M=64, eps=0.3)
    assert annulus_geometry.hash() != g3.hash()


def test_torus_has_no_dense_slice_operator():
    g = build_warped_geometry("flat-cylinder", N=8, M=8, eps=0.3, dim=2)
    with pytest.raises(GeometryError, match="circle-only"):
        g.d2_unit()


# -- slice operator and Sobolev scale ---------------------------------------


def test_slice_operator_diagonalizes_modes(annulus_geometry):
    g = annulus_geometry
    L = g.laplacian_matrix(0.0)
    for k in (1, 3, 5):
        u = np.cos(k * g.theta)
        assert np.allclose(L @ u, k**2 * u, atol=1e-9)
    assert np.allclose(L, L.T)


def test_sobolev_multiplier_on_pure_mode(annulus_geometry):
    g = annulus_geometry
    for k, s in ((2, 0.5), (5, -1.0)):
        u = np.sin(k * g.theta)
        v = sobolev_apply(g, s, u)
        assert np.allclose(v, (1.0 + k**2) ** s * u, atol=1e-10)


def test_sobolev_apply_tensor(annulus_geometry):
    g = annulus_geometry
    u = np.outer(np.cos(2 * g.theta), np.sin(3 * g.theta))
    v = sobolev_apply(g, -0.5, u)
    assert np.allclose(v, (1.0 + 4.0 + 9.0) ** -0.5 * u, atol=1e-10)


def test_sobolev_norm_monotone_in_s(annulus_geometry):
    g = annulus_geometry
    u = np.cos(3 * g.theta)
    assert sobolev_norm(g, 1.0, u) > sobolev_norm(g, 0.0, u) > sobolev_norm(g, -1.0, u)
    assert sobolev_norm(g, 0.0, np.zeros(g.N)) == 0.0


def test_sobolev_rank_check(annulus_geometry):
    with pytest.raises(GeometryError, match="rank"):
        sobolev_apply(annulus_geometry, 0.5, np.zeros((2, 2, 2)))


# -- conformal reduction ----------------------------------------------------


def test_conformal_potential_closed_form():
    # gamma = e^{2t} with ambient dim 3 on a flat cylinder: sigma^{1/2} = e^{t/2},
    # so the potential is the constant 1/4 and the boundary correction is -1/2
    g = build_warped_geometry(make_profile("flat-cylinder", T=0.9), N=16, M=64, eps=0.3)
    pot, corr = conformal_potential(g, lambda t: np.exp(2.0 * t), 3)
    qs = pot.on_slice(g.theta, 0.15)
    assert np.max(np.abs(qs - 0.25)) < 1e-6
    assert np.max(np.abs(corr + 0.5)) < 1e-6


def test_conformal_potential_theta_dependent():
    g = build_warped_geometry(make_profile("flat-cylinder", T=0.9), N=32, M=32, eps=0.3)
    pot, corr = conformal_potential(g, lambda th, t: np.exp(2.0 * t) + 0.1 * np.cos(th), 3)
    assert corr.shape == (g.N,)
    assert np.all(np.isfinite(pot.on_slice(g.theta, 0.1)))


def test_conformal_validation():
    g = build_warped_geometry(make_profile("flat-cylinder", T=0.9), N=16, M=16, eps=0.3)
    with pytest.raises(GeometryError, match="ambient dim"):
        conformal_potential(g, lambda t: np.exp(t), 2)
    with pytest.raises(GeometryError, match="positive"):
        conformal_potential(g, lambda t: t - 1.0, 3)
    g2 = build_warped_geometry(make_profile("flat-cylinder", T=0.9), N=8, M=16, eps=0.3, dim=2)
    with pytest.raises(GeometryError, match="depend on t only"):
        conformal_potential(g2, lambda th, t: np.exp(t) + 0.1 * np.cos(th), 3)


def test_conformal_constant_factor_is_inert():
    # constant gamma: zero potential, zero correction
    g = build_warped_geometry(make_profile("annulus", rho=0.3), N=16, M=16, eps=0.3)
    pot, corr = conformal_potential(g, lambda t: 2.0 + 0.0 * t, 4)
    assert np.max(np.abs(pot.on_slice(g.theta, 0.1))) < 1e-10
    assert np.max(np.abs(corr)) < 1e-12
