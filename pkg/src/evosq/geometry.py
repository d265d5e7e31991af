"""Warped-product collar geometries on a circle or flat-torus boundary.

A geometry is the cylinder ``[0, T] x boundary`` carrying the metric
``dt^2 + r(t)^2 dtheta^2`` with a strictly positive warping profile ``r``.
Depth ``t`` increases away from the boundary slice ``t = 0``; the manifold is
closed off at ``t = T`` either by a Dirichlet cap or, for the disk, by the
coordinate center (handled one cell early with a per-mode decay condition).

Discretization: ``N`` equispaced boundary nodes (spectral in the angular
variables) and second-order finite differences in depth. The collar grid is
``t_j = j * eps / M``; the full grid extends it to the cap with a matching
step so one elimination sweep serves every collar depth.

Sign conventions (fixed here, relied on everywhere else): the interior
equation is ``u_tt + mu' u_t - L_t u - Q u = 0`` with the *positive* slice
operator ``L_t`` (Fourier symbol ``(k / r(t))^2``), and the induced boundary
map is ``f -> -du/dt`` at the slice, which is positive semi-definite.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DepthIndexError, GeometryError

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# warping profiles
# ---------------------------------------------------------------------------


class Profile:
    """Warping function ``r(t)`` on ``[0, T]`` with its derivative.

    Attributes
    ----------
    name : str
        One of ``disk``, ``annulus``, ``flat-cylinder``, ``custom``.
    T : float
        Cap depth.
    cap : str
        ``dirichlet`` (value pinned to zero at ``T``) or ``center``
        (per-mode decay condition one cell before ``T``).
    """

    def __init__(self, name, T, cap, r, rp, params=()):
        self.name = name
        self.T = float(T)
        self.cap = cap
        self._r = r
        self._rp = rp
        self.params = tuple(params)

    def r(self, t):
        return self._r(np.asarray(t, dtype=float))

    def rp(self, t):
        return self._rp(np.asarray(t, dtype=float))

    def descriptor(self):
        return (self.name,) + self.params

    def shifted(self, dt):
        """Profile re-based at depth ``dt`` (Fermi window re-basing)."""
        if dt < 0 or dt >= self.T:
            raise GeometryError(f"shift {dt} outside [0, T)")
        return Profile(
            "custom-shift",
            self.T - dt,
            self.cap,
            lambda t, _d=dt: self._r(np.asarray(t, dtype=float) + _d),
            lambda t, _d=dt: self._rp(np.asarray(t, dtype=float) + _d),
            params=self.descriptor() + ("shift", round(float(dt), 12)),
        )


def make_profile(name, **params):
    """Build a named profile.

    ``disk``: r = 1 - t, T = 1, center cap.
    ``annulus``: r = 1 - t, T = 1 - rho, Dirichlet cap (requires 0 < rho < 1).
    ``flat-cylinder``: r = 1, Dirichlet cap at depth ``T``.
    ``custom``: cubic-spline interpolant of ``t_samples``/``r_samples`` with
    cap ``dirichlet`` or ``center``.
    """
    if name == "disk":
        return Profile("disk", 1.0, "center", lambda t: 1.0 - t, lambda t: -np.ones_like(np.asarray(t, dtype=float)))
    if name == "annulus":
        rho = float(params.get("rho", 0.5))
        if not 0.0 < rho < 1.0:
            raise GeometryError(f"invalid profile: annulus rho={rho}")
        return Profile(
            "annulus",
            1.0 - rho,
            "dirichlet",
            lambda t: 1.0 - t,
            lambda t: -np.ones_like(np.asarray(t, dtype=float)),
            params=(round(rho, 12),),
        )
    if name == "flat-cylinder":
        T = float(params.get("T", 1.0))
        if T <= 0:
            raise GeometryError(f"invalid profile: flat-cylinder T={T}")
        return Profile(
            "flat-cylinder",
            T,
            "dirichlet",
            lambda t: np.ones_like(np.asarray(t, dtype=float)),
            lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            params=(round(T, 12),),
        )
    if name == "custom":
        from scipy.interpolate import CubicSpline

        ts = np.asarray(params["t_samples"], dtype=float)
        rs = np.asarray(params["r_samples"], dtype=float)
        if ts.ndim != 1 or ts.shape != rs.shape or ts.size < 4:
            raise GeometryError("invalid profile: need >= 4 matching samples")
        if np.any(np.diff(ts) <= 0) or ts[0] != 0.0:
            raise GeometryError("invalid profile: t samples must increase from 0")
        if np.any(rs <= 0.0):
            raise GeometryError("invalid profile: r must stay positive")
        cap = params.get("cap", "dirichlet")
        if cap not in ("dirichlet", "center"):
            raise GeometryError(f"invalid profile: unknown cap {cap!r}")
        spl = CubicSpline(ts, rs)
        dspl = spl.derivative()
        digest = hashlib.sha256(ts.tobytes() + rs.tobytes()).hexdigest()[:12]
        return Profile("custom", ts[-1], cap, spl, dspl, params=(digest, cap))
    raise GeometryError(f"invalid profile: unknown name {name!r}")


# ---------------------------------------------------------------------------
# finite-difference weights (Fornberg) on possibly non-uniform nodes
# ---------------------------------------------------------------------------


def fd_weights(x, x0, m):
    """Weights of derivative order ``m`` at ``x0`` on nodes ``x``.

    Classic recursion; exact for polynomials up to degree ``len(x) - 1``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def derivative_matrix(ts, order, boundary_points=None):
    """Dense differentiation matrix on the node set ``ts``.

    Interior rows use the 3-point stencil; end rows widen to keep second
    order (3 points for first derivatives, 4 for second).
    """
    ts = np.asarray(ts, dtype=float)
    K = ts.size
    npts = (3 if order == 1 else 4) if boundary_points is None else boundary_points
    D = np.zeros((K, K))
    for j in range(K):
        if 0 < j < K - 1:
            idx = [j - 1, j, j + 1]
        elif j == 0:
            idx = list(range(min(npts, K)))
        else:
            idx = list(range(max(0, K - npts), K))
        D[j, idx] = fd_weights(ts[idx], ts[j], order)
    return D


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


@dataclass
class WarpedGeometry:
    """Discretized warped collar.

    ``ts`` is the full depth grid (collar prefix of ``M + 1`` nodes with step
    ``eps / M``, then a near-matching step to the cap). For a Dirichlet cap
    the final node sits at ``T``; for a center cap the grid stops one cell
    short and ``cap_decay_pair`` holds the radii of the last two nodes.
    """

    dim: int
    N: int
    M: int
    eps: float
    profile: Profile
    theta: np.ndarray
    ts: np.ndarray
    rs: np.ndarray
    rps: np.ndarray
    _d2_unit: np.ndarray = field(default=None, repr=False)

    # -- grids ------------------------------------------------------------

    @property
    def collar_ts(self):
        return self.ts[: self.M + 1]

    @property
    def T(self):
        return self.profile.T

    @property
    def cap(self):
        return self.profile.cap

    @property
    def cap_decay_pair(self):
        if self.cap != "center":
            raise GeometryError("cap_decay_pair is defined for center caps only")
        return self.rs[-2], self.rs[-1]

    def r(self, t):
        return self.profile.r(t)

    def mu(self, t):
        return self.dim * np.log(self.profile.r(t) / self.profile.r(0.0))

    def mu_dot(self, t):
        return self.dim * self.profile.rp(t) / self.profile.r(t)

    def node_weight(self, t):
        """Quadrature weight of one boundary node on the slice at depth t."""
        return float(self.profile.r(t)) ** self.dim * (TWO_PI / self.N) ** self.dim

    # -- spectral slice operator ------------------------------------------

    def wavenumbers(self):
        return np.fft.fftfreq(self.N, d=1.0 / self.N)

    def d2_unit(self):
        """Matrix of the positive operator ``-d^2/dtheta^2`` at radius 1."""
        if self._d2_unit is None:
            if self.dim != 1:
                raise GeometryError("dense slice operators are circle-only")
            k = self.wavenumbers()
            F = np.fft.fft(np.eye(self.N), axis=0)
            self._d2_unit = np.real(np.fft.ifft((k**2)[:, None] * F, axis=0))
            self._d2_unit = 0.5 * (self._d2_unit + self._d2_unit.T)
        return self._d2_unit

    def laplacian_matrix(self, t):
        return self.d2_unit() / float(self.profile.r(t)) ** 2

    def laplacian_symbol(self, t, ksq):
        return float(ksq) / float(self.profile.r(t)) ** 2

    def hash(self):
        parts = (
            self.dim,
            self.N,
            self.M,
            round(self.eps, 14),
            self.profile.descriptor(),
            self.profile.cap,
            round(self.profile.T, 14),
        )
        return hashlib.sha256(repr(parts).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SliceData:
    """One depth slice: positive slice operator, weight, volume log-derivative."""

    t: float
    lap: np.ndarray
    weight: float
    mu_dot: float
    r: float


def build_warped_geometry(profile, N, M, eps, dim=1):
    """Assemble a :class:`WarpedGeometry`.

    Parameters
    ----------
    profile : Profile or str
        Warping profile, or a name accepted by :func:`make_profile`.
    N : int
        Boundary nodes (per axis for ``dim=2``); even, at least 8.
    M : int
        Collar steps; the collar grid is ``t_j = j * eps / M``.
    eps : float
        Collar depth; must leave room before the cap.
    dim : int
        1 for a circle boundary, 2 for a flat torus.
    """
    if isinstance(profile, str):
        profile = make_profile(profile)
    if dim not in (1, 2):
        raise GeometryError(f"dimension_tag must be 1 or 2, got {dim}")
    if N < 8 or N % 2:
        raise GeometryError(f"N must be even and >= 8, got {N}")
    if M < 8:
        raise GeometryError(f"M must be >= 8, got {M}")
    T = profile.T
    h = eps / M
    if not 0.0 < eps < T:
        raise GeometryError(f"depth exceeds manifold: eps={eps}, cap T={T}")

    collar = np.linspace(0.0, eps, M + 1)
    J2 = max(2, int(round((T - eps) / h)))
    tail = np.linspace(eps, T, J2 + 1)[1:]
    ts = np.concatenate([collar, tail])
    if profile.cap == "center":
        ts = ts[:-1]  # last cell carries the decay condition instead of a node
    if ts.size < M + 3:
        raise GeometryError("depth exceeds manifold: no room between eps and the cap")

    rs = np.asarray(profile.r(ts), dtype=float)
    rps = np.asarray(profile.rp(ts), dtype=float)
    if np.any(rs <= 0.0):
        raise GeometryError("invalid profile: r must stay positive on the grid")

    theta = TWO_PI * np.arange(N) / N
    return WarpedGeometry(dim, N, M, float(eps), profile, theta, ts, rs, rps)


def slice_data(geometry, j):
    """Collar slice ``j`` (0-based, ``0 <= j <= M``)."""
    if not 0 <= j <= geometry.M:
        raise DepthIndexError(f"slice index {j} outside 0..{geometry.M}")
    t = float(geometry.ts[j])
    lap = geometry.laplacian_matrix(t) if geometry.dim == 1 else None
    return SliceData(
        t=t,
        lap=lap,
        weight=geometry.node_weight(t),
        mu_dot=float(geometry.mu_dot(t)),
        r=float(geometry.rs[j]),
    )


# ---------------------------------------------------------------------------
# Sobolev scale on the boundary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SobolevScale:
    """Fractional power of ``1 + L_0`` as a Fourier multiplier."""

    s: float


def sobolev_apply(geometry, s, u):
    """Apply ``(1 + L_0)^s`` on the boundary slice.

    Accepts a boundary function (shape ``(N,)``) or a tensor-square field
    (shape ``(N, N)``), where the reference operator is the slice operator at
    ``t = 0`` (symbol ``k^2 / r(0)^2``, summed over axes for tensors).
    """
    u = np.asarray(u, dtype=float)
    r0 = float(geometry.profile.r(0.0))
    k = geometry.wavenumbers()
    if u.ndim == 1:
        mult = (1.0 + (k / r0) ** 2) ** s
        return np.real(np.fft.ifft(mult * np.fft.fft(u)))
    if u.ndim == 2:
        kx = (k / r0) ** 2
        mult = (1.0 + kx[:, None] + kx[None, :]) ** s
        return np.real(np.fft.ifft2(mult * np.fft.fft2(u)))
    raise GeometryError(f"sobolev_apply expects rank 1 or 2, got {u.ndim}")


def sobolev_norm(geometry, s, u):
    w0 = geometry.node_weight(0.0)
    v = sobolev_apply(geometry, s, u)
    return float(np.sqrt(max(np.sum(u * v) * w0 ** (np.asarray(u).ndim), 0.0)))


# ---------------------------------------------------------------------------
# conformal reduction
# ---------------------------------------------------------------------------


def conformal_potential(geometry, gamma, n_ambient):
    """Schroedinger potential of a conformal factor.

    For ``sigma = gamma^(n/2 - 1)`` the function ``sigma^(1/2) u`` solves the
    zeroth-order equation with potential ``Q = (D sigma^(1/2)) / sigma^(1/2)``
    whenever ``u`` solves the conductivity equation, where ``D`` is the
    interior operator in this module's sign convention. Returns the potential
    sampled on the full depth grid together with the boundary correction
    ``d_nu sigma^(1/2)`` at ``t = 0`` (outward normal, ``d_nu = -d/dt``).

    ``gamma`` may be a callable of ``t`` or, on the circle, a callable of
    ``(theta, t)`` returning an ``(N, K)`` sample block.
    """
    from .potentials import SampledPotential

    if n_ambient < 3:
        raise GeometryError(f"conformal reduction needs ambient dim >= 3, got {n_ambient}")
    ts = geometry.ts
    K = ts.size
    try:
        vals = np.asarray(gamma(geometry.theta[:, None], ts[None, :]), dtype=float)
        if vals.shape != (geometry.N, K):
            raise TypeError
    except TypeError:
        g = np.asarray(gamma(ts), dtype=float).reshape(1, K)
        vals = np.broadcast_to(g, (geometry.N, K)).copy()
    if np.any(vals <= 0.0):
        raise GeometryError("conformal factor must be positive")
    if geometry.dim == 2 and not np.allclose(vals, vals[:1, :]):
        raise GeometryError("torus conformal factors must depend on t only")

    p = 0.5 * (0.5 * n_ambient - 1.0)  # sigma^(1/2) = gamma^p
    # t-only factors are reduced on a single row and broadcast at the end:
    # the slice operator annihilates them exactly, and per-row matmul rounding
    # must not introduce spurious theta dependence
    theta_constant = np.array_equal(vals, np.broadcast_to(vals[:1, :], vals.shape))
    shalf = (vals[:1, :] if theta_constant else vals) ** p

    D1 = derivative_matrix(ts, 1)
    D2 = derivative_matrix(ts, 2)
    dt_s = shalf @ D1.T
    dtt_s = shalf @ D2.T
    mu_dot = np.asarray(geometry.mu_dot(ts), dtype=float)

    lap_term = np.zeros_like(shalf)
    if geometry.dim == 1 and not theta_constant:
        d2u = geometry.d2_unit()
        for j in range(K):
            lap_term[:, j] = (d2u @ shalf[:, j]) / geometry.rs[j] ** 2

    Q = (dtt_s + mu_dot[None, :] * dt_s - lap_term) / shalf
    correction = -dt_s[:, 0]
    if theta_constant:
        Q = np.broadcast_to(Q, (geometry.N, K)).copy()
        correction = np.full(geometry.N, correction[0])
    pot = SampledPotential(geometry.theta.copy(), ts.copy(), Q)
    return pot, correction  # correction = d_nu sigma^(1/2) at t=0, d_nu = -d/dt
