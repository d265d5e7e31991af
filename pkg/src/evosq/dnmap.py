"""Depth-indexed Dirichlet-to-Neumann families on a warped collar.

The interior problem at depth ``t`` below a collar slice is

    u_tt + mu'(t) u_t - L_t u - Q u = 0,   u|_slice = f,  cap condition at T,

and the slice map is ``f -> -u_t`` at the slice, a positive semi-definite
dense matrix on the boundary nodes. One backward elimination sweep over the
full depth grid produces the propagation chain ``u_j = S_j u_{j-1}``; every
collar-depth map is then read off the chain with one-sided derivative
stencils, so the whole family costs a single sweep.

Everything here is second order in the depth step. Maps are symmetrized
after extraction: the true map is symmetric in the slice inner product (a
scalar multiple of the Euclidean one on equispaced nodes), and the one-sided
stencil introduces a pure-noise antisymmetric O(h^2) defect.
"""

import numpy as np

from .errors import DepthIndexError, DNComputationError, GeometryError, RiccatiEscapeError
from .geometry import fd_weights, sobolev_apply
from .potentials import make_potential
from .rng import SplitMix64

_ESCAPE_FACTOR = 50.0
_SINGULAR_FACTOR = 1e6


def _second_order_coeffs(h_minus, h_plus):
    """3-point stencil weights for u'' and u' on spacings (h-, h+)."""
    s = h_minus + h_plus
    a = 2.0 / (h_minus * s)
    b = -2.0 / (h_minus * h_plus)
    c = 2.0 / (h_plus * s)
    al = -h_plus / (h_minus * s)
    be = (h_plus - h_minus) / (h_minus * h_plus)
    ga = h_minus / (h_plus * s)
    return a, b, c, al, be, ga


def _center_cap_matrix(geometry):
    """Per-mode decay factor across the last (capped) cell of a disk."""
    r_prev, r_last = geometry.rs[-2], geometry.rs[-1]
    ratio = r_last / r_prev
    k = np.abs(geometry.wavenumbers())
    F = np.fft.fft(np.eye(geometry.N), axis=0)
    D = np.real(np.fft.ifft((ratio**k)[:, None] * F, axis=0))
    return 0.5 * (D + D.T)


def _slice_q(geometry, potential, t):
    return np.asarray(potential.on_slice(geometry.theta, t), dtype=float)


def propagation_chain(geometry, potential):
    """Backward elimination over the full grid.

    Returns a list ``S`` with ``S[j]`` mapping the slice value at node
    ``j - 1`` to node ``j`` (``S[0]`` is None). Raises
    :class:`DNComputationError` when an interior resonance makes a pivot
    singular (a Dirichlet eigenvalue collision of the capped region).
    """
    if geometry.dim != 1:
        raise GeometryError("dense propagation is circle-only; use dn_mode_symbol")
    ts = geometry.ts
    K = ts.size
    N = geometry.N
    eye = np.eye(N)
    d2u = geometry.d2_unit()

    S = [None] * K
    if geometry.cap == "center":
        S[K - 1] = _center_cap_matrix(geometry)
    else:
        S[K - 1] = np.zeros((N, N))

    guard = _SINGULAR_FACTOR * np.sqrt(N)
    mu = geometry.mu_dot(ts)
    for j in range(K - 2, 0, -1):
        a, b, c, al, be, ga = _second_order_coeffs(ts[j] - ts[j - 1], ts[j + 1] - ts[j])
        ap = a + mu[j] * al
        bp = b + mu[j] * be
        cp = c + mu[j] * ga
        B = bp * eye - d2u / geometry.rs[j] ** 2 - np.diag(_slice_q(geometry, potential, ts[j]))
        try:
            S[j] = np.linalg.solve(B + cp * S[j + 1], -ap * eye)
        except np.linalg.LinAlgError:
            raise DNComputationError(
                f"Dirichlet eigenvalue collision: singular pivot at depth {ts[j]:.6g}"
            ) from None
        if np.linalg.norm(S[j]) > guard:
            raise DNComputationError(
                f"Dirichlet eigenvalue collision near depth {ts[j]:.6g}: "
                f"propagation norm {np.linalg.norm(S[j]):.3g}"
            )
    return S


def _extract_dn(geometry, S, j):
    ts = geometry.ts
    w = fd_weights(ts[j : j + 3], ts[j], 1)
    lam = -(w[0] * np.eye(geometry.N) + w[1] * S[j + 1] + w[2] * (S[j + 2] @ S[j + 1]))
    return 0.5 * (lam + lam.T)


class DNFamily:
    """Collar family of slice maps, one per collar node."""

    def __init__(self, geometry, potential, lams, chain=None):
        self.geometry = geometry
        self.potential = potential
        self.lams = lams
        self._chain = chain

    def lam(self, j):
        if not 0 <= j <= self.geometry.M:
            raise DepthIndexError(f"slice index {j} outside 0..{self.geometry.M}")
        return self.lams[j]

    def at_depth(self, t):
        j = int(round(t / (self.geometry.eps / self.geometry.M)))
        if not (0 <= j <= self.geometry.M and abs(self.geometry.ts[j] - t) < 1e-10):
            raise DepthIndexError(f"depth {t} is not a collar node")
        return self.lams[j]

    @property
    def depths(self):
        return self.geometry.collar_ts


def compute_dn_family(geometry, potential=None, keep_chain=False):
    """Slice maps at every collar node from one elimination sweep."""
    potential = make_potential(potential)
    S = propagation_chain(geometry, potential)
    lams = np.empty((geometry.M + 1, geometry.N, geometry.N))
    for j in range(geometry.M + 1):
        lams[j] = _extract_dn(geometry, S, j)
    return DNFamily(geometry, potential, lams, chain=S if keep_chain else None)


class InteriorSolution:
    """Interior extension of boundary data on the full depth grid."""

    def __init__(self, ts, values):
        self.ts = ts
        self.values = values

    def at_node(self, j):
        return self.values[j]


def solve_interior(geometry, potential, f, chain=None):
    """Extend boundary data ``f`` into the capped region.

    Forward substitution through the propagation chain; the result satisfies
    the interior equation at every grid node and the cap condition.
    """
    potential = make_potential(potential)
    if chain is None:
        chain = propagation_chain(geometry, potential)
    f = np.asarray(f, dtype=float)
    K = geometry.ts.size
    u = np.empty((K, geometry.N))
    u[0] = f
    for j in range(1, K):
        u[j] = chain[j] @ u[j - 1]
    return InteriorSolution(geometry.ts.copy(), u)


# ---------------------------------------------------------------------------
# per-mode path (circle symbols; the only dense-free route on the torus)
# ---------------------------------------------------------------------------


def _mode_q_values(geometry, potential):
    qs = np.empty(geometry.ts.size)
    for j, t in enumerate(geometry.ts):
        row = _slice_q(geometry, potential, t)
        if np.ptp(row) > 1e-11 * (1.0 + np.abs(row).max()):
            raise GeometryError(
                "per-mode path needs theta-independent potentials "
                "(non-separable potential on this boundary)"
            )
        qs[j] = row.mean() if row.ndim else float(row)
    return qs


def _mode_chain(geometry, ksq, q_values, mu_values=None):
    ts = geometry.ts
    K = ts.size
    mu = geometry.mu_dot(ts) if mu_values is None else mu_values
    s = np.empty(K)
    s[K - 1] = (geometry.rs[-1] / geometry.rs[-2]) ** np.sqrt(ksq) if geometry.cap == "center" else 0.0
    for j in range(K - 2, 0, -1):
        a, b, c, al, be, ga = _second_order_coeffs(ts[j] - ts[j - 1], ts[j + 1] - ts[j])
        ap = a + mu[j] * al
        bp = b + mu[j] * be
        cp = c + mu[j] * ga
        den = bp - ksq / geometry.rs[j] ** 2 - q_values[j] + cp * s[j + 1]
        if abs(den) < 1e-14 * max(abs(bp), 1.0) or abs(ap / den) > _SINGULAR_FACTOR:
            raise DNComputationError(
                f"Dirichlet eigenvalue collision (mode ksq={ksq}) near depth {ts[j]:.6g}"
            )
        s[j] = -ap / den
    return s


def _mode_dn_from_chain(geometry, s, j):
    ts = geometry.ts
    w = fd_weights(ts[j : j + 3], ts[j], 1)
    return -(w[0] + w[1] * s[j + 1] + w[2] * s[j + 2] * s[j + 1])


def dn_mode_symbol(geometry, potential, ksq, depths=None):
    """Map eigenvalue of one Fourier mode at collar nodes.

    ``ksq`` is the squared wavenumber (sum over torus axes). The potential
    must be independent of the boundary variables. Returns the eigenvalue at
    every collar node, or at the requested node indices.
    """
    potential = make_potential(potential)
    q = _mode_q_values(geometry, potential)
    s = _mode_chain(geometry, float(ksq), q)
    idx = range(geometry.M + 1) if depths is None else depths
    out = np.array([_mode_dn_from_chain(geometry, s, j) for j in idx])
    return out if depths is None or np.ndim(depths) else float(out[0])


# ---------------------------------------------------------------------------
# Riccati cross-validation
# ---------------------------------------------------------------------------


def riccati_rhs(geometry, potential, lam, t):
    """Depth derivative of the slice map: ``L' = L^2 - L_t - Q - mu' L``."""
    Lt = geometry.laplacian_matrix(t)
    Q = np.diag(_slice_q(geometry, potential, t))
    return lam @ lam - Lt - Q - float(geometry.mu_dot(t)) * lam


def riccati_integrate(geometry, potential, lam_eps):
    """Integrate the map equation backward from the collar depth to 0.

    Heun steps on the collar grid. Values whose norm passes the escape
    threshold abort with :class:`RiccatiEscapeError` (the equation blows up
    through interior Dirichlet eigenvalues; step size cannot fix that).
    """
    potential = make_potential(potential)
    ts = geometry.collar_ts
    escape = _ESCAPE_FACTOR * geometry.N
    lam = np.array(lam_eps, dtype=float)
    out = np.empty((geometry.M + 1, geometry.N, geometry.N))
    out[geometry.M] = lam
    for j in range(geometry.M, 0, -1):
        h = ts[j] - ts[j - 1]
        k1 = riccati_rhs(geometry, potential, lam, ts[j])
        pred = lam - h * k1
        k2 = riccati_rhs(geometry, potential, pred, ts[j - 1])
        lam = lam - 0.5 * h * (k1 + k2)
        if np.linalg.norm(lam) > escape:
            raise RiccatiEscapeError(
                f"map norm {np.linalg.norm(lam):.3g} escaped at depth {ts[j - 1]:.6g}",
                depth=float(ts[j - 1]),
            )
        out[j - 1] = lam
    return out


def riccati_residual(family):
    """Max relative defect of the family in the map equation.

    Centered differences in depth at interior collar nodes against the
    quadratic right-hand side; second order in the collar step.
    """
    g = family.geometry
    ts = g.collar_ts
    worst = 0.0
    for j in range(1, g.M):
        dldt = (family.lams[j + 1] - family.lams[j - 1]) / (ts[j + 1] - ts[j - 1])
        rhs = riccati_rhs(g, family.potential, family.lams[j], ts[j])
        denom = max(np.linalg.norm(rhs), 1e-30)
        worst = max(worst, np.linalg.norm(dldt - rhs) / denom)
    return worst


# ---------------------------------------------------------------------------
# slice pairings and coercivity
# ---------------------------------------------------------------------------


def dn_pairing(geometry, lam, f, g, t=0.0):
    """Slice inner product ``<lam f, g>`` with the node quadrature weight."""
    return float(geometry.node_weight(t) * np.dot(lam @ np.asarray(f), np.asarray(g)))


def coercivity_probe(family, s_values=(-1.0, -0.5, 0.0), n_probes=24, seed=7):
    """Fit lower bounds ``<Af, f>_s >= C1 |f|_{s+1/2}^2 - C2 |f|_s^2``.

    Probes are random boundary vectors plus pure modes. The fit is least
    squares followed by clipping ``C2 >= 0`` and tightening ``C1`` to the
    worst probe, so the reported pair is an actual lower bound over the
    probe set. Failure flag: ``C1 <= 0`` for any requested ``s``.
    """
    g = family.geometry
    lam0 = family.lams[0]
    w0 = g.node_weight(0.0)
    rng = SplitMix64(seed)
    probes = [np.asarray(rng.normals(g.N)) for _ in range(n_probes)]
    for k in (0, 1, 2, g.N // 4, g.N // 2 - 1):
        v = np.cos(k * g.theta) + (np.sin(k * g.theta) if k else 0.0)
        probes.append(v / np.linalg.norm(v))

    results = {}
    for s in s_values:
        a = np.empty(len(probes))
        b = np.empty(len(probes))
        cc = np.empty(len(probes))
        for i, f in enumerate(probes):
            a[i] = w0 * np.dot(sobolev_apply(g, s, lam0 @ f), f)
            b[i] = w0 * np.dot(sobolev_apply(g, s + 0.5, f), f)
            cc[i] = w0 * np.dot(sobolev_apply(g, s, f), f)
        A = np.column_stack([b, -cc])
        coef, *_ = np.linalg.lstsq(A, a, rcond=None)
        c2 = max(float(coef[1]), 0.0)
        c1 = float(np.min((a + c2 * cc) / b))
        results[s] = {"C1": c1, "C2": c2, "coercive": c1 > 0.0}
    return results


def pairing_trace(family, f, s=-1.0):
    """Depth trace of the smoothed pairing ``<lam(t) f, f>_s`` (diagnostic)."""
    g = family.geometry
    f = np.asarray(f, dtype=float)
    vals = np.empty(g.M + 1)
    for j in range(g.M + 1):
        vals[j] = g.node_weight(g.collar_ts[j]) * np.dot(
            sobolev_apply(g, s, family.lams[j] @ f), f
        )
    return vals


# ---------------------------------------------------------------------------
# conformal consistency
# ---------------------------------------------------------------------------


def conductivity_mode_dn(geometry, gamma, n_ambient, ksq):
    """Mode eigenvalue of the conductivity-form slice map ``-sigma(0) u'(0)``.

    Solves ``u'' + (mu' + sigma'/sigma) u' - ksq/r^2 u = 0`` with the cap
    condition, where ``sigma = gamma^(n/2 - 1)``.
    """
    from .geometry import derivative_matrix

    ts = geometry.ts
    g = np.asarray(gamma(ts), dtype=float)
    if np.any(g <= 0.0):
        raise GeometryError("conformal factor must be positive")
    sigma = g ** (0.5 * n_ambient - 1.0)
    dsigma = derivative_matrix(ts, 1) @ sigma
    mu_eff = np.asarray(geometry.mu_dot(ts), dtype=float) + dsigma / sigma
    s = _mode_chain(geometry, float(ksq), np.zeros(ts.size), mu_values=mu_eff)
    return float(sigma[0]) * _mode_dn_from_chain(geometry, s, 0)


def conformal_identity_check(geometry, gamma, n_ambient, modes):
    """Compare the conductivity map against the potential-form reduction.

    For each mode: conductivity eigenvalue vs
    ``sigma(0) * lam_Q + sigma(0)^(1/2) * d_t sigma^(1/2)(0)`` where ``Q`` is
    the reduced potential. Returns per-mode relative errors and their max.
    """
    from .geometry import conformal_potential

    pot, correction = conformal_potential(geometry, gamma, n_ambient)
    sigma0 = float(np.asarray(gamma(np.array([0.0])), dtype=float).ravel()[0]) ** (
        0.5 * n_ambient - 1.0
    )
    corr0 = float(np.mean(correction))
    errors = {}
    for k in modes:
        ksq = float(np.dot(k, k)) if np.ndim(k) else float(k) ** 2
        lam_q = float(dn_mode_symbol(geometry, pot, ksq, depths=[0])[0])
        lam_gamma = conductivity_mode_dn(geometry, gamma, n_ambient, ksq)
        predicted = sigma0 * lam_q - np.sqrt(sigma0) * corr0
        errors[tuple(np.atleast_1d(k))] = abs(lam_gamma - predicted) / max(abs(lam_gamma), 1e-12)
    return {"per_mode": errors, "max_rel_error": max(errors.values())}
