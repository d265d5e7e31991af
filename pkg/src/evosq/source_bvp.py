"""Diagonal-source boundary value problem for map-difference recovery.

Let ``U(t)`` be the Schwartz kernel of the difference of two slice-map
families with potentials ``Q1, Q2``. Differentiating the map equation shows
``U`` solves the *backward* transport problem

    (d* + A) U = R,     R(t) = diagonal kernel of (Q1 - Q2) on the slice,

with ``d* = -d/dt - m``. The solver never uses ``U`` below the top slice:
it integrates the second-order problem ``(d* + A)(d/dt + A) phi = R`` with
``phi(0) = 0`` and the flux condition ``(d/dt + A) phi = U`` at the collar
depth, in four first-order stages. The depth derivative of ``phi`` at the
boundary then *re-derives* the kernel of the map difference at ``t = 0``,
which is the quantity the whole pipeline is meant to certify.

Stages (all trapezoidal, matrix-free):
  1. ``(d* + A) psi_h = 0`` backward from the flux condition at the collar depth;
  2. ``(d/dt + A) phi_h = psi_h`` forward from zero;
  3. ``(d* + A) psi_p = R`` backward from zero;
  4. ``(d/dt + A) phi_p = psi_p`` forward from zero;  ``phi = phi_h + phi_p``.

With matching potentials every stage is identically zero (the null test in
:mod:`evosq.probes` relies on this being exact, not merely small).
"""

import numpy as np

from .errors import GeometryError
from .evolution import PairOperator, TensorField, evolve_tensor_backward, evolve_tensor_forward


def difference_kernel(family1, family2, j):
    """Kernel of ``Lam1(t_j) - Lam2(t_j)`` (weight divided out of column index)."""
    g = family1.geometry
    w = g.node_weight(float(g.collar_ts[j]))
    return (family1.lams[j] - family2.lams[j]) / w


def diagonal_source(family1, family2):
    """Slice-indexed diagonal kernel of the potential difference.

    ``R_j = diag(q(t_j)) / w(t_j)`` with ``q = Q1 - Q2``; the weight division
    makes ``R`` the kernel of the distributional source ``q(x) delta(x - y)``
    in the node quadrature.
    """
    g = family1.geometry

    def source(j):
        t = float(g.collar_ts[j])
        q1 = np.asarray(family1.potential.on_slice(g.theta, t), dtype=float)
        q2 = np.asarray(family2.potential.on_slice(g.theta, t), dtype=float)
        return np.diag((q1 - q2) / g.node_weight(t))

    return source


def solve_source_bvp(family1, family2, terminal_sign=1.0):
    """Four-stage solve; returns ``phi`` and the stage fields.

    ``terminal_sign`` scales the flux condition at the collar depth; the
    physically correct value is +1 and the recovery check resolves it
    empirically rather than trusting this default.
    """
    pair = PairOperator(family1, family2)
    g = pair.geometry
    K_eps = terminal_sign * difference_kernel(family1, family2, g.M)

    psi_h = evolve_tensor_backward(pair, K_eps)
    phi_h = evolve_tensor_forward(pair, np.zeros((g.N, g.N)), source=psi_h.slice)

    R = diagonal_source(family1, family2)
    psi_p = evolve_tensor_backward(pair, np.zeros((g.N, g.N)), source=R)
    phi_p = evolve_tensor_forward(pair, np.zeros((g.N, g.N)), source=psi_p.slice)

    phi = TensorField(g.collar_ts, phi_h.values + phi_p.values, meta={"kind": "source-bvp"})
    return {"phi": phi, "psi_h": psi_h, "phi_h": phi_h, "psi_p": psi_p, "phi_p": phi_p}


def boundary_time_derivative(phi):
    """One-sided depth derivative of a field at the boundary node.

    Assumes the field vanishes on the boundary slice (the BVP pins it);
    second order on the uniform collar step.
    """
    h = float(phi.ts[1] - phi.ts[0])
    if np.linalg.norm(phi.values[0]) > 1e-13 * max(np.linalg.norm(phi.values[1]), 1.0):
        raise GeometryError("boundary derivative assumes a pinned boundary slice")
    return (4.0 * phi.values[1] - phi.values[2]) / (2.0 * h)


def dn_recovery_check(family1, family2, terminal_sign=1.0):
    """Headline check: rebuild the boundary map difference from the BVP.

    Solves the source problem, converts the boundary depth derivative of
    ``phi`` back to an operator with the slice weight, and compares against
    ``Lam1(0) - Lam2(0)`` for both orientations. Reports the relative error
    of the better orientation and which one it is.
    """
    g = family1.geometry
    stages = solve_source_bvp(family1, family2, terminal_sign=terminal_sign)
    K0 = boundary_time_derivative(stages["phi"])
    recovered = K0 * g.node_weight(0.0)
    target = family1.lams[0] - family2.lams[0]
    scale = max(np.linalg.norm(target), 1e-30)
    err_plus = np.linalg.norm(recovered - target) / scale
    err_minus = np.linalg.norm(-recovered - target) / scale
    sign = 1 if err_plus <= err_minus else -1
    return {
        "rel_error": float(min(err_plus, err_minus)),
        "sign": sign,
        "rel_error_plus": float(err_plus),
        "rel_error_minus": float(err_minus),
        "recovered": recovered,
        "target": target,
        "stages": stages,
    }


def layer_strip_check(family1, family2, f1, f2, chains=None):
    """Strip decomposition of the boundary pairing (independent quadrature).

    ``<(Lam1(0) - Lam2(0)) f1, f2>`` must equal the collar volume integral
    of ``(Q1 - Q2) u1 u2`` plus the same pairing at the collar depth with
    the extended traces. Both sides are computed from scratch: the left
    from the families, the right from interior solves and the trapezoid
    rule. Returns both sides and the relative gap.
    """
    from .dnmap import solve_interior

    g = family1.geometry
    if family2.geometry is not g and family2.geometry.hash() != g.hash():
        raise GeometryError("layer strip check needs a shared geometry")
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)

    u1 = solve_interior(g, family1.potential, f1, chain=None if chains is None else chains[0])
    u2 = solve_interior(g, family2.potential, f2, chain=None if chains is None else chains[1])

    lhs = g.node_weight(0.0) * float(np.dot((family1.lams[0] - family2.lams[0]) @ f1, f2))

    ts = g.collar_ts
    volume = 0.0
    slab_vals = np.empty(g.M + 1)
    for j in range(g.M + 1):
        t = float(ts[j])
        q1 = np.asarray(family1.potential.on_slice(g.theta, t), dtype=float)
        q2 = np.asarray(family2.potential.on_slice(g.theta, t), dtype=float)
        slab_vals[j] = g.node_weight(t) * float(
            np.sum((q1 - q2) * u1.values[j] * u2.values[j])
        )
    volume = float(np.trapezoid(slab_vals, ts))

    w_eps = g.node_weight(float(ts[-1]))
    deep = w_eps * float(
        np.dot((family1.lams[g.M] - family2.lams[g.M]) @ u1.values[g.M], u2.values[g.M])
    )
    rhs = volume + deep
    denom = max(abs(lhs), abs(rhs), 1e-30)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "volume_term": volume,
        "deep_term": deep,
        "rel_gap": abs(lhs - rhs) / denom,
    }
