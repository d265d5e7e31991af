"""Boundary-trace evolution and tensor-square transport on the collar.

The interior extension of boundary data satisfies the first-order flow
``u' = -Lam(t) u`` in depth, where ``Lam(t)`` is the slice map. On products
of two collars the corresponding generator acts on kernels ``W(x, y)`` as

    A_t W = Lam1 W + W Lam2^T,

which is never materialized as an N^2 x N^2 matrix; both factors act by
dense N x N multiplication. Forward transport solves ``(d/dt + A) phi = g``,
backward transport solves the formally adjoint equation
``(-d/dt - m + A) psi = g`` with the volume-weight rate
``m(t) = mu1'(t) + mu2'(t)``.

All steppers are trapezoidal (second order); the implicit half-step is a
symmetric positive system solved matrix-free by conjugate gradients with
Frobenius inner products.
"""

import os

import numpy as np

from .errors import GeometryError, StepFailureError
from . import io as evsq_io

_CG_TOL = 1e-10
_CG_MAXITER = 500


class PairOperator:
    """Slice-indexed generator ``W -> Lam1(t) W + W Lam2(t)^T``."""

    def __init__(self, family1, family2):
        g1, g2 = family1.geometry, family2.geometry
        if (g1.N, g1.M, g1.eps) != (g2.N, g2.M, g2.eps):
            raise GeometryError("pair operator needs matching collar grids")
        self.family1 = family1
        self.family2 = family2
        self.geometry = g1

    def apply(self, j, W):
        return self.family1.lams[j] @ W + W @ self.family2.lams[j].T

    def volume_rate(self, j):
        t = float(self.geometry.collar_ts[j])
        return float(self.family1.geometry.mu_dot(t)) + float(self.family2.geometry.mu_dot(t))


class TensorField:
    """Kernel-valued depth trace on the collar grid."""

    def __init__(self, ts, values, meta=None):
        self.ts = np.asarray(ts, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != 3 or self.values.shape[0] != self.ts.size:
            raise GeometryError("tensor field needs one square kernel per depth node")
        self.meta = dict(meta or {})

    def __len__(self):
        return self.ts.size

    def slice(self, j):
        return self.values[j]

    def save(self, directory, geometry_hash, provenance=""):
        os.makedirs(directory, exist_ok=True)
        names = []
        for j in range(len(self)):
            name = f"slice_{j:05d}.evsq"
            evsq_io.write_matrix(
                os.path.join(directory, name),
                self.values[j],
                {
                    "kind": "tensor-slice",
                    "t": float(self.ts[j]),
                    "N": int(self.values.shape[1]),
                    "M": len(self) - 1,
                    "geometry_hash": geometry_hash,
                    "provenance": provenance,
                },
            )
            names.append(name)
        evsq_io.write_manifest(
            os.path.join(directory, "manifest.json"),
            {
                "kind": "tensor-field",
                "slices": names,
                "ts": [float(t) for t in self.ts],
                "geometry_hash": geometry_hash,
                "meta": self.meta,
            },
        )

    @classmethod
    def load(cls, directory, expected_geometry_hash=None):
        manifest = evsq_io.read_manifest(os.path.join(directory, "manifest.json"))
        slices = []
        for name in manifest["slices"]:
            arr, _ = evsq_io.read_matrix(
                os.path.join(directory, name), expected_geometry_hash=expected_geometry_hash
            )
            slices.append(arr)
        return cls(np.asarray(manifest["ts"]), np.stack(slices), meta=manifest.get("meta"))


# ---------------------------------------------------------------------------
# conjugate gradients on kernels
# ---------------------------------------------------------------------------


def _cg(apply_op, B, x0=None, tol=_CG_TOL, maxiter=_CG_MAXITER, context=""):
    b_norm = np.linalg.norm(B)
    if b_norm == 0.0:
        return np.zeros_like(B)
    x = B.copy() if x0 is None else x0.copy()
    r = B - apply_op(x)
    p = r.copy()
    rr = np.vdot(r, r).real
    for it in range(maxiter):
        if np.sqrt(rr) <= tol * b_norm:
            return x
        Ap = apply_op(p)
        alpha = rr / np.vdot(p, Ap).real
        x += alpha * p
        r -= alpha * Ap
        rr_new = np.vdot(r, r).real
        p = r + (rr_new / rr) * p
        rr = rr_new
    if np.sqrt(rr) <= tol * b_norm:
        return x
    raise StepFailureError(
        f"implicit step failed to converge{context}: residual {np.sqrt(rr) / b_norm:.3g}",
        iterations=maxiter,
    )


# ---------------------------------------------------------------------------
# steppers
# ---------------------------------------------------------------------------


def evolve_trace(family, f):
    """Trapezoidal solve of ``u' = -Lam(t) u`` down the collar from ``u(0) = f``."""
    g = family.geometry
    ts = g.collar_ts
    N = g.N
    eye = np.eye(N)
    u = np.empty((g.M + 1, N))
    u[0] = np.asarray(f, dtype=float)
    for j in range(g.M):
        h = ts[j + 1] - ts[j]
        rhs = (eye - 0.5 * h * family.lams[j]) @ u[j]
        u[j + 1] = np.linalg.solve(eye + 0.5 * h * family.lams[j + 1], rhs)
    return u


def evolve_tensor_forward(pair_op, W0, source=None):
    """Solve ``(d/dt + A) phi = source`` down the collar from ``phi(0) = W0``.

    ``source`` is None (homogeneous) or a callable ``source(j) -> kernel``.
    """
    g = pair_op.geometry
    ts = g.collar_ts
    out = np.empty((g.M + 1, g.N, g.N))
    out[0] = np.asarray(W0, dtype=float)
    src_j = None if source is None else np.asarray(source(0), dtype=float)
    for j in range(g.M):
        h = ts[j + 1] - ts[j]
        B = out[j] - 0.5 * h * pair_op.apply(j, out[j])
        if source is not None:
            src_next = np.asarray(source(j + 1), dtype=float)
            B = B + 0.5 * h * (src_j + src_next)
            src_j = src_next

        def op(X, _j=j + 1, _h=h):
            return X + 0.5 * _h * pair_op.apply(_j, X)

        out[j + 1] = _cg(op, B, x0=out[j], context=f" (forward step to node {j + 1})")
    return TensorField(ts, out)


def evolve_tensor_backward(pair_op, W_eps, source=None):
    """Solve ``psi' = (A - m) psi - source`` upward from ``psi(eps) = W_eps``.

    This is the formal adjoint flow of the forward transport with respect to
    the volume-weighted kernel pairing; ``m`` is the slice volume rate.
    """
    g = pair_op.geometry
    ts = g.collar_ts
    out = np.empty((g.M + 1, g.N, g.N))
    out[g.M] = np.asarray(W_eps, dtype=float)
    src_j1 = None if source is None else np.asarray(source(g.M), dtype=float)
    for j in range(g.M - 1, -1, -1):
        h = ts[j + 1] - ts[j]
        m1 = pair_op.volume_rate(j + 1)
        m0 = pair_op.volume_rate(j)
        B = out[j + 1] - 0.5 * h * (pair_op.apply(j + 1, out[j + 1]) - m1 * out[j + 1])
        if source is not None:
            src_j = np.asarray(source(j), dtype=float)
            B = B + 0.5 * h * (src_j + src_j1)
            src_j1 = src_j

        def op(X, _j=j, _h=h, _m=m0):
            return X + 0.5 * _h * (pair_op.apply(_j, X) - _m * X)

        out[j] = _cg(op, B, x0=out[j + 1], context=f" (backward step to node {j})")
    return TensorField(ts, out)


def evolved_rank_one(family1, family2, f1, f2):
    """Outer-product field of two evolved traces; lies in ker(d/dt + A)."""
    u1 = evolve_trace(family1, f1)
    u2 = evolve_trace(family2, f2)
    g = family1.geometry
    vals = np.einsum("ji,jk->jik", u1, u2)
    return TensorField(g.collar_ts, vals, meta={"kind": "evolved-rank-one"})


def kron_generator(lam1, lam2):
    """Dense Kronecker form of the pair generator (small-N checks only)."""
    n = lam1.shape[0]
    return np.kron(lam1, np.eye(n)) + np.kron(np.eye(n), lam2)
