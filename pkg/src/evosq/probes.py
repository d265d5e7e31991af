"""Off-diagonal structure probes for recovered difference kernels.

The recovery pipeline certifies that a potential difference leaves a
visible imprint on boundary kernels away from the diagonal. These probes
quantify that imprint:

* :func:`null_test` runs the full source problem with matching potentials
  and demands *exact* zeros (the discrete stages short-circuit on zero
  data, so any nonzero is a plumbing bug, not roundoff);
* :func:`shell_decomposition` splits kernel mass over dyadic bands of the
  off-diagonal distance and checks the bands partition the total;
* :func:`offdiagonal_flag` raises a flag when mass survives at distances
  bounded away from the diagonal;
* :func:`gradient_blowup_probe` estimates how the kernel gradient grows
  toward the diagonal, against the critical integrability exponent
  ``p = n / (n - 1)`` of the ambient dimension;
* :func:`zeta_pairing` is a heuristic oscillatory pairing score with a
  slowly varying frequency cutoff (diagnostic only, nothing gates on it).
"""

import numpy as np

from .errors import GeometryError
from .source_bvp import solve_source_bvp

OFFDIAG_THRESHOLD = 1e-6
FAR_DISTANCE = np.pi / 8


def null_test(family1, family2):
    """Source problem with matching data must vanish identically."""
    stages = solve_source_bvp(family1, family2)
    worst = max(
        float(np.abs(stages[name].values).max()) for name in ("phi", "psi_h", "psi_p")
    )
    scale = float(np.linalg.norm(family1.lams[0]))
    return {"max_abs": worst, "scale": scale, "passed": worst <= 1e-10 * scale}


def _circular_distance(theta):
    d = np.abs(theta[:, None] - theta[None, :])
    return np.minimum(d, 2.0 * np.pi - d)


def resolvable_shells(N):
    return int(np.floor(np.log2(N / 4)))


def shell_decomposition(geometry, kernel, p=2.0):
    """Dyadic off-diagonal mass profile of a boundary kernel.

    Shell ``m`` collects node pairs with circular distance in
    ``(pi 2^{-m-1}, pi 2^{-m}]``; the remainder (including the diagonal)
    lands in a catch-all bin, so the bins partition all pairs. Mass is the
    weighted ell^p sum at the boundary slice. The shell count is limited by
    the grid: ``floor(log2(N / 4))`` bands stay wider than a node spacing.
    """
    kernel = np.asarray(kernel, dtype=float)
    N = geometry.N
    if kernel.shape != (N, N):
        raise GeometryError(f"kernel shape {kernel.shape} does not match N={N}")
    n_shells = resolvable_shells(N)
    if n_shells < 2:
        raise GeometryError(f"insufficient shells: N={N} resolves {n_shells} dyadic bands")
    d = _circular_distance(geometry.theta)
    w = geometry.node_weight(0.0)
    dens = np.abs(kernel) ** p * w * w
    total = float(dens.sum())
    edges = [(np.pi * 0.5 ** (m + 1), np.pi * 0.5**m) for m in range(n_shells)]
    masses = []
    covered = np.zeros_like(d, dtype=bool)
    for lo, hi in edges:
        mask = (d > lo) & (d <= hi)
        masses.append(float(dens[mask].sum()))
        covered |= mask
    catchall = float(dens[~covered].sum())
    return {
        "edges": edges,
        "masses": np.asarray(masses),
        "catchall": catchall,
        "total": total,
        "partition_defect": abs(sum(masses) + catchall - total),
        "n_shells": n_shells,
    }


def offdiagonal_flag(geometry, kernel, threshold=OFFDIAG_THRESHOLD):
    """Flag kernels with mass at distance >= pi/8 above ``threshold * total``."""
    prof = shell_decomposition(geometry, kernel)
    far = sum(
        m for (lo, _), m in zip(prof["edges"], prof["masses"]) if lo >= FAR_DISTANCE - 1e-12
    )
    scale = max(prof["total"], 1e-300)
    return {
        "far_mass": float(far),
        "total": prof["total"],
        "flag": far > threshold * scale,
        "profile": prof,
    }


def gradient_blowup_probe(geometry, field, p=None, ambient_dim=3, slice_index=2):
    """Shell profile of ``|grad phi|^p`` near the diagonal.

    Gradients are spectral in each boundary variable and centered in depth.
    The slope of the finest three shells (log2 of successive mass ratios)
    estimates the blow-up order toward the diagonal, reported against the
    critical exponent ``p = n / (n - 1)`` (3/2 in ambient dimension 3),
    which is the default integrand power.
    """
    n_shells = resolvable_shells(geometry.N)
    if n_shells < 4:
        raise GeometryError(
            f"gradient probe needs at least 4 shells, N={geometry.N} resolves {n_shells}"
        )
    p_crit = ambient_dim / (ambient_dim - 1.0)
    if p is None:
        p = p_crit
    j = slice_index
    if not 1 <= j <= geometry.M - 1:
        raise GeometryError("gradient probe needs an interior collar slice")
    W = field.values
    k = geometry.wavenumbers()
    dx = np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(W[j], axis=0), axis=0))
    dy = np.real(np.fft.ifft(1j * k[None, :] * np.fft.fft(W[j], axis=1), axis=1))
    dt = (W[j + 1] - W[j - 1]) / (float(field.ts[j + 1]) - float(field.ts[j - 1]))
    grad = np.sqrt(dx**2 + dy**2 + dt**2)
    prof = shell_decomposition(geometry, grad, p=p)
    masses = prof["masses"]
    finest = masses[-3:]
    with np.errstate(divide="ignore"):
        ratios = np.log2(np.maximum(finest[:-1], 1e-300) / np.maximum(finest[1:], 1e-300))
    return {
        "p": float(p),
        "p_critical": float(p_crit),
        "shell_masses": masses,
        "slope": float(np.mean(ratios)),
        "profile": prof,
        "slice_index": j,
    }


def zeta_pairing(geometry, kernel, modes=(1, 2, 4, 8), d_floor=FAR_DISTANCE):
    """Oscillatory off-diagonal pairing scores (heuristic diagnostic).

    Pairs the kernel against ``exp(i k (x - y))`` windowed away from the
    diagonal, with the frequency damped through a smoothed minimum against
    the slowly growing cutoff ``log(1 + log+(1/d))``. Scores have no pass
    or fail meaning; they track how oscillation-resolved the far field is.
    """
    from .exhaustion import smooth_min

    kernel = np.asarray(kernel, dtype=float)
    d = _circular_distance(geometry.theta)
    w = geometry.node_weight(0.0)
    with np.errstate(divide="ignore"):
        ll = np.log1p(np.maximum(np.log(np.maximum(1.0 / np.maximum(d, 1e-300), 1.0)), 0.0))
    window = (d > d_floor).astype(float)
    scores = {}
    x = geometry.theta
    for kmode in modes:
        damp = np.vectorize(lambda v, _k=float(kmode): smooth_min(_k, v, 0.25))(ll)
        osc = np.cos(kmode * (x[:, None] - x[None, :]))
        scores[int(kmode)] = float(np.sum(kernel * osc * damp * window) * w * w)
    return scores
