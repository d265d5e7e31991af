"""Zeroth-order coefficients (potentials) on the collar.

A potential is a bounded function ``Q(theta, t)`` evaluated on boundary
nodes at a given depth. All implementations are vectorized over theta and
support re-basing in depth via :meth:`Potential.shifted`, which the window
marching driver uses.
"""

import hashlib

import numpy as np

from .errors import GeometryError


class Potential:
    time_only = False

    def on_slice(self, theta, t):
        """Values at the boundary nodes ``theta`` on the slice at depth ``t``."""
        raise NotImplementedError

    def shifted(self, dt):
        raise NotImplementedError

    def descriptor(self):
        raise NotImplementedError


class ZeroPotential(Potential):
    time_only = True

    def on_slice(self, theta, t):
        return np.zeros_like(np.asarray(theta, dtype=float))

    def shifted(self, dt):
        return self

    def descriptor(self):
        return ("zero",)


class ConstantPotential(Potential):
    time_only = True

    def __init__(self, value):
        self.value = float(value)

    def on_slice(self, theta, t):
        return np.full_like(np.asarray(theta, dtype=float), self.value)

    def shifted(self, dt):
        return self

    def descriptor(self):
        return ("constant", round(self.value, 14))


class BumpPotential(Potential):
    """Compactly supported mollifier bump.

    ``Q = amplitude * exp(1 - 1/(1 - s^2))`` for ``s < 1`` and 0 outside,
    where ``s^2 = (d(theta, theta0)^2 + (t - t0)^2) / width^2`` and ``d`` is
    circular distance. Smooth, supported in a disk of radius ``width``.
    """

    def __init__(self, amplitude, theta0, t0, width):
        if width <= 0:
            raise GeometryError(f"bump width must be positive, got {width}")
        self.amplitude = float(amplitude)
        self.theta0 = float(theta0)
        self.t0 = float(t0)
        self.width = float(width)

    def on_slice(self, theta, t):
        theta = np.asarray(theta, dtype=float)
        dth = np.angle(np.exp(1j * (theta - self.theta0)))
        s2 = (dth**2 + (float(t) - self.t0) ** 2) / self.width**2
        out = np.zeros_like(theta)
        inside = s2 < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        return out

    def shifted(self, dt):
        return BumpPotential(self.amplitude, self.theta0, self.t0 - dt, self.width)

    def descriptor(self):
        return (
            "bump",
            round(self.amplitude, 14),
            round(self.theta0, 14),
            round(self.t0, 14),
            round(self.width, 14),
        )


class SampledPotential(Potential):
    """Potential tabulated on a (theta, t) product grid.

    Depth evaluation interpolates with a cubic spline; the theta grid must
    match the geometry nodes exactly (spectral consistency).
    """

    def __init__(self, theta_grid, t_grid, values, base_shift=0.0):
        from scipy.interpolate import CubicSpline

        self.theta_grid = np.asarray(theta_grid, dtype=float)
        self.t_grid = np.asarray(t_grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (self.theta_grid.size, self.t_grid.size):
            raise GeometryError("sampled potential: values shape mismatch")
        self.base_shift = float(base_shift)
        self._spline = CubicSpline(self.t_grid, self.values, axis=1)
        self._digest = hashlib.sha256(
            self.theta_grid.tobytes() + self.t_grid.tobytes() + self.values.tobytes()
        ).hexdigest()[:12]

    def on_slice(self, theta, t):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != self.theta_grid.shape or not np.allclose(theta, self.theta_grid):
            raise GeometryError("sampled potential: theta nodes do not match the geometry")
        tt = float(t) + self.base_shift
        lo, hi = self.t_grid[0], self.t_grid[-1]
        if tt < lo - 1e-12 or tt > hi + 1e-12:
            raise GeometryError(f"sampled potential: depth {tt} outside [{lo}, {hi}]")
        j = np.searchsorted(self.t_grid, tt)
        for cand in (j - 1, j, j + 1):
            if 0 <= cand < self.t_grid.size and abs(self.t_grid[cand] - tt) < 1e-12:
                return self.values[:, cand].copy()
        return self._spline(np.clip(tt, lo, hi))

    def shifted(self, dt):
        return SampledPotential(
            self.theta_grid, self.t_grid, self.values, base_shift=self.base_shift + dt
        )

    def descriptor(self):
        return ("sampled", self._digest, round(self.base_shift, 14))


def make_potential(spec):
    """Build a potential from a flat config dictionary."""
    if spec is None:
        return ZeroPotential()
    if isinstance(spec, Potential):
        return spec
    if isinstance(spec, (int, float)):
        return ConstantPotential(spec) if spec else ZeroPotential()
    if not isinstance(spec, dict):
        raise GeometryError(
            f"potential spec must be a number or an object with a 'kind', "
            f"got {type(spec).__name__}"
        )
    kind = spec.get("kind")
    if kind == "zero":
        return ZeroPotential()
    if kind == "constant":
        try:
            return ConstantPotential(float(spec["value"]))
        except (KeyError, TypeError, ValueError):
            raise GeometryError("constant potential needs a numeric 'value'") from None
    if kind == "bump":
        return BumpPotential(
            spec.get("amplitude", 1.0),
            spec.get("theta0", 0.0),
            spec.get("t0", 0.0),
            spec.get("width", 0.3),
        )
    raise GeometryError(f"unknown potential kind {kind!r}")
