"""Boundary spectrum of the flat annulus against the separated solution.

The annulus with unit outer radius and inner radius rho has boundary map
eigenvalues k(1+rho^2k)/(1-rho^2k), with 1/log(1/rho) for the constant
mode. The elimination route should reproduce them to a few digits at
modest resolution; this prints the comparison table.
"""

import numpy as np

from evosq.dnmap import compute_dn_family
from evosq.geometry import build_warped_geometry, make_profile

RHO = 0.2
N = 64
M = 256

geometry = build_warped_geometry(make_profile("annulus", rho=RHO), N=N, M=M, eps=0.3)
family = compute_dn_family(geometry, {"kind": "zero"})
eigs = np.sort(np.linalg.eigvalsh(family.lams[0]))

exact = [1.0 / np.log(1.0 / RHO)]
for k in range(1, 9):
    lam = k * (1 + RHO ** (2 * k)) / (1 - RHO ** (2 * k))
    exact += [lam, lam]
exact = np.sort(np.array(exact))

print(f"annulus rho={RHO}, N={N}, M={M}")
print(f"{'k':>3} {'computed':>12} {'separated':>12} {'rel err':>10}")
labels = [0] + [k for k in range(1, 9) for _ in (0, 1)]
for i, k in enumerate(labels):
    rel = abs(eigs[i] - exact[i]) / exact[i]
    print(f"{k:>3} {eigs[i]:>12.6f} {exact[i]:>12.6f} {rel:>10.2e}")

print()
print("disk (capped center), lowest eigenvalues vs |k|:")
disk = build_warped_geometry(make_profile("disk"), N=32, M=128, eps=0.3)
dfam = compute_dn_family(disk, {"kind": "zero"})
deigs = np.sort(np.linalg.eigvalsh(dfam.lams[0]))[:9]
for i, lam in enumerate(deigs):
    k = (i + 1) // 2
    print(f"  {lam:>10.6f}  (expect {k})")
