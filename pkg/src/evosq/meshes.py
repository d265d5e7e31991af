"""Generators for triangulated test surfaces and OFF serialization.

Small parametric families used by the exhaustion scenario, the demos, and
the test suite: planar strips, disks, annuli (all with boundary), and a
subdivided octahedral sphere (closed, for precondition checks). All
generators emit consistently oriented triangles.
"""

import numpy as np

from .exhaustion import SurfaceMesh


def strip_mesh(nx, ny, width=1.0, height=1.0):
    """Rectangular strip, ``2 * nx * ny`` triangles."""
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    verts = [(x, y, 0.0) for y in ys for x in xs]

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return SurfaceMesh(np.array(verts), np.array(tris))


def annulus_mesh(n_rings, n_sectors, inner=0.5, outer=1.0):
    """Planar annulus, ``2 * n_rings * n_sectors`` triangles, two boundary loops."""
    radii = np.linspace(inner, outer, n_rings + 1)
    angles = 2.0 * np.pi * np.arange(n_sectors) / n_sectors
    verts = [
        (r * np.cos(a), r * np.sin(a), 0.0) for r in radii for a in angles
    ]

    def vid(i, j):
        return i * n_sectors + (j % n_sectors)

    tris = []
    for i in range(n_rings):
        for j in range(n_sectors):
            v00, v01 = vid(i, j), vid(i, j + 1)
            v10, v11 = vid(i + 1, j), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return SurfaceMesh(np.array(verts), np.array(tris))


def disk_mesh(n_rings, n_sectors):
    """Planar disk: a center fan plus annular rings; one boundary loop."""
    verts = [(0.0, 0.0, 0.0)]
    for i in range(1, n_rings + 1):
        r = i / n_rings
        for j in range(n_sectors):
            a = 2.0 * np.pi * j / n_sectors
            verts.append((r * np.cos(a), r * np.sin(a), 0.0))

    def vid(i, j):
        return 1 + (i - 1) * n_sectors + (j % n_sectors)

    tris = [(0, vid(1, j), vid(1, j + 1)) for j in range(n_sectors)]
    for i in range(1, n_rings):
        for j in range(n_sectors):
            v00, v01 = vid(i, j), vid(i, j + 1)
            v10, v11 = vid(i + 1, j), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return SurfaceMesh(np.array(verts), np.array(tris))


def sphere_mesh(subdivisions=2):
    """Closed subdivided octahedron (no boundary; exhaustion must refuse it)."""
    verts = [
        (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
    ]
    faces = [
        (0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
        (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5),
    ]
    verts = [np.asarray(v, dtype=float) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        faces = new_faces
    return SurfaceMesh(np.array(verts), np.array(faces))


def save_off(path, mesh):
    """Write a mesh as a plain OFF file."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(mesh.vertices)} {len(mesh.triangles)} 0\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
