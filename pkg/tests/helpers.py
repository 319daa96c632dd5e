"""Shared structural checks for hull outputs."""

from __future__ import annotations

import numpy as np


def check_hull_invariants(hull, input_points, tol=1e-9):
    """Containment, closed 2-manifold, Euler formula, outward winding."""
    verts, tris = hull.vertices, hull.triangles
    normals, offsets = hull.face_planes()

    # every input point on or inside every face plane
    pts = np.asarray(input_points, dtype=float)
    signed = pts @ normals.T - offsets[None, :]
    assert signed.max() <= tol, f"input point {signed.max():.3e} outside hull"

    # hull vertices are input points
    for v in verts:
        assert np.min(np.linalg.norm(pts - v, axis=1)) < 1e-12

    # each directed edge appears exactly once => every undirected edge
    # is shared by exactly two triangles with opposite orientation
    directed = [(int(t[a]), int(t[(a + 1) % 3])) for t in tris for a in range(3)]
    assert len(directed) == len(set(directed)), "duplicate directed edge"
    for e in directed:
        assert (e[1], e[0]) in set(directed), f"unmatched edge {e}"

    n_edges = len(directed) // 2
    assert len(verts) - n_edges + len(tris) == 2, "Euler formula violated"

    centroid = verts.mean(axis=0)
    face_centers = verts[tris].mean(axis=1)
    outward = np.einsum("ij,ij->i", normals, face_centers - centroid)
    assert (outward > 0).all(), "inward-facing triangle"
