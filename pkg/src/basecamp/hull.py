"""3D convex hulls: quickhull construction producing outward-wound triangles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegeneracyError(ValueError):
    """Input point set spans fewer than 3 dimensions (within 1e-9 m)."""

    def __init__(self, rank: int, message: str):
        super().__init__(f"{message} (affine rank {rank})")
        self.rank = rank


@dataclass
class ConvexHull:
    """Closed convex polyhedron: vertices plus outward-wound triangle indices."""

    vertices: np.ndarray  # (V, 3)
    triangles: np.ndarray  # (T, 3) int

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=int).reshape(-1, 3)
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise ValueError("triangle index out of range")

    def face_planes(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit outward normals (T, 3) and plane offsets d with n.x = d on the face."""
        v0 = self.vertices[self.triangles[:, 0]]
        v1 = self.vertices[self.triangles[:, 1]]
        v2 = self.vertices[self.triangles[:, 2]]
        normals = np.cross(v1 - v0, v2 - v0)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = np.einsum("ij,ij->i", normals, v0)
        return normals, offsets

    def volume(self) -> float:
        v0 = self.vertices[self.triangles[:, 0]]
        v1 = self.vertices[self.triangles[:, 1]]
        v2 = self.vertices[self.triangles[:, 2]]
        return float(np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0)

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def to_json(self) -> dict:
        return {
            "vertices": [[float(c) for c in v] for v in self.vertices],
            "triangles": [[int(i) for i in t] for t in self.triangles],
        }

    @staticmethod
    def from_json(obj: dict) -> "ConvexHull":
        return ConvexHull(np.array(obj["vertices"], dtype=float),
                          np.array(obj["triangles"], dtype=int))


def affine_rank(points: np.ndarray, tol: float = 1e-9) -> int:
    """Number of principal directions with spatial extent above tol meters."""
    pts = np.asarray(points, dtype=float)
    if len(pts) <= 1:
        return 0
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    extents = centered @ vt.T
    spans = extents.max(axis=0) - extents.min(axis=0)
    return int((spans > tol).sum())


def _initial_tetrahedron(pts: np.ndarray) -> list[int]:
    lo = pts.argmin(axis=0)
    hi = pts.argmax(axis=0)
    extremes = np.unique(np.concatenate([lo, hi]))
    best = (-1.0, 0, 0)
    for a in extremes:
        for b in extremes:
            d = np.linalg.norm(pts[a] - pts[b])
            if d > best[0]:
                best = (d, int(a), int(b))
    _, i0, i1 = best
    axis = pts[i1] - pts[i0]
    axis = axis / np.linalg.norm(axis)
    rel = pts - pts[i0]
    perp = rel - np.outer(rel @ axis, axis)
    i2 = int(np.linalg.norm(perp, axis=1).argmax())
    normal = np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0])
    normal /= np.linalg.norm(normal)
    dists = rel @ normal
    i3 = int(np.abs(dists).argmax())
    if dists[i3] > 0:
        i0, i1 = i1, i0  # keep i3 below the (i0, i1, i2) plane
    return [i0, i1, i2, i3]


class _Face:
    __slots__ = ("verts", "normal", "offset", "outside", "alive")

    def __init__(self, verts: tuple[int, int, int], pts: np.ndarray):
        self.verts = verts
        a, b, c = (pts[v] for v in verts)
        n = np.cross(b - a, c - a)
        norm = np.linalg.norm(n)
        self.normal = n / norm if norm > 0 else n
        self.offset = float(self.normal @ a)
        self.outside: list[int] = []
        self.alive = True

    def dist(self, p: np.ndarray) -> float:
        return float(self.normal @ p - self.offset)

    def edges(self):
        i, j, k = self.verts
        return ((i, j), (j, k), (k, i))


def quickhull(points) -> ConvexHull:
    """Convex hull of >= 4 non-coplanar points.

    Output satisfies: vertex set is a subset of the input points, every
    input point is on or inside the hull, triangles form a closed
    2-manifold wound outward.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    rank = affine_rank(pts)
    if len(pts) < 4 or rank < 3:
        raise DegeneracyError(rank, f"cannot hull {len(pts)} points")

    scale = float(np.abs(pts).max())
    eps = 1e-10 * max(1.0, scale)

    tetra = _initial_tetrahedron(pts)
    i0, i1, i2, i3 = tetra
    faces: dict[int, _Face] = {}
    edge_owner: dict[tuple[int, int], int] = {}
    next_id = 0

    def add_face(verts: tuple[int, int, int]) -> int:
        nonlocal next_id
        fid = next_id
        next_id += 1
        faces[fid] = _Face(verts, pts)
        for e in faces[fid].edges():
            edge_owner[e] = fid
        return fid

    def drop_face(fid: int) -> None:
        f = faces[fid]
        f.alive = False
        for e in f.edges():
            if edge_owner.get(e) == fid:
                del edge_owner[e]

    for verts in ((i0, i1, i2), (i0, i3, i1), (i1, i3, i2), (i2, i3, i0)):
        add_face(verts)

    in_tetra = set(tetra)
    candidates = [i for i in range(len(pts)) if i not in in_tetra]
    fids = list(faces)
    for i in candidates:
        best_fid, best_d = -1, eps
        for fid in fids:
            d = faces[fid].dist(pts[i])
            if d > best_d:
                best_fid, best_d = fid, d
        if best_fid >= 0:
            faces[best_fid].outside.append(i)

    pending = [fid for fid in faces if faces[fid].outside]
    while pending:
        fid = pending.pop()
        face = faces.get(fid)
        if face is None or not face.alive or not face.outside:
            continue
        dists = [face.dist(pts[i]) for i in face.outside]
        apex = face.outside[int(np.argmax(dists))]
        p = pts[apex]

        # flood-fill the faces visible from the apex
        visible = {fid}
        stack = [fid]
        while stack:
            cur = stack.pop()
            for a, b in faces[cur].edges():
                nb = edge_owner.get((b, a))
                if nb is None or nb in visible:
                    continue
                if faces[nb].dist(p) > eps:
                    visible.add(nb)
                    stack.append(nb)

        horizon: list[tuple[int, int]] = []
        orphans: list[int] = []
        for vid in visible:
            vf = faces[vid]
            orphans.extend(j for j in vf.outside if j != apex)
            for a, b in vf.edges():
                if edge_owner.get((b, a)) not in visible:
                    horizon.append((a, b))
        for vid in visible:
            drop_face(vid)

        new_ids = [add_face((a, b, apex)) for a, b in horizon]
        for j in orphans:
            best_fid, best_d = -1, eps
            for nid in new_ids:
                d = faces[nid].dist(pts[j])
                if d > best_d:
                    best_fid, best_d = nid, d
            if best_fid >= 0:
                faces[best_fid].outside.append(j)
        pending.extend(nid for nid in new_ids if faces[nid].outside)

    alive = [f for f in faces.values() if f.alive]
    used = sorted({v for f in alive for v in f.verts})
    remap = {old: new for new, old in enumerate(used)}
    vertices = pts[used]

    def canon(tri: tuple[int, int, int]) -> tuple[int, int, int]:
        # rotate so the smallest index leads; cyclic order (winding) kept
        k = tri.index(min(tri))
        return tri[k:] + tri[:k]

    triangles = np.array(
        sorted(canon(tuple(remap[v] for v in f.verts)) for f in alive), dtype=int
    )
    return ConvexHull(vertices, triangles)
