"""Points, unit vectors and the planar convex-hull machinery.

Points are plain ``numpy`` arrays of shape ``(d,)``; point sets are arrays of
shape ``(m, d)``.  Only the hull routines are restricted to the plane, the
rest works in any dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

# A point within this distance of the line through its hull neighbours is dropped.
COLLINEAR_TOL = 1e-9
CONTAIN_TOL = 1e-9
UNIT_TOL = 1e-12


class UnsupportedDimensionError(ValueError):
    pass


def as_points(points) -> np.ndarray:
    """Coerce ``points`` to a finite float array of shape ``(m, d)``, m >= 1."""
    arr = np.array(points, dtype=float, ndmin=2)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("expected a non-empty (m, d) point set")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def unit_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("cannot normalise a zero or non-finite vector")
    return v / norm


def is_unit(v, tol: float = UNIT_TOL) -> bool:
    return abs(float(np.linalg.norm(v)) - 1.0) <= tol


def euclidean_distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def centroid(points) -> np.ndarray:
    pts = as_points(points)
    return pts.sum(axis=0) / len(pts)


def bounding_box(points) -> tuple[np.ndarray, np.ndarray]:
    pts = as_points(points)
    return pts.min(axis=0), pts.max(axis=0)


def box_extent(points) -> np.ndarray:
    lo, hi = bounding_box(points)
    return hi - lo


def max_pairwise_distance(points) -> float:
    pts = as_points(points)
    if len(pts) < 2:
        return 0.0
    return float(pdist(pts).max())


@dataclass(frozen=True, eq=False)
class ConvexHull2D:
    """Counter-clockwise hull vertices; 1 vertex for a point, 2 for a segment."""

    vertices: np.ndarray

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) < 3

    def __eq__(self, other) -> bool:
        return isinstance(other, ConvexHull2D) and np.array_equal(self.vertices, other.vertices)

    __hash__ = None


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _right_of(o, a, b) -> float:
    """Signed distance of ``a`` to the right of the line ``o -> b``."""
    den = math.hypot(b[0] - o[0], b[1] - o[1])
    return -_cross(o, b, a) / den if den > 0 else 0.0


def convex_hull(points) -> ConvexHull2D:
    """Andrew's monotone chain; collinear boundary points are dropped."""
    pts = as_points(points)
    if pts.shape[1] != 2:
        raise UnsupportedDimensionError(f"convex_hull needs 2-D points, got d={pts.shape[1]}")
    uniq = sorted(set(map(tuple, pts.tolist())))
    if len(uniq) == 1:
        return ConvexHull2D(np.array(uniq, dtype=float))

    arr = np.array(uniq)

    def chain(seq):
        out = []
        for p in seq:
            # keep out[-1] only if it bulges right of out[-2] -> p by more than the tolerance
            while len(out) >= 2 and _right_of(out[-2], out[-1], p) <= COLLINEAR_TOL:
                out.pop()
            out.append(p)
        return out

    lower = chain(uniq)
    upper = chain(reversed(uniq))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        # every point within tolerance of one line: keep the two extremes along it
        axis = arr[np.argmax(np.linalg.norm(arr - arr[0], axis=1))] - arr[0]
        t = (arr - arr[0]) @ axis
        hull = [uniq[int(np.argmin(t))], uniq[int(np.argmax(t))]]
    return ConvexHull2D(np.array(hull, dtype=float))


def hull_perimeter(hull: ConvexHull2D) -> float:
    # Closed tour: a 2-vertex hull counts its segment twice.
    v = hull.vertices
    if len(v) < 2:
        return 0.0
    edges = np.roll(v, -1, axis=0) - v
    return float(np.hypot(edges[:, 0], edges[:, 1]).sum())


def hull_area(hull: ConvexHull2D) -> float:
    v = hull.vertices
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)) / 2.0)


def _segment_distances(p, a, b) -> np.ndarray:
    """Distance from ``p`` to each segment ``a[i]-b[i]``."""
    ab = b - a
    ap = p - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.divide(np.einsum("ij,ij->i", ap, ab), denom, out=np.zeros_like(denom), where=denom > 0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(p - closest, axis=1)


def point_in_hull(hull: ConvexHull2D, p, tol: float = CONTAIN_TOL) -> bool:
    v = hull.vertices
    p = np.asarray(p, dtype=float)
    if len(v) == 1:
        return float(np.linalg.norm(p - v[0])) <= tol
    a, b = v, np.roll(v, -1, axis=0)
    if len(v) >= 3:
        ab = b - a
        ap = p - a
        cross = ab[:, 0] * ap[:, 1] - ab[:, 1] * ap[:, 0]
        if np.all(cross >= 0.0):
            return True
    return bool(_segment_distances(p, a, b).min() <= tol)


def hull_contains(outer: ConvexHull2D, inner: ConvexHull2D, tol: float = CONTAIN_TOL) -> bool:
    return all(point_in_hull(outer, q, tol) for q in inner.vertices)
