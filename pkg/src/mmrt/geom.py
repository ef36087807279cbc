"""3D primitives and predicates for specular reflection tracing.

Points and vectors are plain float64 numpy arrays of shape (3,). All
predicates take an explicit :class:`Tolerances`, so every numerical slack
used by the tracer lives in one auditable place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Vec3 = np.ndarray


@dataclass(frozen=True)
class Tolerances:
    """Numerical slack used by the geometric predicates.

    min_triangle_area_m2: triangles with a smaller area are rejected as
        degenerate.
    on_plane_m: maximum point-to-plane distance still treated as "on the
        plane" (points further away are projected before testing).
    barycentric_slack: boundary slack; edge and vertex hits count as inside.
    segment_param_shrink: parametric shrink applied at both segment ends, so
        a segment that merely starts or ends on a surface does not intersect
        it. This is what keeps a reflected ray from being obstructed by its
        own reflecting triangle.
    """

    min_triangle_area_m2: float = 1e-12
    on_plane_m: float = 1e-9
    barycentric_slack: float = 1e-9
    segment_param_shrink: float = 1e-6


DEFAULT_TOLERANCES = Tolerances()


def vec3(x: float, y: float, z: float) -> Vec3:
    """Build a float64 point/vector."""
    return np.array([float(x), float(y), float(z)])


@dataclass(frozen=True)
class Plane:
    """Plane in signed-distance form ``normal . x = offset``, unit normal."""

    normal: Vec3
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (3,) or not np.all(np.isfinite(n)):
            raise ValueError("plane normal must be a finite 3-vector")
        if abs(float(np.linalg.norm(n)) - 1.0) > 1e-12:
            raise ValueError("plane normal must be unit length")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_points(cls, a: Vec3, b: Vec3, c: Vec3) -> "Plane":
        n = np.cross(np.asarray(b, float) - a, np.asarray(c, float) - a)
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            raise ValueError("collinear points do not define a plane")
        n = n / norm
        return cls(n, float(np.dot(n, a)))

    def signed_distance(self, p: Vec3) -> float:
        return float(np.dot(self.normal, p) - self.offset)


@dataclass(frozen=True, eq=False)
class Triangle:
    """One reflecting facet: three corners, a scene id, and a material id."""

    vertices: np.ndarray  # shape (3, 3), one corner per row
    id: int = 0
    material_id: int = 0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape != (3, 3) or not np.all(np.isfinite(v)):
            raise ValueError(f"triangle {self.id}: vertices must form a finite 3x3 array")
        object.__setattr__(self, "vertices", v)
        if self.area() <= DEFAULT_TOLERANCES.min_triangle_area_m2:
            raise ValueError(f"triangle {self.id}: degenerate (collinear vertices)")

    def area(self) -> float:
        v = self.vertices
        return 0.5 * float(np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0])))

    def centroid(self) -> Vec3:
        return self.vertices.mean(axis=0)

    def plane(self) -> Plane:
        v = self.vertices
        return Plane.from_points(v[0], v[1], v[2])


def mirror_point(p: Vec3, plane: Plane) -> Vec3:
    """Reflect a point across a plane (an involution)."""
    return p - 2.0 * (float(np.dot(plane.normal, p)) - plane.offset) * plane.normal


def segment_plane_intersection(
    a: Vec3, b: Vec3, plane: Plane, tol: Tolerances = DEFAULT_TOLERANCES
) -> Vec3 | None:
    """Point where the open segment (a, b) crosses the plane, or None.

    The crossing parameter must lie in ``(shrink, 1 - shrink)``. Segments
    parallel to the plane, lying inside it, or merely touching it at an
    endpoint do not intersect.
    """
    ab = b - a
    denom = float(np.dot(plane.normal, ab))
    if denom == 0.0:
        return None
    t = (plane.offset - float(np.dot(plane.normal, a))) / denom
    s = tol.segment_param_shrink
    if not (s < t < 1.0 - s):
        return None
    return a + t * ab


def barycentric(p: Vec3, triangle: Triangle) -> np.ndarray:
    """Barycentric coordinates of p after projection onto the triangle plane.

    Returns (w0, w1, w2) with w0 + w1 + w2 = 1, where wi weights vertex i.
    """
    v = triangle.vertices
    e1 = v[1] - v[0]
    e2 = v[2] - v[0]
    d11 = float(np.dot(e1, e1))
    d12 = float(np.dot(e1, e2))
    d22 = float(np.dot(e2, e2))
    det = d11 * d22 - d12 * d12  # equals (2 * area)^2
    if det <= 0.0:
        raise ValueError(f"triangle {triangle.id}: degenerate (zero area)")
    w = p - v[0]
    n = np.cross(e1, e2)
    w = w - n * (float(np.dot(w, n)) / float(np.dot(n, n)))
    we1 = float(np.dot(w, e1))
    we2 = float(np.dot(w, e2))
    u = (d22 * we1 - d12 * we2) / det
    v_ = (d11 * we2 - d12 * we1) / det
    return np.array([1.0 - u - v_, u, v_])


def point_in_triangle(
    p: Vec3, triangle: Triangle, tol: Tolerances = DEFAULT_TOLERANCES
) -> bool:
    """True when p lies inside the triangle; edges and vertices count as inside."""
    coords = barycentric(p, triangle)
    return bool(np.all(coords >= -tol.barycentric_slack))


def segment_triangle_intersect(
    a: Vec3, b: Vec3, triangle: Triangle, tol: Tolerances = DEFAULT_TOLERANCES
) -> bool:
    """True when the end-shrunk open segment (a, b) crosses the triangle.

    Used as the obstruction test: endpoints sitting exactly on the triangle
    (e.g. a reflection point on its own surface) do not count as crossings.
    """
    p = segment_plane_intersection(a, b, triangle.plane(), tol)
    if p is None:
        return False
    return point_in_triangle(p, triangle, tol)
