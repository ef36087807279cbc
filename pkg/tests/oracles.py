"""Independent reference implementations used to verify the library.

Everything here recomputes geometry and linear algebra with its own plain
formulas and loops, deliberately avoiding the library's kernels, so that
agreement between the two routes is meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

PARAM_SHRINK = 1e-6
BARY_SLACK = 1e-9


def plane_of(vertices):
    v = np.asarray(vertices, dtype=float)
    n = np.cross(v[1] - v[0], v[2] - v[0])
    n = n / np.linalg.norm(n)
    return n, float(np.dot(n, v[0]))


def mirror(p, normal, offset):
    return p - 2.0 * (float(np.dot(normal, p)) - offset) * normal


def seg_plane_t(a, b, normal, offset):
    denom = float(np.dot(normal, b - a))
    if denom == 0.0:
        return None
    return (offset - float(np.dot(normal, a))) / denom


def bary_coords(p, vertices):
    v = np.asarray(vertices, dtype=float)
    e1, e2 = v[1] - v[0], v[2] - v[0]
    n = np.cross(e1, e2)
    w = p - v[0]
    w = w - n * (float(np.dot(w, n)) / float(np.dot(n, n)))
    d11, d12, d22 = np.dot(e1, e1), np.dot(e1, e2), np.dot(e2, e2)
    det = d11 * d22 - d12 * d12
    u = (d22 * np.dot(w, e1) - d12 * np.dot(w, e2)) / det
    vv = (d11 * np.dot(w, e2) - d12 * np.dot(w, e1)) / det
    return 1.0 - u - vv, u, vv


def inside(p, vertices, slack=BARY_SLACK):
    return all(c >= -slack for c in bary_coords(p, vertices))


def segment_hits_triangle(a, b, vertices, shrink=PARAM_SHRINK):
    n, c = plane_of(vertices)
    t = seg_plane_t(a, b, n, c)
    if t is None or not (shrink < t < 1.0 - shrink):
        return False
    return inside(a + t * (b - a), vertices)


def triangle_area(vertices):
    v = np.asarray(vertices, dtype=float)
    return 0.5 * float(np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0])))


def area_sum_inside(p, vertices, rel_tol=1e-9):
    """Containment via sub-triangle areas summing to the full area."""
    v = np.asarray(vertices, dtype=float)
    total = triangle_area(v)
    parts = (triangle_area([p, v[0], v[1]])
             + triangle_area([p, v[1], v[2]])
             + triangle_area([p, v[2], v[0]]))
    return abs(parts - total) <= rel_tol * total


def sampled_segment_crossing(a, b, vertices, n_samples=10_000):
    """Crossing detection by dense signed-distance sampling along the segment."""
    n, c = plane_of(vertices)
    ts = np.linspace(PARAM_SHRINK, 1.0 - PARAM_SHRINK, n_samples)
    points = a[None, :] + ts[:, None] * (b - a)[None, :]
    dist = points @ n - c
    signs = np.sign(dist)
    for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
        frac = dist[i] / (dist[i] - dist[i + 1])
        crossing = points[i] + frac * (points[i + 1] - points[i])
        if inside(crossing, vertices):
            return True
    return False


# ---------------------------------------------------------------------------
# naive full tracer: per-sequence mirror recursion plus exhaustive loops


def _obstructed(scene, a, b):
    for tri in scene.triangles:
        if segment_hits_triangle(a, b, tri.vertices):
            return True
    return False


def trace_sequence(scene, tx, rx, seq, wavelength):
    """Trace one ordered surface sequence; None when invalid or obstructed.

    Mirrors the receiver backward across the surfaces (last hit first), then
    walks forward from the transmitter intersecting toward each image.
    """
    planes = [plane_of(scene.triangles[i].vertices) for i in seq]
    images = [None] * len(seq)
    img = np.asarray(rx, dtype=float)
    for i in reversed(range(len(seq))):
        img = mirror(img, *planes[i])
        images[i] = img
    points = []
    cur = np.asarray(tx, dtype=float)
    for i, sid in enumerate(seq):
        t = seg_plane_t(cur, images[i], *planes[i])
        if t is None or not (PARAM_SHRINK < t < 1.0 - PARAM_SHRINK):
            return None
        p = cur + t * (images[i] - cur)
        if not inside(p, scene.triangles[sid].vertices):
            return None
        points.append(p)
        cur = p
    legs = [np.asarray(tx, dtype=float), *points, np.asarray(rx, dtype=float)]
    for a, b in zip(legs, legs[1:]):
        if _obstructed(scene, a, b):
            return None
    d = sum(float(np.linalg.norm(b - a)) for a, b in zip(legs, legs[1:]))
    pg = 20.0 * math.log10(wavelength / (4.0 * math.pi * d))
    pg -= sum(scene.loss_db(i) for i in seq)
    return d, pg, np.array(points)


def brute_force_mpcs(scene, tx, rx, max_order, wavelength):
    """All valid paths up to max_order: {surface_ids: (d, path_gain_db)}.

    Enumerates every ordered sequence without immediate repetition, then
    collapses shared-edge duplicates the same way the tracer's output
    contract does (round points to 1e-6 m, keep the lowest ids).
    """
    found = {}
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    if not _obstructed(scene, tx, rx):
        d = float(np.linalg.norm(rx - tx))
        found[()] = (d, 20.0 * math.log10(wavelength / (4.0 * math.pi * d)), np.empty((0, 3)))
    ids = range(scene.num_triangles)
    for k in range(1, max_order + 1):
        for seq in itertools.product(ids, repeat=k):
            if any(x == y for x, y in zip(seq, seq[1:])):
                continue
            out = trace_sequence(scene, tx, rx, seq, wavelength)
            if out is not None:
                found[seq] = out
    best = {}
    for seq, (d, pg, pts) in found.items():
        key = (len(seq), tuple(np.round(pts, 6).ravel()))
        if key not in best or seq < best[key][0]:
            best[key] = (seq, d, pg)
    return {seq: (d, pg) for seq, d, pg in best.values()}


def power_iteration_sigma1(h, iterations=4000, seed=0):
    """Largest singular value via power iteration on h^H h."""
    rng = np.random.default_rng(seed)
    m = h.conj().T @ h
    v = rng.standard_normal(m.shape[0]) + 1j * rng.standard_normal(m.shape[0])
    v = v / np.linalg.norm(v)
    for _ in range(iterations):
        v = m @ v
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return 0.0
        v = v / norm
    return float(np.linalg.norm(h @ v))
