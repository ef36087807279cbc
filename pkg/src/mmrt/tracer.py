"""Method-of-images specular ray tracer with bounded order and relative
power thresholding.

The tracer enumerates ordered sequences of reflecting triangles (the
reflection tree: the children of every node are all *other* triangles, so a
ray never bounces twice in a row off the same one). For each sequence the
transmitter is mirrored successively across the surfaces; the reflection
points are then recovered by walking backward from the receiver,
intersecting each segment toward the stored image of the next-shallower
prefix. Sequences whose reflection points leave their triangles are
discarded, and surviving polylines are checked for obstruction against the
whole scene with end-shrunk segments.

Two complexity controls exist:

* ``max_reflection_order`` bounds the depth of the reflection tree;
* ``relative_threshold_db`` discards candidates whose path gain falls more
  than the threshold below the strongest path kept so far. For those the
  obstruction check is skipped (the geometry is always computed). A final
  pass re-applies the threshold against the strongest kept path overall, so
  the output never depends on enumeration order.

:class:`Tracer` amortizes the image tree across timesteps of a moving
receiver; the module-level helpers trace a single link from scratch.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geom import (
    DEFAULT_TOLERANCES,
    Tolerances,
    Vec3,
    mirror_point,
    point_in_triangle,
    segment_plane_intersection,
    segment_triangle_intersect,
)
from .scene import Scene

SPEED_OF_LIGHT_M_S = 299792458.0


@dataclass(frozen=True)
class TraceConfig:
    """Tracer knobs: tree depth, relative power threshold, carrier."""

    max_reflection_order: int = 2
    relative_threshold_db: float = float("-inf")
    carrier_frequency_hz: float = 60e9
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        if self.max_reflection_order < 0:
            raise ValueError("max reflection order must be >= 0")
        if self.relative_threshold_db > 0.0:
            raise ValueError("relative threshold must be <= 0 dB")
        if self.carrier_frequency_hz <= 0.0:
            raise ValueError("carrier frequency must be positive")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / self.carrier_frequency_hz


@dataclass(eq=False)
class Mpc:
    """One multipath component: geometry plus narrowband parameters.

    Angles are (azimuth, elevation) in radians: azimuth in [-pi, pi) from +x
    toward +y, elevation in [-pi/2, pi/2] from the xy-plane. The departure
    direction points from the TX along the first segment; the arrival
    direction points from the RX toward the apparent source (back along the
    last segment), so swapping the endpoints exchanges the two.
    """

    order: int
    surface_ids: tuple[int, ...]
    reflection_points: np.ndarray  # shape (order, 3), in propagation order
    path_length_m: float
    delay_s: float
    gain_db: float
    phase_rad: float
    aod: tuple[float, float]
    aoa: tuple[float, float]

    def __post_init__(self):
        if self.order != len(self.surface_ids) or self.order != len(self.reflection_points):
            raise ValueError("order must match surface and reflection point counts")
        if not math.isfinite(self.gain_db):
            raise ValueError("path gain must be finite")

    @property
    def sort_key(self) -> tuple:
        return (self.order, self.surface_ids)


@dataclass(eq=False)
class TraceResult:
    """All kept multipath components of one timestep, plus pruning counters."""

    timestep: int
    mpcs: list[Mpc]
    candidates_examined: int
    pruned_by_threshold: int
    pruned_by_obstruction: int
    elapsed_s: float = 0.0

    def __post_init__(self):
        kept = len(self.mpcs)
        if self.candidates_examined < kept + self.pruned_by_threshold + self.pruned_by_obstruction:
            raise ValueError("candidate count is inconsistent with kept/pruned counts")


def free_space_gain_db(distance_m: float, wavelength_m: float) -> float:
    """Free-space path gain 20*log10(wavelength / (4 pi d)) in dB."""
    if distance_m <= 0.0:
        raise ValueError("coincident nodes: distance must be positive")
    if wavelength_m <= 0.0:
        raise ValueError("wavelength must be positive")
    return 20.0 * math.log10(wavelength_m / (4.0 * math.pi * distance_m))


def path_gain_db(distance_m: float, losses_db, wavelength_m: float) -> float:
    """Free-space gain minus the accumulated per-bounce reflection losses."""
    return free_space_gain_db(distance_m, wavelength_m) - float(sum(losses_db))


def mpc_phase(distance_m: float, order: int, wavelength_m: float) -> float:
    """Carrier phase after the path: propagation delay plus pi per bounce."""
    if distance_m <= 0.0:
        raise ValueError("distance must be positive")
    return (-2.0 * math.pi * distance_m / wavelength_m + order * math.pi) % (2.0 * math.pi)


def direction_angles(v: Vec3) -> tuple[float, float]:
    """(azimuth, elevation) of a direction vector; azimuth in [-pi, pi)."""
    az = math.atan2(v[1], v[0])
    if az == math.pi:
        az = -math.pi
    el = math.atan2(v[2], math.hypot(v[0], v[1]))
    return az, el


def reflection_tree_candidate_count(num_triangles: int, max_reflection_order: int) -> int:
    """Number of ordered surface sequences with no immediate repetition."""
    m = num_triangles
    total = 0
    for k in range(1, max_reflection_order + 1):
        total += m * (m - 1) ** (k - 1)
    return total


def _scene_losses(scene: Scene, sequence) -> list[float]:
    return [scene.loss_db(i) for i in sequence]


def _segment_obstructed(scene: Scene, a: Vec3, b: Vec3, tol: Tolerances) -> bool:
    return any(segment_triangle_intersect(a, b, tri, tol) for tri in scene.triangles)


def trace_los(scene: Scene, tx: Vec3, rx: Vec3, cfg: TraceConfig) -> Mpc | None:
    """Direct path between tx and rx, or None when some triangle blocks it."""
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    d = float(np.linalg.norm(rx - tx))
    if d == 0.0:
        raise ValueError("tx and rx coincide")
    if _segment_obstructed(scene, tx, rx, cfg.tolerances):
        return None
    lam = cfg.wavelength_m
    return Mpc(
        order=0,
        surface_ids=(),
        reflection_points=np.empty((0, 3)),
        path_length_m=d,
        delay_s=d / SPEED_OF_LIGHT_M_S,
        gain_db=free_space_gain_db(d, lam),
        phase_rad=mpc_phase(d, 0, lam),
        aod=direction_angles(rx - tx),
        aoa=direction_angles(tx - rx),
    )


def trace_reflection(scene: Scene, tx: Vec3, rx: Vec3, surface_sequence,
                     cfg: TraceConfig) -> Mpc | None:
    """Trace one ordered bounce sequence (ids in propagation order from tx).

    Returns None when the sequence is geometrically invalid: a reflection
    point misses its triangle, a segment fails to cross a surface, or any
    leg of the polyline is obstructed.
    """
    sequence = tuple(int(i) for i in surface_sequence)
    if not sequence:
        raise ValueError("surface sequence must be non-empty; use trace_los for the direct path")
    if any(a == b for a, b in zip(sequence, sequence[1:])):
        return None
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    tol = cfg.tolerances
    tris = [scene.triangles[i] for i in sequence]
    planes = [t.plane() for t in tris]

    # receiver images, built from the last surface hit back to the first
    images: list[Vec3] = [rx] * len(sequence)
    img = rx
    for i in reversed(range(len(sequence))):
        img = mirror_point(img, planes[i])
        images[i] = img

    points: list[Vec3] = []
    cur = tx
    for i in range(len(sequence)):
        p = segment_plane_intersection(cur, images[i], planes[i], tol)
        if p is None or not point_in_triangle(p, tris[i], tol):
            return None
        points.append(p)
        cur = p

    legs = [tx, *points, rx]
    for a, b in zip(legs, legs[1:]):
        if _segment_obstructed(scene, a, b, tol):
            return None

    d = float(sum(np.linalg.norm(b - a) for a, b in zip(legs, legs[1:])))
    lam = cfg.wavelength_m
    order = len(sequence)
    return Mpc(
        order=order,
        surface_ids=sequence,
        reflection_points=np.array(points),
        path_length_m=d,
        delay_s=d / SPEED_OF_LIGHT_M_S,
        gain_db=path_gain_db(d, _scene_losses(scene, sequence), lam),
        phase_rad=mpc_phase(d, order, lam),
        aod=direction_angles(points[0] - tx),
        aoa=direction_angles(points[-1] - rx),
    )


# ---------------------------------------------------------------------------
# vectorized engine


class _SceneArrays:
    """Per-triangle geometry flattened into arrays for batch predicates."""

    def __init__(self, scene: Scene):
        tris = scene.triangles
        m = len(tris)
        v = np.array([t.vertices for t in tris]) if m else np.empty((0, 3, 3))
        self.count = m
        self.v0 = v[:, 0]
        self.e1 = v[:, 1] - v[:, 0]
        self.e2 = v[:, 2] - v[:, 0]
        n = np.cross(self.e1, self.e2)
        norm = np.linalg.norm(n, axis=1)
        self.normal = n / norm[:, None] if m else n
        self.offset = (self.normal * self.v0).sum(axis=1)
        self.d11 = (self.e1 * self.e1).sum(axis=1)
        self.d12 = (self.e1 * self.e2).sum(axis=1)
        self.d22 = (self.e2 * self.e2).sum(axis=1)
        self.inv_det = 1.0 / (self.d11 * self.d22 - self.d12 * self.d12) if m else self.d11
        self.loss_db = np.array([scene.loss_db(t.id) for t in tris])

    def mirror(self, points: np.ndarray, tri_ids: np.ndarray) -> np.ndarray:
        n = self.normal[tri_ids]
        c = self.offset[tri_ids]
        return points - 2.0 * ((points * n).sum(axis=1) - c)[:, None] * n


class _Level:
    """One depth of the reflection tree, with per-node TX images."""

    __slots__ = ("tri", "parent", "image", "loss_db", "size", "normal", "offset",
                 "n_dot_img", "v0", "e1", "e2", "d11", "d12", "d22", "inv_det")

    def __init__(self, tri, parent, image, loss_db, geo: _SceneArrays):
        self.tri = tri
        self.parent = parent
        self.image = image
        self.loss_db = loss_db
        self.size = len(tri)
        self.normal = geo.normal[tri]
        self.offset = geo.offset[tri]
        self.n_dot_img = (self.normal * image).sum(axis=1)
        self.v0 = geo.v0[tri]
        self.e1 = geo.e1[tri]
        self.e2 = geo.e2[tri]
        self.d11 = geo.d11[tri]
        self.d12 = geo.d12[tri]
        self.d22 = geo.d22[tri]
        self.inv_det = geo.inv_det[tri]


def _inside_level(lev: _Level, rows: np.ndarray, p: np.ndarray, eb: float) -> np.ndarray:
    """Barycentric containment of points p against the rows' triangles."""
    w = p - lev.v0[rows]
    we1 = (w * lev.e1[rows]).sum(axis=1)
    we2 = (w * lev.e2[rows]).sum(axis=1)
    u = (lev.d22[rows] * we1 - lev.d12[rows] * we2) * lev.inv_det[rows]
    v = (lev.d11[rows] * we2 - lev.d12[rows] * we1) * lev.inv_det[rows]
    return (u >= -eb) & (v >= -eb) & (u + v <= 1.0 + eb)


def _build_image_tree(geo: _SceneArrays, tx: Vec3, max_order: int) -> list[_Level]:
    levels: list[_Level] = []
    m = geo.count
    if m == 0 or max_order == 0:
        return levels
    base = np.arange(m)
    tri = base.copy()
    parent = np.full(m, -1)
    image = geo.mirror(np.broadcast_to(tx, (m, 3)), tri)
    levels.append(_Level(tri, parent, image, geo.loss_db[tri].copy(), geo))
    for _ in range(2, max_order + 1):
        prev = levels[-1]
        keep = base[None, :] != prev.tri[:, None]
        children = np.broadcast_to(base, (prev.size, m))[keep].reshape(prev.size, m - 1)
        if children.size == 0:
            break
        parent = np.repeat(np.arange(prev.size), m - 1)
        tri = children.ravel()
        image = geo.mirror(prev.image[parent], tri)
        loss = prev.loss_db[parent] + geo.loss_db[tri]
        levels.append(_Level(tri, parent, image, loss, geo))
    return levels


class Tracer:
    """Image-tree tracer bound to one scene, transmitter, and configuration.

    The full tree of transmitter mirror images is computed once; tracing a
    timestep then only costs the backward intersection walk from the
    receiver plus obstruction checks for the survivors.
    """

    def __init__(self, scene: Scene, tx: Vec3, cfg: TraceConfig):
        self.scene = scene
        self.cfg = cfg
        self.tx = np.asarray(tx, dtype=float)
        self._geo = _SceneArrays(scene)
        self._levels = _build_image_tree(self._geo, self.tx, cfg.max_reflection_order)
        self.candidates_per_timestep = 1 + sum(lev.size for lev in self._levels)

    # -- batch predicates ---------------------------------------------------

    def _legs_obstructed(self, endpoints: np.ndarray) -> np.ndarray:
        """True per row when any leg of the polyline crosses any triangle.

        endpoints: (n, L+1, 3) polyline vertices per candidate.
        """
        geo = self._geo
        if geo.count == 0:
            return np.zeros(len(endpoints), dtype=bool)
        tol = self.cfg.tolerances
        a = endpoints[:, :-1, None, :]
        ab = endpoints[:, 1:, None, :] - a
        denom = (ab * geo.normal).sum(-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (geo.offset - (a * geo.normal).sum(-1)) / denom
            s = tol.segment_param_shrink
            crossing = (t > s) & (t < 1.0 - s)
            p = a + t[..., None] * ab
            w = p - geo.v0
            we1 = (w * geo.e1).sum(-1)
            we2 = (w * geo.e2).sum(-1)
            u = (geo.d22 * we1 - geo.d12 * we2) * geo.inv_det
            v = (geo.d11 * we2 - geo.d12 * we1) * geo.inv_det
        eb = tol.barycentric_slack
        inside = (u >= -eb) & (v >= -eb) & (u + v <= 1.0 + eb)
        return (crossing & inside).any(axis=(1, 2))

    def _walk_level(self, rx: Vec3, k: int):
        """Backward intersection walk for all depth-k sequences.

        Returns (rows, points, seqs, dists, losses) for the geometrically
        valid candidates, or None when none survive. points has shape
        (n, k, 3) in propagation order.
        """
        tol = self.cfg.tolerances
        s = tol.segment_param_shrink
        eb = tol.barycentric_slack
        lev_k = self._levels[k - 1]

        # last bounce first: every row's segment starts at rx, so the plane
        # crossing reduces to whole-level vector arithmetic without gathers
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (lev_k.offset - lev_k.n_dot_img) / (lev_k.normal @ rx - lev_k.n_dot_img)
        ok = (t > s) & (t < 1.0 - s)
        if not ok.any():
            return None
        sel = np.flatnonzero(ok)
        img = lev_k.image[sel]
        p = img + t[sel, None] * (rx - img)
        okb = _inside_level(lev_k, sel, p, eb)
        if not okb.any():
            return None
        sel2 = np.flatnonzero(okb)
        alive = sel[sel2]
        cur = p[sel2]
        stack = [(k, alive, cur)]
        anc = lev_k.parent[alive]

        for depth in range(k - 1, 0, -1):
            lev = self._levels[depth - 1]
            img = lev.image[anc]
            ab = cur - img
            denom = (lev.normal[anc] * ab).sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (lev.offset[anc] - lev.n_dot_img[anc]) / denom
            ok = (t > s) & (t < 1.0 - s)
            if not ok.any():
                return None
            sel = np.flatnonzero(ok)
            anc_s = anc[sel]
            p = img[sel] + t[sel, None] * ab[sel]
            okb = _inside_level(lev, anc_s, p, eb)
            if not okb.any():
                return None
            sel2 = np.flatnonzero(okb)
            alive = alive[sel[sel2]]
            cur = p[sel2]
            stack.append((depth, alive, cur))
            anc = lev.parent[anc_s[sel2]]

        rows = alive
        n = rows.size
        points = np.empty((n, k, 3))
        for depth, ids, pts in stack:
            points[:, depth - 1, :] = pts[np.searchsorted(ids, rows)]

        seqs = np.empty((n, k), dtype=np.int64)
        anc = rows
        for depth in range(k, 0, -1):
            lev = self._levels[depth - 1]
            seqs[:, depth - 1] = lev.tri[anc]
            anc = lev.parent[anc]

        endpoints = np.concatenate(
            [np.broadcast_to(self.tx, (n, 1, 3)), points, np.broadcast_to(rx, (n, 1, 3))],
            axis=1,
        )
        dists = np.linalg.norm(np.diff(endpoints, axis=1), axis=2).sum(axis=1)
        return rows, points, seqs, dists, lev_k.loss_db[rows], endpoints

    # -- tracing ------------------------------------------------------------

    def _make_mpc(self, k: int, seq, points: np.ndarray, d: float, gain: float,
                  rx: Vec3) -> Mpc:
        lam = self.cfg.wavelength_m
        return Mpc(
            order=k,
            surface_ids=tuple(int(i) for i in seq),
            reflection_points=points.copy(),
            path_length_m=float(d),
            delay_s=float(d) / SPEED_OF_LIGHT_M_S,
            gain_db=float(gain),
            phase_rad=mpc_phase(float(d), k, lam),
            aod=direction_angles(points[0] - self.tx),
            aoa=direction_angles(points[-1] - rx),
        )

    def trace(self, rx: Vec3, timestep: int = 0) -> TraceResult:
        t_start = time.perf_counter()
        rx = np.asarray(rx, dtype=float)
        lam = self.cfg.wavelength_m
        gamma = self.cfg.relative_threshold_db
        thresholding = gamma > float("-inf")

        mpcs: list[Mpc] = []
        pruned_thr = 0
        pruned_obs = 0
        pg_max = float("-inf")

        d_los = float(np.linalg.norm(rx - self.tx))
        if d_los == 0.0:
            raise ValueError("tx and rx coincide")
        los_endpoints = np.stack([self.tx, rx])[None, :, :]
        if bool(self._legs_obstructed(los_endpoints)[0]):
            pruned_obs += 1
        else:
            mpc = Mpc(
                order=0,
                surface_ids=(),
                reflection_points=np.empty((0, 3)),
                path_length_m=d_los,
                delay_s=d_los / SPEED_OF_LIGHT_M_S,
                gain_db=free_space_gain_db(d_los, lam),
                phase_rad=mpc_phase(d_los, 0, lam),
                aod=direction_angles(rx - self.tx),
                aoa=direction_angles(self.tx - rx),
            )
            mpcs.append(mpc)
            pg_max = mpc.gain_db

        for k in range(1, len(self._levels) + 1):
            cand = self._walk_level(rx, k)
            if cand is None:
                continue
            rows, points, seqs, dists, losses, endpoints = cand
            gains = 20.0 * np.log10(lam / (4.0 * math.pi * dists)) - losses
            if thresholding:
                ok = gains - pg_max >= gamma
                pruned_thr += int((~ok).sum())
                if not ok.any():
                    continue
                sel = np.flatnonzero(ok)
                points, seqs, dists = points[sel], seqs[sel], dists[sel]
                gains, endpoints = gains[sel], endpoints[sel]
            obstructed = self._legs_obstructed(endpoints)
            pruned_obs += int(obstructed.sum())
            kept = np.flatnonzero(~obstructed)
            if kept.size == 0:
                continue
            for j in kept:
                mpcs.append(self._make_mpc(k, seqs[j], points[j], dists[j], gains[j], rx))
            pg_max = max(pg_max, float(gains[kept].max()))

        mpcs = _dedup_mpcs(mpcs)
        if thresholding and mpcs:
            pg_final = max(m.gain_db for m in mpcs)
            kept_mpcs = [m for m in mpcs if m.order == 0 or m.gain_db - pg_final >= gamma]
            pruned_thr += len(mpcs) - len(kept_mpcs)
            mpcs = kept_mpcs
        mpcs.sort(key=lambda m: m.sort_key)

        return TraceResult(
            timestep=timestep,
            mpcs=mpcs,
            candidates_examined=self.candidates_per_timestep,
            pruned_by_threshold=pruned_thr,
            pruned_by_obstruction=pruned_obs,
            elapsed_s=time.perf_counter() - t_start,
        )


def _dedup_mpcs(mpcs: list[Mpc]) -> list[Mpc]:
    """Collapse duplicates from coplanar adjacent triangles.

    A reflection point landing exactly on a shared edge validates in both
    triangles; such duplicates carry the same power, so they are keyed by
    (order, reflection points rounded to 1e-6 m) and only the candidate with
    the lowest surface ids is kept.
    """
    best: dict[tuple, Mpc] = {}
    for m in mpcs:
        key = (m.order, tuple(np.round(m.reflection_points, 6).ravel()))
        cur = best.get(key)
        if cur is None or m.surface_ids < cur.surface_ids:
            best[key] = m
    return list(best.values())


def trace_timestep(scene: Scene, tx: Vec3, rx: Vec3, cfg: TraceConfig,
                   timestep: int = 0) -> TraceResult:
    """Trace one link. Builds the image tree from scratch; use
    :class:`Tracer` or :func:`trace_trajectory` for repeated receivers."""
    return Tracer(scene, tx, cfg).trace(rx, timestep)


# -- parallel trajectory tracing ---------------------------------------------

_WORKER_TRACER: Tracer | None = None


def _init_worker(scene: Scene, tx, cfg: TraceConfig) -> None:
    global _WORKER_TRACER
    _WORKER_TRACER = Tracer(scene, tx, cfg)


def _trace_chunk(args) -> list[TraceResult]:
    start, positions = args
    return [_WORKER_TRACER.trace(rx, timestep=start + i) for i, rx in enumerate(positions)]


def trace_trajectory(scene: Scene, tx: Vec3, trajectory, cfg: TraceConfig,
                     workers: int = 1) -> list[TraceResult]:
    """Trace every sample of a receiver trajectory, in order.

    The per-timestep computation is a pure function of (scene, tx, rx, cfg),
    so the output is identical for any worker count; workers only change how
    the timesteps are scheduled.
    """
    positions = np.asarray(trajectory.positions, dtype=float)
    if len(positions) == 0:
        return []
    if workers <= 1:
        tracer = Tracer(scene, tx, cfg)
        out = []
        for i, rx in enumerate(positions):
            try:
                out.append(tracer.trace(rx, timestep=i))
            except ValueError as e:
                raise ValueError(f"timestep {i}: {e}") from e
        return out

    chunk = max(1, math.ceil(len(positions) / (workers * 4)))
    jobs = [(i, positions[i:i + chunk]) for i in range(0, len(positions), chunk)]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(scene, tx, cfg)
    ) as pool:
        results: list[TraceResult] = []
        for part in pool.map(_trace_chunk, jobs):
            results.extend(part)
    return results
