"""Scenario representation and ingestion.

A scene is a triangle mesh with per-material reflection losses. Scenes and
receiver trajectories are stored in plain UTF-8 text files:

Scene file::

    materials N
    <name> <loss_db>          (N lines; names are single tokens)
    triangles M
    x1 y1 z1 x2 y2 z2 x3 y3 z3 mat_idx   (M lines)

Trajectory file::

    dt <seconds>
    x y z                     (one line per sample)

Values are whitespace-separated with '.' decimals, no locale. Floats are
written with shortest round-trip formatting, so saving a loaded canonical
file reproduces it byte for byte. Triangle ids equal the file order.

The built-in generators cover three scenarios: a box room with a spiral
walk ("indoor1"), an L-shaped hallway with a ping-pong walk around the
corner ("lroom"), and an open parking lot ringed by buildings with a loop
drive ("parking").
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geom import Triangle, Vec3, vec3

logger = logging.getLogger(__name__)

DEFAULT_REFLECTION_LOSS_DB = 10.0
TYPICAL_LOSS_RANGE_DB = (7.0, 25.0)


class FormatError(ValueError):
    """Malformed scene/trajectory/trace file; message carries the line number."""


@dataclass(frozen=True)
class Material:
    name: str
    reflection_loss_db: float

    def __post_init__(self):
        if not self.name or len(self.name.split()) != 1:
            raise ValueError(f"material name must be a single token, got {self.name!r}")
        lo, hi = TYPICAL_LOSS_RANGE_DB
        if not (lo <= self.reflection_loss_db <= hi):
            logger.warning(
                "material %r: reflection loss %.3g dB outside the typical %g-%g dB range",
                self.name, self.reflection_loss_db, lo, hi,
            )


@dataclass(frozen=True, eq=False)
class Scene:
    name: str = field(compare=False, default="scene")
    materials: tuple[Material, ...] = ()
    triangles: tuple[Triangle, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "materials", tuple(self.materials))
        object.__setattr__(self, "triangles", tuple(self.triangles))
        for i, tri in enumerate(self.triangles):
            if tri.id != i:
                raise ValueError(f"triangle ids must be dense 0..N-1 in order, got {tri.id} at {i}")
            if not (0 <= tri.material_id < len(self.materials)):
                raise ValueError(
                    f"triangle {i}: dangling material reference {tri.material_id} "
                    f"(have {len(self.materials)} materials)"
                )

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def loss_db(self, triangle_id: int) -> float:
        return self.materials[self.triangles[triangle_id].material_id].reflection_loss_db


@dataclass(frozen=True, eq=False)
class Trajectory:
    sample_interval_s: float
    positions: np.ndarray  # shape (T, 3)

    def __post_init__(self):
        if self.sample_interval_s <= 0:
            raise ValueError("sample interval must be positive")
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or not np.all(np.isfinite(pos)):
            raise ValueError("positions must be a finite (T, 3) array")
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return len(self.positions)

    def truncated(self, samples: int | None) -> "Trajectory":
        if samples is None or samples >= len(self):
            return self
        return Trajectory(self.sample_interval_s, self.positions[:samples].copy())


@dataclass(frozen=True, eq=False)
class NodeConfig:
    role: str  # "TX" or "RX"
    position: Vec3 | None = None
    trajectory: Trajectory | None = None

    def __post_init__(self):
        if self.role not in ("TX", "RX"):
            raise ValueError(f"role must be TX or RX, got {self.role!r}")
        if (self.position is None) == (self.trajectory is None):
            raise ValueError("exactly one of position/trajectory must be set")
        if self.position is not None:
            object.__setattr__(self, "position", np.asarray(self.position, dtype=float))


def _fmt(x: float) -> str:
    return repr(float(x))


def save_scene(scene: Scene, path: str | Path) -> None:
    path = Path(path)
    lines = [f"materials {len(scene.materials)}"]
    for m in scene.materials:
        lines.append(f"{m.name} {_fmt(m.reflection_loss_db)}")
    lines.append(f"triangles {len(scene.triangles)}")
    for t in scene.triangles:
        coords = " ".join(_fmt(c) for c in t.vertices.ravel())
        lines.append(f"{coords} {t.material_id}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_scene(path: str | Path, name: str | None = None) -> Scene:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    pos = 0

    def next_line() -> tuple[int, str]:
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise FormatError(f"{path.name}: unexpected end of file at line {pos + 1}")
        pos += 1
        return pos, lines[pos - 1]

    lineno, header = next_line()
    parts = header.split()
    if len(parts) != 2 or parts[0] != "materials":
        raise FormatError(f"{path.name}:{lineno}: expected 'materials N', got {header!r}")
    try:
        n_mat = int(parts[1])
    except ValueError:
        raise FormatError(f"{path.name}:{lineno}: bad material count {parts[1]!r}") from None

    materials = []
    for _ in range(n_mat):
        lineno, line = next_line()
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"{path.name}:{lineno}: expected '<name> <loss_db>', got {line!r}")
        try:
            materials.append(Material(parts[0], float(parts[1])))
        except ValueError as e:
            raise FormatError(f"{path.name}:{lineno}: {e}") from None

    lineno, header = next_line()
    parts = header.split()
    if len(parts) != 2 or parts[0] != "triangles":
        raise FormatError(f"{path.name}:{lineno}: expected 'triangles M', got {header!r}")
    try:
        n_tri = int(parts[1])
    except ValueError:
        raise FormatError(f"{path.name}:{lineno}: bad triangle count {parts[1]!r}") from None

    triangles = []
    for i in range(n_tri):
        lineno, line = next_line()
        parts = line.split()
        if len(parts) != 10:
            raise FormatError(
                f"{path.name}:{lineno}: expected 9 coordinates and a material index, got {line!r}"
            )
        try:
            coords = [float(x) for x in parts[:9]]
            mat_idx = int(parts[9])
        except ValueError:
            raise FormatError(f"{path.name}:{lineno}: bad number in {line!r}") from None
        if not (0 <= mat_idx < n_mat):
            raise FormatError(f"{path.name}:{lineno}: dangling material reference {mat_idx}")
        try:
            triangles.append(
                Triangle(np.array(coords).reshape(3, 3), id=i, material_id=mat_idx)
            )
        except ValueError as e:
            raise FormatError(f"{path.name}:{lineno}: {e}") from None

    return Scene(name or path.stem, tuple(materials), tuple(triangles))


def save_trajectory(traj: Trajectory, path: str | Path) -> None:
    path = Path(path)
    lines = [f"dt {_fmt(traj.sample_interval_s)}"]
    for p in traj.positions:
        lines.append(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_trajectory(path: str | Path) -> Trajectory:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path.name}: empty trajectory file")
    parts = lines[0].split()
    if len(parts) != 2 or parts[0] != "dt":
        raise FormatError(f"{path.name}:1: expected 'dt <seconds>', got {lines[0]!r}")
    try:
        dt = float(parts[1])
    except ValueError:
        raise FormatError(f"{path.name}:1: bad dt {parts[1]!r}") from None
    positions = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{path.name}:{lineno}: expected 'x y z', got {line!r}")
        try:
            positions.append([float(x) for x in parts])
        except ValueError:
            raise FormatError(f"{path.name}:{lineno}: bad number in {line!r}") from None
    if not positions:
        raise FormatError(f"{path.name}: trajectory has no samples")
    return Trajectory(dt, np.array(positions))


# ---------------------------------------------------------------------------
# mesh building blocks


def _quad(p0, p1, p2, p3, start_id: int, material_id: int) -> list[Triangle]:
    """Split the quad (p0 p1 p2 p3, in perimeter order) into two triangles."""
    return [
        Triangle(np.array([p0, p1, p2]), id=start_id, material_id=material_id),
        Triangle(np.array([p0, p2, p3]), id=start_id + 1, material_id=material_id),
    ]


def _box_room(size_x: float, size_y: float, size_z: float,
              wall_mat: int, floor_mat: int, ceil_mat: int) -> list[list]:
    """Quads of a closed rectangular room, as (corner list, material) pairs."""
    x, y, z = size_x, size_y, size_z
    return [
        ([(0, 0, 0), (x, 0, 0), (x, y, 0), (0, y, 0)], floor_mat),
        ([(0, 0, z), (x, 0, z), (x, y, z), (0, y, z)], ceil_mat),
        ([(0, 0, 0), (x, 0, 0), (x, 0, z), (0, 0, z)], wall_mat),
        ([(0, y, 0), (x, y, 0), (x, y, z), (0, y, z)], wall_mat),
        ([(0, 0, 0), (0, y, 0), (0, y, z), (0, 0, z)], wall_mat),
        ([(x, 0, 0), (x, y, 0), (x, y, z), (x, 0, z)], wall_mat),
    ]


def _build_scene(name: str, materials: list[Material], quads: list[list]) -> Scene:
    triangles: list[Triangle] = []
    for corners, mat in quads:
        pts = [np.array(c, dtype=float) for c in corners]
        triangles.extend(_quad(pts[0], pts[1], pts[2], pts[3], len(triangles), mat))
    return Scene(name, tuple(materials), tuple(triangles))


# ---------------------------------------------------------------------------
# constant-speed walks (every consecutive pair of samples is exactly one step
# apart, also across corners)


def _polyline_walk(waypoints: list[np.ndarray], step: float, samples: int) -> np.ndarray:
    pts = np.empty((samples, 3))
    pts[0] = waypoints[0]
    cur = waypoints[0].astype(float)
    seg = 0
    for n in range(1, samples):
        placed = False
        while seg + 1 < len(waypoints):
            w0, w1 = waypoints[seg], waypoints[seg + 1]
            d = w1 - w0
            seg_len = float(np.linalg.norm(d))
            d = d / seg_len
            # point on this segment at straight-line distance `step` from cur
            rel = w0 - cur
            b = float(np.dot(d, rel))
            disc = b * b - float(np.dot(rel, rel)) + step * step
            if disc >= 0.0:
                q = -b + math.sqrt(disc)
                if 0.0 <= q <= seg_len:
                    cur = w0 + q * d
                    placed = True
                    break
            seg += 1
        if not placed:
            raise ValueError("walk ran out of path; not enough waypoints for the requested samples")
        pts[n] = cur
    return pts


def _spiral_walk(center: np.ndarray, pitch: float, step: float, samples: int,
                 r_max: float) -> np.ndarray:
    """Outward spiral marched with exact steps; circles once r_max is reached."""
    pts = np.empty((samples, 3))
    cur = center + np.array([step, 0.0, 0.0])
    pts[0] = cur
    for n in range(1, samples):
        rel = cur - center
        r = math.hypot(rel[0], rel[1])
        rhat = np.array([rel[0] / r, rel[1] / r, 0.0])
        phat = np.array([-rhat[1], rhat[0], 0.0])
        a = pitch if r < r_max else 0.0
        tang = (a * rhat + r * phat) / math.sqrt(a * a + r * r)
        cur = cur + step * tang
        pts[n] = cur
    return pts


# ---------------------------------------------------------------------------
# built-in scenarios

SAMPLE_INTERVAL_S = 0.005


def make_indoor1(samples: int = 9000, speed_mps: float = 1.2,
                 rx_height_m: float = 1.5) -> tuple[Scene, NodeConfig, Trajectory]:
    """Box room, 10 m x 19 m x 3 m, fixed TX near the ceiling, spiral RX walk.

    The receiver spirals outward from the room center at constant speed,
    staying at least 0.1 m away from every wall.
    """
    materials = [Material("drywall", 10.0)]
    scene = _build_scene("indoor1", materials, _box_room(10.0, 19.0, 3.0, 0, 0, 0))
    tx = NodeConfig("TX", position=vec3(5.0, 0.1, 2.9))
    step = speed_mps * SAMPLE_INTERVAL_S
    center = np.array([5.0, 9.5, rx_height_m])
    pts = _spiral_walk(center, pitch=0.1875, step=step, samples=samples, r_max=4.7)
    return scene, tx, Trajectory(SAMPLE_INTERVAL_S, pts)


def make_lroom(samples: int = 12500, speed_mps: float = 1.2,
               rx_height_m: float = 1.5, leg_length_m: float = 10.0,
               leg_width_m: float = 3.0, height_m: float = 3.0,
               ) -> tuple[Scene, NodeConfig, Trajectory]:
    """L-shaped hallway with the TX near the end of one leg.

    Two legs of ``leg_length_m`` x ``leg_width_m`` x ``height_m`` meet at a
    right angle. The receiver walks the centerline from the TX end, around
    the corner to the far end of the other leg and back, repeating until the
    requested number of samples is produced, so the trace alternates between
    line-of-sight and shadowed stretches. Wall materials are mixed so that
    first-order bounces span a wide relative-power range.
    """
    L, W, H = leg_length_m, leg_width_m, height_m
    materials = [
        Material("concrete", 7.0),   # floor and ceiling
        Material("drywall", 10.0),   # most walls
        Material("wood", 18.0),      # inner side wall of the TX leg
        Material("absorber", 25.0),  # far wall seen down the TX leg
    ]
    quads = [
        # floor: leg A (along x) then leg B remainder (along y)
        ([(0, 0, 0), (L, 0, 0), (L, W, 0), (0, W, 0)], 0),
        ([(0, W, 0), (W, W, 0), (W, L, 0), (0, L, 0)], 0),
        # ceiling
        ([(0, 0, H), (L, 0, H), (L, W, H), (0, W, H)], 0),
        ([(0, W, H), (W, W, H), (W, L, H), (0, L, H)], 0),
        # walls, following the L outline
        ([(0, 0, 0), (L, 0, 0), (L, 0, H), (0, 0, H)], 1),          # y=0 side
        ([(L, 0, 0), (L, W, 0), (L, W, H), (L, 0, H)], 1),          # x=L end (behind TX)
        ([(W, W, 0), (L, W, 0), (L, W, H), (W, W, H)], 2),          # y=W inner side (wood)
        ([(W, W, 0), (W, L, 0), (W, L, H), (W, W, H)], 1),          # x=W inner side
        ([(0, L, 0), (W, L, 0), (W, L, H), (0, L, H)], 1),          # y=L end
        ([(0, 0, 0), (0, L, 0), (0, L, H), (0, 0, H)], 3),          # x=0 far wall (absorber)
    ]
    scene = _build_scene("lroom", materials, quads)
    mid = W / 2.0
    tx = NodeConfig("TX", position=vec3(L - 0.5, mid, height_m - 0.1))
    step = speed_mps * SAMPLE_INTERVAL_S
    z = rx_height_m
    out = [np.array([L - 0.7, mid, z]), np.array([mid, mid, z]), np.array([mid, L - 0.7, z])]
    one_way = 2.0 * (L - 0.7 - mid)
    waypoints = list(out)
    total, forward = one_way, False
    while total < samples * step + 1.0:
        waypoints.extend(out[1:] if forward else out[-2::-1])
        total += one_way
        forward = not forward
    pts = _polyline_walk(waypoints, step, samples)
    return scene, tx, Trajectory(SAMPLE_INTERVAL_S, pts)


def make_parking_lot(samples: int = 15000, speed_mps: float = 4.17,
                     rx_height_m: float = 1.5) -> tuple[Scene, NodeConfig, Trajectory]:
    """Open parking lot of 120 m x 70 m ringed by 3 m tall buildings.

    The scene has a large ground plane and roofless building shells whose
    inner faces sit on the lot boundary. The TX sits on top of one building
    edge; the RX drives a rectangular loop inside the lot, so the direct
    path is never blocked.
    """
    materials = [Material("asphalt", 10.0), Material("brick", 10.0)]
    quads = [([(-25, -25, 0), (145, -25, 0), (145, 95, 0), (-25, 95, 0)], 0)]

    def building(x0, x1, y0, y1):
        h = 3.0
        return [
            ([(x0, y0, 0), (x1, y0, 0), (x1, y0, h), (x0, y0, h)], 1),
            ([(x0, y1, 0), (x1, y1, 0), (x1, y1, h), (x0, y1, h)], 1),
            ([(x0, y0, 0), (x0, y1, 0), (x0, y1, h), (x0, y0, h)], 1),
            ([(x1, y0, 0), (x1, y1, 0), (x1, y1, h), (x1, y0, h)], 1),
        ]

    quads += building(40, 80, -12, 0)     # south, hosts the TX
    quads += building(30, 90, 70, 82)     # north
    quads += building(-12, 0, 15, 55)     # west
    quads += building(120, 132, 15, 55)   # east
    scene = _build_scene("parking", materials, quads)
    tx = NodeConfig("TX", position=vec3(60.0, 0.0, 3.0))
    step = speed_mps * SAMPLE_INTERVAL_S
    z = rx_height_m
    loop = [(60, 10), (108, 10), (108, 60), (12, 60), (12, 10), (60, 10)]
    waypoints = [np.array([x, y, z], dtype=float) for x, y in loop]
    lap_len = 2 * (96 + 50)
    laps = math.ceil(samples * step / lap_len) + 1
    waypoints = waypoints + [w for _ in range(laps) for w in waypoints[1:]]
    pts = _polyline_walk(waypoints, step, samples)
    return scene, tx, Trajectory(SAMPLE_INTERVAL_S, pts)


BUILTIN_SCENARIOS = {
    "indoor1": make_indoor1,
    "lroom": make_lroom,
    "parking": make_parking_lot,
}
