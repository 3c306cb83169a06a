# app/services/synthrt.py
"""
Deterministic image-method tracer for prism worlds.

The scene is a ground plane at z = 0 plus axis-aligned boxes. Paths are the
line of sight and specular reflections up to second order. Each reflection
sequence mirrors the transmitter across the faces in order; the path is
recovered by walking back from the receiver towards the successive images
and is kept only if every reflection point lies on its face, every leg stays
on the reflecting side of the faces and no leg crosses a box.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.constants import speed_of_light

from app.core.config import get_settings
from app.core.exceptions import SceneError
from app.schemas.dataset import Dataset, DatasetMetadata, ReceiverRecord, TraceResult
from app.schemas.layout import ReceiverLayout
from app.schemas.path import PathSet, PathTuple, wrap_azimuth
from app.schemas.scene import SceneSpec, TracedPath

logger = logging.getLogger(__name__)

C = float(speed_of_light)  # 299 792 458 m/s
_FOUR_PI = 4.0 * math.pi

EPS_SIDE = 1e-9  # m, strict side-of-plane tolerance
EPS_FACE = 1e-9  # m, in-face tolerance
EPS_T = 1e-9  # segment parameter margin for occlusion

Point = Tuple[float, float, float]


def fspl_db(length_m: float, f_hz: float) -> float:
    """Free-space path loss in dB: 20 log10(4 pi d f / c)."""
    if length_m <= 0 or f_hz <= 0:
        raise ValueError("length and frequency must be positive")
    return 20.0 * math.log10(_FOUR_PI * length_m * f_hz / C)


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Face:
    """Planar axis-aligned face. `bounds` is None for the unbounded ground."""
    face_id: str
    axis: int
    coord: float
    outward: float  # +1 or -1 along `axis`
    material: str
    bounds: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None

    def side(self, p: Sequence[float]) -> float:
        """Signed distance to the plane, positive on the reflecting side."""
        return self.outward * (p[self.axis] - self.coord)

    def mirror(self, p: Sequence[float]) -> Point:
        q = list(p)
        q[self.axis] = 2.0 * self.coord - q[self.axis]
        return (q[0], q[1], q[2])

    def contains(self, p: Sequence[float]) -> bool:
        if self.bounds is None:
            return True
        others = [a for a in range(3) if a != self.axis]
        for a, (lo, hi) in zip(others, self.bounds):
            if not (lo - EPS_FACE <= p[a] <= hi + EPS_FACE):
                return False
        return True


def scene_faces(scene: SceneSpec) -> List[Face]:
    """Ground first, then the six faces of every box in declaration order."""
    faces = [Face("ground", axis=2, coord=0.0, outward=1.0, material=scene.ground)]
    for i, box in enumerate(scene.boxes):
        name = scene.box_name(i)
        for axis in range(3):
            others = [a for a in range(3) if a != axis]
            bounds = tuple((box.min_corner[a], box.max_corner[a]) for a in others)
            label = "xyz"[axis]
            faces.append(Face(f"{name}:{label}-", axis, box.min_corner[axis], -1.0, box.material, bounds))
            faces.append(Face(f"{name}:{label}+", axis, box.max_corner[axis], 1.0, box.material, bounds))
    return faces


class BoxIndex:
    """Array form of the scene boxes for segment tests."""

    def __init__(self, scene: SceneSpec):
        if scene.boxes:
            self.lo = np.array([b.min_corner for b in scene.boxes], dtype=float)
            self.hi = np.array([b.max_corner for b in scene.boxes], dtype=float)
        else:
            self.lo = np.empty((0, 3))
            self.hi = np.empty((0, 3))

    def __len__(self) -> int:
        return self.lo.shape[0]

    def contains(self, p: Sequence[float]) -> bool:
        """True when p is strictly inside some box."""
        if not len(self):
            return False
        p = np.asarray(p, dtype=float)
        return bool(np.any(np.all((self.lo < p) & (p < self.hi), axis=1)))

    def blocks(self, a: Sequence[float], b: Sequence[float]) -> bool:
        """True when the open segment a-b passes through the interior of some box."""
        if not len(self):
            return False
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        t_lo = np.full(len(self), EPS_T)
        t_hi = np.full(len(self), 1.0 - EPS_T)
        for axis in range(3):
            lo = self.lo[:, axis]
            hi = self.hi[:, axis]
            if abs(d[axis]) < 1e-15:
                outside = ~((lo < a[axis]) & (a[axis] < hi))
                t_hi = np.where(outside, -np.inf, t_hi)
                continue
            t1 = (lo - a[axis]) / d[axis]
            t2 = (hi - a[axis]) / d[axis]
            t_lo = np.maximum(t_lo, np.minimum(t1, t2))
            t_hi = np.minimum(t_hi, np.maximum(t1, t2))
        return bool(np.any(t_hi > t_lo))


def direction_angles(origin: Sequence[float], towards: Sequence[float]) -> Tuple[float, float]:
    """(azimuth, elevation) in degrees of the direction origin -> towards."""
    dx = towards[0] - origin[0]
    dy = towards[1] - origin[1]
    dz = towards[2] - origin[2]
    az = math.degrees(math.atan2(dy, dx))
    el = math.degrees(math.atan2(dz, math.hypot(dx, dy)))
    return wrap_azimuth(az), el


def _distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


# ---------------------------------------------------------------------------
# Path construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImageSequence:
    faces: Tuple[Face, ...]
    images: Tuple[Point, ...]  # images[j] = tx mirrored across faces[0..j]


class Tracer:
    """Scene prepared for tracing: faces, box arrays and the transmitter image table."""

    def __init__(self, scene: SceneSpec):
        self.scene = scene
        self.tx: Point = tuple(scene.tx.position)
        self.faces = scene_faces(scene)
        self.boxes = BoxIndex(scene)
        self.losses: Dict[str, float] = {
            name: m.reflection_loss_db for name, m in scene.materials.items()
        }
        self.sequences: Dict[int, List[ImageSequence]] = {
            order: self._image_sequences(order) for order in range(1, scene.max_reflection_order + 1)
        }

    def _image_sequences(self, order: int) -> List[ImageSequence]:
        """
        All face sequences of the given order with no face repeated back to back.
        Sequences whose source (or previous image) sits behind the next face
        cannot produce a path and are skipped.
        """
        result = []
        for combo in product(self.faces, repeat=order):
            if any(f1 is f2 for f1, f2 in zip(combo, combo[1:])):
                continue
            source = self.tx
            images = []
            viable = True
            for face in combo:
                if face.side(source) <= EPS_SIDE:
                    viable = False
                    break
                source = face.mirror(source)
                images.append(source)
            if viable:
                result.append(ImageSequence(tuple(combo), tuple(images)))
        return result

    def _make_path(self, points: List[Point], faces: Sequence[Face]) -> Optional[TracedPath]:
        length = sum(_distance(a, b) for a, b in zip(points, points[1:]))
        loss = sum(self.losses[f.material] for f in faces)
        power = self.scene.tx.tx_power_dbm - fspl_db(length, self.scene.carrier_frequency_hz) - loss
        if power < self.scene.power_floor_dbm:
            return None
        dod_az, dod_el = direction_angles(points[0], points[1])
        doa_az, doa_el = direction_angles(points[-1], points[-2])
        return TracedPath(
            path=PathTuple(
                power_dbm=power,
                delay_s=length / C,
                dod_az=dod_az,
                dod_el=dod_el,
                doa_az=doa_az,
                doa_el=doa_el,
            ),
            interactions=tuple(f.face_id for f in faces),
            length_m=length,
        )

    def line_of_sight(self, rx: Point) -> Optional[TracedPath]:
        if _distance(self.tx, rx) == 0.0:
            raise SceneError("transmitter and receiver coincide")
        if self.tx[2] < 0 or rx[2] < 0:
            return None
        if self.boxes.blocks(self.tx, rx):
            return None
        return self._make_path([self.tx, rx], ())

    def reflection(self, seq: ImageSequence, rx: Point) -> Optional[TracedPath]:
        """Back-trace one image sequence from the receiver; None when invalid."""
        target = rx
        hits: List[Point] = []
        for face, image in zip(reversed(seq.faces), reversed(seq.images)):
            s_target = face.side(target)
            s_image = face.side(image)
            if s_target <= EPS_SIDE or s_image >= -EPS_SIDE:
                return None
            t = s_target / (s_target - s_image)
            p = [target[k] + t * (image[k] - target[k]) for k in range(3)]
            p[face.axis] = face.coord
            p = (p[0], p[1], p[2])
            if not face.contains(p) or p[2] < -EPS_FACE:
                return None
            hits.append(p)
            target = p
        hits.reverse()
        points = [self.tx, *hits, rx]

        # Each reflection point must see both neighbours from the reflecting side.
        for k, face in enumerate(seq.faces, start=1):
            if face.side(points[k - 1]) <= EPS_SIDE or face.side(points[k + 1]) <= EPS_SIDE:
                return None
        for a, b in zip(points, points[1:]):
            if self.boxes.blocks(a, b):
                return None
        return self._make_path(points, seq.faces)

    def specular_reflections(self, rx: Point, order: int) -> List[TracedPath]:
        """Every valid reflection path with exactly `order` bounces."""
        if order not in (1, 2):
            raise ValueError("reflection order must be 1 or 2")
        sequences = self.sequences.get(order)
        if sequences is None:
            sequences = self._image_sequences(order)
        paths = []
        for seq in sequences:
            if seq.faces[-1].side(rx) <= EPS_SIDE:
                continue
            traced = self.reflection(seq, rx)
            if traced is not None:
                paths.append(traced)
        return paths

    def trace_receiver(self, rx: Point) -> List[TracedPath]:
        paths: List[TracedPath] = []
        if self.scene.los_enabled:
            los = self.line_of_sight(rx)
            if los is not None:
                paths.append(los)
        for order in range(1, self.scene.max_reflection_order + 1):
            paths.extend(self.specular_reflections(rx, order))
        paths.sort(key=lambda p: (-p.path.power_dbm, p.interactions))
        return paths


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def line_of_sight(scene: SceneSpec, tx: Point, rx: Point) -> Optional[TracedPath]:
    """Direct path tx -> rx, or None when occluded or below ground."""
    return Tracer(_with_tx(scene, tx)).line_of_sight(tuple(rx))


def specular_reflections(scene: SceneSpec, tx: Point, rx: Point, order: int) -> List[TracedPath]:
    """Reflection paths with exactly `order` (1 or 2) bounces."""
    if order not in (1, 2):
        raise ValueError("reflection order must be 1 or 2")
    tracer = Tracer(_with_tx(scene, tx).model_copy(update={"max_reflection_order": order}))
    return tracer.specular_reflections(tuple(rx), order)


def _with_tx(scene: SceneSpec, tx: Point) -> SceneSpec:
    if tuple(tx) == tuple(scene.tx.position):
        return scene
    return scene.model_copy(update={"tx": scene.tx.model_copy(update={"position": tuple(tx)})})


def _trace_chunk(scene: SceneSpec, points: List[Tuple[str, Point]]) -> List[Tuple[str, bool, List[TracedPath]]]:
    tracer = Tracer(scene)
    out = []
    for rx_id, position in points:
        if tracer.boxes.contains(position):
            out.append((rx_id, True, []))
        else:
            out.append((rx_id, False, tracer.trace_receiver(position)))
    return out


def trace(scene: SceneSpec, layout: ReceiverLayout, label: str = "", workers: Optional[int] = None) -> TraceResult:
    """
    Trace every receiver of the layout. Receivers inside a box get an
    empty path set and are flagged.
    """
    workers = workers or get_settings().workers
    receivers = layout.receivers()
    points = [(r.rx_id, tuple(r.position)) for r in receivers]

    if workers > 1 and len(points) > workers:
        size = math.ceil(len(points) / workers)
        chunks = [points[k:k + size] for k in range(0, len(points), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traced = [item for chunk in pool.map(_trace_chunk, [scene] * len(chunks), chunks) for item in chunk]
    else:
        traced = _trace_chunk(scene, points)

    records: Dict[str, ReceiverRecord] = {}
    provenance: Dict[str, List[TracedPath]] = {}
    inside: List[str] = []
    for r, (rx_id, is_inside, paths) in zip(receivers, traced):
        if is_inside:
            inside.append(rx_id)
        records[rx_id] = ReceiverRecord(
            position=r.position,
            path_set=PathSet(rx_id=rx_id, paths=[p.path for p in paths]),
            t_s=r.t_s,
            inside_obstacle=is_inside,
        )
        provenance[rx_id] = paths

    if inside:
        logger.info(f"{len(inside)} receiver(s) inside obstacles emitted with no paths")
    logger.info(f"Traced {len(records)} receivers")

    dataset = Dataset(
        label=label,
        receivers=records,
        metadata=DatasetMetadata(
            frequency_hz=scene.carrier_frequency_hz,
            tx_position=tuple(scene.tx.position),
            notes=f"synthetic trace, max reflection order {scene.max_reflection_order}",
        ),
        layout=layout,
    )
    return TraceResult(dataset=dataset, provenance=provenance, inside_obstacle=inside)
