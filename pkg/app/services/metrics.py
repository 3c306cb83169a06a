# app/services/metrics.py
"""
Ray-set distances.

Each path is a point (P, tau, DoD, DoA). Power and delay are standardized,
directions are compared through the cosine distance of their unit vectors,
and the four per-feature distances are combined into the weighted composite
d_R. Two path sets are then compared with symmetrized Hausdorff (HRT) and
Chamfer (CRT) set distances built on nearest-neighbor assignments, while the
per-feature components of the assigned pairs are tracked alongside.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from app.core.config import get_settings
from app.core.exceptions import EmptyPathSetError
from app.schemas.metric import (
    ComparisonResult,
    ComparisonStatus,
    FeatureDistances,
    HrtComponentMode,
    MetricConfig,
    StandardizationScope,
    StandardizationStats,
    StandardizedTuple,
)
from app.schemas.path import PathSet

logger = logging.getLogger(__name__)

SIGMA_GUARD = 1e-12

ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# Directions
# ---------------------------------------------------------------------------

def direction_unit_vector(az: ArrayLike, el: ArrayLike) -> np.ndarray:
    """
    Unit vector [cos(el)cos(az), cos(el)sin(az), sin(el)] for angles in degrees.
    Azimuth counts counterclockwise from +x, elevation from the horizontal plane.
    Broadcasts over array inputs; the last axis holds x, y, z.
    """
    az_r = np.radians(np.asarray(az, dtype=float))
    el_r = np.radians(np.asarray(el, dtype=float))
    cos_el = np.cos(el_r)
    return np.stack((cos_el * np.cos(az_r), cos_el * np.sin(az_r), np.sin(el_r)), axis=-1)


def _cosine_distance(ux, uy, uz, vx, vy, vz):
    # 1 - u.v written as |u - v|^2 / 2: identical for unit vectors, and exactly
    # zero for identical directions.
    dx = ux - vx
    dy = uy - vy
    dz = uz - vz
    return np.minimum(0.5 * (dx * dx + dy * dy + dz * dz), 2.0)


def angular_distance(az1: float, el1: float, az2: float, el2: float) -> float:
    """Cosine distance between two directions, in [0, 2]."""
    u = direction_unit_vector(az1, el1)
    v = direction_unit_vector(az2, el2)
    return float(_cosine_distance(u[0], u[1], u[2], v[0], v[1], v[2]))


def cosine_to_degrees(c: float) -> float:
    """Great-circle angle arccos(1 - c) in degrees."""
    return math.degrees(math.acos(min(1.0, max(-1.0, 1.0 - c))))


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------

def path_matrix(path_set: PathSet) -> np.ndarray:
    """(N, 6) array of power_dbm, delay_s, dod_az, dod_el, doa_az, doa_el."""
    if not path_set.paths:
        return np.empty((0, 6), dtype=float)
    return np.array([p.as_row() for p in path_set.paths], dtype=float)


def _stats_of(rows: np.ndarray) -> StandardizationStats:
    return StandardizationStats(
        mu_p=float(np.mean(rows[:, 0])),
        sigma_p=float(np.std(rows[:, 0])),
        mu_tau=float(np.mean(rows[:, 1])),
        sigma_tau=float(np.std(rows[:, 1])),
    )


def compute_standardization(
    x: PathSet,
    y: PathSet,
    scope: StandardizationScope = StandardizationScope.POOLED,
) -> Tuple[StandardizationStats, StandardizationStats]:
    """
    Population statistics used to standardize X and Y, returned as (stats_x, stats_y).
    Pooled scope uses X and Y together, so both entries are the same object.
    """
    return _stats_for_rows(path_matrix(x), path_matrix(y), scope, (x.rx_id, y.rx_id))


def _stats_for_rows(
    rows_x: np.ndarray,
    rows_y: np.ndarray,
    scope: StandardizationScope,
    rx_ids: Tuple[str, str],
) -> Tuple[StandardizationStats, StandardizationStats]:
    scope = StandardizationScope(scope)
    if scope == StandardizationScope.POOLED:
        rows = np.vstack((rows_x, rows_y))
        if rows.shape[0] == 0:
            raise EmptyPathSetError("pooled standardization needs at least one path")
        stats = _stats_of(rows)
        return stats, stats

    if rows_x.shape[0] == 0 or rows_y.shape[0] == 0:
        empty = rx_ids[0] if rows_x.shape[0] == 0 else rx_ids[1]
        raise EmptyPathSetError(f"per-set standardization needs a non-empty set ('{empty}')")
    return _stats_of(rows_x), _stats_of(rows_y)


def _guarded(sigma: float) -> float:
    return sigma if sigma >= SIGMA_GUARD else 1.0


@dataclass(frozen=True)
class StandardizedSet:
    """Array form of a standardized path set."""
    p_bar: np.ndarray
    tau_bar: np.ndarray
    angles_deg: np.ndarray  # (N, 4): dod_az, dod_el, doa_az, doa_el
    dod: np.ndarray  # (N, 3) unit vectors
    doa: np.ndarray

    def __len__(self) -> int:
        return int(self.p_bar.shape[0])

    def tuples(self) -> List[StandardizedTuple]:
        return [
            StandardizedTuple(
                p_bar=float(self.p_bar[i]),
                tau_bar=float(self.tau_bar[i]),
                dod_az=float(self.angles_deg[i, 0]),
                dod_el=float(self.angles_deg[i, 1]),
                doa_az=float(self.angles_deg[i, 2]),
                doa_el=float(self.angles_deg[i, 3]),
            )
            for i in range(len(self))
        ]

    @classmethod
    def from_tuples(cls, tuples: List[StandardizedTuple]) -> "StandardizedSet":
        rows = np.array(
            [(t.p_bar, t.tau_bar, t.dod_az, t.dod_el, t.doa_az, t.doa_el) for t in tuples],
            dtype=float,
        ).reshape(-1, 6)
        return cls._build(rows[:, 0], rows[:, 1], rows[:, 2:6])

    @classmethod
    def _build(cls, p_bar: np.ndarray, tau_bar: np.ndarray, angles: np.ndarray) -> "StandardizedSet":
        return cls(
            p_bar=p_bar,
            tau_bar=tau_bar,
            angles_deg=angles,
            dod=direction_unit_vector(angles[:, 0], angles[:, 1]).reshape(-1, 3),
            doa=direction_unit_vector(angles[:, 2], angles[:, 3]).reshape(-1, 3),
        )


def standardize(path_set: PathSet, stats: StandardizationStats) -> StandardizedSet:
    """Remove the mean from power and delay and divide by the guarded standard deviation."""
    return _standardize_rows(path_matrix(path_set), stats)


def _standardize_rows(rows: np.ndarray, stats: StandardizationStats) -> StandardizedSet:
    p_bar = (rows[:, 0] - stats.mu_p) / _guarded(stats.sigma_p)
    tau_bar = (rows[:, 1] - stats.mu_tau) / _guarded(stats.sigma_tau)
    return StandardizedSet._build(p_bar, tau_bar, rows[:, 2:6])


# ---------------------------------------------------------------------------
# Pairwise distances
# ---------------------------------------------------------------------------

def feature_distances(v: StandardizedTuple, w: StandardizedTuple) -> FeatureDistances:
    return FeatureDistances(
        d_tau=abs(v.tau_bar - w.tau_bar),
        d_p=abs(v.p_bar - w.p_bar),
        d_dod=angular_distance(v.dod_az, v.dod_el, w.dod_az, w.dod_el),
        d_doa=angular_distance(v.doa_az, v.doa_el, w.doa_az, w.doa_el),
    )


def composite_distance(fd: FeatureDistances, cfg: MetricConfig) -> float:
    """Weighted sum of the four feature distances (d_R)."""
    w_tau, w_p, w_dod, w_doa = cfg.weights
    return w_tau * fd.d_tau + w_p * fd.d_p + w_dod * fd.d_dod + w_doa * fd.d_doa


def _block_components(source: StandardizedSet, rows: slice, target: StandardizedSet) -> np.ndarray:
    """(rows, M, 4) feature distances between a block of source rows and every target."""
    s_dod = source.dod[rows]
    s_doa = source.doa[rows]
    d_tau = np.abs(source.tau_bar[rows, None] - target.tau_bar[None, :])
    d_p = np.abs(source.p_bar[rows, None] - target.p_bar[None, :])
    d_dod = _cosine_distance(
        s_dod[:, None, 0], s_dod[:, None, 1], s_dod[:, None, 2],
        target.dod[None, :, 0], target.dod[None, :, 1], target.dod[None, :, 2],
    )
    d_doa = _cosine_distance(
        s_doa[:, None, 0], s_doa[:, None, 1], s_doa[:, None, 2],
        target.doa[None, :, 0], target.doa[None, :, 1], target.doa[None, :, 2],
    )
    return np.stack((d_tau, d_p, d_dod, d_doa), axis=-1)


def _weighted(components: np.ndarray, weights) -> np.ndarray:
    w_tau, w_p, w_dod, w_doa = weights
    return (w_tau * components[..., 0] + w_p * components[..., 1]
            + w_dod * components[..., 2] + w_doa * components[..., 3])


# ---------------------------------------------------------------------------
# Nearest-neighbor assignment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NNPair:
    source: int
    target: int
    distances: FeatureDistances
    d_r: float


@dataclass(frozen=True)
class NNAssignment:
    """
    Nearest neighbor of every source element in the target set.
    `d_assign` is the distance the argmin ran on: d_r in joint mode, the
    selected raw component in single-feature modes.
    """
    direction: str
    target_index: np.ndarray
    components: np.ndarray  # (N, 4)
    d_r: np.ndarray
    d_assign: np.ndarray

    def __len__(self) -> int:
        return int(self.target_index.shape[0])

    def pairs(self) -> Iterator[NNPair]:
        for i in range(len(self)):
            yield NNPair(
                source=i,
                target=int(self.target_index[i]),
                distances=FeatureDistances.from_sequence(self.components[i]),
                d_r=float(self.d_r[i]),
            )


def _empty_assignment(direction: str) -> NNAssignment:
    return NNAssignment(
        direction=direction,
        target_index=np.empty(0, dtype=np.intp),
        components=np.empty((0, 4)),
        d_r=np.empty(0),
        d_assign=np.empty(0),
    )


def nearest_neighbor_assign(
    source: StandardizedSet,
    target: StandardizedSet,
    cfg: MetricConfig,
    direction: str = "X->Y",
    block_rows: Optional[int] = None,
) -> NNAssignment:
    """
    Vectorized nearest-neighbor scan, processed in blocks of source rows.
    Ties go to the lowest target index.
    """
    if len(target) == 0:
        raise EmptyPathSetError("nearest-neighbor target set is empty")
    n = len(source)
    if n == 0:
        return _empty_assignment(direction)

    block_rows = block_rows or get_settings().nn_block_rows
    feature = cfg.single_feature_index()
    idx = np.empty(n, dtype=np.intp)
    comps = np.empty((n, 4))
    d_r = np.empty(n)
    d_assign = np.empty(n)

    for start in range(0, n, block_rows):
        rows = slice(start, min(start + block_rows, n))
        block = _block_components(source, rows, target)
        block_d_r = _weighted(block, cfg.weights)
        key = block_d_r if feature is None else block[..., feature]
        part = _assign_rows(block, block_d_r, key, direction)
        idx[rows] = part.target_index
        comps[rows] = part.components
        d_r[rows] = part.d_r
        d_assign[rows] = part.d_assign

    return NNAssignment(direction=direction, target_index=idx, components=comps, d_r=d_r, d_assign=d_assign)


def _assign_rows(block: np.ndarray, d_r: np.ndarray, key: np.ndarray, direction: str) -> NNAssignment:
    """Row-wise argmin of `key`; first index on ties."""
    best = np.argmin(key, axis=1)
    take = np.arange(best.shape[0])
    return NNAssignment(
        direction=direction,
        target_index=best,
        components=block[take, best],
        d_r=d_r[take, best],
        d_assign=key[take, best],
    )


def assign_both_directions(
    sx: StandardizedSet,
    sy: StandardizedSet,
    cfg: MetricConfig,
    block_rows: Optional[int] = None,
) -> Tuple[NNAssignment, NNAssignment]:
    """
    X->Y and Y->X assignments. When X fits in one block the (N, M) feature
    matrix is built once and scanned along both axes; the distances are
    symmetric, so this matches two separate scans exactly.
    """
    block_rows = block_rows or get_settings().nn_block_rows
    if len(sx) == 0 or len(sy) == 0 or len(sx) > block_rows:
        return (
            nearest_neighbor_assign(sx, sy, cfg, direction="X->Y", block_rows=block_rows),
            nearest_neighbor_assign(sy, sx, cfg, direction="Y->X", block_rows=block_rows),
        )
    block = _block_components(sx, slice(None), sy)
    d_r = _weighted(block, cfg.weights)
    feature = cfg.single_feature_index()
    key = d_r if feature is None else block[..., feature]
    return (
        _assign_rows(block, d_r, key, "X->Y"),
        _assign_rows(block.transpose(1, 0, 2), d_r.T, key.T, "Y->X"),
    )


def nearest_neighbor_assign_exhaustive(
    source: StandardizedSet,
    target: StandardizedSet,
    cfg: MetricConfig,
    direction: str = "X->Y",
) -> NNAssignment:
    """Reference O(N*M) scan, one pair at a time. Used to check the vectorized scan."""
    if len(target) == 0:
        raise EmptyPathSetError("nearest-neighbor target set is empty")
    n = len(source)
    if n == 0:
        return _empty_assignment(direction)

    w_tau, w_p, w_dod, w_doa = cfg.weights
    feature = cfg.single_feature_index()
    idx = np.empty(n, dtype=np.intp)
    comps = np.empty((n, 4))
    d_r = np.empty(n)
    d_assign = np.empty(n)

    for i in range(n):
        best_j = -1
        best_key = math.inf
        best = None
        for j in range(len(target)):
            c = (
                abs(source.tau_bar[i] - target.tau_bar[j]),
                abs(source.p_bar[i] - target.p_bar[j]),
                _cosine_distance(*source.dod[i], *target.dod[j]),
                _cosine_distance(*source.doa[i], *target.doa[j]),
            )
            dist = w_tau * c[0] + w_p * c[1] + w_dod * c[2] + w_doa * c[3]
            key = dist if feature is None else c[feature]
            if key < best_key:
                best_j, best_key, best = j, key, (c, dist)
        idx[i] = best_j
        comps[i] = best[0]
        d_r[i] = best[1]
        d_assign[i] = best_key

    return NNAssignment(direction=direction, target_index=idx, components=comps, d_r=d_r, d_assign=d_assign)


# ---------------------------------------------------------------------------
# Set distances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SetDistance:
    """One set distance (HRT or CRT) with its per-feature components."""
    status: ComparisonStatus
    value: Optional[float] = None
    components: Optional[FeatureDistances] = None


@dataclass(frozen=True)
class _Prepared:
    status: ComparisonStatus
    n_x: int
    n_y: int
    xy: Optional[NNAssignment] = None
    yx: Optional[NNAssignment] = None


def apply_power_threshold(path_set: PathSet, threshold_dbm: Optional[float]) -> PathSet:
    """Drop paths weaker than the threshold (kept when power >= threshold)."""
    if threshold_dbm is None:
        return path_set
    kept = [p for p in path_set.paths if p.power_dbm >= threshold_dbm]
    if len(kept) == len(path_set.paths):
        return path_set
    return path_set.model_copy(update={"paths": kept})


def _prepare(x: PathSet, y: PathSet, cfg: MetricConfig) -> _Prepared:
    x = apply_power_threshold(x, cfg.power_threshold_dbm)
    y = apply_power_threshold(y, cfg.power_threshold_dbm)
    n_x, n_y = x.n_paths, y.n_paths
    if n_x == 0 and n_y == 0:
        return _Prepared(ComparisonStatus.BOTH_EMPTY, 0, 0)
    if n_x == 0 or n_y == 0:
        return _Prepared(ComparisonStatus.COVERAGE_MISMATCH, n_x, n_y)

    rows_x, rows_y = path_matrix(x), path_matrix(y)
    stats_x, stats_y = _stats_for_rows(rows_x, rows_y, cfg.standardization_scope, (x.rx_id, y.rx_id))
    xy, yx = assign_both_directions(_standardize_rows(rows_x, stats_x), _standardize_rows(rows_y, stats_y), cfg)
    return _Prepared(ComparisonStatus.OK, n_x, n_y, xy=xy, yx=yx)


def _not_ok(prep: _Prepared) -> SetDistance:
    if prep.status == ComparisonStatus.BOTH_EMPTY:
        return SetDistance(prep.status, 0.0, FeatureDistances())
    return SetDistance(prep.status)


def _hausdorff(xy: NNAssignment, yx: NNAssignment, mode: HrtComponentMode) -> SetDistance:
    value = 0.5 * float(np.max(xy.d_assign)) + 0.5 * float(np.max(yx.d_assign))
    if mode == HrtComponentMode.JOINT_ARGMAX:
        c_xy = xy.components[int(np.argmax(xy.d_assign))]
        c_yx = yx.components[int(np.argmax(yx.d_assign))]
    else:
        c_xy = np.max(xy.components, axis=0)
        c_yx = np.max(yx.components, axis=0)
    return SetDistance(ComparisonStatus.OK, value, FeatureDistances.from_sequence(0.5 * c_xy + 0.5 * c_yx))


def _chamfer(xy: NNAssignment, yx: NNAssignment) -> SetDistance:
    n, m = len(xy), len(yx)
    value = 0.5 * (float(np.sum(xy.d_assign)) / n) + 0.5 * (float(np.sum(yx.d_assign)) / m)
    comps = 0.5 * (np.sum(xy.components, axis=0) / n) + 0.5 * (np.sum(yx.components, axis=0) / m)
    return SetDistance(ComparisonStatus.OK, value, FeatureDistances.from_sequence(comps))


def hausdorff_rt(x: PathSet, y: PathSet, cfg: Optional[MetricConfig] = None) -> SetDistance:
    """HRT = max of X->Y NN distances / 2 + max of Y->X NN distances / 2."""
    cfg = cfg or MetricConfig()
    prep = _prepare(x, y, cfg)
    if prep.status != ComparisonStatus.OK:
        return _not_ok(prep)
    return _hausdorff(prep.xy, prep.yx, cfg.hrt_component_mode)


def chamfer_rt(x: PathSet, y: PathSet, cfg: Optional[MetricConfig] = None) -> SetDistance:
    """CRT = mean of X->Y NN distances / 2 + mean of Y->X NN distances / 2."""
    cfg = cfg or MetricConfig()
    prep = _prepare(x, y, cfg)
    if prep.status != ComparisonStatus.OK:
        return _not_ok(prep)
    return _chamfer(prep.xy, prep.yx)


def _angles(components: Optional[FeatureDistances]) -> Optional[Tuple[float, float]]:
    if components is None:
        return None
    return (cosine_to_degrees(components.d_dod), cosine_to_degrees(components.d_doa))


def compare_path_sets(x: PathSet, y: PathSet, cfg: Optional[MetricConfig] = None) -> ComparisonResult:
    """Full per-receiver comparison. Degenerate inputs are encoded in `status`."""
    cfg = cfg or MetricConfig()
    prep = _prepare(x, y, cfg)
    if prep.status == ComparisonStatus.OK:
        hrt = _hausdorff(prep.xy, prep.yx, cfg.hrt_component_mode)
        crt = _chamfer(prep.xy, prep.yx)
    else:
        hrt = crt = _not_ok(prep)
        if prep.status == ComparisonStatus.COVERAGE_MISMATCH:
            logger.debug(f"Coverage mismatch at '{x.rx_id}' ({prep.n_x} vs {prep.n_y} paths)")

    return ComparisonResult(
        rx_id=x.rx_id,
        status=prep.status,
        hrt=hrt.value,
        crt=crt.value,
        hrt_components=hrt.components,
        crt_components=crt.components,
        hrt_angles_deg=_angles(hrt.components),
        crt_angles_deg=_angles(crt.components),
        n_paths=(prep.n_x, prep.n_y),
    )
