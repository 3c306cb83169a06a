# app/services/analysis.py
"""
Spatial and temporal aggregation of per-receiver comparisons: grid maps,
trajectory series, region summaries, neighbor consistency and power
threshold sweeps.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from scipy.spatial import cKDTree

from app.core.config import get_settings
from app.core.exceptions import ConfigError, LayoutError
from app.schemas.analysis import (
    ConsistencyReport,
    GridCell,
    GridMap,
    NeighborReport,
    ResultRecord,
    ResultSummary,
    ThresholdSummary,
    TrajectoryPoint,
    TrajectorySeries,
)
from app.schemas.dataset import Dataset, PairedReceiver
from app.schemas.layout import GridLayout, TrajectoryLayout
from app.schemas.metric import CHANNELS, ComparisonResult, MetricConfig
from app.schemas.path import PathSet
from app.services.ingest import PathLike, pair_datasets, write_table
from app.services.metrics import compare_path_sets
from app.services.summary import summarize_records
from app.utils.numfmt import fmt

logger = logging.getLogger(__name__)

NO_DATA = "no-data"
GRID_COLUMNS = ["ix", "iy", "x_m", "y_m", "status", *CHANNELS]
TRAJECTORY_COLUMNS = ["t_s", "rx_id", "x_m", "y_m", "z_m", "status", *CHANNELS]
CONSISTENCY_COLUMNS = ["rx_id", "x_m", "y_m", "n_neighbors", "n_compared", "mean_crt", "max_crt", "isolated"]


def compare_many(
    pairs: Sequence[Tuple[PathSet, PathSet]],
    cfg: MetricConfig,
    workers: Optional[int] = None,
) -> List[ComparisonResult]:
    """Compare path-set pairs; output order follows input order for any worker count."""
    workers = workers or get_settings().workers
    pairs = list(pairs)
    if workers <= 1 or len(pairs) <= workers:
        return _compare_chunk(pairs, cfg)
    size = math.ceil(len(pairs) / workers)
    chunks = [pairs[k:k + size] for k in range(0, len(pairs), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [r for chunk in pool.map(_compare_chunk, chunks, [cfg] * len(chunks)) for r in chunk]


def _compare_chunk(pairs: Sequence[Tuple[PathSet, PathSet]], cfg: MetricConfig) -> List[ComparisonResult]:
    return [compare_path_sets(x, y, cfg) for x, y in pairs]


def _compare_paired(paired: Sequence[PairedReceiver], cfg: MetricConfig,
                    workers: Optional[int]) -> List[ComparisonResult]:
    return compare_many([(p.a, p.b) for p in paired], cfg, workers)


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

def compare_grid(a: Dataset, b: Dataset, cfg: Optional[MetricConfig] = None,
                 workers: Optional[int] = None) -> GridMap:
    """Per-cell comparison over a grid shared by both datasets."""
    cfg = cfg or MetricConfig()
    if not isinstance(a.layout, GridLayout) or not isinstance(b.layout, GridLayout):
        raise LayoutError("grid comparison needs both datasets on a grid layout")
    if a.layout != b.layout:
        raise LayoutError("datasets use different grid layouts")

    pairing = pair_datasets(a, b)
    results = dict(zip((p.rx_id for p in pairing.pairs), _compare_paired(pairing.pairs, cfg, workers)))

    cells = [
        GridCell(ix=pt.ix, iy=pt.iy, rx_id=pt.rx_id, position=pt.position, result=results.get(pt.rx_id))
        for pt in a.layout.receivers()
    ]
    logger.info(f"Grid {a.layout.nx}x{a.layout.ny}: {sum(c.has_data for c in cells)} ok cells")
    return GridMap(layout=a.layout, cells=cells)


def grid_records(grid: GridMap) -> List[ResultRecord]:
    return [ResultRecord.from_result(c.result, c.position) for c in grid.cells if c.result is not None]


def export_grid_csv(grid: GridMap, path: PathLike) -> Path:
    """One row per cell; channels left empty unless the cell compared ok."""
    rows = []
    for cell in grid.cells:
        status = cell.result.status.value if cell.result is not None else NO_DATA
        channels = cell.result.channels() if cell.has_data else {}
        rows.append([
            str(cell.ix), str(cell.iy), fmt(cell.position[0]), fmt(cell.position[1]), status,
            *(fmt(channels.get(ch)) for ch in CHANNELS),
        ])
    write_table(rows, GRID_COLUMNS, path)
    return Path(path)


# ---------------------------------------------------------------------------
# Trajectory
# ---------------------------------------------------------------------------

def compare_trajectory(a: Dataset, b: Dataset, cfg: Optional[MetricConfig] = None,
                       workers: Optional[int] = None) -> TrajectorySeries:
    """Time-ordered comparison along a trajectory; steps missing on one side are excluded."""
    cfg = cfg or MetricConfig()
    if not isinstance(a.layout, TrajectoryLayout):
        raise LayoutError("trajectory comparison needs timestamps (trajectory layout)")

    pairing = pair_datasets(a, b)
    results = dict(zip((p.rx_id for p in pairing.pairs), _compare_paired(pairing.pairs, cfg, workers)))

    points = []
    excluded = []
    for pt in a.layout.receivers():
        result = results.get(pt.rx_id)
        if result is None:
            excluded.append(pt.rx_id)
            continue
        points.append(TrajectoryPoint(t_s=pt.t_s, rx_id=pt.rx_id, position=pt.position, result=result))
    excluded.extend(pairing.only_in_b)
    if excluded:
        logger.warning(f"{len(excluded)} trajectory step(s) present in only one dataset were excluded")
    return TrajectorySeries(layout=a.layout, points=points, excluded=excluded)


def trajectory_records(series: TrajectorySeries) -> List[ResultRecord]:
    return [ResultRecord.from_result(p.result, p.position, p.t_s) for p in series.points]


def export_trajectory_csv(series: TrajectorySeries, path: PathLike) -> Path:
    rows = []
    for p in series.points:
        channels = p.result.channels() if p.result.is_ok else {}
        rows.append([
            fmt(p.t_s), p.rx_id, *(fmt(v) for v in p.position), p.result.status.value,
            *(fmt(channels.get(ch)) for ch in CHANNELS),
        ])
    write_table(rows, TRAJECTORY_COLUMNS, path)
    return Path(path)


# ---------------------------------------------------------------------------
# Region summary
# ---------------------------------------------------------------------------

def summarize_region(
    source: Union[GridMap, Iterable[ResultRecord]],
    center: Tuple[float, float],
    radius: float,
) -> ResultSummary:
    """
    Channel means/maxima over ok receivers whose horizontal distance to
    `center` is at most `radius`. `empty` is set when none qualifies.
    """
    if not radius > 0:
        raise ConfigError("region radius must be positive")
    records = grid_records(source) if isinstance(source, GridMap) else list(source)
    cx, cy = center
    inside = [r for r in records if math.hypot(r.position[0] - cx, r.position[1] - cy) <= radius]
    summary = summarize_records(inside, center=(cx, cy), radius_m=radius)
    if summary.empty:
        logger.warning(f"No ok receivers within {radius} m of {center}")
    return summary


# ---------------------------------------------------------------------------
# Spatial consistency
# ---------------------------------------------------------------------------

def spatial_consistency(a: Dataset, radius: float, cfg: Optional[MetricConfig] = None,
                        workers: Optional[int] = None) -> ConsistencyReport:
    """
    CRT between every pair of receivers closer than `radius` (horizontal,
    strict). Each unordered pair is compared once and counted for both ends.
    """
    if not radius > 0:
        raise ConfigError("consistency radius must be positive")
    cfg = cfg or MetricConfig()
    ids = a.rx_ids()
    records = [a.receivers[rx] for rx in ids]
    if not ids:
        return ConsistencyReport(radius_m=radius, receivers=[], n_pairs=0)

    xy = [(r.position[0], r.position[1]) for r in records]
    tree = cKDTree(xy)
    pairs = sorted(
        (i, j) for i, j in tree.query_pairs(radius)
        if math.dist(xy[i], xy[j]) < radius
    )
    results = compare_many([(records[i].path_set, records[j].path_set) for i, j in pairs], cfg, workers)

    neighbors = [0] * len(ids)
    crts: List[List[float]] = [[] for _ in ids]
    for (i, j), result in zip(pairs, results):
        neighbors[i] += 1
        neighbors[j] += 1
        if result.is_ok:
            crts[i].append(result.crt)
            crts[j].append(result.crt)

    reports = []
    for k, rx_id in enumerate(ids):
        values = crts[k]
        reports.append(NeighborReport(
            rx_id=rx_id,
            position=records[k].position,
            n_neighbors=neighbors[k],
            n_compared=len(values),
            mean_crt=sum(values) / len(values) if values else None,
            max_crt=max(values) if values else None,
            isolated=neighbors[k] == 0,
        ))
    isolated = sum(r.isolated for r in reports)
    if isolated:
        logger.info(f"{isolated} receiver(s) have no neighbor within {radius} m")
    return ConsistencyReport(radius_m=radius, receivers=reports, n_pairs=len(pairs))


def export_consistency_csv(report: ConsistencyReport, path: PathLike) -> Path:
    rows = [
        [
            r.rx_id, fmt(r.position[0]), fmt(r.position[1]), str(r.n_neighbors), str(r.n_compared),
            fmt(r.mean_crt), fmt(r.max_crt), "true" if r.isolated else "false",
        ]
        for r in report.receivers
    ]
    write_table(rows, CONSISTENCY_COLUMNS, path)
    return Path(path)


# ---------------------------------------------------------------------------
# Power threshold sweep
# ---------------------------------------------------------------------------

def sweep_power_thresholds(a: Dataset, b: Dataset, thresholds: Sequence[float],
                           cfg: Optional[MetricConfig] = None,
                           workers: Optional[int] = None) -> List[ThresholdSummary]:
    """Global summary of the paired comparison for each power threshold."""
    cfg = cfg or MetricConfig()
    pairing = pair_datasets(a, b)
    out = []
    for threshold in sorted(thresholds):
        run_cfg = cfg.model_copy(update={"power_threshold_dbm": float(threshold)})
        results = _compare_paired(pairing.pairs, run_cfg, workers)
        records = [ResultRecord.from_result(r, p.position, p.t_s) for r, p in zip(results, pairing.pairs)]
        out.append(ThresholdSummary(power_threshold_dbm=float(threshold), summary=summarize_records(records)))
    return out


def export_sweep_csv(sweep: Sequence[ThresholdSummary], path: PathLike) -> Path:
    columns = ["power_threshold_dbm", "n_ok", "n_both_empty", "n_coverage_mismatch",
               *(f"mean_{ch}" for ch in CHANNELS), *(f"max_{ch}" for ch in CHANNELS)]
    rows = []
    for item in sweep:
        s = item.summary
        rows.append([
            fmt(item.power_threshold_dbm), str(s.counts["ok"]), str(s.counts["both-empty"]),
            str(s.counts["coverage-mismatch"]),
            *(fmt(s.mean[ch]) for ch in CHANNELS), *(fmt(s.max[ch]) for ch in CHANNELS),
        ])
    write_table(rows, columns, path)
    return Path(path)
