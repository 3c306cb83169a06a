# app/services/ingest.py
"""
Dataset files.

A dataset directory holds:
  rays.csv       rx_id,path_id,power_dbm,delay_ns,dod_az_deg,dod_el_deg,doa_az_deg,doa_el_deg
  positions.csv  rx_id,x_m,y_m,z_m[,t_s]
  dataset.json   label, metadata and (optionally) the receiver layout
Numbers are written in decimal notation with up to 9 significant digits.
"""
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import ValidationError

from app.core.config import get_settings
from app.core.exceptions import DuplicateReceiverError, IngestError, LayoutError, PairingError, SceneError
from app.schemas.analysis import ResultRecord, ResultSummary
from app.schemas.dataset import Dataset, DatasetMetadata, PairedReceiver, Pairing, ReceiverRecord
from app.schemas.layout import (
    ExplicitLayout,
    ExplicitReceiver,
    ReceiverLayout,
    ReceiverPoint,
    TrajectoryLayout,
    TrajectoryStep,
    receiver_layout_adapter,
)
from app.schemas.metric import CHANNELS, ComparisonResult, ComparisonStatus
from app.schemas.path import PathSet, PathTuple
from app.schemas.scene import SceneSpec
from app.services.summary import summarize_records
from app.utils.numfmt import fmt, fmt_azimuth, parse_optional

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

RAYS_COLUMNS = [
    "rx_id", "path_id", "power_dbm", "delay_ns",
    "dod_az_deg", "dod_el_deg", "doa_az_deg", "doa_el_deg",
]
POSITION_COLUMNS = ["rx_id", "x_m", "y_m", "z_m"]
TIME_COLUMN = "t_s"
RESULT_COLUMNS = ["rx_id", "x_m", "y_m", "z_m", "t_s", "status", "n_a", "n_b", *CHANNELS]

RAYS_FILE = "rays.csv"
POSITIONS_FILE = "positions.csv"
META_FILE = "dataset.json"
RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.json"


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------

def _read_table(path: PathLike) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise IngestError("file not found", path=str(path))
    except pd.errors.EmptyDataError:
        raise IngestError("malformed header: file is empty", path=str(path))
    except pd.errors.ParserError as exc:
        raise IngestError(f"cannot parse CSV: {exc}", path=str(path))


def _check_header(df: pd.DataFrame, required: Sequence[str], optional: Sequence[str],
                  path: PathLike, strict: bool) -> List[str]:
    """Validate the header; returns the columns to use."""
    columns = list(df.columns)
    if columns[:len(required)] != list(required):
        raise IngestError(
            f"malformed header: expected {','.join(required)}, got {','.join(columns)}",
            path=str(path),
        )
    used = list(required) + [c for c in optional if c in columns]
    extra = [c for c in columns if c not in used]
    if extra:
        if strict:
            raise IngestError(f"unknown column(s): {', '.join(extra)}", path=str(path))
        logger.warning(f"{path}: ignoring unknown column(s) {', '.join(extra)}")
    return used


def _numeric(df: pd.DataFrame, column: str, path: PathLike) -> pd.Series:
    """Parse one column as float, reporting the first bad cell with its file row."""
    values = pd.to_numeric(df[column].str.strip(), errors="coerce")
    bad = values.isna()
    if bad.any():
        index = int(bad.idxmax())
        raise IngestError(
            f"non-numeric value '{df.at[index, column]}'",
            path=str(path), row=index + 2, column=column,
        )
    return values.astype(float)


def write_table(rows: List[List[str]], columns: Sequence[str], path: PathLike) -> None:
    df = pd.DataFrame(rows, columns=list(columns), dtype=str)
    df.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _load_positions(path: PathLike, strict: bool) -> Tuple[Dict[str, Tuple[float, float, float]], Dict[str, float]]:
    df = _read_table(path)
    used = _check_header(df, POSITION_COLUMNS, [TIME_COLUMN], path, strict)
    xs = _numeric(df, "x_m", path)
    ys = _numeric(df, "y_m", path)
    zs = _numeric(df, "z_m", path)
    ts = _numeric(df, TIME_COLUMN, path) if TIME_COLUMN in used else None

    positions: Dict[str, Tuple[float, float, float]] = {}
    times: Dict[str, float] = {}
    for i, rx_id in enumerate(df["rx_id"].str.strip()):
        if not rx_id:
            raise IngestError("empty rx_id", path=str(path), row=i + 2, column="rx_id")
        if rx_id in positions:
            raise DuplicateReceiverError(rx_id)
        positions[rx_id] = (float(xs.iat[i]), float(ys.iat[i]), float(zs.iat[i]))
        if ts is not None:
            times[rx_id] = float(ts.iat[i])
    return positions, times


def _load_rays(path: PathLike, known: Dict[str, Tuple[float, float, float]],
               strict: bool) -> Dict[str, List[PathTuple]]:
    df = _read_table(path)
    _check_header(df, RAYS_COLUMNS, [], path, strict)
    numeric = {col: _numeric(df, col, path) for col in RAYS_COLUMNS[2:]}

    grouped: Dict[str, List[PathTuple]] = {}
    for i, rx_id in enumerate(df["rx_id"].str.strip()):
        if rx_id not in known:
            raise IngestError(f"rays file references unknown rx_id '{rx_id}'", path=str(path), row=i + 2)
        try:
            path_tuple = PathTuple(
                power_dbm=float(numeric["power_dbm"].iat[i]),
                delay_s=float(numeric["delay_ns"].iat[i]) * 1e-9,
                dod_az=float(numeric["dod_az_deg"].iat[i]),
                dod_el=float(numeric["dod_el_deg"].iat[i]),
                doa_az=float(numeric["doa_az_deg"].iat[i]),
                doa_el=float(numeric["doa_el_deg"].iat[i]),
            )
        except ValidationError as exc:
            first = exc.errors()[0]
            raise IngestError(first["msg"], path=str(path), row=i + 2, column=str(first["loc"][0]))
        grouped.setdefault(rx_id, []).append(path_tuple)
    return grouped


def load_rayset_csv(
    rays_path: PathLike,
    positions_path: PathLike,
    strict: bool = True,
    label: str = "",
    metadata: Optional[DatasetMetadata] = None,
    layout: Optional[ReceiverLayout] = None,
) -> Dataset:
    """
    Build a Dataset from a rays file and a positions file. Receivers listed in
    the positions file without rays get empty path sets.
    """
    positions, times = _load_positions(positions_path, strict)
    rays = _load_rays(rays_path, positions, strict)

    receivers = {
        rx_id: ReceiverRecord(
            position=position,
            path_set=PathSet(rx_id=rx_id, paths=rays.get(rx_id, [])),
            t_s=times.get(rx_id),
        )
        for rx_id, position in positions.items()
    }
    if layout is None:
        layout = infer_layout(positions, times)
    logger.info(f"Loaded {len(receivers)} receivers ({sum(len(v) for v in rays.values())} paths) from {rays_path}")
    return Dataset(label=label, receivers=receivers, metadata=metadata or DatasetMetadata(), layout=layout)


def infer_layout(positions: Dict[str, Tuple[float, float, float]], times: Dict[str, float]) -> ReceiverLayout:
    """Trajectory when every receiver carries a timestamp, explicit otherwise."""
    if times and len(times) == len(positions):
        ordered = sorted(times, key=lambda rx: times[rx])
        try:
            return TrajectoryLayout(steps=[
                TrajectoryStep(t=times[rx], x=positions[rx][0], y=positions[rx][1], z=positions[rx][2], rx_id=rx)
                for rx in ordered
            ])
        except ValidationError as exc:
            raise LayoutError(f"invalid trajectory timestamps: {exc.errors()[0]['msg']}")
    return ExplicitLayout(points=[
        ExplicitReceiver(rx_id=rx, x=p[0], y=p[1], z=p[2]) for rx, p in positions.items()
    ])


def load_dataset(directory: PathLike, strict: bool = True) -> Dataset:
    """Load a dataset directory (rays.csv, positions.csv, optional dataset.json)."""
    directory = Path(directory)
    label, metadata, layout = directory.name, None, None
    meta_path = directory / META_FILE
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise IngestError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", path=str(meta_path))
        try:
            label = meta.get("label", label)
            metadata = DatasetMetadata.model_validate(meta.get("metadata", {}))
            if meta.get("layout") is not None:
                layout = receiver_layout_adapter.validate_python(meta["layout"])
        except ValidationError as exc:
            raise IngestError(f"invalid metadata: {exc.errors()[0]['msg']}", path=str(meta_path))
    return load_rayset_csv(
        directory / RAYS_FILE,
        directory / POSITIONS_FILE,
        strict=strict,
        label=label,
        metadata=metadata,
        layout=layout,
    )


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------

def write_rayset_csv(dataset: Dataset, rays_path: PathLike, positions_path: PathLike) -> None:
    """Write rays and positions files. Receivers without paths appear only in positions."""
    with_time = any(r.t_s is not None for r in dataset.receivers.values())
    ray_rows: List[List[str]] = []
    position_rows: List[List[str]] = []
    for rx_id, record in dataset.receivers.items():
        row = [rx_id, *(fmt(v) for v in record.position)]
        if with_time:
            row.append(fmt(record.t_s))
        position_rows.append(row)
        for k, p in enumerate(record.path_set.paths):
            ray_rows.append([
                rx_id, str(k), fmt(p.power_dbm), fmt(p.delay_s * 1e9),
                fmt_azimuth(p.dod_az), fmt(p.dod_el), fmt_azimuth(p.doa_az), fmt(p.doa_el),
            ])
    write_table(ray_rows, RAYS_COLUMNS, rays_path)
    write_table(position_rows, POSITION_COLUMNS + ([TIME_COLUMN] if with_time else []), positions_path)


def write_dataset(dataset: Dataset, directory: PathLike) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_rayset_csv(dataset, directory / RAYS_FILE, directory / POSITIONS_FILE)
    meta = {
        "label": dataset.label,
        "metadata": dataset.metadata.model_dump(mode="json"),
        "layout": receiver_layout_adapter.dump_python(dataset.layout, mode="json") if dataset.layout else None,
    }
    (directory / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote dataset '{dataset.label}' to {directory}")
    return directory


# ---------------------------------------------------------------------------
# Pairing
# ---------------------------------------------------------------------------

def pair_datasets(a: Dataset, b: Dataset, tolerance_m: Optional[float] = None) -> Pairing:
    """
    Inner join on rx_id, in the receiver order of `a`. Receivers present on
    one side only are listed separately. A shared rx_id whose positions
    differ by more than the tolerance is an error.
    """
    tolerance_m = tolerance_m if tolerance_m is not None else get_settings().position_tolerance_m
    pairs = []
    for rx_id, rec_a in a.receivers.items():
        rec_b = b.receivers.get(rx_id)
        if rec_b is None:
            continue
        if math.dist(rec_a.position, rec_b.position) > tolerance_m:
            raise PairingError(
                f"receiver '{rx_id}' is at {rec_a.position} in '{a.label}' "
                f"but at {rec_b.position} in '{b.label}'"
            )
        pairs.append(PairedReceiver(
            rx_id=rx_id, position=rec_a.position, t_s=rec_a.t_s,
            a=rec_a.path_set, b=rec_b.path_set,
        ))
    only_a = [rx for rx in a.receivers if rx not in b.receivers]
    only_b = [rx for rx in b.receivers if rx not in a.receivers]
    if only_a or only_b:
        logger.warning(f"Unpaired receivers: {len(only_a)} only in '{a.label}', {len(only_b)} only in '{b.label}'")
    return Pairing(pairs=pairs, only_in_a=only_a, only_in_b=only_b)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

def _points_by_id(layout: ReceiverLayout) -> Dict[str, ReceiverPoint]:
    return {p.rx_id: p for p in layout.receivers()}


def result_records(results: Iterable[ComparisonResult], layout: ReceiverLayout) -> List[ResultRecord]:
    points = _points_by_id(layout)
    records = []
    for result in results:
        point = points.get(result.rx_id)
        if point is None:
            raise LayoutError(f"result for '{result.rx_id}' has no position in the layout")
        records.append(ResultRecord.from_result(result, point.position, point.t_s))
    return records


def write_records(records: Sequence[ResultRecord], directory: PathLike) -> Tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for rec in records:
        rows.append([
            rec.rx_id, *(fmt(v) for v in rec.position), fmt(rec.t_s), rec.status.value,
            str(rec.n_paths[0]), str(rec.n_paths[1]),
            *(fmt(rec.channels.get(ch)) for ch in CHANNELS),
        ])
    csv_path = directory / RESULTS_FILE
    write_table(rows, RESULT_COLUMNS, csv_path)
    summary_path = directory / SUMMARY_FILE
    write_summary(summarize_records(records), summary_path)
    return csv_path, summary_path


def write_results(results: Sequence[ComparisonResult], layout: ReceiverLayout, directory: PathLike) -> Tuple[Path, Path]:
    """Per-receiver results CSV plus a JSON summary over the ok receivers."""
    return write_records(result_records(results, layout), directory)


def write_summary(summary: ResultSummary, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_results(path: PathLike) -> List[ResultRecord]:
    """Read a results CSV written by write_results."""
    df = _read_table(path)
    _check_header(df, RESULT_COLUMNS, [], path, strict=True)
    records = []
    for i, row in df.iterrows():
        try:
            records.append(ResultRecord(
                rx_id=row["rx_id"],
                position=(float(row["x_m"]), float(row["y_m"]), float(row["z_m"])),
                t_s=parse_optional(row["t_s"]),
                status=ComparisonStatus(row["status"]),
                n_paths=(int(row["n_a"]), int(row["n_b"])),
                channels={ch: parse_optional(row[ch]) for ch in CHANNELS},
            ))
        except ValueError as exc:
            raise IngestError(str(exc), path=str(path), row=int(i) + 2)
    return records


TRAJECTORY_COLUMNS = ["t_s", "x_m", "y_m", "z_m"]


def load_trajectory_csv(path: PathLike, strict: bool = True) -> TrajectoryLayout:
    """Read a `t_s,x_m,y_m,z_m` trajectory file into a trajectory layout."""
    df = _read_table(path)
    _check_header(df, TRAJECTORY_COLUMNS, [], path, strict)
    cols = {c: _numeric(df, c, path) for c in TRAJECTORY_COLUMNS}
    try:
        return TrajectoryLayout(steps=[
            TrajectoryStep(t=float(cols["t_s"].iat[i]), x=float(cols["x_m"].iat[i]),
                           y=float(cols["y_m"].iat[i]), z=float(cols["z_m"].iat[i]))
            for i in range(len(df))
        ])
    except ValidationError as exc:
        raise LayoutError(f"{path}: {exc.errors()[0]['msg']}")


def _load_json(path: PathLike, error_cls):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise error_cls(f"{path}: file not found")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise error_cls(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")


def _locate(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()
    )


def load_scene(path: PathLike) -> SceneSpec:
    """Parse a scene JSON file; errors carry the line (syntax) or field path (schema)."""
    data = _load_json(path, SceneError)
    try:
        return SceneSpec.model_validate(data)
    except ValidationError as exc:
        raise SceneError(f"{path}: {_locate(exc)}")


def write_scene(scene: SceneSpec, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(json.dumps(scene.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_layout(path: PathLike) -> ReceiverLayout:
    data = _load_json(path, LayoutError)
    try:
        return receiver_layout_adapter.validate_python(data)
    except ValidationError as exc:
        raise LayoutError(f"{path}: {_locate(exc)}")
