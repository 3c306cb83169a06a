# app/schemas/analysis.py
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from app.schemas.layout import GridLayout, Position, TrajectoryLayout
from app.schemas.metric import CHANNELS, ComparisonResult, ComparisonStatus


class GridCell(BaseModel):
    """One grid cell. `result` is None when the receiver is missing from either dataset."""
    model_config = ConfigDict(frozen=True)

    ix: int
    iy: int
    rx_id: str
    position: Position
    result: Optional[ComparisonResult] = None

    @property
    def has_data(self) -> bool:
        return self.result is not None and self.result.is_ok


class GridMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    layout: GridLayout
    cells: List[GridCell]

    def cell(self, ix: int, iy: int) -> GridCell:
        return self.cells[iy * self.layout.nx + ix]


class TrajectoryPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_s: float
    rx_id: str
    position: Position
    result: ComparisonResult


class TrajectorySeries(BaseModel):
    model_config = ConfigDict(frozen=True)

    layout: TrajectoryLayout
    points: List[TrajectoryPoint]
    excluded: List[str] = []


class ResultRecord(BaseModel):
    """
    Flat export row of a per-receiver comparison. Channels are set only for
    ok receivers; the status column carries the rest.
    """
    model_config = ConfigDict(frozen=True)

    rx_id: str
    position: Position
    t_s: Optional[float] = None
    status: ComparisonStatus
    n_paths: Tuple[int, int] = (0, 0)
    channels: Dict[str, Optional[float]]

    @classmethod
    def from_result(cls, result: ComparisonResult, position: Position,
                    t_s: Optional[float] = None) -> "ResultRecord":
        return cls(
            rx_id=result.rx_id,
            position=position,
            t_s=t_s,
            status=result.status,
            n_paths=result.n_paths,
            channels=result.channels() if result.is_ok else dict.fromkeys(CHANNELS),
        )

    @property
    def is_ok(self) -> bool:
        return self.status == ComparisonStatus.OK


class ResultSummary(BaseModel):
    """Counts by status plus channel means/maxima over ok receivers."""
    model_config = ConfigDict(frozen=True)

    n_receivers: int
    counts: Dict[str, int]
    mean: Dict[str, Optional[float]]
    max: Dict[str, Optional[float]]
    empty: bool = False
    center: Optional[Tuple[float, float]] = None
    radius_m: Optional[float] = None


class NeighborReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    rx_id: str
    position: Position
    n_neighbors: int
    n_compared: int
    mean_crt: Optional[float] = None
    max_crt: Optional[float] = None
    isolated: bool = False


class ConsistencyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    radius_m: float
    receivers: List[NeighborReport]
    n_pairs: int

    def by_id(self) -> Dict[str, NeighborReport]:
        return {r.rx_id: r for r in self.receivers}


class ThresholdSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    power_threshold_dbm: float
    summary: ResultSummary
