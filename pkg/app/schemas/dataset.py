# app/schemas/dataset.py
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.layout import Position, ReceiverLayout
from app.schemas.path import PathSet
from app.schemas.scene import TracedPath


class ReceiverRecord(BaseModel):
    """A receiver position with the paths simulated for it."""
    model_config = ConfigDict(frozen=True)

    position: Position
    path_set: PathSet
    t_s: Optional[float] = None
    inside_obstacle: bool = False


class DatasetMetadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    frequency_hz: Optional[float] = Field(None, gt=0)
    tx_position: Optional[Position] = None
    notes: str = ""


class Dataset(BaseModel):
    """One simulation run: every receiver and its path set."""
    model_config = ConfigDict(frozen=True)

    label: str = ""
    receivers: Dict[str, ReceiverRecord] = {}
    metadata: DatasetMetadata = DatasetMetadata()
    layout: Optional[ReceiverLayout] = None

    @model_validator(mode="after")
    def check_ids(self) -> "Dataset":
        for rx_id, record in self.receivers.items():
            if record.path_set.rx_id != rx_id:
                raise ValueError(f"receiver key '{rx_id}' holds path set for '{record.path_set.rx_id}'")
        return self

    def rx_ids(self) -> List[str]:
        return list(self.receivers)


class PairedReceiver(BaseModel):
    model_config = ConfigDict(frozen=True)

    rx_id: str
    position: Position
    t_s: Optional[float] = None
    a: PathSet
    b: PathSet


class Pairing(BaseModel):
    """Inner join of two datasets on rx_id, with the leftovers on each side."""
    model_config = ConfigDict(frozen=True)

    pairs: List[PairedReceiver] = []
    only_in_a: List[str] = []
    only_in_b: List[str] = []


class TraceResult(BaseModel):
    """Output of the synthetic tracer: the dataset plus per-path provenance."""
    model_config = ConfigDict(frozen=True)

    dataset: Dataset
    provenance: Dict[str, List[TracedPath]] = {}
    inside_obstacle: List[str] = []
