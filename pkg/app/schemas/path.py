# app/schemas/path.py
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


def wrap_azimuth(az: float) -> float:
    """Map an azimuth in degrees onto [-180, 180); values already inside are kept as is."""
    if -180.0 <= az < 180.0:
        return az
    wrapped = (az + 180.0) % 360.0 - 180.0
    # fmod rounding can land exactly on +180
    return -180.0 if wrapped >= 180.0 else wrapped


class PathTuple(BaseModel):
    """One propagation path: received power, delay, departure and arrival directions."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    power_dbm: float
    delay_s: float = Field(..., ge=0)
    dod_az: float
    dod_el: float = Field(..., ge=-90, le=90)
    doa_az: float
    doa_el: float = Field(..., ge=-90, le=90)

    @field_validator("dod_az", "doa_az")
    @classmethod
    def normalize_azimuth(cls, v: float) -> float:
        return wrap_azimuth(v)

    def as_row(self) -> Tuple[float, float, float, float, float, float]:
        return (self.power_dbm, self.delay_s, self.dod_az, self.dod_el, self.doa_az, self.doa_el)


class PathSet(BaseModel):
    """All paths between the transmitter and one receiver in one simulation."""
    model_config = ConfigDict(frozen=True)

    rx_id: str = Field(..., min_length=1)
    paths: List[PathTuple] = []

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def is_empty(self) -> bool:
        return not self.paths
