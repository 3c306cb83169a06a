# app/schemas/layout.py
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator

Position = Tuple[float, float, float]


class ReceiverPoint(BaseModel):
    """One receiver placed by a layout."""
    model_config = ConfigDict(frozen=True)

    rx_id: str
    position: Position
    t_s: Optional[float] = None
    ix: Optional[int] = None
    iy: Optional[int] = None


def grid_rx_id(ix: int, iy: int) -> str:
    return f"g{ix}_{iy}"


class GridLayout(BaseModel):
    """Receivers on a regular horizontal grid at fixed height."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: Literal["grid"] = "grid"
    origin: Tuple[float, float] = (0.0, 0.0)
    nx: int = Field(..., ge=1)
    ny: int = Field(..., ge=1)
    dx: float = Field(2.0, gt=0)
    dy: float = Field(2.0, gt=0)
    height: float = 1.5

    def receivers(self) -> List[ReceiverPoint]:
        x0, y0 = self.origin
        return [
            ReceiverPoint(
                rx_id=grid_rx_id(ix, iy),
                position=(x0 + ix * self.dx, y0 + iy * self.dy, self.height),
                ix=ix,
                iy=iy,
            )
            for iy in range(self.ny)
            for ix in range(self.nx)
        ]


class TrajectoryStep(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    t: float
    x: float
    y: float
    z: float
    rx_id: Optional[str] = None


class TrajectoryLayout(BaseModel):
    """Receivers placed at the successive positions of a moving vehicle."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["trajectory"] = "trajectory"
    steps: List[TrajectoryStep] = Field(..., min_length=1)
    id_prefix: str = "t"

    @field_validator("steps")
    @classmethod
    def validate_increasing(cls, v: List[TrajectoryStep]) -> List[TrajectoryStep]:
        """Timestamps must be strictly increasing."""
        for prev, cur in zip(v, v[1:]):
            if cur.t <= prev.t:
                raise ValueError(f"trajectory timestamps must be strictly increasing ({prev.t} then {cur.t})")
        return v

    def receivers(self) -> List[ReceiverPoint]:
        return [
            ReceiverPoint(rx_id=s.rx_id or f"{self.id_prefix}{k}", position=(s.x, s.y, s.z), t_s=s.t)
            for k, s in enumerate(self.steps)
        ]


class ExplicitReceiver(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    rx_id: str = Field(..., min_length=1)
    x: float
    y: float
    z: float


class ExplicitLayout(BaseModel):
    """Arbitrary named receivers."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["explicit"] = "explicit"
    points: List[ExplicitReceiver] = []

    @field_validator("points")
    @classmethod
    def validate_unique(cls, v: List[ExplicitReceiver]) -> List[ExplicitReceiver]:
        seen = set()
        for p in v:
            if p.rx_id in seen:
                raise ValueError(f"duplicate rx_id '{p.rx_id}' in layout")
            seen.add(p.rx_id)
        return v

    def receivers(self) -> List[ReceiverPoint]:
        return [ReceiverPoint(rx_id=p.rx_id, position=(p.x, p.y, p.z)) for p in self.points]


ReceiverLayout = Annotated[
    Union[GridLayout, TrajectoryLayout, ExplicitLayout],
    Field(discriminator="kind"),
]

receiver_layout_adapter: TypeAdapter = TypeAdapter(ReceiverLayout)
