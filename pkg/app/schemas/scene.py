# app/schemas/scene.py
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.path import PathTuple

Vector3 = Tuple[float, float, float]


class Material(BaseModel):
    """Scalar reflection loss applied on every specular bounce."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    name: str = Field(..., min_length=1)
    reflection_loss_db: float = Field(..., ge=0)


class Box(BaseModel):
    """Axis-aligned prism given by its min/max corners in meters."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    min_corner: Vector3
    max_corner: Vector3
    material: str
    name: Optional[str] = None

    @model_validator(mode="after")
    def check_extent(self) -> "Box":
        for lo, hi in zip(self.min_corner, self.max_corner):
            if not hi > lo:
                raise ValueError(f"box must have positive extent on every axis: {self.min_corner} -> {self.max_corner}")
        return self


class Transmitter(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    position: Vector3
    tx_power_dbm: float = 30.0


def default_materials() -> Dict[str, Material]:
    from app.core.config import get_settings

    s = get_settings()
    return {
        "concrete": Material(name="concrete", reflection_loss_db=s.concrete_loss_db),
        "glass": Material(name="glass", reflection_loss_db=s.glass_loss_db),
        "metal": Material(name="metal", reflection_loss_db=s.metal_loss_db),
    }


def default_frequency() -> float:
    from app.core.config import get_settings

    return get_settings().carrier_frequency_hz


def default_power_floor() -> float:
    from app.core.config import get_settings

    return get_settings().power_floor_dbm


class SceneSpec(BaseModel):
    """Synthetic world: ground plane, boxes, materials and one transmitter."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    ground: str = "concrete"
    boxes: List[Box] = []
    tx: Transmitter
    carrier_frequency_hz: float = Field(default_factory=default_frequency, gt=0)
    max_reflection_order: int = Field(1, ge=0, le=2)
    los_enabled: bool = True
    power_floor_dbm: float = Field(default_factory=default_power_floor)
    materials: Dict[str, Material] = Field(default_factory=default_materials)

    @model_validator(mode="after")
    def check_materials(self) -> "SceneSpec":
        referenced = [self.ground] + [b.material for b in self.boxes]
        missing = sorted({m for m in referenced if m not in self.materials})
        if missing:
            raise ValueError(f"unknown material(s): {', '.join(missing)}")
        for key, material in self.materials.items():
            if key != material.name:
                raise ValueError(f"material table key '{key}' does not match name '{material.name}'")
        return self

    def box_name(self, index: int) -> str:
        return self.boxes[index].name or f"box{index}"

    def with_material_loss(self, name: str, reflection_loss_db: float) -> "SceneSpec":
        """Copy of the scene with one material's loss replaced."""
        materials = dict(self.materials)
        materials[name] = Material(name=name, reflection_loss_db=reflection_loss_db)
        return self.model_copy(update={"materials": materials})

    def with_box(self, box: Box) -> "SceneSpec":
        return self.model_copy(update={"boxes": [*self.boxes, box]})


class TracedPath(BaseModel):
    """A traced path with its provenance."""
    model_config = ConfigDict(frozen=True)

    path: PathTuple
    interactions: Tuple[str, ...] = ()
    length_m: float = Field(..., gt=0)
