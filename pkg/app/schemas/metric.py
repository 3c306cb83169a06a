# app/schemas/metric.py
from enum import Enum
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, model_validator


class AssignmentMode(str, Enum):
    JOINT = "joint"
    DELAY_ONLY = "delay-only"
    POWER_ONLY = "power-only"
    DOD_ONLY = "dod-only"
    DOA_ONLY = "doa-only"


class StandardizationScope(str, Enum):
    POOLED = "pooled"
    PER_SET = "per-set"


class HrtComponentMode(str, Enum):
    PER_FEATURE_MAX = "per-feature-max"
    JOINT_ARGMAX = "joint-argmax"


class ComparisonStatus(str, Enum):
    OK = "ok"
    BOTH_EMPTY = "both-empty"
    COVERAGE_MISMATCH = "coverage-mismatch"


# Column order of FeatureDistances when handled as arrays.
FEATURES = ("tau", "p", "dod", "doa")


class MetricConfig(BaseModel):
    """Weights and switches for the composite ray distance and the set distances."""
    model_config = ConfigDict(frozen=True)

    weights: Tuple[NonNegativeFloat, NonNegativeFloat, NonNegativeFloat, NonNegativeFloat] = (1.0, 1.0, 1.0, 1.0)
    assignment_mode: AssignmentMode = AssignmentMode.JOINT
    standardization_scope: StandardizationScope = StandardizationScope.POOLED
    power_threshold_dbm: Optional[float] = Field(None, allow_inf_nan=False)
    hrt_component_mode: HrtComponentMode = HrtComponentMode.PER_FEATURE_MAX

    @model_validator(mode="after")
    def check_weights(self) -> "MetricConfig":
        if self.assignment_mode == AssignmentMode.JOINT and not any(w > 0 for w in self.weights):
            raise ValueError("at least one weight must be positive in joint assignment mode")
        return self

    @classmethod
    def from_settings(cls, settings) -> "MetricConfig":
        return cls(
            weights=tuple(settings.default_weights),
            standardization_scope=settings.default_std_scope,
            hrt_component_mode=settings.default_hrt_components,
            power_threshold_dbm=settings.default_power_threshold_dbm,
        )

    def single_feature_index(self) -> Optional[int]:
        """Column of the component driving the assignment, or None for the joint composite."""
        return {
            AssignmentMode.DELAY_ONLY: 0,
            AssignmentMode.POWER_ONLY: 1,
            AssignmentMode.DOD_ONLY: 2,
            AssignmentMode.DOA_ONLY: 3,
        }.get(self.assignment_mode)


class StandardizationStats(BaseModel):
    """Population mean and standard deviation of power (dBm) and delay (s)."""
    model_config = ConfigDict(frozen=True)

    mu_p: float
    sigma_p: float = Field(..., ge=0)
    mu_tau: float
    sigma_tau: float = Field(..., ge=0)


class StandardizedTuple(BaseModel):
    """Path tuple with power and delay standardized; angles untouched (degrees)."""
    model_config = ConfigDict(frozen=True)

    p_bar: float
    tau_bar: float
    dod_az: float
    dod_el: float
    doa_az: float
    doa_el: float


class FeatureDistances(BaseModel):
    """Per-feature distances: standardized delay/power and cosine distances of DoD/DoA."""
    model_config = ConfigDict(frozen=True)

    d_tau: float = Field(0.0, ge=0)
    d_p: float = Field(0.0, ge=0)
    d_dod: float = Field(0.0, ge=0, le=2)
    d_doa: float = Field(0.0, ge=0, le=2)

    @classmethod
    def from_sequence(cls, values) -> "FeatureDistances":
        d_tau, d_p, d_dod, d_doa = (float(v) for v in values)
        return cls(d_tau=d_tau, d_p=d_p, d_dod=min(d_dod, 2.0), d_doa=min(d_doa, 2.0))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.d_tau, self.d_p, self.d_dod, self.d_doa)


class ComparisonResult(BaseModel):
    """HRT/CRT outcome for one receiver. Distances are unset on coverage mismatch."""
    model_config = ConfigDict(frozen=True)

    rx_id: str
    status: ComparisonStatus
    hrt: Optional[float] = Field(None, ge=0)
    crt: Optional[float] = Field(None, ge=0)
    hrt_components: Optional[FeatureDistances] = None
    crt_components: Optional[FeatureDistances] = None
    hrt_angles_deg: Optional[Tuple[float, float]] = None
    crt_angles_deg: Optional[Tuple[float, float]] = None
    n_paths: Tuple[int, int] = (0, 0)

    @property
    def is_ok(self) -> bool:
        return self.status == ComparisonStatus.OK

    def channels(self) -> Dict[str, Optional[float]]:
        """The ten exportable scalars; None where the distance is unset."""
        values: Dict[str, Optional[float]] = {name: None for name in CHANNELS}
        values["hrt"] = self.hrt
        values["crt"] = self.crt
        for prefix, comps, angles in (
            ("hrt", self.hrt_components, self.hrt_angles_deg),
            ("crt", self.crt_components, self.crt_angles_deg),
        ):
            if comps is not None:
                values[f"{prefix}_dtau"] = comps.d_tau
                values[f"{prefix}_dp"] = comps.d_p
            if angles is not None:
                values[f"{prefix}_ddod_deg"] = angles[0]
                values[f"{prefix}_ddoa_deg"] = angles[1]
        return values


CHANNELS = (
    "hrt", "crt",
    "hrt_dtau", "hrt_dp", "hrt_ddod_deg", "hrt_ddoa_deg",
    "crt_dtau", "crt_dp", "crt_ddod_deg", "crt_ddoa_deg",
)
