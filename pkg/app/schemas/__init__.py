# app/schemas/__init__.py
"""
Export all schemas for easy importing.
"""
from app.schemas.path import PathSet, PathTuple, wrap_azimuth
from app.schemas.metric import (
    CHANNELS, AssignmentMode, ComparisonResult, ComparisonStatus, FeatureDistances,
    HrtComponentMode, MetricConfig, StandardizationScope, StandardizationStats, StandardizedTuple
)
from app.schemas.layout import (
    ExplicitLayout, ExplicitReceiver, GridLayout, ReceiverLayout, ReceiverPoint,
    TrajectoryLayout, TrajectoryStep, receiver_layout_adapter
)
from app.schemas.scene import Box, Material, SceneSpec, TracedPath, Transmitter
from app.schemas.dataset import (
    Dataset, DatasetMetadata, PairedReceiver, Pairing, ReceiverRecord, TraceResult
)
from app.schemas.analysis import (
    ConsistencyReport, GridCell, GridMap, NeighborReport, ResultRecord, ResultSummary,
    ThresholdSummary, TrajectoryPoint, TrajectorySeries
)

__all__ = [
    # Path schemas
    "PathSet", "PathTuple", "wrap_azimuth",
    # Metric schemas
    "CHANNELS", "AssignmentMode", "ComparisonResult", "ComparisonStatus", "FeatureDistances",
    "HrtComponentMode", "MetricConfig", "StandardizationScope", "StandardizationStats",
    "StandardizedTuple",
    # Layout schemas
    "ExplicitLayout", "ExplicitReceiver", "GridLayout", "ReceiverLayout", "ReceiverPoint",
    "TrajectoryLayout", "TrajectoryStep", "receiver_layout_adapter",
    # Scene schemas
    "Box", "Material", "SceneSpec", "TracedPath", "Transmitter",
    # Dataset schemas
    "Dataset", "DatasetMetadata", "PairedReceiver", "Pairing", "ReceiverRecord", "TraceResult",
    # Analysis schemas
    "ConsistencyReport", "GridCell", "GridMap", "NeighborReport", "ResultRecord",
    "ResultSummary", "ThresholdSummary", "TrajectoryPoint", "TrajectorySeries",
]
