"""
Tests for the core schemas and path-set validation.
"""
import math

import pytest
from pydantic import ValidationError

from app.core.exceptions import DuplicateReceiverError, PathSetValidationError
from app.schemas.layout import (
    ExplicitLayout,
    GridLayout,
    TrajectoryLayout,
    receiver_layout_adapter,
)
from app.schemas.metric import AssignmentMode, MetricConfig
from app.schemas.path import PathSet, PathTuple, wrap_azimuth
from app.schemas.scene import Box, SceneSpec, Transmitter
from app.services.validation import validate_path_set, validate_path_sets


class TestPathTuple:
    """Value rules of a single path."""

    def test_azimuth_wrapped(self, make_path):
        """270 degrees becomes -90."""
        assert make_path(dod=(270.0, 0.0)).dod_az == -90.0

    def test_azimuth_180_maps_to_minus_180(self, make_path):
        """Test an azimuth of 180 mapping to -180."""
        assert make_path(doa=(180.0, 0.0)).doa_az == -180.0

    def test_wrap_keeps_values_in_range(self):
        """Test wrapping into range."""
        for az in (-180.0, -12.5, 0.0, 179.999):
            assert wrap_azimuth(az) == az

    def test_elevation_out_of_range(self, make_path):
        """Test rejecting an out-of-range elevation."""
        with pytest.raises(ValidationError):
            make_path(doa=(0.0, 95.0))

    def test_negative_delay_rejected(self):
        """Test rejecting a negative delay."""
        with pytest.raises(ValidationError):
            PathTuple(power_dbm=0, delay_s=-1e-9, dod_az=0, dod_el=0, doa_az=0, doa_el=0)

    def test_non_finite_rejected(self):
        """Test rejecting non-finite values."""
        with pytest.raises(ValidationError):
            PathTuple(power_dbm=math.nan, delay_s=0, dod_az=0, dod_el=0, doa_az=0, doa_el=0)
        with pytest.raises(ValidationError):
            PathTuple(power_dbm=0, delay_s=math.inf, dod_az=0, dod_el=0, doa_az=0, doa_el=0)

    def test_empty_path_set_valid(self):
        """Test accepting an empty path set."""
        ps = PathSet(rx_id="r0", paths=[])
        assert ps.n_paths == 0
        assert ps.is_empty()


class TestValidation:
    """validate_path_set / validate_path_sets."""

    def test_idempotent(self, sample_path_set):
        """Test validation being idempotent."""
        once = validate_path_set(sample_path_set)
        assert validate_path_set(once) == once

    def test_normalizes_raw_mapping(self):
        """Test validating a raw mapping."""
        ps = validate_path_set({
            "rx_id": "a",
            "paths": [{"power_dbm": 1, "delay_s": 0, "dod_az": 540, "dod_el": 0, "doa_az": -190, "doa_el": 0}],
        })
        assert ps.paths[0].dod_az == -180.0
        assert ps.paths[0].doa_az == 170.0

    def test_invalid_reports_rx_id(self):
        """Test errors naming the receiver."""
        with pytest.raises(PathSetValidationError) as exc:
            validate_path_set({"rx_id": "bad", "paths": [{"power_dbm": 1}]})
        assert "bad" in str(exc.value)

    def test_duplicate_rx_ids(self):
        """Test rejecting duplicate receiver ids."""
        with pytest.raises(DuplicateReceiverError) as exc:
            validate_path_sets([PathSet(rx_id="a"), PathSet(rx_id="b"), PathSet(rx_id="a")])
        assert exc.value.rx_id == "a"


class TestMetricConfig:
    """Weights and mode switches."""

    def test_defaults(self):
        """Test metric config defaults."""
        cfg = MetricConfig()
        assert cfg.weights == (1.0, 1.0, 1.0, 1.0)
        assert cfg.single_feature_index() is None

    def test_joint_needs_positive_weight(self):
        """Test joint mode needing a positive weight."""
        with pytest.raises(ValidationError):
            MetricConfig(weights=(0, 0, 0, 0))

    def test_single_feature_allows_zero_weights(self):
        """Test single-feature modes allowing zero weights."""
        cfg = MetricConfig(weights=(0, 0, 0, 0), assignment_mode=AssignmentMode.POWER_ONLY)
        assert cfg.single_feature_index() == 1

    def test_negative_weight_rejected(self):
        """Test rejecting a negative weight."""
        with pytest.raises(ValidationError):
            MetricConfig(weights=(1, -1, 1, 1))


class TestLayouts:
    """Receiver layouts."""

    def test_grid_order_and_ids(self):
        """Test grid receiver order and ids."""
        layout = GridLayout(origin=(1.0, 2.0), nx=3, ny=2, dx=2.0, dy=5.0, height=1.5)
        points = layout.receivers()
        assert len(points) == 6
        assert points[0].rx_id == "g0_0"
        assert points[1].position == (3.0, 2.0, 1.5)
        assert points[3].rx_id == "g0_1"
        assert points[3].position == (1.0, 7.0, 1.5)

    @pytest.mark.parametrize("field,value", [("nx", 0), ("dx", 0.0), ("dy", -1.0)])
    def test_grid_rejects_bad_sizes(self, field, value):
        """Test rejecting bad grid sizes."""
        kwargs = {"nx": 2, "ny": 2, field: value}
        with pytest.raises(ValidationError):
            GridLayout(**kwargs)

    def test_trajectory_needs_increasing_time(self):
        """Test trajectories needing increasing time."""
        with pytest.raises(ValidationError):
            TrajectoryLayout(steps=[{"t": 0.0, "x": 0, "y": 0, "z": 1}, {"t": 0.0, "x": 1, "y": 0, "z": 1}])

    def test_trajectory_ids(self):
        """Test trajectory receiver ids."""
        layout = TrajectoryLayout(steps=[{"t": 0.0, "x": 0, "y": 0, "z": 1}, {"t": 0.1, "x": 1, "y": 0, "z": 1}])
        assert [p.rx_id for p in layout.receivers()] == ["t0", "t1"]
        assert layout.receivers()[1].t_s == 0.1

    def test_explicit_unique_ids(self):
        """Test explicit layouts needing unique ids."""
        with pytest.raises(ValidationError):
            ExplicitLayout(points=[{"rx_id": "a", "x": 0, "y": 0, "z": 0}, {"rx_id": "a", "x": 1, "y": 0, "z": 0}])

    def test_discriminated_union(self):
        """Test parsing layouts by kind."""
        layout = receiver_layout_adapter.validate_python({"kind": "grid", "nx": 2, "ny": 1})
        assert isinstance(layout, GridLayout)


class TestSceneSpec:
    """Scene validation."""

    def test_box_needs_positive_extent(self):
        """Test boxes needing a positive extent."""
        with pytest.raises(ValidationError):
            Box(min_corner=(0, 0, 0), max_corner=(1, 0, 1), material="concrete")

    def test_unknown_material(self):
        """Test rejecting an unknown material."""
        with pytest.raises(ValidationError) as exc:
            SceneSpec(
                tx=Transmitter(position=(0, 0, 10)),
                boxes=[Box(min_corner=(0, 0, 0), max_corner=(1, 1, 1), material="wood")],
            )
        assert "wood" in str(exc.value)

    def test_default_materials(self, ground_scene):
        """Test the default materials."""
        assert ground_scene.materials["concrete"].reflection_loss_db == 10.0
        assert ground_scene.materials["glass"].reflection_loss_db == 4.0
        assert ground_scene.materials["metal"].reflection_loss_db == 1.0
        assert ground_scene.carrier_frequency_hz == 28e9

    def test_with_material_loss(self, wall_scene):
        """Test replacing a material loss."""
        changed = wall_scene.with_material_loss("glass", 10.0)
        assert changed.materials["glass"].reflection_loss_db == 10.0
        assert wall_scene.materials["glass"].reflection_loss_db == 4.0

    def test_order_range(self):
        """Test the reflection order range."""
        with pytest.raises(ValidationError):
            SceneSpec(tx=Transmitter(position=(0, 0, 1)), max_reflection_order=3)
