"""
Tests for the ray-set distances: standardization, per-feature distances,
nearest-neighbor assignment, HRT and CRT.
"""
import math

import numpy as np
import pytest

from app.core.exceptions import EmptyPathSetError
from app.schemas.metric import (
    AssignmentMode,
    ComparisonStatus,
    FeatureDistances,
    HrtComponentMode,
    MetricConfig,
    StandardizationScope,
    StandardizationStats,
    StandardizedTuple,
)
from app.schemas.path import PathSet
from app.services.metrics import (
    angular_distance,
    apply_power_threshold,
    assign_both_directions,
    chamfer_rt,
    compare_path_sets,
    composite_distance,
    compute_standardization,
    cosine_to_degrees,
    direction_unit_vector,
    feature_distances,
    hausdorff_rt,
    nearest_neighbor_assign,
    nearest_neighbor_assign_exhaustive,
    StandardizedSet,
    standardize,
)


def _standardized(x, y, scope=StandardizationScope.POOLED):
    stats_x, stats_y = compute_standardization(x, y, scope)
    return standardize(x, stats_x), standardize(y, stats_y)


def _st(p_bar=0.0, tau_bar=0.0, dod=(0.0, 0.0), doa=(0.0, 0.0)):
    return StandardizedTuple(p_bar=p_bar, tau_bar=tau_bar, dod_az=dod[0], dod_el=dod[1],
                             doa_az=doa[0], doa_el=doa[1])


class TestDirections:
    """Unit vectors and cosine distance."""

    @pytest.mark.parametrize("az,el,expected", [
        (0.0, 0.0, (1.0, 0.0, 0.0)),
        (90.0, 0.0, (0.0, 1.0, 0.0)),
        (0.0, 90.0, (0.0, 0.0, 1.0)),
    ])
    def test_axis_cases(self, az, el, expected):
        """Test unit vectors along the axes."""
        assert tuple(direction_unit_vector(az, el)) == pytest.approx(expected, abs=1e-15)

    def test_broadcasts(self):
        """Test broadcasting over arrays."""
        u = direction_unit_vector(np.zeros((2, 3)), np.zeros((2, 3)))
        assert u.shape == (2, 3, 3)

    def test_identical_directions_exactly_zero(self):
        """Test identical directions giving exactly zero."""
        assert angular_distance(37.2, -12.9, 37.2, -12.9) == 0.0

    def test_antipodal(self):
        """Test antipodal directions."""
        assert angular_distance(0.0, 0.0, -180.0, 0.0) == pytest.approx(2.0, abs=1e-15)

    def test_orthogonal(self):
        """Test orthogonal directions."""
        assert angular_distance(0.0, 0.0, 90.0, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_range(self, rng):
        """Test the cosine distance range."""
        for _ in range(200):
            az1, az2 = rng.uniform(-180, 180, 2)
            el1, el2 = rng.uniform(-90, 90, 2)
            assert 0.0 <= angular_distance(az1, el1, az2, el2) <= 2.0

    def test_degrees(self):
        """Test converting cosine distance to degrees."""
        assert cosine_to_degrees(0.0) == 0.0
        assert cosine_to_degrees(1.0) == pytest.approx(90.0)
        assert cosine_to_degrees(2.0) == pytest.approx(180.0)


class TestStandardization:
    """Population statistics and the sigma guard."""

    def test_pooled_two_powers(self, make_path):
        """Test pooled statistics of two powers."""
        x = PathSet(rx_id="r", paths=[make_path(power_dbm=10.0)])
        y = PathSet(rx_id="r", paths=[make_path(power_dbm=20.0)])
        stats_x, stats_y = compute_standardization(x, y)
        assert stats_x is stats_y
        assert stats_x.mu_p == 15.0
        assert stats_x.sigma_p == 5.0

    def test_single_path(self, make_path):
        """Test statistics of a single path."""
        x = PathSet(rx_id="r", paths=[make_path(power_dbm=-42.0, delay_ns=12.0)])
        stats, _ = compute_standardization(x, PathSet(rx_id="r"))
        assert stats.mu_p == -42.0
        assert stats.sigma_p == 0.0

    def test_formula(self, sample_path_set):
        """Test the standardization formula."""
        stats = StandardizationStats(mu_p=15.0, sigma_p=5.0, mu_tau=0.0, sigma_tau=1.0)
        one = PathSet(rx_id="r", paths=[sample_path_set.paths[0].model_copy(update={"power_dbm": 20.0})])
        assert standardize(one, stats).p_bar[0] == 1.0

    def test_pooled_mean_zero_std_one(self, rng, random_path_set):
        """Test pooled columns having zero mean and unit deviation."""
        x = random_path_set(rng, 17)
        y = random_path_set(rng, 29)
        sx, sy = _standardized(x, y)
        for column in (np.concatenate((sx.p_bar, sy.p_bar)), np.concatenate((sx.tau_bar, sy.tau_bar))):
            assert abs(np.mean(column)) < 1e-9
            assert abs(np.std(column) - 1.0) < 1e-9

    def test_guard_gives_zero_column(self, make_path):
        """Test the sigma guard giving a zero column."""
        x = PathSet(rx_id="r", paths=[make_path(power_dbm=-70.0, delay_ns=d) for d in (10, 20, 30)])
        y = PathSet(rx_id="r", paths=[make_path(power_dbm=-70.0, delay_ns=d) for d in (15, 25)])
        sx, sy = _standardized(x, y)
        assert np.all(sx.p_bar == 0.0)
        assert np.all(sy.p_bar == 0.0)

    def test_pooled_needs_a_path(self):
        """Test pooled scope needing a path."""
        with pytest.raises(EmptyPathSetError):
            compute_standardization(PathSet(rx_id="r"), PathSet(rx_id="r"))

    def test_per_set_needs_both(self, sample_path_set):
        """Test per-set scope needing both sets."""
        with pytest.raises(EmptyPathSetError):
            compute_standardization(sample_path_set, PathSet(rx_id="r1"), StandardizationScope.PER_SET)

    def test_per_set_uses_own_statistics(self, sample_path_set, make_path):
        """Test per-set scope using each set's statistics."""
        y = PathSet(rx_id="r1", paths=[make_path(power_dbm=0.0), make_path(power_dbm=2.0)])
        stats_x, stats_y = compute_standardization(sample_path_set, y, StandardizationScope.PER_SET)
        assert stats_y.mu_p == 1.0
        assert stats_x.mu_p == pytest.approx((-60 - 72 - 80 - 95) / 4)


class TestFeatureDistances:
    """Per-feature and composite distances."""

    def test_identity(self):
        """Test feature distances of a tuple with itself."""
        v = _st(0.3, -1.2, (10, 20), (30, -40))
        assert feature_distances(v, v).as_tuple() == (0.0, 0.0, 0.0, 0.0)

    def test_delay_difference(self):
        """Test the delay difference."""
        assert feature_distances(_st(tau_bar=1.0), _st(tau_bar=-0.5)).d_tau == 1.5

    def test_orthogonal_dod(self):
        """Test orthogonal departure directions."""
        fd = feature_distances(_st(dod=(0, 0)), _st(dod=(90, 0)))
        assert fd.as_tuple() == pytest.approx((0.0, 0.0, 1.0, 0.0), abs=1e-15)

    def test_composite_unit_weights(self):
        """Test the composite with unit weights."""
        fd = FeatureDistances(d_tau=1.0, d_p=0.5, d_dod=0.2, d_doa=0.3)
        assert composite_distance(fd, MetricConfig()) == pytest.approx(2.0)

    def test_composite_zero(self):
        """Test the composite of zero distances."""
        assert composite_distance(FeatureDistances(), MetricConfig()) == 0.0

    def test_composite_single_weight(self):
        """Test the composite with a single weight."""
        fd = FeatureDistances(d_tau=9.0, d_p=0.5, d_dod=2.0, d_doa=2.0)
        assert composite_distance(fd, MetricConfig(weights=(0, 1, 0, 0))) == 0.5


class TestNearestNeighbor:
    """Vectorized scan against the exhaustive reference."""

    def test_identity_maps_to_self(self, rng, random_path_set):
        """Test identity mapping every path to itself."""
        x = random_path_set(rng, 12)
        sx, _ = _standardized(x, x)
        nn = nearest_neighbor_assign(sx, sx, MetricConfig())
        assert list(nn.target_index) == list(range(12))
        assert np.all(nn.d_r == 0.0)

    def test_two_candidates(self):
        """Test picking the nearer of two candidates."""
        a = StandardizedSet.from_tuples([_st(0.0, 0.0)])
        bc = StandardizedSet.from_tuples([_st(0.1, 0.0), _st(0.0, 2.0)])
        nn = nearest_neighbor_assign(a, bc, MetricConfig())
        assert int(nn.target_index[0]) == 0
        assert float(nn.d_r[0]) == pytest.approx(0.1)

    def test_ties_go_to_lowest_index(self, sample_path_set):
        """Test ties going to the lowest index."""
        target = PathSet(rx_id="r1", paths=[sample_path_set.paths[2], sample_path_set.paths[1], sample_path_set.paths[1]])
        sx, sy = _standardized(sample_path_set, target)
        nn = nearest_neighbor_assign(sy, sy, MetricConfig())
        assert list(nn.target_index) == [0, 1, 1]

    def test_empty_target(self, sample_path_set):
        """Test an empty target set."""
        sx, sy = _standardized(sample_path_set, PathSet(rx_id="r1"))
        with pytest.raises(EmptyPathSetError):
            nearest_neighbor_assign(sx, sy, MetricConfig())

    def test_empty_source(self, sample_path_set):
        """Test an empty source set."""
        sx, sy = _standardized(PathSet(rx_id="r1"), sample_path_set)
        assert len(nearest_neighbor_assign(sx, sy, MetricConfig())) == 0

    def test_matches_exhaustive_23_37(self, rng, random_path_set):
        """Test the vectorized scan matching the exhaustive scan."""
        sx, sy = _standardized(random_path_set(rng, 23), random_path_set(rng, 37))
        fast = nearest_neighbor_assign(sx, sy, MetricConfig())
        slow = nearest_neighbor_assign_exhaustive(sx, sy, MetricConfig())
        assert np.array_equal(fast.target_index, slow.target_index)

    def test_oracle_equivalence_random_instances(self, rng, random_path_set):
        """500 random instances, including duplicated targets and small row blocks."""
        modes = list(AssignmentMode)
        for k in range(500):
            n, m = (int(v) for v in rng.integers(1, 41, size=2))
            x = random_path_set(rng, n)
            y = random_path_set(rng, m)
            if k % 5 == 0:
                y = PathSet(rx_id="rx", paths=y.paths + y.paths[: max(1, m // 2)])
            cfg = MetricConfig(weights=tuple(rng.uniform(0.1, 3.0, 4)), assignment_mode=modes[k % len(modes)])
            sx, sy = _standardized(x, y)
            fast = nearest_neighbor_assign(sx, sy, cfg, block_rows=int(rng.integers(1, 16)))
            slow = nearest_neighbor_assign_exhaustive(sx, sy, cfg)
            assert np.array_equal(fast.target_index, slow.target_index)
            assert np.array_equal(fast.d_r, slow.d_r)
            assert np.array_equal(fast.d_assign, slow.d_assign)
            assert np.array_equal(fast.components, slow.components)

    def test_oracle_equivalence_large(self, rng, random_path_set):
        """Test the vectorized scan on large sets."""
        for _ in range(3):
            sx, sy = _standardized(random_path_set(rng, 200), random_path_set(rng, 200))
            fast = nearest_neighbor_assign(sx, sy, MetricConfig(), block_rows=64)
            slow = nearest_neighbor_assign_exhaustive(sx, sy, MetricConfig())
            assert np.array_equal(fast.target_index, slow.target_index)

    def test_both_directions_match_separate_scans(self, rng, random_path_set):
        """Test the shared matrix matching separate scans."""
        modes = list(AssignmentMode)
        for k in range(60):
            n, m = (int(v) for v in rng.integers(1, 41, size=2))
            x = random_path_set(rng, n)
            y = random_path_set(rng, m)
            if k % 4 == 0:
                y = PathSet(rx_id="rx", paths=y.paths + x.paths[: max(1, n // 2)])
            cfg = MetricConfig(assignment_mode=modes[k % len(modes)])
            sx, sy = _standardized(x, y)
            both = assign_both_directions(sx, sy, cfg)
            separate = (nearest_neighbor_assign(sx, sy, cfg), nearest_neighbor_assign(sy, sx, cfg))
            for got, want in zip(both, separate):
                assert got.direction == want.direction
                assert np.array_equal(got.target_index, want.target_index)
                assert np.array_equal(got.components, want.components)
                assert np.array_equal(got.d_assign, want.d_assign)

    def test_both_directions_large_set_falls_back(self, rng, random_path_set):
        """Test falling back to separate scans above one block."""
        sx, sy = _standardized(random_path_set(rng, 30), random_path_set(rng, 20))
        xy, yx = assign_both_directions(sx, sy, MetricConfig(), block_rows=8)
        assert np.array_equal(xy.target_index, nearest_neighbor_assign(sx, sy, MetricConfig()).target_index)
        assert np.array_equal(yx.target_index, nearest_neighbor_assign(sy, sx, MetricConfig()).target_index)

    def test_power_only_minimizes_power_component(self, rng, random_path_set):
        """Test power-only assignment minimizing the power component."""
        cfg = MetricConfig(assignment_mode=AssignmentMode.POWER_ONLY)
        sx, sy = _standardized(random_path_set(rng, 30), random_path_set(rng, 25))
        nn = nearest_neighbor_assign(sx, sy, cfg)
        for i in range(len(sx)):
            assert nn.components[i, 1] == np.min(np.abs(sx.p_bar[i] - sy.p_bar))

    def test_d_r_is_weighted_components(self, rng, random_path_set):
        """Test d_R being the weighted component sum."""
        cfg = MetricConfig(weights=(0.5, 2.0, 1.5, 3.0))
        sx, sy = _standardized(random_path_set(rng, 10), random_path_set(rng, 8))
        nn = nearest_neighbor_assign(sx, sy, cfg)
        for pair in nn.pairs():
            assert pair.d_r == pytest.approx(composite_distance(pair.distances, cfg), abs=1e-12)


class TestSetDistances:
    """HRT and CRT."""

    def test_identity(self, sample_path_set):
        """Test HRT and CRT of a set with itself."""
        assert hausdorff_rt(sample_path_set, sample_path_set).value == 0.0
        assert chamfer_rt(sample_path_set, sample_path_set).value == 0.0
        assert hausdorff_rt(sample_path_set, sample_path_set).components.as_tuple() == (0.0, 0.0, 0.0, 0.0)

    @pytest.mark.parametrize("mode", list(HrtComponentMode))
    def test_singletons(self, make_path, mode):
        """Test comparing singleton sets."""
        x = PathSet(rx_id="r", paths=[make_path(-60.0, 100.0, (10.0, 5.0), (170.0, -5.0))])
        y = PathSet(rx_id="r", paths=[make_path(-70.0, 140.0, (30.0, 0.0), (150.0, 10.0))])
        sx, sy = _standardized(x, y)
        fd = feature_distances(sx.tuples()[0], sy.tuples()[0])
        d_r = composite_distance(fd, MetricConfig())
        hrt = hausdorff_rt(x, y, MetricConfig(hrt_component_mode=mode))
        crt = chamfer_rt(x, y)
        assert hrt.value == pytest.approx(d_r, abs=1e-12)
        assert crt.value == pytest.approx(d_r, abs=1e-12)
        assert hrt.components.as_tuple() == pytest.approx(fd.as_tuple(), abs=1e-12)

    def test_two_by_three_direct_evaluation(self, make_path):
        """HRT and CRT match the set formulas evaluated over all six pairwise distances."""
        x = PathSet(rx_id="r", paths=[
            make_path(-60.0, 100.0, (0.0, 0.0), (180.0, 0.0)),
            make_path(-75.0, 220.0, (40.0, 10.0), (100.0, -5.0)),
        ])
        y = PathSet(rx_id="r", paths=[
            make_path(-62.0, 105.0, (5.0, 0.0), (175.0, 2.0)),
            make_path(-90.0, 400.0, (-120.0, 20.0), (-60.0, 30.0)),
            make_path(-74.0, 230.0, (45.0, 8.0), (95.0, -4.0)),
        ])
        cfg = MetricConfig()
        sx, sy = _standardized(x, y)
        d = [[composite_distance(feature_distances(v, w), cfg) for w in sy.tuples()] for v in sx.tuples()]
        row_min = [min(row) for row in d]
        col_min = [min(d[i][j] for i in range(2)) for j in range(3)]
        expected_hrt = 0.5 * max(row_min) + 0.5 * max(col_min)
        expected_crt = sum(row_min) / (2 * 2) + sum(col_min) / (2 * 3)
        assert hausdorff_rt(x, y, cfg).value == pytest.approx(expected_hrt, abs=1e-12)
        assert chamfer_rt(x, y, cfg).value == pytest.approx(expected_crt, abs=1e-12)

    def test_joint_argmax_components(self, make_path):
        """Test components at the joint argmax."""
        x = PathSet(rx_id="r", paths=[make_path(-60.0, 100.0), make_path(-80.0, 300.0, (90.0, 0.0))])
        y = PathSet(rx_id="r", paths=[make_path(-61.0, 101.0)])
        per_feature = hausdorff_rt(x, y, MetricConfig())
        joint = hausdorff_rt(x, y, MetricConfig(hrt_component_mode=HrtComponentMode.JOINT_ARGMAX))
        assert per_feature.value == joint.value
        for a, b in zip(joint.components.as_tuple(), per_feature.components.as_tuple()):
            assert a <= b + 1e-12

    @pytest.mark.parametrize("k", [0.5, 3.0, 10.0])
    def test_weight_scaling(self, rng, random_path_set, k):
        """Test scaling every weight."""
        x = random_path_set(rng, 20)
        y = random_path_set(rng, 15)
        base = MetricConfig(weights=(1.0, 0.5, 2.0, 1.5))
        scaled = MetricConfig(weights=tuple(k * w for w in base.weights))
        r1 = compare_path_sets(x, y, base)
        r2 = compare_path_sets(x, y, scaled)
        assert r2.hrt == pytest.approx(k * r1.hrt, rel=1e-12)
        assert r2.crt == pytest.approx(k * r1.crt, rel=1e-12)
        sx, sy = _standardized(x, y)
        for src, dst in ((sx, sy), (sy, sx)):
            assert np.array_equal(
                nearest_neighbor_assign(src, dst, base).target_index,
                nearest_neighbor_assign(src, dst, scaled).target_index,
            )

    def test_power_only_offsets_leave_geometry_at_zero(self, sample_path_set):
        """Small per-path power offsets keep identity pairing; only the power component moves."""
        offsets = (0.3, -0.2, 0.1, -0.3)
        y = PathSet(rx_id="r1", paths=[
            p.model_copy(update={"power_dbm": p.power_dbm + dp}) for p, dp in zip(sample_path_set.paths, offsets)
        ])
        result = compare_path_sets(sample_path_set, y)
        for comps in (result.hrt_components, result.crt_components):
            assert comps.d_tau == 0.0
            assert comps.d_dod == 0.0
            assert comps.d_doa == 0.0
            assert comps.d_p > 0.0

    def test_delay_only_value_uses_delay_component(self, rng, random_path_set):
        """Test delay-only values using the delay component."""
        cfg = MetricConfig(assignment_mode=AssignmentMode.DELAY_ONLY)
        x = random_path_set(rng, 9)
        y = random_path_set(rng, 11)
        sx, sy = _standardized(x, y)
        xy = nearest_neighbor_assign(sx, sy, cfg)
        yx = nearest_neighbor_assign(sy, sx, cfg)
        expected = 0.5 * np.max(xy.components[:, 0]) + 0.5 * np.max(yx.components[:, 0])
        assert hausdorff_rt(x, y, cfg).value == pytest.approx(expected, abs=1e-15)


class TestComparePathSets:
    """Full per-receiver comparison."""

    def test_both_empty(self):
        """Test comparing two empty sets."""
        result = compare_path_sets(PathSet(rx_id="r"), PathSet(rx_id="r"))
        assert result.status == ComparisonStatus.BOTH_EMPTY
        assert result.hrt == 0.0
        assert result.crt == 0.0
        assert result.hrt_components == FeatureDistances()

    def test_coverage_mismatch(self, sample_path_set):
        """Test a coverage mismatch."""
        result = compare_path_sets(sample_path_set, PathSet(rx_id="r1"))
        assert result.status == ComparisonStatus.COVERAGE_MISMATCH
        assert result.hrt is None
        assert result.crt is None
        assert result.hrt_angles_deg is None
        assert result.n_paths == (4, 0)
        assert all(v is None for v in result.channels().values())

    def test_identical(self, sample_path_set):
        """Test comparing identical sets."""
        result = compare_path_sets(sample_path_set, sample_path_set)
        assert result.is_ok
        assert result.hrt == 0.0
        assert result.crt == 0.0
        assert result.hrt_angles_deg == (0.0, 0.0)

    def test_angles_in_degrees(self, make_path):
        """Test angle channels in degrees."""
        x = PathSet(rx_id="r", paths=[make_path(dod=(0.0, 0.0))])
        y = PathSet(rx_id="r", paths=[make_path(dod=(90.0, 0.0))])
        result = compare_path_sets(x, y)
        assert result.hrt_angles_deg[0] == pytest.approx(90.0)
        assert result.channels()["crt_ddod_deg"] == pytest.approx(90.0)

    def test_crt_not_above_hrt(self, rng, random_path_set):
        """Test CRT never exceeding HRT."""
        result = compare_path_sets(random_path_set(rng, 40), random_path_set(rng, 33))
        assert result.crt <= result.hrt + 1e-12

    def test_power_threshold(self, sample_path_set):
        """Test applying a power threshold."""
        kept = apply_power_threshold(sample_path_set, -80.0)
        assert [p.power_dbm for p in kept.paths] == [-60.0, -72.0, -80.0]
        assert apply_power_threshold(sample_path_set, None) is sample_path_set

    def test_power_threshold_can_empty_a_set(self, sample_path_set, make_path):
        """Test a power threshold emptying a set."""
        weak = PathSet(rx_id="r1", paths=[make_path(power_dbm=-120.0)])
        result = compare_path_sets(sample_path_set, weak, MetricConfig(power_threshold_dbm=-100.0))
        assert result.status == ComparisonStatus.COVERAGE_MISMATCH
        assert result.n_paths == (4, 0)

    def test_power_threshold_applied_before_standardization(self, sample_path_set, make_path):
        """Test thresholding before standardization."""
        other = PathSet(rx_id="r1", paths=[
            make_path(-66.0, 120.0, (10.0, 0.0), (170.0, 0.0)),
            make_path(-90.0, 300.0, (-80.0, 0.0), (50.0, -10.0)),
        ])
        cfg = MetricConfig(power_threshold_dbm=-75.0)
        filtered = compare_path_sets(sample_path_set, other, cfg)
        direct = compare_path_sets(apply_power_threshold(sample_path_set, -75.0), apply_power_threshold(other, -75.0))
        assert filtered == direct
        assert filtered.n_paths == (2, 1)

    def test_channels_complete(self, sample_path_set, make_path):
        """Test every channel being exported."""
        other = PathSet(rx_id="r1", paths=[make_path(-65.0, 120.0)])
        channels = compare_path_sets(sample_path_set, other).channels()
        assert len(channels) == 10
        assert all(v is not None and math.isfinite(v) for v in channels.values())
