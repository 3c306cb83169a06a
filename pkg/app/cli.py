# app/cli.py
"""
raydiff command line.

  synth        trace a scene over a receiver layout and write a dataset
  compare      HRT/CRT per receiver between two datasets (+ grid map, plots)
  trajectory   time series of HRT/CRT along a trajectory
  consistency  CRT between neighboring receivers of one dataset
  summarize    channel means/maxima of a stored results file
  sweep        repeat a comparison for a set of power thresholds
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.core.config import Settings, get_settings
from app.core.exceptions import ConfigError, LayoutError, RaydiffError
from app.core.logging import configure_logging
from app.schemas.dataset import Dataset
from app.schemas.layout import GridLayout, ReceiverLayout, TrajectoryLayout
from app.schemas.metric import (
    CHANNELS,
    AssignmentMode,
    HrtComponentMode,
    MetricConfig,
    StandardizationScope,
)
from app.services import analysis, ingest, synthrt
from app.utils.svg import save_heatmap, save_line_chart

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


# ---------------------------------------------------------------------------
# Argument parsing helpers
# ---------------------------------------------------------------------------

def _floats(text: str, count: Optional[int] = None) -> Tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")
    if count is not None and len(values) != count:
        raise argparse.ArgumentTypeError(f"expected {count} comma-separated values, got '{text}'")
    return values


def _pair(text: str) -> Tuple[float, float]:
    return _floats(text, 2)


def _weights(text: str) -> Tuple[float, ...]:
    return _floats(text, 4)


def _ints(text: str) -> Tuple[int, int]:
    values = _floats(text, 2)
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected two integers, got '{text}'")
    return int(values[0]), int(values[1])


def _channels(text: str) -> List[str]:
    names = [c.strip() for c in text.split(",") if c.strip()]
    unknown = [c for c in names if c not in CHANNELS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown channel(s): {', '.join(unknown)}")
    return names


def _add_metric_flags(p: argparse.ArgumentParser) -> None:
    modes = p.add_mutually_exclusive_group()
    modes.add_argument("--assignment-mode", choices=[m.value for m in AssignmentMode], default=None)
    for mode in AssignmentMode:
        if mode != AssignmentMode.JOINT:
            modes.add_argument(f"--{mode.value}", dest="assignment_mode", action="store_const",
                               const=mode.value, help=f"shorthand for --assignment-mode {mode.value}")
    p.add_argument("--weights", type=_weights, help="w_tau,w_p,w_dod,w_doa")
    p.add_argument("--std-scope", choices=[s.value for s in StandardizationScope])
    p.add_argument("--power-threshold-dbm", type=float)
    p.add_argument("--hrt-components", choices=[m.value for m in HrtComponentMode])
    p.add_argument("--config", type=Path, help="JSON file with metric settings")
    strictness = p.add_mutually_exclusive_group()
    strictness.add_argument("--strict", dest="strict", action="store_true", default=True)
    strictness.add_argument("--lenient", dest="strict", action="store_false",
                            help="ignore unknown CSV columns with a warning")


def _add_region_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--region-center", type=_pair, help="x,y in meters")
    p.add_argument("--region-radius", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raydiff", description="Compare ray-tracing simulations with HRT/CRT distances.")
    parser.add_argument("--log-level", default=None)
    parser.add_argument("--workers", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="trace a synthetic scene")
    p.add_argument("scene", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--label", default=None)
    layout = p.add_mutually_exclusive_group(required=True)
    layout.add_argument("--layout", type=Path, help="JSON receiver layout")
    layout.add_argument("--grid-size", type=_ints, help="nx,ny")
    layout.add_argument("--trajectory", type=Path, help="CSV with t_s,x_m,y_m,z_m")
    p.add_argument("--grid-origin", type=_pair, default=(0.0, 0.0))
    p.add_argument("--grid-step", type=_pair, default=(2.0, 2.0))
    p.add_argument("--grid-height", type=float, default=1.5)

    for name, help_text in (("compare", "compare two datasets receiver by receiver"),
                            ("trajectory", "compare two datasets along a trajectory")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("a", type=Path)
        p.add_argument("b", type=Path)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--plot", action="store_true")
        p.add_argument("--channels", type=_channels, default=list(CHANNELS))
        _add_metric_flags(p)
        _add_region_flags(p)

    p = sub.add_parser("consistency", help="CRT between neighboring receivers")
    p.add_argument("a", type=Path)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_metric_flags(p)

    p = sub.add_parser("summarize", help="summarize a results.csv")
    p.add_argument("results", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _add_region_flags(p)

    p = sub.add_parser("sweep", help="compare over a set of power thresholds")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.add_argument("--thresholds", type=_floats, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_metric_flags(p)
    return parser


def build_metric_config(args: argparse.Namespace, settings: Settings) -> MetricConfig:
    """Flags override the --config file, which overrides settings defaults."""
    values = MetricConfig.from_settings(settings).model_dump(mode="json")
    if getattr(args, "config", None) is not None:
        try:
            values.update(json.loads(args.config.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}")
    flags = {
        "assignment_mode": args.assignment_mode,
        "weights": args.weights,
        "standardization_scope": args.std_scope,
        "power_threshold_dbm": args.power_threshold_dbm,
        "hrt_component_mode": args.hrt_components,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    try:
        return MetricConfig.model_validate(values)
    except ValidationError as exc:
        raise ConfigError(f"invalid metric configuration: {exc.errors()[0]['msg']}")


def _region(args: argparse.Namespace) -> Optional[Tuple[Tuple[float, float], float]]:
    if args.region_center is None and args.region_radius is None:
        return None
    if args.region_center is None or args.region_radius is None:
        raise ConfigError("--region-center and --region-radius go together")
    return args.region_center, args.region_radius


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _synth_layout(args: argparse.Namespace) -> ReceiverLayout:
    if args.layout is not None:
        return ingest.load_layout(args.layout)
    if args.trajectory is not None:
        return ingest.load_trajectory_csv(args.trajectory)
    nx, ny = args.grid_size
    try:
        return GridLayout(origin=args.grid_origin, nx=nx, ny=ny, dx=args.grid_step[0],
                          dy=args.grid_step[1], height=args.grid_height)
    except ValidationError as exc:
        raise LayoutError(f"invalid grid: {exc.errors()[0]['msg']}")


def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    scene = ingest.load_scene(args.scene)
    layout = _synth_layout(args)
    result = synthrt.trace(scene, layout, label=args.label or args.scene.stem, workers=settings.workers)
    ingest.write_dataset(result.dataset, args.out)
    return EXIT_OK


def _tx_marker(dataset: Dataset, layout: GridLayout) -> Optional[Tuple[float, float]]:
    tx = dataset.metadata.tx_position
    if tx is None:
        return None
    return ((tx[0] - layout.origin[0]) / layout.dx, (tx[1] - layout.origin[1]) / layout.dy)


def _plot_grid(grid, a: Dataset, channels: Sequence[str], out: Path) -> None:
    layout = grid.layout
    for channel in channels:
        values = [c.result.channels()[channel] if c.has_data else None for c in grid.cells]
        save_heatmap(layout.nx, layout.ny, values, channel, out / f"heatmap_{channel}.svg", marker=_tx_marker(a, layout))


def _plot_series(series, channels: Sequence[str], out: Path) -> None:
    times = [p.t_s for p in series.points]
    for channel in channels:
        values = [p.result.channels()[channel] if p.result.is_ok else None for p in series.points]
        save_line_chart(times, values, channel, out / f"series_{channel}.svg")


def _write_region(records, args: argparse.Namespace, out: Path) -> None:
    region = _region(args)
    if region is None:
        return
    summary = analysis.summarize_region(records, region[0], region[1])
    ingest.write_summary(summary, out / "region.json")


def cmd_compare(args: argparse.Namespace, settings: Settings) -> int:
    cfg = build_metric_config(args, settings)
    a = ingest.load_dataset(args.a, strict=args.strict)
    b = ingest.load_dataset(args.b, strict=args.strict)
    args.out.mkdir(parents=True, exist_ok=True)

    if isinstance(a.layout, GridLayout):
        grid = analysis.compare_grid(a, b, cfg, workers=settings.workers)
        records = analysis.grid_records(grid)
        ingest.write_records(records, args.out)
        analysis.export_grid_csv(grid, args.out / "grid.csv")
        if args.plot:
            _plot_grid(grid, a, args.channels, args.out)
    elif isinstance(a.layout, TrajectoryLayout):
        series = analysis.compare_trajectory(a, b, cfg, workers=settings.workers)
        records = analysis.trajectory_records(series)
        ingest.write_records(records, args.out)
        if args.plot:
            _plot_series(series, args.channels, args.out)
    else:
        pairing = ingest.pair_datasets(a, b)
        results = analysis.compare_many([(p.a, p.b) for p in pairing.pairs], cfg, settings.workers)
        records = ingest.result_records(results, a.layout)
        ingest.write_records(records, args.out)

    _write_region(records, args, args.out)
    return EXIT_OK


def cmd_trajectory(args: argparse.Namespace, settings: Settings) -> int:
    cfg = build_metric_config(args, settings)
    a = ingest.load_dataset(args.a, strict=args.strict)
    b = ingest.load_dataset(args.b, strict=args.strict)
    args.out.mkdir(parents=True, exist_ok=True)

    series = analysis.compare_trajectory(a, b, cfg, workers=settings.workers)
    records = analysis.trajectory_records(series)
    ingest.write_records(records, args.out)
    analysis.export_trajectory_csv(series, args.out / "trajectory.csv")
    if args.plot:
        _plot_series(series, args.channels, args.out)
    _write_region(records, args, args.out)
    return EXIT_OK


def cmd_consistency(args: argparse.Namespace, settings: Settings) -> int:
    if not args.radius > 0:
        raise ConfigError("--radius must be positive")
    cfg = build_metric_config(args, settings)
    a = ingest.load_dataset(args.a, strict=args.strict)
    report = analysis.spatial_consistency(a, args.radius, cfg, workers=settings.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    analysis.export_consistency_csv(report, args.out / "consistency.csv")
    return EXIT_OK


def cmd_summarize(args: argparse.Namespace, settings: Settings) -> int:
    records = ingest.read_results(args.results)
    region = _region(args)
    if region is None:
        summary = analysis.summarize_records(records)
    else:
        summary = analysis.summarize_region(records, region[0], region[1])
    args.out.parent.mkdir(parents=True, exist_ok=True)
    ingest.write_summary(summary, args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    cfg = build_metric_config(args, settings)
    a = ingest.load_dataset(args.a, strict=args.strict)
    b = ingest.load_dataset(args.b, strict=args.strict)
    sweep = analysis.sweep_power_thresholds(a, b, args.thresholds, cfg, workers=settings.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    analysis.export_sweep_csv(sweep, args.out / "sweep.csv")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "compare": cmd_compare,
    "trajectory": cmd_trajectory,
    "consistency": cmd_consistency,
    "summarize": cmd_summarize,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.log_level is not None:
        overrides["log_level"] = args.log_level
    if overrides:
        settings = settings.model_copy(update=overrides)
    configure_logging(settings.log_level)

    try:
        return COMMANDS[args.command](args, settings)
    except (RaydiffError, ValidationError) as exc:
        logger.error(str(exc))
        return EXIT_INVALID
    except OSError as exc:
        logger.error(f"I/O error: {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
