"""Main CLI interface for gridwarp."""

import functools
import json
import sys
from pathlib import Path
from typing import Callable, List, Optional

import click
from rich.console import Console
from rich.table import Table

from gridwarp import __version__
from gridwarp.core import bench as bench_mod
from gridwarp.core import io
from gridwarp.core.metrics import DEFAULT_TOLERANCE, config_digest, evaluate
from gridwarp.core.reconstruct import reconstruct_image
from gridwarp.core.synth_scene import emit_ground_truth, render_scene
from gridwarp.errors import ConfigError, GridwarpError, InvalidInputError, SceneInvalidError
from gridwarp.log import configure_logging
from gridwarp.models.report import Correspondence, RunReport
from gridwarp.models.scene import SceneConfig
from gridwarp.models.warp import CostKind, EndpointMode, RiverMethod

console = Console()

EXIT_USAGE = 2
EXIT_PIPELINE = 3

MODE_CHOICES = {"fixed": EndpointMode.FIXED, "free": EndpointMode.FREE_J}
COST_CHOICES = {"abs": CostKind.ABSOLUTE, "sq": CostKind.SQUARED}

U64 = click.IntRange(0, 2**64 - 1)


def reports_errors(fn: Callable) -> Callable:
    """Turn gridwarp errors into a red message and the matching exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, InvalidInputError, SceneInvalidError) as e:
            console.print(f"[red]Error: {e}[/red]")
            sys.exit(EXIT_USAGE)
        except GridwarpError as e:
            console.print(f"[red]Pipeline failed: {e}[/red]")
            sys.exit(EXIT_PIPELINE)

    return wrapper


def _load_config(
    config_path: str,
    seed: Optional[int] = None,
    mode: Optional[str] = None,
    cost: Optional[str] = None,
    method: Optional[str] = None,
) -> SceneConfig:
    cfg = io.load_scene_config(config_path)
    pipeline_update = {}
    if mode is not None:
        pipeline_update["mode"] = MODE_CHOICES[mode]
    if cost is not None:
        pipeline_update["cost"] = COST_CHOICES[cost]
    if method is not None:
        pipeline_update["method"] = RiverMethod(method)
    update = {}
    if pipeline_update:
        update["pipeline"] = cfg.pipeline.model_copy(update=pipeline_update)
    if seed is not None:
        update["seed"] = seed
    return cfg.model_copy(update=update) if update else cfg


def _out_dir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


@click.group()
@click.version_option(version=__version__, prog_name="gridwarp")
@click.option("--verbose", "-v", is_flag=True, help="Show debug logging")
def main(verbose: bool):
    """Gridwarp - 2D-DTW grid matching and structured-light height maps."""
    configure_logging(verbose)


@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True, help="Scene config JSON")
@click.option("--seed", type=U64, default=None, help="Override the config seed")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory")
@reports_errors
def simulate(config_path: str, seed: Optional[int], out: str):
    """Render a synthetic scene and write its ground truth."""
    cfg = _load_config(config_path, seed=seed)
    gt = emit_ground_truth(cfg)
    image = render_scene(cfg)
    out_dir = _out_dir(out)
    io.write_pgm(out_dir / "image.pgm", image)
    io.write_ground_truth_csv(out_dir / "ground_truth.csv", gt)
    hidden = int((~gt.visible).sum())
    console.print(f"[green]✅ Wrote image.pgm and ground_truth.csv to {out_dir}[/green]")
    if hidden:
        console.print(f"[yellow]{hidden} node(s) are hidden or outside the visible field[/yellow]")


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True, help="Scene config JSON")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory")
@click.option("--mode", type=click.Choice(sorted(MODE_CHOICES)), default=None, help="River-path endpoint mode")
@click.option("--cost", type=click.Choice(sorted(COST_CHOICES)), default=None, help="Local DTW cost")
@click.option("--method", type=click.Choice([m.value for m in RiverMethod]), default=None, help="River-path tracer")
@click.option(
    "--match",
    "correspondence",
    type=click.Choice([Correspondence.GRID.value, Correspondence.NEAREST.value, Correspondence.LOCAL_MIN.value]),
    default=Correspondence.GRID.value,
    help="Correspondence strategy",
)
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker processes (overrides GRIDWARP_THREADS)")
@reports_errors
def reconstruct(
    image: str,
    config_path: str,
    out: str,
    mode: Optional[str],
    cost: Optional[str],
    method: Optional[str],
    correspondence: str,
    threads: Optional[int],
):
    """Extract, match and triangulate a height map from IMAGE."""
    cfg = _load_config(config_path, mode=mode, cost=cost, method=method)
    img = io.read_pgm(image)
    if img.shape != (cfg.render.height, cfg.render.width):
        console.print(
            f"[yellow]Image is {img.shape[1]}x{img.shape[0]}, config expects "
            f"{cfg.render.width}x{cfg.render.height}[/yellow]"
        )
    rec = reconstruct_image(img, cfg, Correspondence(correspondence), workers=threads)

    out_dir = _out_dir(out)
    io.write_heightmap_csv(out_dir / "heightmap.csv", rec.heightmap)
    io.write_pgm(out_dir / "heightmap.pgm", io.heightmap_image(rec.heightmap))
    io.write_matches_csv(out_dir / "matches.csv", rec.matches)
    io.write_points_csv(out_dir / "intersections.csv", rec.points)
    if rec.match is not None:
        io.write_landscape_csv(out_dir / "d_cols.csv", rec.match.d_cols)
        io.write_landscape_csv(out_dir / "d_rows.csv", rec.match.d_rows)
        io.write_path_csv(out_dir / "path_cols.csv", rec.match.column_path)
        io.write_path_csv(out_dir / "path_rows.csv", rec.match.row_path)
        io.write_mappings_csv(out_dir / "mappings.csv", rec.match.column_mapping, rec.match.row_mapping)
    io.write_json(
        out_dir / "timings.json",
        {"stages": rec.timings, "seconds_per_frame": sum(rec.timings.values())},
    )
    hm = rec.heightmap
    console.print(
        f"[green]✅ Reconstructed {int(hm.valid.sum())}/{hm.valid.size} nodes "
        f"from {len(rec.points)} intersections into {out_dir}[/green]"
    )


def _report_table(report: RunReport) -> Table:
    table = Table(title="Height map evaluation")
    table.add_column("Metric", style="cyan", no_wrap=True)
    table.add_column("Value", style="green")

    def mm(value: Optional[float]) -> str:
        return "n/a" if value is None else f"{value * 1e3:.4f} mm"

    table.add_row("RMSE", mm(report.rmse))
    table.add_row("Median |error|", mm(report.median_abs_error))
    table.add_row("Success rate", f"{report.success_rate:.3f} ({report.n_valid}/{report.n_nodes})")
    table.add_row(f"Inlier rate (<= {report.height_tolerance * 1e3:g} mm)", f"{report.inlier_rate:.3f}")
    if report.seconds_per_frame is not None:
        table.add_row("Seconds per frame", f"{report.seconds_per_frame:.4f}")
    return table


@main.command(name="evaluate")
@click.argument("heightmap", type=click.Path(exists=True, dir_okay=False))
@click.argument("ground_truth", type=click.Path(exists=True, dir_okay=False))
@click.option("--tolerance", type=float, default=DEFAULT_TOLERANCE, show_default=True, help="Inlier height tolerance in meters")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="Scene config, recorded as a digest")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory (default: next to HEIGHTMAP)")
@reports_errors
def evaluate_cmd(
    heightmap: str,
    ground_truth: str,
    tolerance: float,
    config_path: Optional[str],
    out: Optional[str],
):
    """Compare HEIGHTMAP against GROUND_TRUTH and write report.json."""
    hm = io.read_heightmap_csv(heightmap)
    truth = io.read_ground_truth_heightmap(ground_truth)
    timings_path = Path(heightmap).with_name("timings.json")
    timings = None
    if timings_path.exists():
        timings = json.loads(timings_path.read_text(encoding="utf-8")).get("stages")
    digest = config_digest(io.load_scene_config(config_path)) if config_path else None
    report = evaluate(hm, truth, tolerance, timings=timings, digest=digest)

    out_dir = _out_dir(out) if out else Path(heightmap).parent
    io.write_json(out_dir / "report.json", report)
    console.print(_report_table(report))


def _parse_sizes(ctx, param, value: str) -> List[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise click.BadParameter("sizes must be comma-separated integers") from e


@main.command(name="bench")
@click.option("--sizes", default="8,16,32", callback=_parse_sizes, show_default=True, help="Comma-separated grid sizes N")
@click.option("--trials", type=click.IntRange(min=1), default=3, show_default=True, help="Runs per size")
@click.option("--seed", type=U64, default=0, show_default=True, help="Seed for the random grids")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker processes (overrides GRIDWARP_THREADS)")
@reports_errors
def bench_cmd(sizes: List[int], trials: int, seed: int, out: str, threads: Optional[int]):
    """Time matching on random N x N grids and fit the log-log slope."""
    rows = bench_mod.run_bench(sizes, trials, seed, workers=threads)
    slope = bench_mod.fit_slope(rows)
    out_dir = _out_dir(out)
    bench_mod.write_bench_csv(out_dir / "bench.csv", rows)
    bench_mod.plot_bench(out_dir / "bench.svg", rows, slope)

    table = Table(title="Matching time")
    table.add_column("N", style="cyan")
    table.add_column("Mean seconds", style="green")
    for row in rows:
        table.add_row(str(row.n), f"{row.mean_seconds:.5f}")
    console.print(table)
    if slope is None:
        console.print("[yellow]Single size: no slope fitted[/yellow]")
    else:
        console.print(f"[bold]Log-log slope:[/bold] {slope:.2f}")
