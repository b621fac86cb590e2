from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

import typer
from pydantic import BaseModel, ConfigDict

from .core.config import ReportFormat, Settings, get_config, setup_logging
from .core.datasets import (
    CarbonIntensityTable,
    PresetTable,
    bundled_path,
    load_bundled_ci_table,
    load_bundled_presets,
    load_catalog_file,
    load_ci_file,
    load_flow_file,
    load_presets_file,
    load_scenario_suite_file,
    CATALOG_FILE,
    FLOW_FILE,
)
from .core.engine import chip_embodied_breakdown, compare, compare_suite, scenario_footprint
from .core.errors import ConfigError, PhotocarbonError, handle_error
from .core.flow import aggregate_flow, layer_energy
from .core.quantities import Area
from .core.sweep import run_sweep
from .core.types import ChipSpec, Scenario, ScenarioSuite
from .core.yield_model import (
    DEFAULT_DEFECT_DENSITY,
    ELECTRONIC_CRITICAL_AREA_FRACTION,
    PHOTONIC_CRITICAL_AREA_FRACTION,
    YieldParams,
    area_grid,
    dies_per_wafer,
    effective_area,
    good_dies_per_wafer,
    poisson_yield,
    yield_curve,
)
from .display import (
    ReportDisplay,
    comparison_report,
    embodied_report,
    epa_report,
    footprint_report,
    suite_comparison_report,
    sweep_report,
    yield_curve_report,
    yield_point_report,
)

app = typer.Typer(
    help="photocarbon - carbon footprint of photonic and CMOS chips",
    rich_markup_mode="markdown",
    no_args_is_help=True
)


class CliState(BaseModel):
    """Options given before the command name"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    settings: Settings
    format: Optional[ReportFormat] = None
    presets_path: Optional[Path] = None
    ci_path: Optional[Path] = None


FormatOption = typer.Option(None, "--format", "-f", help="Output format: table, csv or keyvalue")
WorkloadOption = typer.Option(None, "--workload", "-w", help="Workload to evaluate (default: the scenario's default)")


@contextmanager
def handle_cli_errors(display: ReportDisplay) -> Iterator[None]:
    """Map failures to the documented exit codes: 1 computation, 2 usage/file."""
    try:
        yield
    except (typer.Exit, typer.Abort, typer.BadParameter):
        raise
    except FileNotFoundError as e:
        display.display_error(f"file not found: {e.filename or e}")
        raise typer.Exit(code=2)
    except OSError as e:
        display.display_error(f"cannot read {e.filename or ''}: {e.strerror or e}")
        raise typer.Exit(code=2)
    except PhotocarbonError as e:
        display.display_error(str(e))
        raise typer.Exit(code=e.exit_code)
    except Exception as e:
        info = handle_error(e)
        display.display_error(info.message, str(info.detail or ""))
        raise typer.Exit(code=1)


def _state(ctx: typer.Context) -> CliState:
    if not isinstance(ctx.obj, CliState):
        ctx.obj = CliState(settings=get_config())
    return ctx.obj


def _format(ctx: typer.Context, fmt: Optional[ReportFormat], default: Optional[ReportFormat] = None) -> ReportFormat:
    state = _state(ctx)
    return fmt or state.format or default or state.settings.default_format


def _presets(state: CliState) -> PresetTable:
    path = state.presets_path or state.settings.presets_path
    return load_presets_file(path) if path else load_bundled_presets()


def _ci_table(state: CliState) -> CarbonIntensityTable:
    path = state.ci_path or state.settings.ci_path
    return load_ci_file(path) if path else load_bundled_ci_table()


def _suite(state: CliState, path: Path) -> ScenarioSuite:
    return load_scenario_suite_file(path, _presets(state), _ci_table(state))


def _pick(suite: ScenarioSuite, workload: Optional[str]) -> Scenario:
    if workload is None:
        return suite.default
    if workload not in suite.scenarios:
        raise typer.BadParameter(
            f"unknown workload '{workload}' (available: {', '.join(suite.scenarios)})",
            param_hint="--workload",
        )
    return suite.scenarios[workload]


def _check_fraction(value: Optional[float]) -> Optional[float]:
    if value is not None and not (0 < value <= 1):
        raise typer.BadParameter(f"must be in (0, 1], got {value:g}", param_hint="--critical-fraction")
    return value


@app.callback()
def main_callback(
    ctx: typer.Context,
    format: Optional[ReportFormat] = FormatOption,
    presets: Optional[Path] = typer.Option(None, "--presets", help="Node preset table (default: bundled)"),
    ci: Optional[Path] = typer.Option(None, "--ci", help="Carbon-intensity table (default: bundled)"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only report errors on stderr"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging on stderr"),
):
    """
    ## photocarbon

    Embodied, operational and amortized carbon of photonic and CMOS chips:
    EPA from process flows, Poisson yield, scenario footprints, comparisons
    and parameter sweeps. Data goes to stdout, diagnostics to stderr.
    """
    display = ReportDisplay()
    try:
        settings = get_config()
    except ConfigError as e:
        display.display_error(str(e), str(e.detail.get("error", "")))
        raise typer.Exit(code=e.exit_code)
    setup_logging(settings, quiet=quiet, verbose=verbose)
    ctx.obj = CliState(settings=settings, format=format, presets_path=presets, ci_path=ci)


@app.command()
def epa(
    ctx: typer.Context,
    flow: Optional[Path] = typer.Argument(None, help="Flow file (default: bundled photonic flow)"),
    catalog: Optional[Path] = typer.Argument(None, help="Step catalog (default: bundled photonic catalog)"),
    compare_presets: bool = typer.Option(False, "--compare-presets", help="Add the EPA ratio of every preset"),
    format: Optional[ReportFormat] = FormatOption,
):
    """Aggregate a process flow into per-wafer energy, EPA and GPA."""
    display = ReportDisplay()
    with handle_cli_errors(display):
        state = _state(ctx)
        process_flow = load_flow_file(flow or bundled_path(FLOW_FILE))
        step_catalog = load_catalog_file(catalog or bundled_path(CATALOG_FILE))
        aggregate = aggregate_flow(process_flow, step_catalog)
        report = epa_report(
            process_flow,
            aggregate,
            layer_energy(process_flow, step_catalog),
            _presets(state) if compare_presets else None,
        )
        display.show(report, _format(ctx, format))


def _parse_sweep_area(text: str) -> List[float]:
    try:
        start, stop, steps = text.split(":")
        return area_grid(float(start), float(stop), int(steps))
    except (ValueError, PhotocarbonError) as e:
        raise typer.BadParameter(f"expected FROM:TO:STEPS with areas > 0, got {text!r} ({e})", param_hint="--sweep-area")


@app.command("yield")
def yield_(
    ctx: typer.Context,
    d0: Optional[List[float]] = typer.Option(None, "--d0", min=0, help="Defect density in 1/cm2 (repeatable with --sweep-area)"),
    area: Optional[float] = typer.Option(None, "--area", help="Die area in cm2"),
    critical_fraction: Optional[float] = typer.Option(None, "--critical-fraction", help="Critical-area fraction in (0, 1]"),
    sweep_area: Optional[str] = typer.Option(None, "--sweep-area", help="FROM:TO:STEPS die areas in cm2"),
    format: Optional[ReportFormat] = FormatOption,
):
    """Poisson yield of one die, or yield curves over a range of die areas."""
    display = ReportDisplay()
    state = _state(ctx)
    _check_fraction(critical_fraction)
    with handle_cli_errors(display):
        if sweep_area is not None:
            densities = d0 or state.settings.yield_curve_defect_densities
            fractions = (
                [critical_fraction] if critical_fraction is not None
                else [PHOTONIC_CRITICAL_AREA_FRACTION, ELECTRONIC_CRITICAL_AREA_FRACTION]
            )
            points = yield_curve(densities, _parse_sweep_area(sweep_area), fractions)
            display.show(yield_curve_report(points), _format(ctx, format))
            return

        if area is None or area <= 0:
            raise typer.BadParameter("a die area > 0 is required unless --sweep-area is given", param_hint="--area")
        if d0 and len(d0) > 1:
            raise typer.BadParameter("only one --d0 without --sweep-area", param_hint="--d0")
        params = YieldParams(
            defect_density=d0[0] if d0 else DEFAULT_DEFECT_DENSITY,
            critical_area_fraction=(
                critical_fraction if critical_fraction is not None else ELECTRONIC_CRITICAL_AREA_FRACTION
            ),
        )
        die = Area(area)
        value = poisson_yield(params, die)
        wafer = state.settings.wafer
        report = yield_point_report(
            params,
            die,
            value,
            effective_area(die, value),
            dies_per_wafer(die, wafer.diameter_mm, wafer.edge_exclusion_mm),
            good_dies_per_wafer(params, die, wafer.diameter_mm, wafer.edge_exclusion_mm),
        )
        display.show(report, _format(ctx, format))


@app.command()
def embodied(
    ctx: typer.Context,
    preset: str = typer.Option(..., "--preset", help="Node preset name, e.g. cmos_22nm"),
    area: float = typer.Option(..., "--area", help="Die area in cm2"),
    critical_fraction: Optional[float] = typer.Option(None, "--critical-fraction", help="Override the preset's critical-area fraction"),
    d0: Optional[float] = typer.Option(None, "--d0", min=0, help="Override the preset's defect density (1/cm2)"),
    packaging: float = typer.Option(0.0, "--packaging", min=0, help="Packaging carbon in gCO2e"),
    format: Optional[ReportFormat] = FormatOption,
):
    """Embodied carbon of a single chip built on a node preset."""
    display = ReportDisplay()
    state = _state(ctx)
    _check_fraction(critical_fraction)
    if area <= 0:
        raise typer.BadParameter(f"must be > 0, got {area:g}", param_hint="--area")
    with handle_cli_errors(display):
        presets = _presets(state)
        if preset not in presets:
            raise typer.BadParameter(
                f"unknown preset '{preset}' (available: {', '.join(presets.names)})", param_hint="--preset"
            )
        node = presets[preset]
        chip = ChipSpec.create(
            name=preset,
            area=Area(area),
            profile=node.fab_profile,
            kind=node.kind,
            critical_area_fraction=critical_fraction,
            defect_density=d0,
        )
        breakdown = chip_embodied_breakdown(chip)
        wafer = state.settings.wafer
        report = embodied_report(
            preset,
            breakdown,
            chip.yield_params,
            dies_per_wafer(chip.area, wafer.diameter_mm, wafer.edge_exclusion_mm),
            good_dies_per_wafer(chip.yield_params, chip.area, wafer.diameter_mm, wafer.edge_exclusion_mm),
            packaging,
        )
        display.show(report, _format(ctx, format))


@app.command()
def footprint(
    ctx: typer.Context,
    scenario: Path = typer.Argument(..., help="Scenario file"),
    workload: Optional[str] = WorkloadOption,
    format: Optional[ReportFormat] = FormatOption,
):
    """Operational, embodied and amortized carbon of a scenario."""
    display = ReportDisplay()
    with handle_cli_errors(display):
        chosen = _pick(_suite(_state(ctx), scenario), workload)
        display.show(footprint_report(scenario_footprint(chosen)), _format(ctx, format))


@app.command("compare")
def compare_(
    ctx: typer.Context,
    scenario_a: Path = typer.Argument(..., help="Baseline scenario (a)"),
    scenario_b: Path = typer.Argument(..., help="Scenario compared against it (b); ratios are b/a"),
    workload: Optional[str] = WorkloadOption,
    format: Optional[ReportFormat] = FormatOption,
):
    """Compare two scenarios; without --workload every shared workload is compared."""
    display = ReportDisplay()
    with handle_cli_errors(display):
        state = _state(ctx)
        suite_a, suite_b = _suite(state, scenario_a), _suite(state, scenario_b)
        if workload is not None:
            report = comparison_report(compare(_pick(suite_a, workload), _pick(suite_b, workload)))
        else:
            report = suite_comparison_report(compare_suite(suite_a, suite_b))
        display.show(report, _format(ctx, format))


@app.command()
def sweep(
    ctx: typer.Context,
    scenario: Path = typer.Argument(..., help="Scenario file"),
    param: str = typer.Option(..., "--param", "-p", help="Parameter path, e.g. lifetime_years or chip.<name>.area_cm2"),
    from_: float = typer.Option(..., "--from", help="First value"),
    to: float = typer.Option(..., "--to", help="Last value"),
    steps: int = typer.Option(5, "--steps", min=1, help="Number of values, both ends included"),
    workload: Optional[str] = WorkloadOption,
    format: Optional[ReportFormat] = FormatOption,
):
    """Evaluate a scenario over evenly spaced values of one parameter (plot-ready CSV)."""
    display = ReportDisplay()
    with handle_cli_errors(display):
        state = _state(ctx)
        chosen = _pick(_suite(state, scenario), workload)
        result = run_sweep(chosen, param, from_, to, steps, workers=state.settings.sweep_workers)
        display.show(sweep_report(result), _format(ctx, format, default=ReportFormat.CSV))


if __name__ == "__main__":
    app()
