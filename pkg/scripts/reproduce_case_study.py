"""Regenerate every table of the photonic accelerator case study as CSV.

    python scripts/reproduce_case_study.py results/

Writes the node EPA comparison, the yield curves, the per-chip breakdown of
the photonic-electronic accelerator and its comparison against the
systolic array for every workload.
"""

from pathlib import Path

import typer
from rich.console import Console

from photocarbon.core.datasets import (
    bundled_path,
    load_bundled_catalog,
    load_bundled_ci_table,
    load_bundled_flow,
    load_bundled_presets,
    load_scenario_suite_file,
)
from photocarbon.core.engine import compare_suite, scenario_footprint
from photocarbon.core.flow import aggregate_flow, layer_energy
from photocarbon.core.yield_model import DEFAULT_CURVE_DEFECT_DENSITIES, area_grid, yield_curve
from photocarbon.display import (
    epa_report,
    footprint_report,
    render_csv,
    suite_comparison_report,
    yield_curve_report,
)

console = Console(stderr=True)


def main(
    out_dir: Path = typer.Argument(Path("results"), help="Directory for the CSV files"),
    max_area: float = typer.Option(8.0, "--max-area", help="Largest die area of the yield curves (cm2)"),
    steps: int = typer.Option(32, "--steps", min=2, help="Areas per yield curve"),
):
    out_dir.mkdir(parents=True, exist_ok=True)
    presets, ci_table = load_bundled_presets(), load_bundled_ci_table()
    flow, catalog = load_bundled_flow(), load_bundled_catalog()

    files = {
        "epa_by_node.csv": epa_report(flow, aggregate_flow(flow, catalog), layer_energy(flow, catalog), presets),
        "yield_curves.csv": yield_curve_report(
            yield_curve(DEFAULT_CURVE_DEFECT_DENSITIES, area_grid(max_area / steps, max_area, steps))
        ),
    }

    adept = load_scenario_suite_file(bundled_path("adept.scenario"), presets, ci_table)
    systolic = load_scenario_suite_file(bundled_path("systolic.scenario"), presets, ci_table)
    files["adept_breakdown.csv"] = footprint_report(scenario_footprint(adept.default))
    files["systolic_breakdown.csv"] = footprint_report(scenario_footprint(systolic.default))
    comparison = compare_suite(adept, systolic)
    files["adept_vs_systolic.csv"] = suite_comparison_report(comparison)

    for name, report in files.items():
        (out_dir / name).write_text(render_csv(report), encoding="utf-8")
        console.print(f"wrote {out_dir / name}")

    for workload, c in comparison.comparisons.items():
        console.print(f"{workload}: systolic / adept total = {c.by_field['total'].ratio:.3f}")
    console.print(f"mean total ratio = {comparison.mean_ratios['total']:.3f}")


if __name__ == "__main__":
    typer.run(main)
