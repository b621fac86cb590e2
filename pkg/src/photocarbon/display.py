import csv
import io
from typing import Dict, List, Optional, Sequence, Union

import typer
from pydantic import BaseModel, Field
from rich.box import SIMPLE_HEAVY
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from .core.config import ReportFormat
from .core.datasets import PresetTable
from .core.flow import FlowAggregate, ProcessFlow
from .core.quantities import Area, Energy
from .core.sweep import SweepResult
from .core.types import COMPARED_FIELDS, ChipEmbodied, ChipKind, ComparisonReport, FootprintReport, SuiteComparison
from .core.yield_model import DiesPerWafer, YieldParams, YieldPoint

Value = Union[int, float, str]


class Metric(BaseModel):
    name: str
    value: Value
    unit: str = ""


class MetricReport(BaseModel):
    """A flat list of named values; rendered as `metric,value,unit` CSV"""
    title: str
    metrics: List[Metric] = Field(default_factory=list)

    def add(self, name: str, value: Value, unit: str = "") -> None:
        self.metrics.append(Metric(name=name, value=value, unit=unit))

    def value(self, name: str) -> Value:
        for metric in self.metrics:
            if metric.name == name:
                return metric.value
        raise KeyError(name)


class RowReport(BaseModel):
    """A table with a fixed column order; rendered as wide CSV"""
    title: str
    columns: List[str]
    rows: List[List[Value]] = Field(default_factory=list)


Report = Union[MetricReport, RowReport]


def format_value(value: Value) -> str:
    """Fixed 6-significant-digit formatting shared by every output format."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_csv(report: Report) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if isinstance(report, MetricReport):
        writer.writerow(["metric", "value", "unit"])
        for m in report.metrics:
            writer.writerow([m.name, format_value(m.value), m.unit])
    else:
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def render_keyvalue(report: Report) -> str:
    if isinstance(report, MetricReport):
        lines = [f"{m.name}={format_value(m.value)}" for m in report.metrics]
    else:
        lines = [
            f"{index}.{column}={format_value(value)}"
            for index, row in enumerate(report.rows)
            for column, value in zip(report.columns, row)
        ]
    return "".join(line + "\n" for line in lines)


class ReportDisplay:
    def __init__(self):
        self.console = Console(highlight=False)
        self.err_console = Console(stderr=True, highlight=False)
        self.color_scheme = {
            'title': 'cyan',
            'value': 'green',
            'unit': 'magenta',
            'border': 'white',
            'error': 'red'
        }

    def display_error(self, message: str, details: Optional[str] = None) -> None:
        """Display an error panel on stderr; plain lines when stderr is not a terminal"""
        if not self.err_console.is_terminal:
            self.err_console.print(f"error: {message}", markup=False, soft_wrap=True)
            if details:
                self.err_console.print(details, markup=False, soft_wrap=True)
            return
        error_panel = Panel(
            Text(f"{message}\n\n{details}" if details else message, style=self.color_scheme['error']),
            title="[bold]ERROR[/]",
            border_style=self.color_scheme['error'],
            title_align="left"
        )
        self.err_console.print(error_panel)

    def _table(self, report: Report) -> Table:
        table = Table(
            title=f"[bold {self.color_scheme['title']}]{report.title}[/]",
            box=SIMPLE_HEAVY,
            border_style=self.color_scheme['border'],
            header_style=f"bold {self.color_scheme['title']}",
        )
        if isinstance(report, MetricReport):
            table.add_column("Metric", style=self.color_scheme['title'], no_wrap=True)
            table.add_column("Value", style=self.color_scheme['value'], justify="right", no_wrap=True)
            table.add_column("Unit", style=self.color_scheme['unit'], no_wrap=True)
            for m in report.metrics:
                table.add_row(m.name, format_value(m.value), m.unit)
        else:
            for column in report.columns:
                table.add_column(column, justify="right", no_wrap=True)
            for row in report.rows:
                table.add_row(*(format_value(v) for v in row))
        return table

    def _table_width(self, report: Report) -> int:
        if isinstance(report, MetricReport):
            cells = [[m.name, format_value(m.value), m.unit] for m in report.metrics]
            header = ["Metric", "Value", "Unit"]
        else:
            cells = [[format_value(v) for v in row] for row in report.rows]
            header = report.columns
        widths = [len(h) for h in header]
        for row in cells:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]
        return max(sum(widths) + 3 * len(widths) + 4, len(report.title) + 4)

    def show(self, report: Report, fmt: ReportFormat = ReportFormat.TABLE) -> None:
        """Write a report to stdout in the requested format"""
        if fmt is ReportFormat.CSV:
            typer.echo(render_csv(report), nl=False)
        elif fmt is ReportFormat.KEYVALUE:
            typer.echo(render_keyvalue(report), nl=False)
        else:
            width = max(self.console.width, self._table_width(report))
            self.console.print(self._table(report), width=width)


# ---------------------------------------------------------------------------
# report builders
# ---------------------------------------------------------------------------

def epa_report(
    flow: ProcessFlow,
    aggregate: FlowAggregate,
    layers: Dict[str, Energy],
    presets: Optional[PresetTable] = None,
) -> MetricReport:
    report = MetricReport(title=f"EPA of {flow.name}")
    report.add("flow", flow.name)
    report.add("wafer_diameter", flow.wafer_diameter.value, "mm")
    report.add("edge_exclusion", flow.edge_exclusion.value, "mm")
    report.add("usable_wafer_area", aggregate.usable_wafer_area.value, "cm2")
    report.add("total_energy_per_wafer", aggregate.total_energy_per_wafer.value, "kWh")
    report.add("total_ghg_per_wafer", aggregate.total_ghg_per_wafer.value, "g")
    report.add("epa", aggregate.epa.value, "kWh/cm2")
    report.add("gpa", aggregate.gpa.value, "g/cm2")
    for name, energy in layers.items():
        report.add(f"layer.{name}.energy", energy.value, "kWh")
    for category, energy in aggregate.per_category_energy.items():
        report.add(f"category.{category.value}.energy", energy.value, "kWh")
    if presets is not None:
        for preset in presets.as_list():
            value = preset.fab_profile.epa.value
            report.add(f"preset.{preset.node_name}.epa", value, "kWh/cm2")
            ratio = value / aggregate.epa.value if aggregate.epa.value > 0 else float("inf")
            report.add(f"preset.{preset.node_name}.epa_ratio", ratio, "x")
    return report


def yield_point_report(
    params: YieldParams,
    area: Area,
    yield_value: float,
    effective: Area,
    dies: DiesPerWafer,
    good_dies: int,
) -> MetricReport:
    report = MetricReport(title="Poisson yield")
    report.add("defect_density", params.defect_density, "1/cm2")
    report.add("area", area.value, "cm2")
    report.add("critical_area_fraction", params.critical_area_fraction)
    report.add("yield", yield_value)
    report.add("effective_area", effective.value, "cm2")
    report.add("dies_per_wafer", dies.count)
    report.add("good_dies_per_wafer", good_dies)
    return report


YIELD_CURVE_COLUMNS = ["defect_density_per_cm2", "critical_area_fraction", "area_cm2", "yield", "effective_area_cm2"]


def yield_curve_report(points: Sequence[YieldPoint]) -> RowReport:
    report = RowReport(title="Yield curve", columns=list(YIELD_CURVE_COLUMNS))
    for p in points:
        report.rows.append([
            p.defect_density,
            p.critical_area_fraction,
            p.area_cm2,
            p.yield_value,
            p.area_cm2 / p.yield_value if p.yield_value > 0 else float("inf"),
        ])
    return report


def _chip_metrics(report: MetricReport, prefix: str, chip: ChipEmbodied) -> None:
    report.add(f"{prefix}yield", chip.yield_value)
    report.add(f"{prefix}effective_area", chip.effective_area.value, "cm2")
    report.add(f"{prefix}fab_energy", chip.fab_energy.value, "g")
    report.add(f"{prefix}ghg", chip.ghg.value, "g")
    report.add(f"{prefix}material", chip.material.value, "g")
    report.add(f"{prefix}embodied", chip.total.value, "g")


def embodied_report(
    preset: str,
    chip: ChipEmbodied,
    params: YieldParams,
    dies: DiesPerWafer,
    good_dies: int,
    packaging: float,
) -> MetricReport:
    report = MetricReport(title=f"Embodied carbon of a {chip.area.value:.6g} cm2 {preset} chip")
    report.add("preset", preset)
    report.add("kind", chip.kind.value)
    report.add("area", chip.area.value, "cm2")
    report.add("defect_density", params.defect_density, "1/cm2")
    report.add("critical_area_fraction", params.critical_area_fraction)
    report.add("dies_per_wafer", dies.count)
    report.add("good_dies_per_wafer", good_dies)
    _chip_metrics(report, "", chip)
    report.add("packaging", packaging, "g")
    report.add("total", chip.total.value + packaging, "g")
    return report


def footprint_metrics(report: MetricReport, r: FootprintReport, prefix: str = "") -> None:
    report.add(f"{prefix}scenario", r.scenario)
    report.add(f"{prefix}workload", r.workload)
    report.add(f"{prefix}runtime", r.runtime.value, "h")
    report.add(f"{prefix}lifetime", r.lifetime.value, "h")
    report.add(f"{prefix}energy", r.energy.value, "kWh")
    report.add(f"{prefix}operational", r.operational.value, "g")
    report.add(f"{prefix}embodied_total", r.embodied_total.value, "g")
    report.add(f"{prefix}embodied_amortized", r.embodied_amortized.value, "g")
    report.add(f"{prefix}total", r.total.value, "g")
    if r.carbon_per_inference is not None:
        report.add(f"{prefix}carbon_per_inference", r.carbon_per_inference.value, "g")
    for name, chip in r.per_chip.items():
        report.add(f"{prefix}chip.{name}.kind", chip.kind.value)
        report.add(f"{prefix}chip.{name}.area", chip.area.value, "cm2")
        _chip_metrics(report, f"{prefix}chip.{name}.", chip)
    for name, packaging in r.per_package_packaging.items():
        report.add(f"{prefix}package.{name}.packaging", packaging.value, "g")
    for kind, share in r.kind_shares.items():
        report.add(f"{prefix}kind.{kind.value}.embodied", share.embodied.value, "g")
        report.add(f"{prefix}kind.{kind.value}.embodied_share", share.embodied_share)
        report.add(f"{prefix}kind.{kind.value}.area_share", share.area_share)


def footprint_report(r: FootprintReport) -> MetricReport:
    report = MetricReport(title=f"Carbon footprint of {r.scenario} ({r.workload})")
    footprint_metrics(report, r)
    return report


def _comparison_metrics(report: MetricReport, c: ComparisonReport, prefix: str = "") -> None:
    for name in COMPARED_FIELDS:
        f = c.by_field[name]
        report.add(f"{prefix}{name}_a", f.a.value, "g")
        report.add(f"{prefix}{name}_b", f.b.value, "g")
        report.add(f"{prefix}{name}_ratio", f.ratio, "x")
        report.add(f"{prefix}{name}_delta", f.delta_g, "g")
        report.add(f"{prefix}{name}_relative_delta", f.relative_delta)
        report.add(f"{prefix}{name}_lower", f.lower)


def comparison_report(c: ComparisonReport) -> MetricReport:
    report = MetricReport(title=f"{c.b_name} relative to {c.a_name} ({c.workload})")
    report.add("a", c.a_name)
    report.add("b", c.b_name)
    report.add("workload", c.workload)
    _comparison_metrics(report, c)
    return report


def suite_comparison_report(s: SuiteComparison) -> MetricReport:
    report = MetricReport(title=f"{s.b_name} relative to {s.a_name}")
    report.add("a", s.a_name)
    report.add("b", s.b_name)
    for workload, c in s.comparisons.items():
        _comparison_metrics(report, c, f"{workload}.")
    for name, ratio in s.mean_ratios.items():
        report.add(f"mean.{name}_ratio", ratio, "x")
    return report


SWEEP_COLUMNS = [
    "runtime_h", "lifetime_h", "energy_kwh", "operational_g", "embodied_total_g", "embodied_amortized_g",
    "total_g", "carbon_per_inference_g",
]


def sweep_report(result: SweepResult) -> RowReport:
    """One row per swept value; per-chip, per-package and per-kind columns follow the fixed ones."""
    first = result.rows[0].report if result.rows else None
    chips = list(first.per_chip) if first else []
    packages = list(first.per_package_packaging) if first else []
    kinds = [k for k in ChipKind if first and k in first.kind_shares]
    report = RowReport(
        title=f"Sweep of {result.parameter}",
        columns=[
            result.parameter,
            *SWEEP_COLUMNS,
            *(f"chip.{c}.embodied_g" for c in chips),
            *(f"package.{p}.packaging_g" for p in packages),
            *(f"kind.{k.value}.embodied_share" for k in kinds),
            *(f"kind.{k.value}.area_share" for k in kinds),
        ],
    )
    for row in result.rows:
        r = row.report
        report.rows.append([
            row.value,
            r.runtime.value,
            r.lifetime.value,
            r.energy.value,
            r.operational.value,
            r.embodied_total.value,
            r.embodied_amortized.value,
            r.total.value,
            r.carbon_per_inference.value if r.carbon_per_inference is not None else "",
            *(r.per_chip[c].total.value for c in chips),
            *(r.per_package_packaging[p].value for p in packages),
            *(r.kind_shares[k].embodied_share for k in kinds),
            *(r.kind_shares[k].area_share for k in kinds),
        ])
    return report
