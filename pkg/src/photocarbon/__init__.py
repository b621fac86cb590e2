from pathlib import Path

# Package version
__version__ = "0.1.0"

# Package data files
def get_data_path():
    """Get path to package data files"""
    return Path(__file__).parent / "data"

# Expose core components
from .core.quantities import (
    Area,
    CarbonIntensity,
    CarbonMass,
    Energy,
    Length,
    PerAreaCoefficient,
    Power,
    TimeSpan,
    convert,
)
from .core.flow import aggregate_flow, parse_flow, parse_step_catalog
from .core.yield_model import YieldParams, dies_per_wafer, effective_area, poisson_yield
from .core.types import ChipSpec, FabProfile, FootprintReport, PackageSpec, Scenario, Workload
from .core.engine import compare, compare_suite, scenario_footprint
from .core.datasets import load_bundled_scenario, load_ci_table, load_presets, load_scenario
from .cli import app

__all__ = [
    "Area",
    "CarbonIntensity",
    "CarbonMass",
    "Energy",
    "Length",
    "PerAreaCoefficient",
    "Power",
    "TimeSpan",
    "convert",
    "parse_flow",
    "parse_step_catalog",
    "aggregate_flow",
    "YieldParams",
    "poisson_yield",
    "effective_area",
    "dies_per_wafer",
    "FabProfile",
    "ChipSpec",
    "PackageSpec",
    "Workload",
    "Scenario",
    "FootprintReport",
    "scenario_footprint",
    "compare",
    "compare_suite",
    "load_presets",
    "load_ci_table",
    "load_scenario",
    "load_bundled_scenario",
    "get_data_path",
    "app"
]
