"""
One-parameter sweeps over a scenario.

A parameter path names a numeric scenario field the way scenario files
spell it, e.g. ``lifetime_years``, ``workload.inference_count`` or
``chip.<name>.defect_density_per_cm2``. Each step rebuilds the scenario
with the new value and evaluates it independently, so steps can run in a
thread pool; rows always come back in sweep order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List

import numpy as np
from pydantic import BaseModel, ConfigDict

from .engine import scenario_footprint
from .errors import PhotocarbonError, SweepError
from .quantities import Area, CarbonIntensity, CarbonMass, Energy, Power, TimeSpan, epa, gpa, mpa
from .types import ChipSpec, DomainModel, FootprintReport, Scenario

logger = logging.getLogger("photocarbon.sweep")

Setter = Callable[[Scenario, float], Scenario]


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    report: FootprintReport


class SweepResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: str
    rows: List[SweepRow]


def _replace(model: DomainModel, **changes) -> DomainModel:
    return type(model).create(**{**dict(model), **changes})


def _with_workload(s: Scenario, **changes) -> Scenario:
    return _replace(s, workload=_replace(s.workload, **changes))


def _with_chip(s: Scenario, name: str, build: Callable[[ChipSpec], ChipSpec]) -> Scenario:
    system = [
        _replace(p, chips=[build(c) if c.name == name else c for c in p.chips]) for p in s.system
    ]
    return _replace(s, system=system)


def _with_all_chips(s: Scenario, build: Callable[[ChipSpec], ChipSpec]) -> Scenario:
    return _replace(s, system=[_replace(p, chips=[build(c) for c in p.chips]) for p in s.system])


def _profile_setter(field: str, make: Callable[[float], object]) -> Callable[[ChipSpec, float], ChipSpec]:
    def set_profile(chip: ChipSpec, value: float) -> ChipSpec:
        return _replace(chip, profile=_replace(chip.profile, **{field: make(value)}))
    return set_profile


_CHIP_FIELDS: Dict[str, Callable[[ChipSpec, float], ChipSpec]] = {
    "area_cm2": lambda c, v: _replace(c, area=Area(v)),
    "defect_density_per_cm2": lambda c, v: _replace(c, defect_density=v),
    "critical_area_fraction": lambda c, v: _replace(c, critical_area_fraction=v),
    "epa_kwh_per_cm2": _profile_setter("epa", epa),
    "gpa_gco2e_per_cm2": _profile_setter("gpa", gpa),
    "mpa_gco2e_per_cm2": _profile_setter("mpa", mpa),
    "ci_fab_gco2e_per_kwh": _profile_setter("ci_fab", CarbonIntensity),
}


def _workload_energy_setter(key: str) -> Setter:
    if key == "power_draw_kw":
        return lambda sc, v: _with_workload(sc, power_draw=Power(v), energy_per_inference=None)
    return lambda sc, v: _with_workload(sc, energy_per_inference=Energy(v), power_draw=None)


def parameter_setters(s: Scenario) -> Dict[str, Setter]:
    """Every sweepable parameter path of a scenario and how to set it."""
    setters: Dict[str, Setter] = {
        "lifetime_years": lambda sc, v: _replace(sc, lifetime=TimeSpan(v, "year")),
        "lifetime_hours": lambda sc, v: _replace(sc, lifetime=TimeSpan(v)),
        "ci_use_gco2e_per_kwh": lambda sc, v: _replace(sc, ci_use=CarbonIntensity(v)),
        "ci_fab_gco2e_per_kwh": lambda sc, v: _with_all_chips(
            sc, lambda c: _CHIP_FIELDS["ci_fab_gco2e_per_kwh"](c, v)
        ),
        "defect_density_per_cm2": lambda sc, v: _with_all_chips(
            sc, lambda c: _CHIP_FIELDS["defect_density_per_cm2"](c, v)
        ),
        "workload.inference_count": lambda sc, v: _with_workload(sc, inference_count=int(round(v))),
        "workload.throughput_inferences_per_s": lambda sc, v: _with_workload(sc, throughput=v),
        "workload.power_draw_kw": _workload_energy_setter("power_draw_kw"),
        "workload.energy_per_inference_kwh": _workload_energy_setter("energy_per_inference_kwh"),
    }
    for package in s.system:
        setters[f"package.{package.name}.packaging_gco2e"] = (
            lambda sc, v, name=package.name: _replace(
                sc,
                system=[
                    _replace(p, packaging_carbon=CarbonMass(v)) if p.name == name else p
                    for p in sc.system
                ],
            )
        )
    for chip in s.chips:
        for field, build in _CHIP_FIELDS.items():
            setters[f"chip.{chip.name}.{field}"] = (
                lambda sc, v, name=chip.name, build=build: _with_chip(sc, name, lambda c: build(c, v))
            )
    return setters


def valid_parameter_paths(s: Scenario) -> List[str]:
    return list(parameter_setters(s))


def apply_parameter(s: Scenario, path: str, value: float) -> Scenario:
    """Return a copy of the scenario with one parameter set.

    Raises:
        SweepError: unknown path, or a value the scenario rejects
    """
    setters = parameter_setters(s)
    if path not in setters:
        raise SweepError(
            f"unknown parameter path '{path}'; valid paths: {', '.join(setters)}",
            {"path": path, "valid": list(setters)},
        )
    try:
        return setters[path](s, float(value))
    except PhotocarbonError as e:
        raise SweepError(f"{path} = {value:.6g}: {e}", {"path": path, "value": value}) from e


def sweep_values(start: float, stop: float, steps: int) -> List[float]:
    """Evenly spaced values from start to stop inclusive."""
    if steps < 1:
        raise SweepError(f"steps must be >= 1, got {steps}")
    return [float(v) for v in np.linspace(start, stop, steps)]


def run_sweep(
    s: Scenario,
    path: str,
    start: float,
    stop: float,
    steps: int,
    workers: int = 1,
) -> SweepResult:
    """Evaluate the scenario at every sweep value of one parameter."""
    values = sweep_values(start, stop, steps)
    scenarios = [apply_parameter(s, path, v) for v in values]
    logger.info("sweeping %s over %d values with %d workers", path, len(values), workers)

    if workers > 1 and len(scenarios) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(scenario_footprint, scenarios))
    else:
        reports = [scenario_footprint(sc) for sc in scenarios]

    return SweepResult(
        parameter=path,
        rows=[SweepRow(value=v, report=r) for v, r in zip(values, reports)],
    )
