"""
Footprint engine: operational carbon, embodied carbon, amortization and
scenario comparison.

    total     = operational + (runtime / lifetime) * embodied
    operational = energy * ci_use
    embodied  = sum over chips of (area / yield) * (EPA * ci_fab + GPA + MPA)
                + packaging carbon of every package

Every function here is pure; evaluations can run in parallel.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

from .errors import InfeasibleYieldError, ScenarioError
from .quantities import Area, CarbonIntensity, CarbonMass, Energy, TimeSpan
from .types import (
    COMPARED_FIELDS,
    ChipEmbodied,
    ChipKind,
    ChipSpec,
    ComparisonReport,
    FieldComparison,
    FootprintReport,
    KindShare,
    PackageSpec,
    Scenario,
    ScenarioSuite,
    SuiteComparison,
    SystemEmbodied,
    Workload,
)
from .yield_model import effective_area, poisson_yield

logger = logging.getLogger("photocarbon.engine")

TIE = "tie"


def operational_cf(energy: Energy, ci_use: CarbonIntensity) -> CarbonMass:
    return energy * ci_use


def chip_embodied_breakdown(chip: ChipSpec) -> ChipEmbodied:
    """Embodied carbon of one chip, excluding packaging.

    Raises:
        InfeasibleYieldError: if the yield underflows to zero or the
            embodied carbon is not finite
    """
    params = chip.yield_params
    yield_value = poisson_yield(params, chip.area)
    exponent = params.defect_density * params.critical_area_fraction * chip.area.value
    if yield_value <= 0:
        raise InfeasibleYieldError(
            f"yield of chip '{chip.name}' underflows to 0 (d0 * f * A = {exponent:g})",
            {"chip": chip.name},
        )
    profile = chip.profile
    per_area = profile.epa.value * profile.ci_fab.value + profile.gpa.value + profile.mpa.value
    raw_area = chip.area.value / yield_value
    if not (math.isfinite(raw_area) and math.isfinite(raw_area * per_area)):
        raise InfeasibleYieldError(
            f"embodied carbon of chip '{chip.name}' overflows at yield {yield_value:.3g} "
            f"(d0 * f * A = {exponent:g})",
            {"chip": chip.name, "yield": yield_value},
        )
    area = effective_area(chip.area, yield_value)

    fab_energy = (profile.epa * area) * profile.ci_fab
    ghg = profile.gpa * area
    material = profile.mpa * area
    return ChipEmbodied(
        chip=chip.name,
        kind=chip.kind,
        area=chip.area,
        yield_value=yield_value,
        effective_area=area,
        fab_energy=fab_energy,
        ghg=ghg,
        material=material,
        total=CarbonMass(math.fsum((fab_energy.value, ghg.value, material.value))),
    )


def chip_embodied(chip: ChipSpec) -> CarbonMass:
    return chip_embodied_breakdown(chip).total


def system_embodied(system: Sequence[PackageSpec]) -> SystemEmbodied:
    """Sum chip embodied carbon over every chip plus packaging once per package."""
    if not system:
        raise ScenarioError("system has no packages")

    per_chip: Dict[str, ChipEmbodied] = {}
    packaging: Dict[str, CarbonMass] = {}
    for package in system:
        if package.name in packaging:
            raise ScenarioError(f"duplicate package '{package.name}'")
        packaging[package.name] = package.packaging_carbon
        for chip in package.chips:
            if chip.name in per_chip:
                raise ScenarioError(f"duplicate chip '{chip.name}'")
            per_chip[chip.name] = chip_embodied_breakdown(chip)

    total = math.fsum(
        [c.total.value for c in per_chip.values()] + [p.value for p in packaging.values()]
    )
    return SystemEmbodied(total=CarbonMass(total), per_chip=per_chip, per_package_packaging=packaging)


def workload_runtime(w: Workload) -> TimeSpan:
    return TimeSpan(w.inference_count / w.throughput, "s").to("h")


def workload_energy(w: Workload) -> Energy:
    if w.energy_per_inference is not None:
        return w.energy_per_inference * w.inference_count
    return w.power_draw * workload_runtime(w)


def amortized_cf(
    ocf: CarbonMass,
    ecf: CarbonMass,
    runtime: TimeSpan,
    lifetime: TimeSpan,
    warnings: Optional[List[str]] = None,
) -> CarbonMass:
    """ocf + (runtime / lifetime) * ecf; runtime beyond the lifetime is not clamped.

    A runtime beyond the lifetime is logged and, when ``warnings`` is given,
    appended to it.

    Raises:
        ScenarioError: if the lifetime is zero
    """
    if lifetime.value <= 0:
        raise ScenarioError("lifetime must be > 0")
    if runtime > lifetime:
        message = (
            f"runtime {runtime.value:.6g} h exceeds the lifetime {lifetime.value:.6g} h; "
            "embodied carbon is attributed more than once"
        )
        logger.warning(message)
        if warnings is not None:
            warnings.append(message)
    return ocf + ecf * (runtime / lifetime)


def _share(part: float, whole: float) -> float:
    return part / whole if whole > 0 else 0.0


def _kind_shares(chips: List[ChipSpec], embodied: SystemEmbodied) -> Dict[ChipKind, KindShare]:
    total_area = math.fsum(c.area.value for c in chips)
    shares = {}
    for kind in ChipKind:
        members = [c for c in chips if c.kind is kind]
        if not members:
            continue
        kind_embodied = math.fsum(embodied.per_chip[c.name].total.value for c in members)
        kind_area = math.fsum(c.area.value for c in members)
        shares[kind] = KindShare(
            kind=kind,
            embodied=CarbonMass(kind_embodied),
            embodied_share=_share(kind_embodied, embodied.total.value),
            area=Area(kind_area),
            area_share=_share(kind_area, total_area),
        )
    return shares


def scenario_footprint(s: Scenario) -> FootprintReport:
    """Evaluate one scenario into a full breakdown report."""
    warnings: List[str] = []
    runtime = workload_runtime(s.workload)
    energy = workload_energy(s.workload)
    operational = operational_cf(energy, s.ci_use)
    embodied = system_embodied(s.system)

    if runtime > s.lifetime:
        message = (
            f"runtime {runtime.value:.6g} h of workload '{s.workload.name}' exceeds the "
            f"lifetime {s.lifetime.value:.6g} h; embodied carbon is attributed more than once"
        )
        logger.warning(message)
        warnings.append(message)
    embodied_amortized = embodied.total * (runtime / s.lifetime)
    total = operational + embodied_amortized

    per_inference = None
    if s.workload.inference_count > 0:
        per_inference = total / s.workload.inference_count

    logger.debug("scenario %s/%s: total %s", s.name, s.workload.name, total)
    return FootprintReport(
        scenario=s.name,
        workload=s.workload.name,
        runtime=runtime,
        lifetime=s.lifetime,
        energy=energy,
        operational=operational,
        embodied_total=embodied.total,
        embodied_amortized=embodied_amortized,
        total=total,
        per_chip_embodied=embodied.per_chip_embodied,
        per_package_packaging=embodied.per_package_packaging,
        per_chip=embodied.per_chip,
        kind_shares=_kind_shares(s.chips, embodied),
        carbon_per_inference=per_inference,
        warnings=warnings,
    )


def _ratio(b: float, a: float) -> float:
    if a == 0:
        return 1.0 if b == 0 else math.inf
    return b / a


def _labels(a: str, b: str) -> tuple[str, str]:
    return (f"{a} (a)", f"{b} (b)") if a == b else (a, b)


def compare_reports(ra: FootprintReport, rb: FootprintReport, warnings: Optional[List[str]] = None) -> ComparisonReport:
    a_name, b_name = _labels(ra.scenario, rb.scenario)
    by_field = {}
    for name in COMPARED_FIELDS:
        qa, qb = getattr(ra, name), getattr(rb, name)
        if qa.value == qb.value:
            lower = TIE
        else:
            lower = a_name if qa.value < qb.value else b_name
        by_field[name] = FieldComparison(
            field=name,
            a=qa,
            b=qb,
            ratio=_ratio(qb.value, qa.value),
            delta_g=qb.value - qa.value,
            relative_delta=_share(qb.value - qa.value, qb.value) if qb.value > 0 else 0.0,
            lower=lower,
        )
    return ComparisonReport(
        a_name=a_name,
        b_name=b_name,
        workload=ra.workload if ra.workload == rb.workload else f"{ra.workload}/{rb.workload}",
        a_report=ra,
        b_report=rb,
        by_field=by_field,
        warnings=[*ra.warnings, *rb.warnings, *(warnings or [])],
    )


def compare(a: Scenario, b: Scenario) -> ComparisonReport:
    """Ratios b/a and deltas b - a for operational, embodied and total carbon."""
    warnings = []
    if a.workload.inference_count != b.workload.inference_count:
        message = (
            f"workloads are not comparable: {a.name} runs {a.workload.inference_count} "
            f"inferences, {b.name} runs {b.workload.inference_count}"
        )
        logger.warning(message)
        warnings.append(message)
    return compare_reports(scenario_footprint(a), scenario_footprint(b), warnings)


def compare_suite(a: ScenarioSuite, b: ScenarioSuite) -> SuiteComparison:
    """Compare every workload two suites share and average the ratios.

    Raises:
        ScenarioError: if the suites share no workload
    """
    shared = [name for name in a.scenarios if name in b.scenarios]
    if not shared:
        raise ScenarioError(
            f"suites '{a.name}' and '{b.name}' share no workload",
            {"a": list(a.scenarios), "b": list(b.scenarios)},
        )
    warnings = []
    for suite, other in ((a, b), (b, a)):
        for name in suite.scenarios:
            if name not in other.scenarios:
                message = f"workload '{name}' of '{suite.name}' has no counterpart in '{other.name}'"
                logger.warning(message)
                warnings.append(message)

    comparisons = {name: compare(a.scenarios[name], b.scenarios[name]) for name in shared}
    mean_ratios = {
        field: math.fsum(c.by_field[field].ratio for c in comparisons.values()) / len(comparisons)
        for field in COMPARED_FIELDS
    }
    a_name, b_name = _labels(a.name, b.name)
    return SuiteComparison(
        a_name=a_name,
        b_name=b_name,
        comparisons=comparisons,
        mean_ratios=mean_ratios,
        warnings=warnings,
    )
