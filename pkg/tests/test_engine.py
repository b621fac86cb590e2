import logging
import math
import random

import pytest
from photocarbon.core.engine import (
    TIE,
    amortized_cf,
    chip_embodied,
    chip_embodied_breakdown,
    compare,
    compare_suite,
    operational_cf,
    scenario_footprint,
    system_embodied,
    workload_energy,
    workload_runtime,
)
from photocarbon.core.errors import InfeasibleYieldError, ScenarioError
from photocarbon.core.quantities import Area, CarbonIntensity, CarbonMass, Energy, Power, TimeSpan
from photocarbon.core.types import ChipKind, PackageSpec, Scenario, ScenarioSuite, Workload

REL = 1e-12


# ---------------------------------------------------------------------------
# hand-computed oracles
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kwh, ci, expected", [
    (2.0, 500.0, 1000.0),
    (0.0, 475.0, 0.0),
    (13.89, 50.0, 694.5),
    (1.0, 0.0, 0.0),
])
def test_operational_oracles(kwh, ci, expected):
    assert operational_cf(Energy(kwh), CarbonIntensity(ci)).value == pytest.approx(expected, rel=REL)


def test_chip_embodied_round_numbers(make_chip):
    """1 cm2, yield 1, EPA x CI_fab = 100, GPA 50, MPA 50"""
    assert chip_embodied(make_chip()).value == pytest.approx(200.0, rel=REL)


def test_chip_embodied_zero_coefficients(make_chip, make_profile):
    chip = make_chip(profile=make_profile(epa_value=0, gpa_value=0, mpa_value=0))
    assert chip_embodied(chip).value == 0.0


def test_chip_embodied_with_yield(make_chip, make_profile):
    chip = make_chip(area=2.0, profile=make_profile(d0=0.5))
    breakdown = chip_embodied_breakdown(chip)
    assert breakdown.yield_value == pytest.approx(math.exp(-1.0), rel=REL)
    assert breakdown.effective_area.value == pytest.approx(2 * math.e, rel=REL)
    assert breakdown.total.value == pytest.approx(2 * math.e * 200, rel=REL)
    assert breakdown.fab_energy.value == pytest.approx(2 * math.e * 100, rel=REL)
    assert breakdown.ghg.value == pytest.approx(2 * math.e * 50, rel=REL)
    assert breakdown.material.value == pytest.approx(2 * math.e * 50, rel=REL)


def test_chip_overrides_apply_to_yield(make_chip, make_profile):
    chip = make_chip(area=1.0, profile=make_profile(d0=0.0), defect_density=0.1, critical_area_fraction=0.2)
    assert chip.yield_params.defect_density == 0.1
    assert chip_embodied_breakdown(chip).yield_value == pytest.approx(math.exp(-0.02), rel=REL)


def test_photonic_fraction_lowers_embodied(make_chip, make_profile):
    profile = make_profile(d0=0.1)
    photonic = make_chip(kind=ChipKind.PHOTONIC, area=3.0, profile=profile, critical_area_fraction=0.2)
    electronic = make_chip(kind=ChipKind.ELECTRONIC, area=3.0, profile=profile, critical_area_fraction=1.0)
    assert chip_embodied(photonic) < chip_embodied(electronic)


def test_infeasible_yield(make_chip, make_profile):
    chip = make_chip(area=1e5, profile=make_profile(d0=1.0))
    with pytest.raises(InfeasibleYieldError):
        chip_embodied(chip)


def test_tiny_yield_overflow_is_infeasible(presets, make_chip):
    """A yield of ~1e-304 is not zero, but the embodied carbon overflows"""
    chip = make_chip(area=7000.0, profile=presets["cmos_22nm"].fab_profile)
    with pytest.raises(InfeasibleYieldError, match="overflows"):
        chip_embodied(chip)


def test_system_embodied_single_package(make_chip):
    system = [PackageSpec(name="p", chips=[make_chip()], packaging_carbon=CarbonMass(150))]
    result = system_embodied(system)
    assert result.total.value == pytest.approx(350.0, rel=REL)
    assert result.per_chip_embodied["chip"].value == pytest.approx(200.0, rel=REL)
    assert result.per_package_packaging == {"p": CarbonMass(150)}


def test_packaging_charged_once_per_package(make_chip):
    a, b = make_chip(name="a"), make_chip(name="b", area=2.0)
    separate = system_embodied([
        PackageSpec(name="pa", chips=[a], packaging_carbon=CarbonMass(150)),
        PackageSpec(name="pb", chips=[b], packaging_carbon=CarbonMass(150)),
    ])
    together = system_embodied([PackageSpec(name="pab", chips=[a, b], packaging_carbon=CarbonMass(150))])
    assert separate.total.value - together.total.value == pytest.approx(150.0, rel=REL)


def test_empty_package_rejected(make_chip):
    with pytest.raises(ScenarioError):
        PackageSpec.create(name="empty", chips=[])
    with pytest.raises(ScenarioError):
        system_embodied([])


@pytest.mark.parametrize("count, throughput, hours", [
    (1_000_000, 1000.0, 1000 / 3600),
    (0, 50.0, 0.0),
    (3600, 1.0, 1.0),
])
def test_runtime_oracles(make_workload, count, throughput, hours):
    assert workload_runtime(make_workload(count=count, throughput=throughput)).value == pytest.approx(hours, rel=REL)


@pytest.mark.parametrize("count, throughput, power, kwh", [
    (1800, 1.0, 2.0, 1.0),
    (1800, 1.0, 0.0, 0.0),
    (1_000_000, 10000.0, 0.15, 0.15 * 100 / 3600),
])
def test_energy_oracles(make_workload, count, throughput, power, kwh):
    w = make_workload(count=count, throughput=throughput, power_kw=power)
    assert workload_energy(w).value == pytest.approx(kwh, rel=REL)


def test_energy_per_inference(make_workload):
    w = make_workload(count=1000, energy_per_inference=1e-3)
    assert workload_energy(w).value == pytest.approx(1.0, rel=REL)


def test_workload_needs_exactly_one_energy_source():
    with pytest.raises(ScenarioError):
        Workload.create(inference_count=1, throughput=1.0)
    with pytest.raises(ScenarioError):
        Workload.create(inference_count=1, throughput=1.0, power_draw=Power(1), energy_per_inference=Energy(1))
    with pytest.raises(ScenarioError):
        Workload.create(inference_count=1, throughput=0.0, power_draw=Power(1))


@pytest.mark.parametrize("runtime, lifetime, expected", [
    (10.0, 10.0, 110.0),
    (0.0, 10.0, 10.0),
    (5.0, 10.0, 60.0),
    (20.0, 10.0, 210.0),
])
def test_amortized_oracles(runtime, lifetime, expected):
    result = amortized_cf(CarbonMass(10), CarbonMass(100), TimeSpan(runtime), TimeSpan(lifetime))
    assert result.value == pytest.approx(expected, rel=REL)


def test_amortized_reports_runtime_beyond_lifetime():
    warnings = []
    result = amortized_cf(CarbonMass(10), CarbonMass(100), TimeSpan(20), TimeSpan(10), warnings)
    assert result.value == pytest.approx(210.0, rel=REL)
    assert len(warnings) == 1
    assert "exceeds the lifetime 10 h" in warnings[0]

    quiet = []
    amortized_cf(CarbonMass(10), CarbonMass(100), TimeSpan(10), TimeSpan(10), quiet)
    assert quiet == []


def test_amortized_rejects_zero_lifetime():
    with pytest.raises(ScenarioError):
        amortized_cf(CarbonMass(10), CarbonMass(100), TimeSpan(1), TimeSpan(0))


def test_scenario_zero_lifetime_rejected(make_scenario):
    fields = dict(make_scenario())
    fields["lifetime"] = TimeSpan(0)
    with pytest.raises(ScenarioError, match="lifetime"):
        Scenario.create(**fields)


def test_scenario_footprint_oracle(make_scenario):
    """3600 inferences at 1/s, 2 kW, CI_use 500, embodied 200 + 100 packaging, 10 h lifetime"""
    report = scenario_footprint(make_scenario(packaging=100.0))
    assert report.runtime.value == pytest.approx(1.0, rel=REL)
    assert report.energy.value == pytest.approx(2.0, rel=REL)
    assert report.operational.value == pytest.approx(1000.0, rel=REL)
    assert report.embodied_total.value == pytest.approx(300.0, rel=REL)
    assert report.embodied_amortized.value == pytest.approx(30.0, rel=REL)
    assert report.total.value == pytest.approx(1030.0, rel=REL)
    assert report.carbon_per_inference.value == pytest.approx(1030.0 / 3600, rel=REL)
    assert report.warnings == []


def test_all_zero_scenario(make_scenario, make_chip, make_profile, make_workload):
    chip = make_chip(profile=make_profile(epa_value=0, gpa_value=0, mpa_value=0, ci_fab=0))
    report = scenario_footprint(make_scenario(chips=[chip], workload=make_workload(power_kw=0), ci_use=0))
    for field in ("operational", "embodied_total", "embodied_amortized", "total"):
        assert getattr(report, field).value == 0.0


def test_zero_inferences(make_scenario, make_workload):
    report = scenario_footprint(make_scenario(workload=make_workload(count=0)))
    assert report.runtime.value == 0.0
    assert report.total == report.operational == CarbonMass(0)
    assert report.carbon_per_inference is None


def test_runtime_beyond_lifetime_is_flagged_not_clamped(make_scenario, caplog):
    caplog.set_level(logging.WARNING, logger="photocarbon.engine")
    report = scenario_footprint(make_scenario(lifetime_hours=0.5))
    assert report.embodied_amortized.value == pytest.approx(400.0, rel=REL)
    assert len(report.warnings) == 1
    assert "exceeds the lifetime" in report.warnings[0]
    assert "exceeds the lifetime" in caplog.text


def test_kind_shares(make_scenario, make_chip):
    chips = [make_chip(name="ph", kind=ChipKind.PHOTONIC, area=1.0), make_chip(name="el", area=3.0)]
    report = scenario_footprint(make_scenario(chips=chips))
    photonic = report.kind_shares[ChipKind.PHOTONIC]
    assert photonic.area_share == pytest.approx(0.25, rel=REL)
    assert photonic.embodied_share == pytest.approx(0.25, rel=REL)
    assert report.kind_shares[ChipKind.ELECTRONIC].embodied.value == pytest.approx(600.0, rel=REL)


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

def test_compare_identity(make_scenario):
    s = make_scenario(packaging=25.0)
    report = compare(s, s)
    assert (report.a_name, report.b_name) == ("scenario (a)", "scenario (b)")
    for field in report.by_field.values():
        assert field.ratio == 1.0
        assert field.delta_g == 0.0
        assert field.lower == TIE


def test_compare_zero_fields(make_scenario, make_chip, make_profile, make_workload):
    zero = make_chip(profile=make_profile(epa_value=0, gpa_value=0, mpa_value=0))
    a = make_scenario(chips=[zero], workload=make_workload(power_kw=0), name="a")
    b = make_scenario(chips=[zero], workload=make_workload(power_kw=1), name="b")
    report = compare(a, b)
    assert report.by_field["embodied_total"].ratio == 1.0
    assert report.by_field["operational"].ratio == math.inf
    assert report.by_field["operational"].lower == "a"


def test_compare_direction_and_deltas(make_scenario, make_chip):
    a = make_scenario(name="small")
    b = make_scenario(chips=[make_chip(area=2.0)], name="large")
    report = compare(a, b)
    embodied = report.by_field["embodied_total"]
    assert embodied.ratio == pytest.approx(2.0, rel=REL)
    assert embodied.delta_g == pytest.approx(200.0, rel=REL)
    assert embodied.relative_delta == pytest.approx(0.5, rel=REL)
    assert embodied.lower == "small"


def test_compare_warns_on_workload_mismatch(make_scenario, make_workload):
    a = make_scenario(name="a")
    b = make_scenario(workload=make_workload(count=7200), name="b")
    report = compare(a, b)
    assert any("not comparable" in w for w in report.warnings)


def test_compare_ratios_independent_of_mass_units(make_scenario):
    a = make_scenario(packaging=100.0, name="a")
    b = make_scenario(packaging=250.0, name="b")
    b_kg = b.model_copy(update={"system": [
        PackageSpec(name="pkg", chips=b.chips, packaging_carbon=CarbonMass(0.25, "kg"))
    ]})
    assert compare(a, b).by_field["total"].ratio == compare(a, b_kg).by_field["total"].ratio


def test_compare_suite(make_scenario, make_workload):
    def suite(name, power):
        scenarios = {
            w: make_scenario(workload=make_workload(name=w, power_kw=power), name=name)
            for w in ("w1", "w2")
        }
        return ScenarioSuite(name=name, scenarios=scenarios, default_workload="w1")

    a, b = suite("a", 1.0), suite("b", 2.0)
    result = compare_suite(a, b)
    assert list(result.comparisons) == ["w1", "w2"]
    assert result.mean_ratios["operational"] == pytest.approx(2.0, rel=REL)
    assert result.warnings == []

    lonely = ScenarioSuite(
        name="c",
        scenarios={"w3": make_scenario(workload=make_workload(name="w3"), name="c")},
        default_workload="w3",
    )
    with pytest.raises(ScenarioError, match="share no workload"):
        compare_suite(a, lonely)


# ---------------------------------------------------------------------------
# randomised properties
# ---------------------------------------------------------------------------

def _random_scenario(rng, make_scenario, make_chip, make_profile, make_workload):
    chips = []
    for index in range(rng.randint(1, 3)):
        profile = make_profile(
            epa_value=rng.uniform(0, 3),
            gpa_value=rng.uniform(0, 300),
            mpa_value=rng.uniform(0, 600),
            ci_fab=rng.uniform(0, 900),
            d0=rng.uniform(0, 0.3),
            fraction=rng.choice([0.2, 1.0, rng.uniform(0.05, 1)]),
        )
        kind = rng.choice(list(ChipKind))
        chips.append(make_chip(name=f"chip{index}", area=rng.uniform(0.1, 8), kind=kind, profile=profile))
    workload = make_workload(
        count=rng.randint(1, 10_000_000),
        throughput=rng.uniform(10, 10_000),
        power_kw=rng.uniform(0, 0.5),
    )
    return make_scenario(
        chips=chips,
        packaging=rng.uniform(0, 500),
        workload=workload,
        ci_use=rng.uniform(0, 900),
        lifetime_hours=rng.uniform(1000, 100_000),
    )


@pytest.fixture
def random_scenarios(make_scenario, make_chip, make_profile, make_workload):
    rng = random.Random(42)
    return [_random_scenario(rng, make_scenario, make_chip, make_profile, make_workload) for _ in range(500)]


def test_breakdown_closure(random_scenarios):
    for s in random_scenarios:
        r = scenario_footprint(s)
        parts = math.fsum(
            [v.value for v in r.per_chip_embodied.values()] + [v.value for v in r.per_package_packaging.values()]
        )
        assert parts == pytest.approx(r.embodied_total.value, rel=1e-9)
        assert r.operational.value + r.embodied_amortized.value == pytest.approx(r.total.value, rel=1e-9)
        for chip in r.per_chip.values():
            assert chip.fab_energy.value + chip.ghg.value + chip.material.value == pytest.approx(
                chip.total.value, rel=1e-9
            )


def test_ci_use_linearity(random_scenarios):
    rng = random.Random(8)
    for s in random_scenarios:
        k = rng.uniform(0.1, 10)
        base = scenario_footprint(s)
        scaled = scenario_footprint(s.model_copy(update={"ci_use": CarbonIntensity(s.ci_use.value * k)}))
        assert scaled.operational.value == pytest.approx(k * base.operational.value, rel=1e-12)
        assert scaled.embodied_total == base.embodied_total
        assert scaled.embodied_amortized == base.embodied_amortized


def test_ci_fab_scales_only_energy_share(random_scenarios):
    rng = random.Random(9)
    for s in random_scenarios:
        k = rng.uniform(0.1, 10)
        chip = s.chips[0]
        scaled = chip.model_copy(update={"profile": chip.profile.model_copy(
            update={"ci_fab": CarbonIntensity(chip.profile.ci_fab.value * k)}
        )})
        before, after = chip_embodied_breakdown(chip), chip_embodied_breakdown(scaled)
        assert after.fab_energy.value == pytest.approx(k * before.fab_energy.value, rel=1e-12)
        assert after.ghg == before.ghg
        assert after.material == before.material


def test_amortization_endpoints(random_scenarios):
    for s in random_scenarios:
        idle = scenario_footprint(s.model_copy(update={"workload": s.workload.model_copy(update={"inference_count": 0})}))
        assert idle.total == idle.operational
        full = scenario_footprint(s.model_copy(update={"lifetime": workload_runtime(s.workload)}))
        assert full.total.value == pytest.approx(full.operational.value + full.embodied_total.value, rel=1e-12)


def test_monotone_in_defect_density_and_area(random_scenarios):
    rng = random.Random(10)
    for s in random_scenarios:
        chip = s.chips[0]
        step = 1 + rng.uniform(0.05, 1)
        base = chip_embodied(chip)
        if base.value == 0:
            continue
        denser = chip.model_copy(update={"defect_density": chip.yield_params.defect_density * step + 0.01})
        larger = chip.model_copy(update={"area": Area(chip.area.value * step)})
        assert chip_embodied(denser) > base
        assert chip_embodied(larger) > base


def test_photonic_swap_never_increases_embodied(random_scenarios):
    for s in random_scenarios:
        chip = s.chips[0]
        swapped = chip.model_copy(update={"kind": ChipKind.PHOTONIC, "critical_area_fraction": 0.2})
        if chip.yield_params.critical_area_fraction < 0.2:
            continue
        assert chip_embodied(swapped) <= chip_embodied(chip)


def test_compare_self_is_one(random_scenarios):
    for s in random_scenarios:
        report = compare(s, s)
        assert all(field.ratio == 1.0 for field in report.by_field.values())


def test_evaluation_is_deterministic(random_scenarios):
    s = random_scenarios[0]
    assert scenario_footprint(s) == scenario_footprint(Scenario(**dict(s)))
