import pytest
from photocarbon.core.config import get_config
from photocarbon.core.datasets import (
    bundled_path,
    load_bundled_catalog,
    load_bundled_ci_table,
    load_bundled_flow,
    load_bundled_presets,
    load_scenario_suite_file,
)
from photocarbon.core.quantities import Area, CarbonIntensity, CarbonMass, Energy, Power, TimeSpan, epa, gpa, mpa
from photocarbon.core.types import ChipKind, ChipSpec, FabProfile, PackageSpec, Scenario, Workload
from photocarbon.core.yield_model import YieldParams


@pytest.fixture(scope="session")
def config():
    return get_config()


@pytest.fixture(scope="session")
def presets():
    return load_bundled_presets()


@pytest.fixture(scope="session")
def ci_table():
    return load_bundled_ci_table()


@pytest.fixture(scope="session")
def catalog():
    return load_bundled_catalog()


@pytest.fixture(scope="session")
def photonic_flow():
    return load_bundled_flow()


@pytest.fixture(scope="session")
def adept_suite(presets, ci_table):
    return load_scenario_suite_file(bundled_path("adept.scenario"), presets, ci_table)


@pytest.fixture(scope="session")
def systolic_suite(presets, ci_table):
    return load_scenario_suite_file(bundled_path("systolic.scenario"), presets, ci_table)


@pytest.fixture(scope="session")
def adept(adept_suite):
    return adept_suite.default


@pytest.fixture(scope="session")
def systolic(systolic_suite):
    return systolic_suite.default


def build_profile(
    epa_value=0.1,
    gpa_value=50.0,
    mpa_value=50.0,
    ci_fab=1000.0,
    d0=0.0,
    fraction=1.0,
    name="test_node",
):
    """Round-number profile: EPA x CI_fab = 100 g/cm2, GPA 50, MPA 50 by default."""
    return FabProfile(
        name=name,
        epa=epa(epa_value),
        gpa=gpa(gpa_value),
        mpa=mpa(mpa_value),
        ci_fab=CarbonIntensity(ci_fab),
        yield_params=YieldParams(defect_density=d0, critical_area_fraction=fraction),
    )


def build_chip(name="chip", area=1.0, kind=ChipKind.ELECTRONIC, profile=None, **overrides):
    return ChipSpec(name=name, area=Area(area), profile=profile or build_profile(), kind=kind, **overrides)


def build_workload(count=3600, throughput=1.0, power_kw=2.0, energy_per_inference=None, name="workload"):
    if energy_per_inference is not None:
        return Workload(
            name=name, inference_count=count, throughput=throughput,
            energy_per_inference=Energy(energy_per_inference),
        )
    return Workload(name=name, inference_count=count, throughput=throughput, power_draw=Power(power_kw))


def build_scenario(chips=None, packaging=0.0, workload=None, ci_use=500.0, lifetime_hours=10.0, name="scenario"):
    chips = chips or [build_chip()]
    return Scenario(
        name=name,
        system=[PackageSpec(name="pkg", chips=chips, packaging_carbon=CarbonMass(packaging))],
        workload=workload or build_workload(),
        ci_use=CarbonIntensity(ci_use),
        lifetime=TimeSpan(lifetime_hours),
    )


@pytest.fixture
def make_profile():
    return build_profile


@pytest.fixture
def make_chip():
    return build_chip


@pytest.fixture
def make_workload():
    return build_workload


@pytest.fixture
def make_scenario():
    return build_scenario
