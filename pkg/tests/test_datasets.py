import pytest
from photocarbon.core.datasets import (
    DEFAULT_LIFETIME_YEARS,
    bundled_path,
    format_scenario,
    load_bundled_scenario,
    load_ci_table,
    load_presets,
    load_scenario,
    load_scenario_suite,
    read_text,
)
from photocarbon.core.errors import DanglingReferenceError, DatasetError
from photocarbon.core.quantities import HOURS_PER_YEAR
from photocarbon.core.types import ChipKind

MINIMAL_SCENARIO = """\
[scenario]
name = "mini"
provenance = "test fixture"
ci_use = "renewable"
{head}

[workload.w]
inference_count = 100
throughput_inferences_per_s = 10.0
{workload}
provenance = "test fixture"

[package.p]
chips = ["c"]

[chip.c]
{chip}
"""

VALID_PRESET = """\
[node]
kind = "electronic"
provenance = "test"
epa_kwh_per_cm2 = 1.0
gpa_gco2e_per_cm2 = 100.0
mpa_gco2e_per_cm2 = 400.0
ci_fab_gco2e_per_kwh = 500.0
defect_density_per_cm2 = 0.1
critical_area_fraction = 1.0
"""


def scenario_text(head="", workload="power_draw_kw = 0.01", chip='preset = "cmos_28nm"\narea_cm2 = 1.0'):
    return MINIMAL_SCENARIO.format(head=head, workload=workload, chip=chip)


def test_bundled_tables_load_cleanly(presets, ci_table, adept_suite, systolic_suite):
    assert presets.warnings == []
    assert ci_table.warnings == []
    assert adept_suite.warnings == []
    assert systolic_suite.warnings == []
    assert presets.names == ["cmos_28nm", "cmos_22nm", "cmos_14nm", "cmos_7nm", "photonic_active"]


def test_epa_ordering(presets):
    values = [presets[n].fab_profile.epa.value for n in ("photonic_active", "cmos_28nm", "cmos_22nm", "cmos_14nm", "cmos_7nm")]
    assert values == sorted(values)
    assert len(set(values)) == len(values)


def test_photonic_preset_derivation(presets):
    photonic = presets["photonic_active"]
    cmos = presets["cmos_28nm"]
    assert photonic.kind is ChipKind.PHOTONIC
    assert photonic.gpa_source == "preset:cmos_28nm"
    assert photonic.fab_profile.gpa == cmos.fab_profile.gpa
    assert photonic.fab_profile.mpa == cmos.fab_profile.mpa
    assert photonic.fab_profile.yield_params.critical_area_fraction == 0.2
    assert photonic.flow_aggregate is not None
    assert photonic.fab_profile.epa.value == pytest.approx(0.2194834238, rel=1e-9)


def test_epa_ratios_against_photonic(presets):
    photonic = presets["photonic_active"].fab_profile.epa.value
    ratios = {n: presets[n].fab_profile.epa.value / photonic for n in ("cmos_28nm", "cmos_14nm", "cmos_7nm")}
    assert 3.7 <= ratios["cmos_28nm"] <= 4.5
    assert 5.0 <= ratios["cmos_14nm"] <= 6.2
    assert 8.8 <= ratios["cmos_7nm"] <= 10.8


def test_ci_table(ci_table):
    assert ci_table["renewable"] < ci_table["taiwan_grid"]
    assert ci_table["taiwan_grid"].value == 583.0
    assert all(ci_table.provenance[name] for name in ci_table.entries)


def test_ci_duplicate_entry():
    text = '[renewable]\ngco2e_per_kwh = 11\n\n[solar]\ngco2e_per_kwh = 41\n\n[renewable]\ngco2e_per_kwh = 12\n'
    with pytest.raises(DatasetError) as exc:
        load_ci_table(text, "ci.conf")
    assert "renewable" in exc.value.message
    assert exc.value.line == 7
    assert "lines 1 and 7" in exc.value.message


def test_ci_negative_value():
    with pytest.raises(DatasetError, match="negative value for gco2e_per_kwh") as exc:
        load_ci_table('[coal]\nprovenance = "x"\ngco2e_per_kwh = -820\n')
    assert (exc.value.line, exc.value.column) == (3, 1)


def test_ci_missing_provenance_warns():
    table = load_ci_table("[grid]\ngco2e_per_kwh = 300\n")
    assert table.warnings == ["carbon intensity 'grid' has no provenance"]


def test_valid_preset():
    table = load_presets(VALID_PRESET)
    node = table["node"]
    assert node.gpa_source == "explicit"
    assert node.fab_profile.epa.value == 1.0
    assert node.fab_profile.yield_params.defect_density == 0.1


@pytest.mark.parametrize("edit, message", [
    (lambda t: t + "color = \"red\"\n", "unknown field 'color' in [node]"),
    (lambda t: t.replace("mpa_gco2e_per_cm2 = 400.0\n", ""), "missing required field mpa_gco2e_per_cm2 in [node]"),
    (lambda t: t.replace("kind = \"electronic\"", "kind = \"quantum\""), "unknown kind 'quantum'"),
    (lambda t: t.replace("epa_kwh_per_cm2 = 1.0", "epa_kwh_per_cm2 = -1.0"), "negative value for epa_kwh_per_cm2"),
    (lambda t: t.replace("critical_area_fraction = 1.0", "critical_area_fraction = 1.5"), "must be in (0, 1]"),
])
def test_malformed_presets(edit, message):
    with pytest.raises(DatasetError) as exc:
        load_presets(edit(VALID_PRESET), "presets.conf")
    assert message in exc.value.message


def test_gpa_from_unknown_preset():
    text = VALID_PRESET.replace("gpa_gco2e_per_cm2 = 100.0", 'gpa_from_preset = "cmos_3nm"')
    with pytest.raises(DanglingReferenceError, match="cmos_3nm") as exc:
        load_presets(text)
    assert exc.value.line == 5


def test_gpa_from_preset_cycle():
    first = VALID_PRESET.replace("gpa_gco2e_per_cm2 = 100.0", 'gpa_from_preset = "other"')
    second = first.replace("[node]", "[other]").replace('gpa_from_preset = "other"', 'gpa_from_preset = "node"')
    with pytest.raises(DatasetError, match="cycle"):
        load_presets(first + "\n" + second)


def test_flow_derived_preset(tmp_path):
    (tmp_path / "steps.csv").write_text(
        "step_id,category,energy_kwh_per_wafer,ghg_gco2e_per_wafer\n"
        "depo,deposition,6.0,100\n"
    )
    (tmp_path / "tiny.flow").write_text('flow "tiny"\nwafer_diameter_mm = 300\nlayer "l" { depo x1 }\n')
    text = VALID_PRESET.replace("epa_kwh_per_cm2 = 1.0", 'flow = "tiny.flow"\ncatalog = "steps.csv"')
    text = text.replace("gpa_gco2e_per_cm2 = 100.0\n", "")
    node = load_presets(text, base_dir=tmp_path)["node"]
    assert node.gpa_source == "flow"
    assert node.flow_aggregate.total_energy_per_wafer.value == 6.0
    assert node.fab_profile.epa.value == pytest.approx(6.0 / node.flow_aggregate.usable_wafer_area.value, rel=1e-12)


def test_minimal_scenario(presets, ci_table):
    scenario = load_scenario(scenario_text(), presets, ci_table)
    assert scenario.name == "mini"
    assert scenario.lifetime.value == DEFAULT_LIFETIME_YEARS * HOURS_PER_YEAR == 43800.0
    assert scenario.ci_use == ci_table["renewable"]
    assert scenario.chips[0].profile == presets["cmos_28nm"].fab_profile
    assert scenario.system[0].packaging_carbon.value == 0.0


def test_ci_fab_override(presets, ci_table):
    scenario = load_scenario(scenario_text(head='ci_fab = "coal"'), presets, ci_table)
    assert scenario.chips[0].profile.ci_fab == ci_table["coal"]
    assert scenario.chips[0].profile.epa == presets["cmos_28nm"].fab_profile.epa


def test_unknown_preset_is_dangling(presets, ci_table):
    text = scenario_text(chip='preset = "cmos_3nm"\narea_cm2 = 1.0')
    with pytest.raises(DanglingReferenceError, match="unknown preset 'cmos_3nm'") as exc:
        load_scenario(text, presets, ci_table, source="bad.scenario")
    assert exc.value.line == text.splitlines().index('preset = "cmos_3nm"') + 1
    assert str(exc.value).startswith("bad.scenario:")


def test_unknown_carbon_intensity(presets, ci_table):
    text = scenario_text().replace('ci_use = "renewable"', 'ci_use = "moon"')
    with pytest.raises(DanglingReferenceError, match="unknown carbon intensity 'moon'"):
        load_scenario(text, presets, ci_table)


@pytest.mark.parametrize("workload, found", [
    ("power_draw_kw = 0.01\nenergy_per_inference_kwh = 0.001", "found both"),
    ("", "found neither"),
])
def test_workload_energy_source_exactly_one(presets, ci_table, workload, found):
    with pytest.raises(DatasetError, match=found):
        load_scenario(scenario_text(workload=workload), presets, ci_table)


def test_chip_outside_any_package(presets, ci_table):
    text = scenario_text() + '\n[chip.stray]\npreset = "cmos_28nm"\narea_cm2 = 2.0\n'
    with pytest.raises(DatasetError, match="chip 'stray' is not part of any package"):
        load_scenario(text, presets, ci_table)


def test_package_references_unknown_chip(presets, ci_table):
    text = scenario_text().replace('chips = ["c"]', 'chips = ["c", "ghost"]')
    with pytest.raises(DanglingReferenceError, match="unknown chip 'ghost'"):
        load_scenario(text, presets, ci_table)


def test_toml_syntax_error_has_position(presets, ci_table):
    with pytest.raises(DatasetError) as exc:
        load_scenario('[scenario]\nname = \n', presets, ci_table)
    assert exc.value.line == 2


def test_unknown_table(presets, ci_table):
    with pytest.raises(DatasetError, match="unknown table 'machine'"):
        load_scenario(scenario_text() + "\n[machine]\nx = 1\n", presets, ci_table)


def test_missing_scenario_table(presets, ci_table):
    with pytest.raises(DatasetError, match=r"missing \[scenario\] table"):
        load_scenario('[chip.c]\npreset = "cmos_28nm"\n', presets, ci_table)


def test_missing_provenance_warns(presets, ci_table):
    text = scenario_text().replace('provenance = "test fixture"\nci_use', 'ci_use')
    suite = load_scenario_suite(text, presets, ci_table)
    assert "scenario has no provenance" in suite.warnings


def test_kind_mismatch_warns(presets, ci_table):
    text = scenario_text(chip='preset = "cmos_28nm"\nkind = "photonic"\narea_cm2 = 1.0')
    suite = load_scenario_suite(text, presets, ci_table)
    assert suite.default.chips[0].kind is ChipKind.PHOTONIC
    assert any("preset 'cmos_28nm' is electronic" in w for w in suite.warnings)


def test_inline_profile(presets, ci_table):
    chip = (
        'kind = "photonic"\narea_cm2 = 2.0\n\n[chip.c.profile]\nepa_kwh_per_cm2 = 0.2\n'
        'gpa_gco2e_per_cm2 = 150.0\nmpa_gco2e_per_cm2 = 500.0\nci_fab_gco2e_per_kwh = 583.0\n'
        'defect_density_per_cm2 = 0.1\ncritical_area_fraction = 0.2\n'
    )
    scenario = load_scenario(scenario_text(chip=chip), presets, ci_table)
    profile = scenario.chips[0].profile
    assert profile.name == "c"
    assert profile.epa.value == 0.2
    assert profile.yield_params.critical_area_fraction == 0.2


def test_unknown_workload(presets, ci_table):
    with pytest.raises(DanglingReferenceError, match="unknown workload 'gpt'"):
        load_scenario(scenario_text(), presets, ci_table, workload="gpt")


def test_adept_scenario(adept_suite, ci_table):
    assert list(adept_suite.scenarios) == ["resnet50", "bert_large", "rnnt"]
    adept = adept_suite.default
    assert adept.workload.name == "resnet50"
    photonic, electronic = adept.chips
    assert (photonic.name, photonic.kind, photonic.area.value) == ("adept_photonic", ChipKind.PHOTONIC, 1.15)
    assert electronic.kind is ChipKind.ELECTRONIC
    assert electronic.profile.name == "cmos_22nm"
    assert photonic.profile.ci_fab == electronic.profile.ci_fab == ci_table["taiwan_grid"]
    assert adept.ci_use == ci_table["renewable"]
    assert adept.system[0].packaging_carbon.value == 150.0


def test_systolic_scenario(systolic):
    (chip,) = systolic.chips
    assert chip.area.value == 6.9
    assert chip.cores == 10
    assert chip.kind is ChipKind.ELECTRONIC


def test_load_bundled_scenario_by_workload():
    bert = load_bundled_scenario("adept", "bert_large")
    assert bert.workload.throughput == 250.0


def test_format_scenario_round_trip(adept_suite, systolic, presets, ci_table):
    for scenario in [*adept_suite.scenarios.values(), systolic]:
        reloaded = load_scenario(format_scenario(scenario), presets, ci_table)
        assert reloaded == scenario


def test_bundled_scenario_text_is_readable():
    assert "[scenario]" in read_text(bundled_path("systolic.scenario"))
