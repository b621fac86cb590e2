"""
Loaders for the bundled and user-supplied datasets.

Node presets (``presets.conf``), carbon-intensity tables (``ci.conf``) and
scenario files (``*.scenario``) are TOML documents; every numeric key carries
its unit in the name (``epa_kwh_per_cm2``, ``lifetime_years``). Step
catalogs and process flows keep their own line formats (see ``flow.py``).

Errors always point at a position: TOML syntax errors use the parser's
line/column, semantic errors the offending key or the header of the table
it belongs to.
"""

import functools
import json
import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Type

from pydantic import BaseModel, ConfigDict, Field

from .errors import DanglingReferenceError, DatasetError, ParseError, ScenarioError
from .flow import FlowAggregate, ProcessFlow, StepCatalog, aggregate_flow, parse_flow, parse_step_catalog
from .quantities import Area, CarbonIntensity, CarbonMass, Energy, Power, TimeSpan, epa, gpa, mpa
from .types import ChipKind, ChipSpec, FabProfile, PackageSpec, Scenario, ScenarioSuite, Workload
from .yield_model import YieldParams

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger("photocarbon.datasets")

PRESETS_FILE = "presets.conf"
CI_FILE = "ci.conf"
CATALOG_FILE = "photonic_steps.csv"
FLOW_FILE = "photonic_active.flow"
DEFAULT_LIFETIME_YEARS = 5.0

PRESET_KEYS = (
    "kind", "provenance", "epa_kwh_per_cm2", "flow", "catalog", "gpa_gco2e_per_cm2",
    "gpa_from_preset", "mpa_gco2e_per_cm2", "ci_fab_gco2e_per_kwh",
    "defect_density_per_cm2", "critical_area_fraction",
)
CI_KEYS = ("gco2e_per_kwh", "provenance")
SCENARIO_KEYS = (
    "name", "description", "provenance", "lifetime_years", "lifetime_hours", "ci_use",
    "ci_use_gco2e_per_kwh", "ci_fab", "ci_fab_gco2e_per_kwh", "workload",
)
WORKLOAD_KEYS = (
    "inference_count", "throughput_inferences_per_s", "power_draw_kw",
    "energy_per_inference_kwh", "description", "provenance",
)
PACKAGE_KEYS = ("packaging_gco2e", "chips", "description")
CHIP_KEYS = (
    "preset", "profile", "area_cm2", "kind", "cores", "clock_ghz", "description",
    "critical_area_fraction", "defect_density_per_cm2",
)
PROFILE_KEYS = (
    "name", "epa_kwh_per_cm2", "gpa_gco2e_per_cm2", "mpa_gco2e_per_cm2",
    "ci_fab_gco2e_per_kwh", "defect_density_per_cm2", "critical_area_fraction",
)
SCENARIO_TABLES = ("scenario", "workload", "package", "chip")


class NodePreset(BaseModel):
    """A named chip technology and where its numbers come from"""
    model_config = ConfigDict(frozen=True)

    node_name: str
    kind: ChipKind
    fab_profile: FabProfile
    provenance: str = ""
    gpa_source: str = Field(default="explicit", description="explicit, flow, or preset:<node>")
    flow_aggregate: Optional[FlowAggregate] = None


class PresetTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    presets: Dict[str, NodePreset]
    warnings: List[str] = Field(default_factory=list)

    def __contains__(self, name: str) -> bool:
        return name in self.presets

    def __getitem__(self, name: str) -> NodePreset:
        return self.presets[name]

    @property
    def names(self) -> List[str]:
        return list(self.presets)

    def as_list(self) -> List[NodePreset]:
        return list(self.presets.values())


class CarbonIntensityTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: Dict[str, CarbonIntensity]
    provenance: Dict[str, str] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __getitem__(self, name: str) -> CarbonIntensity:
        return self.entries[name]


# ---------------------------------------------------------------------------
# document positions
# ---------------------------------------------------------------------------

_HEADER = re.compile(r"^\s*\[\s*([^\[\]]+?)\s*\]\s*(?:#.*)?$")
_DOTTED_PART = re.compile(r'"[^"]*"|\'[^\']*\'|[^.]+')
_TOML_POSITION = re.compile(r"\s*\(at line (\d+), column (\d+)\)")

TablePath = Tuple[str, ...]


def _split_dotted(key: str) -> TablePath:
    return tuple(p.strip().strip("\"'") for p in _DOTTED_PART.findall(key) if p.strip())


class _Locator:
    """Maps table paths and keys of a TOML document to 1-based positions."""

    def __init__(self, text: str, source: Optional[str]):
        self.source = source
        self.lines = text.splitlines()
        self.headers: Dict[TablePath, int] = {}
        for lineno, raw in enumerate(self.lines, start=1):
            match = _HEADER.match(raw)
            if not match:
                continue
            path = _split_dotted(match.group(1))
            if path in self.headers:
                raise DatasetError(
                    f"duplicate entry '{'.'.join(path)}' (lines {self.headers[path]} and {lineno})",
                    lineno, raw.index("[") + 1, source,
                    {"key": ".".join(path), "lines": [self.headers[path], lineno]},
                )
            self.headers[path] = lineno

    def _indent(self, lineno: int) -> int:
        raw = self.lines[lineno - 1] if 0 < lineno <= len(self.lines) else ""
        return len(raw) - len(raw.lstrip()) + 1

    def table(self, path: TablePath) -> Tuple[int, int]:
        lineno = self.headers.get(path, 1)
        return lineno, self._indent(lineno)

    def key(self, path: TablePath, key: str) -> Tuple[int, int]:
        start = self.headers.get(path)
        if start is None:
            return self.table(path)
        pattern = re.compile(rf"^(\s*)[\"']?{re.escape(key)}[\"']?\s*=")
        for lineno in range(start + 1, len(self.lines) + 1):
            raw = self.lines[lineno - 1]
            if _HEADER.match(raw):
                break
            match = pattern.match(raw)
            if match:
                return lineno, len(match.group(1)) + 1
        return self.table(path)

    def error(
        self,
        message: str,
        path: TablePath,
        key: Optional[str] = None,
        cls: Type[DatasetError] = DatasetError,
        detail: Optional[Dict[str, Any]] = None,
    ) -> DatasetError:
        line, column = self.key(path, key) if key else self.table(path)
        return cls(message, line, column, self.source, detail)


def _parse_toml(text: str, source: Optional[str]) -> Tuple[Dict[str, Any], _Locator]:
    locator = _Locator(text, source)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        message = getattr(e, "msg", None) or str(e)
        line, column = getattr(e, "lineno", None), getattr(e, "colno", None)
        if line is None:
            match = _TOML_POSITION.search(str(e))
            line, column = (int(match.group(1)), int(match.group(2))) if match else (1, 1)
        raise DatasetError(_TOML_POSITION.sub("", message), line, column, source) from None
    return data, locator


class _Section:
    """Typed access to one TOML table with position-annotated errors."""

    def __init__(self, data: Any, path: TablePath, locator: _Locator):
        self.path = path
        self.locator = locator
        if not isinstance(data, dict):
            raise locator.error(f"'{'.'.join(path)}' must be a table", path[:-1] or path, path[-1])
        self.data = data

    @property
    def name(self) -> str:
        return self.path[-1]

    def error(self, message: str, key: Optional[str] = None, cls: Type[DatasetError] = DatasetError, **detail) -> DatasetError:
        return self.locator.error(message, self.path, key, cls, detail or None)

    def check_keys(self, allowed: Iterable[str]) -> None:
        allowed = tuple(allowed)
        for key in self.data:
            if key not in allowed:
                raise self.error(
                    f"unknown field '{key}' in [{'.'.join(self.path)}]", key, allowed=list(allowed)
                )

    def has(self, key: str) -> bool:
        return key in self.data

    def number(self, key: str, required: bool = True, default: Optional[float] = None) -> Optional[float]:
        if key not in self.data:
            if required:
                raise self.error(f"missing required field {key} in [{'.'.join(self.path)}]")
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(f"{key} must be a number, got {value!r}", key)
        if not math.isfinite(value):
            raise self.error(f"{key} must be finite, got {value!r}", key)
        if value < 0:
            raise self.error(f"negative value for {key}: {value!r}", key)
        return float(value)

    def integer(self, key: str, required: bool = True) -> Optional[int]:
        value = self.number(key, required)
        if value is None:
            return None
        if not value.is_integer():
            raise self.error(f"{key} must be a whole number, got {self.data[key]!r}", key)
        return int(value)

    def fraction(self, key: str, required: bool = True) -> Optional[float]:
        value = self.number(key, required)
        if value is not None and not (0 < value <= 1):
            raise self.error(f"{key} must be in (0, 1], got {value!r}", key)
        return value

    def string(self, key: str, required: bool = False, default: str = "") -> str:
        if key not in self.data:
            if required:
                raise self.error(f"missing required field {key} in [{'.'.join(self.path)}]")
            return default
        value = self.data[key]
        if not isinstance(value, str):
            raise self.error(f"{key} must be a string, got {value!r}", key)
        return value

    def strings(self, key: str) -> List[str]:
        value = self.data.get(key)
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise self.error(f"{key} must be a list of names", key)
        return value

    def kind(self, key: str = "kind", required: bool = True) -> Optional[ChipKind]:
        if key not in self.data and not required:
            return None
        value = self.string(key, required=True)
        try:
            return ChipKind(value)
        except ValueError:
            raise self.error(
                f"unknown kind '{value}' (expected photonic or electronic)", key
            ) from None


def _exactly_one(section: _Section, first: str, second: str) -> str:
    present = [k for k in (first, second) if section.has(k)]
    if len(present) != 1:
        which = "both" if present else "neither"
        raise section.error(
            f"exactly one of {first} / {second} is required in [{'.'.join(section.path)}], found {which}",
            present[-1] if present else None,
        )
    return present[0]


def _tables(data: Dict[str, Any], name: str, locator: _Locator) -> List[_Section]:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise locator.error(f"'{name}' must be a table of tables", (name,))
    return [_Section(v, (name, k), locator) for k, v in value.items()]


def _note_missing_provenance(section: _Section, what: str, warnings: List[str]) -> None:
    if not section.string("provenance").strip():
        message = f"{what} '{section.name}' has no provenance"
        logger.warning(message)
        warnings.append(message)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _read_relative(section: _Section, key: str, base_dir: Path) -> Tuple[str, str]:
    path = base_dir / section.string(key, required=True)
    try:
        return read_text(path), str(path)
    except FileNotFoundError:
        raise section.error(f"file not found: {path}", key) from None
    except OSError as e:
        raise section.error(f"cannot read {path}: {e.strerror or e}", key) from None


def _flow_aggregate(section: _Section, base_dir: Path) -> FlowAggregate:
    if not section.has("catalog"):
        raise section.error(f"preset '{section.name}' gives a flow without a catalog", "flow")
    flow_text, flow_source = _read_relative(section, "flow", base_dir)
    catalog_text, catalog_source = _read_relative(section, "catalog", base_dir)
    flow = parse_flow(flow_text, flow_source)
    catalog = parse_step_catalog(catalog_text, catalog_source)
    return aggregate_flow(flow, catalog)


def load_presets(text: str, source: Optional[str] = None, base_dir: Optional[Path] = None) -> PresetTable:
    """Load a node preset table.

    Each top-level table is one preset. EPA is either given directly or
    derived from a flow + catalog pair (paths relative to ``base_dir``,
    which defaults to the bundled data directory). GPA is given directly,
    borrowed from another preset via ``gpa_from_preset``, or flow-derived.

    Raises:
        DatasetError: unknown field, missing coefficient, duplicate node or bad value
        DanglingReferenceError: ``gpa_from_preset`` names an unknown preset
    """
    data, locator = _parse_toml(text, source)
    base_dir = base_dir or get_data_dir()
    sections = [_Section(v, (k,), locator) for k, v in data.items()]
    if not sections:
        raise DatasetError("preset table is empty", 1, 1, source)

    warnings: List[str] = []
    partial: Dict[str, Dict[str, Any]] = {}
    for section in sections:
        section.check_keys(PRESET_KEYS)
        kind = section.kind()
        aggregate = None
        if section.has("flow"):
            if section.has("epa_kwh_per_cm2"):
                raise section.error("give either epa_kwh_per_cm2 or flow, not both", "epa_kwh_per_cm2")
            aggregate = _flow_aggregate(section, base_dir)
            epa_value = aggregate.epa.value
        else:
            if section.has("catalog"):
                raise section.error("catalog is only used together with flow", "catalog")
            epa_value = section.number("epa_kwh_per_cm2")

        if section.has("gpa_gco2e_per_cm2") and section.has("gpa_from_preset"):
            raise section.error("give either gpa_gco2e_per_cm2 or gpa_from_preset, not both", "gpa_from_preset")
        if section.has("gpa_from_preset"):
            gpa_value, gpa_source = None, f"preset:{section.string('gpa_from_preset')}"
        elif section.has("gpa_gco2e_per_cm2") or aggregate is None:
            gpa_value, gpa_source = section.number("gpa_gco2e_per_cm2"), "explicit"
        else:
            gpa_value, gpa_source = aggregate.gpa.value, "flow"

        _note_missing_provenance(section, "preset", warnings)
        partial[section.name] = {
            "section": section,
            "kind": kind,
            "epa": epa_value,
            "gpa": gpa_value,
            "gpa_source": gpa_source,
            "mpa": section.number("mpa_gco2e_per_cm2"),
            "ci_fab": section.number("ci_fab_gco2e_per_kwh"),
            "yield": YieldParams(
                defect_density=section.number("defect_density_per_cm2"),
                critical_area_fraction=section.fraction("critical_area_fraction"),
            ),
            "aggregate": aggregate,
        }

    def resolve_gpa(name: str, seen: Tuple[str, ...]) -> float:
        entry = partial[name]
        if entry["gpa"] is not None:
            return entry["gpa"]
        section = entry["section"]
        target = section.string("gpa_from_preset")
        if target not in partial:
            raise section.error(
                f"gpa_from_preset references unknown preset '{target}'", "gpa_from_preset",
                DanglingReferenceError, reference=target, available=list(partial),
            )
        if target in seen:
            raise section.error(f"gpa_from_preset cycle: {' -> '.join(seen + (target,))}", "gpa_from_preset")
        return resolve_gpa(target, seen + (target,))

    presets: Dict[str, NodePreset] = {}
    for name, entry in partial.items():
        profile = FabProfile(
            name=name,
            epa=epa(entry["epa"]),
            gpa=gpa(resolve_gpa(name, (name,))),
            mpa=mpa(entry["mpa"]),
            ci_fab=CarbonIntensity(entry["ci_fab"]),
            yield_params=entry["yield"],
        )
        presets[name] = NodePreset(
            node_name=name,
            kind=entry["kind"],
            fab_profile=profile,
            provenance=entry["section"].string("provenance"),
            gpa_source=entry["gpa_source"],
            flow_aggregate=entry["aggregate"],
        )
    logger.debug("loaded %d presets from %s", len(presets), source or "<input>")
    return PresetTable(presets=presets, warnings=warnings)


# ---------------------------------------------------------------------------
# carbon intensity
# ---------------------------------------------------------------------------

def load_ci_table(text: str, source: Optional[str] = None) -> CarbonIntensityTable:
    """Load a carbon-intensity table (one top-level table per power source).

    Raises:
        DatasetError: negative intensity, duplicate or unknown field, empty table
    """
    data, locator = _parse_toml(text, source)
    entries: Dict[str, CarbonIntensity] = {}
    provenance: Dict[str, str] = {}
    warnings: List[str] = []
    for name, value in data.items():
        section = _Section(value, (name,), locator)
        section.check_keys(CI_KEYS)
        entries[name] = CarbonIntensity(section.number("gco2e_per_kwh"))
        provenance[name] = section.string("provenance")
        _note_missing_provenance(section, "carbon intensity", warnings)
    if not entries:
        raise DatasetError("carbon-intensity table is empty", 1, 1, source)
    return CarbonIntensityTable(entries=entries, provenance=provenance, warnings=warnings)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def _intensity(section: _Section, name_key: str, value_key: str, ci_table: CarbonIntensityTable) -> CarbonIntensity:
    if section.has(value_key):
        return CarbonIntensity(section.number(value_key))
    reference = section.string(name_key)
    if reference not in ci_table:
        raise section.error(
            f"unknown carbon intensity '{reference}'", name_key,
            DanglingReferenceError, reference=reference, available=list(ci_table.entries),
        )
    return ci_table[reference]


def _inline_profile(section: _Section, name: str) -> FabProfile:
    section.check_keys(PROFILE_KEYS)
    return FabProfile(
        name=section.string("name", default=name),
        epa=epa(section.number("epa_kwh_per_cm2")),
        gpa=gpa(section.number("gpa_gco2e_per_cm2")),
        mpa=mpa(section.number("mpa_gco2e_per_cm2")),
        ci_fab=CarbonIntensity(section.number("ci_fab_gco2e_per_kwh")),
        yield_params=YieldParams(
            defect_density=section.number("defect_density_per_cm2"),
            critical_area_fraction=section.fraction("critical_area_fraction"),
        ),
    )


def _chip(
    section: _Section,
    presets: PresetTable,
    ci_fab: Optional[CarbonIntensity],
    warnings: List[str],
) -> ChipSpec:
    section.check_keys(CHIP_KEYS)
    source_key = _exactly_one(section, "preset", "profile")
    if source_key == "preset":
        reference = section.string("preset")
        if reference not in presets:
            raise section.error(
                f"unknown preset '{reference}'", "preset",
                DanglingReferenceError, reference=reference, available=presets.names,
            )
        preset = presets[reference]
        profile = preset.fab_profile
        kind = section.kind(required=False) or preset.kind
        if kind is not preset.kind:
            message = f"chip '{section.name}' is {kind.value} but preset '{reference}' is {preset.kind.value}"
            logger.warning(message)
            warnings.append(message)
    else:
        profile = _inline_profile(_Section(section.data["profile"], section.path + ("profile",), section.locator), section.name)
        kind = section.kind()
    if ci_fab is not None:
        profile = profile.model_copy(update={"ci_fab": ci_fab})

    area = section.number("area_cm2")
    if area <= 0:
        raise section.error(f"area_cm2 must be > 0, got {area!r}", "area_cm2")
    cores = section.integer("cores", required=False)
    if cores is not None and cores < 1:
        raise section.error("cores must be >= 1", "cores")
    clock = section.number("clock_ghz", required=False)
    if clock is not None and clock <= 0:
        raise section.error("clock_ghz must be > 0", "clock_ghz")

    return ChipSpec(
        name=section.name,
        area=Area(area),
        profile=profile,
        kind=kind,
        cores=cores,
        clock_ghz=clock,
        description=section.string("description"),
        critical_area_fraction=section.fraction("critical_area_fraction", required=False),
        defect_density=section.number("defect_density_per_cm2", required=False),
    )


def _workload(section: _Section) -> Workload:
    section.check_keys(WORKLOAD_KEYS)
    throughput = section.number("throughput_inferences_per_s")
    if throughput <= 0:
        raise section.error("throughput_inferences_per_s must be > 0", "throughput_inferences_per_s")
    energy_key = _exactly_one(section, "power_draw_kw", "energy_per_inference_kwh")
    value = section.number(energy_key)
    return Workload(
        name=section.name,
        inference_count=section.integer("inference_count"),
        throughput=throughput,
        power_draw=Power(value) if energy_key == "power_draw_kw" else None,
        energy_per_inference=Energy(value) if energy_key == "energy_per_inference_kwh" else None,
        provenance=section.string("provenance"),
    )


def _lifetime(section: _Section) -> TimeSpan:
    if section.has("lifetime_years") and section.has("lifetime_hours"):
        raise section.error("give either lifetime_years or lifetime_hours, not both", "lifetime_hours")
    if section.has("lifetime_hours"):
        key, lifetime = "lifetime_hours", TimeSpan(section.number("lifetime_hours"))
    else:
        key = "lifetime_years"
        lifetime = TimeSpan(section.number(key, required=False, default=DEFAULT_LIFETIME_YEARS), "year")
    if lifetime.value <= 0:
        raise section.error(f"{key} must be > 0", key)
    return lifetime


def load_scenario_suite(
    text: str,
    presets: PresetTable,
    ci_table: CarbonIntensityTable,
    source: Optional[str] = None,
) -> ScenarioSuite:
    """Load a scenario file with every workload it defines.

    Raises:
        DatasetError: malformed document, chip outside any package, bad value
        DanglingReferenceError: unknown preset, carbon intensity, chip or workload
    """
    data, locator = _parse_toml(text, source)
    for key in data:
        if key not in SCENARIO_TABLES:
            raise locator.error(
                f"unknown table '{key}' (expected one of {', '.join(SCENARIO_TABLES)})", (key,),
                detail={"allowed": list(SCENARIO_TABLES)},
            )
    if "scenario" not in data:
        raise DatasetError("missing [scenario] table", 1, 1, source)

    head = _Section(data["scenario"], ("scenario",), locator)
    head.check_keys(SCENARIO_KEYS)
    warnings: List[str] = []
    if not head.string("provenance").strip():
        message = "scenario has no provenance"
        logger.warning(message)
        warnings.append(message)

    _exactly_one(head, "ci_use", "ci_use_gco2e_per_kwh")
    ci_use = _intensity(head, "ci_use", "ci_use_gco2e_per_kwh", ci_table)
    ci_fab = None
    if head.has("ci_fab") or head.has("ci_fab_gco2e_per_kwh"):
        _exactly_one(head, "ci_fab", "ci_fab_gco2e_per_kwh")
        ci_fab = _intensity(head, "ci_fab", "ci_fab_gco2e_per_kwh", ci_table)
    lifetime = _lifetime(head)

    chips = {s.name: s for s in _tables(data, "chip", locator)}
    owner: Dict[str, str] = {}
    packages: List[Tuple[_Section, List[str]]] = []
    for section in _tables(data, "package", locator):
        section.check_keys(PACKAGE_KEYS)
        names = section.strings("chips")
        if not names:
            raise section.error(f"package '{section.name}' has no chips", "chips")
        for chip in names:
            if chip not in chips:
                raise section.error(
                    f"package '{section.name}' references unknown chip '{chip}'", "chips",
                    DanglingReferenceError, reference=chip,
                )
            if chip in owner:
                raise section.error(
                    f"chip '{chip}' is already part of package '{owner[chip]}'", "chips"
                )
            owner[chip] = section.name
        packages.append((section, names))
    if not packages:
        raise head.error("scenario defines no [package.<name>] tables")
    for name, section in chips.items():
        if name not in owner:
            raise section.error(f"chip '{name}' is not part of any package")

    built = {name: _chip(section, presets, ci_fab, warnings) for name, section in chips.items()}
    system = [
        PackageSpec(
            name=section.name,
            chips=[built[n] for n in names],
            packaging_carbon=CarbonMass(section.number("packaging_gco2e", required=False, default=0.0)),
        )
        for section, names in packages
    ]

    workloads = [_workload(s) for s in _tables(data, "workload", locator)]
    if not workloads:
        raise head.error("scenario defines no [workload.<name>] tables")
    default = head.string("workload", default=workloads[0].name)
    if default not in {w.name for w in workloads}:
        raise head.error(
            f"unknown workload '{default}'", "workload",
            DanglingReferenceError, reference=default, available=[w.name for w in workloads],
        )

    name = head.string("name", default=Path(source).stem if source else "scenario")
    try:
        scenarios = {
            w.name: Scenario.create(
                name=name,
                description=head.string("description"),
                provenance=head.string("provenance"),
                system=system,
                workload=w,
                ci_use=ci_use,
                lifetime=lifetime,
            )
            for w in workloads
        }
    except ScenarioError as e:
        raise head.error(e.message) from e
    logger.debug("loaded scenario %s with %d workloads", name, len(scenarios))
    return ScenarioSuite(name=name, scenarios=scenarios, default_workload=default, warnings=warnings)


def load_scenario(
    text: str,
    presets: PresetTable,
    ci_table: CarbonIntensityTable,
    workload: Optional[str] = None,
    source: Optional[str] = None,
) -> Scenario:
    """Load a scenario file and resolve it for one workload (the default one if omitted)."""
    suite = load_scenario_suite(text, presets, ci_table, source)
    if workload is None:
        return suite.default
    if workload not in suite.scenarios:
        raise DanglingReferenceError(
            f"unknown workload '{workload}' (available: {', '.join(suite.scenarios)})",
            1, 1, source, {"reference": workload, "available": list(suite.scenarios)},
        )
    return suite.scenarios[workload]


def _toml_string(value: str) -> str:
    return json.dumps(value, ensure_ascii=False)


def format_scenario(scenario: Scenario) -> str:
    """Write a self-contained scenario document that reloads to an equal Scenario.

    Profiles are written inline and intensities as numbers, so the result
    does not depend on any preset or carbon-intensity table.
    """
    w = scenario.workload
    out = [
        "[scenario]",
        f"name = {_toml_string(scenario.name)}",
        f"description = {_toml_string(scenario.description)}",
        f"provenance = {_toml_string(scenario.provenance)}",
        f"lifetime_hours = {scenario.lifetime.value!r}",
        f"ci_use_gco2e_per_kwh = {scenario.ci_use.value!r}",
        f"workload = {_toml_string(w.name)}",
        "",
        f"[workload.{_toml_string(w.name)}]",
        f"inference_count = {w.inference_count}",
        f"throughput_inferences_per_s = {w.throughput!r}",
    ]
    if w.power_draw is not None:
        out.append(f"power_draw_kw = {w.power_draw.value!r}")
    else:
        out.append(f"energy_per_inference_kwh = {w.energy_per_inference.value!r}")
    out.append(f"provenance = {_toml_string(w.provenance)}")

    for package in scenario.system:
        out += [
            "",
            f"[package.{_toml_string(package.name)}]",
            f"packaging_gco2e = {package.packaging_carbon.value!r}",
            f"chips = [{', '.join(_toml_string(c.name) for c in package.chips)}]",
        ]
    for chip in scenario.chips:
        out += [
            "",
            f"[chip.{_toml_string(chip.name)}]",
            f"kind = {_toml_string(chip.kind.value)}",
            f"area_cm2 = {chip.area.value!r}",
            f"description = {_toml_string(chip.description)}",
        ]
        if chip.cores is not None:
            out.append(f"cores = {chip.cores}")
        if chip.clock_ghz is not None:
            out.append(f"clock_ghz = {chip.clock_ghz!r}")
        if chip.critical_area_fraction is not None:
            out.append(f"critical_area_fraction = {chip.critical_area_fraction!r}")
        if chip.defect_density is not None:
            out.append(f"defect_density_per_cm2 = {chip.defect_density!r}")
        p = chip.profile
        out += [
            "",
            f"[chip.{_toml_string(chip.name)}.profile]",
            f"name = {_toml_string(p.name)}",
            f"epa_kwh_per_cm2 = {p.epa.value!r}",
            f"gpa_gco2e_per_cm2 = {p.gpa.value!r}",
            f"mpa_gco2e_per_cm2 = {p.mpa.value!r}",
            f"ci_fab_gco2e_per_kwh = {p.ci_fab.value!r}",
            f"defect_density_per_cm2 = {p.yield_params.defect_density!r}",
            f"critical_area_fraction = {p.yield_params.critical_area_fraction!r}",
        ]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# files and bundled data
# ---------------------------------------------------------------------------

def get_data_dir() -> Path:
    return Path(__file__).resolve().parent.parent / "data"


def bundled_path(name: str) -> Path:
    """Path of a bundled data file.

    Raises:
        FileNotFoundError: if no such file is bundled
    """
    path = get_data_dir() / name
    if not path.is_file():
        raise FileNotFoundError(str(path))
    return path


def read_text(path: Path) -> str:
    """Read a UTF-8 document.

    Raises:
        OSError: if the file cannot be opened
        ParseError: at the first byte that is not valid UTF-8
    """
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raw = path.read_bytes()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        head = raw[: e.start]
        line = head.count(b"\n") + 1
        column = len(head) - (head.rfind(b"\n") + 1) + 1
        raise ParseError(f"invalid UTF-8 byte 0x{raw[e.start]:02x}", line, column, str(path)) from None


def load_presets_file(path: Path) -> PresetTable:
    path = Path(path)
    return load_presets(read_text(path), str(path), path.parent)


def load_ci_file(path: Path) -> CarbonIntensityTable:
    return load_ci_table(read_text(path), str(path))


def load_catalog_file(path: Path) -> StepCatalog:
    return parse_step_catalog(read_text(path), str(path))


def load_flow_file(path: Path) -> ProcessFlow:
    return parse_flow(read_text(path), str(path))


def load_scenario_suite_file(path: Path, presets: PresetTable, ci_table: CarbonIntensityTable) -> ScenarioSuite:
    return load_scenario_suite(read_text(path), presets, ci_table, str(path))


@functools.lru_cache(maxsize=None)
def load_bundled_presets() -> PresetTable:
    return load_presets_file(bundled_path(PRESETS_FILE))


@functools.lru_cache(maxsize=None)
def load_bundled_ci_table() -> CarbonIntensityTable:
    return load_ci_file(bundled_path(CI_FILE))


def load_bundled_catalog() -> StepCatalog:
    return load_catalog_file(bundled_path(CATALOG_FILE))


def load_bundled_flow() -> ProcessFlow:
    return load_flow_file(bundled_path(FLOW_FILE))


def load_bundled_scenario(name: str, workload: Optional[str] = None) -> Scenario:
    """Load ``<name>.scenario`` from the bundled data against the bundled tables."""
    path = bundled_path(f"{name}.scenario")
    suite = load_scenario_suite_file(path, load_bundled_presets(), load_bundled_ci_table())
    return suite.default if workload is None else suite.scenarios[workload]


__all__ = [
    "NodePreset",
    "PresetTable",
    "CarbonIntensityTable",
    "load_presets",
    "load_ci_table",
    "load_scenario",
    "load_scenario_suite",
    "format_scenario",
    "bundled_path",
    "get_data_dir",
    "load_bundled_presets",
    "load_bundled_ci_table",
    "load_bundled_catalog",
    "load_bundled_flow",
    "load_bundled_scenario",
]
