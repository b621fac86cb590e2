"""
Manufacturing-step catalogs and process flows.

A step catalog lists the average per-wafer energy and direct GHG release of
each fabrication step; a process flow is an ordered list of layers, each a
multiset of catalog steps. Aggregating a flow against a catalog yields the
per-wafer totals and the per-area coefficients (EPA, GPA) of the chip
technology the flow describes.

See also:
- src/photocarbon/core/quantities.py for the unit types
- src/photocarbon/core/datasets.py for presets that reference flows
"""

import csv
import json
import logging
import math
import re
from enum import Enum
from typing import Dict, List, Optional, Tuple

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import AggregationError, CatalogError, FlowSyntaxError
from .quantities import Area, CarbonMass, Energy, Length, PerAreaCoefficient

logger = logging.getLogger("photocarbon.flow")

CATALOG_HEADER = ("step_id", "category", "energy_kwh_per_wafer", "ghg_gco2e_per_wafer")
DEFAULT_EDGE_EXCLUSION_MM = 3.0
STEP_ID_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


class StepCategory(str, Enum):
    LITHOGRAPHY = "lithography"
    ETCH = "etch"
    DEPOSITION = "deposition"
    CMP = "cmp"
    IMPLANT = "implant"
    ANNEAL = "anneal"
    EPITAXY = "epitaxy"
    METALLIZATION = "metallization"
    CLEAN = "clean"
    METROLOGY = "metrology"
    OTHER = "other"


class StepEntry(BaseModel):
    """One catalog row: the average cost of a step on one wafer."""
    model_config = ConfigDict(frozen=True)

    step_id: str
    category: StepCategory
    energy_per_wafer: Energy
    ghg_per_wafer: CarbonMass


class StepCatalog(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: Dict[str, StepEntry]
    provenance: str = ""

    @field_validator("entries")
    @classmethod
    def validate_entries(cls, v: Dict[str, StepEntry]) -> Dict[str, StepEntry]:
        if not v:
            raise ValueError("step catalog is empty")
        for key, entry in v.items():
            if key != entry.step_id:
                raise ValueError(f"catalog key {key!r} does not match step_id {entry.step_id!r}")
        return v

    def __contains__(self, step_id: str) -> bool:
        return step_id in self.entries

    def __getitem__(self, step_id: str) -> StepEntry:
        return self.entries[step_id]


class StepRef(BaseModel):
    model_config = ConfigDict(frozen=True)

    step_id: str
    count: int = Field(..., ge=1)


class Layer(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    steps: List[StepRef] = Field(default_factory=list)


class ProcessFlow(BaseModel):
    """An ordered list of layers, each a multiset of catalog steps."""
    model_config = ConfigDict(frozen=True)

    name: str
    wafer_diameter: Length
    edge_exclusion: Length = Field(default_factory=lambda: Length(DEFAULT_EDGE_EXCLUSION_MM))
    layers: List[Layer]

    @model_validator(mode="after")
    def validate_geometry(self) -> "ProcessFlow":
        if self.wafer_diameter.value <= 0:
            raise ValueError("wafer_diameter must be > 0")
        if self.edge_exclusion.value >= self.wafer_diameter.value / 2:
            raise ValueError("edge_exclusion must be smaller than the wafer radius")
        return self

    @property
    def step_ref_count(self) -> int:
        return sum(len(layer.steps) for layer in self.layers)

    @property
    def total_multiplicity(self) -> int:
        return sum(ref.count for layer in self.layers for ref in layer.steps)

    def step_counts(self) -> Dict[str, int]:
        """Merged multiset of step ids; independent of layer and step order."""
        counts: Dict[str, int] = {}
        for layer in self.layers:
            for ref in layer.steps:
                counts[ref.step_id] = counts.get(ref.step_id, 0) + ref.count
        return dict(sorted(counts.items()))


class FlowAggregate(BaseModel):
    model_config = ConfigDict(frozen=True)

    total_energy_per_wafer: Energy
    total_ghg_per_wafer: CarbonMass
    usable_wafer_area: Area
    epa: PerAreaCoefficient
    gpa: PerAreaCoefficient
    per_category_energy: Dict[StepCategory, Energy] = Field(default_factory=dict)


def usable_wafer_area(wafer_diameter: Length, edge_exclusion: Length) -> Area:
    """pi * ((d/2 - e) / 10)^2 in cm2 for diameter d and edge exclusion e in mm."""
    radius_cm = (wafer_diameter.value / 2 - edge_exclusion.value) / 10
    return Area(math.pi * radius_cm ** 2)


# ---------------------------------------------------------------------------
# step catalog
# ---------------------------------------------------------------------------

def _field_columns(raw: str) -> List[int]:
    """1-based start column of every field of a raw line; commas inside quotes do not split."""
    columns, start, quoted = [], 0, False
    for i, ch in enumerate(raw + ","):
        if ch == '"' and i < len(raw):
            quoted = not quoted
        elif ch == "," and (not quoted or i == len(raw)):
            field = raw[start:i]
            columns.append(start + 1 + len(field) - len(field.lstrip()))
            start = i + 1
    return columns


def _parse_amount(text: str, name: str, lineno: int, column: int, source: Optional[str]) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CatalogError(f"{name} is not a number: {text!r}", lineno, column, source) from None
    if not math.isfinite(value):
        raise CatalogError(f"{name} must be finite, got {text!r}", lineno, column, source)
    if value < 0:
        raise CatalogError(f"negative value for {name}: {text}", lineno, column, source)
    return value


def parse_step_catalog(text: str, source: Optional[str] = None) -> StepCatalog:
    """Parse a comma-separated step catalog.

    Args:
        text: catalog document (header ``step_id,category,energy_kwh_per_wafer,ghg_gco2e_per_wafer``)
        source: optional file name used in error messages

    Returns:
        StepCatalog with one entry per data row

    Raises:
        CatalogError: on a malformed header, row, duplicate id or empty catalog
    """
    provenance: Optional[str] = None
    header_seen = False
    entries: Dict[str, StepEntry] = {}
    first_seen: Dict[str, int] = {}
    last_line = 1

    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if provenance is None:
                provenance = stripped.lstrip("#").strip()
            continue

        fields = [f.strip() for f in next(csv.reader([raw]))]
        columns = _field_columns(raw)

        if not header_seen:
            if tuple(fields) != CATALOG_HEADER:
                bad = next(
                    (i for i, name in enumerate(CATALOG_HEADER) if i >= len(fields) or fields[i] != name),
                    len(CATALOG_HEADER),
                )
                column = columns[bad] if bad < len(columns) else len(raw) + 1
                raise CatalogError(
                    f"expected header '{','.join(CATALOG_HEADER)}'", lineno, column, source
                )
            header_seen = True
            continue

        if len(fields) < len(CATALOG_HEADER):
            missing = CATALOG_HEADER[len(fields)]
            raise CatalogError(f"missing column '{missing}'", lineno, len(raw) + 1, source)
        if len(fields) > len(CATALOG_HEADER):
            raise CatalogError(
                "unexpected extra column", lineno, columns[len(CATALOG_HEADER)], source
            )

        step_id, category, energy_text, ghg_text = fields
        if not STEP_ID_PATTERN.match(step_id):
            raise CatalogError(f"invalid step_id {step_id!r}", lineno, columns[0], source)
        if step_id in first_seen:
            raise CatalogError(
                f"duplicate step_id '{step_id}' on lines {first_seen[step_id]} and {lineno}",
                lineno, columns[0], source,
                {"step_id": step_id, "lines": [first_seen[step_id], lineno]},
            )
        try:
            step_category = StepCategory(category)
        except ValueError:
            raise CatalogError(
                f"unknown category '{category}'", lineno, columns[1], source,
                {"allowed": [c.value for c in StepCategory]},
            ) from None

        energy = _parse_amount(energy_text, "energy_kwh_per_wafer", lineno, columns[2], source)
        ghg = _parse_amount(ghg_text, "ghg_gco2e_per_wafer", lineno, columns[3], source)
        entries[step_id] = StepEntry(
            step_id=step_id,
            category=step_category,
            energy_per_wafer=Energy(energy),
            ghg_per_wafer=CarbonMass(ghg),
        )
        first_seen[step_id] = lineno

    if not header_seen:
        raise CatalogError("missing header row", last_line, 1, source)
    if not entries:
        raise CatalogError("step catalog has no data rows (empty catalog)", last_line, 1, source)

    logger.debug("parsed %d catalog steps from %s", len(entries), source or "<input>")
    return StepCatalog(entries=entries, provenance=provenance or "")


def format_step_catalog(catalog: StepCatalog) -> str:
    lines = []
    if catalog.provenance:
        lines.append(f"# {catalog.provenance}")
    lines.append(",".join(CATALOG_HEADER))
    for entry in catalog.entries.values():
        lines.append(
            f"{entry.step_id},{entry.category.value},"
            f"{entry.energy_per_wafer.value!r},{entry.ghg_per_wafer.value!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# flow files
# ---------------------------------------------------------------------------

FLOW_GRAMMAR = r"""
start: _item*
_item: flow_decl | setting | layer

flow_decl: "flow" STRING
setting: NAME "=" SIGNED_NUMBER
layer: "layer" STRING "{" step_list "}"
step_list: (step (";" step)* ";"?)?
step: NAME COUNT

COUNT: /x[ \t]*-?[0-9]+/
NAME: /[A-Za-z_][A-Za-z0-9_.\-]*/
STRING: ESCAPED_STRING
COMMENT: /#[^\n]*/

%import common.ESCAPED_STRING
%import common.SIGNED_NUMBER
%import common.WS
%ignore WS
%ignore COMMENT
"""

_FLOW_PARSER = Lark(FLOW_GRAMMAR, parser="lalr", lexer="contextual")
FLOW_SETTINGS = ("wafer_diameter_mm", "edge_exclusion_mm")


def _unquote(token: Token) -> str:
    return json.loads(str(token))


@v_args(inline=True)
class _FlowTransformer(Transformer):
    """Turns the parse tree into (kind, token, value) items, keeping positions."""

    def flow_decl(self, name: Token) -> Tuple[str, Token, str]:
        return ("flow", name, _unquote(name))

    def setting(self, key: Token, number: Token) -> Tuple[str, Token, Tuple[str, float, Token]]:
        return ("setting", key, (str(key), float(number), number))

    def step(self, name: Token, count: Token) -> StepRef:
        n = int(str(count)[1:].strip())
        if n < 1:
            raise FlowSyntaxError(f"step count must be >= 1, got {n} for '{name}'", count.line, count.column)
        return StepRef(step_id=str(name), count=n)

    def step_list(self, *steps: StepRef) -> List[StepRef]:
        return list(steps)

    def layer(self, name: Token, steps: List[StepRef]) -> Tuple[str, Token, Layer]:
        return ("layer", name, Layer(name=_unquote(name), steps=steps))

    def start(self, *items):
        return list(items)


def _unexpected_message(e: UnexpectedInput) -> str:
    if isinstance(e, UnexpectedCharacters):
        return f"unexpected character {e.char!r}"
    if isinstance(e, UnexpectedEOF):
        return "unexpected end of file"
    if isinstance(e, UnexpectedToken):
        if e.token.type == "$END":
            return "unexpected end of file"
        expected = ", ".join(sorted(e.expected))
        return f"unexpected {str(e.token)!r}, expected one of: {expected}"
    return str(e)


def _end_position(text: str) -> Tuple[int, int]:
    lines = text.split("\n")
    return len(lines), len(lines[-1]) + 1


def parse_flow(text: str, source: Optional[str] = None) -> ProcessFlow:
    """Parse a flow file into a ProcessFlow.

    Raises:
        FlowSyntaxError: with 1-based line/column for syntax and semantic errors
    """
    try:
        tree = _FLOW_PARSER.parse(text)
    except UnexpectedInput as e:
        line, column = getattr(e, "line", -1), getattr(e, "column", -1)
        if line is None or line < 1:
            line, column = _end_position(text)
        raise FlowSyntaxError(_unexpected_message(e), line, column, source) from None

    try:
        items = _FlowTransformer().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, FlowSyntaxError):
            err = e.orig_exc
            raise FlowSyntaxError(err.message, err.line, err.column, source) from None
        raise

    name: Optional[str] = None
    settings: Dict[str, Tuple[float, Token]] = {}
    layers: List[Layer] = []
    layer_names: Dict[str, int] = {}

    for kind, token, value in items:
        if kind == "flow":
            if name is not None:
                raise FlowSyntaxError("duplicate flow header", token.line, token.column, source)
            name = value
        elif kind == "setting":
            key, number, number_token = value
            if key not in FLOW_SETTINGS:
                raise FlowSyntaxError(
                    f"unknown setting '{key}' (expected one of {', '.join(FLOW_SETTINGS)})",
                    token.line, token.column, source,
                )
            if key in settings:
                raise FlowSyntaxError(f"duplicate setting '{key}'", token.line, token.column, source)
            settings[key] = (number, number_token)
        else:
            if value.name in layer_names:
                raise FlowSyntaxError(
                    f"duplicate layer '{value.name}' (first declared on line {layer_names[value.name]})",
                    token.line, token.column, source,
                )
            layer_names[value.name] = token.line
            layers.append(value)

    if name is None:
        raise FlowSyntaxError('missing flow header: expected flow "<name>"', 1, 1, source)
    if "wafer_diameter_mm" not in settings:
        raise FlowSyntaxError("missing required field wafer_diameter_mm", 1, 1, source)
    if not layers:
        line, column = _end_position(text)
        raise FlowSyntaxError("flow declares no layers", line, column, source)

    diameter, diameter_token = settings["wafer_diameter_mm"]
    if diameter <= 0:
        raise FlowSyntaxError(
            f"wafer_diameter_mm must be > 0, got {diameter:g}",
            diameter_token.line, diameter_token.column, source,
        )
    edge, edge_token = settings.get("edge_exclusion_mm", (DEFAULT_EDGE_EXCLUSION_MM, None))
    if edge < 0 or edge >= diameter / 2:
        line, column = (edge_token.line, edge_token.column) if edge_token is not None else (1, 1)
        raise FlowSyntaxError(
            f"edge_exclusion_mm must be >= 0 and smaller than the wafer radius "
            f"({diameter / 2:g} mm), got {edge:g}",
            line, column, source,
        )

    flow = ProcessFlow(
        name=name,
        wafer_diameter=Length(diameter),
        edge_exclusion=Length(edge),
        layers=layers,
    )
    logger.debug("parsed flow %r: %d layers, %d step refs", flow.name, len(layers), flow.step_ref_count)
    return flow


def format_flow(flow: ProcessFlow) -> str:
    """Serialise a ProcessFlow back to the flow-file format."""
    lines = [
        f"flow {json.dumps(flow.name, ensure_ascii=False)}",
        f"wafer_diameter_mm = {flow.wafer_diameter.value!r}",
        f"edge_exclusion_mm = {flow.edge_exclusion.value!r}",
    ]
    for layer in flow.layers:
        lines.append("")
        lines.append(f"layer {json.dumps(layer.name, ensure_ascii=False)} {{")
        for ref in layer.steps:
            lines.append(f"    {ref.step_id} x{ref.count};")
        lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def _resolve(flow: ProcessFlow, catalog: StepCatalog) -> None:
    for layer in flow.layers:
        for ref in layer.steps:
            if ref.step_id not in catalog:
                raise AggregationError(
                    f"unresolved step '{ref.step_id}' in layer '{layer.name}'",
                    {"step_id": ref.step_id, "layer": layer.name},
                )


def aggregate_flow(flow: ProcessFlow, catalog: StepCatalog) -> FlowAggregate:
    """Sum count x per-wafer values over the flow and divide by usable wafer area.

    Sums run over the merged step multiset with ``math.fsum`` so step and
    layer order cannot change the result.

    Raises:
        AggregationError: if a step id is missing from the catalog
    """
    _resolve(flow, catalog)
    counts = flow.step_counts()

    total_energy = Energy(math.fsum(n * catalog[s].energy_per_wafer.value for s, n in counts.items()))
    total_ghg = CarbonMass(math.fsum(n * catalog[s].ghg_per_wafer.value for s, n in counts.items()))
    area = usable_wafer_area(flow.wafer_diameter, flow.edge_exclusion)

    per_category: Dict[StepCategory, Energy] = {}
    for category in StepCategory:
        members = [(s, n) for s, n in counts.items() if catalog[s].category is category]
        if members:
            per_category[category] = Energy(
                math.fsum(n * catalog[s].energy_per_wafer.value for s, n in members)
            )

    return FlowAggregate(
        total_energy_per_wafer=total_energy,
        total_ghg_per_wafer=total_ghg,
        usable_wafer_area=area,
        epa=total_energy / area,
        gpa=total_ghg / area,
        per_category_energy=per_category,
    )


def layer_energy(flow: ProcessFlow, catalog: StepCatalog) -> Dict[str, Energy]:
    """Per-wafer energy of each layer, in flow order."""
    _resolve(flow, catalog)
    return {
        layer.name: Energy(math.fsum(ref.count * catalog[ref.step_id].energy_per_wafer.value for ref in layer.steps))
        for layer in flow.layers
    }
