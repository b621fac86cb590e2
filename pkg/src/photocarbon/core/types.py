"""
Type definitions for the photocarbon footprint model.
This module contains the pydantic models shared by the engine, the dataset
loaders and the CLI.
"""

from enum import Enum
from typing import Dict, List, Optional, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ScenarioError
from .quantities import (
    Area,
    CarbonIntensity,
    CarbonMass,
    CoefficientKind,
    Energy,
    PerAreaCoefficient,
    Power,
    TimeSpan,
)
from .yield_model import YieldParams

M = TypeVar("M", bound="DomainModel")


class ChipKind(str, Enum):
    PHOTONIC = "photonic"
    ELECTRONIC = "electronic"


class DomainModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    @classmethod
    def create(cls: type[M], **data) -> M:
        """Build the model, reporting validation failures as ScenarioError."""
        try:
            return cls(**data)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(p) for p in first["loc"]) or cls.__name__
            raise ScenarioError(
                f"invalid {cls.__name__}: {location}: {first['msg']}",
                {"errors": [{"loc": list(err["loc"]), "msg": err["msg"]} for err in e.errors()]},
            ) from e


class FabProfile(DomainModel):
    """Per-area coefficients, fab carbon intensity and yield of one chip technology"""
    name: str
    epa: PerAreaCoefficient
    gpa: PerAreaCoefficient
    mpa: PerAreaCoefficient
    ci_fab: CarbonIntensity
    yield_params: YieldParams = Field(default_factory=YieldParams)

    @model_validator(mode="after")
    def validate_kinds(self) -> "FabProfile":
        for field, kind in (("epa", CoefficientKind.EPA), ("gpa", CoefficientKind.GPA), ("mpa", CoefficientKind.MPA)):
            if getattr(self, field).kind is not kind:
                raise ValueError(f"{field} must be a {kind.value} coefficient")
        return self


class ChipSpec(DomainModel):
    name: str
    area: Area
    profile: FabProfile
    kind: ChipKind
    cores: Optional[int] = Field(default=None, ge=1)
    clock_ghz: Optional[float] = Field(default=None, gt=0)
    description: str = ""
    critical_area_fraction: Optional[float] = Field(default=None, gt=0, le=1)
    defect_density: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)

    @property
    def yield_params(self) -> YieldParams:
        """Profile yield parameters with this chip's overrides applied."""
        base = self.profile.yield_params
        return YieldParams(
            defect_density=base.defect_density if self.defect_density is None else self.defect_density,
            critical_area_fraction=(
                base.critical_area_fraction if self.critical_area_fraction is None else self.critical_area_fraction
            ),
        )


class PackageSpec(DomainModel):
    """Chips integrated into one package; packaging carbon is charged once."""
    name: str
    chips: List[ChipSpec]
    packaging_carbon: CarbonMass = Field(default_factory=lambda: CarbonMass(0))

    @field_validator("chips")
    @classmethod
    def validate_chips(cls, v: List[ChipSpec]) -> List[ChipSpec]:
        if not v:
            raise ValueError("a package needs at least one chip")
        return v


class Workload(DomainModel):
    """A batch of inferences; energy from average power or from energy per inference."""
    name: str = "workload"
    inference_count: int = Field(..., ge=0)
    throughput: float = Field(..., gt=0, allow_inf_nan=False, description="inferences per second")
    power_draw: Optional[Power] = None
    energy_per_inference: Optional[Energy] = None
    provenance: str = ""

    @model_validator(mode="after")
    def validate_energy_source(self) -> "Workload":
        if (self.power_draw is None) == (self.energy_per_inference is None):
            raise ValueError("exactly one of power_draw / energy_per_inference is required")
        return self


class Scenario(DomainModel):
    name: str = "scenario"
    description: str = ""
    provenance: str = ""
    system: List[PackageSpec]
    workload: Workload
    ci_use: CarbonIntensity
    lifetime: TimeSpan

    @field_validator("system")
    @classmethod
    def validate_system(cls, v: List[PackageSpec]) -> List[PackageSpec]:
        if not v:
            raise ValueError("a scenario needs at least one package")
        packages = [p.name for p in v]
        if len(set(packages)) != len(packages):
            raise ValueError("package names must be unique")
        chips = [c.name for p in v for c in p.chips]
        if len(set(chips)) != len(chips):
            raise ValueError("chip names must be unique across the system")
        return v

    @field_validator("lifetime")
    @classmethod
    def validate_lifetime(cls, v: TimeSpan) -> TimeSpan:
        if v.value <= 0:
            raise ValueError("lifetime must be > 0")
        return v

    @property
    def chips(self) -> List[ChipSpec]:
        return [chip for package in self.system for chip in package.chips]


class ScenarioSuite(DomainModel):
    """One system evaluated under several workloads, keyed by workload name."""
    name: str
    scenarios: Dict[str, Scenario]
    default_workload: str
    warnings: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_default(self) -> "ScenarioSuite":
        if self.default_workload not in self.scenarios:
            raise ValueError(f"default workload {self.default_workload!r} is not defined")
        return self

    @property
    def default(self) -> Scenario:
        return self.scenarios[self.default_workload]


class ChipEmbodied(DomainModel):
    """Embodied carbon of one chip split into its sources"""
    chip: str
    kind: ChipKind
    area: Area
    yield_value: float
    effective_area: Area
    fab_energy: CarbonMass
    ghg: CarbonMass
    material: CarbonMass
    total: CarbonMass


class SystemEmbodied(DomainModel):
    total: CarbonMass
    per_chip: Dict[str, ChipEmbodied]
    per_package_packaging: Dict[str, CarbonMass]

    @property
    def per_chip_embodied(self) -> Dict[str, CarbonMass]:
        return {name: chip.total for name, chip in self.per_chip.items()}


class KindShare(DomainModel):
    kind: ChipKind
    embodied: CarbonMass
    embodied_share: float
    area: Area
    area_share: float


class FootprintReport(DomainModel):
    """Operational, embodied and amortized carbon of one scenario"""
    scenario: str
    workload: str
    runtime: TimeSpan
    lifetime: TimeSpan
    energy: Energy
    operational: CarbonMass
    embodied_total: CarbonMass
    embodied_amortized: CarbonMass
    total: CarbonMass
    per_chip_embodied: Dict[str, CarbonMass]
    per_package_packaging: Dict[str, CarbonMass]
    per_chip: Dict[str, ChipEmbodied]
    kind_shares: Dict[ChipKind, KindShare]
    carbon_per_inference: Optional[CarbonMass] = None
    warnings: List[str] = Field(default_factory=list)


COMPARED_FIELDS = ("operational", "embodied_total", "embodied_amortized", "total")


class FieldComparison(DomainModel):
    """b/a ratio and signed b - a delta (grams) of one report field."""
    field: str
    a: CarbonMass
    b: CarbonMass
    ratio: float
    delta_g: float
    relative_delta: float = Field(..., description="(b - a) / b, the share by which a is lower")
    lower: str


class ComparisonReport(DomainModel):
    a_name: str
    b_name: str
    workload: str
    a_report: FootprintReport
    b_report: FootprintReport
    by_field: Dict[str, FieldComparison]
    warnings: List[str] = Field(default_factory=list)


class SuiteComparison(DomainModel):
    a_name: str
    b_name: str
    comparisons: Dict[str, ComparisonReport]
    mean_ratios: Dict[str, float]
    warnings: List[str] = Field(default_factory=list)
