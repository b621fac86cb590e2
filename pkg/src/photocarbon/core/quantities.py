"""
Unit-carrying scalars used throughout photocarbon.

Every quantity stores its value in a canonical unit (kWh, cm2, gCO2e,
g/kWh, hours, kW, mm) together with a display unit. Converting a quantity
only swaps the display unit, so ``convert(convert(q, u), u0) == q`` holds
exactly. Arithmetic is dimension-checked: only the products and quotients
the carbon model needs are defined, everything else raises ``UnitError``.
"""

import math
from enum import Enum
from typing import Any, ClassVar, Dict, Optional, Tuple, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import UnitError

__all__ = [
    "Quantity",
    "Energy",
    "Area",
    "CarbonMass",
    "CarbonIntensity",
    "TimeSpan",
    "Power",
    "Length",
    "CoefficientKind",
    "PerAreaCoefficient",
    "epa",
    "gpa",
    "mpa",
    "convert",
    "HOURS_PER_YEAR",
]

Q = TypeVar("Q", bound="Quantity")
Number = Union[int, float]

HOURS_PER_YEAR = 8760.0

# unit tag -> (numerator, denominator): canonical = magnitude * num / den
UnitTable = Dict[str, Tuple[float, float]]


def _is_scalar(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


class Quantity(BaseModel):
    """A non-negative, finite scalar with a physical dimension.

    Attributes:
        value: magnitude in the canonical unit of the dimension
        unit: display unit; never changes ``value``
    """
    model_config = ConfigDict(frozen=True)

    dimension: ClassVar[str] = "dimensionless"
    canonical_unit: ClassVar[str] = ""
    units: ClassVar[UnitTable] = {"": (1.0, 1.0)}
    strictly_positive: ClassVar[bool] = False

    value: float = Field(allow_inf_nan=False)
    unit: str = ""

    def __init__(self, value: Number, unit: Optional[str] = None, **data: Any) -> None:
        unit = unit or data.pop("unit", None) or self.canonical_unit
        num, den = self._unit_table(data.get("kind")).get(unit, (None, None))
        if num is None:
            raise UnitError(
                f"unknown {self.dimension} unit '{unit}'",
                {"unit": unit, "dimension": self.dimension},
            )
        if not _is_scalar(value):
            raise UnitError(f"{type(self).__name__} value must be a real number, got {value!r}")
        try:
            super().__init__(value=float(value) * num / den, unit=unit, **data)
        except ValidationError as e:
            raise UnitError(
                f"invalid {type(self).__name__} {value!r} {unit}: {e.errors()[0]['msg']}",
                {"value": value, "unit": unit},
            ) from e

    @classmethod
    def _check_sign(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        if cls.strictly_positive and v <= 0:
            raise ValueError("must be > 0")
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("value")
    @classmethod
    def _validate_value(cls, v: float) -> float:
        return cls._check_sign(v)

    @classmethod
    def _unit_table(cls, kind: Any = None) -> UnitTable:
        return cls.units

    @property
    def magnitude(self) -> float:
        """Value expressed in the display unit."""
        num, den = self._unit_table(getattr(self, "kind", None))[self.unit]
        return self.value * den / num

    def to(self: Q, unit: str) -> Q:
        return convert(self, unit)

    def _same_dimension(self, other: Any) -> bool:
        return type(other) is type(self)

    def _with_value(self: Q, value: float) -> Q:
        """New quantity of the same type and display unit from a canonical value."""
        try:
            return self.model_copy(update={"value": self._check_sign(float(value))})
        except ValueError as e:
            raise UnitError(f"invalid {type(self).__name__} {value!r}: {e}") from e

    def _require_same(self, other: Any, op: str) -> None:
        if not self._same_dimension(other):
            raise UnitError(
                f"cannot {op} {_describe(other)} and {_describe(self)}",
                {"left": _describe(self), "right": _describe(other)},
            )

    def __add__(self: Q, other: Any) -> Q:
        self._require_same(other, "add")
        return self._with_value(self.value + other.value)

    def __radd__(self: Q, other: Any) -> Q:
        # lets sum() start from 0
        if _is_scalar(other) and other == 0:
            return self
        return self.__add__(other)

    def __sub__(self: Q, other: Any) -> Q:
        self._require_same(other, "subtract")
        return self._with_value(self.value - other.value)

    def __mul__(self, other: Any) -> Any:
        if _is_scalar(other):
            if not math.isfinite(other):
                raise UnitError(f"cannot scale {_describe(self)} by {other!r}")
            return self._with_value(self.value * other)
        return _multiply(self, other)

    def __rmul__(self, other: Any) -> Any:
        return self.__mul__(other)

    def __truediv__(self, other: Any) -> Any:
        if _is_scalar(other):
            if other == 0 or not math.isfinite(other):
                raise UnitError(f"cannot divide {_describe(self)} by {other!r}")
            return self._with_value(self.value / other)
        if self._same_dimension(other):
            if other.value == 0:
                raise UnitError(f"division by zero {type(other).__name__}")
            return self.value / other.value
        return _divide(self, other)

    def _compare(self, other: Any) -> Tuple[float, float]:
        self._require_same(other, "compare")
        return self.value, other.value

    def __lt__(self, other: Any) -> bool:
        a, b = self._compare(other)
        return a < b

    def __le__(self, other: Any) -> bool:
        a, b = self._compare(other)
        return a <= b

    def __gt__(self, other: Any) -> bool:
        a, b = self._compare(other)
        return a > b

    def __ge__(self, other: Any) -> bool:
        a, b = self._compare(other)
        return a >= b

    def __eq__(self, other: Any) -> bool:
        return self._same_dimension(other) and self.value == other.value

    def __hash__(self) -> int:
        return hash((type(self).__name__, getattr(self, "kind", None), self.value))

    def __str__(self) -> str:
        return f"{self.magnitude:.6g} {self.unit}"

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.magnitude!r}, {self.unit!r})"


class Energy(Quantity):
    dimension: ClassVar[str] = "energy"
    canonical_unit: ClassVar[str] = "kWh"
    units: ClassVar[UnitTable] = {
        "kWh": (1.0, 1.0),
        "Wh": (1.0, 1000.0),
        "MWh": (1000.0, 1.0),
        "J": (1.0, 3.6e6),
        "kJ": (1.0, 3600.0),
        "MJ": (1.0, 3.6),
    }


class Area(Quantity):
    dimension: ClassVar[str] = "area"
    canonical_unit: ClassVar[str] = "cm2"
    units: ClassVar[UnitTable] = {
        "cm2": (1.0, 1.0),
        "mm2": (1.0, 100.0),
        "m2": (10000.0, 1.0),
    }
    strictly_positive: ClassVar[bool] = True


class CarbonMass(Quantity):
    dimension: ClassVar[str] = "carbon mass"
    canonical_unit: ClassVar[str] = "g"
    units: ClassVar[UnitTable] = {
        "g": (1.0, 1.0),
        "kg": (1000.0, 1.0),
        "t": (1.0e6, 1.0),
    }


class CarbonIntensity(Quantity):
    dimension: ClassVar[str] = "carbon intensity"
    canonical_unit: ClassVar[str] = "g/kWh"
    units: ClassVar[UnitTable] = {
        "g/kWh": (1.0, 1.0),
        "kg/kWh": (1000.0, 1.0),
        "g/MWh": (1.0, 1000.0),
    }


class TimeSpan(Quantity):
    dimension: ClassVar[str] = "time"
    canonical_unit: ClassVar[str] = "h"
    units: ClassVar[UnitTable] = {
        "h": (1.0, 1.0),
        "s": (1.0, 3600.0),
        "min": (1.0, 60.0),
        "day": (24.0, 1.0),
        "year": (HOURS_PER_YEAR, 1.0),
    }


class Power(Quantity):
    dimension: ClassVar[str] = "power"
    canonical_unit: ClassVar[str] = "kW"
    units: ClassVar[UnitTable] = {
        "kW": (1.0, 1.0),
        "W": (1.0, 1000.0),
        "MW": (1000.0, 1.0),
    }


class Length(Quantity):
    dimension: ClassVar[str] = "length"
    canonical_unit: ClassVar[str] = "mm"
    units: ClassVar[UnitTable] = {
        "mm": (1.0, 1.0),
        "um": (1.0, 1000.0),
        "cm": (10.0, 1.0),
        "m": (1000.0, 1.0),
    }


class CoefficientKind(str, Enum):
    EPA = "EPA"
    GPA = "GPA"
    MPA = "MPA"


_ENERGY_PER_AREA: UnitTable = {
    "kWh/cm2": (1.0, 1.0),
    "Wh/cm2": (1.0, 1000.0),
    "kWh/mm2": (100.0, 1.0),
}
_MASS_PER_AREA: UnitTable = {
    "g/cm2": (1.0, 1.0),
    "kg/cm2": (1000.0, 1.0),
    "g/mm2": (100.0, 1.0),
}


class PerAreaCoefficient(Quantity):
    """EPA (kWh/cm2), GPA or MPA (gCO2e/cm2); arithmetic only within one kind."""
    dimension: ClassVar[str] = "per-area coefficient"
    canonical_unit: ClassVar[str] = ""

    kind: CoefficientKind

    def __init__(self, value: Number, unit: Optional[str] = None, **data: Any) -> None:
        kind = CoefficientKind(data.pop("kind", None) or CoefficientKind.EPA)
        unit = unit or data.pop("unit", None) or next(iter(self._unit_table(kind)))
        super().__init__(value, unit, kind=kind, **data)

    @classmethod
    def _unit_table(cls, kind: Any = None) -> UnitTable:
        if kind is None:
            return {**_ENERGY_PER_AREA, **_MASS_PER_AREA}
        return _ENERGY_PER_AREA if CoefficientKind(kind) is CoefficientKind.EPA else _MASS_PER_AREA

    def _same_dimension(self, other: Any) -> bool:
        return type(other) is type(self) and other.kind is self.kind

    def __str__(self) -> str:
        return f"{self.kind.value} {self.magnitude:.6g} {self.unit}"


def epa(value: Number, unit: str = "kWh/cm2") -> PerAreaCoefficient:
    return PerAreaCoefficient(value, unit, kind=CoefficientKind.EPA)


def gpa(value: Number, unit: str = "g/cm2") -> PerAreaCoefficient:
    return PerAreaCoefficient(value, unit, kind=CoefficientKind.GPA)


def mpa(value: Number, unit: str = "g/cm2") -> PerAreaCoefficient:
    return PerAreaCoefficient(value, unit, kind=CoefficientKind.MPA)


_QUANTITY_TYPES = (Energy, Area, CarbonMass, CarbonIntensity, TimeSpan, Power, Length)
_UNIT_DIMENSIONS: Dict[str, str] = {
    **{u: "energy per area" for u in _ENERGY_PER_AREA},
    **{u: "mass per area" for u in _MASS_PER_AREA},
}
for _cls in _QUANTITY_TYPES:
    _UNIT_DIMENSIONS.update({u: _cls.dimension for u in _cls.units})


def _describe(q: Any) -> str:
    if isinstance(q, PerAreaCoefficient):
        return f"{q.kind.value} coefficient"
    if isinstance(q, Quantity):
        return q.dimension
    return type(q).__name__


def convert(q: Q, unit: str) -> Q:
    """Re-express a quantity in another unit of the same dimension.

    Raises:
        UnitError: if the unit is unknown or belongs to another dimension
    """
    table = q._unit_table(getattr(q, "kind", None))
    if unit not in table:
        target = _UNIT_DIMENSIONS.get(unit, "unknown unit")
        raise UnitError(
            f"cannot convert {q.unit} ({_describe(q)}) to {unit} ({target})",
            {"from": q.unit, "to": unit},
        )
    return q.model_copy(update={"unit": unit})


def _multiply(a: Quantity, b: Any) -> Quantity:
    pair = {type(a), type(b)}
    if pair == {Energy, CarbonIntensity}:
        return CarbonMass(a.value * b.value)
    if pair == {Power, TimeSpan}:
        return Energy(a.value * b.value)
    if pair == {PerAreaCoefficient, Area}:
        coefficient = a if isinstance(a, PerAreaCoefficient) else b
        area = b if coefficient is a else a
        if coefficient.kind is CoefficientKind.EPA:
            return Energy(coefficient.value * area.value)
        return CarbonMass(coefficient.value * area.value)
    raise UnitError(f"cannot multiply {_describe(a)} by {_describe(b)}")


def _divide(a: Quantity, b: Any) -> Quantity:
    if isinstance(b, Area):
        if isinstance(a, Energy):
            return PerAreaCoefficient(a.value / b.value, kind=CoefficientKind.EPA)
        if isinstance(a, CarbonMass):
            return PerAreaCoefficient(a.value / b.value, kind=CoefficientKind.GPA)
    if isinstance(a, Energy) and isinstance(b, TimeSpan) and b.value > 0:
        return Power(a.value / b.value)
    raise UnitError(f"cannot divide {_describe(a)} by {_describe(b)}")
