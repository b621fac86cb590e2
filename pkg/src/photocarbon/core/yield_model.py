"""Poisson die yield, effective area and dies-per-wafer."""

import logging
import math
from typing import Iterable, List, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import YieldError
from .quantities import Area, Length

logger = logging.getLogger("photocarbon.yield")

DEFAULT_DEFECT_DENSITY = 0.1
PHOTONIC_CRITICAL_AREA_FRACTION = 0.2
ELECTRONIC_CRITICAL_AREA_FRACTION = 1.0
DEFAULT_CURVE_DEFECT_DENSITIES = (0.05, 0.1, 0.2)

MmLike = Union[Length, int, float]


class YieldParams(BaseModel):
    """Defect density (cm^-2) and the share of die area where a defect is fatal."""
    model_config = ConfigDict(frozen=True)

    defect_density: float = Field(default=DEFAULT_DEFECT_DENSITY, ge=0, allow_inf_nan=False)
    critical_area_fraction: float = Field(default=ELECTRONIC_CRITICAL_AREA_FRACTION, gt=0, le=1)


class DiesPerWafer(BaseModel):
    model_config = ConfigDict(frozen=True)

    count: int = Field(..., ge=0)
    fits: bool


class YieldPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    defect_density: float
    critical_area_fraction: float
    area_cm2: float
    yield_value: float


def poisson_yield(params: YieldParams, die_area: Area) -> float:
    """exp(-d0 * f * A); 1.0 when d0 is 0.

    Very large d0 * A underflows to 0.0; callers that divide by the yield
    must check for that.
    """
    if params.defect_density == 0:
        return 1.0
    return math.exp(-params.defect_density * params.critical_area_fraction * die_area.value)


def effective_area(die_area: Area, yield_: float) -> Area:
    """Area consumed per good die.

    Args:
        die_area: area of one die
        yield_: fraction of good dice, in (0, 1]

    Raises:
        YieldError: if the yield is outside (0, 1]
    """
    if not (0 < yield_ <= 1):
        raise YieldError(f"yield must be in (0, 1], got {yield_!r}", {"yield": yield_})
    if yield_ == 1:
        return die_area
    return Area(die_area.value / yield_)


def _mm(value: MmLike) -> float:
    return value.value if isinstance(value, Length) else float(value)


def dies_per_wafer(die_area: Area, wafer_diameter: MmLike = 300.0, edge_exclusion: MmLike = 3.0) -> DiesPerWafer:
    """floor(pi r^2 / A - pi 2r / sqrt(2A)) with r the usable radius in cm.

    Plain numbers for the wafer geometry are read as millimetres. A die that
    does not fit gives a count of 0 with ``fits`` False.
    """
    radius_cm = (_mm(wafer_diameter) / 2 - _mm(edge_exclusion)) / 10
    if radius_cm <= 0:
        raise YieldError(
            "edge exclusion leaves no usable wafer area",
            {"wafer_diameter_mm": _mm(wafer_diameter), "edge_exclusion_mm": _mm(edge_exclusion)},
        )
    area = die_area.value
    raw = math.pi * radius_cm ** 2 / area - math.pi * 2 * radius_cm / math.sqrt(2 * area)
    count = max(0, math.floor(raw))
    if count == 0:
        logger.warning("die of %.6g cm2 does not fit on a %.6g mm wafer", area, _mm(wafer_diameter))
    return DiesPerWafer(count=count, fits=count > 0)


def good_dies_per_wafer(
    params: YieldParams,
    die_area: Area,
    wafer_diameter: MmLike = 300.0,
    edge_exclusion: MmLike = 3.0,
) -> int:
    dies = dies_per_wafer(die_area, wafer_diameter, edge_exclusion)
    return math.floor(dies.count * poisson_yield(params, die_area))


def area_grid(start: float, stop: float, steps: int) -> List[float]:
    """Evenly spaced die areas (cm2), both ends included."""
    if steps < 1:
        raise YieldError(f"steps must be >= 1, got {steps}")
    if start <= 0 or stop <= 0:
        raise YieldError("swept areas must be > 0", {"from": start, "to": stop})
    return [float(a) for a in np.linspace(start, stop, steps)]


def yield_curve(
    defect_densities: Iterable[float],
    areas: Iterable[float],
    fractions: Iterable[float] = (PHOTONIC_CRITICAL_AREA_FRACTION, ELECTRONIC_CRITICAL_AREA_FRACTION),
) -> List[YieldPoint]:
    """Yield for every (d0, fraction, area) combination, in that nesting order."""
    areas = list(areas)
    fractions = list(fractions)
    points = []
    for d0 in defect_densities:
        for f in fractions:
            params = YieldParams(defect_density=d0, critical_area_fraction=f)
            for a in areas:
                points.append(
                    YieldPoint(
                        defect_density=d0,
                        critical_area_fraction=f,
                        area_cm2=a,
                        yield_value=poisson_yield(params, Area(a)),
                    )
                )
    return points
