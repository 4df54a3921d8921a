"""Closed-form torsional rigidities and the de Saint Venant inequality.

All values use the convention ``T = 2 int u = int |grad u|^2`` with
``-Lap u = 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Polygon

SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 10_000
T_UNIT_DISK = math.pi / 2.0


@dataclass(frozen=True)
class ReferenceShape:
    """``disk`` takes ``(r,)``; ``ellipse`` takes semi-axes ``(a, b)``;
    ``rectangle`` takes side lengths ``(a, b)``."""

    kind: str
    params: tuple

    def __post_init__(self):
        need = {"disk": 1, "ellipse": 2, "rectangle": 2}
        if self.kind not in need:
            raise ValueError(f"unknown reference shape {self.kind!r}")
        p = tuple(float(x) for x in self.params)
        if len(p) != need[self.kind] or any(not x > 0 for x in p):
            raise ValueError(f"{self.kind} needs {need[self.kind]} positive parameter(s)")
        if len(p) == 2:
            p = tuple(sorted(p))
        object.__setattr__(self, "params", p)

    @classmethod
    def disk(cls, r):
        return cls("disk", (r,))

    @classmethod
    def ellipse(cls, a, b):
        return cls("ellipse", (a, b))

    @classmethod
    def rectangle(cls, a, b):
        return cls("rectangle", (a, b))


def _rectangle_torsion(a, b):
    # a <= b; the tanh series converges like m^-5
    s = 0.0
    for i in range(SERIES_MAX_TERMS):
        m = 2 * i + 1
        term = math.tanh(m * math.pi * b / (2.0 * a)) / m**5
        s += term
        if term < SERIES_TOL:
            break
    return a**3 * b / 3.0 * (1.0 - 192.0 * a / (math.pi**5 * b) * s)


def reference_torsion(shape: ReferenceShape) -> float:
    if shape.kind == "disk":
        (r,) = shape.params
        return math.pi * r**4 / 2.0
    a, b = shape.params
    if shape.kind == "ellipse":
        return math.pi * a**3 * b**3 / (a * a + b * b)
    return _rectangle_torsion(a, b)


@dataclass(frozen=True)
class SaintVenantResult:
    holds: bool
    slack: float
    lhs: float
    rhs: float


def saint_venant_check(P: Polygon, T: float, margin: float = 0.0) -> SaintVenantResult:
    """Scale-invariant form ``T(P) / T(unit disk) <= (area(P) / pi)^2``.

    ``margin`` absorbs discretization error in ``T`` (relative to the
    right-hand side).
    """
    lhs = T / T_UNIT_DISK
    rhs = (P.area / math.pi) ** 2
    slack = rhs - lhs
    return SaintVenantResult(slack >= -(1e-9 + margin * rhs), slack, lhs, rhs)
