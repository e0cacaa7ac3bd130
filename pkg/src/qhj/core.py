"""Units, scenario records, microstates and derived wavenumbers.

All lengths, energies and times are expressed in whatever unit system the
``UnitSystem`` implies; the default is hbar = m = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

# Relative guard band on the microstate discriminant ab - c^2/4.
DISCRIMINANT_GUARD = 1e-12


class DomainError(ValueError):
    """An input violates a scenario or microstate invariant."""


class ConvergenceError(ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class IllConditionedError(ArithmeticError):
    """A quantity cannot be evaluated reliably at the requested point."""


class MeasurementInconsistency(ValueError):
    """Measured constants of the motion are not mutually consistent."""


def _finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "hbar", _finite_positive("hbar", self.hbar))
        object.__setattr__(self, "mass", _finite_positive("mass", self.mass))

    def wavenumber(self, energy: float) -> float:
        """sqrt(2 m E)/hbar for E >= 0."""
        return math.sqrt(2.0 * self.mass * energy) / self.hbar

    def energy(self, wavenumber: float) -> float:
        """(hbar k)^2 / 2m."""
        return (self.hbar * wavenumber) ** 2 / (2.0 * self.mass)


@dataclass(frozen=True)
class Microstate:
    """Coefficients (a, b, c) of the quadratic form a phi^2 + b theta^2 + c phi theta."""

    a: float
    b: float
    c: float = 0.0

    @property
    def discriminant(self) -> float:
        return self.a * self.b - 0.25 * self.c * self.c

    def scaled(self, factor: float) -> "Microstate":
        return Microstate(factor * self.a, factor * self.b, factor * self.c)

    def as_dict(self) -> dict[str, float]:
        return {"a": self.a, "b": self.b, "c": self.c}


def validate_microstate(ms: Microstate) -> None:
    """Raise ``DomainError`` naming the first violated constraint."""
    a, b, c = float(ms.a), float(ms.b), float(ms.c)
    for name, v in (("a", a), ("b", b), ("c", c)):
        if not math.isfinite(v):
            raise DomainError(f"microstate coefficient {name} must be finite")
    if a <= 0.0:
        raise DomainError(f"microstate requires a > 0 (a = {a!r})")
    if b <= 0.0:
        raise DomainError(f"microstate requires b > 0 (b = {b!r})")
    disc = a * b - 0.25 * c * c
    if disc <= DISCRIMINANT_GUARD * a * b:
        raise DomainError(
            f"microstate requires ab - c^2/4 > 0 (discriminant = {disc!r})"
        )


@dataclass(frozen=True)
class BarrierScenario:
    """Normal incidence on the semi-infinite barrier V = U for x >= 0."""

    U: float
    E_x: float
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self) -> None:
        _finite_positive("barrier height U", self.U)
        if not (math.isfinite(self.E_x) and 0.0 < self.E_x < self.U):
            raise DomainError(
                f"E_x must satisfy 0 < E_x < U (E_x = {self.E_x!r}, U = {self.U!r})"
            )

    kind = "barrier"


@dataclass(frozen=True)
class ObliqueScenario:
    """Oblique incidence with conserved transverse wavenumber k_y."""

    U: float
    E: float
    k_y: float
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self) -> None:
        _finite_positive("barrier height U", self.U)
        if not math.isfinite(self.E) or not math.isfinite(self.k_y):
            raise DomainError("E and k_y must be finite")
        kx2, kappa2 = _oblique_squares(self.U, self.E, self.k_y, self.units)
        if kx2 <= 0.0:
            raise DomainError(
                f"oblique constraint violated: k_x^2 = 2mE/hbar^2 - k_y^2 = {kx2!r} <= 0"
            )
        if kappa2 <= 0.0:
            raise DomainError(f"oblique constraint violated: kappa^2 = {kappa2!r} <= 0")

    kind = "oblique"


def _oblique_squares(U: float, E: float, k_y: float, units: UnitSystem) -> tuple[float, float]:
    s = 2.0 * units.mass / units.hbar**2
    return s * E - k_y * k_y, s * (U - E) + k_y * k_y


@dataclass(frozen=True)
class WellScenario:
    """Symmetric bound level ``n`` of the square well V = U for |x| > q."""

    U: float
    q: float
    n: int = 0
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self) -> None:
        _finite_positive("barrier height U", self.U)
        _finite_positive("half width q", self.q)
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"level n must be a non-negative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not self.n * math.pi < self.strength:
            raise DomainError(
                f"level n = {self.n} not admissible: need n*pi < (2mU)^(1/2) q/hbar = {self.strength:.17g}"
            )

    @property
    def strength(self) -> float:
        """Dimensionless well strength (2mU)^(1/2) q / hbar."""
        return math.sqrt(2.0 * self.units.mass * self.U) * self.q / self.units.hbar

    kind = "well"


@dataclass(frozen=True)
class DuctScenario:
    """Square-well duct: a bound level in x with free motion along y."""

    well: WellScenario
    k_y: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.k_y):
            raise DomainError("k_y must be finite")

    @property
    def units(self) -> UnitSystem:
        return self.well.units

    @property
    def U(self) -> float:
        return self.well.U

    @property
    def q(self) -> float:
        return self.well.q

    @property
    def n(self) -> int:
        return self.well.n

    kind = "duct"


Scenario = Union[BarrierScenario, ObliqueScenario, WellScenario, DuctScenario]


def derive_wavenumbers(scen: Scenario) -> tuple[float, float]:
    """Return ``(k_x, kappa)`` for any scenario.

    Well and duct scenarios take the wavenumbers of their quantized level.
    """
    if isinstance(scen, BarrierScenario):
        if not 0.0 < scen.E_x < scen.U:
            raise DomainError("E_x must satisfy 0 < E_x < U")
        u = scen.units
        return u.wavenumber(scen.E_x), u.wavenumber(scen.U - scen.E_x)
    if isinstance(scen, ObliqueScenario):
        kx2, kappa2 = _oblique_squares(scen.U, scen.E, scen.k_y, scen.units)
        if kx2 <= 0.0 or kappa2 <= 0.0:
            raise DomainError("oblique constraint violated: k_x and kappa must be real")
        return math.sqrt(kx2), math.sqrt(kappa2)
    if isinstance(scen, (WellScenario, DuctScenario)):
        from .quantization import level_of

        lvl = level_of(scen)
        return lvl.k_x, lvl.kappa
    raise TypeError(f"unsupported scenario type {type(scen).__name__}")


def transverse_wavenumber(scen: Scenario) -> float:
    return float(getattr(scen, "k_y", 0.0))


def total_energy(scen: Scenario) -> float:
    """Energy conjugate to time: E_x for 1-D problems, E for 2-D ones."""
    if isinstance(scen, BarrierScenario):
        return scen.E_x
    if isinstance(scen, ObliqueScenario):
        return scen.E
    from .quantization import level_of

    e_x = level_of(scen).E_x
    if isinstance(scen, DuctScenario):
        return e_x + scen.units.energy(scen.k_y)
    return e_x
