"""Symmetric bound states of the finite square well and the action variable."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.optimize import bisect

from .core import (
    ConvergenceError,
    DomainError,
    DuctScenario,
    Microstate,
    UnitSystem,
    WellScenario,
    validate_microstate,
)

MAX_BISECTIONS = 200


@dataclass(frozen=True)
class BoundLevel:
    n: int
    k_x: float
    kappa: float
    E_x: float
    residual: float  # tan(k_x q) - kappa/k_x at the root


def _level_root(n: int, strength: float) -> float:
    """Root z = k_x q of tan z = sqrt(strength^2 - z^2)/z on (n pi, n pi + pi/2).

    Works with z sin z - sqrt(strength^2 - z^2) cos z, which has the same roots
    on the bracket but no pole at n pi + pi/2.
    """
    lo = n * math.pi
    hi = min(lo + 0.5 * math.pi, strength)

    def h(z: float) -> float:
        return z * math.sin(z) - math.sqrt(max(strength * strength - z * z, 0.0)) * math.cos(z)

    if n == 0 and h(hi) == 0.0:
        return hi
    # n = 0 starts at z = 0 where h = -strength; other brackets open at h = -(+-)kappa q.
    root, info = bisect(h, lo, hi, xtol=1e-300, rtol=4 * 2.220446049250313e-16,
                        maxiter=MAX_BISECTIONS, full_output=True, disp=False)
    if not info.converged:
        raise ConvergenceError(f"bisection for level {n} did not converge")
    return root


@lru_cache(maxsize=256)
def _levels(U: float, q: float, hbar: float, mass: float) -> tuple[BoundLevel, ...]:
    units = UnitSystem(hbar, mass)
    strength = math.sqrt(2.0 * mass * U) * q / hbar
    out = []
    n = 0
    while n * math.pi < strength:
        z = _level_root(n, strength)
        k_x = z / q
        kappa = math.sqrt(max(strength * strength - z * z, 0.0)) / q
        if kappa <= 0.0:
            raise ConvergenceError(f"level {n} root sits at the continuum edge")
        residual = math.tan(z) - kappa / k_x
        out.append(BoundLevel(n, k_x, kappa, units.energy(k_x), residual))
        n += 1
    return tuple(out)


def symmetric_levels(U: float, q: float, units: UnitSystem | None = None) -> list[BoundLevel]:
    """All symmetric bound levels of a well of depth ``U`` and half width ``q``.

    One root of tan(k q) = kappa/k per admissible n (n pi < (2mU)^(1/2) q/hbar),
    located by bisection.  The list is never empty.
    """
    units = units or UnitSystem()
    if not (math.isfinite(U) and U > 0 and math.isfinite(q) and q > 0):
        raise DomainError("well requires finite U > 0 and q > 0")
    return list(_levels(float(U), float(q), units.hbar, units.mass))


def level_of(scen: WellScenario | DuctScenario) -> BoundLevel:
    well = scen.well if isinstance(scen, DuctScenario) else scen
    levels = symmetric_levels(well.U, well.q, well.units)
    if well.n >= len(levels):
        raise DomainError(f"level {well.n} exceeds the {len(levels)} admissible symmetric levels")
    return levels[well.n]


def quantization_residual(E_x: float, U: float, q: float, units: UnitSystem | None = None) -> float:
    """tan(k q) - kappa/k at an arbitrary energy 0 < E_x < U."""
    units = units or UnitSystem()
    k = units.wavenumber(E_x)
    kappa = units.wavenumber(U - E_x)
    return math.tan(k * q) - kappa / k


def growth_coefficient(E_x: float, U: float, q: float, units: UnitSystem | None = None) -> float:
    """Coefficient of exp[kappa (x - q)] in the continuation of cos(k x) past x = q.

    Matching value and slope at x = q gives (cos kq - (k/kappa) sin kq)/2.  It
    vanishes only on a symmetric level; elsewhere the continuation blows up.
    """
    units = units or UnitSystem()
    if not 0.0 < E_x < U:
        raise DomainError("need 0 < E_x < U")
    k = units.wavenumber(E_x)
    kappa = units.wavenumber(U - E_x)
    return 0.5 * (math.cos(k * q) - (k / kappa) * math.sin(k * q))


def action_variable(level: BoundLevel, ms: Microstate, scen: WellScenario | DuctScenario,
                    *, tail_tol: float = 1e-12) -> float:
    """J = closed-loop integral of dW/dx over one libration.

    Evaluated as 2 [W(X) - W(-X)] from the branch-continuous characteristic
    function with X = q + 40/kappa.
    """
    from .hj_engine import hamilton_characteristic, phase_tail_deficit

    validate_microstate(ms)
    well = scen.well if isinstance(scen, DuctScenario) else scen
    if level.n != well.n:
        well = WellScenario(well.U, well.q, level.n, well.units)
    X = well.q + 40.0 / level.kappa
    J = 2.0 * (hamilton_characteristic(X, well, ms) - hamilton_characteristic(-X, well, ms))
    tail = 2.0 * well.units.hbar * (
        phase_tail_deficit(X, well, ms) + phase_tail_deficit(-X, well, ms)
    )
    if tail > tail_tol * abs(J):
        raise ConvergenceError(f"action tail {tail:.3e} exceeds tolerance at X = {X:.6g}")
    return J
