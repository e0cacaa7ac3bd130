"""Closed-form independent solution pairs (phi, theta) with Wronskian normalization.

The pair is scaled so that W(phi, theta)^2 = 2m / [hbar^2 (ab - c^2/4)].  In
classically forbidden tails theta grows like exp(kappa s) and phi decays like
exp(-kappa s); past ``SCALE_THRESHOLD`` e-folds the sample is returned in
scaled form: phi and phi' are stored times exp(log_scale), theta and theta'
times exp(-log_scale).  The stored Wronskian is then the true one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    BarrierScenario,
    DomainError,
    DuctScenario,
    Microstate,
    ObliqueScenario,
    UnitSystem,
    WellScenario,
    derive_wavenumbers,
    validate_microstate,
)

SCALE_THRESHOLD = 300.0
QUANTIZATION_TOL = 1e-9


@dataclass(frozen=True)
class BasisSample:
    x: float
    phi: float
    theta: float
    dphi_dx: float
    dtheta_dx: float
    log_scale: float = 0.0  # true phi = stored * exp(-log_scale), true theta = stored * exp(log_scale)

    @property
    def scaled(self) -> bool:
        return self.log_scale != 0.0

    def unscaled(self) -> "BasisSample":
        """Linear values; raises ``OverflowError`` when they are not representable."""
        if not self.scaled:
            return self
        up = math.exp(self.log_scale)  # raises OverflowError past ~709
        dn = math.exp(-self.log_scale)
        vals = [self.phi * dn, self.theta * up, self.dphi_dx * dn, self.dtheta_dx * up]
        if not all(math.isfinite(v) for v in vals):
            raise OverflowError(f"basis values at x = {self.x!r} overflow")
        return BasisSample(self.x, *vals)


@dataclass(frozen=True)
class WronskianNorm:
    w_squared: float

    def __post_init__(self) -> None:
        if not self.w_squared > 0.0:
            raise DomainError("Wronskian normalization must be positive")


def wronskian_norm(ms: Microstate, units: UnitSystem) -> WronskianNorm:
    return WronskianNorm(2.0 * units.mass / (units.hbar**2 * ms.discriminant))


def amplitude(k_x: float, ms: Microstate, units: UnitSystem) -> float:
    """Common prefactor [2m / (hbar^2 k_x^2 (ab - c^2/4))]^(1/4)."""
    return (2.0 * units.mass / (units.hbar**2 * k_x**2 * ms.discriminant)) ** 0.25


def wronskian(s: BasisSample) -> float:
    """phi theta' - phi' theta (the opposite scalings of phi and theta cancel)."""
    return s.phi * s.dtheta_dx - s.dphi_dx * s.theta


def common_scaled(phi: float, theta: float, dphi: float, dtheta: float, ls: float
                  ) -> tuple[float, float, float, float]:
    """Values with the single factor exp(ls) pulled out of all four.

    Ratios such as theta/phi and Q'/Q are unchanged by a common factor, so this
    is the form phase and momentum formulas consume.
    """
    if ls == 0.0:
        return phi, theta, dphi, dtheta
    f = math.exp(-2.0 * ls)
    return phi * f, theta, dphi * f, dtheta


# -- building blocks, parameterized directly by wavenumbers ---------------------


def tail_pair(s: float, k: float, kappa: float) -> tuple[float, float, float, float, float]:
    """Decaying/growing pair at depth s >= 0 into a forbidden region.

    Unit-amplitude form of the barrier solutions: the pair matches
    (cos u, sin u) with tan u = kappa/k at s = 0 in value and slope.
    Returns (phi, theta, phi', theta', log_scale).
    """
    r = kappa / k
    root = math.sqrt(1.0 + r * r)
    plus, minus = r + 1.0 / r, r - 1.0 / r
    ks = kappa * s
    if ks <= SCALE_THRESHOLD:
        e_up, e_dn = math.exp(ks), math.exp(-ks)
        phi = e_dn / root
        theta = (plus * e_up + minus * e_dn) / (2.0 * root)
        dtheta = kappa * (plus * e_up - minus * e_dn) / (2.0 * root)
        return phi, theta, -kappa * phi, dtheta, 0.0
    e2 = math.exp(-2.0 * ks)
    phi = 1.0 / root
    theta = (plus + minus * e2) / (2.0 * root)
    dtheta = kappa * (plus - minus * e2) / (2.0 * root)
    return phi, theta, -kappa * phi, dtheta, ks


def barrier_pair(x: float, k: float, kappa: float) -> tuple[float, float, float, float, float]:
    """Unit-amplitude barrier pair; x >= 0 uses the forbidden-region branch."""
    if x >= 0.0:
        return tail_pair(x, k, kappa)
    u = k * x + math.atan(kappa / k)
    cu, su = math.cos(u), math.sin(u)
    return cu, su, -k * su, k * cu, 0.0


def anchored_well_pair(x: float, k: float, kappa: float, q: float, n: int
                       ) -> tuple[float, float, float, float, float]:
    """Well pair with tails anchored at +-q in the barrier form.

    Equal to the symmetric-level pair when tan(kq) = kappa/k; for other
    energies the tails are still the interface-anchored barrier solutions, so
    each region stays an exact solution of its own constant-potential equation.
    """
    if abs(x) <= q:
        cu, su = math.cos(k * x), math.sin(k * x)
        return cu, su, -k * su, k * cu, 0.0
    sigma = -1.0 if n % 2 else 1.0
    phi, theta, dphi, dtheta, ls = tail_pair(abs(x) - q, k, kappa)
    if x > q:
        return sigma * phi, sigma * theta, sigma * dphi, sigma * dtheta, ls
    # x < -q: phi even, theta odd
    return sigma * phi, -sigma * theta, -sigma * dphi, sigma * dtheta, ls


def _sample(x: float, amp: float, pair: tuple[float, float, float, float, float]) -> BasisSample:
    phi, theta, dphi, dtheta, ls = pair
    return BasisSample(x, amp * phi, amp * theta, amp * dphi, amp * dtheta, ls)


# -- public evaluators ----------------------------------------------------------


def eval_basis_barrier(x: float, scen: BarrierScenario | ObliqueScenario, ms: Microstate) -> BasisSample:
    """phi and theta for the semi-infinite barrier at ``x``.

    For x < 0 the pair is N (cos, sin)[k_x x + arctan(kappa/k_x)]; for x >= 0
    phi decays as exp(-kappa x) and theta carries the growing exponential.
    """
    if not isinstance(scen, (BarrierScenario, ObliqueScenario)):
        raise TypeError("eval_basis_barrier needs a barrier or oblique scenario")
    validate_microstate(ms)
    k, kappa = derive_wavenumbers(scen)
    return _sample(float(x), amplitude(k, ms, scen.units), barrier_pair(float(x), k, kappa))


def eval_basis_well(x: float, scen: WellScenario | DuctScenario, ms: Microstate, *,
                    E_x: float | None = None, theta_variant: str = "continuation") -> BasisSample:
    """Symmetric bound state phi and an antisymmetric partner theta.

    Inside |x| <= q the pair is N (cos k_x x, sin k_x x).  Outside, phi is the
    decaying tail cos(k_x q) exp[-kappa(|x| - q)]; theta is the continuation
    of sin(k_x x) that matches value and slope at x = +-q.

    ``E_x`` overrides the level energy (it must still satisfy the quantization
    condition).  ``theta_variant="printed"`` substitutes the literal printed
    form of the x > q branch, exp[kappa(x-q)] - cos(2kq) exp[-kappa(x+a)] over
    2 sin(kq), and exists only to demonstrate that the Wronskian check catches it.
    """
    well = scen.well if isinstance(scen, DuctScenario) else scen
    if not isinstance(well, WellScenario):
        raise TypeError("eval_basis_well needs a well or duct scenario")
    validate_microstate(ms)
    units, q = well.units, well.q
    if E_x is None:
        k, kappa = derive_wavenumbers(well)
    else:
        if not 0.0 < E_x < well.U:
            raise DomainError("E_x must satisfy 0 < E_x < U")
        k, kappa = units.wavenumber(E_x), units.wavenumber(well.U - E_x)
        resid = math.tan(k * q) - kappa / k
        if abs(resid) > QUANTIZATION_TOL * (1.0 + kappa / k):
            raise DomainError(f"E_x = {E_x!r} is not a symmetric level (residual {resid:.3e})")
    amp = amplitude(k, ms, units)
    x = float(x)
    if abs(x) <= q:
        return _sample(x, amp, anchored_well_pair(x, k, kappa, q, well.n))

    s = abs(x) - q
    kq = k * q
    ckq, skq = math.cos(kq), math.sin(kq)
    # theta beyond +q: A e^{kappa s} + B e^{-kappa s} matching sin(kq), k cos(kq)
    A = 0.5 * (skq + (k / kappa) * ckq)
    B = 0.5 * (skq - (k / kappa) * ckq)
    ks = kappa * s
    ls = ks if ks > SCALE_THRESHOLD else 0.0
    up = math.exp(ks - ls)
    dn = math.exp(-ks - ls)
    phi = ckq * math.exp(-ks + ls)
    dphi = -kappa * phi
    theta = A * up + B * dn
    dtheta = kappa * (A * up - B * dn)
    if theta_variant == "printed":
        if x > q:
            theta = (math.exp(ks - ls) - math.cos(2 * kq) * math.exp(-kappa * (x + ms.a) - ls)) / (2 * skq)
            dtheta = kappa * (math.exp(ks - ls) + math.cos(2 * kq) * math.exp(-kappa * (x + ms.a) - ls)) / (2 * skq)
    elif theta_variant != "continuation":
        raise ValueError(f"unknown theta_variant {theta_variant!r}")
    if x < -q:
        # phi(-x) = phi(x), theta(-x) = -theta(x); derivatives flip parity
        if theta_variant == "printed":
            theta = (math.cos(2 * kq) * math.exp(-ks - ls) - math.exp(ks - ls)) / (2 * skq)
            dtheta = kappa * (math.cos(2 * kq) * math.exp(-ks - ls) + math.exp(ks - ls)) / (2 * skq)
            return BasisSample(x, amp * phi, amp * theta, -amp * dphi, amp * dtheta, ls)
        return BasisSample(x, amp * phi, -amp * theta, -amp * dphi, amp * dtheta, ls)
    return BasisSample(x, amp * phi, amp * theta, amp * dphi, amp * dtheta, ls)


def eval_basis(x: float, scen, ms: Microstate) -> BasisSample:
    """Dispatch on scenario geometry."""
    if isinstance(scen, (BarrierScenario, ObliqueScenario)):
        return eval_basis_barrier(x, scen, ms)
    return eval_basis_well(x, scen, ms)
