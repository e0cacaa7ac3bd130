"""Hamilton's characteristic function, conjugate momentum and Jacobi's theorem.

The characteristic function is W = hbar * arctan{[b(theta/phi) + c/2]/sqrt(ab - c^2/4)}
(integration constant set to zero), continued across zeros of phi so that it is
smooth and increasing in x.  Times and lateral displacements come from
derivatives of W with respect to the separation constants E and hbar*k_y,
taken by Richardson-extrapolated central differences.

Away from a quantized energy the well pair is only defined region by region
(see ``basis.anchored_well_pair``).  For those off-level evaluations W is
accumulated region by region from the well centre, which is the same as
integrating each region's own conjugate momentum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from ._numerics import STEP_FACTOR, richardson_derivative
from .basis import amplitude, anchored_well_pair, barrier_pair, common_scaled, eval_basis, tail_pair
from .core import (
    BarrierScenario,
    DomainError,
    DuctScenario,
    IllConditionedError,
    Microstate,
    ObliqueScenario,
    Scenario,
    UnitSystem,
    WellScenario,
    derive_wavenumbers,
    total_energy,
    transverse_wavenumber,
    validate_microstate,
)


@dataclass(frozen=True)
class TrajectoryPoint:
    x: float
    t_minus_tau: float
    y_minus_y0: float
    p: float
    W: float


# -- geometry --------------------------------------------------------------------


@dataclass(frozen=True)
class _Setup:
    geometry: str  # "barrier" or "well"
    units: UnitSystem
    U: float
    q: float
    n: int
    k_y: float

    def forbidden(self, x: float) -> bool:
        if self.geometry == "barrier":
            return x >= 0.0
        return abs(x) > self.q

    def interfaces(self) -> tuple[float, ...]:
        return (0.0,) if self.geometry == "barrier" else (-self.q, self.q)


def _setup(scen: Scenario) -> _Setup:
    if isinstance(scen, (BarrierScenario, ObliqueScenario)):
        return _Setup("barrier", scen.units, scen.U, 0.0, 0, transverse_wavenumber(scen))
    if isinstance(scen, DuctScenario):
        w = scen.well
        return _Setup("well", w.units, w.U, w.q, w.n, scen.k_y)
    if isinstance(scen, WellScenario):
        return _Setup("well", scen.units, scen.U, scen.q, scen.n, 0.0)
    raise TypeError(f"unsupported scenario type {type(scen).__name__}")


def _pair(x: float, st: _Setup, k: float, kappa: float):
    if st.geometry == "barrier":
        return barrier_pair(x, k, kappa)
    return anchored_well_pair(x, k, kappa, st.q, st.n)


def _shifted_wavenumbers(scen: Scenario, d_energy: float = 0.0, dky2: float = 0.0
                         ) -> tuple[float, float]:
    """(k_x, kappa) after shifting E by ``d_energy`` and k_y^2 by ``dky2``.

    E is held fixed under a k_y shift, so k_x^2 and kappa^2 move in opposite
    directions.  Derivatives in k_y are taken as 2 k_y d/d(k_y^2), which stays
    accurate for k_y much smaller than k_x.
    """
    k, kappa = derive_wavenumbers(scen)
    s = 2.0 * _setup(scen).units.mass / _setup(scen).units.hbar ** 2
    k2 = k * k + s * d_energy - dky2
    kappa2 = kappa * kappa - s * d_energy + dky2
    if k2 <= 0.0 or kappa2 <= 0.0:
        raise DomainError("shifted separation constants leave the sub-barrier domain")
    return math.sqrt(k2), math.sqrt(kappa2)


# -- phase of W ----------------------------------------------------------------


def _oscillatory_phase(u: float, ms: Microstate, root_d: float) -> float:
    """Continuous arctan{[b tan u + c/2]/sqrt(D)}: steps by pi with every pi in u."""
    m = round(u / math.pi)
    v = u - m * math.pi
    cv, sv = math.cos(v), math.sin(v)
    return m * math.pi + math.atan2(ms.b * sv + 0.5 * ms.c * cv, root_d * cv)


def _tail_phase(s: float, k: float, kappa: float, ms: Microstate, root_d: float,
                side: int) -> tuple[float, float]:
    """Principal phase and its distance to the asymptote at depth s in a tail.

    ``side`` is +1 beyond the right interface, -1 beyond the left one
    (theta is odd there).
    """
    phi, theta, _, _, ls = tail_pair(s, k, kappa)
    phi = common_scaled(phi, theta, 0.0, 0.0, ls)[0]
    y = side * ms.b * theta + 0.5 * ms.c * phi
    principal = math.atan2(y, root_d * phi)
    deficit = math.atan2(root_d * phi, ms.b * theta + side * 0.5 * ms.c * phi)
    return principal, deficit


def _phase(x: float, st: _Setup, k: float, kappa: float, ms: Microstate) -> float:
    """W/hbar at x, continuous in x (pointwise branch bookkeeping)."""
    root_d = math.sqrt(ms.discriminant)
    if st.geometry == "barrier":
        if x < 0.0:
            return _oscillatory_phase(k * x + math.atan(kappa / k), ms, root_d)
        return _tail_phase(x, k, kappa, ms, root_d, +1)[0]
    if abs(x) <= st.q:
        return _oscillatory_phase(k * x, ms, root_d)
    side = 1 if x > 0 else -1
    return side * st.n * math.pi + _tail_phase(abs(x) - st.q, k, kappa, ms, root_d, side)[0]


def _accumulated_phase(x: float, st: _Setup, k: float, kappa: float, ms: Microstate) -> float:
    """W/hbar accumulated region by region from the geometry's reference point.

    Equals ``_phase`` on a quantized level; for shifted energies in a well it
    is the integral of each region's own dW/dx.
    """
    if st.geometry == "barrier" or abs(x) <= st.q:
        return _phase(x, st, k, kappa, ms)
    root_d = math.sqrt(ms.discriminant)
    side = 1 if x > 0 else -1
    edge = _oscillatory_phase(side * k * st.q, ms, root_d)
    start = _tail_phase(0.0, k, kappa, ms, root_d, side)[0]
    here = _tail_phase(abs(x) - st.q, k, kappa, ms, root_d, side)[0]
    return edge + (here - start)


def hamilton_characteristic(x: float, scen: Scenario, ms: Microstate) -> float:
    """W(x) with K = 0; the hbar k_y y term of 2-D problems is left to the caller.

    Zeros of phi are crossed continuously, so W is smooth and monotone for any
    grid (no per-grid unwrapping is needed).
    """
    validate_microstate(ms)
    st = _setup(scen)
    k, kappa = derive_wavenumbers(scen)
    return st.units.hbar * _phase(float(x), st, k, kappa, ms)


def phase_tail_deficit(x: float, scen: Scenario, ms: Microstate) -> float:
    """|W(+-inf) - W(x)|/hbar for x inside a forbidden tail, without cancellation."""
    st = _setup(scen)
    if not st.forbidden(x):
        raise DomainError(f"x = {x!r} is not in a classically forbidden region")
    k, kappa = derive_wavenumbers(scen)
    root_d = math.sqrt(ms.discriminant)
    if st.geometry == "barrier":
        return _tail_phase(x, k, kappa, ms, root_d, +1)[1]
    side = 1 if x > 0 else -1
    return _tail_phase(abs(x) - st.q, k, kappa, ms, root_d, side)[1]


def tail_sine(x: float, scen: Scenario, ms: Microstate) -> tuple[float, float]:
    """(sin(deficit) * exp(ls), ls) in a forbidden tail, ls being the basis log_scale.

    The deficit itself underflows long before phi does; this product keeps
    the decaying wavefunction representable as far as phi is.
    """
    st = _setup(scen)
    if not st.forbidden(x):
        raise DomainError(f"x = {x!r} is not in a classically forbidden region")
    k, kappa = derive_wavenumbers(scen)
    root_d = math.sqrt(ms.discriminant)
    side = 1 if x >= 0.0 else -1
    depth = x if st.geometry == "barrier" else abs(x) - st.q
    phi, theta, _, _, ls = tail_pair(depth, k, kappa)
    phi_c = common_scaled(phi, theta, 0.0, 0.0, ls)[0]
    denom = math.hypot(root_d * phi_c, ms.b * theta + side * 0.5 * ms.c * phi_c)
    return root_d * phi * math.exp(-ls) / denom, ls


# -- momentum and the HJ residual -------------------------------------------------


def _momentum_from_pair(pair, amp: float, ms: Microstate, units: UnitSystem) -> float:
    phi, theta, dphi, dtheta, ls = pair
    phi, theta, _, _ = common_scaled(phi, theta, dphi, dtheta, ls)
    qs = amp * amp * (ms.a * phi * phi + ms.b * theta * theta + ms.c * phi * theta)
    return math.sqrt(2.0 * units.mass) * math.exp(-2.0 * ls) / qs


def conjugate_momentum(x: float, scen: Scenario, ms: Microstate, sign: int = 1) -> float:
    """dW/dx = +-(2m)^(1/2) / (a phi^2 + b theta^2 + c phi theta).

    Returns exactly 0 once the quadratic form overflows deep in a tail.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    s = eval_basis(float(x), scen, ms)
    phi, theta, _, _ = common_scaled(s.phi, s.theta, s.dphi_dx, s.dtheta_dx, s.log_scale)
    qs = ms.a * phi**2 + ms.b * theta**2 + ms.c * phi * theta
    units = _setup(scen).units
    return sign * math.sqrt(2.0 * units.mass) * math.exp(-2.0 * s.log_scale) / qs


def wave_normal(x: float, scen: ObliqueScenario | DuctScenario, ms: Microstate) -> tuple[float, float]:
    """grad W = (dW/dx, hbar k_y)."""
    st = _setup(scen)
    return conjugate_momentum(x, scen, ms, +1), st.units.hbar * st.k_y


def _analytic_terms(x: float, scen: Scenario, ms: Microstate, bms: Microstate
                    ) -> tuple[float, float, float]:
    """(p, <W; x>, V) at x from the basis and its exact derivatives."""
    st = _setup(scen)
    units = st.units
    k, kappa = derive_wavenumbers(scen)
    phi, theta, dphi, dtheta, ls = _pair(x, st, k, kappa)
    phi, theta, dphi, dtheta = common_scaled(phi, theta, dphi, dtheta, ls)
    amp = amplitude(k, bms, units)
    phi, theta, dphi, dtheta = (amp * v for v in (phi, theta, dphi, dtheta))
    a, b, c = ms.a, ms.b, ms.c
    forbidden = st.forbidden(x)
    lam = kappa * kappa if forbidden else -k * k  # psi'' = lam psi
    Q = a * phi * phi + b * theta * theta + c * phi * theta
    dQ = 2 * a * phi * dphi + 2 * b * theta * dtheta + c * (dphi * theta + phi * dtheta)
    d2Q = (2 * a * (dphi * dphi + lam * phi * phi) + 2 * b * (dtheta * dtheta + lam * theta * theta)
           + c * (2 * lam * phi * theta + 2 * dphi * dtheta))
    schwarzian = 0.5 * (dQ / Q) ** 2 - d2Q / Q
    p = math.sqrt(2.0 * units.mass) * math.exp(-2.0 * ls) / Q
    if p == 0.0 or not math.isfinite(p):
        raise IllConditionedError(f"dW/dx underflows at x = {x!r}; residual not resolvable")
    return p, schwarzian, (st.U if forbidden else 0.0)


def hj_residual(x: float, scen: Scenario, ms: Microstate, *,
                basis_ms: Microstate | None = None) -> float:
    """Left minus right side of the generalized Hamilton-Jacobi equation.

    (W'^2 + (hbar k_y)^2)/2m + V - E + (hbar^2/4m) <W; x>, with W', W'', W'''
    taken analytically from the basis.  ``basis_ms`` normalizes the basis with a
    different microstate, which breaks the Wronskian condition on purpose.
    """
    validate_microstate(ms)
    bms = basis_ms or ms
    validate_microstate(bms)
    st = _setup(scen)
    units = st.units
    p, schwarzian, V = _analytic_terms(float(x), scen, ms, bms)
    kinetic = (p * p + (units.hbar * st.k_y) ** 2) / (2.0 * units.mass)
    return kinetic + V - total_energy(scen) + units.hbar**2 / (4.0 * units.mass) * schwarzian


def analytic_schwarzian(x: float, scen: Scenario, ms: Microstate) -> float:
    """<W; x> from the exact derivatives of the basis.

    With W' proportional to 1/Q, Q = a phi^2 + b theta^2 + c phi theta, the
    Schwarzian reduces to (Q'/Q)^2 / 2 - Q''/Q.
    """
    validate_microstate(ms)
    return _analytic_terms(float(x), scen, ms, ms)[1]


# -- Jacobi's theorem --------------------------------------------------------------


def _energy_step(scen: Scenario) -> float:
    st = _setup(scen)
    k, kappa = derive_wavenumbers(scen)
    e_kin = st.units.energy(k)
    e_gap = st.units.energy(kappa)
    h = STEP_FACTOR * max(abs(total_energy(scen)), st.U)
    return min(h, 0.25 * min(e_kin, e_gap))


def _ky_step(scen: Scenario) -> float:
    """Step in k_y^2."""
    k, kappa = derive_wavenumbers(scen)
    lim = min(k, kappa)
    return min(STEP_FACTOR * k * k, 0.25 * lim * lim)


def _tail_split(x: float, st: _Setup, ms: Microstate):
    """(constant part, deficit, side) with W/hbar = constant - side * deficit in a tail.

    The constant is x-independent, so differentiating the two parts
    separately keeps the full relative precision of the deficit deep in a
    tail, where W itself has stopped changing in double precision.
    """
    side = 1 if x >= 0.0 else -1
    root_d = math.sqrt(ms.discriminant)
    depth = x if st.geometry == "barrier" else abs(x) - st.q

    def constant(k: float, kappa: float) -> float:
        if st.geometry == "barrier":
            return 0.5 * math.pi
        edge = _oscillatory_phase(side * k * st.q, ms, root_d)
        start = _tail_phase(0.0, k, kappa, ms, root_d, side)[0]
        return edge - start + side * 0.5 * math.pi

    def deficit(k: float, kappa: float) -> float:
        return _tail_phase(depth, k, kappa, ms, root_d, side)[1]

    return constant, deficit, side


def _phase_derivative(x: float, scen: Scenario, ms: Microstate, wrt: str,
                      quantity: Callable | None = None) -> float:
    validate_microstate(ms)
    st = _setup(scen)
    if wrt == "E":
        h = _energy_step(scen)
        chain = 1.0

        def shifted(d):
            return _shifted_wavenumbers(scen, d_energy=d)
    else:
        h = _ky_step(scen)
        chain = 2.0 * transverse_wavenumber(scen)

        def shifted(d):
            return _shifted_wavenumbers(scen, dky2=d)
    if quantity is None and st.forbidden(x):
        constant, deficit, side = _tail_split(x, st, ms)
        d_const = richardson_derivative(lambda d: constant(*shifted(d)), h)[0]
        d_def = richardson_derivative(lambda d: deficit(*shifted(d)), h)[0]
        return chain * (d_const - side * d_def)
    fn = quantity or (lambda xx, kk, kp: _accumulated_phase(xx, st, kk, kp, ms))
    return chain * richardson_derivative(lambda d: fn(x, *shifted(d)), h)[0]


def trajectory_time(x: float, scen: Scenario, ms: Microstate) -> float:
    """t - tau = dW/dE at fixed (a, b, c) (and fixed k_y for 2-D problems)."""
    units = _setup(scen).units
    return units.hbar * _phase_derivative(float(x), scen, ms, "E")


def trajectory_y(x: float, scen: ObliqueScenario | DuctScenario, ms: Microstate) -> float:
    """y - y0 = -dW/d(hbar k_y) at fixed E, without the explicit hbar k_y y term."""
    if not isinstance(scen, (ObliqueScenario, DuctScenario)):
        raise TypeError("trajectory_y needs an oblique or duct scenario")
    return -_phase_derivative(float(x), scen, ms, "ky")


def trajectory_slope(x: float, scen: ObliqueScenario | DuctScenario, ms: Microstate) -> float:
    """dy/dx along the trajectory, i.e. -d(dW/dx)/d(hbar k_y) at fixed x.

    Differentiates the momentum itself, so the value keeps full relative
    precision deep in a tail where W has converged to its asymptote.
    """
    if not isinstance(scen, (ObliqueScenario, DuctScenario)):
        raise TypeError("trajectory_slope needs an oblique or duct scenario")
    st = _setup(scen)

    def p_over_hbar(xx, kk, kp):
        return _momentum_from_pair(_pair(xx, st, kk, kp), amplitude(kk, ms, st.units),
                                   ms, st.units) / st.units.hbar

    return -_phase_derivative(float(x), scen, ms, "ky", quantity=p_over_hbar)


def lateral_gap(x: float, scen: ObliqueScenario | DuctScenario, ms: Microstate) -> float:
    """y(+-inf) - y(x) for x in a forbidden tail, from the phase deficit."""
    if not isinstance(scen, (ObliqueScenario, DuctScenario)):
        raise TypeError("lateral_gap needs an oblique or duct scenario")
    st = _setup(scen)
    if not st.forbidden(x):
        raise DomainError(f"x = {x!r} is not in a classically forbidden region")
    root_d = math.sqrt(ms.discriminant)
    side = 1 if x >= 0 else -1
    s = x if st.geometry == "barrier" else abs(x) - st.q

    def deficit(_xx, kk, kp):
        return _tail_phase(s, kk, kp, ms, root_d, side)[1]

    # phase = asymptote -/+ deficit on the right/left, so y(inf) - y = -d(deficit)/dk_y
    return -side * _phase_derivative(float(x), scen, ms, "ky", quantity=deficit)


def cusp_asymptote(x: float, scen: ObliqueScenario, ms: Microstate) -> float:
    """Leading large-x form of y(inf) - y(x) at a barrier turning point.

    4 (ab - c^2/4)^(1/2) k_y x exp(-2 kappa x) / [b k_x (1 + (kappa/k_x)^2)].
    """
    k, kappa = derive_wavenumbers(scen)
    r = kappa / k
    return (4.0 * math.sqrt(ms.discriminant) * scen.k_y * x * math.exp(-2.0 * kappa * x)
            / (ms.b * k * (1.0 + r * r)))


def sample_trajectory(grid: Sequence[float], scen: Scenario, ms: Microstate, sign: int = 1,
                      *, reflect: bool = False) -> list[TrajectoryPoint]:
    """Trajectory samples on an ascending grid.

    Offsets t - tau and y - y0 are measured from the first grid point.  With
    ``sign = -1`` the motion runs toward -x.  ``reflect=True`` appends the
    outbound leg as the mirror image about the last grid point, which should
    then lie deep enough in the tail to stand in for the turning point.
    """
    xs = [float(v) for v in grid]
    if not xs:
        return []
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise DomainError("grid must be strictly ascending")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    two_d = isinstance(scen, (ObliqueScenario, DuctScenario))
    rows = []
    for x in xs:
        try:
            t = trajectory_time(x, scen, ms)
            y = trajectory_y(x, scen, ms) if two_d else 0.0
            p = conjugate_momentum(x, scen, ms, sign)
            w = hamilton_characteristic(x, scen, ms)
        except (ArithmeticError, ValueError) as exc:
            raise type(exc)(f"at x = {x!r}: {exc}") from exc
        rows.append((x, t, y, p, w))
    _, t0, y0, _, _ = rows[0]
    pts = [TrajectoryPoint(x, sign * (t - t0), sign * (y - y0), p, sign * w)
           for x, t, y, p, w in rows]
    if reflect:
        last = pts[-1]
        for pt in reversed(pts[:-1]):
            pts.append(TrajectoryPoint(pt.x, 2 * last.t_minus_tau - pt.t_minus_tau,
                                       2 * last.y_minus_y0 - pt.y_minus_y0, -pt.p,
                                       2 * last.W - pt.W))
    return pts
