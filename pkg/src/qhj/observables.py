"""Closed-form constants of the motion and the duct overdetermination test.

Every time and displacement here depends on the microstate through one of two
coefficient fractions of r = kappa/k_x:

    single(+-c) = sqrt(D) (1 + r^2) / (a +- c r + b r^2)
    libration   = sqrt(D) (1 + r^2) (a + b r^2) / (a^2 + (2ab - c^2) r^2 + b^2 r^4)

with D = ab - c^2/4.  Both are homogeneous of degree zero in (a, b, c).
Displacements are signed: they carry the sign of k_y.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .basis import amplitude, common_scaled, eval_basis, wronskian_norm
from .core import (
    BarrierScenario,
    DomainError,
    DuctScenario,
    MeasurementInconsistency,
    Microstate,
    ObliqueScenario,
    UnitSystem,
    WellScenario,
    _oblique_squares,
    derive_wavenumbers,
    total_energy,
    validate_microstate,
)
from .hj_engine import _setup, hamilton_characteristic, tail_sine

DEFAULT_CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True)
class MotionConstants:
    w_squared: float
    ermakov_I: float
    dy_plus: float
    dy_minus: float
    dy_libration: float
    t_plus: float
    t_minus: float
    t_libration: float
    action_J: float
    energy: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MotionConstants":
        missing = [f for f in ("w_squared", "ermakov_I", "dy_plus", "dy_minus") if f not in data]
        if missing:
            raise DomainError(f"motion constants missing fields: {', '.join(missing)}")
        nan = float("nan")
        return cls(**{f: float(data.get(f, nan)) for f in cls.__dataclass_fields__})


@dataclass(frozen=True)
class WaveDecomposition:
    incident_amplitude: complex
    reflected_amplitude: complex
    x: float

    @property
    def total(self) -> complex:
        return self.incident_amplitude + self.reflected_amplitude


@dataclass(frozen=True)
class ConsistencyReport:
    passed: bool
    microstate: Microstate
    predicted_dy_libration: float
    measured_dy_libration: float
    libration_discrepancy: float
    wronskian_discrepancy: float
    tol: float

    @property
    def discrepancy(self) -> float:
        return max(self.libration_discrepancy, self.wronskian_discrepancy)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "microstate": self.microstate.as_dict(),
            "predicted_dy_libration": self.predicted_dy_libration,
            "measured_dy_libration": self.measured_dy_libration,
            "libration_discrepancy": self.libration_discrepancy,
            "wronskian_discrepancy": self.wronskian_discrepancy,
            "discrepancy": self.discrepancy,
            "tol": self.tol,
        }


def _single_fraction(ms: Microstate, r: float, sign: int = 1) -> float:
    return math.sqrt(ms.discriminant) * (1.0 + r * r) / (ms.a + sign * ms.c * r + ms.b * r * r)


def _libration_fraction(ms: Microstate, r: float) -> float:
    a, b, c = ms.a, ms.b, ms.c
    r2 = r * r
    num = math.sqrt(ms.discriminant) * (1.0 + r2) * (a + b * r2)
    return num / (a * a + (2.0 * a * b - c * c) * r2 + b * b * r2 * r2)


def _barrier_ratio_product(scen: BarrierScenario | ObliqueScenario) -> tuple[float, float]:
    """(kappa/k_x, kappa k_x) from the squared wavenumbers, avoiding two rounded roots."""
    derive_wavenumbers(scen)  # validates
    if isinstance(scen, BarrierScenario):
        s = 2.0 * scen.units.mass / scen.units.hbar**2
        k2, kappa2 = s * scen.E_x, s * (scen.U - scen.E_x)
    else:
        k2, kappa2 = _oblique_squares(scen.U, scen.E, scen.k_y, scen.units)
    return math.sqrt(kappa2 / k2), math.sqrt(k2 * kappa2)


def reflection_time_barrier(scen: BarrierScenario | ObliqueScenario, ms: Microstate) -> float:
    """t_R = 2 single(c) m / (hbar kappa k_x); equals hbar/[E_x(U-E_x)]^(1/2) for a=b, c=0."""
    validate_microstate(ms)
    r, prod = _barrier_ratio_product(scen)
    u = scen.units
    return 2.0 * _single_fraction(ms, r) * u.mass / (u.hbar * prod)


def gh_displacement_barrier(scen: ObliqueScenario, ms: Microstate) -> float:
    """Goos-Haenchen shift 2[y(inf) - y(0)] = 2 single(c) k_y / (kappa k_x)."""
    validate_microstate(ms)
    r, prod = _barrier_ratio_product(scen)
    return 2.0 * _single_fraction(ms, r) * scen.k_y / prod


def reflection_times_well(scen: WellScenario | DuctScenario, ms: Microstate) -> tuple[float, float]:
    """(t_+R, t_-R) for the interfaces at x = +q and x = -q."""
    validate_microstate(ms)
    k, kappa = derive_wavenumbers(scen)
    u = scen.units
    r = kappa / k
    base = 2.0 * u.mass / (u.hbar * kappa * k)
    return base * _single_fraction(ms, r, +1), base * _single_fraction(ms, r, -1)


def libration_period(scen: WellScenario | DuctScenario, ms: Microstate) -> float:
    validate_microstate(ms)
    k, kappa = derive_wavenumbers(scen)
    u = scen.units
    q = scen.q
    return 4.0 * _libration_fraction(ms, kappa / k) * u.mass * (q + 1.0 / kappa) / (u.hbar * k)


def gh_displacements_duct(scen: DuctScenario, ms: Microstate) -> tuple[float, float]:
    """Signed (dy_+R, dy_-R); magnitudes are 2|y(+-q) - y(+-inf)|."""
    validate_microstate(ms)
    k, kappa = derive_wavenumbers(scen)
    r = kappa / k
    base = 2.0 * scen.k_y / (kappa * k)
    return base * _single_fraction(ms, r, +1), base * _single_fraction(ms, r, -1)


def libration_displacement(scen: DuctScenario, ms: Microstate) -> float:
    validate_microstate(ms)
    k, kappa = derive_wavenumbers(scen)
    return 4.0 * _libration_fraction(ms, kappa / k) * scen.k_y * (scen.q + 1.0 / kappa) / k


def ermakov_invariant(ms: Microstate, units: UnitSystem | None = None) -> float:
    """I = [a - c^2/(4b)]^(-1), which also equals b hbar^2 W^2 / 2m."""
    validate_microstate(ms)
    return ms.b / ms.discriminant


def ermakov_pointwise(x: float, scen, ms: Microstate) -> float:
    """I = {W' psi^2 + (hbar^2/W') [psi W''/(2W') + psi']^2} / (2m)^(1/2) with psi = phi."""
    validate_microstate(ms)
    s = eval_basis(x, scen, ms).unscaled()
    units = scen.units
    a, b, c = ms.a, ms.b, ms.c
    Q = a * s.phi**2 + b * s.theta**2 + c * s.phi * s.theta
    dQ = 2 * a * s.phi * s.dphi_dx + 2 * b * s.theta * s.dtheta_dx + c * (
        s.dphi_dx * s.theta + s.phi * s.dtheta_dx)
    root2m = math.sqrt(2.0 * units.mass)
    w1 = root2m / Q
    w2 = -root2m * dQ / (Q * Q)
    inner = s.phi * w2 / (2.0 * w1) + s.dphi_dx
    return (w1 * s.phi**2 + units.hbar**2 / w1 * inner * inner) / root2m


def reconstruct_wavefunction(x: float, scen, ms: Microstate, *, check: bool = True,
                             tol: float = 1e-8) -> float:
    """psi = (a phi^2 + b theta^2 + c phi theta)^(1/2) cos(W/hbar) / [a - c^2/(4b)]^(1/2).

    Uses the continuous W, so the cosine carries the sign of phi.  In tails the
    cosine is taken as the sine of the distance to the asymptote, which keeps
    full relative precision while psi decays.
    """
    validate_microstate(ms)
    st = _setup(scen)
    s = eval_basis(x, scen, ms)
    phi_c, theta_c, _, _ = common_scaled(s.phi, s.theta, s.dphi_dx, s.dtheta_dx, s.log_scale)
    Qc = ms.a * phi_c**2 + ms.b * theta_c**2 + ms.c * phi_c * theta_c  # Q exp(-2 ls)
    forbidden = st.forbidden(x)
    if forbidden:
        n = st.n if st.geometry == "well" else 0
        sine, _ = tail_sine(x, scen, ms)
        cosine_scaled = (-1.0) ** n * sine  # cos(W/hbar) exp(ls)
    else:
        cosine_scaled = math.cos(hamilton_characteristic(x, scen, ms) / st.units.hbar)
    psi = math.sqrt(Qc) * cosine_scaled / math.sqrt(ms.a - ms.c**2 / (4 * ms.b))
    if check:
        phi = s.phi * math.exp(-s.log_scale)
        # oscillatory regions: compare against the envelope, not the local value
        scale = abs(phi) if forbidden else amplitude(derive_wavenumbers(scen)[0], ms, scen.units)
        if abs(psi - phi) > tol * scale:
            raise ArithmeticError(f"wavefunction branch inconsistency at x = {x!r}")
    return psi


def decompose_waves(x: float, scen: BarrierScenario | ObliqueScenario, ms: Microstate) -> WaveDecomposition:
    """Incident and reflected parts [1 +- ic/(4ab - c^2)^(1/2)] phi/2 +- i b theta/[2 D^(1/2)]."""
    validate_microstate(ms)
    s = eval_basis(x, scen, ms).unscaled()
    root_d = math.sqrt(ms.discriminant)
    g = ms.c / (2.0 * root_d)
    h = ms.b / (2.0 * root_d)
    inc = complex(0.5 * s.phi, 0.5 * g * s.phi + h * s.theta)
    ref = complex(0.5 * s.phi, -(0.5 * g * s.phi + h * s.theta))
    return WaveDecomposition(inc, ref, float(x))


def exponential_components(x: float, scen, ms: Microstate) -> tuple[complex, complex]:
    """The +-i exponential form of the two waves, built from amplitude and phase."""
    s = eval_basis(x, scen, ms).unscaled()
    Q = ms.a * s.phi**2 + ms.b * s.theta**2 + ms.c * s.phi * s.theta
    amp = math.sqrt(Q) / (2.0 * math.sqrt(ms.a - ms.c**2 / (4 * ms.b)))
    w = hamilton_characteristic(x, scen, ms) / scen.units.hbar
    return amp * complex(math.cos(w), math.sin(w)), amp * complex(math.cos(w), -math.sin(w))


# -- duct constants, inversion, and the redundancy test ---------------------------


def motion_constants(scen: DuctScenario, ms: Microstate) -> MotionConstants:
    """The forward map from a microstate to its duct constants of the motion."""
    from .quantization import action_variable, level_of

    validate_microstate(ms)
    t_plus, t_minus = reflection_times_well(scen, ms)
    dy_plus, dy_minus = gh_displacements_duct(scen, ms)
    return MotionConstants(
        w_squared=wronskian_norm(ms, scen.units).w_squared,
        ermakov_I=ermakov_invariant(ms, scen.units),
        dy_plus=dy_plus,
        dy_minus=dy_minus,
        dy_libration=libration_displacement(scen, ms),
        t_plus=t_plus,
        t_minus=t_minus,
        t_libration=libration_period(scen, ms),
        action_J=action_variable(level_of(scen), ms, scen),
        energy=total_energy(scen),
    )


def recover_coefficients(mc: MotionConstants, scen: DuctScenario) -> Microstate:
    """(a, b, c) from (I, W^2, dy_+, dy_-).

    b = (2m/hbar^2) I / W^2 and sqrt(D) = (2m)^(1/2) / (hbar |W|); with
    G = (1 + r^2) k_y / (kappa k_x),

        a = sqrt(D) G (1/dy_+ + 1/dy_-) - b r^2
        c = sqrt(D) G (1/dy_+ - 1/dy_-) / r
    """
    units = scen.units
    for name in ("w_squared", "ermakov_I"):
        v = getattr(mc, name)
        if not (math.isfinite(v) and v > 0):
            raise MeasurementInconsistency(f"{name} must be finite and positive (got {v!r})")
    for name in ("dy_plus", "dy_minus"):
        v = getattr(mc, name)
        if not (math.isfinite(v) and v != 0.0):
            raise MeasurementInconsistency(f"{name} must be finite and nonzero (got {v!r})")
    if (mc.dy_plus > 0) != (mc.dy_minus > 0) or (mc.dy_plus > 0) != (scen.k_y > 0):
        raise MeasurementInconsistency("displacements must share the sign of k_y")
    k, kappa = derive_wavenumbers(scen)
    r = kappa / k
    b = 2.0 * units.mass / units.hbar**2 * mc.ermakov_I / mc.w_squared
    root_d = math.sqrt(2.0 * units.mass / mc.w_squared) / units.hbar
    G = (1.0 + r * r) * scen.k_y / (kappa * k)
    a = root_d * G * (1.0 / mc.dy_plus + 1.0 / mc.dy_minus) - b * r * r
    c = root_d * G * (1.0 / mc.dy_plus - 1.0 / mc.dy_minus) / r
    if not a > 0.0:
        raise MeasurementInconsistency(f"recovered a = {a!r} is not positive")
    disc = a * b - 0.25 * c * c
    if not disc > 0.0:
        raise MeasurementInconsistency(f"recovered discriminant ab - c^2/4 = {disc!r} is not positive")
    ms = Microstate(a, b, c)
    try:
        validate_microstate(ms)
    except DomainError as exc:
        raise MeasurementInconsistency(str(exc)) from exc
    return ms


def overdetermination_check(mc: MotionConstants, scen: DuctScenario,
                            tol: float = DEFAULT_CONSISTENCY_TOL) -> ConsistencyReport:
    """Recover (a, b, c) and test the two redundancies left over.

    The recovered microstate predicts dy_Libration, which is compared with the
    measured value; its discriminant must also reproduce the measured W^2.
    Passes iff both relative discrepancies are below ``tol``.
    """
    if not math.isfinite(mc.dy_libration):
        raise MeasurementInconsistency("dy_libration is required for the overdetermination check")
    ms = recover_coefficients(mc, scen)
    predicted = libration_displacement(scen, ms)
    lib = abs(predicted - mc.dy_libration) / abs(mc.dy_libration)
    w2 = wronskian_norm(ms, scen.units).w_squared
    wr = abs(w2 - mc.w_squared) / mc.w_squared
    return ConsistencyReport(lib < tol and wr < tol, ms, predicted, mc.dy_libration, lib, wr, tol)
