"""Independent numerical checks for the closed forms.

Nothing here is used on production paths.  The ODE oracle integrates the
Schroedinger equation directly; the Schwarzian oracle differentiates sampled W
by finite differences; the time-of-flight oracle integrates dt/dx = dp/dE by
adaptive quadrature instead of differentiating W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from ._numerics import EPS, richardson_derivative
from .basis import amplitude
from .core import (
    ConvergenceError,
    DomainError,
    IllConditionedError,
    Microstate,
    Scenario,
    derive_wavenumbers,
    transverse_wavenumber,
    validate_microstate,
)
from .hj_engine import (
    _energy_step,
    _ky_step,
    _momentum_from_pair,
    _pair,
    _setup,
    _shifted_wavenumbers,
    conjugate_momentum,
)

OVERFLOW_LIMIT = 1e250


@dataclass
class OdeSolution:
    grid: np.ndarray
    values: np.ndarray  # shape (len(grid), 2): psi, dpsi/dx
    method: dict = field(default_factory=dict)


def _x_problem(scen: Scenario) -> tuple[float, float, object]:
    """(effective barrier height, x-energy, setup) of the separated x equation."""
    st = _setup(scen)
    k, kappa = derive_wavenumbers(scen)
    u = st.units
    return u.energy(math.hypot(k, kappa)), u.energy(k), st


def integrate_schrodinger(scen: Scenario, E: float | None, init: tuple[float, float],
                          x_span: tuple[float, float], *, x_eval: Sequence[float] | None = None,
                          rtol: float = 1e-11, atol_scale: float = 1e-6) -> OdeSolution:
    """Integrate -hbar^2/2m psi'' + (V - E) psi = 0 from x_span[0] to x_span[1].

    ``E`` is the energy of the x motion (defaults to the scenario's).  The
    potential is the scenario's piecewise-constant profile; steps are never
    taken across an interface.  ``x_span`` may run in either direction.
    """
    U_eff, E_default, st = _x_problem(scen)
    E = E_default if E is None else float(E)
    u = st.units
    s = 2.0 * u.mass / u.hbar**2
    x0, x1 = map(float, x_span)
    direction = 1.0 if x1 >= x0 else -1.0
    cuts = sorted(c for c in st.interfaces() if min(x0, x1) < c < max(x0, x1))
    if direction < 0:
        cuts = cuts[::-1]
    nodes = [x0, *cuts, x1]
    if x_eval is None:
        x_eval = np.linspace(x0, x1, 201)
    x_eval = np.asarray(x_eval, dtype=float)
    out = np.full((x_eval.size, 2), np.nan)
    y = np.array(init, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("initial data must be finite")
    scale = float(np.max(np.abs(y))) or 1.0
    steps = 0
    for a, b in zip(nodes, nodes[1:]):
        if a == b:
            continue
        mid = 0.5 * (a + b)
        V = U_eff if st.forbidden(mid) else 0.0
        lam = s * (V - E)

        def rhs(_x, yy, lam=lam):
            return (yy[1], lam * yy[0])

        def blowup(_x, yy):
            return OVERFLOW_LIMIT - abs(yy[0])

        blowup.terminal = True
        lo, hi = min(a, b), max(a, b)
        mask = (x_eval >= lo) & (x_eval <= hi)
        pts = x_eval[mask]
        pts = pts[np.argsort(direction * pts)]
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol,
                        atol=atol_scale * rtol * scale, dense_output=True, events=blowup)
        if sol.status == 1:
            raise OverflowError(f"solution overflowed near x = {sol.t[-1]:.6g}")
        if not sol.success:
            raise ConvergenceError(sol.message)
        steps += sol.t.size
        if pts.size:
            vals = sol.sol(pts).T
            idx = np.nonzero(mask)[0]
            order = np.argsort(direction * x_eval[idx])
            out[idx[order]] = vals
        y = sol.y[:, -1]
        scale = max(scale, float(np.max(np.abs(y))))
    return OdeSolution(x_eval, out, {"method": "DOP853", "rtol": rtol, "interfaces": cuts,
                                     "steps": steps})


@dataclass
class SchwarzianEstimate:
    values: np.ndarray  # <W; x> at interior points, NaN where the stencil does not fit
    first: np.ndarray
    second: np.ndarray
    third: np.ndarray
    ill_conditioned: np.ndarray  # bool mask


def _central_weights(half_width: int, order: int) -> np.ndarray:
    """Maximal-order central-difference weights on offsets -m..m (unit spacing).

    This is the limit of the Richardson tableau built from the nested
    stencils, obtained directly by matching Taylor moments.
    """
    offsets = np.arange(-half_width, half_width + 1, dtype=float)
    powers = np.arange(offsets.size)
    moments = offsets[None, :] ** powers[:, None]
    rhs = np.zeros(offsets.size)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(moments, rhs)


def finite_diff_schwarzian(W: Sequence[float], h: float, half_width: int = 3) -> SchwarzianEstimate:
    """<W; x> = W'''/W' - 1.5 (W''/W')^2 from samples on a uniform grid.

    Each derivative uses the Richardson-extrapolated central stencil of
    ``2 * half_width + 1`` consecutive samples; the default seven samples
    give W''' to fourth order.  Wider stencils tolerate larger ``h``, which
    keeps rounding in check when W varies on a scale much shorter than 1/k.
    """
    w = np.asarray(W, dtype=float)
    n = w.size
    m = int(half_width)
    if m < 2:
        raise DomainError("half_width must be at least 2")
    if n < 2 * m + 1:
        raise DomainError(f"finite_diff_schwarzian needs at least {2 * m + 1} samples")
    i = np.arange(m, n - m)
    derivs = []
    for order in (1, 2, 3):
        wts = _central_weights(m, order)
        d = np.full(n, np.nan)
        d[i] = sum(c * w[i + j] for c, j in zip(wts, range(-m, m + 1))) / h**order
        derivs.append(d)
    d1, d2, d3 = derivs
    values = d3 / d1 - 1.5 * (d2 / d1) ** 2
    floor = EPS * np.max(np.abs(w)) / h
    ill = np.zeros(n, dtype=bool)
    ill[i] = np.abs(d1[i]) < 1e3 * floor
    return SchwarzianEstimate(values, d1, d2, d3, ill)


def schwarzian_at(W_of_x: Callable[[float], float], x0: float, length: float, *,
                  half_width: int = 4, steps: int = 24) -> float:
    """Finite-difference <W; x> at a single point with a data-driven step.

    Estimates are formed for spacings ``length * 0.3 * 1.5**-j``; the one
    whose neighbours in the sequence agree best is returned, which balances
    truncation against rounding without knowing the local scale of W in
    advance.  ``length`` is a rough length scale (such as 1/k).
    """
    if not length > 0.0:
        raise DomainError("length scale must be positive")
    m = int(half_width)
    ests = []
    for j in range(steps):
        h = 0.3 * length * 1.5**-j
        W = [W_of_x(x0 + i * h) for i in range(-m, m + 1)]
        est = finite_diff_schwarzian(W, h, m)
        ests.append(np.nan if est.ill_conditioned[m] else est.values[m])
    ests = np.asarray(ests)
    spread = np.abs(np.diff(ests))
    pair = np.fmax(spread[:-1], spread[1:])
    if np.all(np.isnan(pair)):
        raise IllConditionedError("finite-difference Schwarzian ill-conditioned at every step")
    return float(ests[int(np.nanargmin(pair)) + 1])


def _integrand(scen: Scenario, ms: Microstate, wrt: str):
    st = _setup(scen)
    units = st.units
    if wrt == "E":
        h, chain = _energy_step(scen), 1.0
        shift = lambda d: _shifted_wavenumbers(scen, d_energy=d)  # noqa: E731
    else:
        h, chain = _ky_step(scen), 2.0 * transverse_wavenumber(scen)
        shift = lambda d: _shifted_wavenumbers(scen, dky2=d)  # noqa: E731

    def dp(x: float) -> float:
        def p(d):
            k, kappa = shift(d)
            return _momentum_from_pair(_pair(x, st, k, kappa), amplitude(k, ms, units), ms, units)

        return chain * richardson_derivative(p, h, rtol=1e-5)[0]

    return dp, st


def _span_quad(f, x_from: float, x_to: float, breaks: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(x_from, x_to), max(x_from, x_to)
    nodes = [lo, *sorted(b for b in breaks if lo < b < hi), hi]
    total, err = 0.0, 0.0
    for a, b in zip(nodes, nodes[1:]):
        val, e = quad(f, a, b, epsabs=0.0, epsrel=1e-11, limit=400)
        total += val
        err += e
    sign = 1.0 if x_to >= x_from else -1.0
    return sign * total, err


def _tail_cutoff(scen, x: float) -> float:
    st = _setup(scen)
    _, kappa = derive_wavenumbers(scen)
    X = max(20.0 / kappa, st.q + 20.0 / kappa)
    return math.copysign(X, x)


def _flight(scen, ms, x_from, x_to, wrt, tail_tol):
    validate_microstate(ms)
    f, st = _integrand(scen, ms, wrt)
    if x_from == x_to:
        return 0.0
    xs = []
    for x in (x_from, x_to):
        xs.append(_tail_cutoff(scen, x) if math.isinf(x) else float(x))
    val, err = _span_quad(f, xs[0], xs[1], (0.0, *st.interfaces()))
    _, kappa = derive_wavenumbers(scen)
    tail = 0.0
    for x_orig, x in zip((x_from, x_to), xs):
        if math.isinf(x_orig):
            # integrand ~ x exp(-2 kappa x): the remainder is below |f(X)| (X + 1/kappa)/(2 kappa X)
            tail += abs(f(x)) * (abs(x) + 1.0 / kappa) / (2.0 * kappa * abs(x))
    if err > 1e-8 * abs(val) + 1e-300 or tail > tail_tol * max(abs(val), 1e-300):
        raise ConvergenceError(f"quadrature error {err:.3e}, tail {tail:.3e} for value {val:.6e}")
    return val


def numeric_time_of_flight(scen: Scenario, ms: Microstate, x_from: float, x_to: float,
                           *, tail_tol: float = 1e-7) -> float:
    """t(x_to) - t(x_from) as the quadrature of dp/dE along x.

    Either endpoint may be +-inf; the integral is then cut at
    max(20/kappa, q + 20/kappa) and the neglected tail is bounded.
    """
    return _flight(scen, ms, x_from, x_to, "E", tail_tol)


def numeric_lateral_shift(scen: Scenario, ms: Microstate, x_from: float, x_to: float,
                          *, tail_tol: float = 1e-7) -> float:
    """y(x_to) - y(x_from) as the quadrature of -d(dW/dx)/d(hbar k_y) along x."""
    units = _setup(scen).units
    return -_flight(scen, ms, x_from, x_to, "ky", tail_tol) / units.hbar


def action_quadrature(scen: Scenario, ms: Microstate, *, cutoff: float | None = None) -> float:
    """J = 2 * integral of dW/dx over the whole line (one libration)."""
    st = _setup(scen)
    _, kappa = derive_wavenumbers(scen)
    X = cutoff or st.q + 40.0 / kappa

    def p(x):
        return conjugate_momentum(x, scen, ms)

    val, err = _span_quad(p, -X, X, st.interfaces())
    if err > 1e-9 * abs(val):
        raise ConvergenceError(f"action quadrature error {err:.3e}")
    return 2.0 * val


# -- verification suite -------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    discrepancy: float
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "tolerance": self.tolerance, "discrepancy": self.discrepancy,
                "passed": self.passed, "detail": self.detail}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _check(name: str, tol: float, fn) -> CheckResult:
    try:
        d = float(fn())
    except (ArithmeticError, ValueError) as exc:
        return CheckResult(name, tol, math.inf, False, f"{type(exc).__name__}: {exc}")
    return CheckResult(name, tol, d, bool(d <= tol))


def default_scenarios() -> list:
    from .core import BarrierScenario, DuctScenario, ObliqueScenario, WellScenario

    return [
        BarrierScenario(2.0, 1.0),
        ObliqueScenario(2.0, 1.5, 0.6),
        WellScenario(2.0, 1.0, 0),
        WellScenario(50.0, 1.0, 2),
        DuctScenario(WellScenario(50.0, 1.0, 1), 0.8),
    ]


DEFAULT_MICROSTATES = (Microstate(1.0, 1.0, 0.0), Microstate(2.0, 0.7, 0.5), Microstate(0.6, 1.8, -0.9))


def run_verification(scenarios: Sequence | None = None,
                     microstates: Sequence[Microstate] = DEFAULT_MICROSTATES, *,
                     tol_scale: float = 1.0, theta_variant: str = "continuation") -> list[CheckResult]:
    """Run every oracle against the closed forms and return one record per check.

    ``tol_scale`` multiplies all tolerances.  ``theta_variant="printed"``
    swaps in the misprinted well theta so that the Wronskian check has
    something to catch.
    """
    from . import observables as ob
    from .basis import eval_basis, eval_basis_well, wronskian, wronskian_norm
    from .core import BarrierScenario, DuctScenario, ObliqueScenario, total_energy
    from .hj_engine import analytic_schwarzian, hamilton_characteristic, hj_residual
    from .quantization import action_variable, level_of

    scenarios = default_scenarios() if scenarios is None else list(scenarios)
    out: list[CheckResult] = []
    for si, scen in enumerate(scenarios):
        st = _setup(scen)
        k, kappa = derive_wavenumbers(scen)
        is_well = st.geometry == "well"
        tag = f"{type(scen).__name__}[{si}]"
        for mi, ms in enumerate(microstates):
            label = f"{tag}/ms{mi}"
            w2 = wronskian_norm(ms, st.units).w_squared
            span = 10.0 / kappa
            xs = np.linspace(-st.q - span, st.q + span, 13) if is_well else np.linspace(-span, span, 13)
            xs = [x for x in xs if all(abs(x - c) > 1e-9 for c in st.interfaces())]

            def basis_at(x):
                if is_well:
                    return eval_basis_well(x, scen, ms, theta_variant=theta_variant)
                return eval_basis(x, scen, ms)

            out.append(_check(f"wronskian_norm:{label}", 1e-10 * tol_scale,
                              lambda: max(_rel(wronskian(basis_at(x)) ** 2, w2) for x in xs)))

            E_scale = abs(total_energy(scen)) or st.U

            def residuals():
                return max(abs(hj_residual(x, scen, ms)) for x in xs) / E_scale

            out.append(_check(f"hj_residual:{label}", 1e-8 * tol_scale, residuals))

            def schwarzian():
                x0 = -0.5 * st.q if is_well else -1.0
                fd = schwarzian_at(lambda x: hamilton_characteristic(x, scen, ms), x0, 1.0 / k)
                return abs(fd - analytic_schwarzian(x0, scen, ms)) * st.units.hbar**2 / (
                    4 * st.units.mass * E_scale)

            out.append(_check(f"schwarzian_fd:{label}", 1e-6 * tol_scale, schwarzian))

            def ode():
                # theta grows outward, phi decays outward: integrate each in its stable direction
                worst = 0.0
                for pick in ("theta", "phi"):
                    for end in (xs[0], xs[-1]):
                        start, stop = (0.0, end) if pick == "theta" else (end, 0.0)
                        b0 = basis_at(start).unscaled()
                        init = (b0.theta, b0.dtheta_dx) if pick == "theta" else (b0.phi, b0.dphi_dx)
                        g = np.linspace(start, stop, 41)
                        sol = integrate_schrodinger(scen, None, init, (start, stop), x_eval=g)
                        for x, (v, dv) in zip(g, sol.values):
                            s_ = basis_at(x).unscaled()
                            ref = (s_.theta, s_.dtheta_dx) if pick == "theta" else (s_.phi, s_.dphi_dx)
                            lam = kappa if st.forbidden(x) else k
                            norm = math.hypot(ref[0], ref[1] / lam)
                            worst = max(worst, max(abs(v - ref[0]), abs(dv - ref[1]) / lam) / norm)
                return worst

            out.append(_check(f"ode_basis:{label}", 1e-8 * tol_scale, ode))

            def continuation():
                # W(closed form, ODE continuation from x = 0) vanishes iff they are the same solution
                root = math.sqrt(w2)
                b0 = basis_at(0.0).unscaled()
                worst = 0.0
                # a couple of decay lengths past the interfaces: deeper in, the growing
                # branch amplifies integration error faster than the Wronskian can resolve it
                for end in (-st.q - 2.0 / kappa, st.q + 2.0 / kappa):
                    g = np.linspace(0.0, end, 41)
                    for i in (0, 1):
                        init = (b0.phi, b0.dphi_dx) if i == 0 else (b0.theta, b0.dtheta_dx)
                        sol = integrate_schrodinger(scen, None, init, (0.0, end), x_eval=g)
                        for x, (v, dv) in zip(g, sol.values):
                            s_ = basis_at(x).unscaled()
                            ref, dref = (s_.phi, s_.dphi_dx) if i == 0 else (s_.theta, s_.dtheta_dx)
                            worst = max(worst, abs(ref * dv - dref * v) / root)
                return worst

            out.append(_check(f"wronskian_continuation:{label}", 1e-9 * tol_scale, continuation))

            if isinstance(scen, BarrierScenario):
                out.append(_check(f"reflection_time:{label}", 1e-6 * tol_scale, lambda: _rel(
                    2 * numeric_time_of_flight(scen, ms, 0.0, 20.0 / kappa),
                    ob.reflection_time_barrier(scen, ms))))
            if isinstance(scen, ObliqueScenario):
                out.append(_check(f"gh_shift:{label}", 1e-5 * tol_scale, lambda: _rel(
                    2 * numeric_lateral_shift(scen, ms, 0.0, math.inf),
                    ob.gh_displacement_barrier(scen, ms))))
            if is_well:
                def well_times():
                    tp, tm = ob.reflection_times_well(scen, ms)
                    return max(_rel(2 * numeric_time_of_flight(scen, ms, st.q, math.inf), tp),
                               _rel(2 * numeric_time_of_flight(scen, ms, -math.inf, -st.q), tm),
                               _rel(2 * numeric_time_of_flight(scen, ms, -math.inf, math.inf),
                                    ob.libration_period(scen, ms)))

                out.append(_check(f"well_times:{label}", 1e-5 * tol_scale, well_times))
                lvl = level_of(scen)
                h_planck = 2 * math.pi * st.units.hbar
                out.append(_check(f"action_quantized:{label}", 1e-8 * tol_scale, lambda: _rel(
                    action_variable(lvl, ms, scen), (2 * lvl.n + 1) * h_planck)))
                out.append(_check(f"action_quadrature:{label}", 1e-8 * tol_scale, lambda: _rel(
                    action_quadrature(scen, ms), (2 * lvl.n + 1) * h_planck)))
            if isinstance(scen, DuctScenario):
                def duct_shifts():
                    dp, dm = ob.gh_displacements_duct(scen, ms)
                    return max(_rel(2 * numeric_lateral_shift(scen, ms, st.q, math.inf), dp),
                               _rel(2 * numeric_lateral_shift(scen, ms, -math.inf, -st.q), dm),
                               _rel(2 * numeric_lateral_shift(scen, ms, -math.inf, math.inf),
                                    ob.libration_displacement(scen, ms)))

                out.append(_check(f"duct_shifts:{label}", 1e-5 * tol_scale, duct_shifts))

                def roundtrip():
                    mc = ob.motion_constants(scen, ms)
                    rec = ob.recover_coefficients(mc, scen)
                    rep = ob.overdetermination_check(mc, scen)
                    if not rep.passed:
                        raise ArithmeticError("overdetermination check failed on consistent data")
                    return max(abs(rec.a - ms.a), abs(rec.b - ms.b), abs(rec.c - ms.c)) / max(
                        ms.a, ms.b)

                out.append(_check(f"inversion_roundtrip:{label}", 1e-9 * tol_scale, roundtrip))
        if is_well:
            lvl = level_of(scen)
            out.append(_check(f"quantization_residual:{tag}", 1e-12 * tol_scale, lambda: abs(
                math.tan(lvl.k_x * st.q) - lvl.kappa / lvl.k_x)))
    return out
