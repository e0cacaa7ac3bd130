"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``PASS``/``FAIL`` line naming its criterion, so a
plain ``pytest -v`` run doubles as the acceptance report.
"""

import math
import random
from statistics import pvariance

import numpy as np
import pytest
from scipy.optimize import curve_fit

from qhj.basis import eval_basis, wronskian, wronskian_norm
from qhj.core import (
    BarrierScenario,
    DuctScenario,
    Microstate,
    ObliqueScenario,
    WellScenario,
    derive_wavenumbers,
    total_energy,
)
from qhj.hj_engine import (
    analytic_schwarzian,
    hamilton_characteristic,
    hj_residual,
    trajectory_slope,
    trajectory_time,
    trajectory_y,
)
from qhj.observables import (
    decompose_waves,
    gh_displacement_barrier,
    gh_displacements_duct,
    libration_displacement,
    libration_period,
    motion_constants,
    overdetermination_check,
    reconstruct_wavefunction,
    recover_coefficients,
    reflection_time_barrier,
    reflection_times_well,
)
from qhj.oracle import integrate_schrodinger, schwarzian_at
from qhj.quantization import action_variable, symmetric_levels

from .conftest import random_microstate, random_scenario

SEED = 8675309


@pytest.fixture
def report(capsys):
    def emit(n, ok, summary):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {summary}")
        assert ok, summary

    return emit


def _x_sample(scen, rng, spread=3.0, clearance=0.05):
    """An off-interface point within ``spread`` decay lengths of the potential step."""
    _, kappa = derive_wavenumbers(scen)
    q = getattr(scen, "q", None)
    while True:
        t = rng.uniform(-spread, spread)
        if abs(t) < clearance:
            continue
        if q is None:
            return t / kappa
        return math.copysign(q, t) + t / kappa if rng.random() < 0.5 else rng.uniform(-0.95, 0.95) * q


def _interfaces(scen):
    q = getattr(scen, "q", None)
    return (0.0,) if q is None else (-q, q)


def test_criterion_1_reflection_time(report):
    scen = BarrierScenario(2.0, 1.0)
    ms = Microstate(1.0, 1.0, 0.0)
    t_r = reflection_time_barrier(scen, ms)
    _, kappa = derive_wavenumbers(scen)
    numeric = 2 * (trajectory_time(20 / kappa, scen, ms) - trajectory_time(0.0, scen, ms))
    rel = abs(numeric - 1.0)
    report(1, t_r == 1.0 and rel < 1e-6,
           f"t_R = {t_r!r} (exactly 1.0 required); Jacobi 2[t(20/kappa) - t(0)] off by {rel:.2e} (< 1e-6)")


def test_criterion_2_hj_identity(report):
    rng = random.Random(SEED + 2)
    worst_res, worst_fd = 0.0, 0.0
    for i in range(100):
        scen = random_scenario(rng, ("barrier", "oblique", "well", "duct")[i % 4])
        ms = random_microstate(rng)
        x = _x_sample(scen, rng)
        E = abs(total_energy(scen))
        worst_res = max(worst_res, abs(hj_residual(x, scen, ms)) / E)
        k, kappa = derive_wavenumbers(scen)
        # keep the whole stencil on one side of the step, where W''' is smooth
        gap = min(abs(x - e) for e in _interfaces(scen))
        length = min(1.0 / max(k, kappa), gap / 1.3)
        fd = schwarzian_at(lambda xx: hamilton_characteristic(xx, scen, ms), x, length)
        u = scen.units
        worst_fd = max(worst_fd, abs(fd - analytic_schwarzian(x, scen, ms)) * u.hbar**2 / (4 * u.mass) / E)
    report(2, worst_res < 1e-8 and worst_fd < 1e-6,
           f"max |residual|/E = {worst_res:.2e} (< 1e-8); max FD Schwarzian gap/E = {worst_fd:.2e} (< 1e-6)"
           " over 100 samples")


def test_criterion_3_wronskian(report):
    rng = random.Random(SEED + 3)
    worst = 0.0
    for kind in ("barrier", "oblique", "well", "duct") * 3:
        scen = random_scenario(rng, kind)
        ms = random_microstate(rng)
        _, kappa = derive_wavenumbers(scen)
        reach = getattr(scen, "q", 0.0) + 10 / kappa
        target = wronskian_norm(ms, scen.units).w_squared
        for x in np.linspace(-reach, reach, 50):
            w = wronskian(eval_basis(float(x), scen, ms))
            worst = max(worst, abs(w * w - target) / target)
    report(3, worst < 1e-10, f"max relative deviation of W^2 from 2m/[hbar^2 D] = {worst:.2e} (< 1e-10), "
                             "50 points on each of 12 barrier and well bases")


def _ode_gap(scen, ms):
    """Largest relative gap between the closed-form pair and its ODE continuation."""
    _, kappa = derive_wavenumbers(scen)
    q = getattr(scen, "q", None)
    reach = (q or 0.0) + 10 / kappa
    inner = 0.0 if q is not None else -reach
    k, _ = derive_wavenumbers(scen)

    def closed(x):
        return eval_basis(float(x), scen, ms).unscaled()

    worst = 0.0
    # theta grows outward and phi decays outward: run each in its stable direction
    runs = [("theta", inner, reach), ("phi", reach, inner)]
    if q is not None:
        runs += [("theta", 0.0, -reach), ("phi", -reach, 0.0)]
    for pick, start, stop in runs:
        s0 = closed(start)
        init = (s0.theta, s0.dtheta_dx) if pick == "theta" else (s0.phi, s0.dphi_dx)
        grid = np.linspace(start, stop, 60)
        sol = integrate_schrodinger(scen, None, init, (start, stop), x_eval=grid)
        for x, (val, _) in zip(grid, sol.values):
            s = closed(x)
            ref = s.theta if pick == "theta" else s.phi
            forbidden = x >= 0 if q is None else abs(x) > q
            # oscillatory stretches have nodes: measure against the local envelope there
            scale = abs(ref) if forbidden else math.hypot(ref, (s.dtheta_dx if pick == "theta" else s.dphi_dx) / k)
            worst = max(worst, abs(val - ref) / scale)
    return worst


def test_criterion_4_ode_equivalence(report):
    rng = random.Random(SEED + 4)
    worst = 0.0
    for i in range(20):
        scen = random_scenario(rng, ("barrier", "oblique", "well", "duct")[i % 4])
        worst = max(worst, _ode_gap(scen, random_microstate(rng)))
    report(4, worst < 1e-8, f"max relative gap closed form vs ODE over |x| <= q + 10/kappa = {worst:.2e} "
                            "(< 1e-8), 20 random scenarios")


def test_criterion_5_quantization(report):
    levels = symmetric_levels(50.0, 1.0)
    rng = random.Random(SEED + 5)
    worst_res = max(abs(L.residual) for L in levels)
    worst_j, spread = 0.0, []
    h = 2 * math.pi
    for L in levels:
        scen = WellScenario(50.0, 1.0, L.n)
        periods = []
        for _ in range(10):
            ms = random_microstate(rng)
            J = action_variable(L, ms, scen)
            worst_j = max(worst_j, abs(J / ((2 * L.n + 1) * h) - 1))
            periods.append(libration_period(scen, ms))
        spread.append(pvariance(periods))
    ok = len(levels) == 4 and worst_res < 1e-12 and worst_j < 1e-8 and min(spread) > 0
    report(5, ok, f"{len(levels)} levels (4 required); max residual {worst_res:.1e} (< 1e-12); "
                  f"max |J/(2n+1)h - 1| = {worst_j:.1e} (< 1e-8); min t_Libration variance {min(spread):.2e} (> 0)")


def test_criterion_6_closed_forms_vs_jacobi(report):
    rng = random.Random(SEED + 6)
    worst = {}

    def note(name, closed, numeric):
        worst[name] = max(worst.get(name, 0.0), abs(numeric - closed) / abs(closed))

    for _ in range(20):
        ms = random_microstate(rng)
        b = random_scenario(rng, "barrier")
        _, kappa = derive_wavenumbers(b)
        note("t_R", reflection_time_barrier(b, ms),
             2 * (trajectory_time(20 / kappa, b, ms) - trajectory_time(0.0, b, ms)))

        o = random_scenario(rng, "oblique")
        _, kappa = derive_wavenumbers(o)
        note("dy", gh_displacement_barrier(o, ms), 2 * (trajectory_y(20 / kappa, o, ms) - trajectory_y(0.0, o, ms)))

        d = random_scenario(rng, "duct")
        _, kappa = derive_wavenumbers(d)
        q, X = d.q, d.q + 25 / kappa
        t_plus, t_minus = reflection_times_well(d, ms)
        note("t_+R", t_plus, 2 * abs(trajectory_time(X, d, ms) - trajectory_time(q, d, ms)))
        note("t_-R", t_minus, 2 * abs(trajectory_time(-X, d, ms) - trajectory_time(-q, d, ms)))
        note("t_Libration", libration_period(d, ms), 2 * abs(trajectory_time(X, d, ms) - trajectory_time(-X, d, ms)))
        dy_plus, dy_minus = gh_displacements_duct(d, ms)
        note("dy_+R", abs(dy_plus), 2 * abs(trajectory_y(X, d, ms) - trajectory_y(q, d, ms)))
        note("dy_-R", abs(dy_minus), 2 * abs(trajectory_y(-X, d, ms) - trajectory_y(-q, d, ms)))
        note("dy_Libration", abs(libration_displacement(d, ms)),
             2 * abs(trajectory_y(X, d, ms) - trajectory_y(-X, d, ms)))
    ok = all(v < 1e-5 for v in worst.values())
    report(6, ok, "max relative gaps (< 1e-5) over 20 inputs: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_7_inversion(report):
    rng = random.Random(SEED + 7)
    scen = DuctScenario(WellScenario(7.0, 2.0, 2), 1.0)
    worst = 0.0
    for _ in range(1000):
        ms = random_microstate(rng)
        got = recover_coefficients(motion_constants(scen, ms), scen)
        scale = math.sqrt(ms.a * ms.b)  # c may pass through zero
        worst = max(worst, abs(got.a - ms.a) / ms.a, abs(got.b - ms.b) / ms.b, abs(got.c - ms.c) / scale)
    passes, fails = True, True
    for _ in range(20):
        ms = random_microstate(rng)
        mc = motion_constants(scen, ms)
        passes &= overdetermination_check(mc, scen, tol=1e-3).passed
        for f in (1.01, 0.99):
            bad = type(mc)(**{**mc.as_dict(), "dy_libration": f * mc.dy_libration})
            fails &= not overdetermination_check(bad, scen, tol=1e-3).passed
    report(7, worst < 1e-9 and passes and fails,
           f"max recovery error {worst:.1e} (< 1e-9) over 1000 microstates; consistent data passes: {passes}; "
           f"1% perturbed dy_Libration fails at tol 1e-3: {fails}")


def test_criterion_8_structural_identities(report):
    rng = random.Random(SEED + 8)
    worst_psi = worst_dec = worst_hom = 0.0
    for i in range(40):
        scen = random_scenario(rng, ("barrier", "oblique", "well", "duct")[i % 4])
        ms = random_microstate(rng)
        q = getattr(scen, "q", None)
        k, kappa = derive_wavenumbers(scen)
        for _ in range(10):
            x = _x_sample(scen, rng, spread=30.0)
            psi = reconstruct_wavefunction(x, scen, ms)
            s = eval_basis(x, scen, ms).unscaled()
            forbidden = x >= 0 if q is None else abs(x) > q
            scale = abs(s.phi) if forbidden else math.hypot(s.phi, s.dphi_dx / k)
            worst_psi = max(worst_psi, abs(psi - s.phi) / scale)
            if q is None and x < 0:
                d = decompose_waves(x, scen, ms)
                size = max(abs(s.phi), abs(d.incident_amplitude))
                worst_dec = max(worst_dec, abs(d.total - s.phi) / size)
        lam = rng.uniform(0.1, 10.0)
        scaled = Microstate(lam * ms.a, lam * ms.b, lam * ms.c)
        if q is None:
            fns = [reflection_time_barrier] + ([gh_displacement_barrier] if isinstance(scen, ObliqueScenario) else [])
        else:
            fns = [libration_period, lambda s_, m_: reflection_times_well(s_, m_)[0],
                   lambda s_, m_: reflection_times_well(s_, m_)[1]]
            if isinstance(scen, DuctScenario):
                fns += [libration_displacement, lambda s_, m_: gh_displacements_duct(s_, m_)[0],
                        lambda s_, m_: gh_displacements_duct(s_, m_)[1]]
        for fn in fns:
            base = fn(scen, ms)
            worst_hom = max(worst_hom, abs(fn(scen, scaled) - base) / abs(base))
    ok = worst_psi < 1e-10 and worst_dec < 1e-12 and worst_hom < 1e-12
    report(8, ok, f"psi vs phi {worst_psi:.1e} (< 1e-10); decomposition sum vs phi {worst_dec:.1e} (< 1e-12); "
                  f"observables under (a,b,c) scaling {worst_hom:.1e} (< 1e-12)")


def test_criterion_9_cusp(report):
    scen = ObliqueScenario(2.0, 1.5, 0.6)
    ms = Microstate(2.0, 0.7, 0.5)
    _, kappa = derive_wavenumbers(scen)
    xs = np.linspace(10 / kappa, 20 / kappa, 41)
    slopes = np.array([trajectory_slope(float(x), scen, ms) for x in xs])

    def model(x, A, B, lam):
        return np.log(A * x + B) - lam * x

    A0 = slopes[0] * np.exp(2 * kappa * xs[0]) / xs[0]
    popt, _ = curve_fit(model, xs, np.log(slopes), p0=(A0, 0.0, 1.9 * kappa), maxfev=20000)
    fitted = popt[2] / 2
    rel = abs(fitted - kappa) / kappa
    report(9, bool(np.all(slopes > 0)) and rel < 0.01,
           f"fitted decay exponent/2 = {fitted:.6f} vs kappa = {kappa:.6f}, relative gap {rel:.1e} (< 1e-2)")
