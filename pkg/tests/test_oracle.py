import math

import numpy as np
import pytest

from qhj.basis import eval_basis
from qhj.core import (
    BarrierScenario,
    ConvergenceError,
    DomainError,
    DuctScenario,
    Microstate,
    ObliqueScenario,
    WellScenario,
    derive_wavenumbers,
)
from qhj.hj_engine import trajectory_time
from qhj.observables import (
    gh_displacement_barrier,
    libration_displacement,
    libration_period,
    reflection_time_barrier,
)
from qhj.oracle import (
    action_quadrature,
    finite_diff_schwarzian,
    integrate_schrodinger,
    numeric_lateral_shift,
    numeric_time_of_flight,
    run_verification,
    schwarzian_at,
)
from qhj.quantization import action_variable, level_of

CANON = Microstate(1.0, 1.0, 0.0)
HALF = BarrierScenario(2.0, 1.0)
WIDE = WellScenario(0.5, 10.0, 0)  # V = 0 on |x| < 10


# -- ODE integration --------------------------------------------------------------


def test_free_particle_sine():
    k = 1.3
    grid = np.linspace(0.0, 9.5, 60)
    sol = integrate_schrodinger(WIDE, 0.5 * k * k, (0.0, k), (0.0, 9.5), x_eval=grid)
    assert np.max(np.abs(sol.values[:, 0] - np.sin(k * grid))) < 1e-10
    assert np.max(np.abs(sol.values[:, 1] - k * np.cos(k * grid))) < 1e-10 * k


def test_integration_runs_backwards():
    k = 0.8
    grid = np.linspace(-9.0, 0.0, 30)
    sol = integrate_schrodinger(WIDE, 0.5 * k * k, (0.0, k), (0.0, -9.0), x_eval=grid)
    assert np.max(np.abs(sol.values[:, 0] - np.sin(k * grid))) < 1e-10


def test_reproduces_closed_form_across_interface():
    # phi decays into the barrier, so it is integrated in its stable direction, inward
    ms = Microstate(2.0, 0.7, 0.5)
    _, kappa = derive_wavenumbers(HALF)
    b0 = eval_basis(6.0 / kappa, HALF, ms)
    grid = np.linspace(-3.0, 6.0 / kappa, 50)
    sol = integrate_schrodinger(HALF, None, (b0.phi, b0.dphi_dx), (6.0 / kappa, -3.0), x_eval=grid)
    ref = np.array([eval_basis(float(x), HALF, ms).phi for x in grid])
    assert np.max(np.abs(sol.values[:, 0] - ref) / np.maximum(np.abs(ref), 1e-3)) < 1e-8
    assert sol.method["interfaces"] == [0.0]


def test_wronskian_of_two_solutions_is_constant():
    scen = WellScenario(7.0, 2.0, 1)
    span = (-3.0, 3.0)
    grid = np.linspace(*span, 80)
    one = integrate_schrodinger(scen, None, (1.0, 0.0), span, x_eval=grid).values
    two = integrate_schrodinger(scen, None, (0.0, 1.0), span, x_eval=grid).values
    w = one[:, 0] * two[:, 1] - one[:, 1] * two[:, 0]
    assert np.max(np.abs(w - 1.0)) < 1e-9 * np.max(np.abs(one) * np.abs(two[:, ::-1]).max())


def test_growing_solution_overflow_reports_position():
    _, kappa = derive_wavenumbers(HALF)
    with pytest.raises(OverflowError, match="x ="):
        integrate_schrodinger(HALF, None, (1.0, kappa), (0.0, 1000.0 / kappa))


def test_non_finite_initial_data_rejected():
    with pytest.raises(DomainError):
        integrate_schrodinger(HALF, None, (math.nan, 1.0), (0.0, 1.0))


# -- finite-difference Schwarzian -----------------------------------------------------


def test_schwarzian_of_linear_function_vanishes():
    h = 0.01
    W = 3.0 * np.arange(20) * h + 0.7
    est = finite_diff_schwarzian(W, h)
    assert np.all(np.isnan(est.values[:3])) and np.all(np.isnan(est.values[-3:]))
    assert np.max(np.abs(est.values[3:-3])) < 1e-8


def test_schwarzian_of_plane_wave_phase_vanishes():
    k, h = 2.0, 1e-2
    x = np.arange(-6, 7) * h - 0.3
    # unwrapped arctan(tan kx) is kx itself
    W = np.unwrap(2 * np.arctan(np.tan(k * x))) / 2
    assert np.max(np.abs(finite_diff_schwarzian(W, h).values[3:-3])) < 1e-6


def test_schwarzian_known_function():
    # <tan x; x> = 2 for any x where tan is smooth
    h = 1e-3
    x = 0.4 + np.arange(-4, 5) * h
    for m in (3, 4):
        est = finite_diff_schwarzian(np.tan(x), h, half_width=m)
        assert est.values[4] == pytest.approx(2.0, rel=1e-6)


def test_schwarzian_flags_flat_samples():
    est = finite_diff_schwarzian(np.full(9, 5.0), 1e-3)
    assert est.ill_conditioned[3:-3].all()


def test_schwarzian_needs_enough_samples():
    with pytest.raises(DomainError):
        finite_diff_schwarzian([0.0] * 6, 0.1)


def test_adaptive_schwarzian_on_known_function():
    assert schwarzian_at(math.tan, 0.4, 1.0) == pytest.approx(2.0, rel=1e-8)


# -- time of flight ---------------------------------------------------------------


def test_plane_wave_reflection_time_by_quadrature():
    _, kappa = derive_wavenumbers(HALF)
    assert abs(2 * numeric_time_of_flight(HALF, CANON, 0.0, 20 / kappa) - 1.0) < 1e-6


def test_empty_span_has_no_flight_time():
    assert numeric_time_of_flight(HALF, CANON, 1.3, 1.3) == 0.0


def test_infinite_endpoint():
    ms = Microstate(2.0, 0.7, 0.5)
    assert 2 * numeric_time_of_flight(HALF, ms, 0.0, math.inf) == pytest.approx(
        reflection_time_barrier(HALF, ms), rel=1e-7)


def test_span_direction_flips_sign():
    ms = Microstate(2.0, 0.7, 0.5)
    fwd = numeric_time_of_flight(HALF, ms, -2.0, 1.0)
    assert numeric_time_of_flight(HALF, ms, 1.0, -2.0) == pytest.approx(-fwd, rel=1e-12)


def test_quadrature_agrees_with_jacobi_differences():
    ms = Microstate(0.6, 1.8, -0.9)
    num = numeric_time_of_flight(HALF, ms, -2.5, 0.7)
    jac = trajectory_time(0.7, HALF, ms) - trajectory_time(-2.5, HALF, ms)
    assert num == pytest.approx(jac, rel=1e-7)


@pytest.mark.parametrize("ms", [CANON, Microstate(2.0, 0.7, 0.5), Microstate(0.6, 1.8, -0.9)])
def test_libration_period_by_quadrature(ms):
    scen = WellScenario(50.0, 1.0, 2)
    num = numeric_time_of_flight(scen, ms, -math.inf, math.inf)
    assert 2 * num == pytest.approx(libration_period(scen, ms), rel=1e-5)


def test_lateral_shift_by_quadrature():
    scen = ObliqueScenario(3.0, 2.0, 1.0)
    ms = Microstate(2.0, 0.7, 0.5)
    assert 2 * numeric_lateral_shift(scen, ms, 0.0, math.inf) == pytest.approx(
        gh_displacement_barrier(scen, ms), rel=1e-6)


def test_duct_libration_shift_by_quadrature():
    scen = DuctScenario(WellScenario(7.0, 2.0, 2), 1.0)
    ms = Microstate(2.0, 1.0, 0.5)
    assert 2 * numeric_lateral_shift(scen, ms, -math.inf, math.inf) == pytest.approx(
        libration_displacement(scen, ms), rel=1e-5)


def test_tail_bound_enforced():
    with pytest.raises(ConvergenceError):
        numeric_time_of_flight(HALF, CANON, 0.0, math.inf, tail_tol=1e-30)


def test_action_quadrature_matches_closed_form():
    scen = WellScenario(50.0, 1.0, 1)
    ms = Microstate(2.0, 0.7, 0.5)
    assert action_quadrature(scen, ms) == pytest.approx(action_variable(level_of(scen), ms, scen), rel=1e-8)


# -- verification suite -------------------------------------------------------------


def test_verification_passes():
    results = run_verification()
    failed = [r for r in results if not r.passed]
    assert not failed, failed
    names = {r.name.split(":")[0] for r in results}
    assert {"wronskian_norm", "hj_residual", "schwarzian_fd", "ode_basis", "wronskian_continuation",
            "reflection_time", "inversion_roundtrip"} <= names


def test_verification_records_are_serializable():
    rec = run_verification([HALF], [CANON])[0].as_dict()
    assert set(rec) == {"name", "tolerance", "discrepancy", "passed", "detail"}


def test_misprinted_theta_is_caught():
    results = run_verification(theta_variant="printed")
    failed = {r.name.split(":")[0] for r in results if not r.passed}
    assert "wronskian_continuation" in failed
    # barrier checks do not involve the well continuation
    assert all(r.passed for r in results if "Barrier" in r.name or "Oblique" in r.name)


def test_tolerance_scale_can_fail_everything():
    results = run_verification([HALF], [Microstate(2.0, 0.7, 0.5)], tol_scale=1e-30)
    assert not any(r.passed for r in results if r.discrepancy > 0)
