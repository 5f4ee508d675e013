"""Tests for complex frequencies, GOS solves and the identity and low-frequency audits."""

import math

import numpy as np
import pytest

from src.core.errors import AdmissibilityError, CalibrationError
from src.forward.volume import SolverConfig
from src.gos.checks import (
    C1Accumulator,
    IdentityBoundReport,
    calibrate_c3,
    identity_bound_check,
    low_freq_coeff_estimate,
    validate_c3,
    verify_gos_bounds,
)
from src.gos.faddeev import solve_gos
from src.gos.frequencies import (
    ComplexFrequency,
    admissible_t,
    frame_vectors,
    gamma_admissible,
    pair_sum,
    t_zero,
    zeta_eta,
)
from src.spectral.lattice import ContrastField
from src.spectral.phantoms import random_band_limited


GAMMAS = [(0, 0, 0), (1, 0, 0), (0, 1, 1), (2, -1, 0)]


@pytest.mark.parametrize("gamma", [(0, 0, 0), (1, 0, 0), (0, 0, 2), (1, -2, 1)])
@pytest.mark.parametrize("t", [0.5, 10.0, 1e3])
def test_zeta_eta_pair(gamma, t):
    zeta, eta = zeta_eta(gamma, t, 1.0)
    for freq in (zeta, eta):
        z = freq.zeta
        assert abs(complex(np.dot(z, z)) - 1.0) <= 1e-10 * max(1.0, t ** 2), "zeta.zeta should equal kappa^2"
        assert np.linalg.norm(z.imag) == pytest.approx(t)
    assert np.array_equal(pair_sum(zeta, eta), -np.asarray(gamma, dtype=float)), "zeta + eta should be -gamma exactly"


def test_frame_vectors_are_orthonormal():
    for gamma in [(0, 0, 0), (1, 0, 0), (0, 3, 0), (1, 2, -2)]:
        pair = frame_vectors(gamma)
        rot = pair.rotation()
        assert np.allclose(rot.T @ rot, np.eye(3), atol=1e-14)
        assert abs(np.dot(pair.d1, gamma)) < 1e-12 and abs(np.dot(pair.d2, gamma)) < 1e-12


def test_frame_vectors_for_random_gammas():
    rng = np.random.default_rng(11)
    gammas = rng.integers(-25, 26, size=(1000, 3))
    for gamma in gammas:
        pair = frame_vectors(gamma)
        rot = pair.rotation()
        assert np.allclose(rot.T @ rot, np.eye(3), atol=1e-13), f"frame for {gamma} is not orthonormal"
        scale = max(1.0, float(np.linalg.norm(gamma)))
        assert abs(np.dot(pair.d1, gamma)) <= 1e-12 * scale and abs(np.dot(pair.d2, gamma)) <= 1e-12 * scale


def test_negative_radicand_rejected():
    with pytest.raises(AdmissibilityError):
        zeta_eta((10, 0, 0), 1.0, 1.0)
    assert not gamma_admissible((10, 0, 0), 1.0, 1.0)
    assert gamma_admissible((10, 0, 0), 5.0, 1.0)
    assert not gamma_admissible((0, 0, 0), 5.0, 1.0, t0=6.0)


def test_frequency_rejects_wrong_dispersion():
    with pytest.raises(AdmissibilityError):
        ComplexFrequency.from_vector(np.array([1j, 2.0, 0.0]), 1.0)


def test_admissibility_thresholds():
    assert t_zero(1.0, 1.0, math.pi, 1.0) == pytest.approx(2.0)
    assert admissible_t(0.5, 2.0, 2.0 * math.pi) == pytest.approx(8.0)
    with pytest.raises(AdmissibilityError):
        t_zero(0.0, 1.0, 1.0, 1.0)


def test_solve_gos_zero_contrast(lattice, solver_cfg):
    zeta, _ = zeta_eta((1, 0, 0), 2.0, solver_cfg.kappa)
    sol = solve_gos(ContrastField.zeros(lattice), zeta, solver_cfg)
    assert not np.any(sol.v), "f = 0 should give v = 0"
    assert sol.residual == 0.0 and sol.iterations == 0


def test_solve_gos_residual(bump, solver_cfg):
    zeta, _ = zeta_eta((0, 1, 0), 3.0, solver_cfg.kappa)
    sol = solve_gos(bump, zeta, solver_cfg)
    assert sol.residual <= 1e-6
    assert sol.norms["v_l2"] > 0
    assert sol.norms["u_l2_log"] == pytest.approx(math.log(sol.norms["u_l2_scaled"]) + sol.grid.R_prime * 3.0)


def test_solve_gos_rejects_small_t(bump, solver_cfg):
    zeta, _ = zeta_eta((0, 0, 0), 0.3, solver_cfg.kappa)
    with pytest.raises(AdmissibilityError, match="admissibility bound"):
        solve_gos(bump, zeta, solver_cfg)


def test_solve_gos_rejects_kappa_mismatch(bump, solver_cfg):
    zeta, _ = zeta_eta((0, 0, 0), 3.0, 2.0)
    with pytest.raises(AdmissibilityError, match="kappa"):
        solve_gos(bump, zeta, solver_cfg)


def test_verify_gos_bounds_sweep(bump, solver_cfg):
    report = verify_gos_bounds(bump, [4.0, 2.0], solver_cfg)
    assert [row.t for row in report.per_t] == [2.0, 4.0], "t values are processed in ascending order"
    assert report.bound_from_ratio_holds
    assert all(row.residual <= 1e-6 for row in report.per_t)
    assert report.c2_fit >= report.max_bound_ratio


@pytest.mark.slow
def test_verify_gos_bounds_over_a_decade(bump, solver_cfg):
    t_min = admissible_t(bump.sup_norm(), solver_cfg.kappa, 2.0 * solver_cfg.radius_R)
    t0 = max(2.0, t_min)
    report = verify_gos_bounds(bump, np.geomspace(t0, 10.0 * t0, 6), solver_cfg)
    assert report.slope <= 0.05 and report.bounded, f"t ||v|| grows with slope {report.slope}"
    assert report.bound_from_ratio_holds
    assert all(row.residual <= 1e-6 for row in report.per_t)


def test_verify_gos_bounds_below_threshold(bump, solver_cfg):
    with pytest.raises(AdmissibilityError):
        verify_gos_bounds(bump, [0.1, 1.0], solver_cfg)


def test_identity_bound_equal_fields(bump, solver_cfg, near_operator):
    zeta, eta = zeta_eta((1, 0, 0), 2.0, solver_cfg.kappa)
    u1 = solve_gos(bump, zeta, solver_cfg)
    u2 = solve_gos(bump, eta, solver_cfg)
    w = near_operator.evaluate(bump)
    report = identity_bound_check(bump, bump, u1, u2, w, w)
    assert report.lhs == 0.0
    assert report.rhs_over_c1 == 0.0
    assert report.c1_fit == 0.0
    assert report.log_rhs_over_c1 == -math.inf


def test_identity_bound_rejects_mismatched_grids(bump, solver_cfg, near_operator):
    zeta, eta = zeta_eta((1, 0, 0), 2.0, solver_cfg.kappa)
    u1 = solve_gos(bump, zeta, solver_cfg)
    u2 = solve_gos(bump, eta, solver_cfg.with_updates(grid_size=12))
    w = near_operator.evaluate(bump)
    with pytest.raises(AdmissibilityError, match="different grids"):
        identity_bound_check(bump, bump, u1, u2, w, w)


def test_c1_accumulator_merge():
    def report(c1):
        return IdentityBoundReport(lhs=c1, rhs_over_c1=1.0, log_rhs_over_c1=0.0, c1_fit=c1)

    left, right = C1Accumulator(), C1Accumulator()
    left.add(report(0.5), "a")
    left.add(report(2.0), "b")
    right.add(report(3.0), "c")
    merged = left.merge(right)
    assert merged.c1 == 3.0 and merged.worst == "c" and merged.n_cases == 3
    assert right.merge(left).c1 == merged.c1, "merge should not depend on order"


def test_low_freq_estimate_validation(lattice):
    f = random_band_limited(lattice, seed=0)
    with pytest.raises(AdmissibilityError):
        low_freq_coeff_estimate(f, f, (10, 0, 0), 1.0, 1e-3, 1.0)
    with pytest.raises(AdmissibilityError):
        low_freq_coeff_estimate(f, f, (0, 0, 0), 1.0, 1e-3, 1.0, t0=2.0)
    same = low_freq_coeff_estimate(f, f, (1, 0, 0), 1.0, 0.0, 1.0)
    assert same.lhs == 0.0 and same.holds


def test_calibrate_and_validate_c3(lattice):
    cases = [
        (random_band_limited(lattice, 2 * i, scale=0.01), random_band_limited(lattice, 2 * i + 1, scale=0.01), 10.0 ** -(i + 2))
        for i in range(3)
    ]
    ts = [1.0, 2.0, 4.0]
    summary = calibrate_c3(cases, GAMMAS, ts)
    assert summary.fitted_value > 0
    assert validate_c3(summary.fitted_value, cases, GAMMAS, ts).n_failed == 0, "the fitted c3 should cover its own cases"
    tight = validate_c3(0.99 * summary.fitted_value, cases, GAMMAS, ts)
    assert tight.n_failed >= 1, "a smaller c3 should fail at least one case"
    assert tight.pass_rate < 1.0


def test_calibrate_c3_needs_active_case(lattice):
    f = random_band_limited(lattice, seed=0)
    with pytest.raises(CalibrationError):
        calibrate_c3([(f, f, 0.0)], GAMMAS, [1.0])


def test_calibrate_c3_only_uses_t_above_t0(lattice):
    cases = [(random_band_limited(lattice, 0, scale=0.01), random_band_limited(lattice, 1, scale=0.01), 1e-3)]
    restricted = calibrate_c3(cases, GAMMAS, [1.0, 2.0, 4.0], t0=3.0)
    assert restricted == calibrate_c3(cases, GAMMAS, [4.0])
    assert validate_c3(restricted.fitted_value, cases, GAMMAS, [1.0, 2.0, 4.0], t0=3.0).n_checked == len(GAMMAS)
    with pytest.raises(CalibrationError):
        calibrate_c3(cases, GAMMAS, [1.0, 2.0], t0=3.0)


def test_identity_bound_check_is_exported():
    import src.gos

    assert src.gos.identity_bound_check is identity_bound_check
    assert {"lhs", "rhs_over_c1", "c1_fit"} <= set(src.gos.IdentityBoundReport.model_fields)
