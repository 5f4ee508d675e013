"""Tests for the index functions, the Tikhonov solver and the rate sweep."""

import math

import numpy as np
import pytest

from src.core.errors import ConfigurationError, DomainViolationError
from src.forward.operators import BornNearFieldOperator, NearFieldOperator
from src.forward.scatter_data import data_norm
from src.regularization.experiments import (
    CSV_COLUMNS,
    ExperimentLog,
    ExperimentRecord,
    add_noise,
    fit_through_origin,
    rate_sweep,
)
from src.regularization.psi import (
    PsiFunction,
    alpha_rule,
    mu_exponent,
    psi_derivative,
    psi_eval,
    rate_abscissa,
    rate_bound,
    stability_bound,
)
from src.regularization.tikhonov import TikhonovProblem, TikhonovSolver, tikhonov_minimize
from src.forward.volume import SolverConfig
from src.spectral.lattice import ContrastField, sobolev_inner, sobolev_norm
from src.spectral.phantoms import enveloped_random, smooth_bump


@pytest.fixture
def psi():
    return PsiFunction.near(1.0, 4.0 / 7.0)


def test_mu_exponent():
    assert mu_exponent(2.0, 4.0) == pytest.approx(4.0 / 7.0)
    assert mu_exponent(2.0, 10.0) == 1.0, "the exponent saturates at 1"
    with pytest.raises(ConfigurationError):
        mu_exponent(1.5, 4.0)


def test_psi_eval_at_zero_and_monotone(psi):
    assert psi_eval(psi, 0.0) == 0.0
    ts = np.geomspace(1e-12, 1e2, 40)
    values = psi_eval(psi, ts)
    assert np.all(np.diff(values) > 0), "psi should be increasing"
    with pytest.raises(ConfigurationError):
        psi_eval(psi, -1.0)


@pytest.mark.parametrize(
    "variant",
    [PsiFunction.near(1.0, 4.0 / 7.0), PsiFunction.near(3.0, 1.0), PsiFunction.far(1.0, 4.0 / 7.0, 0.5), PsiFunction.far(2.0, 1.0, 0.9)],
)
def test_psi_is_midpoint_concave(variant):
    ts = np.concatenate([[0.0], np.geomspace(1e-10, 1e3, 300)])
    a, b = ts[:-1], ts[1:]
    mid = psi_eval(variant, 0.5 * (a + b))
    chord = 0.5 * (psi_eval(variant, a) + psi_eval(variant, b))
    assert np.all(mid >= chord - 1e-14 * variant.constant), "psi should be concave"
    wide = psi_eval(variant, 0.5 * (ts[0] + ts[-1]))
    assert wide >= 0.5 * (psi_eval(variant, ts[0]) + psi_eval(variant, ts[-1]))


@pytest.mark.parametrize("t", [1e-6, 1e-2, 0.5, 10.0])
def test_psi_derivative_matches_finite_differences(psi, t):
    h = 1e-5 * t
    fd = (psi_eval(psi, t + h) - psi_eval(psi, t - h)) / (2 * h)
    assert psi_derivative(psi, t) == pytest.approx(fd, rel=1e-6)


def test_psi_derivative_needs_positive_argument(psi):
    with pytest.raises(ConfigurationError):
        psi_derivative(psi, 0.0)


def test_alpha_rule_across_decades(psi):
    for delta in np.geomspace(1e-10, 1.0, 11):
        alpha = alpha_rule(psi, delta)
        assert alpha > 0
        assert 1.0 / (2.0 * alpha) == pytest.approx(psi_derivative(psi, 4.0 * delta ** 2), rel=1e-10)
    with pytest.raises(ConfigurationError):
        alpha_rule(psi, 0.0)


def test_psi_variants():
    far = PsiFunction.far(2.0, 0.5, 0.5)
    assert far.exponent == pytest.approx(0.5)
    assert far.unit().constant == 1.0
    with pytest.raises(ValueError):
        PsiFunction(variant="far", constant=1.0, mu=0.5)
    with pytest.raises(ValueError):
        PsiFunction(variant="near", constant=1.0, mu=0.5, theta=0.5)


def test_rate_and_stability_bounds(psi):
    delta = 1e-3
    expected = 4.0 * math.sqrt(psi.constant) * math.log(3.0 + delta ** -2) ** (-psi.exponent / 2.0)
    assert rate_bound(psi, delta) == pytest.approx(expected)
    assert rate_abscissa(psi, delta) == pytest.approx(expected / 4.0)
    assert stability_bound(psi, 0.0) == 0.0
    with pytest.raises(ConfigurationError):
        rate_bound(psi, delta, beta=0.0)


def test_add_noise_has_exact_norm(far_operator):
    clean = far_operator.wrap(np.zeros((far_operator.sources.size, far_operator.receivers.size)))
    noisy = add_noise(clean, 1e-2, seed=3)
    assert data_norm(noisy - clean) == pytest.approx(1e-2, rel=1e-12)
    assert np.array_equal(noisy.values, add_noise(clean, 1e-2, seed=3).values), "noise should be reproducible"
    assert not np.array_equal(noisy.values, add_noise(clean, 1e-2, seed=4).values)
    assert np.array_equal(add_noise(clean, 0.0, seed=0).values, clean.values)
    with pytest.raises(ConfigurationError):
        add_noise(clean, -1.0, seed=0)


def test_fit_through_origin():
    slope, r2 = fit_through_origin([1.0, 2.0, 3.0], [2.0, 4.0, 6.0])
    assert slope == pytest.approx(2.0) and r2 == pytest.approx(1.0)
    assert fit_through_origin([], []) == (0.0, 0.0)


def test_experiment_log_csv(psi):
    log = ExperimentLog()
    log.append(ExperimentRecord(delta=0.1, alpha=1.0, err_hm=0.5, misfit=0.1, seed=0, iterations=3))
    log.append(ExperimentRecord(delta=0.01, alpha=0.5, err_hm=0.2, misfit=0.01, seed=1, iterations=5))
    lines = log.sorted().to_csv().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("0.01,0.5,0.2,0.01,5,1"), "rows should be sorted by delta"
    assert len(log.plot_rows(psi)) == 2


def test_problem_rejects_nonpositive_alpha(near_operator):
    data = near_operator.wrap(np.zeros((8, 8)))
    with pytest.raises(ConfigurationError):
        TikhonovProblem(data=data, alpha=0.0)
    with pytest.raises(ConfigurationError):
        TikhonovProblem(data=data, alpha=-1.0)


def test_solver_rejects_inadmissible_start(lattice, near_operator):
    problem = TikhonovProblem(data=near_operator.wrap(np.zeros((8, 8))), alpha=1.0)
    with pytest.raises(DomainViolationError):
        TikhonovSolver(near_operator, problem).minimize(smooth_bump(lattice, 2.0))


def test_solver_rejects_kind_mismatch(far_operator, near_operator):
    problem = TikhonovProblem(data=near_operator.wrap(np.zeros((8, 8))), alpha=1.0)
    with pytest.raises(ConfigurationError):
        TikhonovSolver(far_operator, problem)


def test_objective_decreases(lattice, bump, near_operator):
    data = near_operator.evaluate(bump)
    solver = TikhonovSolver(near_operator, TikhonovProblem(data=data, alpha=1.0), max_iterations=4)
    events = []
    solver.on("iteration", events.append)
    f, diag = solver.minimize(ContrastField.zeros(lattice))
    history = diag.objective_history
    assert len(events) == diag.iterations
    assert all(b <= a * (1 + 1e-12) for a, b in zip(history, history[1:])), "objective should not increase"
    assert f.admissible


def test_every_iterate_stays_admissible(lattice, near_operator):
    data = near_operator.evaluate(smooth_bump(lattice, 0.9))
    solver = TikhonovSolver(near_operator, TikhonovProblem(data=data, alpha=1e-2), max_iterations=6)
    events = []
    solver.on("iteration", events.append)
    f, diag = solver.minimize(ContrastField.zeros(lattice))
    assert events and len(events) == diag.iterations
    assert all(event["f"].admissible for event in events), "projected iterates should stay in D"
    assert events[-1]["f"] is f


def test_objective_gradient_matches_finite_differences(lattice, bump):
    """Directional derivatives of misfit plus H^m penalty equal Re <grad, h> in H^m."""
    cfg = SolverConfig(grid_size=16, tolerance=1e-11)
    op = NearFieldOperator.create(cfg, 8)
    data = op.evaluate(smooth_bump(lattice, 0.1, 0.6 * math.pi))
    problem = TikhonovProblem(data=data, alpha=0.5, penalty_m=2.0, enforce_domain=False)
    solver = TikhonovSolver(op, problem)
    value, misfit_sq, grad = solver.objective_gradient(bump)
    assert (value, misfit_sq) == pytest.approx(solver.objective(bump), rel=1e-10)

    m = problem.penalty_m
    eps = 1e-5
    for seed in range(10):
        h = enveloped_random(lattice, seed, amplitude=1.0, radius=0.7 * math.pi)
        fd = (solver.objective(bump + h.scaled(eps))[0] - solver.objective(bump - h.scaled(eps))[0]) / (2 * eps)
        analytic = sobolev_inner(grad, h, m).real
        floor = 1e-7 * sobolev_norm(grad, m) * sobolev_norm(h, m)
        assert fd == pytest.approx(analytic, rel=1e-4, abs=floor), f"gradient mismatch for direction {seed}"


def test_tikhonov_minimize_builds_operator_from_data(lattice, bump, solver_cfg, far_operator):
    data = far_operator.evaluate(bump)
    f, diag = tikhonov_minimize(TikhonovProblem(data=data, alpha=1.0), ContrastField.zeros(lattice), solver_cfg, max_iterations=2)
    assert diag.iterations <= 2 and len(diag.objective_history) == diag.iterations + 1
    assert diag.objective_history[-1] <= diag.objective_history[0]
    assert f.lattice == lattice


def test_born_problem_matches_dense_solution(lattice, solver_cfg):
    """Gradient descent on the linearized problem reaches the normal-equation solution."""
    alpha, m = 1.0, 2.0
    op = NearFieldOperator.create(solver_cfg, 8)
    born = BornNearFieldOperator(solver_cfg, op.sources, op.receivers)
    data = born.evaluate(smooth_bump(lattice, 0.3))

    K, F0 = born.normal_matrix(lattice)
    D = np.outer(born.sources.weights, born.receivers.weights).ravel()
    W = lattice.sobolev_weights(m).ravel()
    e = F0 - data.values.ravel()
    lhs = K.conj().T @ (D[:, None] * K) + 0.5 * alpha * np.diag(W)
    exact = np.linalg.solve(lhs, -K.conj().T @ (D * e))

    problem = TikhonovProblem(data=data, alpha=alpha, penalty_m=m, enforce_domain=False)
    solver = TikhonovSolver(born, problem, max_iterations=500, tolerance=1e-12)
    f, _ = solver.minimize(ContrastField.zeros(lattice))
    error = math.sqrt(float(np.sum(W * np.abs(f.coeffs.ravel() - exact) ** 2)))
    scale = math.sqrt(float(np.sum(W * np.abs(exact) ** 2)))
    assert error <= 1e-6 * scale, f"H^m distance {error} to the dense solution"


def test_rate_sweep_records(bump, solver_cfg, far_operator, psi):
    records = rate_sweep(
        bump, psi, [1e-1, 1e-2], "far", solver_cfg, operator=far_operator, seed=5, max_iterations=3
    )
    assert [r.delta for r in records] == [1e-2, 1e-1], "records should be sorted by delta"
    assert [r.seed for r in records] == [6, 5], "entry i should use seed + i"
    for r in records:
        assert r.alpha == pytest.approx(alpha_rule(psi, r.delta))
        assert r.kind == "far_field"
        assert math.isfinite(r.err_hm) and r.iterations <= 3
    with pytest.raises(ConfigurationError):
        rate_sweep(bump, psi, [0.0], "far", solver_cfg, operator=far_operator)
