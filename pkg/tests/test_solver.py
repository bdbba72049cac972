import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iongates.constraints import build_constraints
from iongates.drive import harmonic_basis
from iongates.errors import DimensionMismatch, EmptyNullSpace, Infeasible, ProjectionFailed, ZeroMatrix
from iongates.phase_forms import ReducedForms, phase_forms, reduced_forms
from iongates.pipeline import design_gate
from iongates.solver import (
    SolverOptions,
    independent_forms,
    optimize,
    renormalize_feasible,
    solve_three_ion,
    solve_two_ion,
    spectral_split,
)

from oracles import random_orthogonal

HALF_PI = np.pi / 2
PERIOD = 2 * np.pi


def _sym(rng, n):
    a = rng.standard_normal((n, n))
    return a + a.T


def _indefinite(rng, n):
    Q = random_orthogonal(n, rng)
    w = rng.uniform(0.2, 3.0, n) * np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return (Q * w) @ Q.T


def test_two_ion_diagonal():
    f = solve_two_ion(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(np.abs(f.x), [np.sqrt(np.pi / 4), 0.0], atol=1e-15)
    assert f.phase_sign == 1
    assert f.x @ np.diag([2.0, 1.0]) @ f.x == pytest.approx(HALF_PI, rel=1e-15)


def test_two_ion_negative_definite():
    f = solve_two_ion(-np.eye(3))
    assert f.phase_sign == -1
    assert np.linalg.norm(f.x) == pytest.approx(np.sqrt(HALF_PI), rel=1e-15)


def test_two_ion_zero_matrix():
    with pytest.raises(ZeroMatrix):
        solve_two_ion(np.zeros((3, 3)))


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12))
def test_two_ion_random(seed, n):
    C = _sym(np.random.default_rng(seed), n)
    f = solve_two_ion(C)
    assert abs(abs(f.x @ C @ f.x) - HALF_PI) < 1e-12
    assert np.sign(f.x @ C @ f.x) == f.phase_sign


def test_two_ion_is_minimum_norm():
    # Among all x with |x^T C x| = pi/2 the top eigenvector has the least 2-norm.
    rng = np.random.default_rng(5)
    C = _sym(rng, 6)
    f = solve_two_ion(C)
    for _ in range(200):
        y = rng.standard_normal(6)
        y *= np.sqrt(HALF_PI / abs(y @ C @ y))
        assert np.linalg.norm(y) >= np.linalg.norm(f.x) * (1 - 1e-12)


def test_three_ion_constructed_direction():
    C2 = np.diag([1.0, 3.0])
    C3 = C2 - np.diag([4.0, -1.0])
    f = solve_three_ion(C2, C3)
    # e1 + 2 e2 up to sign and scale.
    assert abs(f.x[1] / f.x[0]) == pytest.approx(2.0, rel=1e-14)
    D = np.diag([4.0, -1.0])
    assert abs(f.x @ D @ f.x) < 1e-12
    assert abs(f.x @ C2 @ f.x) == pytest.approx(HALF_PI, rel=1e-14)


def test_three_ion_definite_difference_is_infeasible():
    with pytest.raises(Infeasible):
        solve_three_ion(np.diag([3.0, 2.0]), np.diag([1.0, 1.0]))
    with pytest.raises(Infeasible):
        solve_three_ion(np.diag([1.0, 1.0]), np.diag([3.0, 2.0]))


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 10))
def test_three_ion_random_indefinite(seed, n):
    rng = np.random.default_rng(seed)
    C2 = _sym(rng, n)
    C3 = C2 - _indefinite(rng, n)
    f = solve_three_ion(C2, C3)
    assert abs(f.x @ (C2 - C3) @ f.x) < 1e-10
    assert abs(abs(f.x @ C2 @ f.x) - HALF_PI) < 1e-10
    assert abs(abs(f.x @ C3 @ f.x) - HALF_PI) < 1e-10


def test_spectral_split_blocks():
    s = spectral_split(np.diag([3.0, -1.0, 0.0, 5.0, -4.0]))
    np.testing.assert_array_equal(s.lam, [5.0, 3.0])
    np.testing.assert_array_equal(s.gam, [-4.0, -1.0])
    assert s.zero_space.shape == (5, 1)


def test_renormalize_is_idempotent_on_feasible_points():
    rng = np.random.default_rng(11)
    D = _indefinite(rng, 5)
    C2 = _sym(rng, 5)
    x = renormalize_feasible(rng.standard_normal(5), [D], C2)
    y = renormalize_feasible(x, [D], C2)
    np.testing.assert_allclose(y, x, rtol=1e-12, atol=1e-12)


def test_renormalize_needs_both_signs():
    D = np.diag([2.0, -1.0])
    with pytest.raises(ProjectionFailed):
        renormalize_feasible(np.array([1.0, 0.0]), [D], np.eye(2))


@given(seed=st.integers(0, 2**32 - 1))
def test_renormalize_random(seed):
    rng = np.random.default_rng(seed)
    D = _indefinite(rng, 6)
    C2 = _sym(rng, 6)
    x = renormalize_feasible(rng.standard_normal(6), [D], C2)
    assert abs(x @ D @ x) < 1e-10 * max(1.0, np.abs(D).max() * (x @ x))
    assert abs(abs(x @ C2 @ x) - HALF_PI) < 1e-12


def test_independent_forms_drops_dependence():
    a = np.diag([1.0, 0.0])
    b = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = independent_forms([a, 2 * a, a + b, 1e-20 * b])
    assert len(out) == 2


@pytest.fixture(scope="module")
def two_ion_problem(modes2):
    tones = harmonic_basis(10 * PERIOD, modes2)
    cs = build_constraints(modes2, tones)
    forms = phase_forms(modes2, tones)
    return tones, cs, forms, reduced_forms(cs.K, forms, [HALF_PI])


def test_optimize_two_ion_end_to_end(two_ion_problem):
    tones, cs, forms, red = two_ion_problem
    sol = optimize(red, cs.K, SolverOptions(restarts=4), L=cs.L, forms=forms)
    assert sol.success
    assert sol.residuals["quad_max"] < 1e-9
    assert sol.residuals["closure_max"] < 1e-9
    np.testing.assert_allclose(sol.r, cs.K @ sol.x, rtol=0, atol=0)
    assert sol.phases[0] - sol.phases[1] == pytest.approx(HALF_PI, abs=1e-9)
    assert sol.one_norm == pytest.approx(np.abs(sol.r).sum())


def test_optimize_result_lies_in_null_space(two_ion_problem):
    tones, cs, forms, red = two_ion_problem
    sol = optimize(red, cs.K, SolverOptions(restarts=2))
    # r in range(K): projecting onto the orthonormal basis loses nothing.
    np.testing.assert_allclose(cs.K @ (cs.K.T @ sol.r), sol.r, atol=1e-12)


def test_optimize_is_deterministic(two_ion_problem):
    _, cs, _, red = two_ion_problem
    a = optimize(red, cs.K, SolverOptions(restarts=3, seed=7))
    b = optimize(red, cs.K, SolverOptions(restarts=3, seed=7))
    assert np.array_equal(a.x, b.x) and a.restart_index == b.restart_index


def test_zero_targets_return_degenerate_zero(two_ion_problem):
    _, cs, _, red = two_ion_problem
    zero = ReducedForms(red.C_tilde, np.zeros(1))
    sol = optimize(zero, cs.K)
    assert sol.degenerate and np.all(sol.r == 0) and sol.one_norm == 0.0


def test_target_scaling_scales_amplitudes(two_ion_problem):
    # Doubling the gaps multiplies the optimum by sqrt(2).
    _, cs, _, red = two_ion_problem
    a = optimize(red, cs.K, SolverOptions(restarts=4))
    b = optimize(ReducedForms(red.C_tilde, 2 * red.target_gaps), cs.K, SolverOptions(restarts=4))
    assert b.one_norm == pytest.approx(np.sqrt(2) * a.one_norm, rel=1e-4)


def test_optimize_input_checks(two_ion_problem):
    _, cs, _, red = two_ion_problem
    with pytest.raises(EmptyNullSpace):
        optimize(red, np.zeros((cs.K.shape[0], 0)))
    with pytest.raises(DimensionMismatch):
        optimize(red, cs.K[:, :-1])


def test_sign_definite_gap_form_is_infeasible_with_closest_attached():
    # Positive definite form cannot reach a negative gap.
    C = np.eye(3)[None]
    with pytest.raises(Infeasible) as info:
        optimize(ReducedForms(C, np.array([-1.0])), np.eye(3), SolverOptions(restarts=3))
    assert info.value.best is None or not info.value.best.success


def test_sign_flip_rescues_wrong_sign():
    C = np.eye(3)[None]
    sol = optimize(ReducedForms(C, np.array([-1.0])), np.eye(3),
                   SolverOptions(restarts=4, allow_sign_flip=True))
    assert sol.phase_sign == -1
    assert sol.x @ sol.x == pytest.approx(1.0, abs=1e-9)


def test_design_gate_two_ion_fidelity(modes2):
    d = design_gate(modes2, 10 * PERIOD, options=SolverOptions(restarts=4))
    assert d.solution.residuals["quad_max"] < 1e-9
    assert 1 - d.report.F_U < 1e-4
