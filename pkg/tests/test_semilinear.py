import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracball.errors import NoConvergence
from fracball.params import ProblemParams
from fracball.semilinear import (NonlinearitySpec, boundary_ratio,
                                 check_subcriticality, energy,
                                 energy_gradient, pohozaev_residual,
                                 solve_radial_sign_changing)


def test_power_family_requires_superlinear_exponent():
    with pytest.raises(ValueError):
        NonlinearitySpec("power", 1.0, 1.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5.0, 5.0))
def test_nonlinearity_derivative_consistency(t):
    for nl in (NonlinearitySpec("power", 2.0, 3.0),
               NonlinearitySpec("linear", 1.5),
               NonlinearitySpec("shifted-linear", 1.0, c0=0.3)):
        h = 1e-6 * (1.0 + abs(t))
        f_fd = (nl.F(t + h) - nl.F(t - h)) / (2.0 * h)
        fp_fd = (nl.f(t + h) - nl.f(t - h)) / (2.0 * h)
        assert nl.f(t) == pytest.approx(f_fd, rel=1e-6, abs=1e-5)
        assert nl.fprime(t) == pytest.approx(fp_fd, rel=1e-5, abs=1e-4)


def test_subcriticality_power_threshold():
    # 2N/(N-2s) = 3 exactly at N = 3, s = 1/2, so p = 3 is critical there.
    res = check_subcriticality(NonlinearitySpec("power", 1.0, 3.0),
                               ProblemParams(3, 0.5))
    assert res.threshold == pytest.approx(3.0)
    assert not res.satisfied
    res2 = check_subcriticality(NonlinearitySpec("power", 1.0, 3.0),
                                ProblemParams(2, 0.5))
    assert res2.threshold == pytest.approx(4.0)
    assert res2.satisfied


def test_subcriticality_low_dimension_unrestricted():
    res = check_subcriticality(NonlinearitySpec("power", 1.0, 7.0),
                               ProblemParams(1, 0.5))
    assert res.satisfied and res.threshold == np.inf


def test_linear_family_returns_scaled_eigenfunction():
    params = ProblemParams(2, 0.5)
    from fracball.spectrum import radial_family

    lam = float(radial_family(params, 0, 16).eigenvalues[1])
    sol = solve_radial_sign_changing(params, NonlinearitySpec("linear", lam),
                                     target_nodes=1, K=16)
    assert sol.linear_degenerate
    assert sol.nodal_count == 1
    assert sol.residual == 0.0


def test_converged_cubic_solution_properties(cubic_n2):
    params, nonlin, sol = cubic_n2
    assert sol.nodal_count == 1
    assert sol.residual < 1e-9
    assert not sol.linear_degenerate
    assert sol.psi0_at_1 == pytest.approx(sol.profile.boundary_ratio(), rel=1e-12)
    # callable evaluation matches the profile
    r = np.array([0.1, 0.5, 0.9])
    assert np.allclose(sol(r), sol.profile(r))


def test_boundary_ratio_classification(cubic_n2):
    _, _, sol = cubic_n2
    value, sign = boundary_ratio(sol)
    assert value == pytest.approx(sol.psi0_at_1)
    assert sign == ("nonnegative" if value >= 0.0 else "negative")


def test_scaling_covariance_of_power_solutions():
    # u_lam = lam^{-1/(p-2)} u_1 maps solutions between coefficients lam.
    params = ProblemParams(2, 0.5)
    sol1 = solve_radial_sign_changing(params, NonlinearitySpec("power", 1.0, 3.0),
                                      target_nodes=1, K=12)
    sol4 = solve_radial_sign_changing(params, NonlinearitySpec("power", 4.0, 3.0),
                                      target_nodes=1, K=12)
    c1 = np.asarray(sol1.coefficients)
    c4 = np.asarray(sol4.coefficients)
    assert np.allclose(c4, c1 / 4.0, rtol=1e-8, atol=1e-8 * np.abs(c1).max())


def test_pohozaev_residual_decreases_with_truncation():
    params = ProblemParams(2, 0.5)
    nl = NonlinearitySpec("power", 1.0, 3.0)
    rels = []
    for K in (12, 18, 24):
        sol = solve_radial_sign_changing(params, nl, target_nodes=1, K=K)
        _, _, rel = pohozaev_residual(sol)
        rels.append(rel)
    assert rels[2] < rels[1] < rels[0]


def test_pohozaev_identity_near_machine_for_fine_truncation():
    params = ProblemParams(1, 0.9)
    nl = NonlinearitySpec("power", 1.0, 3.0)
    sol = solve_radial_sign_changing(params, nl, target_nodes=1, K=24)
    lhs, rhs, rel = pohozaev_residual(sol)
    assert lhs > 0.0 and rhs > 0.0
    assert rel < 1e-3


def test_gradient_vanishes_at_solution(cubic_n2):
    params, nonlin, sol = cubic_n2
    c = np.asarray(sol.coefficients)
    grad = energy_gradient(c, sol.spec, nonlin, params,
                           rule=(sol.quad_r, sol.quad_w))
    from fracball.basis import stiffness_matrix

    scale = np.linalg.norm(stiffness_matrix(sol.spec) @ c)
    assert np.linalg.norm(grad) <= 1e-9 * scale


def test_energy_negative_direction_exists(cubic_n2):
    # J decreases along the solution direction from small amplitudes, so the
    # solution cannot be a local minimizer of the scalar section.
    params, nonlin, sol = cubic_n2
    c = np.asarray(sol.coefficients)
    vals = [energy(t * c, sol.spec, nonlin, params,
                   rule=(sol.quad_r, sol.quad_w)) for t in (1.0, 1.2)]
    assert vals[1] < vals[0]


def test_nodal_count_stable_under_grid_refinement(cubic_n1):
    _, _, sol = cubic_n1
    assert sol.profile.nodal_count(2048) == sol.profile.nodal_count(8192) == 1


def test_no_convergence_raised_on_iteration_cap():
    params = ProblemParams(2, 0.5)
    with pytest.raises(NoConvergence):
        solve_radial_sign_changing(params, NonlinearitySpec("power", 1.0, 3.0),
                                   target_nodes=1, K=12, max_iter=1)
