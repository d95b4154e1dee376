import numpy as np
import pytest

from fracball.errors import DimensionUnsupported
from fracball.morse import (assemble_linearized, build_test_functions,
                            first_linearized_eigen, morse_index)
from fracball.morse import test_function_checks as run_test_function_checks
from fracball.params import ProblemParams
from fracball.semilinear import NonlinearitySpec, solve_radial_sign_changing
from fracball.spectrum import assemble_full_spectrum, radial_family


def _linear_solution(params, K, level, target_nodes):
    lam = float(radial_family(params, 0, K).eigenvalues[level])
    sol = solve_radial_sign_changing(params, NonlinearitySpec("linear", lam),
                                     target_nodes=target_nodes, K=K)
    return lam, sol


def test_ground_state_linear_family_no_negative_directions():
    params = ProblemParams(1, 0.5)
    _, sol = _linear_solution(params, 16, 0, 0)
    rep = morse_index(params, sol, ell_max=1)
    assert rep.total_index == 0
    assert rep.marginal_total == 1  # the solution itself is the zero mode
    assert rep.theorem_check == "not-applicable"


@pytest.mark.parametrize("N,s", [(1, 0.5), (2, 0.75)])
def test_linear_crosscheck_second_eigenfunction(N, s):
    params = ProblemParams(N, s)
    lam, sol = _linear_solution(params, 24, 1, 1)
    rep = morse_index(params, sol, ell_max=3)
    spectrum = assemble_full_spectrum(params, 3, 4, 24)
    assert rep.total_index == spectrum.below(lam)
    assert rep.total_index >= N + 1
    assert rep.marginal_total >= 1
    assert rep.theorem_check == "passes"


def test_morse_counts_respect_multiplicity():
    params = ProblemParams(3, 0.5)
    lam, sol = _linear_solution(params, 20, 1, 1)
    rep = morse_index(params, sol, ell_max=3)
    per_ell = {sc.ell: sc for sc in rep.per_ell}
    assert per_ell[1].multiplicity == 3
    assert per_ell[2].multiplicity == 5
    # total = sum over sectors of (radial count) x (multiplicity)
    assert rep.total_index == sum(sc.negative * sc.multiplicity
                                  for sc in rep.per_ell)


def test_first_linearized_eigen_radial_negative(cubic_n2):
    params, _, sol = cubic_n2
    lam1, ell, profile, definite = first_linearized_eigen(params, sol)
    assert lam1 < 0.0
    assert ell == 0
    assert definite


def test_linearized_assembly_passes_kernel_gate(cubic_n1):
    params, _, sol = cubic_n1
    for ell in (0, 1):
        pair = assemble_linearized(params, sol, ell, sol.spec.K,
                                   oracle_budget=50_000)
        assert np.allclose(pair.A, pair.A.T, atol=1e-10 * np.abs(pair.A).max())


def test_build_test_functions_structure(cubic_n2):
    params, _, sol = cubic_n2
    fns = build_test_functions(sol)
    assert len(fns) == params.N
    du = sol.profile.derivative
    for j, fn in enumerate(fns, start=1):
        assert fn.j == j and fn.ell == 1 and fn.label == f"d_{j}"
        assert 0.0 < fn.support_radius < 1.0
        r_out = np.linspace(fn.support_radius + 1e-9, 1.0, 64)
        assert np.allclose(fn.profile(r_out), 0.0)
        # one sign of u' only, matching the boundary-data convention
        r_in = np.linspace(1e-3, fn.support_radius, 256)
        vals = fn.profile(r_in)
        if sol.psi0_at_1 >= 0.0:
            assert np.all(vals >= 0.0)
            assert np.allclose(vals, np.maximum(du(r_in), 0.0))
        else:
            assert np.all(vals <= 0.0)
            assert np.allclose(vals, np.minimum(du(r_in), 0.0))


def test_test_function_checks_one_dimensional(cubic_n1):
    params, _, sol = cubic_n1
    rep = run_test_function_checks(params, sol)
    assert rep.method == "deterministic"
    est = rep.diag[1]
    assert est.value + 3.0 * est.error < 0.0
    pairing = rep.first_eigen_pairing[1]
    assert pairing.value == 0.0 and pairing.error == 0.0  # exact by parity
    assert rep.rayleigh_bound < 0.0
    defect = rep.weak_defect[(1, 1)]
    assert abs(defect.value) <= 3.0 * defect.error


def test_test_function_checks_monte_carlo_smoke(cubic_n2):
    params, _, sol = cubic_n2
    rep = run_test_function_checks(params, sol, mc_samples=40_000, seed=7)
    assert rep.method == "monte-carlo"
    assert set(rep.diag) == {1, 2}
    assert (1, 2) in rep.cross
    assert all(np.isfinite(e.error) and e.error > 0.0 for e in rep.diag.values())


def test_test_function_checks_dimension_limit():
    params = ProblemParams(3, 0.5)
    _, sol = _linear_solution(params, 16, 1, 1)
    with pytest.raises(DimensionUnsupported):
        run_test_function_checks(params, sol)
