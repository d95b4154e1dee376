import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracball.errors import UnsupportedAngularDegree
from fracball.params import (ProblemParams, frac_constant,
                             harmonic_multiplicity, sphere_area)


def test_frac_constant_closed_form_values():
    # c(1, 1/2) = 1/pi and c(2, 1/2) = 1/(2 pi) follow from the Gamma
    # factors collapsing at s = 1/2.
    assert frac_constant(1, 0.5) == pytest.approx(1.0 / math.pi, rel=1e-14)
    assert frac_constant(2, 0.5) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)


@given(st.integers(1, 6), st.floats(0.05, 0.95))
def test_frac_constant_positive(N, s):
    assert frac_constant(N, s) > 0.0


def test_frac_constant_vanishes_at_endpoints():
    # s Gamma(...)/Gamma(1-s) -> 0 as s -> 0+ and stays finite as s -> 1-.
    assert frac_constant(2, 1e-8) == pytest.approx(0.0, abs=1e-6)
    assert frac_constant(2, 1.0 - 1e-8) < 1e3


def test_sphere_area_low_dimensions():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2.0 * math.pi)
    assert sphere_area(3) == pytest.approx(4.0 * math.pi)


def test_harmonic_multiplicity_three_dimensions():
    # In R^3 the degree-ell space has dimension 2 ell + 1.
    for ell in range(6):
        assert harmonic_multiplicity(3, ell) == 2 * ell + 1


def test_harmonic_multiplicity_planar_and_line():
    assert harmonic_multiplicity(2, 0) == 1
    assert all(harmonic_multiplicity(2, ell) == 2 for ell in range(1, 6))
    assert harmonic_multiplicity(1, 0) == 1
    assert harmonic_multiplicity(1, 1) == 1
    with pytest.raises(UnsupportedAngularDegree):
        harmonic_multiplicity(1, 2)


@given(st.integers(2, 6), st.integers(0, 8))
def test_harmonic_multiplicity_positive(N, ell):
    assert harmonic_multiplicity(N, ell) >= 1


def test_problem_params_validation():
    with pytest.raises(ValueError):
        ProblemParams(0, 0.5)
    with pytest.raises(ValueError):
        ProblemParams(2, 0.0)
    with pytest.raises(ValueError):
        ProblemParams(2, 1.0)
    ProblemParams(2, 0.5)  # valid
