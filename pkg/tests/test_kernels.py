import numpy as np
import pytest
from scipy.integrate import quad

from fracball.kernels import kappa_ell, kappa_moments, kappa_moments_1d


def _kappa_direct(r, rho, d, s, moment):
    """Sphere average by direct quadrature in the polar angle."""
    from fracball.params import sphere_area

    p = d + 2.0 * s
    weight = sphere_area(d - 1) if d > 2 else 2.0

    def integrand(theta):
        dist2 = r * r + rho * rho - 2.0 * r * rho * np.cos(theta)
        w = np.sin(theta) ** (d - 2) if d > 2 else 1.0
        fac = 1.0 if moment == 0 else (1.0 - np.cos(theta))
        return w * fac * dist2 ** (-p / 2.0)

    val, _ = quad(integrand, 0.0, np.pi, limit=200)
    return weight * val


@pytest.mark.parametrize("d", [2, 3, 5])
@pytest.mark.parametrize("r,rho", [(0.5, 0.8), (0.3, 0.31), (0.9, 0.2)])
def test_kappa_moments_match_direct_angle_quadrature(d, r, rho):
    s = 0.6
    k0, kd = kappa_moments(r, rho, abs(r - rho), d, s)
    assert float(k0) == pytest.approx(_kappa_direct(r, rho, d, s, 0), rel=1e-10)
    assert float(kd) == pytest.approx(_kappa_direct(r, rho, d, s, 1), rel=1e-10)


def test_kappa_1d_elementary():
    # The 0-sphere average is the two-point sum over w = +/-1.
    r, rho, s = 0.4, 0.7, 0.3
    k0, kd = kappa_moments_1d(r, rho, abs(r - rho), s)
    near = abs(r - rho) ** (-1.0 - 2.0 * s)
    far = (r + rho) ** (-1.0 - 2.0 * s)
    assert float(k0) == pytest.approx(near + far, rel=1e-14)
    assert float(k0 - kd) == pytest.approx(near - far, rel=1e-14)


def test_kappa_symmetry_in_radii():
    k_ab = kappa_moments(0.45, 0.72, 0.27, 3, 0.5)
    k_ba = kappa_moments(0.72, 0.45, 0.27, 3, 0.5)
    assert float(k_ab[0]) == pytest.approx(float(k_ba[0]), rel=1e-12)
    assert float(k_ab[1]) == pytest.approx(float(k_ba[1]), rel=1e-12)


def test_kappa_near_diagonal_blowup_rate():
    # kappa_0 ~ C h^{-1-2s} as the radii merge; the log-slope over a decade
    # of h must match the exponent.
    s, r = 0.4, 0.5
    hs = np.array([1e-3, 1e-4])
    vals = [float(kappa_moments(r, r - h, h, 2, s)[0]) for h in hs]
    slope = np.log(vals[1] / vals[0]) / np.log(hs[1] / hs[0])
    assert slope == pytest.approx(-1.0 - 2.0 * s, abs=2e-2)


def test_kappa_ell_ordering():
    # 0 < kappa_1 < kappa_0: the first cosine moment is a strict average.
    for d in (1, 2, 3):
        k0 = float(kappa_ell(0.5, 0.6, 0.1, d, 0.5, 0))
        k1 = float(kappa_ell(0.5, 0.6, 0.1, d, 0.5, 1))
        assert 0.0 < k1 < k0


def test_kappa_moments_rejects_d1():
    with pytest.raises(ValueError):
        kappa_moments(0.5, 0.6, 0.1, 1, 0.5)
