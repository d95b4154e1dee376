"""Angular reductions of the Riesz kernel |x - y|^{-(d+2s)} on spheres.

For radial (and degree-one angular) functions the 2d-dimensional double
integral defining the Dirichlet form collapses to a double radial integral
against the sphere-averaged kernel moments

    kappa_0(r, rho)    = int_{S^{d-1}} |r e - rho w|^{-(d+2s)} dsigma(w)
    kappa_diff(r, rho) = int_{S^{d-1}} (1 - e.w) |r e - rho w|^{-(d+2s)} dsigma(w)

(kappa_1 = kappa_0 - kappa_diff is the first cosine moment).  Both are
evaluated to near machine precision by a fixed-size quadrature in the
half-angle variable; the separation h = |r - rho| is passed in explicitly so
the near-diagonal blow-up kappa_0 ~ h^{-1-2s} is computed without
cancellation.
"""

import numpy as np
from scipy.special import roots_legendre

from .params import sphere_area

# region A: smooth inner region phi in (0, phi0)
_XA, _WA = roots_legendre(16)
_XA = (_XA + 1.0) / 2.0
_WA = _WA / 2.0

# region B: logarithmic sweep phi0 -> pi/2.  kappa_0 mass sits near tau = 0,
# the (1 - cos) moment's near tau = 1 (for s < 1/2), so refine toward both ends.
_TAU_EDGES = np.array(
    [0.0, 1 / 64, 1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2,
     1 - 1 / 4, 1 - 1 / 8, 1 - 1 / 16, 1 - 1 / 32, 1 - 1 / 64, 1.0]
)
_xb, _wb = roots_legendre(10)
_XB = np.concatenate(
    [lo + (hi - lo) * (_xb + 1.0) / 2.0 for lo, hi in zip(_TAU_EDGES[:-1], _TAU_EDGES[1:])]
)
_WB = np.concatenate(
    [(hi - lo) * _wb / 2.0 for lo, hi in zip(_TAU_EDGES[:-1], _TAU_EDGES[1:])]
)

_HALF_PI = np.pi / 2.0


def kappa_moments(r, rho, h, d, s):
    """Sphere-averaged kernel moments (kappa_0, kappa_diff) for dimension d >= 2.

    r, rho, h broadcast; h must equal |r - rho| (supplied separately so that
    quadrature parametrized by the gap keeps full precision near the diagonal).
    """
    if d < 2:
        raise ValueError("kappa_moments requires d >= 2; use kappa_moments_1d")
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    h = np.asarray(h, dtype=float)
    r, rho, h = np.broadcast_arrays(r, rho, h)
    shape = r.shape
    r, rho, h = r.ravel(), rho.ravel(), h.ravel()

    pref = 2.0 ** (d - 1) * sphere_area(d - 1)
    p = (d + 2.0 * s) / 2.0
    rr4 = 4.0 * r * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        u0 = np.where(rr4 > 0.0, h / np.sqrt(np.where(rr4 > 0.0, rr4, 1.0)), 2.0)
    phi0 = np.arcsin(np.minimum(u0, 1.0))
    phi0 = np.maximum(phi0, 1e-300)

    def moments(phi, jac):
        # phi, jac shape (npts, nquad)
        sp = np.sin(phi)
        cp = np.cos(phi)
        base = (h[:, None] ** 2 + rr4[:, None] * sp**2) ** (-p)
        f0 = (sp * cp) ** (d - 2) * base
        m0 = np.sum(f0 * jac, axis=1)
        md = np.sum(2.0 * sp**2 * f0 * jac, axis=1)
        return m0, md

    # region A
    phiA = phi0[:, None] * _XA[None, :]
    jacA = phi0[:, None] * _WA[None, :]
    k0, kd = moments(phiA, jacA)

    # region B (empty when phi0 == pi/2)
    lr = np.log(_HALF_PI / phi0)
    phiB = phi0[:, None] * np.exp(lr[:, None] * _XB[None, :])
    jacB = phiB * lr[:, None] * _WB[None, :]
    b0, bd = moments(phiB, jacB)
    k0 += b0
    kd += bd

    k0 *= pref
    kd *= pref
    return k0.reshape(shape), kd.reshape(shape)


def kappa_moments_1d(r, rho, h, s):
    """Kernel moments for d = 1 (the 0-sphere): exact elementary expressions."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    h = np.asarray(h, dtype=float)
    near = h ** (-1.0 - 2.0 * s)
    far = (r + rho) ** (-1.0 - 2.0 * s)
    k0 = near + far
    kdiff = 2.0 * far
    return np.broadcast_arrays(k0 + 0.0 * rho, kdiff + 0.0 * r)[0:2]


def kappa_ell(r, rho, h, d, s, ell):
    """kappa for the angular class: kappa_0 (ell = 0) or kappa_1 (ell = 1)."""
    if d == 1:
        k0, kd = kappa_moments_1d(r, rho, h, s)
    else:
        k0, kd = kappa_moments(r, rho, h, d, s)
    if ell == 0:
        return k0
    return k0 - kd
