"""Morse index of radial solutions via the linearized operator L = (-Delta)^s - f'(u).

Because f'(u) is radial, L preserves each angular sector, so its spectrum
splits into radial blocks in effective dimension N + 2*ell.  The block
reduction is treated as a gated assumption: the ell = 0 and ell = 1 blocks
are cross-checked against the singular-kernel quadrature oracle before use.
Alongside the index live the signed-derivative test functions d_j whose
negative energy forces the lower bound index >= N + 1, together with the
quadratic-form checks that reproduce that argument numerically.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import (RadialBasisSpec, RadialProfile, assemble_radial_operator,
                    basis_matrix, solve_radial_eigs)
from .errors import (DimensionUnsupported, InadmissibleBoundaryData,
                     OracleMismatch, TruncationUnsafe)
from .nonlocal_quadrature import (SeparableFunction, angular_factor,
                                  bilinear_form, exterior_tail,
                                  quadratic_form_L, radial_potential_integral)
from .params import ProblemParams, frac_constant, harmonic_multiplicity, sphere_area
from .quadrature import QuadratureRule, ValueWithError, segment_rule


# ---------------------------------------------------------------------------
# linearized blocks


_GATE_TOL_REL = 1e-4
_gate_cache = set()


def _linearization_context(sol):
    prof = sol.profile
    prof.breaks = sol.breaks  # kink radii for kink-aware quadrature
    return (sol.params, sol.nonlin, prof)


def _gate_block(params, sol, ell, pair):
    """Validate a linearized block entry against the full singular-kernel
    quadrature (once per (solution, ell) per process)."""
    key = (params.N, params.s, ell, sol.spec.K,
           hash(sol.coefficients.tobytes()))
    if key in _gate_cache:
        return
    ctx = _linearization_context(sol)
    d = params.N + 2 * ell
    spec_d = pair.spec
    e0 = np.zeros(spec_d.K)
    e0[0] = 1.0
    g = RadialProfile(spec_d, e0)
    if ell == 0:
        v = SeparableFunction(profile=g, angular="constant",
                              label="first basis function")
        block_val = pair.A[0, 0]
        conv = 1.0
    else:
        # ambient trial x_1 * g(|x|): separable profile r * g(r); the block
        # matrix lives in the full-measure convention of dimension d = N + 2,
        # the ambient form carries angular_factor(N, 1)
        v = SeparableFunction(profile=lambda r: np.asarray(r) * np.asarray(g(r)),
                              angular="coordinate", j=1,
                              label="x1 times first basis function")
        block_val = pair.A[0, 0]
        conv = angular_factor(params.N, 1) / sphere_area(d)
    est = quadratic_form_L(ctx, v, v)
    target = conv * block_val
    scale = max(abs(est.value), abs(target))
    if abs(est.value - target) > max(10.0 * est.error, _GATE_TOL_REL * scale):
        raise OracleMismatch(
            f"linearized ell={ell} block entry {target:.10g} vs oracle "
            f"{est.value:.10g} +/- {est.error:.2g}"
        )
    _gate_cache.add(key)


def assemble_linearized(params, sol, ell, K, oracle_budget=None):
    """Radial operator pair for L in the angular sector ell.

    The ell = 0 and ell = 1 blocks are validated against the quadrature
    oracle once per build (OracleMismatch on failure).
    """
    if isinstance(params, tuple):
        params = ProblemParams(*params)
    harmonic_multiplicity(params.N, ell)  # validates ell for this N
    spec = RadialBasisSpec(params.N + 2 * ell, params.s, K)
    u = sol.profile

    def potential(r):
        return sol.nonlin.fprime(np.asarray(u(r), dtype=float))

    pair = assemble_radial_operator(
        spec, potential=potential, potential_breaks=sol.breaks,
        potential_tag=f"fprime({sol.nonlin.family})", oracle_budget=oracle_budget)
    if ell <= 1:
        _gate_block(params, sol, ell, pair)
    return pair


# ---------------------------------------------------------------------------
# Morse index


@dataclass
class SectorCount:
    ell: int
    negative: int
    marginal: int
    smallest: float
    convergence: float
    multiplicity: int


@dataclass
class MorseReport:
    params: ProblemParams
    solution_residual: float
    per_ell: list
    total_index: int
    marginal_total: int
    lambda1L: float
    lambda1L_is_radial: bool
    theorem_check: str  # 'passes' | 'fails' | 'not-applicable'
    ell_max: int
    K: int


def _sector_eigs(params, sol, ell, K, oracle_budget=None):
    pair = assemble_linearized(params, sol, ell, K, oracle_budget=oracle_budget)
    return solve_radial_eigs(pair)


def morse_index(params, sol, ell_max=3, K=None, oracle_budget=None):
    """Count negative eigenvalues of L per sector, weighted by multiplicity.

    An eigenvalue counts as negative only when value + convergence < 0;
    eigenvalues within their convergence estimate of zero are reported as
    marginal and never included in the total.  Raises TruncationUnsafe when
    the sector beyond the last negative one still reaches below zero.
    """
    if isinstance(params, tuple):
        params = ProblemParams(*params)
    if K is None:
        K = sol.spec.K
    if params.N == 1:
        ell_max = min(ell_max, 1)  # parity decomposition is exhaustive
    per_ell = []
    for ell in range(ell_max + 1):
        res = _sector_eigs(params, sol, ell, K, oracle_budget=oracle_budget)
        lam = res.eigenvalues
        conv = res.convergence
        neg = int(np.sum(lam + conv < 0.0))
        # a straddler above a confidently positive level is positive by the
        # eigenvalue ordering, not marginal (top-of-spectrum convergence
        # estimates are meaningless)
        conf_pos = np.nonzero(lam - conv > 0.0)[0]
        cut = conf_pos[0] if conf_pos.size else lam.size
        straddle = (lam + conv >= 0.0) & (lam - conv <= 0.0)
        marginal = int(np.sum(straddle[:cut]))
        per_ell.append(SectorCount(ell, neg, marginal, float(lam[0]),
                                   float(conv[0]),
                                   harmonic_multiplicity(params.N, ell)))
    last = per_ell[-1]
    exhaustive = params.N == 1 and ell_max >= 1
    if not exhaustive and last.smallest - last.convergence <= 0.0:
        raise TruncationUnsafe(
            f"sector ell={last.ell} still reaches {last.smallest:.3e}; raise ell_max"
        )
    total = sum(sc.negative * sc.multiplicity for sc in per_ell)
    marg = sum(sc.marginal * sc.multiplicity for sc in per_ell)
    lam1 = min(sc.smallest for sc in per_ell)
    lam1_radial = per_ell[0].smallest == lam1
    if sol.nodal_count == 0:
        check = "not-applicable"
    else:
        check = "passes" if total >= params.N + 1 else "fails"
    return MorseReport(params, sol.residual, per_ell, total, marg, lam1,
                       lam1_radial, check, ell_max, K)


def first_linearized_eigen(params, sol, K=None, ell_max=3, oracle_budget=None):
    """(lambda_{1,L}, sector, radial profile, sign-definite) of the first
    eigenvalue of the linearized operator."""
    if isinstance(params, tuple):
        params = ProblemParams(*params)
    if K is None:
        K = sol.spec.K
    if params.N == 1:
        ell_max = min(ell_max, 1)
    best = None
    for ell in range(ell_max + 1):
        res = _sector_eigs(params, sol, ell, K, oracle_budget=oracle_budget)
        if best is None or res.eigenvalues[0] < best[0]:
            best = (float(res.eigenvalues[0]), ell, res)
    lam1, ell1, res = best
    prof = RadialProfile(res.spec, res.eigenvectors[:, 0])
    return lam1, ell1, prof, _sign_definite(prof, params.N)


def _sign_definite(prof, N, n_grid=8192, tol=1e-4):
    """Sign-definite up to truncation: the minority-sign L2 mass fraction
    must be negligible.  Spectral eigenvectors develop small boundary
    oscillations that vanish as K grows; a genuine interior sign change
    carries O(1) mass, so the mass criterion separates the two cleanly."""
    r = np.linspace(0.0, 1.0, n_grid + 1)[:-1]
    u = np.asarray(prof(r))
    w = r ** (N - 1)
    pos = float(np.dot(w, np.maximum(u, 0.0) ** 2))
    neg = float(np.dot(w, np.minimum(u, 0.0) ** 2))
    total = pos + neg
    if total == 0.0:
        return False
    return min(pos, neg) / total <= tol


# ---------------------------------------------------------------------------
# test functions d_j


def _derivative_sign_radii(du, n_grid=4096):
    """Sign-change radii of u' in (0, 1) by grid scan + bisection."""
    from scipy.optimize import brentq

    r = np.linspace(0.0, 1.0, n_grid + 1)[1:-1]
    vals = du(r)
    roots = []
    sgn = np.sign(vals)
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        roots.append(brentq(lambda t: float(du(np.array([t]))[0]), r[i], r[i + 1]))
    return roots


def build_test_functions(sol, n_grid=4096):
    """Signed-derivative test functions d_j = (x_j/|x|) w(|x|), j = 1..N.

    w = max(u', 0) when psi0(1) >= 0, w = min(u', 0) when psi0(1) < 0; in
    either case w vanishes near the boundary (compact support radius r_*),
    because u' ~ -s psi0(1) (1-r)^{s-1} there.  Requires psi0(1) != 0 or
    s > 1/2; a near-zero boundary ratio with s <= 1/2 is rejected.
    """
    params = sol.params
    psi0 = sol.psi0_at_1
    if abs(psi0) < 1e-8 and params.s <= 0.5:
        raise InadmissibleBoundaryData(
            f"psi0(1) = {psi0:.2e} ~ 0 with s = {params.s} <= 1/2"
        )
    du = sol.profile.derivative
    positive_branch = psi0 >= 0.0

    def w(r):
        vals = np.asarray(du(np.atleast_1d(np.asarray(r, dtype=float))))
        return np.maximum(vals, 0.0) if positive_branch else np.minimum(vals, 0.0)

    roots = _derivative_sign_radii(du, n_grid)
    # outermost radius beyond which the signed part vanishes
    r_star = None
    if abs(psi0) > 1e-8:
        r_star = max(roots) if roots else 0.0
    fns = []
    for j in range(1, params.N + 1):
        fns.append(SeparableFunction(
            profile=w, angular="signed-derivative", j=j,
            breaks=tuple(roots),
            support_radius=r_star if r_star is not None else 1.0,
            label=f"d_{j}"))
    return fns


# ---------------------------------------------------------------------------
# quadratic-form checks


@dataclass
class TestFunctionReport:
    params: ProblemParams
    sign_convention: str  # 'psi0 >= 0' or 'psi0 < 0'
    compact_support_radius: float | None
    diag: dict          # j -> ValueWithError for E_{s,L}(d_j, d_j)
    cross: dict         # (j, k) -> ValueWithError for E_{s,L}(d_j, d_k)
    weak_defect: dict   # (j, k) -> ValueWithError for E_s(v^j,d_k)-int f'(u)v^j d_k
    first_eigen_pairing: dict  # j -> ValueWithError for E_{s,L}(d_j, phi_{1,L})
    rayleigh_bound: float
    lambda1L: float
    method: str         # 'deterministic' | 'monte-carlo'


def _l2_norm_sq(fn, params):
    est = radial_potential_integral(lambda r: np.ones_like(np.asarray(r)),
                                    fn.profile, fn.profile, params.N,
                                    breaks=fn.breaks)
    ang = angular_factor(params.N, fn.ell)
    return ValueWithError(ang * est.value, ang * est.error)


def _mc_quadratic_pair(u, v, params, M, seed):
    """Stratified Monte-Carlo estimate of E_s(u, v) at N = 2.

    x is sampled per quadrant (fixed allocation M/4, deterministic
    substreams), the offset y = x + t*omega with the same importance density
    as the unreduced-form sampler; for pairs sharing the parity class the
    cut-off and exterior remainders are added deterministically.
    """
    N, s = params.N, params.s
    beta = max(0.0, 2.0 * s - 0.5)
    c = frac_constant(N, s)
    # per-quadrant x measure: quadrant volume = ball_volume / 4
    quad_vol = (sphere_area(N) / N) / 4.0
    const = quad_vol * sphere_area(N) * 2.0 ** (1.0 - beta) / (1.0 - beta)
    seeds = np.random.SeedSequence(seed).spawn(4)
    total = 0.0
    var_sum = 0.0
    m_each = M // 4
    for q, (sx, sy) in enumerate([(1, 1), (-1, 1), (-1, -1), (1, -1)]):
        rng = np.random.default_rng(seeds[q])
        acc = 0.0
        acc_sq = 0.0
        done = 0
        while done < m_each:
            m = min(200_000, m_each - done)
            theta = (np.pi / 2.0) * rng.random(m)
            rad = np.sqrt(rng.random(m))
            x = np.column_stack([sx * rad * np.cos(theta), sy * rad * np.sin(theta)])
            t = 2.0 * rng.random(m) ** (1.0 / (1.0 - beta))
            phi = 2.0 * np.pi * rng.random(m)
            y = x + np.column_stack([t * np.cos(phi), t * np.sin(phi)])
            du = u(x) - u(y)
            dv = v(x) - v(y)
            samp = 0.5 * c * const * t ** (beta - 1.0 - 2.0 * s) * du * dv
            acc += float(samp.sum())
            acc_sq += float((samp**2).sum())
            done += m
        mean_q = acc / m_each
        var_q = max(acc_sq / m_each - mean_q**2, 0.0)
        total += mean_q
        var_sum += var_q / m_each
    se = math.sqrt(var_sum)

    det = 0.0
    if u.ell == v.ell and (u.ell == 0 or u.j == v.j):
        ang = angular_factor(N, u.ell)
        pts = sorted(set([0.0, 1.0] + [float(b) for b in (*u.breaks, *v.breaks)]))
        rl = segment_rule(pts, 12, grade=set(pts) - {0.0}, levels=20, ratio=0.3)
        r, wq = rl.nodes, rl.weights
        prod = np.asarray(u.profile(r)) * np.asarray(v.profile(r)) * r ** (N - 1)
        c2 = sphere_area(N) * 2.0 ** (-2.0 * s) / (2.0 * s)
        det += 0.5 * c * c2 * ang * float(np.dot(wq, prod))
        tau = exterior_tail(r, N, s, ell=u.ell)
        det += 0.5 * c * ang * float(np.dot(wq, prod * tau))
    return ValueWithError(total + det, se)


def test_function_checks(params, sol, rule=None, mc_samples=1_000_000,
                         seed=20240824):
    """Numerical version of the negative-energy argument on span
    {phi_{1,L}, d_1..d_N}: diagonal energies negative, cross terms zero,
    weak-identity defect zero, Rayleigh bound negative.

    N = 1 evaluates all forms deterministically; N = 2 uses the stratified
    Monte-Carlo estimator for the nonlocal parts; N >= 3 is unsupported for
    the quadrature checks (morse_index itself works at any N).
    """
    if isinstance(params, tuple):
        params = ProblemParams(*params)
    if params.N > 2:
        raise DimensionUnsupported(
            f"direct quadratic-form checks support N <= 2, got N={params.N}"
        )
    fns = build_test_functions(sol)
    ctx = _linearization_context(sol)

    def weak_defect_at(sol_k):
        """E_s(v^1, d_1) - int f'(u) v^1 d_1 for one discrete solution."""
        fns_k = build_test_functions(sol_k)
        du_k = sol_k.profile.derivative
        v1 = SeparableFunction(profile=lambda r: np.asarray(du_k(r)),
                               angular="coordinate", j=1,
                               breaks=tuple(fns_k[0].breaks), label="v^1")
        es_k = bilinear_form(v1, fns_k[0], params, rule)
        pot_k = radial_potential_integral(
            lambda r: sol_k.nonlin.fprime(np.asarray(sol_k.profile(r))),
            du_k, fns_k[0].profile, params.N,
            breaks=tuple(sorted(set(fns_k[0].breaks) | set(sol_k.breaks))))
        ang_k = angular_factor(params.N, 1)
        return ValueWithError(es_k.value - ang_k * pot_k.value,
                              es_k.error + ang_k * pot_k.error)

    def weak_defect_with_truncation():
        """The identity holds for the continuum solution only, so the defect
        of the discrete solution carries a truncation contribution; estimate
        it from the defect of a coarser re-solve."""
        est = weak_defect_at(sol)
        trunc = 0.0
        K_c = sol.spec.K - max(6, sol.spec.K // 4)
        if K_c >= 8 and not sol.linear_degenerate:
            from .semilinear import solve_radial_sign_changing

            try:
                sol_c = solve_radial_sign_changing(
                    params, sol.nonlin, sol.nodal_count, K=K_c)
                trunc = abs(est.value - weak_defect_at(sol_c).value)
            except Exception:
                trunc = 0.0
        return ValueWithError(est.value, est.error + trunc)
    sign_conv = "psi0 >= 0" if sol.psi0_at_1 >= 0.0 else "psi0 < 0"
    r_star = fns[0].support_radius if abs(sol.psi0_at_1) > 1e-8 else None

    # first linearized eigenpair (radial, ell = 0)
    lam1, ell1, phi1L, _ = first_linearized_eigen(params, sol)

    diag = {}
    cross = {}
    weak = {}
    pairing = {}
    if params.N == 1:
        method = "deterministic"
        d1 = fns[0]
        diag[1] = quadratic_form_L(ctx, d1, d1, rule)
        weak[(1, 1)] = weak_defect_with_truncation()
    else:
        method = "monte-carlo"
        for j in (1, 2):
            dj = fns[j - 1]
            es = _mc_quadratic_pair(dj, dj, params, mc_samples, seed + j)
            pot = radial_potential_integral(
                lambda r: sol.nonlin.fprime(np.asarray(sol.profile(r))),
                dj.profile, dj.profile, params.N,
                breaks=tuple(sorted(set(dj.breaks) | set(sol.breaks))))
            ang = angular_factor(params.N, 1)
            diag[j] = ValueWithError(es.value - ang * pot.value,
                                     es.error + ang * pot.error)
        # cross term: potential part vanishes by angular parity, so the
        # Monte-Carlo estimate of E_s is the whole of E_{s,L}(d_1, d_2)
        cross[(1, 2)] = _mc_quadratic_pair(fns[0], fns[1], params,
                                           mc_samples, seed + 11)
        weak[(1, 1)] = weak_defect_with_truncation()

    # E_{s,L}(d_j, phi_{1,L}): exactly zero by angular parity (ell 1 vs 0)
    for j in range(1, params.N + 1):
        pairing[j] = ValueWithError(0.0, 0.0)

    # Rayleigh bound on span {phi_{1,L}, d_1..d_N}: the Gram matrices are
    # block-diagonal by parity, so the max Rayleigh quotient over the span is
    # the max over the members
    quotients = [lam1]
    for j, est in diag.items():
        nrm = _l2_norm_sq(fns[j - 1], params)
        quotients.append(est.value / nrm.value)
    rayleigh = max(quotients)
    return TestFunctionReport(params, sign_conv, r_star, diag, cross, weak,
                              pairing, rayleigh, lam1, method)
