import cmath
import math

import numpy as np
import pytest

from lamelab import (
    LameParams,
    SolveConfig,
    SourceDivisor,
    TorusPoint,
    classify_projective,
    find_type2,
    hermite_halphen,
    local_monodromy,
    make_context,
    monodromy_pair,
    period_integral,
    point_on_Xn,
    potential,
    solve_system,
    transport,
    u_density,
    unitarizable,
    weierstrass,
)
from lamelab.curves import hermite_halphen_logderiv
from lamelab.errors import (
    CriticalPointOfF,
    HalfPeriodInput,
    NotDiagonalizable,
    PathTooClose,
)
from lamelab.monodromy import (
    MonodromyPair,
    choose_base_point,
    path_with_detours,
    period_crosscheck,
)

GENERIC_POINTS = [(0.13, 0.21), (0.54, 0.39), (0.82, 0.70)]


@pytest.fixture(scope="module")
def ctx():
    return make_context(0.22 + 1.31j)


@pytest.fixture(scope="module")
def L111(ctx):
    return SourceDivisor.from_rs(GENERIC_POINTS, [1, 1, 1], ctx)


@pytest.fixture(scope="module")
def roots_l3(ctx, L111):
    return solve_system(L111, ctx, SolveConfig(seed=1, max_starts=900))


def lame_divisor(ctx):
    return SourceDivisor.from_rs([(0.0, 0.0)], [2], ctx)


def test_potential_elliptic_when_admissible(ctx, L111, roots_l3):
    params = roots_l3[0]
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = rng.uniform(0.1, 0.9) + rng.uniform(0.1, 0.9) * ctx.tau
        try:
            v0 = potential(z, L111, params, ctx)
            v1 = potential(z + 1, L111, params, ctx)
            v2 = potential(z + ctx.tau, L111, params, ctx)
        except Exception:
            continue
        assert abs(v1 - v0) < 1e-9 * (1 + abs(v0))
        assert abs(v2 - v0) < 1e-9 * (1 + abs(v0))


def test_potential_classical_lame_shape(ctx):
    L = lame_divisor(ctx)
    params = LameParams(A=[0.0], B=1.7 - 0.2j)
    z = 0.31 + 0.41 * ctx.tau
    expect = 2.0 * weierstrass(z, ctx)[0] + params.B
    assert abs(potential(z, L, params, ctx) - expect) < 1e-12 * (1 + abs(expect))


def test_potential_leading_singularity(ctx, L111, roots_l3):
    # Laurent coefficient of (z - p_i)^(-2) is eta_i (eta_i + 1) = 3/4
    params = roots_l3[0]
    p = L111.points[0].z
    fits = []
    for t in (4e-3, 2e-3):
        d = t * cmath.exp(0.37j)
        fits.append(potential(p + d, L111, params, ctx) * d * d)
    assert abs(fits[1] - 0.75) < 5e-2
    assert abs(fits[1] - 0.75) < abs(fits[0] - 0.75) + 1e-3


def test_transport_contractible_loop(ctx, L111, roots_l3):
    z0 = choose_base_point(L111, ctx)
    r = 0.035
    loop = [z0 + r * cmath.exp(2j * math.pi * k / 24) for k in range(25)]
    M = transport(loop, L111, roots_l3[0], ctx)
    assert np.max(np.abs(M - np.eye(2))) < 1e-8


def test_transport_composition(ctx, L111, roots_l3):
    z0 = choose_base_point(L111, ctx)
    mid = z0 + 0.21 + 0.07 * ctx.tau
    end = z0 + 0.05 + 0.23 * ctx.tau
    M_full = transport([z0, mid, end], L111, roots_l3[0], ctx)
    M1 = transport([z0, mid], L111, roots_l3[0], ctx)
    M2 = transport([mid, end], L111, roots_l3[0], ctx)
    assert np.max(np.abs(M_full - M2 @ M1)) < 1e-8 * (1 + np.max(np.abs(M_full)))


def test_transport_wronskian(ctx, L111, roots_l3):
    z0 = choose_base_point(L111, ctx)
    M = transport([z0, z0 + 0.4 + 0.2 * ctx.tau], L111, roots_l3[0], ctx)
    assert abs(np.linalg.det(M) - 1.0) < 1e-9 * abs(np.linalg.det(M))


def test_transport_rejects_close_paths(ctx, L111, roots_l3):
    p = L111.points[0].z
    with pytest.raises(PathTooClose):
        transport([p - 0.002, p + 0.002], L111, roots_l3[0], ctx)


def test_monodromy_requires_admissible(ctx, L111):
    with pytest.raises(ValueError):
        monodromy_pair(L111, LameParams(A=[1.0, 0.0, 0.0], B=0.0), ctx)


def test_commutator_and_class_all_roots(ctx, L111, roots_l3):
    for params in roots_l3:
        mp = monodromy_pair(L111, params, ctx)
        assert mp.commutator_defect(L111.ell) < 1e-6
        assert mp.anticommutator_defect() < 1e-6
        assert classify_projective(mp) == "K4"


def test_trace_invariance_under_base_change(ctx, L111, roots_l3):
    params = roots_l3[1]
    z0 = choose_base_point(L111, ctx)
    mp1 = monodromy_pair(L111, params, ctx, z0=z0)
    mp2 = monodromy_pair(L111, params, ctx, z0=z0 + 0.13 + 0.11 * ctx.tau)
    for a, b in ((mp1.S1, mp2.S1), (mp1.S2, mp2.S2)):
        assert abs(np.trace(a) - np.trace(b)) < 1e-6 * (1 + np.linalg.norm(a))


def test_path_independence_of_detour_radius(ctx, L111, roots_l3):
    params = roots_l3[0]
    z0 = choose_base_point(L111, ctx)
    p1 = path_with_detours(z0, 1.0 + 0j, L111, ctx, radius=0.01)
    p2 = path_with_detours(z0, 1.0 + 0j, L111, ctx, radius=0.02)
    M1 = transport(p1, L111, params, ctx, clearance=4e-3)
    M2 = transport(p2, L111, params, ctx, clearance=4e-3)
    assert np.max(np.abs(M1 - M2)) < 1e-7 * (1 + np.max(np.abs(M1)))


def test_local_monodromy_log_free_certificate(ctx, L111, roots_l3):
    params = roots_l3[0]
    M = local_monodromy(L111.points[0], L111, params, ctx)
    assert np.max(np.abs(M + np.eye(2))) < 1e-5


def test_local_monodromy_even_weight_identity(ctx):
    # classical Lame l = 2 is log-free for every B: +I around the source
    L = lame_divisor(ctx)
    params = LameParams(A=[0.0], B=0.83 + 0.41j)
    M = local_monodromy(L.points[0], L, params, ctx)
    assert np.max(np.abs(M - np.eye(2))) < 1e-5


def test_local_monodromy_detects_log_terms(ctx, L111, roots_l3):
    # perturbing a root off the variety brings back the logarithm
    params = roots_l3[0]
    bad = LameParams(A=[params.A[0] + 0.01, params.A[1] - 0.01, params.A[2]],
                     B=params.B)
    M = local_monodromy(L111.points[0], L111, bad, ctx)
    defect = np.max(np.abs(M + np.eye(2)))
    assert defect > 1e-3


def test_classify_unipotent_pair():
    S1 = np.array([[1.0, 1.3], [0.0, 1.0]], dtype=complex)
    S2 = np.array([[1.0, -0.4], [0.0, 1.0]], dtype=complex)
    mp = MonodromyPair(S1=S1, S2=S2, base=0.0, residual=0.0)
    assert classify_projective(mp) == "AbelianUnipotent"
    with pytest.raises(NotDiagonalizable):
        unitarizable(mp)


def test_lame_monodromy_diagonal_and_eigenvector(ctx):
    # w_a spans an eigenvector of S_1; its initial data must align
    L = lame_divisor(ctx)
    pt = point_on_Xn(1, 1.9 + 0.3j, ctx)
    params = LameParams(A=[0.0], B=pt.B)
    mp = monodromy_pair(L, params, ctx)
    assert classify_projective(mp) == "AbelianDiagonal"
    z0 = mp.base
    w = hermite_halphen(pt, z0, ctx)
    wp_ = w * hermite_halphen_logderiv(pt, z0, ctx)
    v = np.array([w, wp_])
    Sv = mp.S1 @ v
    cosang = abs(np.vdot(v, Sv)) / (np.linalg.norm(v) * np.linalg.norm(Sv))
    assert 1.0 - cosang < 1e-5


def test_unitarizable_iff_critical_point():
    ctx_rho = make_context(cmath.exp(1j * math.pi / 3))
    a = TorusPoint.from_rs(1 / 3, 1 / 3, ctx_rho)
    B = weierstrass(a.z, ctx_rho)[0]
    L = lame_divisor(ctx_rho)
    mp = monodromy_pair(L, LameParams(A=[0.0], B=B), ctx_rho)
    assert unitarizable(mp)
    ctx_rect = make_context(1.2j)
    ag = TorusPoint.from_rs(0.23, 0.31, ctx_rect)
    Bg = weierstrass(ag.z, ctx_rect)[0]
    mpg = monodromy_pair(lame_divisor(ctx_rect), LameParams(A=[0.0], B=Bg), ctx_rect)
    assert not unitarizable(mpg)


def test_unitarizable_matches_green_defect_on_X2():
    # type-II equivalence: unitary monodromy <-> sum grad G(a_i) = 0
    ctx2 = make_context(0.5 + 2.2j)
    sols = find_type2(2, ctx2, grid=72)
    assert sols
    L = SourceDivisor.from_rs([(0.0, 0.0)], [4], ctx2)
    for t in sols:
        mp = monodromy_pair(L, LameParams(A=[0.0], B=t.a.B * 1.0), ctx2)
        assert t.green_defect < 1e-6
        assert unitarizable(mp)
    # a generic non-solution B on the same torus is not unitarizable
    pt = point_on_Xn(2, t.a.B + 2.3 + 1.1j, ctx2)
    mp = monodromy_pair(L, LameParams(A=[0.0], B=pt.B), ctx2)
    assert not unitarizable(mp)


def test_period_integral_critical_point_imaginary():
    ctx_rho = make_context(cmath.exp(1j * math.pi / 3))
    a = (1 + ctx_rho.tau) / 3
    for i in (1, 2):
        assert abs(period_integral(a, i, ctx_rho).real) < 1e-8


def test_period_integral_half_period_guard(ctx):
    with pytest.raises(HalfPeriodInput):
        period_integral(0.5, 1, ctx)


def test_period_crosscheck_quadrature(ctx):
    a = 0.31 + 0.17 * ctx.tau
    for i in (1, 2):
        rep = period_crosscheck(a, i, ctx)
        assert rep["defect_mod_2pi"] < 1e-6
        assert rep["defect_mod_4pi"] < 1e-6


def test_period_lattice_combination(ctx):
    # (omega2 F1 - omega1 F2) / (4 pi i) = -a modulo the lattice
    from lamelab.elliptic import lattice_distance

    a = 0.27 + 0.63 * ctx.tau
    F1 = period_integral(a, 1, ctx)
    F2 = period_integral(a, 2, ctx)
    v = (ctx.tau * F1 - F2) / (4j * math.pi)
    assert lattice_distance(v + a, ctx) < 1e-8


def test_u_density_basics():
    assert u_density(0.0, 1.0) == pytest.approx(8 * math.pi)
    with pytest.raises(CriticalPointOfF):
        u_density(1.0, 0.0)


def test_u_density_mobius_invariance(rng):
    for _ in range(10):
        f = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        fp = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if abs(fp) < 0.1:
            continue
        p = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        q = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        nrm = math.sqrt(abs(p) ** 2 + abs(q) ** 2)
        p, q = p / nrm, q / nrm
        Mf = (p * f - q.conjugate()) / (q * f + p.conjugate())
        Mfp = fp / (q * f + p.conjugate()) ** 2
        assert abs(u_density(f, fp) - u_density(Mf, Mfp)) < 1e-10


def test_u_density_scaling_family(rng):
    # e^lambda f keeps u finite for finite lambda
    f, fp = 0.4 + 0.1j, 0.9 - 0.3j
    for lam in (-3.0, -1.0, 1.0, 3.0):
        v = u_density(math.exp(lam) * f, math.exp(lam) * fp)
        assert np.isfinite(v)
