"""Weierstrass/theta kernel on the normalized torus C/(Z + Z*tau).

Everything downstream evaluates through the odd theta function
``theta1(z; tau)``: the quasi-periods, zeta, sigma and wp come from
logarithmic derivatives of its q-series, which converges geometrically
for |q| < 1.  Points are reduced to lattice coordinates r, s in [0, 1)
before series evaluation and the quasi-period corrections are reapplied
exactly afterwards.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, PoleProximity

TWO_PI_I = 2j * math.pi

#: refuse evaluation closer to a lattice point than this (lattice units)
POLE_CLEARANCE = 1e-3


@dataclass(frozen=True)
class LatticeContext:
    """Immutable per-torus cache: tau, q, invariants, quasi-periods.

    ``series_terms`` is the number of theta terms kept; the default makes
    |q|**series_terms**2 < 1e-18 so truncation sits far below ``tol``.
    """

    tau: complex
    q: complex
    g2: complex
    g3: complex
    eta1: complex
    eta2: complex
    series_terms: int
    tol: float
    # cached theta data: frequencies (2n+1)*pi and coefficients 2(-1)^n q^{(n+1/2)^2}
    _freq: np.ndarray = field(repr=False, compare=False, default=None)
    _coef: np.ndarray = field(repr=False, compare=False, default=None)
    theta1prime0: complex = field(repr=False, compare=False, default=0j)

    @property
    def omega1(self) -> complex:
        return 1.0 + 0j

    @property
    def omega2(self) -> complex:
        return self.tau

    @property
    def omega3(self) -> complex:
        return 1.0 + self.tau


def default_series_terms(tau: complex) -> int:
    # |q|^(N^2 - 2.5 N) < 1e-18: margin for arguments up to s ~ 1.2 used
    # in the eta2 translation defect
    b = tau.imag
    c = 18.0 * math.log(10.0) / (math.pi * b)
    return max(8, int(math.ceil(0.5 * (2.5 + math.sqrt(6.25 + 4.0 * c)))) + 3)


def make_context(tau: complex, series_terms: int | None = None, tol: float = 1e-9) -> LatticeContext:
    """Build a LatticeContext for the torus with periods (1, tau), Im tau > 0."""
    tau = complex(tau)
    if not tau.imag > 0:
        raise ValueError(f"Im(tau) must be positive, got {tau}")
    if series_terms is None:
        series_terms = default_series_terms(tau)
    q = cmath.exp(1j * math.pi * tau)
    if abs(q) ** (series_terms**2) >= tol:
        raise ValueError("series_terms too small for this tau at the requested tol")
    n = np.arange(series_terms)
    freq = (2 * n + 1) * math.pi
    coef = 2.0 * (-1.0) ** n * q ** ((n + 0.5) ** 2)
    t0, t1, t2, t3 = _theta_block_arrays(0.0 + 0j, freq, coef)
    eta1 = -t3 / (3.0 * t1)
    # eta2 as the translation defect zeta(z0 + tau) - zeta(z0) at a generic
    # well-conditioned point (not via Legendre), so the Legendre residual
    # stays a genuine consistency diagnostic of the series
    z0 = 0.43 + 0.17 * tau
    a0, a1, _, _ = _theta_block_arrays(z0, freq, coef)
    b0, b1, _, _ = _theta_block_arrays(z0 + tau, freq, coef)
    eta2 = eta1 * tau + b1 / b0 - a1 / a0
    g2, g3 = eisenstein(tau)
    ctx = LatticeContext(
        tau=tau, q=q, g2=g2, g3=g3, eta1=eta1, eta2=eta2,
        series_terms=series_terms, tol=tol,
        _freq=freq, _coef=coef, theta1prime0=t1,
    )
    legendre = abs(eta1 * tau - eta2 - TWO_PI_I)
    if legendre >= tol:
        raise ValueError(f"Legendre residual {legendre:.3e} exceeds tol; increase series_terms")
    return ctx


def _theta_block_arrays(z, freq, coef):
    """theta1 and its first three z-derivatives (z may be a numpy array)."""
    zz = np.asarray(z, dtype=complex)
    ph = np.multiply.outer(zz, freq)
    s, c = np.sin(ph), np.cos(ph)
    t0 = s @ coef
    t1 = c @ (coef * freq)
    t2 = -(s @ (coef * freq**2))
    t3 = -(c @ (coef * freq**3))
    if zz.ndim == 0:
        return complex(t0), complex(t1), complex(t2), complex(t3)
    return t0, t1, t2, t3


def theta1(z: complex, ctx: LatticeContext, order: int = 0):
    """Truncated series value of theta1(z; tau) or its z-derivative.

    ``order`` in 0..3 selects the derivative.  Entire in z, so no
    argument restrictions; for large |Im z| prefer reducing through the
    torus functions below, which handle quasi-periodicity exactly.
    """
    block = _theta_block_arrays(z, ctx._freq, ctx._coef)
    return block[order]


@dataclass(frozen=True)
class TorusPoint:
    """A point z = r + s*tau carried in both coordinate systems."""

    r: float
    s: float
    z: complex

    @staticmethod
    def from_rs(r: float, s: float, ctx: LatticeContext) -> "TorusPoint":
        return TorusPoint(float(r), float(s), complex(r) + complex(s) * ctx.tau)

    @staticmethod
    def from_z(z: complex, ctx: LatticeContext) -> "TorusPoint":
        r, s = rs_coordinates(z, ctx)
        return TorusPoint(r, s, complex(z))

    def canonical(self, ctx: LatticeContext) -> "TorusPoint":
        r = self.r - math.floor(self.r)
        s = self.s - math.floor(self.s)
        return TorusPoint.from_rs(r, s, ctx)

    def negate(self, ctx: LatticeContext) -> "TorusPoint":
        return TorusPoint.from_z(-self.z, ctx).canonical(ctx)


def rs_coordinates(z: complex, ctx: LatticeContext) -> tuple[float, float]:
    s = z.imag / ctx.tau.imag
    r = z.real - s * ctx.tau.real
    return r, s


def lattice_distance(z: complex, ctx: LatticeContext) -> float:
    """Distance from z to the lattice Z + Z*tau."""
    r, s = rs_coordinates(z, ctx)
    r -= math.floor(r)
    s -= math.floor(s)
    best = math.inf
    for dr in (0.0, 1.0):
        for ds in (0.0, 1.0):
            best = min(best, abs((r - dr) + (s - ds) * ctx.tau))
    return best


def _reduce(z: complex, ctx: LatticeContext):
    """Split z = z0 + m + n*tau with the coordinates of z0 in [0, 1)."""
    r, s = rs_coordinates(z, ctx)
    m, n = math.floor(r), math.floor(s)
    z0 = (r - m) + (s - n) * ctx.tau
    return z0, m, n


def _require_clear(z: complex, ctx: LatticeContext, clearance: float = POLE_CLEARANCE):
    d = lattice_distance(z, ctx)
    if d < clearance:
        raise PoleProximity(f"z={z} is {d:.2e} from the lattice (clearance {clearance:g})")


def zeta_w(z: complex, ctx: LatticeContext) -> complex:
    """Weierstrass zeta via eta1*z + theta1'(z)/theta1(z), reduced exactly."""
    _require_clear(z, ctx)
    z0, m, n = _reduce(z, ctx)
    t0, t1, _, _ = _theta_block_arrays(z0, ctx._freq, ctx._coef)
    return ctx.eta1 * z0 + t1 / t0 + m * ctx.eta1 + n * ctx.eta2


def sigma_w(z: complex, ctx: LatticeContext) -> complex:
    """Weierstrass sigma = exp(eta1 z^2/2) theta1(z)/theta1'(0)."""
    z0, m, n = _reduce(z, ctx)
    t0 = _theta_block_arrays(z0, ctx._freq, ctx._coef)[0]
    base = cmath.exp(ctx.eta1 * z0 * z0 / 2.0) * t0 / ctx.theta1prime0
    if m == 0 and n == 0:
        return base
    eta = m * ctx.eta1 + n * ctx.eta2
    omega = m + n * ctx.tau
    sign = (-1.0) ** (m + n + m * n)
    return sign * cmath.exp(eta * (z0 + omega / 2.0)) * base


def weierstrass(z: complex, ctx: LatticeContext) -> tuple[complex, complex]:
    """(wp(z), wp'(z)) through logarithmic derivatives of theta1."""
    _require_clear(z, ctx)
    z0, _, _ = _reduce(z, ctx)
    t0, t1, t2, t3 = _theta_block_arrays(z0, ctx._freq, ctx._coef)
    u = t1 / t0
    du = t2 / t0 - u * u
    ddu = t3 / t0 - 3.0 * u * du - u**3
    return -ctx.eta1 - du, -ddu


def wp(z: complex, ctx: LatticeContext) -> complex:
    return weierstrass(z, ctx)[0]


def wp_prime(z: complex, ctx: LatticeContext) -> complex:
    return weierstrass(z, ctx)[1]


def zeta_many(z: np.ndarray, ctx: LatticeContext) -> np.ndarray:
    """Vectorized zeta over an array of points (no clearance check)."""
    z = np.asarray(z, dtype=complex)
    s = z.imag / ctx.tau.imag
    r = z.real - s * ctx.tau.real
    m, n = np.floor(r), np.floor(s)
    z0 = (r - m) + (s - n) * ctx.tau
    t0, t1, _, _ = _theta_block_arrays(z0, ctx._freq, ctx._coef)
    return ctx.eta1 * z0 + t1 / t0 + m * ctx.eta1 + n * ctx.eta2


def wp_many(z: np.ndarray, ctx: LatticeContext) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (wp, wp') over an array of points (no clearance check)."""
    z = np.asarray(z, dtype=complex)
    s = z.imag / ctx.tau.imag
    r = z.real - s * ctx.tau.real
    z0 = (r - np.floor(r)) + (s - np.floor(s)) * ctx.tau
    t0, t1, t2, t3 = _theta_block_arrays(z0, ctx._freq, ctx._coef)
    u = t1 / t0
    du = t2 / t0 - u * u
    ddu = t3 / t0 - 3.0 * u * du - u**3
    return -ctx.eta1 - du, -ddu


def eisenstein(tau: complex, terms: int | None = None) -> tuple[complex, complex]:
    """g2 = 60*E4(lattice), g3 = 140*E6(lattice) by q-expansion.

    Uses the normalized series 1 + 240 sum sigma3(n) Q^n and
    1 - 504 sum sigma5(n) Q^n with Q = exp(2 pi i tau), rescaled to the
    lattice sums:  g2 = (4 pi^4/3) E4,  g3 = (8 pi^6/27) E6.
    """
    tau = complex(tau)
    if not tau.imag > 0:
        raise ValueError("Im(tau) must be positive")
    if terms is None:
        terms = int(math.ceil(18.0 * math.log(10.0) / (2.0 * math.pi * tau.imag))) + 4
    Q = cmath.exp(TWO_PI_I * tau)
    sig3 = np.zeros(terms + 1)
    sig5 = np.zeros(terms + 1)
    for d in range(1, terms + 1):
        mult = np.arange(d, terms + 1, d)
        sig3[mult] += float(d) ** 3
        sig5[mult] += float(d) ** 5
    Qn = Q ** np.arange(terms + 1)
    e4 = 1.0 + 240.0 * np.sum(sig3[1:] * Qn[1:])
    e6 = 1.0 - 504.0 * np.sum(sig5[1:] * Qn[1:])
    g2 = (4.0 * math.pi**4 / 3.0) * e4
    g3 = (8.0 * math.pi**6 / 27.0) * e6
    return complex(g2), complex(g3)


def half_periods(ctx: LatticeContext) -> tuple[complex, complex, complex]:
    return 0.5, ctx.tau / 2.0, (1.0 + ctx.tau) / 2.0


def wp_inverse(x: complex, ctx: LatticeContext, sign_hint: int = +1,
               seeds: int = 9, tol: float = 1e-11) -> TorusPoint:
    """Solve wp(a) = x; the branch a / -a follows ``sign_hint``.

    With sign_hint = +1 the returned point has wp'(a) matching the
    principal square root of 4x^3 - g2 x - g3; -1 selects the mirror.
    Newton from the best cells of a coarse seed grid, with step damping.
    """
    x = complex(x)
    tau = ctx.tau
    grid = np.linspace(0.07, 0.93, seeds)
    cand = np.array([r + s * tau for r in grid for s in grid])
    vals, _ = wp_many(cand, ctx)
    order = np.argsort(np.abs(vals - x))
    a_found = None
    for idx in order[:6]:
        a = complex(cand[idx])
        ok = _newton_wp(a, x, ctx, tol)
        if ok is not None:
            a_found = ok
            break
    if a_found is None:
        raise NoConvergence(f"wp_inverse failed for x={x}")
    a = a_found
    w = cmath.sqrt(4.0 * x**3 - ctx.g2 * x - ctx.g3)
    if abs(w) < 1e-5 * (1.0 + abs(x)) ** 1.5:
        # branch value: the preimage is a half-period, where plain Newton
        # is only sqrt-accurate; polish on wp'(a) = 0 instead
        for _ in range(40):
            p, pp = weierstrass(a, ctx)
            if abs(pp) < 1e-13 * (1.0 + abs(p)) ** 1.5:
                break
            a -= pp / (6.0 * p * p - ctx.g2 / 2.0)
    else:
        # branch selection on wp'
        _, pp = weierstrass(a, ctx)
        plus_branch = abs(pp - w) <= abs(pp + w)
        if (sign_hint >= 0) != plus_branch:
            a = -a
    return TorusPoint.from_z(a, ctx).canonical(ctx)


def _newton_wp(a: complex, x: complex, ctx: LatticeContext, tol: float):
    scale = 1.0 + abs(x)
    for _ in range(60):
        if lattice_distance(a, ctx) < POLE_CLEARANCE / 4.0:
            return None
        p, pp = weierstrass(a, ctx)
        f = p - x
        if abs(f) < tol * scale:
            return a
        if abs(pp) < 1e-13 * (1.0 + abs(p)) ** 1.5:
            # critical point of wp: nudge off and keep going
            a += 0.01 * cmath.exp(2j * math.pi * abs(f))
            continue
        step = f / pp
        lam, base = 1.0, abs(f)
        for _ in range(30):
            an = a - lam * step
            if lattice_distance(an, ctx) >= POLE_CLEARANCE / 4.0:
                pn = weierstrass(an, ctx)[0]
                if abs(pn - x) < base:
                    break
            lam *= 0.5
        else:
            return None
        a = an
    p, _ = weierstrass(a, ctx)
    return a if abs(p - x) < tol * scale else None


def wp_regular_coefficients(ctx: LatticeContext, k_max: int) -> np.ndarray:
    """Taylor coefficients of wp(w) - w^-2 around 0 up to order k_max.

    Recursion on c_k in wp = w^-2 + sum_{k>=2} c_k w^{2k-2}:
    c_2 = g2/20, c_3 = g3/28, c_k = 3/((2k+1)(k-3)) sum c_m c_{k-m}.
    """
    out = np.zeros(k_max + 1, dtype=complex)
    kk = k_max // 2 + 2
    c = np.zeros(kk + 1, dtype=complex)
    if kk >= 2:
        c[2] = ctx.g2 / 20.0
    if kk >= 3:
        c[3] = ctx.g3 / 28.0
    for k in range(4, kk + 1):
        c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * sum(c[m] * c[k - m] for m in range(2, k - 1))
    for k in range(2, kk + 1):
        if 2 * k - 2 <= k_max:
            out[2 * k - 2] = c[k]
    return out


def taylor_data(kind: str, base: complex, shift: complex, k_max: int,
                ctx: LatticeContext) -> np.ndarray:
    """Taylor coefficients at z = base of zeta(z - shift) or wp(z - shift).

    When base - shift lies on the lattice the pole is removed first and
    the coefficients of the regular part are returned (so the orders
    below 3 vanish for zeta and below 2 for wp).
    """
    if kind not in ("zeta", "wp"):
        raise ValueError(f"kind must be 'zeta' or 'wp', not {kind!r}")
    d = complex(base) - complex(shift)
    if lattice_distance(d, ctx) < POLE_CLEARANCE:
        if lattice_distance(d, ctx) > ctx.tol * 10:
            raise PoleProximity(f"expansion point {d} too close to the shifted pole")
        preg = wp_regular_coefficients(ctx, k_max + 1)
        if kind == "wp":
            return preg[: k_max + 1]
        out = np.zeros(k_max + 1, dtype=complex)
        for k in range(1, k_max + 1):
            out[k] = -preg[k - 1] / k
        return out
    # regular case: wp Taylor row from p'' = 6 p^2 - g2/2
    p0, p1 = weierstrass(d, ctx)
    pcoef = np.zeros(k_max + 2, dtype=complex)
    pcoef[0], pcoef[1] = p0, p1
    for k in range(k_max):
        conv = sum(pcoef[j] * pcoef[k - j] for j in range(k + 1))
        rhs = 6.0 * conv - (ctx.g2 / 2.0 if k == 0 else 0.0)
        pcoef[k + 2] = rhs / ((k + 1) * (k + 2))
    if kind == "wp":
        return pcoef[: k_max + 1]
    zcoef = np.zeros(k_max + 1, dtype=complex)
    zcoef[0] = zeta_w(d, ctx)
    for k in range(1, k_max + 1):
        zcoef[k] = -pcoef[k - 1] / k
    return zcoef


@dataclass
class IdentityReport:
    """Max residuals of the three closed-form identities used as oracles."""

    addition_square: float      # z2^2 = wp(a1+a2) + wp(a1) + wp(a2)
    cubic_three_point: float    # z3^3 = 3(wp(s)+sum wp(ai)) z3 + (wp'(s)-sum wp'(ai))
    zeta_sum_square: float      # (zeta(a)+zeta(b)+zeta(c))^2 = wp(a)+wp(b)+wp(c), a+b+c=0
    samples: int

    def max_residual(self) -> float:
        return max(self.addition_square, self.cubic_three_point, self.zeta_sum_square)


def _random_clear_point(rng, ctx, margin=0.06):
    for _ in range(200):
        r = rng.uniform(margin, 1.0 - margin)
        s = rng.uniform(margin, 1.0 - margin)
        z = r + s * ctx.tau
        if lattice_distance(z, ctx) > 3 * POLE_CLEARANCE:
            return z
    raise NoConvergence("could not sample a pole-clear point")


def check_identities(ctx: LatticeContext, samples: int = 25, seed: int = 0) -> IdentityReport:
    """Evaluate both sides of the three kernel identities at random points.

    Degenerate draws (colliding points, sums on the lattice) are
    resampled rather than reported as failures.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst2 = worst3 = worstz = 0.0
    done2 = done3 = donez = 0
    guard = 0
    while (done2 < samples or done3 < samples or donez < samples) and guard < 80 * samples:
        guard += 1
        a1 = _random_clear_point(rng, ctx)
        a2 = _random_clear_point(rng, ctx)
        a3 = _random_clear_point(rng, ctx)
        if done2 < samples:
            if lattice_distance(a1 - a2, ctx) > 3 * POLE_CLEARANCE and \
               lattice_distance(a1 + a2, ctx) > 3 * POLE_CLEARANCE:
                z2 = zeta_w(a1 + a2, ctx) - zeta_w(a1, ctx) - zeta_w(a2, ctx)
                rhs = wp(a1 + a2, ctx) + wp(a1, ctx) + wp(a2, ctx)
                worst2 = max(worst2, abs(z2 * z2 - rhs) / (1.0 + abs(rhs)))
                done2 += 1
        if done3 < samples:
            sig = a1 + a2 + a3
            if lattice_distance(sig, ctx) > 3 * POLE_CLEARANCE:
                z3 = zeta_w(sig, ctx) - zeta_w(a1, ctx) - zeta_w(a2, ctx) - zeta_w(a3, ctx)
                psum = wp(a1, ctx) + wp(a2, ctx) + wp(a3, ctx)
                dsum = wp_prime(a1, ctx) + wp_prime(a2, ctx) + wp_prime(a3, ctx)
                lhs = z3**3
                rhs = 3.0 * (wp(sig, ctx) + psum) * z3 + (wp_prime(sig, ctx) - dsum)
                worst3 = max(worst3, abs(lhs - rhs) / (1.0 + abs(rhs)))
                done3 += 1
        if donez < samples:
            c = -a1 - a2
            if lattice_distance(c, ctx) > 3 * POLE_CLEARANCE:
                lhs = (zeta_w(a1, ctx) + zeta_w(a2, ctx) + zeta_w(c, ctx)) ** 2
                rhs = wp(a1, ctx) + wp(a2, ctx) + wp(c, ctx)
                worstz = max(worstz, abs(lhs - rhs) / (1.0 + abs(rhs)))
                donez += 1
    if min(done2, done3, donez) < samples:
        raise NoConvergence("identity sampler kept hitting degenerate configurations")
    return IdentityReport(worst2, worst3, worstz, samples)
