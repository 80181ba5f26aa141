"""Lame spectral recursion, Liouville curve points, and pre-modular forms.

For the integral Lame operator with potential n(n+1) wp + B, the product
of the two ansatz solutions is a polynomial X(x) in x = wp whose
coefficients s_k satisfy a linear recursion in B, g2, g3.  Points of the
curve X_n are recovered from the roots of X by inverting wp and fixing a
sign pattern on wp'.  The explicit degree-n(n+1)/2 polynomials W_n for
n <= 4 turn the Hecke function into the pre-modular forms Z_n.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction as Fr

import numpy as np

from .elliptic import (
    POLE_CLEARANCE,
    LatticeContext,
    TorusPoint,
    lattice_distance,
    sigma_w,
    weierstrass,
    wp_inverse,
    wp_many,
    zeta_many,
    zeta_w,
)
from .errors import NoConvergence, NoSignPattern, PoleProximity, RamifiedPoint
from .green import _winding_cells, critical_points, hecke_Z

E2_RS = ((0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5))


def lame_sk_raw(n: int, B: complex, g2: complex, g3: complex) -> list[complex]:
    """s_0..s_n from the linear recursion with explicit invariants.

    s_k is weighted homogeneous of degree k: scaling B -> t^2 B,
    g2 -> t^4 g2, g3 -> t^6 g3 scales s_k by t^(2k).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s: list[complex] = [1.0 + 0j]
    for k in range(1, n + 1):
        sm1 = s[k - 1]
        sm2 = s[k - 2] if k >= 2 else 0.0
        sm3 = s[k - 3] if k >= 3 else 0.0
        m = n - k  # recursion index mu
        num = (4.0 * (m + 1) * B * sm1
               - 0.5 * g2 * (m + 1) * (m + 2) * (2 * m + 3) * sm2
               + g3 * (m + 1) * (m + 2) * (m + 3) * sm3)
        den = 2.0 * k * (2 * m + 1) * (n + m + 1)
        s.append(num / den)
    return s


def lame_sk(n: int, B: complex, ctx: LatticeContext) -> list[complex]:
    """Spectral coefficients s_0..s_n of X(x); s_0 = 1, s_1 = B/(2n-1)."""
    return lame_sk_raw(n, B, ctx.g2, ctx.g3)


def lame_ln_raw(n: int, B: complex, g2: complex, g3: complex) -> complex:
    s = lame_sk_raw(n, B, g2, g3)
    sn, snm1 = s[n], s[n - 1]
    snm2 = s[n - 2] if n >= 2 else 0.0
    return 4.0 * B * sn**2 + 4.0 * g3 * snm2 * sn - g2 * snm1 * sn - g3 * snm1**2


def lame_ln(n: int, B: complex, ctx: LatticeContext) -> complex:
    """Hyperelliptic polynomial l_n(B) = 4B s_n^2 + 4 g3 s_{n-2} s_n
    - g2 s_{n-1} s_n - g3 s_{n-1}^2 (convention s_{-1} = 0)."""
    return lame_ln_raw(n, B, ctx.g2, ctx.g3)


def spectral_poly(n: int, B: complex, ctx: LatticeContext) -> np.ndarray:
    """Coefficients of X(x) = (-1)^n (x^n - s_1 x^{n-1} + ... + (-1)^n s_n),
    highest power first (numpy.roots convention)."""
    s = lame_sk(n, B, ctx)
    return np.array([(-1) ** n * (-1) ** j * s[j] for j in range(n + 1)], dtype=complex)


@dataclass
class XnPoint:
    """A point a = (a_1..a_n) on the Liouville curve X_n."""

    n: int
    a: list            # TorusPoint per entry
    x: list            # wp(a_i)
    y: list            # wp'(a_i)
    B: complex
    residual: float    # max_r |sum y_i x_i^r|, r = 0..n-2

    def sigma(self) -> complex:
        return sum(p.z for p in self.a)

    def negate(self, ctx: LatticeContext) -> "XnPoint":
        return XnPoint(
            n=self.n,
            a=[p.negate(ctx) for p in self.a],
            x=list(self.x),
            y=[-v for v in self.y],
            B=self.B,
            residual=self.residual,
        )

    def verify(self, ctx: LatticeContext) -> dict:
        """Residuals of the defining invariants, all relative."""
        curve = 0.0
        scale = 1.0
        for r in range(max(self.n - 1, 0)):
            vals = [self.y[i] * self.x[i] ** r for i in range(self.n)]
            scale = max(scale, max(abs(v) for v in vals))
            curve = max(curve, abs(sum(vals)))
        bres = abs(self.B - (2 * self.n - 1) * sum(self.x)) / (1.0 + abs(self.B))
        cubic = max(
            abs(self.y[i] ** 2 - (4 * self.x[i] ** 3 - ctx.g2 * self.x[i] - ctx.g3))
            / (1.0 + abs(self.y[i]) ** 2)
            for i in range(self.n)
        )
        return {"curve": curve / scale, "B": bres, "weierstrass": cubic}

    def to_json(self) -> str:
        return json.dumps({
            "schema": 1,
            "n": self.n,
            "B": [self.B.real, self.B.imag],
            "a": [{"r": p.r, "s": p.s} for p in self.a],
            "x": [[v.real, v.imag] for v in self.x],
            "y": [[v.real, v.imag] for v in self.y],
            "residual": self.residual,
        }, indent=2)


def point_on_Xn(n: int, B: complex, ctx: LatticeContext,
                ramified_tol: float = 1e-9, pattern_tol: float = 1e-8) -> XnPoint:
    """Recover a point of X_n above B: roots of X(x), wp-inversion, then
    exhaustive sign search over wp' to satisfy sum y_i x_i^r = 0.

    Raises RamifiedPoint on the branch locus l_n(B) ~ 0 (where a = -a and
    the sign structure degenerates) and NoSignPattern if no assignment
    meets the tolerance.  The global sign is fixed so the first entry of
    the sign vector is +; the mirror point is ``negate()``.
    """
    B = complex(B)
    ln = lame_ln(n, B, ctx)
    ln_scale = 1.0 + abs(B) ** (2 * n + 1)
    if abs(ln) < ramified_tol * ln_scale:
        raise RamifiedPoint(f"l_{n}(B) = {ln:.3e} ~ 0: branch point of Y_{n}")
    xs = np.roots(spectral_poly(n, B, ctx))
    if n > 1:
        sep = min(abs(xs[i] - xs[j]) for i in range(n) for j in range(i + 1, n))
        if sep < 1e-7 * (1.0 + np.max(np.abs(xs))):
            raise RamifiedPoint("spectral polynomial has (nearly) multiple roots")
    pts = [wp_inverse(x, ctx, sign_hint=+1) for x in xs]
    ys = [weierstrass(p.z, ctx)[1] for p in pts]
    xs = [weierstrass(p.z, ctx)[0] for p in pts]
    scale = 1.0
    for r in range(max(n - 1, 0)):
        scale = max(scale, max(abs(ys[i] * xs[i] ** r) for i in range(n)))
    best_eps, best_res = None, math.inf
    for mask in range(2 ** n):
        eps = [1 if not (mask >> i) & 1 else -1 for i in range(n)]
        res = 0.0
        for r in range(max(n - 1, 0)):
            res = max(res, abs(sum(eps[i] * ys[i] * xs[i] ** r for i in range(n))))
        if res < best_res:
            best_res, best_eps = res, eps
    if n > 1 and best_res > pattern_tol * (1.0 + scale):
        raise NoSignPattern(f"best sign-pattern residual {best_res:.3e} exceeds tolerance")
    if best_eps[0] < 0:
        best_eps = [-e for e in best_eps]
    a = [pts[i] if best_eps[i] > 0 else pts[i].negate(ctx) for i in range(n)]
    y = [best_eps[i] * ys[i] for i in range(n)]
    return XnPoint(n=n, a=a, x=list(xs), y=y, B=B, residual=best_res)


def zn_value(a: XnPoint, ctx: LatticeContext) -> complex:
    """z_n(a) = zeta(a_1 + ... + a_n) - sum zeta(a_i); invariant under
    lattice shifts of the individual entries."""
    sig = a.sigma()
    if lattice_distance(sig, ctx) < POLE_CLEARANCE:
        raise PoleProximity("sigma_n(a) is on the lattice")
    return zeta_w(sig, ctx) - sum(zeta_w(p.z, ctx) for p in a.a)


def _wn_coefficients(n: int):
    """Coefficient table of W_n as {(j, dp, ddp): rational}, the
    coefficient of z^j * wp^dp * wp'^ddp, with g2/g3 entering through
    explicit rational multiples."""
    if n == 2:
        return {
            (3, 0, 0, 0, 0): Fr(1),
            (1, 1, 0, 0, 0): Fr(-3),
            (0, 0, 1, 0, 0): Fr(-1),
        }
    if n == 3:
        return {
            (6, 0, 0, 0, 0): Fr(1),
            (4, 1, 0, 0, 0): Fr(-15),
            (3, 0, 1, 0, 0): Fr(-20),
            (2, 0, 0, 1, 0): Fr(27, 4),
            (2, 2, 0, 0, 0): Fr(-45),
            (1, 1, 1, 0, 0): Fr(-12),
            (0, 0, 2, 0, 0): Fr(-5, 4),
        }
    if n == 4:
        return {
            (10, 0, 0, 0, 0): Fr(1),
            (8, 1, 0, 0, 0): Fr(-45),
            (7, 0, 1, 0, 0): Fr(-120),
            (6, 0, 0, 1, 0): Fr(399, 4),
            (6, 2, 0, 0, 0): Fr(-630),
            (5, 1, 1, 0, 0): Fr(-504),
            (4, 3, 0, 0, 0): Fr(-15, 4) * 280,
            (4, 1, 0, 1, 0): Fr(15, 4) * 49,
            (4, 0, 0, 0, 1): Fr(15, 4) * 115,
            (3, 0, 1, 1, 0): Fr(15) * 11,
            (3, 2, 1, 0, 0): Fr(-15) * 24,
            (2, 4, 0, 0, 0): Fr(-9, 4) * 140,
            (2, 2, 0, 1, 0): Fr(9, 4) * 245,
            (2, 1, 0, 0, 1): Fr(-9, 4) * 190,
            (2, 0, 0, 2, 0): Fr(-9, 4) * 21,
            (1, 3, 1, 0, 0): Fr(-40),
            (1, 1, 1, 1, 0): Fr(163),
            (1, 0, 1, 0, 1): Fr(-125),
            (0, 2, 2, 0, 0): Fr(-9, 4),
            (0, 0, 2, 1, 0): Fr(75, 4),
        }
    raise ValueError("explicit W_n is available for n in {2, 3, 4} only")


def Wn_eval(n: int, zval: complex, sigma, ctx: LatticeContext) -> complex:
    """The explicit polynomial W_n(z) with wp, wp' at sigma and g2, g3
    from the context; W_n(z_n(a)) = 0 on X_n."""
    sig = sigma.z if isinstance(sigma, TorusPoint) else complex(sigma)
    if lattice_distance(sig, ctx) < POLE_CLEARANCE:
        raise PoleProximity("sigma on the lattice")
    p, pp = weierstrass(sig, ctx)
    total = 0.0 + 0j
    for (jz, dp, ddp, dg2, dg3), cf in _wn_coefficients(n).items():
        total += complex(cf) * zval**jz * p**dp * pp**ddp * ctx.g2**dg2 * ctx.g3**dg3
    return total


def Wn_monomial_scale(n: int, zval: complex, sigma, ctx: LatticeContext) -> float:
    """Largest monomial magnitude in W_n: reference scale for residuals."""
    sig = sigma.z if isinstance(sigma, TorusPoint) else complex(sigma)
    p, pp = weierstrass(sig, ctx)
    return max(
        abs(complex(cf)) * abs(zval) ** jz * abs(p) ** dp * abs(pp) ** ddp
        * abs(ctx.g2) ** dg2 * abs(ctx.g3) ** dg3
        for (jz, dp, ddp, dg2, dg3), cf in _wn_coefficients(n).items()
    )


def Zn_premodular(n: int, sigma, ctx: LatticeContext) -> complex:
    """Pre-modular form Z_n(sigma) = W_n(Z(sigma)); Z_1 is the Hecke
    function itself."""
    pt = sigma if isinstance(sigma, TorusPoint) else TorusPoint.from_z(complex(sigma), ctx)
    zval = hecke_Z(pt.r, pt.s, ctx)
    if n == 1:
        return zval
    return Wn_eval(n, zval, pt, ctx)


def hermite_halphen(a: XnPoint, z: complex, ctx: LatticeContext) -> complex:
    """Ansatz solution w_a(z) = e^{z sum zeta(a_i)} prod sigma(z - a_i) /
    (sigma(z) sigma(a_i)) of the Lame equation with B = (2n-1) sum wp(a_i)."""
    z = complex(z)
    if lattice_distance(z, ctx) < POLE_CLEARANCE:
        raise PoleProximity("z on the lattice")
    for p in a.a:
        if lattice_distance(z - p.z, ctx) < POLE_CLEARANCE / 10:
            raise PoleProximity("z collides with a zero of the ansatz")
    zsum = sum(zeta_w(p.z, ctx) for p in a.a)
    val = cmath.exp(z * zsum)
    sz = sigma_w(z, ctx)
    for p in a.a:
        val *= sigma_w(z - p.z, ctx) / (sz * sigma_w(p.z, ctx))
    return val


def hermite_halphen_logderiv(a: XnPoint, z: complex, ctx: LatticeContext) -> complex:
    """w_a'(z)/w_a(z) = sum zeta(a_i) + sum zeta(z - a_i) - n zeta(z)."""
    z = complex(z)
    return (sum(zeta_w(p.z, ctx) for p in a.a)
            + sum(zeta_w(z - p.z, ctx) for p in a.a)
            - a.n * zeta_w(z, ctx))


def _is_two_torsion(r: float, s: float, tol: float = 1e-8) -> bool:
    for hr, hs in E2_RS:
        dr = min((r - hr) % 1.0, (hr - r) % 1.0)
        ds = min((s - hs) % 1.0, (hs - s) % 1.0)
        if math.hypot(dr, ds) < tol:
            return True
    return False


def _fiber_over_sigma(n: int, sigma: complex, ctx: LatticeContext,
                      grid: int = 14) -> list[XnPoint]:
    """All points of X_n above sigma under the addition map (n = 2 only).

    Works in the a_1 chart: a_2 = sigma - a_1 and the curve equation
    becomes wp'(a_1) + wp'(sigma - a_1) = 0, an order-6 elliptic equation
    whose zeros pair up under a_1 <-> a_2.
    """
    if n != 2:
        raise ValueError("fiber solver implemented for n = 2")
    tau = ctx.tau
    def h(a):
        return weierstrass(a, ctx)[1] + weierstrass(sigma - a, ctx)[1]
    def hprime(a):
        p1, _ = weierstrass(a, ctx)
        p2, _ = weierstrass(sigma - a, ctx)
        return (6.0 * p1**2 - ctx.g2 / 2.0) - (6.0 * p2**2 - ctx.g2 / 2.0)
    sols: list[complex] = []
    for rr in np.linspace(0.05, 0.95, grid):
        for ss in np.linspace(0.05, 0.95, grid):
            a = rr + ss * tau
            ok = True
            for _ in range(60):
                if (lattice_distance(a, ctx) < POLE_CLEARANCE
                        or lattice_distance(sigma - a, ctx) < POLE_CLEARANCE):
                    ok = False
                    break
                f = h(a)
                if abs(f) < 1e-11:
                    break
                df = hprime(a)
                if abs(df) < 1e-12:
                    ok = False
                    break
                step = f / df
                if abs(step) > 0.45:
                    step *= 0.45 / abs(step)
                a -= step
            else:
                ok = False
            if not ok or abs(h(a)) > 1e-10:
                continue
            # canonicalize, dedup modulo lattice and the swap a <-> sigma - a
            cands = [a, sigma - a]
            dup = False
            for b in sols:
                for c in cands:
                    if lattice_distance(c - b, ctx) < 1e-6:
                        dup = True
            if not dup:
                sols.append(a)
    out = []
    for a1 in sols:
        a2 = sigma - a1
        x = [weierstrass(a1, ctx)[0], weierstrass(a2, ctx)[0]]
        y = [weierstrass(a1, ctx)[1], weierstrass(a2, ctx)[1]]
        res = abs(y[0] + y[1])
        out.append(XnPoint(
            n=2,
            a=[TorusPoint.from_z(a1, ctx), TorusPoint.from_z(a2, ctx)],
            x=x, y=y, B=3.0 * (x[0] + x[1]), residual=res,
        ))
    return out


def _fiber_over_sigma_n3(sigma: complex, ctx: LatticeContext,
                         starts: int = 60, seed: int = 0) -> list[XnPoint]:
    """Fiber points of sigma_3 by multistart Newton on (a_1, a_2) with
    a_3 = sigma - a_1 - a_2; enumeration is best-effort (degree 6)."""
    rng = np.random.default_rng(seed)
    tau = ctx.tau

    def wp_pair(a):
        return weierstrass(a, ctx)

    def equations(a1, a2):
        a3 = sigma - a1 - a2
        xs, ys = zip(*(wp_pair(a) for a in (a1, a2, a3)))
        return (sum(ys), sum(y * x for x, y in zip(xs, ys))), xs, ys

    def clear(a1, a2):
        a3 = sigma - a1 - a2
        return all(lattice_distance(a, ctx) > POLE_CLEARANCE for a in (a1, a2, a3))

    sols = []
    for _ in range(starts):
        a1 = rng.uniform(0.05, 0.95) + rng.uniform(0.05, 0.95) * tau
        a2 = rng.uniform(0.05, 0.95) + rng.uniform(0.05, 0.95) * tau
        ok = False
        for _ in range(70):
            if not clear(a1, a2):
                break
            (f1, f2), xs, ys = equations(a1, a2)
            if abs(f1) + abs(f2) < 1e-11:
                ok = True
                break
            ddp = [6.0 * x * x - ctx.g2 / 2.0 for x in xs]
            # holomorphic Jacobian; the a_3 column enters with a minus sign
            j11 = ddp[0] - ddp[2]
            j12 = ddp[1] - ddp[2]
            j21 = ddp[0] * xs[0] + ys[0] ** 2 - (ddp[2] * xs[2] + ys[2] ** 2)
            j22 = ddp[1] * xs[1] + ys[1] ** 2 - (ddp[2] * xs[2] + ys[2] ** 2)
            det = j11 * j22 - j12 * j21
            if abs(det) < 1e-12:
                break
            d1 = (f1 * j22 - f2 * j12) / det
            d2 = (j11 * f2 - j21 * f1) / det
            step = max(abs(d1), abs(d2))
            if step > 0.4:
                d1, d2 = d1 * 0.4 / step, d2 * 0.4 / step
            a1, a2 = a1 - d1, a2 - d2
        if not ok:
            continue
        trip = [a1, a2, sigma - a1 - a2]
        key = tuple(sorted(
            (round(TorusPoint.from_z(a, ctx).canonical(ctx).r, 6),
             round(TorusPoint.from_z(a, ctx).canonical(ctx).s, 6)) for a in trip))
        if any(k == key for k, _ in sols):
            continue
        xs = [weierstrass(a, ctx)[0] for a in trip]
        ys = [weierstrass(a, ctx)[1] for a in trip]
        res = max(abs(sum(ys)), abs(sum(y * x for x, y in zip(xs, ys))))
        sols.append((key, XnPoint(
            n=3, a=[TorusPoint.from_z(a, ctx) for a in trip],
            x=xs, y=ys, B=5.0 * sum(xs), residual=res)))
    return [pt for _, pt in sols]


def sigma_n_degree_probe(n: int, sigma0, ctx: LatticeContext, grid: int = 14) -> int:
    """Number of distinct B with sigma_n(a(B)) = sigma0 (n = 2: expect 3).

    Enumerates the fiber in the a-chart, where the count is robust, and
    collapses a / -a to the same B.  n = 1 returns 1 (identity map).
    """
    sig = sigma0.z if isinstance(sigma0, TorusPoint) else complex(sigma0)
    if n == 1:
        return 1
    if n != 2:
        raise ValueError("degree probe implemented for n in {1, 2}")
    pts = _fiber_over_sigma(2, sig, ctx, grid=grid)
    bs: list[complex] = []
    for p in pts:
        if not any(abs(p.B - b) < 1e-6 * (1.0 + abs(b)) for b in bs):
            bs.append(p.B)
    return len(bs)


@dataclass
class Type2Solution:
    """A nontrivial zero sigma of Z_n with its curve point a."""

    sigma: TorusPoint
    a: XnPoint
    zn: complex
    hecke: complex
    green_defect: float   # |sum grad G(a_i)|

    def to_json_dict(self) -> dict:
        return {
            "sigma": {"r": self.sigma.r, "s": self.sigma.s},
            "a": [{"r": p.r, "s": p.s} for p in self.a.a],
            "B": [self.a.B.real, self.a.B.imag],
            "green_defect": self.green_defect,
        }


def find_type2(n: int, ctx: LatticeContext, grid: int = 64,
               allow_higher: bool = False) -> list[Type2Solution]:
    """Nontrivial zeros of Z_n (sigma outside the 2-torsion) with the
    matching a on X_n; every returned a satisfies sum grad G(a_i) ~ 0.

    n = 1: the zeros are the extra critical points of G, and a = sigma.
    n = 2: zeros of W_2(Z) located by scanning + Newton, then the fiber
    point above sigma whose z_2 value equals Z(sigma).  An empty list is
    a meaningful outcome (e.g. rectangular tori at n = 1).  n = 3 is
    available behind ``allow_higher`` with best-effort fiber enumeration
    and no count guarantee.
    """
    if grid < 64:
        raise ValueError("grid must be >= 64")
    if n == 1:
        cs = critical_points(ctx, grid=max(48, grid // 2))
        out = []
        if cs.extra_pair is not None:
            for p in cs.extra_pair:
                x, y = weierstrass(p.z, ctx)
                a = XnPoint(n=1, a=[p], x=[x], y=[y], B=x, residual=0.0)
                zv = hecke_Z(p.r, p.s, ctx)
                out.append(Type2Solution(
                    sigma=p, a=a, zn=0.0, hecke=zv,
                    green_defect=abs(zv) / (2.0 * math.pi)))
        return out
    if n == 3 and not allow_higher:
        raise ValueError("n = 3 has no count guarantee; pass allow_higher=True")
    if n not in (2, 3):
        raise ValueError("find_type2 implemented for n in {1, 2, 3}")
    tau = ctx.tau
    zeros: list[tuple[float, float]] = []

    def z2(rs):
        return Zn_premodular(n, TorusPoint.from_rs(rs[0], rs[1], ctx), ctx)

    rr = (np.arange(grid) + 0.37) / grid
    ss = (np.arange(grid) + 0.59) / grid
    R, S = np.meshgrid(rr, ss, indexing="ij")
    zg = R + S * tau
    Zg = zeta_many(zg, ctx) - R * ctx.eta1 - S * ctx.eta2
    P, Pp = wp_many(zg, ctx)
    if n == 2:
        vals = Zg**3 - 3.0 * P * Zg - Pp
    else:
        vals = (Zg**6 - 15.0 * P * Zg**4 - 20.0 * Pp * Zg**3
                + (6.75 * ctx.g2 - 45.0 * P**2) * Zg**2
                - 12.0 * Pp * P * Zg - 1.25 * Pp**2)
    wind = _winding_cells(vals)
    cells = list(zip(*np.where(np.abs(np.round(wind)) >= 1)))
    h = 1e-7
    for i, j in cells:
        r0 = (rr[i] + rr[min(i + 1, grid - 1)]) / 2
        s0 = (ss[j] + ss[min(j + 1, grid - 1)]) / 2
        rs = np.array([r0, s0])
        ok = False
        for _ in range(80):
            try:
                f = z2(rs)
            except PoleProximity:
                break
            if abs(f) < 1e-11:
                ok = True
                break
            try:
                fr = (z2(rs + [h, 0]) - z2(rs - [h, 0])) / (2 * h)
                fs = (z2(rs + [0, h]) - z2(rs - [0, h])) / (2 * h)
            except PoleProximity:
                break
            jac = np.array([[fr.real, fs.real], [fr.imag, fs.imag]])
            try:
                step = np.linalg.solve(jac, [f.real, f.imag])
            except np.linalg.LinAlgError:
                break
            if np.max(np.abs(step)) > 0.3:
                step *= 0.3 / np.max(np.abs(step))
            rs = rs - step
        if not ok:
            continue
        r1, s1 = rs[0] % 1.0, rs[1] % 1.0
        if _is_two_torsion(r1, s1):
            continue
        dup = False
        for (ra, sa) in zeros:
            dr = min(abs(r1 - ra), 1 - abs(r1 - ra))
            ds = min(abs(s1 - sa), 1 - abs(s1 - sa))
            if math.hypot(dr, ds) < 1e-6:
                dup = True
        if not dup:
            zeros.append((r1, s1))
    out = []
    for (r1, s1) in zeros:
        sig_pt = TorusPoint.from_rs(r1, s1, ctx)
        zval = hecke_Z(r1, s1, ctx)
        try:
            if n == 2:
                fiber = _fiber_over_sigma(2, sig_pt.z, ctx)
            else:
                fiber = _fiber_over_sigma_n3(sig_pt.z, ctx)
        except NoConvergence:
            continue
        best, best_d = None, math.inf
        for cand in fiber:
            d = abs(zn_value(cand, ctx) - zval)
            if d < best_d:
                best, best_d = cand, d
        if best is None or best_d > 1e-6 * (1.0 + abs(zval)):
            continue
        defect = abs(sum(hecke_Z(p.r, p.s, ctx) for p in best.a)) / (2.0 * math.pi)
        out.append(Type2Solution(sigma=sig_pt, a=best, zn=zn_value(best, ctx),
                                 hecke=zval, green_defect=defect))
    out.sort(key=lambda t: (round(t.sigma.r, 9), round(t.sigma.s, 9)))
    return out


def ln_sweep_csv(n: int, b_values, ctx: LatticeContext, path: str) -> None:
    """CSV of (Re B, Im B, Re l_n, Im l_n) for plotting sweeps."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_B", "im_B", "re_ln", "im_ln"])
        for b in b_values:
            v = lame_ln(n, complex(b), ctx)
            w.writerow([complex(b).real, complex(b).imag, v.real, v.imag])
