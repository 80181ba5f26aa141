"""Numerical monodromy of generalized Lame equations on the torus.

The second-order equation w'' = I(z) w is integrated as a first-order
system along polylines; straight period segments acquire counterclockwise
semicircular detours around any singular translate inside the corridor,
with the singularity passed on the left, which fixes the homotopy classes
of the two period loops.  Since sum A_i = 0 the potential is elliptic and
the transported frames identify directly, so the period transports are
the monodromy matrices S_1, S_2.
"""

from __future__ import annotations

import cmath
import json
import math

import numpy as np
from dataclasses import dataclass
from scipy.integrate import solve_ivp

from .elliptic import (
    POLE_CLEARANCE,
    LatticeContext,
    TorusPoint,
    lattice_distance,
    weierstrass,
    zeta_w,
)
from .errors import (
    CriticalPointOfF,
    HalfPeriodInput,
    Inconsistent,
    NotDiagonalizable,
    PathTooClose,
    PoleProximity,
    StepUnderflow,
)
from .polysys import LameParams, SourceDivisor

CLEARANCE_RADIUS = 1e-2


@dataclass
class MonodromyPair:
    """Monodromy matrices along the two period loops from base z0."""

    S1: np.ndarray
    S2: np.ndarray
    base: complex
    residual: float   # worst Wronskian drift over the two transports

    def commutator(self) -> np.ndarray:
        return np.linalg.inv(self.S2) @ np.linalg.inv(self.S1) @ self.S2 @ self.S1

    def commutator_defect(self, ell: int) -> float:
        target = (-1.0) ** ell * np.eye(2)
        return float(np.max(np.abs(self.commutator() - target)))

    def anticommutator_defect(self) -> float:
        num = np.max(np.abs(self.S1 @ self.S2 + self.S2 @ self.S1))
        den = np.max(np.abs(self.S1 @ self.S2))
        return float(num / den)

    def to_json(self, extra: dict | None = None) -> str:
        payload = {
            "schema": 1,
            "base": [self.base.real, self.base.imag],
            "S1": [[v.real, v.imag] for v in self.S1.reshape(-1)],
            "S2": [[v.real, v.imag] for v in self.S2.reshape(-1)],
            "residual": self.residual,
        }
        payload.update(extra or {})
        return json.dumps(payload, indent=2)


def potential(z: complex, L: SourceDivisor, params: LameParams,
              ctx: LatticeContext, clearance: float = POLE_CLEARANCE) -> complex:
    """I(z) = sum eta_i(eta_i+1) wp(z - p_i) + sum A_i zeta(z - p_i) + B,
    with eta_i = l_i / 2."""
    if len(params.A) != L.N:
        raise ValueError(f"expected {L.N} accessory parameters, got {len(params.A)}")
    total = complex(params.B)
    for p, w, a in zip(L.points, L.weights, params.A):
        d = z - p.z
        if lattice_distance(d, ctx) < clearance:
            raise PoleProximity(f"z within clearance of source at {p.z}")
        eta = w / 2.0
        pv, _ = weierstrass(d, ctx)
        total += eta * (eta + 1.0) * pv + a * zeta_w(d, ctx)
    return total


def _singular_translates(L: SourceDivisor, ctx: LatticeContext,
                         lo: complex, hi: complex, pad: float):
    """Source translates p + m + n tau inside a bounding box plus padding."""
    tau = ctx.tau
    out = []
    for p in L.points:
        for m in range(-3, 4):
            for n in range(-3, 4):
                q = p.z + m + n * tau
                if (min(lo.real, hi.real) - pad <= q.real <= max(lo.real, hi.real) + pad
                        and min(lo.imag, hi.imag) - pad <= q.imag <= max(lo.imag, hi.imag) + pad):
                    out.append(q)
    return out


def path_with_detours(z0: complex, omega: complex, L: SourceDivisor,
                      ctx: LatticeContext, radius: float | None = None,
                      arc_nodes: int = 14) -> list[complex]:
    """Straight segment z0 -> z0 + omega with counterclockwise semicircular
    detours (radius = clearance, shrunk if sources are closer) around every
    singular translate lying within the corridor; the singularity stays on
    the left of the oriented path."""
    if radius is None:
        radius = CLEARANCE_RADIUS
        n = L.N
        for i in range(n):
            for j in range(i + 1, n):
                d = lattice_distance(L.points[i].z - L.points[j].z, ctx)
                radius = min(radius, 0.4 * d)
    u = omega / abs(omega)
    length = abs(omega)
    events = []
    for q in _singular_translates(L, ctx, z0, z0 + omega, 2 * radius):
        t = ((q - z0) / u).real
        dist = abs(z0 + t * u - q)
        if -radius < t < length + radius and dist < radius:
            events.append((t, q))
    events.sort(key=lambda e: e[0])
    path = [z0]
    for t, q in events:
        foot = z0 + t * u
        e_in = foot - radius * u
        e_out = foot + radius * u
        path.append(e_in)
        # arg sweeps -pi -> 0 in the frame of u: counterclockwise half-turn
        for th in np.linspace(-math.pi, 0.0, arc_nodes)[1:-1]:
            path.append(foot + radius * cmath.exp(1j * th) * u)
        path.append(e_out)
    path.append(z0 + omega)
    return path


def transport(path, L: SourceDivisor, params: LameParams, ctx: LatticeContext,
              rtol: float = 1e-12, atol: float = 1e-12,
              clearance: float | None = None) -> np.ndarray:
    """Fundamental 2x2 matrix carrying (w, w') along the polyline.

    The Wronskian of the transported frame is conserved (the system is
    traceless); its drift is the integration quality measure used by
    :func:`monodromy_pair`.
    """
    if clearance is None:
        clearance = 0.55 * CLEARANCE_RADIUS
    pts = [complex(p) for p in path]
    for za, zb in zip(pts[:-1], pts[1:]):
        for frac in np.linspace(0.0, 1.0, 9):
            zm = za + frac * (zb - za)
            dmin = min(lattice_distance(zm - p.z, ctx) for p in L.points)
            if dmin < clearance:
                raise PathTooClose(
                    f"path point {zm} is {dmin:.2e} from a singular translate")
    Y = np.eye(2, dtype=complex)
    for za, zb in zip(pts[:-1], pts[1:]):
        dz = zb - za

        def rhs(t, y):
            z = za + t * dz
            Iv = potential(z, L, params, ctx, clearance=clearance * 0.5)
            y = y.reshape(2, 2)
            return (dz * np.vstack([y[1], Iv * y[0]])).reshape(-1)

        sol = solve_ivp(rhs, (0.0, 1.0), Y.reshape(-1), method="DOP853",
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise StepUnderflow(f"integrator failed on segment {za} -> {zb}: {sol.message}")
        Y = sol.y[:, -1].reshape(2, 2)
    return Y


def wronskian_drift(M: np.ndarray) -> float:
    return float(abs(np.linalg.det(M) - 1.0))


def choose_base_point(L: SourceDivisor, ctx: LatticeContext) -> complex:
    """A base point keeping both period corridors clear of the sources."""
    tau = ctx.tau
    best, best_d = None, -1.0
    for r in np.linspace(0.04, 0.96, 23):
        for s in np.linspace(0.04, 0.96, 23):
            z0 = r + s * tau
            d = math.inf
            for omega in (1.0, tau):
                u = omega / abs(omega)
                for q in _singular_translates(L, ctx, z0, z0 + omega, 0.3):
                    t = min(max(((q - z0) / u).real, 0.0), abs(omega))
                    d = min(d, abs(z0 + t * u - q))
            dz = min(lattice_distance(z0 - p.z, ctx) for p in L.points)
            d = min(d, dz)
            if d > best_d:
                best_d, best = d, z0
    return best


def monodromy_pair(L: SourceDivisor, params: LameParams, ctx: LatticeContext,
                   z0: complex | None = None, rtol: float = 1e-12) -> MonodromyPair:
    """S_1 along z0 -> z0 + 1 and S_2 along z0 -> z0 + tau.

    Requires sum A_i ~ 0 so the potential is genuinely elliptic and the
    endpoint frames identify with the starting ones.
    """
    if not params.admissible(1e-6):
        raise ValueError("sum A_i must vanish for an elliptic potential")
    if z0 is None:
        z0 = choose_base_point(L, ctx)
    S = []
    drift = 0.0
    for omega in (1.0 + 0j, ctx.tau):
        path = path_with_detours(z0, omega, L, ctx)
        M = transport(path, L, params, ctx, rtol=rtol, atol=rtol)
        drift = max(drift, wronskian_drift(M / np.sqrt(np.linalg.det(M))))
        S.append(M)
    return MonodromyPair(S1=S[0], S2=S[1], base=z0, residual=drift)


def local_monodromy(p_i, L: SourceDivisor, params: LameParams,
                    ctx: LatticeContext, radius: float | None = None,
                    nodes: int = 48) -> np.ndarray:
    """Transport around a counterclockwise circle about the source p_i.

    For log-free parameters this must equal (-1)^{l_i} I, the numerical
    certificate that no logarithmic branch is present.
    """
    zc = p_i.z if isinstance(p_i, TorusPoint) else complex(p_i)
    if radius is None:
        radius = CLEARANCE_RADIUS
        for p in L.points:
            d = lattice_distance(zc - p.z, ctx)
            if d > 1e-9:
                radius = min(radius, 0.4 * d)
    circle = [zc + radius * cmath.exp(2j * math.pi * k / nodes)
              for k in range(nodes + 1)]
    return transport(circle, L, params, ctx, clearance=0.5 * radius)


def classify_projective(mp: MonodromyPair, tol: float = 1e-6) -> str:
    """{K4 | AbelianDiagonal | AbelianUnipotent | Other} from the pair.

    K4 requires anticommuting S_i with vanishing normalized traces (the
    odd-weight case); commuting pairs split on diagonalizability.
    """
    C = mp.commutator()
    scale = np.max(np.abs(C))
    if np.max(np.abs(C - np.eye(2))) < tol * (1.0 + scale):
        commuting = True
    elif np.max(np.abs(C + np.eye(2))) < tol * (1.0 + scale):
        commuting = False
    else:
        raise Inconsistent("commutator is neither +I nor -I within tolerance")
    if not commuting:
        n1 = np.linalg.norm(mp.S1)
        n2 = np.linalg.norm(mp.S2)
        if abs(np.trace(mp.S1)) < 1e-5 * n1 and abs(np.trace(mp.S2)) < 1e-5 * n2:
            return "K4"
        return "Other"
    def has_distinct_eigs(M):
        lam = np.linalg.eigvals(M)
        return abs(lam[0] - lam[1]) > 1e-7 * np.linalg.norm(M)
    if has_distinct_eigs(mp.S1) or has_distinct_eigs(mp.S2):
        return "AbelianDiagonal"
    def off_scalar(M):
        lam = np.trace(M) / 2.0
        return np.max(np.abs(M - lam * np.eye(2))) / np.linalg.norm(M)
    if off_scalar(mp.S1) < 1e-8 and off_scalar(mp.S2) < 1e-8:
        return "AbelianDiagonal"   # both scalar: trivially diagonal
    return "AbelianUnipotent"


def unitarizable(mp: MonodromyPair, tol: float = 1e-6) -> bool:
    """True iff both eigenvalue ratios have unit modulus in a simultaneous
    eigenframe; only meaningful for the AbelianDiagonal class."""
    label = classify_projective(mp)
    if label != "AbelianDiagonal":
        raise NotDiagonalizable(f"classification is {label}")
    lam1 = np.linalg.eigvals(mp.S1)
    if abs(lam1[0] - lam1[1]) > 1e-7 * np.linalg.norm(mp.S1):
        _, V = np.linalg.eig(mp.S1)
    else:
        _, V = np.linalg.eig(mp.S2)
    Vi = np.linalg.inv(V)
    for M in (mp.S1, mp.S2):
        D = Vi @ M @ V
        ratio = D[0, 0] / D[1, 1]
        if abs(abs(ratio) - 1.0) > tol:
            return False
    return True


def period_integral(a: complex, i: int, ctx: LatticeContext) -> complex:
    """Closed-form loop integrals F_1(a) = 2(zeta(a) - eta1 a) and
    F_2(a) = 2(tau zeta(a) - eta2 a); both lie in i R exactly when a is a
    critical point of the Green function."""
    a = complex(a)
    if i not in (1, 2):
        raise ValueError("period index must be 1 or 2")
    for hr in (0.0, 0.5):
        for hs in (0.0, 0.5):
            if lattice_distance(a - (hr + hs * ctx.tau), ctx) < POLE_CLEARANCE:
                raise HalfPeriodInput("period integral degenerates on half-lattice points")
    if i == 1:
        return 2.0 * (zeta_w(a, ctx) - ctx.eta1 * a)
    return 2.0 * (ctx.tau * zeta_w(a, ctx) - ctx.eta2 * a)


def period_integral_quadrature(a: complex, i: int, ctx: LatticeContext,
                               z0: complex, nodes: int = 3000) -> complex:
    """Trapezoid value of int wp'(a) / (wp(x) - wp(a)) dx along the period
    segment from z0; the integrand is elliptic, so the rule converges
    geometrically.  The value depends on the segment through the homotopy
    class relative to the integrand poles at x = +-a."""
    a = complex(a)
    omega = 1.0 + 0j if i == 1 else ctx.tau
    pa, ppa = weierstrass(a, ctx)
    ts = np.linspace(0.0, 1.0, nodes + 1)
    vals = np.array([ppa / (weierstrass(z0 + t * omega, ctx)[0] - pa) for t in ts])
    return complex(omega * (np.sum(vals[1:-1]) + 0.5 * (vals[0] + vals[-1])) / nodes)


def _clear_period_bases(a: complex, i: int, ctx: LatticeContext, count: int):
    """Base points whose straight period segment clears x = +-a and the
    lattice, best first."""
    omega = 1.0 + 0j if i == 1 else ctx.tau
    scored = []
    for r in np.linspace(0.05, 0.95, 13):
        for s in np.linspace(0.05, 0.95, 13):
            z0 = r + s * ctx.tau
            d = min(
                min(lattice_distance(z0 + t * omega - sgn * a, ctx)
                    for t in np.linspace(0, 1, 33))
                for sgn in (+1, -1))
            d = min(d, min(lattice_distance(z0 + t * omega, ctx)
                           for t in np.linspace(0, 1, 33)))
            scored.append((d, z0))
    scored.sort(key=lambda t: -t[0])
    return [z for d, z in scored[:count] if d > 0.04]


def period_crosscheck(a: complex, i: int, ctx: LatticeContext,
                      bases: int = 6) -> dict:
    """Closed form against quadrature over several segment classes.

    Every segment must agree with the closed form up to an integer
    multiple of 2 pi i (branch crossings of the log); segments in the
    canonical class agree modulo 4 pi i, and ``defect_mod_4pi`` is the
    smallest such deviation observed.
    """
    closed = period_integral(a, i, ctx)
    two_pi = 2.0 * math.pi
    worst_2pi, best_4pi = 0.0, math.inf
    for z0 in _clear_period_bases(a, i, ctx, bases):
        quad = period_integral_quadrature(a, i, ctx, z0)
        m = (closed - quad) / (2j * math.pi)
        worst_2pi = max(worst_2pi, abs(m - round(m.real)))
        k = round(m.real / 2.0) * 2.0
        best_4pi = min(best_4pi, abs(closed - quad - k * 2j * math.pi))
    return {"closed": closed, "defect_mod_2pi": worst_2pi * two_pi,
            "defect_mod_4pi": best_4pi}


def u_density(f: complex, fprime: complex) -> float:
    """Liouville density u = 8 pi + log(|f'|^2 / (1 + |f|^2)^2) carried by
    a developing map value and derivative."""
    if fprime == 0:
        raise CriticalPointOfF("f' = 0: density diverges")
    return 8.0 * math.pi + math.log(abs(fprime) ** 2 / (1.0 + abs(f) ** 2) ** 2)
