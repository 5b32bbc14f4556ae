"""s-wave scattering on a ball with Neumann boundary data.

The radial reduction u(r) = r f(r) turns (-Delta + v/2) f = lambda f on
|x| <= ellL into -u'' + (v/2) u = lambda u with u(0) = 0; the Neumann
condition f'(ellL) = 0 with f(ellL) = 1 becomes u'(ellL) = u(ellL)/ellL
and u(ellL) = ellL.  Outside the support of v the equation is free, so the
solution is propagated analytically from support_radius to ellL; the ODE is
integrated numerically only inside the support.  That keeps the eigenvalue
accurate to ~1e-13 relative even for ellL in the hundreds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import AccuracyFailureError, InvalidInputError, SolverFailureError
from .potentials import RadialPotential

_ODE_RTOL = 1e-13
_ODE_ATOL = 1e-15


@dataclass(frozen=True)
class ScatteringSolution:
    """Converged Neumann ground state on the ball of radius ellL.

    f and w = 1 - f are normalized so f(ellL) = 1; both are extended
    constantly (1 and 0) outside the ball.  ``u_rv``/``up_rv`` are the values
    of u = r f and u' at the potential edge, from which the solution on
    [support_radius, ellL] is A cos(omega (r - R_v)) + (B/omega) sin(...),
    omega = sqrt(lambda).
    """

    a0: float
    lambda_ell: float
    ellL: float
    r_grid: np.ndarray
    u_grid: np.ndarray
    f_grid: np.ndarray
    w_grid: np.ndarray
    residual: float
    support_radius: float
    u_rv: float
    up_rv: float
    potential: RadialPotential
    _inside: object  # dense ODE interpolant for (u, u') on [0, support_radius]

    def u(self, r):
        """u(r) = r f(r) on [0, ellL], with u = r beyond ellL."""
        r = np.atleast_1d(np.asarray(r, float))
        out = np.empty_like(r)
        inside = r <= self.support_radius
        if np.any(inside):
            out[inside] = self._inside(r[inside])[0]
        mid = (~inside) & (r <= self.ellL)
        if np.any(mid):
            out[mid] = _outer_u(r[mid], self.u_rv, self.up_rv,
                                self.lambda_ell, self.support_radius)
        beyond = r > self.ellL
        out[beyond] = r[beyond]
        return out

    def w(self, r):
        r = np.atleast_1d(np.asarray(r, float))
        out = 1.0 - np.divide(self.u(r), r, out=np.ones_like(r),
                              where=r > 0)
        out[r > self.ellL] = 0.0
        if np.any(r == 0):
            up0 = self._inside(0.0)[1]
            out[r == 0] = 1.0 - up0
        return out


def _rhs(v):
    def fun(r, y):
        return [y[1], (0.5 * v(r) - fun.lam) * y[0]]
    fun.lam = 0.0
    return fun


def _integrate_inside(v: RadialPotential, lam: float, dense: bool = False):
    """Integrate u'' = (v/2 - lambda) u from u(0)=0, u'(0)=1 to support_radius."""
    fun = _rhs(v)
    fun.lam = lam
    sol = solve_ivp(fun, (0.0, v.support_radius), [0.0, 1.0], method="DOP853",
                    rtol=_ODE_RTOL, atol=_ODE_ATOL, dense_output=dense)
    if not sol.success:
        raise SolverFailureError(f"radial integration failed: {sol.message}")
    return sol


def _outer_u(r, A, B, lam, r_v):
    """Free propagation of (u, u') = (A, B) from r_v: solves -u'' = lam u."""
    d = np.asarray(r, float) - r_v
    if lam == 0.0:
        return A + B * d
    if lam > 0.0:
        w = np.sqrt(lam)
        return A * np.cos(w * d) + (B / w) * np.sin(w * d)
    w = np.sqrt(-lam)
    return A * np.cosh(w * d) + (B / w) * np.sinh(w * d)


def _outer_up(r, A, B, lam, r_v):
    d = np.asarray(r, float) - r_v
    if lam == 0.0:
        return np.broadcast_to(np.asarray(B, float), d.shape).copy()
    if lam > 0.0:
        w = np.sqrt(lam)
        return -A * w * np.sin(w * d) + B * np.cos(w * d)
    w = np.sqrt(-lam)
    return A * w * np.sinh(w * d) + B * np.cosh(w * d)


def scattering_length(v: RadialPotential, tol: float = 1e-8) -> float:
    """Scattering length from the zero-energy radial solution.

    Integrates -u'' + (v/2) u = 0 with u(0) = 0 across the support; beyond it
    u is a straight line const (r - a0), so a0 = R_v - u/u' at the edge.
    The result is checked for stability under tolerance refinement.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    v.check_nonnegative()
    if v.is_zero:
        return 0.0
    sol = _integrate_inside(v, 0.0)
    u, up = sol.y[0, -1], sol.y[1, -1]
    if up <= 0:
        raise SolverFailureError("zero-energy solution lost monotonicity "
                                 "(potential too strong for this grid)")
    a0 = v.support_radius - u / up
    # refinement stability: repeat at the tightest admissible tolerance
    fun = _rhs(v)
    fun.lam = 0.0
    sol2 = solve_ivp(fun, (0.0, v.support_radius), [0.0, 1.0], method="DOP853",
                     rtol=2.3e-14, atol=1e-16)
    if not sol2.success:
        raise SolverFailureError(f"refinement pass failed: {sol2.message}")
    a0_fine = v.support_radius - sol2.y[0, -1] / sol2.y[1, -1]
    if abs(a0_fine - a0) > tol * max(abs(a0), 1.0):
        raise AccuracyFailureError(
            f"scattering length unstable under refinement: {a0} vs {a0_fine}")
    return a0


def lambda_asymptotic(a0: float, ellL: float) -> float:
    """Leading Neumann eigenvalue 3 a0/(ellL)^3 (1 + (9/5) a0/ellL)."""
    if ellL <= 0:
        raise InvalidInputError("ellL must be positive")
    return 3.0 * a0 / ellL**3 * (1.0 + 1.8 * a0 / ellL)


def _report_grid(r_v: float, ellL: float, n: int) -> np.ndarray:
    """Radial grid refined near r = 0 and near the potential edge."""
    n_in = max(n // 4, 64)
    t = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, n_in)))  # clusters at both ends
    inner = r_v * t
    n_out = n - n_in
    s = np.linspace(0.0, 1.0, n_out + 1)[1:]
    stretch = (np.expm1(4.0 * s)) / np.expm1(4.0)             # clusters near r_v
    outer = r_v + (ellL - r_v) * stretch
    return np.concatenate([inner, outer])


def solve_neumann(v: RadialPotential, ellL: float, tol: float = 1e-10,
                  n_grid: int = 4096) -> ScatteringSolution:
    """Lowest Neumann eigenpair (lambda, f) on the ball of radius ellL.

    Shooting on lambda: the interior solve runs only over the potential
    support, the free region is propagated in closed form, and the boundary
    mismatch g(lambda) = ellL u'(ellL) - u(ellL) is driven to zero by brentq.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if ellL <= v.support_radius:
        raise InvalidInputError("ellL must exceed the potential support radius")
    if ellL <= 2 * v.support_radius:
        raise InvalidInputError("need ellL > 2 * support_radius so a free "
                                "region exists")
    v.check_nonnegative()
    a0 = scattering_length(v, tol=max(tol, 1e-10))

    if a0 == 0.0:
        # free case: lambda = 0, f = 1
        r = _report_grid(v.support_radius, ellL, n_grid)
        ones = np.ones_like(r)
        sol0 = _integrate_inside(v, 0.0, dense=True)
        return ScatteringSolution(
            a0=0.0, lambda_ell=0.0, ellL=ellL, r_grid=r, u_grid=r.copy(),
            f_grid=ones, w_grid=np.zeros_like(r), residual=0.0,
            support_radius=v.support_radius, u_rv=v.support_radius, up_rv=1.0,
            potential=v, _inside=sol0.sol)

    r_v = v.support_radius

    def mismatch(lam):
        s = _integrate_inside(v, lam)
        A, B = s.y[0, -1], s.y[1, -1]
        u_b = _outer_u(ellL, A, B, lam, r_v)
        up_b = _outer_up(ellL, A, B, lam, r_v)
        return float(ellL * up_b - u_b)

    guess = lambda_asymptotic(a0, ellL)
    lo, hi = 0.25 * guess, 4.0 * guess
    g_lo, g_hi = mismatch(lo), mismatch(hi)
    tries = 0
    while g_lo <= 0.0 and tries < 8:
        lo *= 0.25
        g_lo = mismatch(lo)
        tries += 1
    while g_hi >= 0.0 and tries < 16:
        hi *= 4.0
        g_hi = mismatch(hi)
        tries += 1
    if not (g_lo > 0.0 > g_hi):
        raise SolverFailureError(
            f"eigenvalue bracket not found near {guess:g} for ellL={ellL:g}")
    lam = brentq(mismatch, lo, hi, xtol=1e-300, rtol=8.9e-16)

    inside = _integrate_inside(v, lam, dense=True)
    A, B = inside.y[0, -1], inside.y[1, -1]
    u_b = float(_outer_u(ellL, A, B, lam, r_v))
    scale = ellL / u_b                       # normalize so f(ellL) = 1

    r = _report_grid(r_v, ellL, n_grid)
    u_vals = np.empty_like(r)
    m_in = r <= r_v
    u_vals[m_in] = inside.sol(r[m_in])[0]
    u_vals[~m_in] = _outer_u(r[~m_in], A, B, lam, r_v)
    u_vals *= scale
    with np.errstate(invalid="ignore", divide="ignore"):
        f_vals = np.where(r > 0, u_vals / r, scale * inside.sol(0.0)[1])
    w_vals = 1.0 - f_vals

    g_res = abs(mismatch(lam)) / (ellL * max(abs(u_b), 1.0))
    residual = g_res + 100.0 * _ODE_RTOL
    if residual > tol:
        raise AccuracyFailureError(
            f"residual {residual:g} above requested tolerance {tol:g}")

    def inside_scaled(rr):
        return scale * inside.sol(rr)

    return ScatteringSolution(
        a0=a0, lambda_ell=float(lam), ellL=float(ellL), r_grid=r,
        u_grid=u_vals, f_grid=f_vals, w_grid=w_vals, residual=float(residual),
        support_radius=r_v, u_rv=float(scale * A), up_rv=float(scale * B),
        potential=v, _inside=inside_scaled)


# fixed Gauss-Legendre for the interior radial quadratures
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(256)


def _gl(a: float, b: float):
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    w = 0.5 * (b - a) * _GL_WEIGHTS
    return x, w


def _int_r_trig(A: float, B: float, lam: float, r_v: float,
                a: float, b: float) -> float:
    """integral_a^b r * u_out(r) dr with u_out the free outer solution."""
    if lam == 0.0:
        # u = A + B (r - r_v)
        c0 = A - B * r_v
        return c0 * (b * b - a * a) / 2.0 + B * (b**3 - a**3) / 3.0
    w = np.sqrt(lam)

    def anti(r):
        th = w * (r - r_v)
        # integral r cos(w(r-rv)) dr and integral r sin(w(r-rv)) dr
        ic = (np.cos(th) / w**2) + r * np.sin(th) / w
        is_ = (np.sin(th) / w**2) - r * np.cos(th) / w
        return A * ic + (B / w) * is_

    return float(anti(b) - anti(a))


def integrals_vf_w(sol: ScatteringSolution, tol: float = 1e-8):
    """(integral v f d^3x, integral w d^3x) by radial quadrature.

    The interior piece uses fixed Gauss-Legendre on the stored interpolant;
    the free region is integrated in closed form.  An internal half-order
    quadrature comparison guards the requested tolerance.
    """
    v = sol.potential
    r_v = sol.support_radius

    x, wq = _gl(0.0, r_v)
    u_x = sol._inside(x)[0] if not isinstance(sol._inside, np.ndarray) else None
    u_x = sol.u(x)
    integrand = v(x) * u_x * x                # v f r^2 = v u r
    int_vf = 4.0 * np.pi * float(np.dot(wq, integrand))
    # coarse comparison for an error estimate
    xh, wh = np.polynomial.legendre.leggauss(128)
    xh = 0.5 * r_v * xh + 0.5 * r_v
    wh = 0.5 * r_v * wh
    int_vf_coarse = 4.0 * np.pi * float(np.dot(wh, v(xh) * sol.u(xh) * xh))
    err_vf = abs(int_vf - int_vf_coarse)

    # integral w r^2 dr = integral (r^2 - u r) dr
    int_r2 = sol.ellL**3 / 3.0
    int_ur_in = float(np.dot(wq, u_x * x))
    int_ur_out = _int_r_trig(sol.u_rv, sol.up_rv, sol.lambda_ell, r_v,
                             r_v, sol.ellL)
    int_w = 4.0 * np.pi * (int_r2 - int_ur_in - int_ur_out)

    scale = max(abs(int_vf), abs(int_w), 1e-30)
    if err_vf > tol * scale:
        raise AccuracyFailureError(
            f"radial quadrature error estimate {err_vf:g} exceeds tolerance")
    return int_vf, int_w


def far_field_a0(sol: ScatteringSolution) -> float:
    """Scattering length read off the far-field slope of u = r f.

    Fits u(r) ~ c (r - a0) on a window well outside the potential but well
    inside the Neumann ball, where the eigenvalue curvature is negligible.
    """
    r_v = sol.support_radius
    lo, hi = 2.0 * r_v, min(8.0 * r_v, 0.25 * sol.ellL)
    rs = np.linspace(lo, hi, 64)
    us = sol.u(rs)
    slope, intercept = np.polyfit(rs, us, 1)
    return -intercept / slope
