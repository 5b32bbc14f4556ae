"""Momentum lattice (2 pi / L) Z^3, coefficient tables and cutoff families.

Tables are keyed by integer lattice coordinates so symmetry checks
(evenness, closure under negation) are exact.  The radial transforms of the
scattering solution are evaluated with closed-form outer integrals plus
fixed Gauss-Legendre inside the potential support, which keeps the tables
at machine precision even for strongly oscillatory modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


from .errors import (AccuracyFailureError, InvalidInputError,
                     ResourceLimitError)
from .potentials import RadialPotential
from .scattering import ScatteringSolution, _int_r_trig

_ENUM_BUDGET = 4000  # max RL/(2 pi) for exact point counting


def count_lattice_points(R: float, L: float) -> int:
    """Exact cardinality of {k in (2 pi/L) Z^3 : |k| <= R}.

    Counts integer triples with n.n <= (R L / 2 pi)^2 by column, fixing the
    z-range with exact int-vs-float comparisons, so the result agrees with a
    brute-force enumeration bit for bit.
    """
    if R < 0 or L <= 0:
        raise InvalidInputError("need R >= 0 and L > 0")
    m = R * L / (2.0 * np.pi)
    if m > _ENUM_BUDGET:
        raise ResourceLimitError(f"RL/2pi = {m:g} beyond enumeration budget")
    u = m * m
    mi = int(np.floor(m))
    total = 0
    for nx in range(-mi, mi + 1):
        sx = nx * nx
        if sx > u:
            continue
        for ny in range(-mi, mi + 1):
            s = sx + ny * ny
            if s > u:
                continue
            nz = int(np.sqrt(max(u - s, 0.0)))
            while (nz + 1) * (nz + 1) + s <= u:
                nz += 1
            while nz * nz + s > u:
                nz -= 1
            total += 2 * nz + 1
    return total


def _enumerate_modes(R: float, L: float) -> np.ndarray:
    """Integer triples with |n| <= R L / 2 pi, lexicographically sorted."""
    m = R * L / (2.0 * np.pi)
    if m > _ENUM_BUDGET:
        raise ResourceLimitError(f"RL/2pi = {m:g} beyond enumeration budget")
    mi = int(np.floor(m))
    rng = np.arange(-mi, mi + 1)
    nx, ny, nz = np.meshgrid(rng, rng, rng, indexing="ij")
    pts = np.stack([nx.ravel(), ny.ravel(), nz.ravel()], axis=1)
    keep = (pts * pts).sum(axis=1) <= m * m
    pts = pts[keep]
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    return pts[order]


@dataclass(frozen=True)
class MomentumLattice:
    """Enumerated momentum modes k = (2 pi / L) n with |k| <= kmax."""

    L: float
    kmax: float
    modes: np.ndarray          # (M, 3) integer coordinates
    n2: np.ndarray             # squared integer norms
    index: dict = field(repr=False)

    @classmethod
    def build(cls, L: float, kmax: float) -> "MomentumLattice":
        if L <= 0 or kmax <= 0:
            raise InvalidInputError("need L > 0 and kmax > 0")
        modes = _enumerate_modes(kmax, L)
        n2 = (modes * modes).sum(axis=1)
        index = {tuple(m): i for i, m in enumerate(modes)}
        return cls(L=L, kmax=kmax, modes=modes, n2=n2, index=index)

    @property
    def unit(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def k_vectors(self) -> np.ndarray:
        return self.unit * self.modes

    @property
    def k_norms(self) -> np.ndarray:
        return self.unit * np.sqrt(self.n2.astype(float))

    def dense_index(self):
        """Dense (2n+1)^3 map from shifted integer triples to row index."""
        nmax = int(np.max(np.abs(self.modes))) if len(self.modes) else 0
        cube = -np.ones((2 * nmax + 1,) * 3, dtype=np.int64)
        cube[self.modes[:, 0] + nmax, self.modes[:, 1] + nmax,
             self.modes[:, 2] + nmax] = np.arange(len(self.modes))
        return cube, nmax


def fermi_ball(kF: float, L: float):
    """(mode list, count) for the ball |k| <= kF on the lattice."""
    if kF < 0:
        raise InvalidInputError("kF must be nonnegative")
    if kF == 0:
        return np.zeros((1, 3), dtype=int), 1
    modes = _enumerate_modes(kF, L)
    return modes, len(modes)


# ---------------------------------------------------------------------------
# Fourier transforms of the potential and of the scattering solution


def _composite_gl(f, a: float, b: float, panels: int, order: int = 48):
    x0, w0 = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return float(np.dot(w, f(x)))


def vhat(v: RadialPotential, kmag: float) -> float:
    """3D Fourier transform of the radial potential at |k| = kmag.

    vhat(k) = (4 pi / k) integral_0^Rv v(r) sin(k r) r dr, with the k = 0
    limit 4 pi integral v r^2 dr.  Composite Gauss-Legendre with the panel
    count tied to the oscillation count; a half-resolution pass guards the
    result.
    """
    R = v.support_radius
    if v.is_zero:
        return 0.0
    if kmag == 0.0:
        f = lambda r: v(r) * r * r
        val = _composite_gl(f, 0.0, R, panels=4)
        check = _composite_gl(f, 0.0, R, panels=2)
        scale = 1.0
    else:
        f = lambda r: v(r) * r * np.sin(kmag * r)
        panels = max(4, int(np.ceil(kmag * R / np.pi)))
        val = _composite_gl(f, 0.0, R, panels=panels)
        check = _composite_gl(f, 0.0, R, panels=max(2, panels // 2))
        scale = 1.0 / kmag
    if abs(val - check) > 1e-9 * max(abs(val), 1e-3):
        raise AccuracyFailureError("vhat quadrature did not converge")
    return 4.0 * np.pi * val * scale


def chi_ball_hat(R: float, kmag: float) -> float:
    """Fourier transform of the indicator of the ball of radius R."""
    if kmag == 0.0:
        return 4.0 * np.pi * R**3 / 3.0
    x = kmag * R
    return 4.0 * np.pi * (np.sin(x) - x * np.cos(x)) / kmag**3


_GLN, _GLW = np.polynomial.legendre.leggauss(256)


def _int_sin(c, delta, a, b):
    """integral_a^b sin(c r + delta) dr, stable as c -> 0."""
    if abs(c) * (b - a) < 1e-8:
        return (np.sin(delta) * (b - a) + np.cos(delta) * c * (b * b - a * a) / 2
                - np.sin(delta) * c * c * (b**3 - a**3) / 6)
    return (np.cos(c * a + delta) - np.cos(c * b + delta)) / c


def _int_cos(c, delta, a, b):
    if abs(c) * (b - a) < 1e-8:
        return (np.cos(delta) * (b - a) - np.sin(delta) * c * (b * b - a * a) / 2
                - np.cos(delta) * c * c * (b**3 - a**3) / 6)
    return (np.sin(c * b + delta) - np.sin(c * a + delta)) / c


def _w_sin_transform(sol: ScatteringSolution, p: float, u_gl, x_gl, w_gl) -> float:
    """integral_0^ellL w(r) sin(p r) r dr = integral (r - u) sin(p r) dr."""
    ellL, r_v = sol.ellL, sol.support_radius
    if p == 0.0:
        return 0.0
    # integral_0^ellL r sin(p r) dr
    i_r = (np.sin(p * ellL) - p * ellL * np.cos(p * ellL)) / p**2
    # inside the support: Gauss-Legendre against precomputed u values
    i_in = float(np.dot(w_gl, u_gl * np.sin(p * x_gl)))
    # free region: closed form for trig-times-trig
    lam = sol.lambda_ell
    A, B = sol.u_rv, sol.up_rv
    if lam == 0.0:
        # u = A + B (r - r_v): integrate (c0 + B r) sin(p r)
        c0 = A - B * r_v
        i_out = (c0 * _int_sin(p, 0.0, r_v, ellL)
                 + B * ((np.sin(p * ellL) - p * ellL * np.cos(p * ellL))
                        - (np.sin(p * r_v) - p * r_v * np.cos(p * r_v))) / p**2)
    else:
        w_ = np.sqrt(lam)
        phi = w_ * r_v
        Bs = B / w_
        i_out = (0.5 * A * (_int_sin(p + w_, -phi, r_v, ellL)
                            + _int_sin(p - w_, phi, r_v, ellL))
                 + 0.5 * Bs * (_int_cos(p - w_, phi, r_v, ellL)
                               - _int_cos(p + w_, -phi, r_v, ellL)))
    return i_r - i_in - i_out


@dataclass(frozen=True)
class CoefficientTable:
    """Lattice-indexed eta, W and vhat tables for one scattering solution.

    All arrays are aligned with ``lat.modes``.  eta and W are real and even
    in k by construction (they depend only on |k|).
    """

    lat: MomentumLattice
    eta: np.ndarray
    W: np.ndarray
    vhat: np.ndarray
    lambda_ell: float
    ellL: float
    a0: float
    potential: RadialPotential

    def lookup(self, triple) -> int:
        return self.lat.index[tuple(int(c) for c in triple)]

    def eta_at(self, triple) -> float:
        return float(self.eta[self.lookup(triple)])

    def W_at(self, triple) -> float:
        return float(self.W[self.lookup(triple)])

    def vhat_at(self, triple) -> float:
        return float(self.vhat[self.lookup(triple)])


def _per_shell(lat: MomentumLattice, fn):
    """Evaluate fn(|k|) once per distinct integer norm, broadcast to modes."""
    out = np.empty(len(lat.modes))
    cache = {}
    unit = lat.unit
    for i, n2 in enumerate(lat.n2):
        if n2 not in cache:
            cache[n2] = fn(unit * np.sqrt(float(n2)))
        out[i] = cache[n2]
    return out


def eta_table(sol: ScatteringSolution, lat: MomentumLattice) -> CoefficientTable:
    """Build eta_p = -w_{ell,p} / L^{3/2} on the enumerated lattice.

    w_{ell,p} = L^{-3/2} (4 pi/|p|) integral_0^{ellL} w(r) sin(|p| r) r dr,
    so eta_p = -(4 pi)/(L^3 |p|) * that radial integral; the |p| = 0 entry is
    the limit -(4 pi/L^3) integral w r^2 dr.
    """
    if sol.ellL >= lat.L / 2.0:
        raise InvalidInputError("the Neumann ball must fit inside the torus: "
                                "ellL < L/2")
    L3 = lat.L**3
    r_v = sol.support_radius
    x_gl = 0.5 * r_v * _GLN + 0.5 * r_v
    w_gl = 0.5 * r_v * _GLW
    u_gl = sol.u(x_gl)

    def eta_of_k(kmag):
        if kmag == 0.0:
            # integral w r^2 dr = ellL^3/3 - integral u r dr
            i_ur = float(np.dot(w_gl, u_gl * x_gl))
            i_ur += _int_r_trig(sol.u_rv, sol.up_rv, sol.lambda_ell,
                                r_v, r_v, sol.ellL)
            return -(4.0 * np.pi / L3) * (sol.ellL**3 / 3.0 - i_ur)
        return -(4.0 * np.pi / (L3 * kmag)) * _w_sin_transform(
            sol, kmag, u_gl, x_gl, w_gl)

    eta = _per_shell(lat, eta_of_k)
    vh = _per_shell(lat, lambda kmag: vhat(sol.potential, kmag))
    return CoefficientTable(lat=lat, eta=eta, W=np.zeros_like(eta), vhat=vh,
                            lambda_ell=sol.lambda_ell, ellL=sol.ellL,
                            a0=sol.a0, potential=sol.potential)


def W_table(sol: ScatteringSolution, lat: MomentumLattice,
            tab: CoefficientTable | None = None) -> CoefficientTable:
    """Extend an eta table with W_p = lambda_ell (chihat_ellL(p) + L^3 eta_p)."""
    if tab is None:
        tab = eta_table(sol, lat)
    L3 = lat.L**3
    chi = _per_shell(lat, lambda kmag: chi_ball_hat(sol.ellL, kmag))
    W = sol.lambda_ell * (chi + L3 * tab.eta)
    return CoefficientTable(lat=lat, eta=tab.eta, W=W, vhat=tab.vhat,
                            lambda_ell=sol.lambda_ell, ellL=sol.ellL,
                            a0=sol.a0, potential=sol.potential)


def build_tables(sol: ScatteringSolution, lat: MomentumLattice) -> CoefficientTable:
    """eta, W and vhat tables in one pass."""
    return W_table(sol, lat)


@dataclass(frozen=True)
class ResidualReport:
    residual: float        # max pointwise defect of the discrete identity
    truncation: float      # estimated contribution of modes beyond kmax
    n_checked: int


def scattering_residual(tab: CoefficientTable, interior_fraction: float = 0.5
                        ) -> ResidualReport:
    """Pointwise residual of the discrete identity relating eta, vhat and W.

    Checks max over interior p of
        |p|^2 eta_p + (1/2L^3) sum_q vhat_{p-q} eta_q + vhat_p/(2L^3) - W_p/L^3,
    with the q-sum truncated at the table edge.  The truncation estimate uses
    a fitted |eta| ~ c/n^4 tail.
    """
    lat = tab.lat
    L3 = lat.L**3
    unit = lat.unit
    nmax = np.sqrt(float(np.max(lat.n2)))
    n_int = interior_fraction * nmax
    if n_int < 1:
        raise InvalidInputError("kmax too small to leave an interior region")

    # vhat on every difference norm that the convolution can produce,
    # seeded from the table and completed by direct quadrature
    max_diff_n2 = int(np.ceil((n_int + nmax) ** 2)) + 3
    vhat_by_n2 = np.full(max_diff_n2 + 1, np.nan)
    for i, n2v in enumerate(lat.n2):
        vhat_by_n2[n2v] = tab.vhat[i]

    interior = np.nonzero(lat.n2 <= n_int * n_int)[0]
    modes = lat.modes
    needed = set()
    for ip in interior:
        d = modes[ip] - modes
        needed.update(int(x) for x in np.unique((d * d).sum(axis=1)))
    for n2v in needed:
        if np.isnan(vhat_by_n2[n2v]):
            vhat_by_n2[n2v] = vhat(tab.potential, unit * np.sqrt(float(n2v)))

    worst = 0.0
    for ip in interior:
        d = modes[ip] - modes                     # p - q for all table q
        dn2 = (d * d).sum(axis=1)
        p2 = unit * unit * float(lat.n2[ip])
        conv = float(np.dot(vhat_by_n2[dn2], tab.eta)) / (2.0 * L3)
        defect = abs(p2 * tab.eta[ip] + conv + tab.vhat[ip] / (2.0 * L3)
                     - tab.W[ip] / L3)
        worst = max(worst, defect)

    # eta tail fit over the outer shells: |eta| ~ c / n^4
    outer = lat.n2 >= (0.8 * nmax) ** 2
    n4 = (lat.n2[outer].astype(float)) ** 2
    c_tail = float(np.median(np.abs(tab.eta[outer]) * n4))
    sum_tail = 4.0 * np.pi * c_tail / nmax        # sum over |n| > nmax shells
    truncation = float(np.max(np.abs(tab.vhat))) * sum_tail / (2.0 * L3)
    return ResidualReport(residual=worst, truncation=truncation,
                          n_checked=len(interior))


# ---------------------------------------------------------------------------
# Smooth cutoff families


def _smoothstep5(t):
    """Quintic smoothstep, C^2 at both junctions."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


@dataclass(frozen=True)
class RadialCutoff:
    """Radial profile equal to 1 below ``inner``, 0 above ``outer``."""

    inner: float
    outer: float

    def __post_init__(self):
        if not (0.0 < self.inner < self.outer):
            raise InvalidInputError("cutoff needs 0 < inner < outer")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        t = (r - self.inner) / (self.outer - self.inner)
        mid = 1.0 - _smoothstep5(t)
        return np.where(r <= self.inner, 1.0,
                        np.where(r >= self.outer, 0.0, mid))

    def complement(self, r):
        return 1.0 - self(r)

    def grad_max(self) -> float:
        # max |d/dr| of the quintic transition is 15/8 over the width
        return 1.875 / (self.outer - self.inner)


@dataclass(frozen=True)
class CutoffFamily:
    """Exponent set controlling the momentum-space cutoff radii.

    The low-pass profiles are 1 below (3/2) mu_tilde^(1/2) rho^(-x) and 0
    above 2 mu_tilde^(1/2) rho^(-x) for their respective exponents x; the
    position-space profile theta transitions between rho^(-1/3)/2 and
    rho^(-1/3).
    """

    rho0_tilde: float
    mu_tilde: float
    alpha2: float
    alpha3: float
    alpha4: float
    alpha5: float
    alpha6: float
    delta1: float
    delta2: float
    delta3: float
    delta4: float
    d: float

    @property
    def beta1(self) -> float:
        return 1.0 / 3.0 + self.alpha5

    @classmethod
    def default(cls, rho0_tilde: float, mu_tilde: float,
                alpha1: float = 0.25, **overrides) -> "CutoffFamily":
        """Admissible exponent set driven by the temperature exponent alpha1."""
        if rho0_tilde <= 0 or mu_tilde <= 0:
            raise InvalidInputError("need positive rho0_tilde and mu_tilde")
        if alpha1 <= 1.0 / 6.0:
            raise InvalidInputError("alpha1 must exceed 1/6")
        d = min(alpha1 - 1.0 / 6.0, 1.0 / 9.0)
        params = dict(
            rho0_tilde=rho0_tilde, mu_tilde=mu_tilde,
            alpha2=d / 160.0, alpha3=1.0 / 12.0 + d / 40.0,
            alpha4=d / 400.0, alpha5=d / 180.0,
            alpha6=1.0 / 6.0 + 3.0 * d / 50.0,
            delta1=1.0 / 6.0 + d / 10.0, delta2=1.0 / 6.0 - 0.75 * d,
            delta3=1.0 / 24.0 + 3.0 * d / 160.0,
            delta4=1.0 / 6.0 + d / 10.0, d=d)
        params.update(overrides)
        return cls(**params)

    def momentum_cutoff(self, exponent: float) -> RadialCutoff:
        scale = np.sqrt(self.mu_tilde) * self.rho0_tilde ** (-exponent)
        return RadialCutoff(inner=1.5 * scale, outer=2.0 * scale)


@dataclass(frozen=True)
class CutoffSet:
    """The callable radial profiles of one cutoff family."""

    phi_minus: RadialCutoff
    zeta_minus: RadialCutoff
    zeta_tilde_minus: RadialCutoff
    gamma_minus: RadialCutoff
    theta: RadialCutoff

    def phi_plus(self, r):
        return self.phi_minus.complement(r)

    def zeta_plus(self, r):
        return self.zeta_minus.complement(r)

    def zeta_tilde_plus(self, r):
        return self.zeta_tilde_minus.complement(r)

    def gamma_plus(self, r):
        return self.gamma_minus.complement(r)


def build_cutoffs(fam: CutoffFamily) -> CutoffSet:
    """All cutoff profiles for one exponent family."""
    rho = fam.rho0_tilde
    theta_scale = rho ** (-1.0 / 3.0)
    return CutoffSet(
        phi_minus=fam.momentum_cutoff(fam.alpha2),
        zeta_minus=fam.momentum_cutoff(fam.beta1),
        zeta_tilde_minus=fam.momentum_cutoff(fam.alpha6),
        gamma_minus=fam.momentum_cutoff(fam.delta3),
        theta=RadialCutoff(inner=0.5 * theta_scale, outer=theta_scale),
    )


# ---------------------------------------------------------------------------
# Bogoliubov coefficient


def collision_denominator(k, q, p, epsilon0: float) -> float:
    """|k|^2 + k.(q - p) + epsilon0, the gapped pair-excitation energy."""
    k = np.asarray(k, float)
    return float(k @ k + k @ (np.asarray(q, float) - np.asarray(p, float))
                 + epsilon0)


def bogoliubov_xi(tab: CoefficientTable, cuts: CutoffSet, k, q, p,
                  kF: float, epsilon0: float) -> float:
    """Pair-transformation coefficient xi for lattice momenta (k, q, p).

    Vanishes unless p, q lie inside the Fermi ball and p - k, q + k outside.
    epsilon0 > 0 keeps the denominator away from the collision surface; the
    default choice elsewhere in the package is rho0_tilde^2.
    """
    if epsilon0 <= 0:
        raise InvalidInputError("epsilon0 must be positive")
    k = np.asarray(k, float)
    q = np.asarray(q, float)
    p = np.asarray(p, float)
    kf2 = kF * kF
    if p @ p > kf2 or q @ q > kf2:
        return 0.0
    pk = p - k
    qk = q + k
    if pk @ pk <= kf2 or qk @ qk <= kf2:
        return 0.0
    kmag = float(np.sqrt(k @ k))
    zt = float(cuts.zeta_tilde_minus(kmag))
    if zt == 0.0:
        return 0.0
    unit = tab.lat.unit
    triple = np.rint(k / unit).astype(int)
    if not np.allclose(triple * unit, k, atol=1e-9 * unit):
        raise InvalidInputError("k is not a lattice vector")
    idx = tab.lat.index.get(tuple(triple))
    if idx is None:
        raise InvalidInputError("k outside the tabulated lattice")
    L3 = tab.lat.L**3
    kdot = float(k @ (q - p))
    num = (tab.W[idx] / L3) * zt + tab.eta[idx] * kdot * float(
        cuts.phi_plus(kmag)) * zt
    den = collision_denominator(k, q, p, epsilon0)
    return -num / den


def cutoff_cancellation_sum(tab: CoefficientTable, cuts: CutoffSet,
                            kF: float, q_spin: int = 2,
                            constrained: bool = False) -> float:
    """sum_{k,p,q} eta_k^2 k.(q-p) phi+ zeta- [chi_support] chi_{p,q in B_F}.

    Without the support characteristic functions the summand is odd under
    k -> -k at fixed (p, q), so the sum over the symmetric enumeration
    vanishes identically; ``constrained=True`` keeps chi_{p-k, q+k not in
    B_F}, which vanishes only once the high-pass support sits above 2 kF.
    """
    lat = tab.lat
    kn = lat.k_norms
    weight = tab.eta**2 * cuts.phi_plus(kn) * cuts.zeta_minus(kn)
    act = np.nonzero(weight != 0.0)[0]
    if len(act) == 0:
        return 0.0
    kvecs = lat.k_vectors[act]
    wts = weight[act]
    fmodes, _ = fermi_ball(kF, lat.L)
    fvecs = lat.unit * fmodes
    total = 0.0
    kf2 = kF * kF
    for pv in fvecs:
        for qv in fvecs:
            kd = kvecs @ (qv - pv)
            if constrained:
                chi = ((((pv - kvecs) ** 2).sum(axis=1) > kf2)
                       & (((qv + kvecs) ** 2).sum(axis=1) > kf2))
                total += float(np.dot(wts * chi, kd))
            else:
                total += float(np.dot(wts, kd))
    return q_spin * q_spin * total
