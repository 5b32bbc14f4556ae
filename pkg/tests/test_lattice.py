"""Lattice enumeration, coefficient tables, cutoffs and xi coefficients."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermigas import potentials
from fermigas.errors import InvalidInputError
from fermigas.lattice import (
    CoefficientTable,
    CutoffFamily,
    MomentumLattice,
    ResidualReport,
    bogoliubov_xi,
    build_cutoffs,
    build_tables,
    chi_ball_hat,
    collision_denominator,
    count_lattice_points,
    cutoff_cancellation_sum,
    eta_table,
    fermi_ball,
    scattering_residual,
    vhat,
)
from fermigas.scattering import solve_neumann

TWO_PI = 2.0 * np.pi


def brute_force_count(R, L):
    m = R * L / TWO_PI
    mi = int(np.floor(m))
    count = 0
    for nx in range(-mi, mi + 1):
        for ny in range(-mi, mi + 1):
            for nz in range(-mi, mi + 1):
                if nx * nx + ny * ny + nz * nz <= m * m:
                    count += 1
    return count


class TestCountLatticePoints:
    def test_origin_only(self):
        assert count_lattice_points(0.5 * TWO_PI, 1.0) == 1

    def test_first_shell(self):
        assert count_lattice_points(1.0 * TWO_PI, 1.0) == 7

    @pytest.mark.parametrize("m", [1.5, 2.0, 3.7, 5.0, 8.2, 12.0, 20.0])
    def test_matches_brute_force(self, m):
        R = m * TWO_PI / 4.0
        assert count_lattice_points(R, 4.0) == brute_force_count(R, 4.0)

    def test_monotone_in_R(self):
        counts = [count_lattice_points(R, 1.0) for R in
                  np.linspace(0.1, 12.0, 40) * TWO_PI]
        assert all(b >= a for a, b in zip(counts, counts[1:]))

    def test_asymptotic_gap_exponent(self):
        # |N(R) - R^3 L^3 / 6 pi^2| should grow no faster than (RL)^1.4
        ms = np.array([10, 14, 20, 28, 40, 57, 80, 113, 160, 200], float)
        gaps = []
        for m in ms:
            # avoid radii that shave lattice shells ambiguously
            mm = m + 0.5
            n = count_lattice_points(mm * TWO_PI, 1.0)
            gaps.append(abs(n - 4.0 * np.pi * mm**3 / 3.0))
        slope = np.polyfit(np.log(ms + 0.5), np.log(gaps), 1)[0]
        assert slope <= 1.4

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            count_lattice_points(-1.0, 1.0)


class TestFermiBall:
    def test_empty_ball(self):
        modes, n0 = fermi_ball(0.0, 5.0)
        assert n0 == 1
        assert np.array_equal(modes, [[0, 0, 0]])

    def test_first_shell(self):
        modes, n0 = fermi_ball(1.2 * TWO_PI / 5.0, 5.0)
        assert n0 == 7

    def test_density_limit(self):
        kF = 1.0
        vals = []
        for L in (20.0, 40.0, 80.0):
            _, n0 = fermi_ball(kF, L)
            vals.append(n0 / L**3)
        target = kF**3 / (6 * np.pi**2)
        gaps = np.abs(np.array(vals) - target) / target
        assert gaps[-1] < 0.05

    def test_negation_closure(self):
        modes, _ = fermi_ball(1.7, 7.0)
        asset = {tuple(m) for m in modes}
        assert all(tuple(-m) in asset for m in modes)


class TestVhat:
    def test_zero_potential(self):
        v = potentials.zero_potential()
        assert vhat(v, 0.0) == 0.0
        assert vhat(v, 2.3) == 0.0

    def test_square_well_closed_form(self):
        V0, b = 1.7, 0.9
        v = potentials.square_well(V0, b)
        for k in (0.3, 1.0, 4.2, 11.0):
            expect = 8 * np.pi * V0 * (np.sin(k * b) - k * b * np.cos(k * b)) / k**3
            assert vhat(v, k) == pytest.approx(expect, rel=1e-10)

    def test_zero_mode(self):
        V0, b = 1.7, 0.9
        v = potentials.square_well(V0, b)
        assert vhat(v, 0.0) == pytest.approx(8 * np.pi * V0 * b**3 / 3, rel=1e-12)

    def test_continuity_at_zero(self):
        v = potentials.square_well(2.0, 1.0)
        assert vhat(v, 1e-6) == pytest.approx(vhat(v, 0.0), rel=1e-9)


@pytest.fixture(scope="module")
def table_setup():
    v = potentials.square_well(1.0, 1.0)
    L = 18.0
    sol = solve_neumann(v, ellL=6.0)
    lat = MomentumLattice.build(L, kmax=8.0)
    tab = build_tables(sol, lat)
    return sol, lat, tab


class TestEtaTable:
    def test_zero_potential_gives_zero(self):
        sol = solve_neumann(potentials.zero_potential(), ellL=6.0)
        lat = MomentumLattice.build(18.0, kmax=4.0)
        tab = eta_table(sol, lat)
        assert np.allclose(tab.eta, 0.0, atol=1e-14)

    def test_even_and_real(self, table_setup):
        _, lat, tab = table_setup
        for i in range(0, len(lat.modes), 97):
            n = lat.modes[i]
            j = lat.index[tuple(-n)]
            assert tab.eta[i] == tab.eta[j]
            assert tab.W[i] == tab.W[j]

    def test_ball_must_fit(self, table_setup):
        sol, lat, _ = table_setup
        small = MomentumLattice.build(10.0, kmax=4.0)
        with pytest.raises(InvalidInputError):
            eta_table(sol, small)

    def test_eta_decay_bound_stable_under_L(self):
        # sup_p L^3 |p|^2 |eta_p| comparable between L and 2L
        v = potentials.square_well(1.0, 1.0)
        sol = solve_neumann(v, ellL=6.0)
        sups = []
        for L in (16.0, 32.0):
            lat = MomentumLattice.build(L, kmax=6.0)
            tab = eta_table(sol, lat)
            kn = lat.k_norms
            mask = kn > 0
            sups.append(np.max(L**3 * kn[mask] ** 2 * np.abs(tab.eta[mask])))
        assert sups[1] < 2.0 * sups[0]

    def test_eta_sum_converges(self):
        # the tail of sum |eta| falls off like 1/kmax (Laplacian jump at the
        # ball edge), so the 5% window needs the 8 -> 16 doubling
        v = potentials.gaussian_bump(2.0, 1.0)
        sol = solve_neumann(v, ellL=5.0)
        sums = []
        for kmax in (8.0, 16.0):
            lat = MomentumLattice.build(12.0, kmax=kmax)
            tab = eta_table(sol, lat)
            sums.append(np.abs(tab.eta).sum())
        assert abs(sums[1] - sums[0]) / sums[1] < 0.05

    def test_oracle_direct_quadrature(self, table_setup):
        # brute trapezoid of w(r) sin(pr) r against the closed-form transform
        sol, lat, tab = table_setup
        r = np.linspace(0, sol.ellL, 200_001)
        w = sol.w(r)
        for trip in [(1, 0, 0), (2, 1, 0), (3, 2, 1)]:
            i = lat.index[trip]
            p = lat.unit * np.sqrt(sum(c * c for c in trip))
            oracle = -(4 * np.pi / (lat.L**3 * p)) * np.trapezoid(
                w * np.sin(p * r) * r, r)
            assert tab.eta[i] == pytest.approx(oracle, rel=1e-7, abs=1e-16)


class TestWTable:
    def test_zero_lambda(self):
        sol = solve_neumann(potentials.zero_potential(), ellL=6.0)
        lat = MomentumLattice.build(18.0, kmax=4.0)
        tab = build_tables(sol, lat)
        assert np.allclose(tab.W, 0.0)

    def test_W0_drifts_to_4pi_a0(self):
        v = potentials.square_well(1.0, 1.0)
        gaps = []
        for ellL, L in ((4.0, 12.0), (8.0, 20.0), (16.0, 40.0)):
            sol = solve_neumann(v, ellL=ellL)
            lat = MomentumLattice.build(L, kmax=3.0)
            tab = build_tables(sol, lat)
            W0 = tab.W_at((0, 0, 0))
            gaps.append(abs(W0 - 4 * np.pi * sol.a0))
        assert gaps[-1] < gaps[0]
        assert gaps[-1] / (4 * np.pi * 0.238) < 0.05

    def test_Wp_p2_bounded_under_refinement(self, table_setup):
        sol, lat, tab = table_setup
        lat2 = MomentumLattice.build(lat.L, kmax=12.0)
        tab2 = build_tables(sol, lat2)
        def supval(t, la):
            kn = la.k_norms
            m = kn > 0
            return np.max(sol.ellL**2 * kn[m] ** 2 * np.abs(t.W[m]))
        assert supval(tab2, lat2) < 1.5 * supval(tab, lat)


class TestScatteringResidual:
    def test_zero_potential(self):
        sol = solve_neumann(potentials.zero_potential(), ellL=6.0)
        lat = MomentumLattice.build(16.0, kmax=4.0)
        tab = build_tables(sol, lat)
        rep = scattering_residual(tab)
        assert rep.residual == pytest.approx(0.0, abs=1e-15)

    def test_residual_below_truncation(self, table_setup):
        _, _, tab = table_setup
        rep = scattering_residual(tab)
        assert rep.residual < rep.truncation

    def test_residual_monotone_in_kmax(self):
        v = potentials.square_well(1.0, 1.0)
        sol = solve_neumann(v, ellL=6.0)
        res = []
        for kmax in (4.0, 8.0, 16.0):
            lat = MomentumLattice.build(16.0, kmax=kmax)
            tab = build_tables(sol, lat)
            res.append(scattering_residual(tab).residual)
        assert res[1] < res[0]
        assert res[2] < res[1]

    def test_direct_convolution_oracle(self, table_setup):
        # recompute the identity defect at one mode with a plain python loop
        sol, lat, tab = table_setup
        trip = (1, 0, 0)
        i = lat.index[trip]
        p = lat.unit * np.array(trip, float)
        acc = 0.0
        for j, n in enumerate(lat.modes):
            d = np.array(trip) - n
            acc += vhat(tab.potential, lat.unit * np.linalg.norm(d)) * tab.eta[j]
        L3 = lat.L**3
        defect = abs((p @ p) * tab.eta[i] + acc / (2 * L3)
                     + tab.vhat[i] / (2 * L3) - tab.W[i] / L3)
        rep = scattering_residual(tab)
        assert defect <= rep.residual + 1e-18


class TestCutoffs:
    def make(self, rho=0.03, mu=1.0):
        fam = CutoffFamily.default(rho0_tilde=rho, mu_tilde=mu)
        return fam, build_cutoffs(fam)

    def test_plateaus_exact(self):
        fam, cuts = self.make()
        lo = cuts.phi_minus.inner
        hi = cuts.phi_minus.outer
        assert cuts.phi_minus(0.0) == 1.0
        assert cuts.phi_minus(0.5 * lo) == 1.0
        assert cuts.phi_minus(hi) == 0.0
        assert cuts.phi_minus(3.0 * hi) == 0.0

    def test_phi_support_radii(self):
        fam, cuts = self.make()
        kf = np.sqrt(fam.mu_tilde)
        assert cuts.phi_minus.inner == pytest.approx(
            1.5 * kf * fam.rho0_tilde ** (-fam.alpha2))
        assert cuts.phi_minus(3.0 * kf * fam.rho0_tilde ** (-fam.alpha2)) == 0.0

    @given(st.floats(min_value=0.0, max_value=50.0))
    @settings(max_examples=300, deadline=None)
    def test_complement_exact(self, r):
        fam, cuts = self.make()
        assert cuts.phi_minus(r) + cuts.phi_plus(r) == 1.0

    def test_values_in_unit_interval(self):
        fam, cuts = self.make()
        r = np.linspace(0, 30, 10_000)
        for prof in (cuts.phi_minus, cuts.zeta_minus, cuts.zeta_tilde_minus,
                     cuts.gamma_minus, cuts.theta):
            vals = prof(r)
            assert np.all((vals >= 0.0) & (vals <= 1.0))

    def test_derivative_scaling(self):
        # max |phi-'| ~ C rho^{-(1/3 - alpha2)} with a stable constant,
        # using the zero-temperature proxy mu ~ rho^{2/3}
        consts = []
        for rho in (0.05, 0.02, 0.008):
            mu = (6 * np.pi**2 * rho / 2.0) ** (2.0 / 3.0)
            fam = CutoffFamily.default(rho0_tilde=rho, mu_tilde=mu)
            cuts = build_cutoffs(fam)
            r = np.linspace(cuts.phi_minus.inner, cuts.phi_minus.outer, 20_000)
            grad = np.max(np.abs(np.gradient(cuts.phi_minus(r), r)))
            consts.append(grad / rho ** (-(1.0 / 3.0 - fam.alpha2)))
        consts = np.array(consts)
        assert consts.max() / consts.min() < 1.5

    def test_invalid_exponent(self):
        with pytest.raises(InvalidInputError):
            CutoffFamily.default(rho0_tilde=0.03, mu_tilde=1.0, alpha1=0.1)


class TestBogoliubovXi:
    @pytest.fixture(scope="class")
    def setup(self):
        v = potentials.square_well(1.0, 1.0)
        sol = solve_neumann(v, ellL=6.0)
        L = 16.0
        lat = MomentumLattice.build(L, kmax=6.0)
        tab = build_tables(sol, lat)
        kF = 2.2 * TWO_PI / L
        rho = 2 * kF**3 / (6 * np.pi**2)
        fam = CutoffFamily.default(rho0_tilde=rho, mu_tilde=kF**2)
        cuts = build_cutoffs(fam)
        return tab, cuts, kF, rho**2

    def test_support(self, setup):
        tab, cuts, kF, eps0 = setup
        unit = tab.lat.unit
        k = unit * np.array([3, 0, 0])
        p_out = unit * np.array([3, 3, 0])      # outside the Fermi ball
        q_in = unit * np.array([1, 0, 0])
        assert bogoliubov_xi(tab, cuts, k, q_in, p_out, kF, eps0) == 0.0

    def test_nonzero_inside_support(self, setup):
        tab, cuts, kF, eps0 = setup
        unit = tab.lat.unit
        k = unit * np.array([3, 0, 0])
        p = unit * np.array([-1, 0, 0])
        q = unit * np.array([1, 0, 0])
        val = bogoliubov_xi(tab, cuts, k, q, p, kF, eps0)
        assert val != 0.0

    def test_denominator_identity(self, setup):
        tab, cuts, kF, eps0 = setup
        rng = np.random.default_rng(7)
        unit = tab.lat.unit
        for _ in range(100_000):
            k, q, p = unit * rng.integers(-4, 5, size=(3, 3))
            lhs = collision_denominator(k, q, p, eps0)
            rhs = 0.5 * (np.sum((q + k) ** 2) + np.sum((p - k) ** 2)
                         - np.sum(q**2) - np.sum(p**2)) + eps0
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(rhs))

    def test_denominator_positive_on_support(self, setup):
        tab, cuts, kF, eps0 = setup
        unit = tab.lat.unit
        rng = np.random.default_rng(11)
        found = 0
        for _ in range(3000):
            k, q, p = unit * rng.integers(-5, 6, size=(3, 3))
            if bogoliubov_xi(tab, cuts, k, q, p, kF, eps0) != 0.0:
                found += 1
                assert collision_denominator(k, q, p, eps0) >= eps0
        assert found > 0

    def test_requires_positive_gap(self, setup):
        tab, cuts, kF, _ = setup
        unit = tab.lat.unit
        with pytest.raises(InvalidInputError):
            bogoliubov_xi(tab, cuts, unit * np.array([3, 0, 0]),
                          np.zeros(3), np.zeros(3), kF, 0.0)


class TestCutoffCancellation:
    def test_unconstrained_sum_vanishes(self):
        v = potentials.square_well(1.0, 1.0)
        sol = solve_neumann(v, ellL=6.0)
        L = 16.0
        lat = MomentumLattice.build(L, kmax=6.0)
        tab = build_tables(sol, lat)
        kF = 2.2 * TWO_PI / L
        rho = 2 * kF**3 / (6 * np.pi**2)
        fam = CutoffFamily.default(rho0_tilde=rho, mu_tilde=kF**2)
        cuts = build_cutoffs(fam)
        total = cutoff_cancellation_sum(tab, cuts, kF, q_spin=2)
        assert abs(total) < 1e-12
