import math
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.integrate import quad

from mcns.analysis import (NormSpec, fit_decay, initial_energy, log_times,
                           predicted_slope, rate, theory_report, weighted_norm)
from mcns.errors import DataError
from mcns.grid import GridSpec, ScalarField, VectorField3, to_physical
from mcns.hermite import phi0, phi0_field
from mcns.propagators import apply_heat_scalar

from conftest import gaussian_bump_field, random_real_field

INF = math.inf

# Hand-computed lattice values transcribed from the displayed rate formulas
# (floor1(v) = min(v, 1); b and frak_b interpolate linearly in 1 - 2/p for
# 2 < p < infinity).
RATE_CASES = [
    ("r", (0, 1.0), F(0)),
    ("r", (0, 1.5), F(0)),
    ("r", (0, 2.0), F(1, 4)),
    ("r", (0, INF), F(1)),
    ("r", (1, 1.0), F(1, 2)),
    ("r", (1, 2.0), F(3, 4)),
    ("r", (1, INF), F(3, 2)),
    ("r", (2, 1.5), F(1)),
    ("ell_tilde", (0.0, 1.0, 0.0), F(0)),
    ("ell_tilde", (1.0, 1.0, 0.0), F(1, 2)),
    ("ell_tilde", (2.0, 1.5, 0.0), F(1)),
    ("ell_tilde", (0.0, 2.0, 0.0), F(1, 2)),
    ("ell_tilde", (1.0, 2.0, 0.0), F(1)),
    ("ell_tilde", (2.0, INF, 0.0), F(1)),
    ("ell_tilde", (2.0, 2.0, 1.0), F(1, 2)),
    ("ell_tilde", (1.0, 2.0, 0.5), F(3, 4)),
    ("ell", (0.0, 1.0, 0.0), F(-1, 2)),
    ("ell", (1.0, 1.0, 0.0), F(0)),
    ("ell", (0.0, 1.5, 0.0), F(1, 3)),
    ("ell", (1.0, 2.0, 0.0), F(1)),
    ("ell", (2.0, INF, 0.0), F(3, 2)),
    ("ell", (2.0, 2.0, 1.0), F(0)),
    ("ell_hat", (1, 1.0, 0), F(0)),
    ("ell_hat", (1, 1.5, 1), F(0)),
    ("ell_hat", (1, INF, 1), F(-1, 3)),
    ("ell_hat", (2, 4.0, 2), F(-1, 6)),
    ("b", (0.0, 1.0), F(1, 6)),
    ("b", (1.0, 2.0), F(2, 5)),
    ("b", (0.0, INF), F(0)),
    ("b", (1.0, INF), F(2, 5)),
    ("b", (0.0, 4.0), F(1, 12)),
    ("frak_b", (0.0, 2.0), F(-5, 6)),
    ("frak_b", (1.0, 2.0), F(1, 2)),
    ("frak_b", (2.0, 2.0), F(1, 2)),
    ("frak_b", (1.0, INF), F(1, 2)),
    ("frak_b", (0.5, 1.0), F(1, 4)),
    ("frak_b", (0.0, INF), F(-1)),
    ("frak_b", (0.5, 4.0), F(0)),
    ("bb", (1.0, 2.0), F(1, 2)),
    ("bb", (0.0, 2.0), F(1, 6)),
]


class TestRateTable:
    @pytest.mark.parametrize("name,args,want", RATE_CASES)
    def test_lattice_values(self, name, args, want):
        assert rate(name, *args) == pytest.approx(float(want), abs=1e-14)

    @pytest.mark.parametrize("name", ["r", "ell", "ell_tilde"])
    @pytest.mark.parametrize("n", [0.0, 0.5, 1.0, 2.0])
    def test_continuity_at_three_halves(self, name, n):
        eps = 1e-9
        if name == "r":
            lo, hi = rate(name, 1, 1.5 - eps), rate(name, 1, 1.5 + eps)
        else:
            lo, hi = rate(name, n, 1.5 - eps, 0.0), rate(name, n, 1.5 + eps, 0.0)
        assert abs(lo - hi) < 1e-6

    @pytest.mark.parametrize("name", ["ell_hat", "b", "frak_b"])
    @pytest.mark.parametrize("n", [0.0, 0.5, 1.0, 2.0])
    def test_continuity_at_two(self, name, n):
        eps = 1e-9
        if name == "ell_hat":
            lo, hi = rate(name, 1, 2.0 - eps, 1), rate(name, 1, 2.0 + eps, 1)
        else:
            lo, hi = rate(name, n, 2.0 - eps), rate(name, n, 2.0 + eps)
        assert abs(lo - hi) < 1e-6

    def test_bb_dominates_b(self):
        for n in (0.0, 0.3, 1.0, 1.7, 2.0):
            for p in (1.0, 2.0, 3.0, 10.0, INF):
                assert rate("bb", n, p) >= rate("b", n, p)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            rate("ell", 3.0, 2.0, 0.0)
        with pytest.raises(ValueError):
            rate("r", 0, 0.5)
        with pytest.raises(ValueError):
            rate("ell_hat", 1, 2.0, 2)
        with pytest.raises(ValueError):
            rate("nope", 1.0, 2.0)


class TestWeightedNorm:
    def test_phi0_l1_unit_mass(self, grid40):
        f = phi0_field(grid40)
        assert weighted_norm(f, NormSpec(p=1.0)) == pytest.approx(1.0, abs=1e-8)

    def test_phi0_l2_against_1d_product(self, grid40):
        """Oracle: ||phi0||_L2^2 = (4 pi)^-3 * (integral of exp(-x^2/2))^3."""
        want = np.sqrt((4 * np.pi) ** -3 * np.sqrt(2 * np.pi) ** 3)
        got = weighted_norm(phi0_field(grid40), NormSpec(p=2.0))
        assert got == pytest.approx(want, rel=1e-10)

    def test_homogeneous_weight_against_radial_quadrature(self, grid40):
        """||phi0||_{L1(|x|)} equals int_0^inf r phi0(r) 4 pi r^2 dr.

        The |x| weight has a kink at the origin, which caps the grid
        quadrature at O(h^2) accuracy; 5e-4 relative at h = 0.5."""
        want = quad(lambda r: r * phi0(np.array([r, 0, 0])) * 4 * np.pi * r * r,
                    0, 30)[0]
        got = weighted_norm(phi0_field(grid40), NormSpec(p=1.0, mu=1.0))
        assert got == pytest.approx(want, rel=5e-4)

    def test_infinity_norm(self, grid40):
        got = weighted_norm(phi0_field(grid40), NormSpec(p=INF))
        assert got == pytest.approx(phi0(np.zeros(3)), rel=1e-12)

    def test_vector_max_convention(self, grid40):
        f = phi0_field(grid40)
        v = VectorField3((f, 2.0 * f, 0.5 * f))
        assert weighted_norm(v, NormSpec(p=2.0)) == pytest.approx(
            2.0 * weighted_norm(f, NormSpec(p=2.0)), rel=1e-12)

    def test_derivative_spec(self, grid40):
        """Spectral derivative inside the norm: d1 phi0 = -(x1/2) phi0."""
        got = weighted_norm(phi0_field(grid40),
                            NormSpec(p=2.0, derivative=(1, 0, 0)))
        X, _, _ = grid40.meshgrid()
        direct = np.sqrt(np.sum(np.abs(X / 2.0 * phi0_field(grid40).values) ** 2)
                         * grid40.cell_volume)
        assert got == pytest.approx(float(direct), rel=1e-8)

    def test_interpolation_inequality(self, grid16):
        """||a||_{L^p(mu)} <= ||a||_{L^p(n)}^(mu/n) ||a||_{L^p}^(1-mu/n)."""
        n, mu, p = 2.0, 0.8, 2.0
        for seed in range(20):
            a = to_physical(random_real_field(grid16, seed=seed))
            lhs = weighted_norm(a, NormSpec(p=p, mu=mu))
            nn = weighted_norm(a, NormSpec(p=p, mu=n))
            n0 = weighted_norm(a, NormSpec(p=p, mu=0.0))
            assert lhs <= nn ** (mu / n) * n0 ** (1 - mu / n) + 1e-9

    def test_monotone_in_mu_outside_unit_ball(self):
        g = GridSpec(32, 24.0)
        bump = gaussian_bump_field(g, center=(4.0, 0.0, 0.0), width2=0.5)
        X, Y, Z = g.meshgrid()
        r = np.sqrt(X**2 + Y**2 + Z**2)
        vals = np.where(r >= 1.0, bump.values, 0.0)
        f = ScalarField(g, vals, "physical")
        norms = [weighted_norm(f, NormSpec(p=2.0, mu=mu)) for mu in (0.0, 0.5, 1.0, 2.0)]
        assert all(a <= b + 1e-12 for a, b in zip(norms, norms[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            NormSpec(p=0.5)
        with pytest.raises(ValueError):
            NormSpec(mu=-1.0)
        with pytest.raises(ValueError):
            NormSpec(weight_kind="mystery")


class TestInitialEnergy:
    def test_zero_data(self, grid16):
        zero = ScalarField.zeros(grid16, "physical")
        zvec = VectorField3.zeros(grid16, "physical")
        assert initial_energy(zero, zero, zvec, 1.0) == 0.0

    def test_homogeneity(self, grid40):
        f = phi0_field(grid40)
        v = VectorField3.zeros(grid40, "physical")
        zero = ScalarField.zeros(grid40, "physical")
        e1 = initial_energy(f, zero, v, 1.0)
        e3 = initial_energy(3.0 * f, zero, v, 1.0)
        assert e3 == pytest.approx(3.0 * e1, rel=1e-12)

    def test_gaussian_rho_sup_over_p_lattice(self, grid40):
        """For (phi0, 0, 0) the W^{1,p} norms decrease with p (the peak is
        below one), so the sup over the p lattice sits at p = 1."""
        from mcns.analysis import ENERGY_P_LATTICE
        from mcns.hermite import multi_indices
        f = phi0_field(grid40)
        def sobolev(p):
            total = 0.0
            for alpha in multi_indices(1):
                total += weighted_norm(f, NormSpec(p, 0.0, "inhomogeneous",
                                                   alpha)) ** p
            return total ** (1.0 / p)
        vals = [sobolev(p) for p in ENERGY_P_LATTICE]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
        zero = ScalarField.zeros(grid40, "physical")
        zvec = VectorField3.zeros(grid40, "physical")
        assert initial_energy(f, zero, zvec, 0.0) == pytest.approx(vals[0], rel=1e-12)


class TestFitDecay:
    def test_exact_power_law(self):
        ts = log_times(1.0, 100.0, 30)
        series = [(t, t ** -0.75) for t in ts]
        fit = fit_decay(series, (1.0, 100.0))
        assert fit.slope == pytest.approx(-0.75, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_log_corrected_series(self):
        ts = log_times(5.0, 200.0, 40)
        series = [(t, t ** -1.0 * np.log(1.0 + t)) for t in ts]
        fit = fit_decay(series, (5.0, 200.0), with_log=True)
        assert fit.log_factor_flag
        assert fit.slope == pytest.approx(-1.0, abs=0.02)
        # without the co-fit the same series reads visibly shallower
        assert fit_decay(series, (5.0, 200.0)).slope > -0.9

    def test_constant_series(self):
        series = [(t, 2.5) for t in log_times(1.0, 50.0, 12)]
        assert fit_decay(series, (1.0, 50.0)).slope == pytest.approx(0.0, abs=1e-12)

    def test_time_shift_measures_one_plus_t_exponent(self):
        ts = log_times(5.0, 40.0, 20)
        series = [(t, (1.0 + t) ** -0.75) for t in ts]
        assert fit_decay(series, (5.0, 40.0), time_shift=1.0).slope == pytest.approx(
            -0.75, abs=1e-10)
        # without the shift the same series reads ~10% shallow in this window
        assert fit_decay(series, (5.0, 40.0)).slope > -0.71

    def test_window_filtering(self):
        ts = np.linspace(1.0, 10.0, 20)
        series = [(t, t ** -1.0) for t in ts]
        fit = fit_decay(series, (2.0, 8.0))
        assert fit.times.min() >= 2.0 and fit.times.max() <= 8.0

    def test_needs_six_samples(self):
        series = [(t, 1.0 / t) for t in (1.0, 2.0, 3.0)]
        with pytest.raises(DataError):
            fit_decay(series, (0.5, 4.0))

    def test_rejects_nonpositive_norms(self):
        series = [(t, 0.0) for t in log_times(1.0, 10.0, 10)]
        with pytest.raises(DataError):
            fit_decay(series, (1.0, 10.0))


class TestHeatMomentAcceleration:
    def test_zero_mean_l1_slope(self):
        """Heat evolution of zero-mean first-moment data decays in L^1 at
        least like (1+t)^{-1/2} (grid check of the moment-zero mechanism)."""
        g = GridSpec(64, 120.0)
        X, _, _ = g.meshgrid()
        data = ScalarField(g, (-(X / 2.0) * phi0_field(g).values), "physical")
        series = []
        for t in log_times(5.0, 40.0, 20):
            f = to_physical(apply_heat_scalar(data, 1.0, t))
            series.append((t, float(np.sum(np.abs(f.values)) * g.cell_volume)))
        fit = fit_decay(series, (5.0, 40.0), time_shift=1.0)
        assert fit.slope <= -0.45


class TestTheoryReport:
    def test_linear_omega_row_passes(self):
        """Synthetic check: an omega series decaying at the sharp profile rate
        passes against the (weaker) class bound ell_tilde."""
        ts = log_times(5.0, 40.0, 20)
        series = {("u", "omega"): [(t, (1 + t) ** -1.25) for t in ts]}
        rep = theory_report(series, 0.0, (5.0, 40.0), p=2.0)
        assert rep.rows[0].predicted == pytest.approx(
            -rate("ell_tilde", 0.0, 2.0, 0.0))
        assert rep.rows[0].passed

    def test_rho_hermite_prediction_value(self):
        assert predicted_slope("u_H", "rho", 1.0, 2.0, 0.0) == pytest.approx(-0.75)

    def test_too_shallow_row_fails(self):
        ts = log_times(5.0, 40.0, 20)
        series = {("u", "a"): [(t, (1 + t) ** -0.2) for t in ts]}
        rep = theory_report(series, 1.0, (5.0, 40.0), p=2.0)
        assert not rep.rows[0].passed

    def test_vacuous_rows_marked(self):
        ts = log_times(5.0, 40.0, 20)
        series = {("u_H", "rho"): [(t, 0.0) for t in ts]}
        rep = theory_report(series, 1.0, (5.0, 40.0))
        assert rep.rows[0].vacuous and rep.rows[0].passed

    def test_empty_window_rejected(self):
        with pytest.raises(ValueError):
            theory_report({}, 1.0, (5.0, 5.0))

    def test_csv_shape(self):
        ts = log_times(5.0, 40.0, 20)
        series = {("u", "omega"): [(t, (1 + t) ** -1.25) for t in ts]}
        rep = theory_report(series, 0.0, (5.0, 40.0))
        lines = rep.to_csv().strip().splitlines()
        assert lines[0].startswith("quantity,p,mu,")
        assert len(lines) == 2
