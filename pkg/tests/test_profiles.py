import numpy as np
import pytest
from scipy.integrate import quad

from mcns.analysis import fit_decay, log_times
from mcns.grid import (GridSpec, ScalarField, VectorField3, forward_transform,
                       l2_norm, to_physical, to_spectral)
from mcns.hermite import phi0, phi0_field
from mcns.operators import biot_savart, curl, divergence, pi_op
from mcns.profiles import (ProfileParams, bg_potential_term, erf_unnormalized,
                           profile_a1, profile_a2, profile_b_g, profile_pi_a1,
                           profile_pi_a2, profile_rho1, profile_rho2,
                           radial_wave_first)
from mcns.propagators import apply_heat, apply_heat_wave


def pp_at(t, nu=1.0, c=1.0, eps=1.0):
    return ProfileParams(nu=nu, c=c, epsilon=eps, t=t)


class TestUnnormalizedErf:
    def test_zero(self):
        assert erf_unnormalized(0.0) == 0.0

    def test_infinity(self):
        assert erf_unnormalized(50.0) == pytest.approx(1.7724539, abs=1e-7)
        assert erf_unnormalized(50.0) == pytest.approx(np.sqrt(np.pi), rel=1e-12)

    def test_odd(self):
        z = np.linspace(0.1, 3.0, 7)
        assert np.allclose(erf_unnormalized(-z), -erf_unnormalized(z))

    def test_against_quadrature(self):
        for z in (0.3, 1.1, 2.4):
            want = 2.0 * quad(lambda u: np.exp(-u * u), 0.0, z)[0]
            assert erf_unnormalized(z) == pytest.approx(want, rel=1e-10)


class TestScalarProfiles:
    def test_rho2_vanishes_at_t0(self):
        x = np.random.default_rng(0).standard_normal((20, 3)) * 3
        assert np.max(np.abs(profile_rho2(x, pp_at(0.0)))) == 0.0

    def test_a2_is_phi0_at_t0(self):
        x = np.random.default_rng(1).standard_normal((20, 3)) * 2
        assert np.allclose(profile_a2(x, pp_at(0.0)), phi0(x), rtol=1e-12)

    def test_rho1_is_phi0_at_t0(self):
        x = np.random.default_rng(2).standard_normal((20, 3)) * 2
        assert np.allclose(profile_rho1(x, pp_at(0.0)), phi0(x), rtol=1e-12)

    def test_a1_vanishes_at_t0(self):
        x = np.random.default_rng(3).standard_normal((20, 3)) * 2
        assert np.max(np.abs(profile_a1(x, pp_at(0.0)))) < 1e-15

    def test_rho1_matches_spectral_at_point(self, grid_profiles, unit_params):
        """Spot check at |x| = 2, t = 2 against the heat-wave multiplier route."""
        g = grid_profiles
        t = 2.0
        rho_L, _ = apply_heat_wave(forward_transform(phi0_field(g)),
                                   ScalarField.zeros(g, "spectral"),
                                   unit_params, t)
        vals = np.real(to_physical(rho_L).values)
        ix = int(np.argmin(np.abs(g.x1 - 2.0)))
        iz = int(np.argmin(np.abs(g.x1)))
        got = profile_rho1(np.array([g.x1[ix], 0.0, 0.0]), pp_at(t))
        assert float(got) == pytest.approx(vals[ix, iz, iz], rel=1e-3)

    def test_origin_continuity(self):
        """Series branch joins the direct branch smoothly near the origin."""
        t = 1.7
        for fn in (profile_rho1, profile_a1, profile_rho2):
            inner = fn(np.array([[5e-5, 0, 0]]), pp_at(t))[0]
            outer = fn(np.array([[2e-4, 0, 0]]), pp_at(t))[0]
            at0 = fn(np.zeros((1, 3)), pp_at(t))[0]
            assert np.isfinite(at0)
            assert inner == pytest.approx(outer, rel=1e-6)

    def test_all_profiles_match_spectral_l2(self, grid_profiles, unit_params):
        """Closed-form fidelity: rho_1, a_1, rho_2, a_2 vs the multiplier
        route at several times, relative L^2 below 1e-3."""
        g = grid_profiles
        p0 = forward_transform(phi0_field(g))
        zero = ScalarField.zeros(g, "spectral")
        pts = g.points()
        for t in (0.5, 2.0):
            rho1s, a1s = apply_heat_wave(p0, zero, unit_params, t)
            rho2s, a2s = apply_heat_wave(zero, p0, unit_params, t)
            for spec_f, closed in [(rho1s, profile_rho1), (a1s, profile_a1),
                                   (rho2s, profile_rho2), (a2s, profile_a2)]:
                sval = np.real(to_physical(spec_f).values)
                cval = closed(pts, pp_at(t)).reshape((g.n,) * 3)
                assert (np.linalg.norm(sval - cval)
                        / np.linalg.norm(cval)) < 1e-3

    @pytest.mark.parametrize("closed,l_order,want", [
        (profile_rho2, 0, -0.25),   # rho_2 = -w * K * phi0: l = 0 branch
        (profile_a2, 1, -0.75),     # a_2 = d_t w * K * phi0: l = 1 branch
    ])
    def test_profile_l2_slopes(self, closed, l_order, want):
        """Profile temporal behavior: ||d_t^l w * K * phi0||_L2 decays like
        (1+t)^{-5/4 + 1 - l/2}.  Run at c = 2 so the bounded oscillation
        factor has settled inside the [5, 40] window."""
        g = GridSpec(96, 200.0)
        pts = g.points()
        series = []
        for t in log_times(5.0, 40.0, 20):
            vals = closed(pts, pp_at(t, c=2.0)).reshape((g.n,) * 3)
            series.append((t, float(np.sqrt(np.sum(vals**2) * g.cell_volume))))
        fit = fit_decay(series, (5.0, 40.0), time_shift=1.0)
        assert fit.slope == pytest.approx(want, abs=0.1)

    def test_dalembert_self_consistency(self):
        """rho_1 equals the radial d'Alembert formula applied to K_nu(t)*phi0."""
        rng = np.random.default_rng(7)
        radii = rng.uniform(0.05, 15.0, 100)
        t, nu, c = 1.3, 1.0, 1.0
        s2 = 1.0 + nu * t

        def u0_radial(r):
            return (4.0 * np.pi * s2) ** -1.5 * np.exp(-r * r / (4.0 * s2))

        x = np.stack([radii, np.zeros(100), np.zeros(100)], axis=-1)
        want = radial_wave_first(u0_radial, x, c, t)
        got = profile_rho1(x, pp_at(t))
        assert np.max(np.abs(got - want)) < 1e-8 * np.max(np.abs(want))


class TestPiProfiles:
    def test_pi_a2_vanishes_at_origin(self):
        for t in (0.0, 0.5, 3.0):
            assert np.all(profile_pi_a2(np.zeros(3), pp_at(t)) == 0.0)

    def test_pi_a1_matches_spectral(self, grid_profiles, unit_params):
        """a_1 has zero total mass, so the periodic Pi applies directly."""
        g = grid_profiles
        t = 1.0
        _, a1s = apply_heat_wave(forward_transform(phi0_field(g)),
                                 ScalarField.zeros(g, "spectral"),
                                 unit_params, t)
        got = pi_op(a1s)
        want = profile_pi_a1(g.points(), pp_at(t)).reshape((g.n,) * 3 + (3,))
        for i in range(3):
            err = (np.linalg.norm(np.real(to_physical(got[i]).values) - want[..., i])
                   / max(np.linalg.norm(want), 1e-300))
            assert err < 1e-3

    def test_pi_a2_matches_spectral_difference(self, grid_profiles, unit_params):
        """Pi a_2 carries a time-independent monopole far field (|x|^-2 tail)
        that cannot wrap onto the torus; the localized difference
        Pi a_2(t) - Pi a_2(0) is the discretely comparable object."""
        g = grid_profiles
        t = 2.0
        p0 = forward_transform(phi0_field(g))
        _, a2s = apply_heat_wave(ScalarField.zeros(g, "spectral"), p0,
                                 unit_params, t)
        got = pi_op(a2s - p0)
        pts = g.points()
        want = (profile_pi_a2(pts, pp_at(t))
                - profile_pi_a2(pts, pp_at(0.0))).reshape((g.n,) * 3 + (3,))
        num = np.sqrt(sum(np.sum((np.real(to_physical(got[i]).values)
                                  - want[..., i]) ** 2) for i in range(3)))
        den = np.sqrt(np.sum(want**2))
        assert num / den < 1e-3

    def test_pi_a2_baseline_shell_theorem(self):
        """At t = 0, Pi a_2 = grad(Lap^-1 phi0) = x M(r)/(4 pi r^3) with M the
        radially enclosed mass: independent 1D quadrature oracle."""
        rng = np.random.default_rng(9)
        for r in rng.uniform(0.1, 12.0, 12):
            M = 4 * np.pi * quad(lambda s: phi0(np.array([s, 0, 0])) * s * s,
                                 0.0, r)[0]
            want = M / (4 * np.pi * r**2)
            got = profile_pi_a2(np.array([r, 0.0, 0.0]), pp_at(0.0))[0]
            assert got == pytest.approx(want, rel=1e-10)

    def test_pi_a2_difference_is_curl_free(self, grid_profiles):
        """The localized difference field samples to a gradient: curl ~ 0."""
        g = grid_profiles
        pts = g.points()
        diff = (profile_pi_a2(pts, pp_at(1.0))
                - profile_pi_a2(pts, pp_at(0.0))).reshape((g.n,) * 3 + (3,))
        vf = VectorField3(tuple(to_spectral(
            ScalarField(g, diff[..., i].astype(complex), "physical"))
            for i in range(3)))
        c = curl(vf)
        scale = max(l2_norm(vf), 1e-300)
        assert max(l2_norm(ci) for ci in c.components) / scale < 1e-8


class TestBiotSavartProfiles:
    def test_derivative_validated_by_finite_differences(self):
        """The hand-carried d_x_i of the potential term x F(r)/r^3 must match
        central differences (step 1e-5) before the closed form is an oracle."""
        pp = pp_at(0.7)
        rng = np.random.default_rng(4)
        pts = rng.uniform(-4, 4, (40, 3))
        pts = pts[np.linalg.norm(pts, axis=1) > 0.3]
        h = 1e-5
        for i in (1, 2, 3):
            got = profile_b_g(i, pts, pp)
            e = np.zeros(3)
            e[i - 1] = h
            fd = (bg_potential_term(i, pts + e, pp)
                  - bg_potential_term(i, pts - e, pp)) / (2 * h)
            s2 = 1.0 + pp.epsilon * pp.t
            first = (np.exp(-np.sum(pts**2, axis=-1) / (4 * s2)) / s2**1.5)
            want = (4 * np.pi) ** -1.5 * (first[:, None] * np.eye(3)[i - 1] - fd)
            assert np.max(np.abs(got - want)) < 1e-6

    def test_difference_divergence_free(self, grid_profiles):
        g = grid_profiles
        pts = g.points()
        diff = (profile_b_g(3, pts, pp_at(1.0))
                - profile_b_g(3, pts, pp_at(0.0))).reshape((g.n,) * 3 + (3,))
        vf = VectorField3(tuple(to_spectral(
            ScalarField(g, diff[..., i].astype(complex), "physical"))
            for i in range(3)))
        d = divergence(vf)
        assert l2_norm(d) / max(l2_norm(vf), 1e-300) < 1e-8

    def test_difference_curl_recovers_g(self, unit_params):
        """curl(B g_i(t) - B g_i(0)) = g_i(t) - g_i(0) on the grid."""
        g = GridSpec(64, 48.0)
        t = 1.0
        pts = g.points()
        diff = (profile_b_g(2, pts, pp_at(t))
                - profile_b_g(2, pts, pp_at(0.0))).reshape((g.n,) * 3 + (3,))
        vf = VectorField3(tuple(to_spectral(
            ScalarField(g, diff[..., i].astype(complex), "physical"))
            for i in range(3)))
        got = curl(vf)
        e2 = VectorField3((ScalarField.zeros(g, "spectral"),
                           forward_transform(phi0_field(g)),
                           ScalarField.zeros(g, "spectral")))
        g0 = curl(e2)
        want = apply_heat(g0, unit_params, t) - g0
        scale = max(l2_norm(want), 1e-300)
        for i in range(3):
            assert l2_norm(got[i] - want[i]) / scale < 1e-6

    def test_matches_biot_savart_difference(self, grid_profiles, unit_params):
        g = grid_profiles
        t = 1.0
        pts = g.points()
        for i in (1, 3):
            basis = [ScalarField.zeros(g, "spectral") for _ in range(3)]
            basis[i - 1] = forward_transform(phi0_field(g))
            g0 = curl(VectorField3(tuple(basis)))
            gt = apply_heat(g0, unit_params, t)
            got = biot_savart(gt - g0)
            want = (profile_b_g(i, pts, pp_at(t))
                    - profile_b_g(i, pts, pp_at(0.0))).reshape((g.n,) * 3 + (3,))
            num = np.sqrt(sum(np.sum((np.real(to_physical(got[j]).values)
                                      - want[..., j]) ** 2) for j in range(3)))
            den = np.sqrt(np.sum(want**2))
            assert num / den < 1e-3

    def test_baseline_isotropy_value(self):
        """B g_i(0) at the origin is (2/3) phi0(0) e_i (trace/isotropy)."""
        for i in (1, 2, 3):
            got = profile_b_g(i, np.zeros(3), pp_at(0.0))
            want = np.zeros(3)
            want[i - 1] = 2.0 / 3.0 * (4 * np.pi) ** -1.5
            assert np.allclose(got, want, atol=1e-12)

    def test_axis_validation(self):
        with pytest.raises(ValueError):
            profile_b_g(0, np.zeros(3), pp_at(1.0))
