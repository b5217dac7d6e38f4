import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liqgames import (
    AssumptionError,
    InvalidInputError,
    find_x_hat,
    make_constant_coefficients,
    make_exponential_sellers,
    make_two_sided,
    psi,
    solve_mfg,
    solve_mu_for_c,
    solve_no_dropout_baseline,
    solve_nplayer,
    solve_riccati,
    terminal_rate,
)
from liqgames.equilibrium import _terminal_root_c

from _oracles import rhs_reproduction_error, terminal_rate_from_measure


class TestTerminalRate:
    def test_at_zero_level(self, dist_one, bundle0):
        got = terminal_rate(0.0, dist_one, bundle0.alpha_T, 5.0)
        assert abs(got - bundle0.alpha_T / 5.0 * 1.5) < 1e-14

    def test_one_sided_closed_form(self, dist_one, bundle0):
        # q0(0) = 1 so the rate reduces to alpha_T/eta_T * mean * exp(-c/mean)
        for c in (0.0, 0.5, 1.3, 4.0):
            expect = bundle0.alpha_T / 5.0 * 1.5 * math.exp(-c / 1.5)
            assert abs(terminal_rate(c, dist_one, bundle0.alpha_T, 5.0) - expect) < 1e-12

    def test_full_mass_tails_reduce_to_linear(self, dist_one, bundle0):
        from liqgames.equilibrium import _FullMassTails

        tails = _FullMassTails(dist_one.mean)
        for c in (0.0, 0.7, 1.5):
            expect = bundle0.alpha_T / 5.0 * (1.5 - c)
            assert abs(terminal_rate(c, tails, bundle0.alpha_T, 5.0) - expect) < 1e-12

    def test_strictly_decreasing_in_level(self, dist_two, bundle0):
        cs = np.linspace(0.0, 3.0, 10)
        vals = [terminal_rate(c, dist_two, bundle0.alpha_T, 5.0) for c in cs]
        assert np.all(np.diff(vals) < 0)

    def test_negative_level_rejected(self, dist_one, bundle0):
        with pytest.raises(InvalidInputError):
            terminal_rate(-0.1, dist_one, bundle0.alpha_T, 5.0)


class TestBackwardSolve:
    def test_zero_mean_gives_zero_rate(self, coeffs_std, bundle0):
        d0 = make_two_sided(0.5, 1.0, 0.5, 1.0)
        mu, g0 = solve_mu_for_c(0.0, coeffs_std, d0, bundle0)
        assert np.all(mu == 0.0) and g0 == 0.0

    def test_sign_preserved_for_any_level(self, coeffs_std, dist_one, bundle0):
        for c in (0.0, 0.3, 1.0, 2.5):
            mu, _ = solve_mu_for_c(c, coeffs_std, dist_one, bundle0)
            assert np.all(mu > 0)

    @given(st.floats(0.0, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_sign_preservation_property(self, c):
        co = make_constant_coefficients(5.0, 10.0, 5.0, 1.0, 300)
        d = make_exponential_sellers(1.5)
        b = solve_riccati(co, 0.0)
        mu, _ = solve_mu_for_c(c, co, d, b)
        mu_T = mu[-1]
        if mu_T > 0:
            assert np.all(mu > 0)
        elif mu_T == 0:
            assert np.all(mu == 0)

    def test_two_sided_exponential_bounds(self, coeffs_std, dist_one, bundle0, eq_one):
        # e^{-K1 (T-t)} eta_T/eta_t |mu_T| <= |mu_t| <= |mu_T| e^{K2 (T-t)}
        rem = 1.0 - eq_one.t
        lo = np.exp(-eq_one.K1 * rem) * np.abs(eq_one.mu_T)
        hi = np.abs(eq_one.mu_T) * np.exp(eq_one.K2 * rem)
        assert np.all(np.abs(eq_one.mu) >= lo - 1e-12)
        assert np.all(np.abs(eq_one.mu) <= hi + 1e-12)

    def test_bound_constants_formula(self, eq_one, eq_n7):
        assert eq_one.K1 == 0.0
        assert abs(eq_one.K2 - (1.0 / 5.0) * (10.0 + 5.0)) < 1e-14
        d = eq_n7.delta
        assert abs(eq_n7.K1 - d * 10.0 / 5.0) < 1e-14
        assert abs(eq_n7.K2 - (1.0 / 5.0) * ((1 + d) * 10.0 + 5.0)) < 1e-14


class TestPsi:
    def test_negative_at_origin(self, coeffs_std, dist_one, dist_two, bundle0):
        assert psi(0.0, coeffs_std, dist_one, bundle0) < 0
        assert psi(0.0, coeffs_std, dist_two, bundle0) < 0

    def test_terminal_root_is_fixed_level(self, coeffs_std, dist_two, bundle0):
        # at the level where the terminal rate vanishes the whole rate is zero,
        # so psi(c0) = c0 > 0
        c0 = _terminal_root_c(dist_two, dist_two.mean)
        val = psi(c0, coeffs_std, dist_two, bundle0)
        assert c0 > 0 and abs(val - c0) < 1e-9

    def test_zero_mean(self, coeffs_std, bundle0):
        d0 = make_two_sided(0.5, 1.0, 0.5, 1.0)
        assert psi(0.0, coeffs_std, d0, bundle0) == 0.0

    def test_strictly_increasing(self, coeffs_std, dist_one, bundle0, eq_one):
        cs = np.linspace(0.0, 2.0 * eq_one.x_hat, 20)
        vals = [psi(c, coeffs_std, dist_one, bundle0) for c in cs]
        assert np.all(np.diff(vals) > 0)

    def test_negative_c_rejected(self, coeffs_std, dist_one, bundle0):
        with pytest.raises(InvalidInputError):
            psi(-1.0, coeffs_std, dist_one, bundle0)


class TestFindXHat:
    def test_one_sided_root(self, coeffs_std, dist_one, bundle0, eq_one):
        assert 0 < eq_one.x_hat < dist_one.supp_upper
        assert abs(eq_one.psi_value) <= 1e-9
        assert abs(psi(eq_one.x_hat, coeffs_std, dist_one, bundle0)) <= 1e-9

    def test_two_sided_root(self, dist_two, eq_two):
        assert 0 < eq_two.x_hat < dist_two.supp_upper
        assert abs(eq_two.psi_value) <= 1e-9

    def test_rejects_nonpositive_mean(self, coeffs_std, bundle0):
        with pytest.raises(InvalidInputError):
            find_x_hat(coeffs_std, make_two_sided(0.5, 1.0, 0.5, 1.0), bundle0)

    def test_terminal_rate_consistency(self, dist_one, eq_one):
        expect = terminal_rate(eq_one.x_hat, dist_one, eq_one.bundle.alpha_T, 5.0)
        assert eq_one.mu_T == expect  # exact: same call used to seed the solve

    def test_backward_state_terminal_values(self, eq_one):
        assert eq_one.v_state[-1] == 0.0
        assert eq_one.g_state[-1] == 0.0
        assert eq_one.mu[-1] == eq_one.mu_T

    def test_terminal_rate_against_measure_quadrature(self, eq_one, eq_two):
        assert abs(terminal_rate_from_measure(eq_one) - eq_one.mu_T) < 1e-6
        assert abs(terminal_rate_from_measure(eq_two) - eq_two.mu_T) < 1e-6


class TestSolveMfg:
    def test_one_sided_positive_rate(self, eq_one):
        assert np.all(eq_one.mu > 0)
        assert eq_one.delta == 0.0 and eq_one.dropout

    def test_two_sided_positive_rate(self, eq_two):
        assert np.all(eq_two.mu > 0)

    def test_zero_mean_short_circuit(self, coeffs_std):
        eq = solve_mfg(coeffs_std, make_two_sided(0.5, 1.0, 0.5, 1.0))
        assert np.all(eq.mu == 0.0) and eq.x_hat == 0.0

    def test_reflection_is_exact(self, coeffs_std, eq_one):
        buyers = make_two_sided(0.0, 1.0, 1.0, 1.5)
        eq_b = solve_mfg(coeffs_std, buyers)
        assert np.max(np.abs(eq_b.mu + eq_one.mu)) <= 1e-12
        assert abs(eq_b.x_hat + eq_one.x_hat) <= 1e-12
        assert np.all(eq_b.mu < 0)
        assert np.max(np.abs(eq_b.f + eq_one.f)) <= 1e-12

    def test_grid_refinement(self, coeffs_std, coeffs_fine, dist_one, eq_one):
        eq4 = solve_mfg(coeffs_fine, dist_one)
        assert np.max(np.abs(eq_one.mu - eq4.mu[::2])) <= 1e-6

    def test_rhs_reproduction(self, eq_one, eq_two):
        assert rhs_reproduction_error(eq_one) <= 1e-6
        assert rhs_reproduction_error(eq_two) <= 1e-6

    def test_f_terminal_matches_root(self, eq_one):
        # the g-state of the backward sweep reproduces the root at bisection
        # tolerance; the trapezoid level curve agrees at quadrature tolerance
        assert abs(eq_one.g_state[0] - eq_one.x_hat) <= 1e-9
        assert abs(eq_one.f[-1] - eq_one.x_hat) <= 2e-6


class TestSolveNPlayer:
    def test_seven_players(self, pos7, eq_n7):
        assert eq_n7.delta == pytest.approx(1.0 / 7.0, abs=0)
        assert np.all(eq_n7.mu > 0)
        assert 0 < eq_n7.x_hat < max(pos7)

    def test_rhs_reproduction(self, eq_n7):
        # empirical tails are step functions: the trapezoid oracle picks up
        # O(dt) noise at each atom crossing, unlike the smooth presets
        assert rhs_reproduction_error(eq_n7) <= 5e-4

    def test_single_player_self_consistency(self):
        # N = 1 needs eta - kappa > 0 and lambda - kappa >= 0
        co = make_constant_coefficients(5.0, 2.0, 5.0, 1.0, 2000)
        eq = solve_nplayer(co, [1.0])
        from liqgames import fixed_point_residual

        assert fixed_point_residual(eq) <= 1e-6
        assert eq.x_hat < 1.0

    def test_duplicate_positions_match_equal_atoms(self, coeffs_std):
        eq_a = solve_nplayer(coeffs_std, [0.9, 0.9, 0.9])
        eq_b = solve_nplayer(coeffs_std, [0.9, 0.9, 0.9 + 0.0])
        assert np.array_equal(eq_a.mu, eq_b.mu)

    def test_permutation_invariance(self, coeffs_std):
        eq_a = solve_nplayer(coeffs_std, [0.5, 1.5, 2.5])
        eq_b = solve_nplayer(coeffs_std, [2.5, 0.5, 1.5])
        assert np.array_equal(eq_a.mu, eq_b.mu)
        assert eq_a.x_hat == eq_b.x_hat

    def test_assumption_violation_raises(self, coeffs_std):
        with pytest.raises(AssumptionError):
            solve_nplayer(coeffs_std, [1.0])  # delta = 1: eta - kappa < 0


class TestBaseline:
    def test_ordering_against_dropout(self, eq_one, base_one):
        assert eq_one.mu[0] < base_one.mu[0]
        assert eq_one.mu_T > base_one.mu_T

    def test_two_sided_ordering(self, coeffs_std, dist_two, eq_two):
        base = solve_no_dropout_baseline(coeffs_std, dist_two)
        assert eq_two.mu[0] < base.mu[0]
        assert eq_two.mu_T > base.mu_T

    def test_zero_mean(self, coeffs_std):
        base = solve_no_dropout_baseline(coeffs_std, make_two_sided(0.5, 1, 0.5, 1))
        assert np.all(base.mu == 0.0)

    def test_linear_terminal_map_and_iterations(self, base_one, dist_one):
        assert not base_one.dropout
        assert base_one.iterations <= 60
        assert 0 < base_one.x_hat < dist_one.mean
        # terminal value equals alpha_T/eta_T (mean - x_hat)
        expect = base_one.bundle.alpha_T / 5.0 * (1.5 - base_one.x_hat)
        assert abs(base_one.mu_T - expect) < 1e-12

    def test_rhs_reproduction(self, base_one):
        assert rhs_reproduction_error(base_one) <= 1e-6

    def test_reflected_baseline(self, coeffs_std, base_one):
        buyers = make_two_sided(0.0, 1.0, 1.0, 1.5)
        base_b = solve_no_dropout_baseline(coeffs_std, buyers)
        assert np.max(np.abs(base_b.mu + base_one.mu)) <= 1e-12


class TestEmpiricalLevels:
    def test_all_positive_atoms_bracket(self, coeffs_std):
        eq = solve_nplayer(coeffs_std, [0.5, 1.0, 2.0, 4.0])
        assert 0 < eq.x_hat < 4.0

    def test_mixed_sign_atoms(self, coeffs_std):
        eq = solve_nplayer(coeffs_std, [-0.5, 1.0, 2.0, 3.5])
        assert np.all(eq.mu > 0)
        assert 0 < eq.x_hat < 3.5


@pytest.fixture(scope="module")
def coeffs_lin():
    from liqgames import CoefficientSet

    g = np.linspace(0.0, 1.0, 2001)
    return CoefficientSet(
        T=1.0, grid=g,
        eta=5.0 + 2.0 * g, kappa=10.0 - 3.0 * g, lam=5.0 + 0.0 * g,
        eta_dot=2.0 + 0.0 * g, kappa_dot=-3.0 + 0.0 * g,
    )


class TestTimeVaryingCoefficients:
    """Linear-in-time coefficients exercise the eta_dot / kappa_dot terms the
    constant presets leave at zero; linear interpolation is exact for them."""

    def test_duality_and_positivity(self, coeffs_lin):
        for delta in (0.0, 1.0 / 7.0):
            b = solve_riccati(coeffs_lin, delta)
            assert abs(b.h_T * b.alpha_T - 1.0) < 1e-12
            assert np.all(b.h_dot > 0)

    def test_equilibrium_consistency(self, coeffs_lin, dist_one):
        from liqgames import fixed_point_residual, player_path

        from _oracles import adjoint_reconstruction_error

        eq = solve_mfg(coeffs_lin, dist_one)
        assert np.all(eq.mu > 0)
        assert abs(eq.psi_value) <= 1e-9
        assert rhs_reproduction_error(eq) <= 1e-6
        assert fixed_point_residual(eq, 400) <= 5e-4
        for x in (0.2, 0.8, 2.0):
            assert adjoint_reconstruction_error(player_path(x, eq), eq) <= 1e-6
        rem = 1.0 - eq.t
        lo = np.exp(-eq.K1 * rem) * (coeffs_lin.eta[-1] / coeffs_lin.eta) * abs(eq.mu_T)
        hi = abs(eq.mu_T) * np.exp(eq.K2 * rem)
        assert np.all(np.abs(eq.mu) >= lo - 1e-12)
        assert np.all(np.abs(eq.mu) <= hi + 1e-12)
