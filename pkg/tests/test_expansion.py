"""Tests for interface expansions and backward shooting."""

from dataclasses import replace

import numpy as np
import pytest

from src.errors import NonPositiveZ, OrbitMissing, OutOfRange, SeedUnderflow
from src.similarity import (
    CubicForm,
    ExpansionParams,
    Outcome,
    PeriodicOrbit,
    ProfileProblem,
    admissible_window,
    b0,
    backshoot_bundle,
    backshoot_oscillatory,
    backshoot_positive,
    bundle_offset,
    default_D_grid,
    eval_expansion,
    find_mu,
    hn,
    interface_conditions,
    residual_order,
    scan_D,
    scan_s0,
    seed_floor,
    solve_l,
)
from src.solver import IntegratorConfig, integrate


def _harmonic_orbit(n):
    traj = integrate(lambda s, x: np.array([x[1], -x[0], 0.0]), 0.0, [1.0, 0.0, -1.0], 2.0 * np.pi,
                     IntegratorConfig(rtol=1e-10, atol=1e-12))
    return PeriodicOrbit(n=n, period=2.0 * np.pi, traj=traj)


class TestCharacteristicCubic:
    """Test the interface coefficient and the cubic root."""

    def test_b0_at_n2(self):
        """B0(2)^2 = 8/3."""
        assert b0(2.0) == pytest.approx(1.632993, abs=1e-6)

    @pytest.mark.parametrize("n", [1.5, 3.0, 1.0])
    def test_out_of_range(self, n):
        """The expansion needs 3/2 < n < 3."""
        with pytest.raises(OutOfRange):
            b0(n)
        with pytest.raises(OutOfRange):
            solve_l(n)

    @pytest.mark.parametrize(
        "n, expected",
        [(2.0, 2.15159), (1.8, 2.1128), (1.7, 2.08074)],
    )
    def test_scaled_roots(self, n, expected):
        """Reported roots of the scaled cubic."""
        l, admissible = solve_l(n)
        assert l == pytest.approx(expected, abs=2e-4)
        assert admissible
        assert hn(n, l) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n, expected", [(1.8, 2.1241), (1.7, 2.0967)])
    def test_exact_roots(self, n, expected):
        """Roots of the exact cubic."""
        l, _ = solve_l(n, CubicForm.EXACT)
        assert l == pytest.approx(expected, abs=1e-3)

    def test_forms_agree_at_n2(self):
        """Both forms coincide at n = 2."""
        assert solve_l(2.0, CubicForm.EXACT)[0] == pytest.approx(solve_l(2.0)[0], abs=1e-12)

    def test_admissible_window(self):
        """Window is (m, 1 + m)."""
        assert admissible_window(2.0) == pytest.approx((1.5, 2.5))


class TestEvalExpansion:
    """Test the two-term series."""

    def test_leading_term(self):
        """D = 0 gives B0 z^m and its derivatives."""
        params = ExpansionParams.for_exponent(2.0)
        z = 0.04
        f, f1, f2, f3 = eval_expansion(params, z)
        B0 = b0(2.0)
        assert f == pytest.approx(B0 * z**1.5)
        assert f1 == pytest.approx(1.5 * B0 * z**0.5)
        assert f2 == pytest.approx(0.75 * B0 * z**-0.5)
        assert f3 == pytest.approx(-0.375 * B0 * z**-1.5)

    def test_correction_term(self):
        """D adds D z^l."""
        params = ExpansionParams.for_exponent(2.0, D=2.0)
        z = 0.01
        base = eval_expansion(params.with_D(0.0), z)
        assert eval_expansion(params, z)[0] - base[0] == pytest.approx(2.0 * z**params.l)

    @pytest.mark.parametrize("z", [0.0, -0.1])
    def test_non_positive_z(self, z):
        """z must be positive."""
        with pytest.raises(NonPositiveZ):
            eval_expansion(ExpansionParams.for_exponent(2.0), z)

    def test_inadmissible(self):
        """An exponent outside the window is rejected."""
        params = ExpansionParams(n=2.0, m=1.5, B0=b0(2.0), l=3.0, D=1.0, admissible=False)
        with pytest.raises(OutOfRange):
            eval_expansion(params, 0.01)

    def test_inconsistent_params(self):
        """B0 must match n."""
        with pytest.raises(ValueError):
            ExpansionParams(n=2.0, m=1.5, B0=1.0, l=2.15, D=0.0, admissible=True)


class TestResidualOrder:
    """Test the residual decay gate."""

    def test_explicit_solution(self):
        """D = 0 leaves the residual -z, slope 1."""
        fit = residual_order(ExpansionParams.for_exponent(2.0))
        assert fit.slope == pytest.approx(1.0, abs=1e-6)
        assert fit.passes

    @pytest.mark.parametrize("n", [1.7, 1.8, 2.0])
    @pytest.mark.parametrize("D", [1.0, -1.0])
    def test_bundle_members(self, n, D):
        """With the exact root the residual decays like z^(2(l-m))."""
        params = ExpansionParams.for_exponent(n, D)
        fit = residual_order(params, np.logspace(-8, -4, 41))
        assert fit.predicted == pytest.approx(2.0 * (params.l - params.m))
        assert fit.slope == pytest.approx(fit.predicted, abs=0.1)
        assert fit.passes

    def test_leading_residual_coefficient(self):
        """The surviving term is (n/2)(n-1)(D/B0)^2 z^(2(l-m))."""
        params = ExpansionParams.for_exponent(1.8, 1.0)
        z = 1e-10
        f, _, _, f3 = eval_expansion(params, z)
        expected = 0.9 * 0.8 * (1.0 / params.B0) ** 2 * z ** (2.0 * (params.l - params.m))
        assert f**0.8 * f3 + 1.0 == pytest.approx(expected, rel=1e-2)

    def test_perturbed_root_fails_gate(self):
        """Moving l off the root leaves a z^(l-m) residual."""
        params = ExpansionParams.for_exponent(1.7, 1.0)
        params = replace(params, l=params.l + 0.1)
        fit = residual_order(params, np.logspace(-8, -4, 41))
        assert fit.slope < fit.threshold
        assert not fit.passes

    def test_scaled_cubic_fails_gate(self):
        """Away from n = 2 the scaled root leaves an uncancelled correction."""
        params = ExpansionParams.for_exponent(1.8, 1.0, CubicForm.SCALED)
        fit = residual_order(params, np.logspace(-8, -4, 41))
        assert fit.slope == pytest.approx(params.l - params.m, abs=0.1)
        assert fit.slope < fit.threshold
        assert not fit.passes


class TestBackshootSetup:
    """Test seeding checks that run before any integration."""

    def test_bundle_offset_unchanged_for_small_d(self):
        """Small D keeps the requested offset."""
        params = ExpansionParams.for_exponent(2.0, 1e-3)
        assert bundle_offset(params, 1e-3) == 1e-3
        assert bundle_offset(params.with_D(0.0), 1e-3) == 1e-3

    def test_bundle_offset_shrinks_for_large_d(self):
        """Large D shrinks the offset until the correction is a tenth of the leading term."""
        params = ExpansionParams.for_exponent(2.0, 1e3)
        offset = bundle_offset(params, 1e-3)
        assert offset < 1e-3
        assert 1e3 * offset ** (params.l - params.m) == pytest.approx(0.1 * params.B0)

    def test_bundle_offset_floor(self):
        """Huge D clamps the offset at the seed floor instead of shrinking further."""
        params = ExpansionParams.for_exponent(2.0, 1e6)
        floor = seed_floor(params, 1e-11)
        assert params.B0 * floor ** params.m == pytest.approx(1e-9)
        assert bundle_offset(params, 1e-3, 1e-11) == pytest.approx(floor)

    def test_default_grid(self):
        """Symmetric log grid with zero in the middle."""
        grid = default_D_grid()
        assert len(grid) == 41
        assert grid[20] == 0.0
        assert grid[0] == pytest.approx(-1e3)
        assert grid[-1] == pytest.approx(1e3)
        assert np.all(np.diff(grid) > 0)

    def test_seed_underflow(self):
        """A large negative D makes the seed negative."""
        with pytest.raises(SeedUnderflow):
            backshoot_positive(2.0, -1e3, 1e-3)

    def test_delta_range(self):
        """delta must lie in [1e-4, 1e-1]."""
        with pytest.raises(ValueError):
            backshoot_positive(2.0, 0.0, 0.5)

    def test_failed_member_kept_in_scan(self):
        """A member whose seed is negative keeps a row with its error as status."""
        scan = scan_D(2.0, np.array([-1e6]), refine=False)
        (row,) = scan.rows
        assert row.status == "SeedUnderflow"
        assert not row.ok
        assert np.isnan(row.f0) and np.isnan(row.slope0)
        assert scan.failed == (row,)
        assert scan.brackets == ()
        assert np.isnan(scan.min_abs_slope)

    def test_orbit_missing(self):
        """Oscillatory seeding needs an orbit."""
        with pytest.raises(OrbitMissing):
            backshoot_oscillatory(2.0, 0.0, 1e-3, None)

    def test_orbit_for_other_exponent(self):
        """An orbit tabulated at another n is rejected."""
        orbit = _harmonic_orbit(1.8)
        with pytest.raises(OrbitMissing):
            backshoot_oscillatory(1.7, 0.0, 1e-3, orbit)


@pytest.mark.slow
class TestBackshoot:
    """Test backward shots to the origin."""

    def test_explicit_solution_reaches_origin(self):
        """The D = 0 member reaches y = 0 with finite positive height."""
        state = backshoot_positive(2.0, 0.0)
        assert np.all(np.isfinite(state.origin))
        assert state.f_origin > 0.0
        rescaled = state.unit_height()
        assert rescaled.state(0.0)[0] == pytest.approx(1.0, rel=1e-9)
        assert state.interface_slope == -state.slope_origin

    def test_interface_conditions_at_seed(self):
        """Height, slope and flux are small at the seed point."""
        conditions = interface_conditions(backshoot_positive(2.0, 0.0), 2.0)
        assert conditions.all_below(1e-1)

    def test_scan_rows_in_grid_order(self):
        """A short D scan keeps grid order."""
        grid = np.array([-1.0, 0.0, 1.0])
        scan = scan_D(2.0, grid, refine=False)
        assert [row.D for row in scan.rows] == [-1.0, 0.0, 1.0]

    def test_phase_scan_over_one_period(self):
        """Phases cover one period in order and the best phase has the smallest slope."""
        orbit = _harmonic_orbit(1.7)
        scan = scan_s0(1.7, orbit, count=6)
        phases = [row[0] for row in scan.rows]
        assert phases == pytest.approx(np.linspace(0.0, 2.0 * np.pi, 6, endpoint=False))
        assert scan.s0_star in phases
        assert scan.min_abs_slope == pytest.approx(min(abs(row[2]) for row in scan.rows))

    def test_failed_member_does_not_break_brackets(self):
        """Brackets skip failed rows and join their successful neighbours."""
        scan = scan_D(2.0, np.array([-1e6, -1.0, 0.0, 1.0]), refine=False)
        assert [row.ok for row in scan.rows] == [False, True, True, True]
        assert scan.min_abs_slope == pytest.approx(min(abs(r.slope0) for r in scan.rows[1:]))

    def test_continuity_in_D(self):
        """Members at D = +-1e-6 reach the origin where the D = 0 member does."""
        reference = backshoot_positive(2.0, 0.0).origin
        for D in (-1e-6, 1e-6):
            origin = backshoot_positive(2.0, D).origin
            assert np.allclose(origin, reference, rtol=1e-4, atol=0.0)

    def test_seed_offset_convergence(self):
        """Halving the seed offset changes the terminal state by less each time."""
        origins = [backshoot_positive(2.0, 0.5, delta).origin for delta in (4e-3, 2e-3, 1e-3)]
        first = np.linalg.norm(origins[1] - origins[0]) / np.linalg.norm(origins[0])
        second = np.linalg.norm(origins[2] - origins[1]) / np.linalg.norm(origins[1])
        assert second < first

    @pytest.mark.parametrize("D, sign", [(300.0, 1.0), (-300.0, -1.0)])
    def test_large_D_slope_signs(self, D, sign):
        """The interface-frame slope at the origin takes the sign of a large D."""
        state = backshoot_bundle(1.9, D)
        assert np.sign(state.interface_slope) == sign
        assert np.sign(state.slope_origin) == -sign


@pytest.mark.slow
class TestForwardBackwardConsistency:
    """Test that backward shots reproduce forward critical profiles."""

    def test_rescaled_bundle_member_matches_forward_profile(self):
        """At n = 1.9 the D* member rescaled to f(0) = 1 is the forward critical profile."""
        n = 1.9
        scan = scan_D(n)
        assert scan.brackets
        critical = find_mu(ProfileProblem(n=n), -1.0, 0.0, 1e-12)

        candidates = []
        for D in scan.roots:
            state = backshoot_bundle(n, D)
            if state.f_origin > 0:
                candidates.append((state, state.unit_height()))
        assert candidates
        state, rescaled = min(candidates, key=lambda c: abs(c[1].mu - critical.mu_star))
        assert abs(state.slope_origin) < 1e-6
        assert rescaled.mu == pytest.approx(critical.mu_star, rel=1e-3)
        assert rescaled.y0 == pytest.approx(critical.y0, rel=1e-3)

        ys = np.linspace(0.0, 0.9 * critical.y0, 50)
        forward = critical.best.traj.sample(ys)[:, 0]
        backward = np.array([rescaled.state(y)[0] for y in ys])
        assert np.allclose(backward, forward, rtol=1e-3, atol=0.0)


@pytest.mark.slow
class TestInterfaceConditions:
    """Test height, slope and flux at the interface of critical forward shots."""

    FINE = IntegratorConfig(rtol=1e-12, atol=1e-16)

    @pytest.mark.parametrize("n", [1.8, 2.0])
    def test_conditions_vanish(self, n):
        """With the regularisation at 1e-14 all three conditions hold to 1e-4."""
        problem = ProfileProblem(n=n, eps=1e-14)
        critical = find_mu(problem, -1.0, 0.0, 1e-12, self.FINE)
        conditions = interface_conditions(critical.best, n, problem.eps)
        assert conditions.all_below(1e-4)

    def test_contact_angle_at_n3(self):
        """At n = 3 the slope stays bounded away from zero."""
        critical = find_mu(ProfileProblem(n=3.0), -10.0, 0.0, 1e-10)
        best = critical.best
        assert best.outcome == Outcome.UNDERSHOOT
        conditions = interface_conditions(best, 3.0)
        assert abs(conditions.height) < 1e-6
        assert abs(conditions.slope) > 0.1
