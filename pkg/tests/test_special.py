"""Tests for the boundary exponents n = 3 and n = 4."""

import numpy as np
import pytest

from src.errors import FitFailed, WindowTooClose
from src.similarity import (
    ProfileProblem,
    cube_logfit_n3,
    find_mu,
    fit_cube_log,
    fit_log_linear,
    logfit_n3,
    similarity_constant,
    majorant_slope_cubed,
    nonexistence_scan_n4,
)
from src.solver import integrate


class TestFitLogLinear:
    """Test the log-perturbed linear fit."""

    def test_synthetic_profile(self):
        """Exact C z |ln z|^p data is recovered."""
        C, p = 3.0 / np.sqrt(2.0), 1.0 / 3.0
        z = np.logspace(-6, -2, 60)
        fit_C, fit_p, rms = fit_log_linear(z, C * z * np.abs(np.log(z)) ** p)
        assert fit_C == pytest.approx(2.12132, abs=1e-5)
        assert fit_p == pytest.approx(1.0 / 3.0, abs=1e-10)
        assert rms < 1e-10

    def test_window_too_close(self):
        """A narrow window has no leverage on p."""
        z = np.linspace(1e-3, 1.01e-3, 10)
        with pytest.raises(WindowTooClose):
            fit_log_linear(z, z)

    def test_non_positive_profile(self):
        """Negative heights cannot be fitted."""
        z = np.logspace(-6, -2, 10)
        with pytest.raises(FitFailed):
            fit_log_linear(z, -z)

    def test_z_outside_unit_interval(self):
        """z must lie in (0, 1)."""
        with pytest.raises(FitFailed):
            fit_log_linear(np.array([0.5, 1.0, 2.0]), np.ones(3))


class TestFitCubeLog:
    """Test the leading-balance fit of the n = 3 profile."""

    def test_synthetic_profile(self):
        """Exact z (b^3 - 3 A |ln z|)^(1/3) data is recovered."""
        b, A = 2.5, 0.135
        z = np.logspace(-6, -2, 60)
        f = z * np.cbrt(b**3 - 3.0 * A * np.abs(np.log(z)))
        fit_b, fit_A, rms = fit_cube_log(z, f)
        assert fit_b == pytest.approx(b, rel=1e-10)
        assert fit_A == pytest.approx(A, rel=1e-8)
        assert rms < 1e-10

    def test_non_positive_profile(self):
        """Negative heights cannot be fitted."""
        with pytest.raises(FitFailed):
            fit_cube_log(np.logspace(-6, -2, 10), -np.ones(10))


class TestMajorant:
    """Test the majorant used in the n = 4 argument."""

    @pytest.mark.parametrize("f", [1e-6, 0.5, 1.0, 10.0])
    def test_slope_is_negative(self, f):
        """No increasing branch leaves a zero."""
        assert majorant_slope_cubed(f) < 0.0

    def test_value(self):
        """(f')^3 = -3 / (2 f)."""
        assert majorant_slope_cubed(2.0) == pytest.approx(-0.75)

    def test_non_positive_f(self):
        """f must be positive."""
        with pytest.raises(ValueError):
            majorant_slope_cubed(0.0)


class TestNonexistenceScan:
    """Test the n = 4 scan."""

    def test_requires_n4(self):
        """Other exponents are rejected."""
        with pytest.raises(ValueError):
            nonexistence_scan_n4([-2.0], problem=ProfileProblem(n=3.0))

    def test_requires_negative_mu(self):
        """mu must be negative."""
        with pytest.raises(ValueError):
            nonexistence_scan_n4([1.0])

    @pytest.mark.slow
    @pytest.mark.parametrize("eps", [1e-11, 5e-12])
    def test_profiles_stay_positive(self, eps):
        """No n = 4 shot reaches zero, whatever the regularisation."""
        rows = nonexistence_scan_n4(problem=ProfileProblem(n=4.0, eps=eps))
        assert len(rows) == 4
        assert all(row.min_f > 0.0 for row in rows)


@pytest.mark.slow
class TestLogFitN3:
    """Test the n = 3 fits on a critical shot."""

    def setup_method(self):
        """Critical n = 3 shot."""
        self.critical = find_mu(ProfileProblem(n=3.0), -10.0, 0.0, 1e-10)

    def test_coefficient_on_default_window(self):
        """C is within 20% of 3/sqrt(2) on the default window."""
        fit = logfit_n3(self.critical.best.traj, self.critical.y0)
        assert fit.C == pytest.approx(3.0 / np.sqrt(2.0), rel=0.2)
        assert fit.window[0] < fit.window[1]

    def test_log_correction_lowers_slope(self):
        """f/z drifts down towards the interface, so the fitted exponent is negative."""
        for window in ((1e-3, 1e-1), (1e-5, 1e-3)):
            assert logfit_n3(self.critical.best.traj, self.critical.y0, window).p < 0.0

    def test_leading_balance(self):
        """Close to the interface the cube law recovers A = alpha y0."""
        fit = cube_logfit_n3(self.critical.best.traj, self.critical.y0)
        assert fit.relative_error(similarity_constant(3.0) * self.critical.y0) < 0.2
        assert fit.b > 0.0



class TestLogFitWindow:
    """Test fit window validation."""

    def test_window_must_be_ordered(self):
        """Window bounds must increase and stay below 0.2."""
        traj = integrate(lambda t, y: np.zeros(3), 0.0, [1.0, 0.0, 0.0], 1.0)
        with pytest.raises(ValueError):
            logfit_n3(traj, 1.0, (1e-2, 1e-4))
        with pytest.raises(ValueError):
            logfit_n3(traj, 1.0, (1e-3, 0.5))
