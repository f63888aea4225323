import math

import numpy as np
import pytest

from src.core.eigensolver import (
    MIN_GRID_POINTS,
    Grid1D,
    closed_form_levels,
    convergence_order,
    degeneracy_check,
    fd_matrix,
    gauss_legendre,
    orthonormality_scan,
    radial_eigen,
    sturm_count,
)
from src.exceptions import GridTooCoarseWarning


class TestGaussLegendre:
    def test_low_orders(self):
        rule = gauss_legendre(1)
        assert rule.nodes.tolist() == pytest.approx([0.0])
        assert rule.weights.tolist() == pytest.approx([2.0])
        rule = gauss_legendre(2)
        assert rule.nodes == pytest.approx([-1 / math.sqrt(3), 1 / math.sqrt(3)])
        assert rule.weights == pytest.approx([1.0, 1.0])

    def test_monomials_integrated_exactly(self):
        for order in (3, 5, 12):
            rule = gauss_legendre(order)
            for k in range(2 * order):
                expected = 0.0 if k % 2 else 2.0 / (k + 1)
                assert rule.integrate(lambda x: x ** k) == pytest.approx(expected, abs=1e-13)

    def test_mapped_interval(self):
        rule = gauss_legendre(20).mapped(0.0, math.pi)
        assert rule.interval == (0.0, math.pi)
        assert rule.integrate(lambda x: np.sin(x) ** 2) == pytest.approx(math.pi / 2, abs=1e-13)

    def test_nodes_are_sorted_and_read_only(self):
        rule = gauss_legendre(16)
        assert np.all(np.diff(rule.nodes) > 0)
        assert rule.weights.sum() == pytest.approx(2.0)
        with pytest.raises(ValueError):
            rule.nodes[0] = 0.0

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            gauss_legendre(0)


class TestSturmCount:
    def test_matches_dense_eigenvalues(self, rng):
        d = rng.normal(size=30)
        e = rng.normal(size=29)
        dense = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        eig = np.linalg.eigvalsh(dense)
        for x in (-3.0, -0.5, 0.0, 1.2, 4.0):
            assert sturm_count(d, e, x) == int(np.sum(eig < x))

    def test_free_grid(self):
        d, e = fd_matrix(0, 0.0, Grid1D(MIN_GRID_POINTS))
        # 自由粒子的离散本征值 (4/h²)sin²(kh/2)
        assert sturm_count(d, e, 4.5) == 2


class TestRadialEigen:
    def test_free_channel(self):
        result = radial_eigen(0, 0.0, Grid1D(1024), count=4, richardson=True)
        assert result.eigenvalues == pytest.approx([1.0, 4.0, 9.0, 16.0], abs=1e-6)
        assert result.richardson
        assert result.error_estimate is not None

    def test_coulomb_channel(self):
        result = radial_eigen(0, 1.0, Grid1D(1024), count=3, richardson=True)
        assert result.eigenvalues == pytest.approx([0.0, 3.75, 8.0 + 8.0 / 9.0], abs=1e-5)

    def test_centrifugal_channel(self):
        result = radial_eigen(1, 1.0, Grid1D(1024), count=1, richardson=True)
        assert result.eigenvalues[0] == pytest.approx(3.75, abs=1e-5)

    @pytest.mark.parametrize("b", [0.0, 1.0, 2.0])
    @pytest.mark.parametrize("l", [0, 1, 2])
    def test_agrees_with_closed_form(self, l, b):
        result = radial_eigen(l, b, Grid1D(4096), count=4, richardson=True)
        expected = [value for _, value in closed_form_levels(l, b, 4)]
        assert np.max(np.abs(np.array(result.eigenvalues) - expected)) <= 1e-4

    def test_raw_grid_is_less_accurate(self):
        raw = radial_eigen(0, 1.0, Grid1D(256), count=1)
        extrapolated = radial_eigen(0, 1.0, Grid1D(256), count=1, richardson=True)
        assert abs(extrapolated.eigenvalues[0]) < abs(raw.eigenvalues[0])
        assert raw.error_estimate is None

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            radial_eigen(0, 1.0, Grid1D(MIN_GRID_POINTS - 1))
        with pytest.raises(ValueError):
            radial_eigen(0, 1.0, Grid1D(128), count=0)
        with pytest.raises(ValueError):
            radial_eigen(-1, 1.0, Grid1D(128))

    def test_coarse_grid_warns(self):
        with pytest.warns(GridTooCoarseWarning):
            radial_eigen(0, 1.0, Grid1D(MIN_GRID_POINTS), count=2, richardson=True, tolerance=1e-12)

    def test_tolerance_without_richardson_uses_half_grid(self):
        result = radial_eigen(0, 1.0, Grid1D(2049), count=1, tolerance=1.0)
        assert result.error_estimate is not None
        assert 0.0 < result.error_estimate < 1.0

    def test_closed_form_levels(self):
        assert closed_form_levels(1, 0.0, 2) == [(1, 4.0), (2, 9.0)]


class TestDiagnostics:
    def test_degeneracy_free(self):
        report = degeneracy_check(2, 0.0, 1e-4)
        assert report.passed
        assert set(report.entries[2].epsilon_by_channel) == {0, 1, 2}

    def test_degeneracy_perturbed(self):
        report = degeneracy_check(4, 1.0, 1e-4)
        assert report.passed, report.to_dict()["offending"]
        assert report.entries[0].closed_form == pytest.approx(-1.0)

    def test_degeneracy_rejects_bad_tolerance(self):
        with pytest.raises(ValueError):
            degeneracy_check(1, 1.0, 0.0)

    def test_orthonormality(self):
        report = orthonormality_scan(5)
        assert report.passed
        assert report.norms[(0, 0)] == pytest.approx(math.pi / 2)
        assert report.same_level
        with pytest.raises(ValueError):
            orthonormality_scan(10, quad_order=20)

    def test_orthonormality_reports_absolute_and_relative(self):
        report = orthonormality_scan(5, convention="standard")
        assert report.passed
        assert report.max_offdiag_abs <= 1e-12
        doc = report.to_dict()
        assert doc["max_offdiag"] == report.max_offdiag
        assert doc["max_offdiag_abs"] == report.max_offdiag_abs
        scaled = orthonormality_scan(5)
        assert scaled.max_offdiag <= 1e-12
        assert scaled.max_offdiag_abs >= 0.0

    def test_second_order_convergence(self):
        fit = convergence_order()
        assert fit.slope == pytest.approx(2.0, abs=0.1)
        assert all(x > y for x, y in zip(fit.errors, fit.errors[1:]))
