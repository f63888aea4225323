import math
from fractions import Fraction

import numpy as np
import pytest

from src.core.expansion import (
    PUBLISHED_TABLE1,
    check_expansion_quadrature,
    connection_matrix,
    expand,
    expand_by_quadrature,
    find_reproducing_convention,
    table1,
    table1_diff,
    verify_sl,
)
from src.core.polycore import PolyB
from src.core.specfun import GegenbauerConvention, assoc_legendre, psi_chi
from src.core.verify import sample_points
from src.exceptions import PoleError, QuantumNumberError

STD = GegenbauerConvention.STANDARD
PAPER = GegenbauerConvention.PAPER_RODRIGUES


def poly(*coeffs):
    return PolyB(Fraction(c) for c in coeffs)


class TestExpand:
    def test_k1_ground(self):
        row = expand(1, 0, PAPER)
        assert dict(row.coeffs) == {0: poly(1), 1: poly(0, 1)}

    def test_k3_ground(self):
        row = expand(3, 0, PAPER)
        assert row.coefficient(3) == poly(0, "-2/5", 0, "1/8")
        assert row.coefficient(1) == poly(0, "9/10")

    def test_standard_convention_scales_coefficients(self):
        row = expand(2, 0, STD)
        assert dict(row.coeffs) == {0: poly(2), 1: poly(0, -1), 2: poly(0, 0, "4/9")}

    def test_reconstruction_is_exact(self):
        for conv in (STD, PAPER):
            for K in range(8):
                for lt in range(K + 1):
                    assert expand(K, lt, conv).reconstruct() == psi_chi(K, lt)

    def test_row_invariants(self):
        for K in range(7):
            for lt in range(K + 1):
                row = expand(K, lt, PAPER)
                assert row.coefficient(lt) == poly(1)
                for l, c in row.coeffs.items():
                    assert c.degree <= l - lt
                std_lead = expand(K, lt, STD).coefficient(lt)
                assert std_lead.is_constant() and not std_lead.is_zero()

    def test_to_json(self):
        doc = expand(2, 1).to_json()
        assert doc == {
            "K": 2,
            "l_tilde": 1,
            "convention": "paper",
            "coeffs": [{"l": 1, "poly": ["1"]}, {"l": 2, "poly": ["0", "2/3"]}],
        }

    def test_invalid_level(self):
        with pytest.raises(QuantumNumberError):
            expand(2, 3)


class TestTable1:
    def test_rodrigues_convention_reproduces_published_rows(self):
        rows = table1(3, PAPER)
        assert len(rows) == 10
        assert table1_diff(rows) == []
        for row in rows:
            assert dict(row.coeffs) == PUBLISHED_TABLE1[(row.K, row.l_tilde)]

    def test_standard_convention_differs(self):
        diffs = table1_diff(table1(3, STD))
        assert diffs
        assert all(d["l"] is not None for d in diffs)
        # C_2 of (2, 0) does not depend on the normalization
        assert not any((d["K"], d["l_tilde"], d["l"]) == (2, 0, 2) for d in diffs)

    def test_reproducing_convention(self):
        assert find_reproducing_convention() is PAPER

    def test_missing_rows_are_reported(self):
        diffs = table1_diff(table1(1, PAPER))
        assert {(d["K"], d["l_tilde"]) for d in diffs} == {k for k in PUBLISHED_TABLE1 if k[0] > 1}

    def test_row_counts(self):
        assert len(table1(0)) == 1
        assert len(table1(5)) == 21
        assert all(dict(r.coeffs) == {r.K: poly(1)} for r in table1(6) if r.K == r.l_tilde)


class TestQuadratureCrossCheck:
    @pytest.mark.parametrize("K", [0, 1, 2, 3])
    @pytest.mark.parametrize("b", [0.45, 1.0, 2.0])
    def test_agrees_with_exact_coefficients(self, K, b):
        for lt in range(K + 1):
            check = check_expansion_quadrature(K, lt, b)
            assert check.passed, check.to_dict()

    def test_k3_ground_values(self):
        coeffs = expand_by_quadrature(3, 0, 2.0)
        assert sorted(coeffs) == [0, 1, 2, 3]
        assert coeffs[0] == pytest.approx(1.0, abs=1e-10)
        assert coeffs[1] == pytest.approx(1.8, abs=1e-10)
        assert coeffs[2] == pytest.approx(2.0, abs=1e-10)
        # -2/5·b + 1/8·b³ at b = 2
        assert coeffs[3] == pytest.approx(0.2, abs=1e-10)

    def test_standard_convention(self):
        coeffs = expand_by_quadrature(2, 0, 1.5, STD)
        assert coeffs == pytest.approx({0: 2.0, 1: -1.5, 2: 1.0}, abs=1e-10)

    def test_invalid_level(self):
        with pytest.raises(QuantumNumberError):
            expand_by_quadrature(2, 3, 1.0)


class TestConnectionMatrix:
    def test_k1_structure(self):
        m = connection_matrix(1)
        assert m.is_upper_triangular()
        entry = m.entries[0][1]
        assert (entry.coeff, entry.phase, entry.num_l, entry.num_m, entry.den_l) == (poly(0, 1), -1, 0, 0, 1)
        theta, phi, b = 1.1, 0.4, 2.0
        a = m.evaluate(theta, phi, b)
        expected = b * np.exp(-1j * phi) / assoc_legendre(1, 1, math.cos(theta))
        assert a[0, 1] == pytest.approx(expected)
        assert a[0, 0] == pytest.approx(1.0)
        assert a[1, 1] == pytest.approx(1.0)
        assert a[1, 0] == 0

    def test_k2_entry(self):
        m = connection_matrix(2, m_tilde=(0, 0, 2))
        theta, phi = 0.9, 1.3
        a = m.evaluate(theta, phi, 3.0)
        x = math.cos(theta)
        expected = 2.0 * np.exp(-2j * phi) * assoc_legendre(1, 0, x) / assoc_legendre(2, 2, x)
        assert a[1, 2] == pytest.approx(expected)

    def test_determinant_nonzero_away_from_poles(self):
        for K in range(6):
            m = connection_matrix(K)
            for theta in np.linspace(0.05, math.pi - 0.05, 9):
                assert abs(m.determinant(theta, 0.3, 1.0)) > 0.5

    def test_inverse(self):
        m = connection_matrix(3)
        a = m.evaluate(1.2, 0.7, 0.45)
        assert m.inverse(1.2, 0.7, 0.45) @ a == pytest.approx(np.eye(4))

    def test_pole_error(self):
        m = connection_matrix(2)
        with pytest.raises(PoleError):
            m.evaluate(0.0, 0.0, 1.0)
        with pytest.raises(PoleError):
            m.evaluate(math.pi, 0.0, 1.0)

    def test_pole_regularization(self):
        m = connection_matrix(2)
        north = m.evaluate(0.0, 0.0, 1.0, regularize_poles=True)
        south = m.evaluate(math.pi, 0.0, 1.0, regularize_poles=True)
        assert np.diag(north) == pytest.approx(np.ones(3))
        assert north[0, 1] == pytest.approx(1.0)
        # P_1^0(-1) = -1
        assert south[0, 1] == pytest.approx(-1.0)

    def test_invalid_m_tilde(self):
        with pytest.raises(QuantumNumberError):
            connection_matrix(2, m_tilde=(1, 0, 0))
        with pytest.raises(QuantumNumberError):
            connection_matrix(2, m_tilde=(0, 0))


class TestVerifySl:
    @pytest.mark.parametrize("K", [0, 1, 2, 3])
    @pytest.mark.parametrize("b", [0.45, 1.0, 2.0])
    def test_identity_at_random_points(self, K, b):
        report = verify_sl(K, b, sample_points(50, seed=2024))
        assert report.points == 50
        assert report.max_residual <= 1e-10
        assert report.passed

    def test_free_case(self):
        report = verify_sl(1, 0.0, sample_points(10, seed=1))
        assert report.max_residual <= 1e-13

    def test_standard_convention_also_holds(self):
        report = verify_sl(3, 1.0, sample_points(20, seed=9), convention=STD)
        assert report.passed

    def test_general_m_tilde(self):
        report = verify_sl(2, 1.0, sample_points(20, seed=4), m_tilde=(0, -1, 1))
        assert report.passed
