import math
import random
from fractions import Fraction

import pytest

from src.core.polycore import DampedTrigExpr, PolyB, TrigExpr, trig_eval, trig_normalize
from src.core.specfun import GegenbauerConvention, psi_chi, s_function
from src.core.verify import (
    RadialOperator,
    apply,
    check_dilated_casimir,
    check_energy_consistency,
    check_free_eigen,
    check_ladder_annihilation,
    check_perturbed_eigen,
    check_radial_reduction,
    check_recurrences,
    check_transfer_identity,
    check_voala,
    perturbed_eigenvalue,
    run_verification,
    sample_points,
)
from src.exceptions import QuantumNumberError

STD = GegenbauerConvention.STANDARD
PAPER = GegenbauerConvention.PAPER_RODRIGUES


class TestOperators:
    def test_casimir_on_top_harmonic(self):
        for K in range(6):
            image = RadialOperator.casimir_radial(K).apply(TrigExpr.sin_power(K))
            assert image == TrigExpr.sin_power(K, K * (K + 2))

    def test_ladder_annihilates_sine_power(self):
        assert apply(RadialOperator.ladder(3), TrigExpr.sin_power(3)).is_zero()
        assert not apply(RadialOperator.ladder(2), TrigExpr.sin_power(3)).is_zero()

    def test_ladder_on_first_harmonic(self):
        image = apply(RadialOperator.ladder(1), s_function(1, 0, PAPER))
        assert image == TrigExpr.sin_power(-1, 2)

    def test_perturbed_adds_coulomb_term(self):
        f = TrigExpr.sin_power(2)
        diff = apply(RadialOperator.perturbed(1), f) - apply(RadialOperator.casimir_radial(1), f)
        assert diff == TrigExpr({(1, 1): PolyB([0, -2])})

    def test_negative_index_rejected(self):
        with pytest.raises(QuantumNumberError):
            RadialOperator.ladder(-1)

    @pytest.mark.parametrize(
        "op",
        [
            RadialOperator.casimir_radial(2),
            RadialOperator.perturbed(1),
            RadialOperator.ladder(3),
            RadialOperator.rosen_morse(2),
        ],
    )
    def test_against_finite_differences(self, op):
        r = random.Random(17)
        raw = [(Fraction(r.randint(-4, 4), r.randint(1, 3)), r.randint(0, 4), r.randint(0, 1)) for _ in range(4)]
        f = DampedTrigExpr.damped(trig_normalize(raw), level_k=2)
        image = apply(op, f)
        h = 1e-4

        for _ in range(1000):
            b_val = r.uniform(0.0, 3.0)
            chi = r.uniform(0.3, math.pi - 0.3)
            f_minus, f0, f_plus = (trig_eval(f, b_val, x) for x in (chi - h, chi, chi + h))
            d1 = (f_plus - f_minus) / (2 * h)
            d2 = (f_plus - 2 * f0 + f_minus) / h ** 2
            cot, csc2 = math.cos(chi) / math.sin(chi), 1 / math.sin(chi) ** 2
            if op.kind.name == "LADDER":
                expected = d1 - op.index * cot * f0
            elif op.kind.name == "ROSEN_MORSE_1D":
                expected = -d2 - 2 * b_val * cot * f0 + op.index * (op.index + 1) * csc2 * f0
            else:
                expected = -d2 - 2 * cot * d1 + op.index * (op.index + 1) * csc2 * f0
                if op.kind.name == "PERTURBED":
                    expected -= 2 * b_val * cot * f0
            assert trig_eval(image, b_val, chi) == pytest.approx(expected, rel=1e-5, abs=1e-5)


class TestExactIdentities:
    def test_free_eigen(self):
        for conv in (STD, PAPER):
            for K in range(9):
                for l in range(K + 1):
                    assert check_free_eigen(K, l, conv)

    def test_perturbed_and_dilated(self):
        for K in range(9):
            for lt in range(K + 1):
                assert check_perturbed_eigen(K, lt)
                assert check_dilated_casimir(K, lt)

    def test_transfer_identity(self):
        for conv in (STD, PAPER):
            for K in range(9):
                for lt in range(K + 1):
                    assert check_transfer_identity(K, lt, conv)

    def test_radial_reduction(self):
        for K in range(9):
            for lt in range(K + 1):
                assert check_radial_reduction(K, lt)

    def test_ladder_annihilation_to_high_order(self):
        assert all(check_ladder_annihilation(K) for K in range(51))

    def test_energy_consistency(self):
        assert all(check_energy_consistency(K) for K in range(21))
        assert perturbed_eigenvalue(1) == PolyB([3, 0, Fraction(-1, 4)])

    def test_wrong_eigenvalue_is_detected(self):
        f = DampedTrigExpr.damped(psi_chi(2, 0), 2)
        image = apply(RadialOperator.perturbed(0), f)
        assert not (image - f.scale(PolyB.constant(8))).is_zero()


class TestRecurrences:
    def test_rodrigues_constants(self):
        results = {(r.K, r.l): r for r in check_recurrences([(1, 0), (2, 0), (2, 1), (3, 1), (3, 2)], PAPER)}
        assert results[(1, 0)].constant == 2
        assert results[(2, 1)].constant == 4
        assert results[(3, 2)].constant == 6
        assert results[(3, 1)].constant == Fraction(20, 3)
        assert results[(2, 0)].constant == 3
        assert results[(2, 0)].agrees_with_published is False
        assert all(results[k].agrees_with_published for k in [(1, 0), (2, 1), (3, 1), (3, 2)])

    def test_standard_constant(self):
        (result,) = check_recurrences([(2, 0)], STD)
        assert result.constant == Fraction(-3, 2)

    def test_not_always_proportional(self):
        (result,) = check_recurrences([(3, 0)], PAPER)
        assert not result.proportional
        assert result.agrees_with_published is None
        assert result.to_dict()["constant"] is None

    def test_invalid_pairs(self):
        with pytest.raises(QuantumNumberError):
            check_recurrences([(2, 2)])
        with pytest.raises(QuantumNumberError):
            check_recurrences([(1, -1)])


class TestNumericalChecks:
    @pytest.mark.parametrize("K", [0, 1, 2, 3])
    def test_dilation_similarity(self, K):
        for b in (0.45, 1.0, 2.0):
            report = check_voala(K, b, sample_points(50, seed=K))
            assert report.points == 50
            assert report.passed, report.to_dict()

    def test_dilation_similarity_free_case(self):
        report = check_voala(1, 0.0, sample_points(50, seed=11))
        assert report.inverse_residual <= 1e-12
        assert report.main_residual <= 1e-12
        assert report.eigen_residual <= 1e-12

    def test_sample_points_reproducible(self):
        points = sample_points(5, seed=3)
        assert points == sample_points(5, seed=3)
        assert all(0.05 < chi < math.pi - 0.05 and 0.05 < theta < math.pi - 0.05 for chi, theta, _ in points)


class TestRunVerification:
    def test_small_run_passes_with_known_discrepancy(self):
        report = run_verification(3, [0.45, 1.0], point_count=10, seed=0)
        assert report.passed
        assert report.failures == []
        assert [(r.K, r.l) for r in report.discrepancies] == [(2, 0)]
        doc = report.to_dict()
        assert doc["passed"] is True
        assert doc["discrepancies"][0]["constant"] == "3"

    def test_ground_level_only(self):
        report = run_verification(0, [1.0], point_count=5)
        assert report.passed
        assert report.recurrences == []

    def test_negative_kmax(self):
        with pytest.raises(ValueError):
            run_verification(-1, [1.0])
