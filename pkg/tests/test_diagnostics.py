"""
Testes da estatística F do primeiro estágio e do teste de Hausman
"""
import numpy as np
import pytest
from scipy import stats

from mr2.diagnostics import HausmanStatus, first_stage_f, hausman_from_estimates, hausman_test, partial_f
from mr2.estimator import FitResult, fit_mr2
from mr2.exceptions import ParameterError, SampleSizeError
from mr2.instruments import InstrumentMatrix, build_instruments
from mr2.linalg import independent_columns
from mr2.subsets import enumerate_family


def _fit(beta_a: float, var: float, n: int = 100, k_dagger: int = 2) -> FitResult:
    return FitResult(
        method="mr2", beta_a=beta_a, beta_0=0.0, stage1_coef=np.zeros(2), fitted_exposure=np.zeros(n),
        residual_eps=np.zeros(n), n=n, K=5, J=10, k_dagger=k_dagger, var_sandwich=var, var_homoskedastic=var / 2,
    )


class TestHausman:

    def test_significant_difference(self):
        result = hausman_from_estimates(0.649, 0.147 ** 2, 0.363, 0.048 ** 2, k_ref=4, k_alt=2)
        assert result.status == HausmanStatus.OK
        assert result.ht == pytest.approx(2.06, abs=0.01)
        assert result.p_value == pytest.approx(0.040, abs=0.002)
        assert result.p_value < 0.05

    def test_non_significant_difference(self):
        result = hausman_from_estimates(0.543, 0.296 ** 2, 0.496, 0.090 ** 2)
        assert abs(result.ht) == pytest.approx(0.167, abs=0.001)
        assert result.p_value == pytest.approx(0.87, abs=0.01)

    def test_p_value_is_two_sided_normal(self):
        result = hausman_from_estimates(1.3, 0.5, 1.0, 0.1)
        assert result.p_value == pytest.approx(2 * (1 - stats.norm.cdf(abs(result.ht))), rel=1e-12)

    def test_identical_fits_are_not_applicable(self):
        fit = _fit(0.5, 0.01)
        result = hausman_test(fit, fit)
        assert result.status == HausmanStatus.NOT_APPLICABLE
        assert result.ht is None and result.p_value is None
        assert not result.applicable

    def test_smaller_reference_variance_is_not_applicable(self):
        assert hausman_from_estimates(0.5, 0.01, 0.4, 0.02).status == HausmanStatus.NOT_APPLICABLE

    def test_antisymmetric_in_point_estimates(self):
        forward = hausman_from_estimates(0.7, 0.04, 0.5, 0.01)
        swapped = hausman_from_estimates(0.5, 0.04, 0.7, 0.01)
        assert forward.ht == pytest.approx(-swapped.ht)
        assert forward.p_value == pytest.approx(swapped.p_value)

    def test_fits_on_different_samples(self):
        with pytest.raises(ParameterError):
            hausman_test(_fit(0.5, 0.04, n=100), _fit(0.4, 0.01, n=200))

    def test_negative_variance(self):
        with pytest.raises(ParameterError):
            hausman_from_estimates(0.5, -0.01, 0.4, 0.01)

    def test_uses_requested_variance_mode(self):
        result = hausman_test(_fit(0.7, 0.08, k_dagger=4), _fit(0.5, 0.02, k_dagger=2), variance="homoskedastic")
        assert result.ht == pytest.approx(0.2 / np.sqrt(0.03))
        assert (result.k_ref, result.k_alt) == (4, 2)

    def test_across_k_dagger_on_simulated_data(self, simulate):
        d = simulate(5000, k_total=4, beta_direct=[0, 0, 0, 0.2], seed=40)
        result = hausman_test(fit_mr2(d, 3), fit_mr2(d, 2))
        assert (result.k_ref, result.k_alt) == (3, 2)
        if result.applicable:
            assert 0.0 <= result.p_value <= 1.0


class TestFirstStageF:

    def test_matches_rss_formula(self):
        rng = np.random.default_rng(41)
        n, j = 200, 3
        z = rng.normal(size=(n, j))
        a = z @ [0.3, 0.0, -0.2] + rng.normal(size=n)
        f_stat, p_value = partial_f(a, z)

        rss0 = np.sum((a - a.mean()) ** 2)
        design = np.column_stack([np.ones(n), z])
        coef, *_ = np.linalg.lstsq(design, a, rcond=None)
        rss1 = np.sum((a - design @ coef) ** 2)
        expected = ((rss0 - rss1) / j) / (rss1 / (n - j - 1))
        assert f_stat == pytest.approx(expected, rel=1e-10)
        assert p_value == pytest.approx(stats.f.sf(expected, j, n - j - 1), rel=1e-8)

    def test_affine_invariance(self):
        rng = np.random.default_rng(42)
        z = rng.normal(size=(300, 2))
        a = z[:, 0] + rng.normal(size=300)
        f_stat, _ = partial_f(a, z)
        shifted, _ = partial_f(4.0 * a - 7.0, z)
        assert shifted == pytest.approx(f_stat, rel=1e-10)

    def test_grows_with_sample_size(self):
        rng = np.random.default_rng(43)
        z = rng.normal(size=(8000, 1))
        a = z[:, 0] + rng.normal(size=8000)
        small, _ = partial_f(a[:2000], z[:2000])
        large, _ = partial_f(a, z)
        assert large / small == pytest.approx(4.0, rel=0.25)

    def test_constant_target(self):
        z = np.random.default_rng(44).normal(size=(50, 2))
        assert partial_f(np.ones(50), z) == (0.0, 1.0)

    def test_sample_size(self, simulate):
        d = simulate(200, k_total=3, seed=45)
        z = InstrumentMatrix(z=np.random.default_rng(0).normal(size=(200, 199)), labels=tuple((1,) for _ in range(199)))
        with pytest.raises(SampleSizeError):
            first_stage_f(d, z)

    def test_generated_instruments_are_strong(self, simulate):
        d = simulate(10_000, k_total=5, beta_direct=[0, 0, 0, 0.2, 0.2], seed=46)
        z = build_instruments(d, enumerate_family(5, 2))
        f_stat, p_value = first_stage_f(d, z)
        assert f_stat > 10
        assert p_value < 0.05

    def test_rank_deficient_instruments_use_basis(self, simulate):
        d = simulate(5_000, k_total=4, beta_direct=[0, 0, 0.2, 0.2], seed=48)
        z = build_instruments(d, enumerate_family(4, 2))
        keep = independent_columns(z.z)
        assert keep.size == 4 < z.n_columns
        expected = partial_f(d.a, z.z[:, keep])
        assert first_stage_f(d, z) == pytest.approx(expected, rel=1e-10)


@pytest.mark.monte_carlo
def test_null_rejection_rate_is_calibrated():
    rng = np.random.default_rng(47)
    n, j, reps = 10_000, 10, 1000
    rejections = 0
    for _ in range(reps):
        z = rng.normal(size=(n, j))
        a = rng.normal(size=n)
        _, p_value = partial_f(a, z)
        rejections += p_value < 0.05
    assert 0.03 <= rejections / reps <= 0.07
