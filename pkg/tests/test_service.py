"""
Testes do EstimationService e da factory singleton
"""
import numpy as np
import pytest

from config.settings import settings
from mr2.dataset import Dataset
from mr2.dependencies import EstimationServiceFactory
from mr2.estimator import fit_mr2, variance_bootstrap
from mr2.exceptions import DataError, EstimationError, ParameterError


class TestEstimationServiceFactory:

    def test_singleton(self):
        first = EstimationServiceFactory.get_estimation_service()
        assert EstimationServiceFactory.get_estimation_service() is first
        assert EstimationServiceFactory() is EstimationServiceFactory()

    def test_reset(self):
        first = EstimationServiceFactory.get_estimation_service()
        EstimationServiceFactory.reset()
        assert EstimationServiceFactory.get_estimation_service() is not first

    def test_built_from_settings(self, monkeypatch):
        monkeypatch.setattr(settings, "MR2_BOOTSTRAP_REPS", 37)
        monkeypatch.setattr(settings, "MR2_DEFAULT_SEED", 99)
        service = EstimationServiceFactory.get_estimation_service()
        assert (service.bootstrap_reps, service.default_seed) == (37, 99)

    def test_explicit_values_rebuild(self):
        first = EstimationServiceFactory.get_estimation_service()
        second = EstimationServiceFactory.get_estimation_service(bootstrap_reps=10, seed=3)
        assert second is not first
        assert (second.bootstrap_reps, second.default_seed) == (10, 3)
        assert EstimationServiceFactory.get_estimation_service() is second

    def test_invalid_settings(self, monkeypatch):
        monkeypatch.setattr(settings, "MR2_BOOTSTRAP_REPS", 1)
        with pytest.raises(ParameterError):
            EstimationServiceFactory.get_estimation_service()

    def test_bootstrap_uses_service_defaults(self, simulate):
        d = simulate(800, k_total=3, seed=66)
        service = EstimationServiceFactory.get_estimation_service(bootstrap_reps=12, seed=4)
        fit = service.estimate(d, [2], variance="bootstrap")[0]
        fitter = lambda sample: fit_mr2(sample, 2)
        assert fit.var_bootstrap == variance_bootstrap(d, fitter, reps=12, seed=4)


class TestEstimationService:

    @pytest.fixture
    def service(self):
        return EstimationServiceFactory.get_estimation_service()

    def test_grid_of_k_dagger(self, service, simulate):
        d = simulate(3000, k_total=4, beta_direct=[0, 0, 0, 0.2], seed=61)
        fits = service.estimate(d, [2, 3, 2])
        assert [fit.k_dagger for fit in fits] == [2, 3]

    def test_methods_without_k_dagger_fit_once(self, service, simulate):
        d = simulate(3000, k_total=3, seed=62)
        fits = service.estimate(d, [1, 2], method="naive")
        assert len(fits) == 1 and fits[0].method == "naive"

    def test_efficient_method(self, service, simulate):
        d = simulate(3000, k_total=3, seed=63)
        fit = service.estimate(d, [2], method="mr2_hopt")[0]
        assert fit.method == "mr2_hopt"
        assert fit.var_efficient > 0

    def test_weighted_fit(self, service, simulate):
        d = simulate(3000, k_total=3, seed=64)
        fit = service.estimate(d, [2], weighted=True)[0]
        assert fit.weights is not None

    def test_oracle_requires_valid(self, service, simulate):
        with pytest.raises(ParameterError):
            service.estimate(simulate(300, k_total=3), [1], method="oracle")

    def test_unknown_variance_mode(self, service, simulate):
        with pytest.raises(ParameterError):
            service.estimate(simulate(300, k_total=3), [1], variance="jackknife")

    def test_adjustment_requires_covariates(self, service, simulate):
        with pytest.raises(ParameterError):
            service.estimate(simulate(300, k_total=3), [1], adjust_covariates=True)

    def test_weighted_and_adjusted(self, service, simulate):
        base = simulate(300, k_total=2)
        d = Dataset(y=base.y, a=base.a, g=base.g, m=np.ones((base.n, 1)) * np.arange(base.n)[:, None])
        with pytest.raises(ParameterError):
            service.estimate(d, [1], weighted=True, adjust_covariates=True)

    def test_unexpected_errors_are_wrapped(self, service, simulate, monkeypatch):
        def broken(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr("mr2.service.fit_naive_2sls", broken)
        with pytest.raises(EstimationError) as excinfo:
            service.estimate(simulate(300, k_total=3), [1], method="naive")
        assert isinstance(excinfo.value.__cause__, RuntimeError)

    def test_hausman_reference_is_largest_k_dagger(self, service, simulate):
        d = simulate(3000, k_total=4, beta_direct=[0, 0, 0, 0.2], seed=65)
        fits = service.estimate(d, [3, 1, 2])
        results = service.hausman(fits)
        assert [(r.k_ref, r.k_alt) for r in results] == [(3, 1), (3, 2)]

    def test_hausman_needs_two_fits(self, service, simulate):
        fits = service.estimate(simulate(1000, k_total=3, seed=66), [2])
        with pytest.raises(ParameterError):
            service.hausman(fits)

    def test_load_missing_file(self, service, tmp_path):
        with pytest.raises(DataError):
            service.load(tmp_path / "missing.csv", "Y", "A", ["G1"])
