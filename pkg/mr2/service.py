import logging
from typing import Callable, List, Optional, Sequence

from mr2.config import MR2Config
from mr2.dataset import Dataset, PathLike, load_csv
from mr2.diagnostics import HausmanResult, hausman_test
from mr2.estimator import (
    FitResult,
    fit_h_opt,
    fit_mr2,
    fit_naive_2sls,
    fit_oracle_2sls,
    fit_ratio,
    variance_bootstrap,
)
from mr2.exceptions import EstimationError, MR2Error, ParameterError
from mr2.instruments import CovariateAdjustment, WeightVector, estimate_weights, interaction_basis

# Configurar logging
logger = logging.getLogger(__name__)


class EstimationService():
    """Serviço que orquestra leitura, ajuste, variância e diagnósticos"""

    def __init__(self, bootstrap_reps: int = MR2Config.BOOTSTRAP_REPS, default_seed: int = MR2Config.DEFAULT_SEED):
        self.config = MR2Config()
        self.bootstrap_reps = bootstrap_reps
        self.default_seed = default_seed
        logger.info(f"EstimationService initialized (bootstrap_reps={bootstrap_reps}, seed={default_seed})")

    def load(
        self,
        path: PathLike,
        outcome: str,
        exposure: str,
        instruments: Sequence[str],
        covariates: Optional[Sequence[str]] = None,
        binary_instruments: bool = False,
    ) -> Dataset:
        """Carrega e valida o CSV de entrada"""
        try:
            return load_csv(path, outcome, exposure, instruments, covariates=covariates, binary_instruments=binary_instruments)
        except MR2Error as e:
            logger.error(f"Error loading {path}: {e}")
            raise
        except Exception as e:
            logger.error(f"Unexpected error loading {path}: {e}")
            raise EstimationError(f"Failed to load dataset: {e}") from e

    def _fitter(
        self,
        method: str,
        k_dagger: int,
        adjust: Optional[CovariateAdjustment],
        weighted: bool,
        valid: Optional[Sequence[int]],
        eligible: bool,
    ) -> Callable[[Dataset], FitResult]:
        def weights_for(d: Dataset) -> Optional[WeightVector]:
            return estimate_weights(d) if weighted else None

        if method == "mr2":
            return lambda d: fit_mr2(d, k_dagger, adjust=adjust, weights=weights_for(d), use_eligible_covariates=eligible)
        if method == "mr2_hopt":
            def hopt(d: Dataset) -> FitResult:
                preliminary = fit_mr2(d, k_dagger, adjust=adjust, weights=weights_for(d))
                basis = interaction_basis(d, d.k_total - k_dagger + 1, d.k_total)
                mode = "heteroskedastic" if d.is_binary else "homoskedastic"
                return fit_h_opt(d, basis, preliminary.residual_eps, mode=mode, k_dagger=k_dagger)
            return hopt
        if method == "ratio":
            return fit_ratio
        if method == "oracle":
            if not valid:
                raise ParameterError("Oracle 2SLS requires the list of valid instrument indices")
            return lambda d: fit_oracle_2sls(d, valid)
        if method == "naive":
            return fit_naive_2sls
        raise ParameterError(f"Unknown method '{method}'. Available: {', '.join(MR2Config.METHODS)}")

    def estimate(
        self,
        d: Dataset,
        k_daggers: Sequence[int],
        method: str = "mr2",
        variance: str = "sandwich",
        weighted: bool = False,
        adjust_covariates: bool = False,
        valid: Optional[Sequence[int]] = None,
        eligible: bool = False,
        bootstrap_reps: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> List[FitResult]:
        """Ajusta o método pedido para cada k† (métodos sem k† produzem um único ajuste)"""
        try:
            if variance not in MR2Config.VARIANCE_MODES:
                raise ParameterError(f"Unknown variance mode '{variance}'. Available: {', '.join(MR2Config.VARIANCE_MODES)}")
            if weighted and adjust_covariates:
                raise ParameterError("Weighted and covariate-adjusted instruments cannot be combined")
            if adjust_covariates and d.m is None:
                raise ParameterError("Covariate adjustment requested but no covariates were given")

            uses_k_dagger = method in ("mr2", "mr2_hopt")
            if uses_k_dagger:
                if not k_daggers:
                    raise ParameterError("At least one k_dagger value is required")
                for k in k_daggers:
                    MR2Config.validate_k_dagger(k, d.k_total)
                grid = list(dict.fromkeys(k_daggers))
            else:
                grid = [k_daggers[0] if k_daggers else 1]

            adjust = CovariateAdjustment() if adjust_covariates else None

            fits: List[FitResult] = []
            for k in grid:
                fitter = self._fitter(method, k, adjust, weighted, valid, eligible)
                logger.debug(f"Fitting {method} with k_dagger={k if uses_k_dagger else '-'}")
                fit = fitter(d)
                if variance == "bootstrap":
                    fit.var_bootstrap = variance_bootstrap(
                        d,
                        fitter,
                        reps=self.bootstrap_reps if bootstrap_reps is None else bootstrap_reps,
                        seed=self.default_seed if seed is None else seed,
                    )
                fits.append(fit)
                logger.info(f"{method} fit (k_dagger={fit.k_dagger}): beta_a={fit.beta_a:.6g}, F={fit.first_stage_F:.4g}")
            return fits

        except MR2Error as e:
            logger.error(f"Error in estimate: {e}")
            raise
        except Exception as e:
            logger.error(f"Unexpected error in estimate: {e}")
            raise EstimationError(f"Failed to estimate: {e}") from e

    def hausman(self, fits: Sequence[FitResult], variance: str = "sandwich") -> List[HausmanResult]:
        """Compara o maior k† (referência) com cada um dos demais"""
        try:
            if len(fits) < 2:
                raise ParameterError("Hausman comparison needs at least two k_dagger values")
            reference = max(fits, key=lambda fit: fit.k_dagger or 0)
            results = []
            for fit in fits:
                if fit is reference:
                    continue
                result = hausman_test(reference, fit, variance=variance)
                logger.info(f"Hausman k_ref={result.k_ref} vs k_alt={result.k_alt}: ht={result.ht}, p={result.p_value}, status={result.status.value}")
                results.append(result)
            return results

        except MR2Error as e:
            logger.error(f"Error in hausman: {e}")
            raise
        except Exception as e:
            logger.error(f"Unexpected error in hausman: {e}")
            raise EstimationError(f"Failed to compute Hausman test: {e}") from e
