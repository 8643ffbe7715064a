"""
Estimação MR² por mínimos quadrados em dois estágios, variâncias e estimadores de referência
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from mr2.config import MR2Config
from mr2.dataset import Dataset, column_means
from mr2.diagnostics import first_stage_f, partial_f
from mr2.exceptions import (
    CollinearityError,
    DataError,
    EstimationError,
    ParameterError,
    SampleSizeError,
    UnsupportedError,
    WeakIdentificationError,
)
from mr2.instruments import (
    CovariateAdjustment,
    HFunction,
    InstrumentMatrix,
    WeightVector,
    build_instruments,
    build_weighted_instruments,
    cell_index,
    default_h,
    eligible_covariates,
)
from mr2.linalg import independent_columns, least_squares, solve_symmetric, with_intercept
from mr2.subsets import complement, enumerate_family

# Configurar logging
logger = logging.getLogger(__name__)


@dataclass(eq=False)
class FitResult:
    """Resultado de um ajuste: estimativa pontual, variâncias e diagnósticos"""
    method: str
    beta_a: float
    beta_0: float
    stage1_coef: np.ndarray
    fitted_exposure: np.ndarray
    residual_eps: np.ndarray
    n: int
    K: int
    J: int
    k_dagger: Optional[int] = None
    var_sandwich: float = 0.0
    var_homoskedastic: float = 0.0
    first_stage_F: float = float("nan")
    first_stage_p: float = float("nan")
    instruments: Optional[np.ndarray] = None
    instrument_names: Tuple[str, ...] = ()
    extra: Optional[np.ndarray] = None
    extra_names: Tuple[str, ...] = ()
    stage2_coef: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    var_bootstrap: Optional[float] = None
    var_efficient: Optional[float] = None

    @property
    def se_sandwich(self) -> float:
        return float(np.sqrt(self.var_sandwich))

    @property
    def se_homoskedastic(self) -> float:
        return float(np.sqrt(self.var_homoskedastic))

    @property
    def stage1_design(self) -> np.ndarray:
        return with_intercept(self.instruments, self.extra)

    @property
    def stage2_design(self) -> np.ndarray:
        return with_intercept(self.fitted_exposure, self.extra)

    def variance(self, mode: str = "sandwich") -> float:
        """Variância de beta_a no modo pedido"""
        if mode == "sandwich":
            return self.var_sandwich
        if mode == "homoskedastic":
            return self.var_homoskedastic
        if mode == "bootstrap":
            if self.var_bootstrap is None:
                raise ParameterError("Bootstrap variance was not computed for this fit")
            return self.var_bootstrap
        if mode == "efficient":
            if self.var_efficient is None:
                raise ParameterError("Efficient variance is only available for the h_opt estimator")
            return self.var_efficient
        raise ParameterError(f"Unknown variance mode '{mode}'")

    def standard_error(self, mode: str = "sandwich") -> float:
        return float(np.sqrt(self.variance(mode)))


@dataclass(frozen=True, eq=False)
class HOptResult:
    """Combinação ótima theta e a variância no limite de eficiência"""
    theta: np.ndarray
    variance: float
    basis_names: Tuple[str, ...]
    mode: str


def _weighted_mean(values: np.ndarray, weights: Optional[np.ndarray]) -> float:
    return float(np.average(values, weights=weights))


def _bread(design: np.ndarray, weights: Optional[np.ndarray], first_stage_f: Optional[float] = None) -> np.ndarray:
    """(D' W D)^-1 via QR, com falha de identificação quando a coluna de Â degenera"""
    x = design if weights is None else design * np.sqrt(weights)[:, None]
    _q, r = sla.qr(x, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.min() <= MR2Config.RANK_TOL * diag.max():
        if first_stage_f is not None and np.isnan(first_stage_f):
            first_stage_f = None
        raise WeakIdentificationError(float(diag.min()), first_stage_f)
    r_inv = sla.solve_triangular(r, np.eye(r.shape[0]))
    return r_inv @ r_inv.T


def _sandwich(
    design: np.ndarray, residual: np.ndarray, weights: Optional[np.ndarray], first_stage_f: Optional[float] = None
) -> float:
    bread = _bread(design, weights, first_stage_f)
    scale = residual ** 2 if weights is None else (weights * residual) ** 2
    meat = design.T @ (design * scale[:, None])
    return max(float((bread @ meat @ bread)[1, 1]), 0.0)


def _homoskedastic(
    design: np.ndarray, residual: np.ndarray, weights: Optional[np.ndarray], first_stage_f: Optional[float] = None
) -> float:
    bread = _bread(design, weights, first_stage_f)
    if weights is None:
        sigma2 = float(np.mean(residual ** 2))
        return max(sigma2 * float(bread[1, 1]), 0.0)
    sigma2 = float(np.sum(weights * residual ** 2) / np.sum(weights))
    middle = design.T @ (design * (weights ** 2)[:, None])
    return max(sigma2 * float((bread @ middle @ bread)[1, 1]), 0.0)


def _check_instruments(fit: FitResult, z: Optional[InstrumentMatrix]) -> None:
    if z is not None and z.n != fit.n:
        raise ParameterError(f"Instrument matrix has n={z.n}, fit has n={fit.n}")


def variance_sandwich(fit: FitResult, z: Optional[InstrumentMatrix] = None) -> float:
    """
    Sanduíche robusto (HC0) para beta_a que ignora a estimação das médias de
    centralização; conservador em relação à variância de Monte Carlo.
    """
    _check_instruments(fit, z)
    return _sandwich(fit.stage2_design, fit.residual_eps, fit.weights, fit.first_stage_F)


def variance_homoskedastic(fit: FitResult, z: Optional[InstrumentMatrix] = None) -> float:
    """sigma² [Ê(Â D') ...]^-1 com sigma² = média dos resíduos do estágio 2 ao quadrado"""
    _check_instruments(fit, z)
    return _homoskedastic(fit.stage2_design, fit.residual_eps, fit.weights, fit.first_stage_F)


def _two_stage(
    d: Dataset,
    z: np.ndarray,
    z_names: Sequence[str],
    exog: Optional[np.ndarray],
    exog_names: Sequence[str],
    weights: Optional[np.ndarray],
    method: str,
    k_dagger: Optional[int],
) -> FitResult:
    n, n_instruments = z.shape
    n_exog = 0 if exog is None else exog.shape[1]
    required = n_instruments + 2 + n_exog
    if n <= required:
        raise SampleSizeError(n, required)

    names1 = ["intercept", *z_names, *exog_names]
    stage1 = least_squares(with_intercept(z, exog), d.a, names=names1, weights=weights, context="stage-1 design")
    a_hat = stage1.fitted
    f_stat, f_p = partial_f(d.a, z, exog=exog, weights=weights, names=z_names)

    # parte de Â explicada apenas pelos instrumentos
    if exog is None:
        signal = a_hat - _weighted_mean(a_hat, weights)
    else:
        signal = a_hat - least_squares(with_intercept(exog), a_hat, weights=weights, context="exogenous projection").fitted
    strength = _weighted_mean(signal ** 2, weights)
    scale = _weighted_mean((d.a - _weighted_mean(d.a, weights)) ** 2, weights)
    if strength <= MR2Config.WEAK_ID_TOL * scale or scale == 0.0:
        logger.warning(f"Weak identification in {method} fit: instrument signal {strength:.3e}, exposure variance {scale:.3e}")
        raise WeakIdentificationError(strength, f_stat)

    names2 = ["intercept", f"{d.exposure_name}_hat", *exog_names]
    stage2 = least_squares(with_intercept(a_hat, exog), d.y, names=names2, weights=weights, context="stage-2 design")
    coef = stage2.coef
    residual = d.y - with_intercept(d.a, exog) @ coef

    fit = FitResult(
        method=method,
        beta_a=float(coef[1]),
        beta_0=float(coef[0]),
        stage1_coef=stage1.coef,
        fitted_exposure=a_hat,
        residual_eps=residual,
        n=n,
        K=d.k_total,
        J=n_instruments,
        k_dagger=k_dagger,
        first_stage_F=f_stat,
        first_stage_p=f_p,
        instruments=z,
        instrument_names=tuple(z_names),
        extra=exog,
        extra_names=tuple(exog_names),
        stage2_coef=coef,
        weights=weights,
    )
    fit.var_sandwich = variance_sandwich(fit)
    fit.var_homoskedastic = variance_homoskedastic(fit)
    logger.debug(f"{method} fit: beta_a={fit.beta_a:.6g}, se={fit.se_sandwich:.4g}, F={f_stat:.4g}, J={n_instruments}")
    return fit


def fit_2sls(
    d: Dataset,
    z: InstrumentMatrix,
    extra_regressors: Optional[np.ndarray] = None,
    extra_names: Optional[Sequence[str]] = None,
) -> FitResult:
    """
    2SLS com instrumentos gerados: estágio 1 regride A em (1, Z), estágio 2
    regride Y em (1, Â). Regressores extras (X e, no modo ajustado, M)
    entram nos dois estágios.
    """
    if z.n != d.n:
        raise ParameterError(f"Instrument matrix has n={z.n}, dataset has n={d.n}")

    blocks: List[np.ndarray] = []
    names: List[str] = []
    if extra_regressors is not None:
        extra = np.asarray(extra_regressors, dtype=float).reshape(d.n, -1)
        blocks.append(extra)
        names += list(extra_names) if extra_names is not None else [f"X{j + 1}" for j in range(extra.shape[1])]
    if z.covariate_adjusted and d.m is not None:
        blocks.append(d.m)
        names += list(d.m_names)
    exog = np.column_stack(blocks) if blocks else None
    if exog is not None and len(names) != exog.shape[1]:
        raise ParameterError(f"Expected {exog.shape[1]} extra regressor names, got {len(names)}")

    k_dagger = z.k_dagger or None
    return _two_stage(d, z.z, z.column_names, exog, names, z.weights, "mr2", k_dagger)


def column_basis(z: InstrumentMatrix) -> InstrumentMatrix:
    """
    Mantém apenas uma base do espaço coluna de Z (QR pivotado).

    Com H padrão as C(K,k†) colunas geram no máximo C(K,k†-1) dimensões; com
    k†=1 todas coincidem com prod_k (G_k - Ê G_k). A projeção do estágio 1 não
    muda, portanto beta_a, variâncias e F também não.
    """
    keep = independent_columns(z.z)
    if keep.size == z.n_columns:
        return z
    if keep.size == 0:
        raise CollinearityError(z.column_names, "generated instruments")
    kept = set(keep.tolist())
    dropped = [name for j, name in enumerate(z.column_names) if j not in kept]
    logger.debug(f"Generated instruments span {keep.size} of {z.n_columns} columns; dropped {dropped}")
    names = None if z.names is None else tuple(z.names[j] for j in keep)
    return replace(z, z=z.z[:, keep], labels=tuple(z.labels[j] for j in keep), names=names)


def fit_mr2(
    d: Dataset,
    k_dagger: int,
    h: HFunction = default_h,
    adjust: Optional[CovariateAdjustment] = None,
    weights: Optional[WeightVector] = None,
    use_eligible_covariates: bool = False,
) -> FitResult:
    """Pipeline completo: família K(k†), instrumentos gerados e 2SLS"""
    if adjust is not None and weights is not None:
        raise ParameterError("Weighted and covariate-adjusted instruments cannot be combined")
    fam = enumerate_family(d.k_total, k_dagger)
    if weights is not None:
        z = build_weighted_instruments(d, fam, weights, h=h)
    else:
        z = build_instruments(d, fam, h=h, adjust=adjust)
    z = column_basis(z)

    extra, extra_names = None, None
    if use_eligible_covariates:
        eligible = eligible_covariates(d, k_dagger)
        if eligible is not None:
            extra, extra_names = eligible
    fit = fit_2sls(d, z, extra_regressors=extra, extra_names=extra_names)
    fit.k_dagger = k_dagger
    return fit


def _product_instrument(d: Dataset) -> np.ndarray:
    return np.prod(d.g - column_means(d), axis=1)


def _product_first_stage_f(d: Dataset, product: np.ndarray) -> Optional[float]:
    try:
        return partial_f(d.a, product[:, None], names=["prod_G"])[0]
    except (CollinearityError, SampleSizeError):
        return None


def ratio_estimate(d: Dataset) -> float:
    """beta_a = Ê[Y prod(G_k - Ê G_k)] / Ê[A prod(G_k - Ê G_k)] para G binário"""
    d.require_binary()
    product = _product_instrument(d)
    numerator = float(np.mean(d.y * product))
    denominator = float(np.mean(d.a * product))
    scale = float(np.sqrt(np.mean(d.a ** 2) * np.mean(product ** 2)))
    if abs(denominator) < MR2Config.WEAK_ID_TOL * scale or scale == 0.0:
        raise WeakIdentificationError(denominator, _product_first_stage_f(d, product))
    return numerator / denominator


def fit_ratio(d: Dataset) -> FitResult:
    """Estimador de razão (k†=1) com variâncias pela fórmula de momento único"""
    beta_a = ratio_estimate(d)
    product = _product_instrument(d)
    beta_0 = float(np.mean(d.y) - beta_a * np.mean(d.a))
    residual = d.y - beta_0 - beta_a * d.a
    stage1 = least_squares(with_intercept(product), d.a, names=["intercept", "prod_G"], context="stage-1 design")
    z = InstrumentMatrix(z=product[:, None], labels=(tuple(range(1, d.k_total + 1)),), names=("prod_G",), k_total=d.k_total, k_dagger=1)
    f_stat, f_p = first_stage_f(d, z)

    cross = float(np.mean(product * d.a))
    var_sandwich = float(np.mean(product ** 2 * residual ** 2)) / cross ** 2 / d.n
    var_homoskedastic = float(np.mean(residual ** 2) * np.mean(product ** 2)) / cross ** 2 / d.n
    return FitResult(
        method="ratio",
        beta_a=beta_a,
        beta_0=beta_0,
        stage1_coef=stage1.coef,
        fitted_exposure=stage1.fitted,
        residual_eps=residual,
        n=d.n,
        K=d.k_total,
        J=1,
        k_dagger=1,
        var_sandwich=var_sandwich,
        var_homoskedastic=var_homoskedastic,
        first_stage_F=f_stat,
        first_stage_p=f_p,
        instruments=z.z,
        instrument_names=("prod_G",),
    )


def fit_oracle_2sls(d: Dataset, valid_indices: Sequence[int]) -> FitResult:
    """2SLS com os G válidos como instrumentos e os inválidos como regressores exógenos"""
    valid = tuple(sorted(set(int(i) for i in valid_indices)))
    if not valid:
        raise ParameterError("Oracle 2SLS requires at least one valid instrument index")
    invalid = complement(valid, d.k_total)

    z = d.columns(valid)
    z_names = [d.g_names[i - 1] for i in valid]
    exog = d.columns(invalid) if invalid else None
    exog_names = [d.g_names[i - 1] for i in invalid]
    logger.debug(f"Oracle 2SLS with valid {z_names} and exogenous {exog_names}")
    return _two_stage(d, z, z_names, exog, exog_names, None, "oracle", None)


def fit_naive_2sls(d: Dataset) -> FitResult:
    """2SLS usando todos os G brutos como instrumentos"""
    return _two_stage(d, d.g, d.g_names, None, (), None, "naive", None)


def h_opt_combination(
    d: Dataset,
    basis: InstrumentMatrix,
    residual: np.ndarray,
    mode: str = "heteroskedastic",
) -> HOptResult:
    """
    theta = Ê{E(eps²|G) H H'}^-1 Ê{H A} sobre a base H centralizada.

    No modo heteroscedástico E(eps²|G) é a média de eps² na célula conjunta
    de G (apenas G binário); no homoscedástico é a média global.
    """
    residual = np.asarray(residual, dtype=float)
    if residual.shape[0] != d.n or basis.n != d.n:
        raise ParameterError("Basis, residual and dataset must have the same number of rows")
    h = basis.z - basis.z.mean(axis=0)
    squared = residual ** 2

    if mode == "homoskedastic":
        conditional = np.full(d.n, squared.mean())
    elif mode == "heteroskedastic":
        if not d.is_binary:
            raise UnsupportedError("Conditional residual variance by G cell requires binary instruments")
        inverse, counts = cell_index(d.g)
        conditional = (np.bincount(inverse, weights=squared) / counts)[inverse]
    else:
        raise ParameterError(f"Unknown h_opt mode '{mode}'")

    names = basis.column_names
    cross = h.T @ d.a / d.n
    if np.max(conditional) <= 0.0:
        theta = solve_symmetric(h.T @ h / d.n, cross, names, "h_opt basis moment")
        return HOptResult(theta=theta, variance=0.0, basis_names=tuple(names), mode=mode)

    omega = h.T @ (h * conditional[:, None]) / d.n
    theta = solve_symmetric(omega, cross, names, "h_opt weighting matrix")
    information = float(cross @ theta)
    if information <= 0.0:
        raise WeakIdentificationError(information, partial_f(d.a, h, names=names)[0])
    variance = 1.0 / information / d.n
    logger.debug(f"h_opt ({mode}): information={information:.6g}, variance={variance:.6g}")
    return HOptResult(theta=theta, variance=variance, basis_names=tuple(names), mode=mode)


def fit_h_opt(
    d: Dataset,
    basis: InstrumentMatrix,
    residual: np.ndarray,
    mode: str = "heteroskedastic",
    k_dagger: Optional[int] = None,
) -> FitResult:
    """Estimador eficiente com instrumento único H theta"""
    combo = h_opt_combination(d, basis, residual, mode=mode)
    h = basis.z - basis.z.mean(axis=0)
    z = InstrumentMatrix(
        z=(h @ combo.theta)[:, None],
        labels=(tuple(range(1, d.k_total + 1)),),
        names=("h_opt",),
        k_total=d.k_total,
        k_dagger=k_dagger or 0,
    )
    fit = fit_2sls(d, z)
    fit.method = "mr2_hopt"
    fit.var_efficient = combo.variance
    return fit


def variance_bootstrap(
    d: Dataset,
    fitter: Callable[[Dataset], FitResult],
    reps: Optional[int] = None,
    seed: Optional[int] = None,
) -> float:
    """
    Variância bootstrap não paramétrica de beta_a.

    fitter recebe a reamostra e refaz toda a construção, inclusive as médias
    de centralização.
    """
    reps = MR2Config.BOOTSTRAP_REPS if reps is None else reps
    seed = MR2Config.DEFAULT_SEED if seed is None else seed
    if reps < 2:
        raise ParameterError(f"Bootstrap needs at least 2 resamples, got {reps}")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    estimates: List[float] = []
    failed = 0
    for _ in range(reps):
        rows = rng.integers(0, d.n, size=d.n)
        try:
            estimates.append(fitter(d.take(rows)).beta_a)
        except (DataError, CollinearityError, WeakIdentificationError, SampleSizeError) as e:
            failed += 1
            logger.debug(f"Bootstrap resample failed: {e}")

    if failed:
        logger.warning(f"{failed} of {reps} bootstrap resamples failed and were skipped")
    if len(estimates) < 2:
        raise EstimationError(f"Only {len(estimates)} bootstrap resamples succeeded")
    return float(np.var(estimates, ddof=1))
