"""
Diagnósticos: estatística F do primeiro estágio e teste de homogeneidade de Hausman
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from mr2.config import MR2Config
from mr2.dataset import Dataset
from mr2.exceptions import ParameterError, SampleSizeError
from mr2.instruments import InstrumentMatrix
from mr2.linalg import independent_columns, least_squares, with_intercept

if TYPE_CHECKING:
    from mr2.estimator import FitResult

# Configurar logging
logger = logging.getLogger(__name__)


class HausmanStatus(str, Enum):
    OK = "ok"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class HausmanResult:
    ht: Optional[float]
    p_value: Optional[float]
    k_ref: Optional[int]
    k_alt: Optional[int]
    status: HausmanStatus

    @property
    def applicable(self) -> bool:
        return self.status == HausmanStatus.OK


_EXACT_FIT_TOL = 1e-20


def _weighted_rss(residual: np.ndarray, weights: Optional[np.ndarray]) -> float:
    if weights is None:
        return float(residual @ residual)
    return float(np.sum(weights * residual ** 2))


def partial_f(
    target: np.ndarray,
    instruments: np.ndarray,
    exog: Optional[np.ndarray] = None,
    weights: Optional[np.ndarray] = None,
    names: Optional[Sequence[str]] = None,
) -> Tuple[float, float]:
    """
    F clássico para nulidade conjunta dos coeficientes dos instrumentos na
    regressão de target em (1, exog, instrumentos); retorna (F, p-valor).
    """
    n = target.shape[0]
    n_instruments = instruments.shape[1]
    n_exog = 0 if exog is None else exog.reshape(n, -1).shape[1]
    df_denom = n - n_instruments - n_exog - 1
    if df_denom <= 0:
        raise SampleSizeError(n, n_instruments + n_exog + 1)

    names = list(names) if names is not None else [f"z{j}" for j in range(n_instruments)]
    exog_names = [f"x{j}" for j in range(n_exog)]
    restricted = least_squares(
        with_intercept(exog, n=n), target, names=["intercept", *exog_names], weights=weights, context="restricted first stage"
    )
    full = least_squares(
        with_intercept(exog, instruments), target, names=["intercept", *exog_names, *names], weights=weights, context="first stage"
    )
    rss0 = _weighted_rss(restricted.residual, weights)
    rss1 = _weighted_rss(full.residual, weights)
    floor = _EXACT_FIT_TOL * _weighted_rss(target, weights)
    if rss0 <= floor:
        # target constante dado o modelo restrito: nada a explicar
        return 0.0, 1.0
    if rss1 <= floor:
        return float("inf"), 0.0
    f_stat = ((rss0 - rss1) / n_instruments) / (rss1 / df_denom)
    f_stat = max(f_stat, 0.0)
    return float(f_stat), float(stats.f.sf(f_stat, n_instruments, df_denom))


def first_stage_f(d: Dataset, z: InstrumentMatrix) -> Tuple[float, float]:
    """F do primeiro estágio (A em 1, Z) e seu p-valor sob F(J, n-J-1)"""
    # J = posto de Z; colunas dependentes não mudam o espaço projetado
    keep = independent_columns(z.z)
    if d.n <= keep.size + 1:
        raise SampleSizeError(d.n, keep.size + 1)
    names = z.column_names
    f_stat, p_value = partial_f(d.a, z.z[:, keep], weights=z.weights, names=[names[j] for j in keep])
    if p_value > MR2Config.WEAK_IV_ALPHA:
        logger.warning(f"First-stage F={f_stat:.3f} (p={p_value:.3g}) is not significant at {MR2Config.WEAK_IV_ALPHA}; estimates may suffer from weak-IV bias")
    else:
        logger.debug(f"First-stage F={f_stat:.3f}, p={p_value:.3g}")
    return f_stat, p_value


def hausman_from_estimates(
    beta_ref: float,
    var_ref: float,
    beta_alt: float,
    var_alt: float,
    k_ref: Optional[int] = None,
    k_alt: Optional[int] = None,
) -> HausmanResult:
    """ht = (b_ref - b_alt) / sqrt(V_ref - V_alt), p bilateral pela N(0, 1)"""
    if var_ref < 0 or var_alt < 0:
        raise ParameterError("Variances must be non-negative")
    difference = var_ref - var_alt
    if difference <= 0:
        logger.info(f"Hausman test not applicable: V_ref - V_alt = {difference:.3e} <= 0")
        return HausmanResult(ht=None, p_value=None, k_ref=k_ref, k_alt=k_alt, status=HausmanStatus.NOT_APPLICABLE)
    ht = (beta_ref - beta_alt) / np.sqrt(difference)
    p_value = 2.0 * stats.norm.sf(abs(ht))
    return HausmanResult(ht=float(ht), p_value=float(p_value), k_ref=k_ref, k_alt=k_alt, status=HausmanStatus.OK)


def hausman_test(fit_ref: "FitResult", fit_alt: "FitResult", variance: str = "sandwich") -> HausmanResult:
    """Compara estimativas sob dois valores de k† ajustadas na mesma amostra"""
    if fit_ref.n != fit_alt.n:
        raise ParameterError(f"Fits use different samples (n={fit_ref.n} vs n={fit_alt.n})")
    return hausman_from_estimates(
        fit_ref.beta_a,
        fit_ref.variance(variance),
        fit_alt.beta_a,
        fit_alt.variance(variance),
        k_ref=fit_ref.k_dagger,
        k_alt=fit_alt.k_dagger,
    )
