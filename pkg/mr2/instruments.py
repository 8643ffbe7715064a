"""
Construção da matriz de instrumentos gerados Z a partir de G e da família K(k†)
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from mr2.config import MR2Config
from mr2.dataset import Dataset, column_means
from mr2.exceptions import (
    CapacityError,
    DegenerateInstrumentError,
    NonBinaryInstrumentError,
    ParameterError,
    UnsupportedError,
)
from mr2.linalg import least_squares, with_intercept
from mr2.subsets import IndexTuple, SubsetFamily, complement

# Configurar logging
logger = logging.getLogger(__name__)

HFunction = Callable[[IndexTuple, Dataset], np.ndarray]


@dataclass(frozen=True, eq=False)
class InstrumentMatrix:
    """Matriz n x J de instrumentos gerados, uma coluna por subconjunto"""
    z: np.ndarray
    labels: Tuple[IndexTuple, ...]
    means_used: Dict[str, object] = field(default_factory=dict)
    weights: Optional[np.ndarray] = None
    covariate_adjusted: bool = False
    k_total: int = 0
    k_dagger: int = 0
    names: Optional[Tuple[str, ...]] = None

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def n_columns(self) -> int:
        return self.z.shape[1]

    @property
    def column_names(self) -> List[str]:
        if self.names is not None:
            return list(self.names)
        return ["Z_" + "_".join(str(i) for i in label) for label in self.labels]

    @property
    def weighted(self) -> bool:
        return self.weights is not None


@dataclass(frozen=True, eq=False)
class WeightVector:
    """W = prod_k f_k(G_k) / g(G) por unidade"""
    w: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.w)) or not np.all(self.w > 0):
            raise ParameterError("Weights must be finite and strictly positive")


@dataclass(frozen=True)
class CovariateAdjustment:
    """Ajuste por covariáveis M: Ê(.) substituída por Ê(.|M)"""
    model: str = "linear"


def default_h(subset: IndexTuple, d: Dataset) -> np.ndarray:
    """H_k = soma dos genótipos do subconjunto (contagem de alelos)"""
    return d.columns(subset).sum(axis=1)


def _check_family(d: Dataset, fam: SubsetFamily) -> None:
    if fam.k_total != d.k_total:
        raise ParameterError(f"Subset family built for K={fam.k_total}, dataset has K={d.k_total}")


def _is_degenerate(column: np.ndarray) -> bool:
    scale = float(np.max(np.abs(column)))
    return scale == 0.0 or bool(np.max(np.abs(column - column.mean())) <= 1e-12 * scale)


def _linear_conditional_mean(d: Dataset) -> Callable[[np.ndarray, str], np.ndarray]:
    design = with_intercept(d.m)
    names = ["intercept", *d.m_names]

    def fitted(target: np.ndarray, label: str) -> np.ndarray:
        return least_squares(design, target, names=names, context=f"covariate regression for {label}").fitted

    return fitted


def _assemble(
    d: Dataset,
    fam: SubsetFamily,
    h: HFunction,
    center: Callable[[np.ndarray, str], np.ndarray],
) -> Tuple[np.ndarray, Dict[str, float], Dict[str, float]]:
    g_centered = np.empty_like(d.g)
    g_means: Dict[str, float] = {}
    for k, name in enumerate(d.g_names):
        column = np.ascontiguousarray(d.g[:, k])
        fitted = center(column, name)
        g_centered[:, k] = column - fitted
        g_means[name] = float(np.mean(fitted))

    z = np.empty((d.n, len(fam)))
    h_means: Dict[str, float] = {}
    for j, member in enumerate(fam.members):
        label = "Z_" + "_".join(str(i) for i in member)
        h_values = np.asarray(h(member, d), dtype=float)
        h_fitted = center(h_values, label)
        rest = complement(member, d.k_total)
        product = np.prod(g_centered[:, [s - 1 for s in rest]], axis=1) if rest else 1.0
        column = (h_values - h_fitted) * product
        if _is_degenerate(column):
            raise DegenerateInstrumentError(f"for subset {member}")
        z[:, j] = column
        h_means[label] = float(np.mean(h_fitted))
    return z, g_means, h_means


def build_instruments(
    d: Dataset,
    fam: SubsetFamily,
    h: HFunction = default_h,
    adjust: Optional[CovariateAdjustment] = None,
) -> InstrumentMatrix:
    """
    Z_k = (H_k - Ê H_k) * prod_{s fora de k} (G_s - Ê G_s), para cada k em K(k†).

    Com ajuste por covariáveis, Ê(.) é o valor ajustado da regressão linear
    de H_k e de cada G_s em (1, M).
    """
    _check_family(d, fam)
    if adjust is not None:
        if d.m is None:
            raise ParameterError("Covariate adjustment requested but dataset has no covariates")
        if adjust.model != "linear":
            raise UnsupportedError(f"Conditional-mean model '{adjust.model}' is not supported")
        center = _linear_conditional_mean(d)
    else:
        center = lambda values, _label: np.full_like(values, values.mean())

    z, g_means, h_means = _assemble(d, fam, h, center)
    means_used: Dict[str, object] = {"G": g_means, "H": h_means}
    if adjust is not None:
        means_used["model"] = f"linear in (1, {', '.join(d.m_names)})"

    logger.info(f"Built {z.shape[1]} instruments for K={d.k_total}, k_dagger={fam.k_dagger}, adjusted={adjust is not None}")
    return InstrumentMatrix(
        z=z,
        labels=fam.members,
        means_used=means_used,
        covariate_adjusted=adjust is not None,
        k_total=fam.k_total,
        k_dagger=fam.k_dagger,
    )


def cell_index(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Índice da célula conjunta de cada linha de G binário e a contagem por célula"""
    bits = np.asarray(g).astype(np.int64)
    keys = bits @ (np.int64(1) << np.arange(bits.shape[1], dtype=np.int64))
    _cells, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    return inverse.reshape(-1), counts


def joint_cell_weights(g: np.ndarray, smoothing: Optional[float] = None, cell_cap: Optional[int] = None) -> np.ndarray:
    """
    Pesos empíricos w_i = prod_k f_k(G_ik) / g(G_i) para G binário.

    f_k são as frequências marginais e g a frequência conjunta da célula
    observada; a própria linha garante contagem >= 1 na sua célula.
    """
    smoothing = MR2Config.WEIGHT_SMOOTHING if smoothing is None else smoothing
    cell_cap = MR2Config.CELL_CAP if cell_cap is None else cell_cap
    g = np.asarray(g, dtype=float).reshape(np.shape(g)[0], -1)
    n, k_total = g.shape
    for k in range(k_total):
        if not np.all((g[:, k] == 0) | (g[:, k] == 1)):
            raise NonBinaryInstrumentError(f"G{k + 1}")
    n_cells = 2 ** k_total
    if n_cells > cell_cap:
        raise CapacityError(f"Joint pmf support 2^{k_total}", n_cells, cell_cap)

    bits = g.astype(np.int64)
    inverse, counts = cell_index(bits)
    joint = (counts[inverse] + smoothing) / (n + smoothing * n_cells)

    p = g.mean(axis=0)
    marginals = np.where(bits == 1, p, 1.0 - p)
    return np.prod(marginals, axis=1) / joint


def estimate_weights(d: Dataset, smoothing: Optional[float] = None) -> WeightVector:
    """Estima W para instrumentos binários possivelmente correlacionados"""
    if not d.is_binary:
        raise UnsupportedError("Correlated-IV weights are defined only for binary instruments")
    w = joint_cell_weights(d.g, smoothing=smoothing)
    logger.info(f"Estimated correlated-IV weights: mean={w.mean():.4f}, min={w.min():.4f}, max={w.max():.4f}")
    return WeightVector(w=w)


def build_weighted_instruments(
    d: Dataset,
    fam: SubsetFamily,
    w: WeightVector,
    h: HFunction = default_h,
) -> InstrumentMatrix:
    """Centraliza por médias ponderadas por W, i.e. sob a lei produto das marginais"""
    _check_family(d, fam)
    if w.w.shape[0] != d.n:
        raise ParameterError(f"Weight vector has length {w.w.shape[0]}, dataset has n={d.n}")

    center = lambda values, _label: np.full_like(values, np.average(values, weights=w.w))
    z, g_means, h_means = _assemble(d, fam, h, center)

    logger.info(f"Built {z.shape[1]} weighted instruments for K={d.k_total}, k_dagger={fam.k_dagger}")
    return InstrumentMatrix(
        z=z,
        labels=fam.members,
        means_used={"G": g_means, "H": h_means, "weighting": "product of empirical marginals"},
        weights=w.w,
        k_total=fam.k_total,
        k_dagger=fam.k_dagger,
    )


def interaction_basis(d: Dataset, min_order: int, max_order: int, centered: bool = True) -> InstrumentMatrix:
    """Produtos (centralizados) de G sobre todos os conjuntos com ordem no intervalo"""
    if not 1 <= min_order <= max_order <= d.k_total:
        raise ParameterError(f"Invalid interaction order range [{min_order}, {max_order}] for K={d.k_total}")
    base = d.g - column_means(d) if centered else d.g
    labels = [
        combo
        for order in range(min_order, max_order + 1)
        for combo in itertools.combinations(range(1, d.k_total + 1), order)
    ]
    if len(labels) > MR2Config.SUBSET_CAP:
        raise CapacityError("Interaction basis", len(labels), MR2Config.SUBSET_CAP)
    z = np.column_stack([np.prod(base[:, [s - 1 for s in combo]], axis=1) for combo in labels])
    return InstrumentMatrix(z=z, labels=tuple(labels), means_used={"G": dict(zip(d.g_names, column_means(d)))}, k_total=d.k_total)


def eligible_covariates(d: Dataset, k_dagger: int) -> Optional[Tuple[np.ndarray, List[str]]]:
    """Interações de ordem 1..K-k† (covariáveis elegíveis X do estágio 2)"""
    MR2Config.validate_k_dagger(k_dagger, d.k_total)
    max_order = d.k_total - k_dagger
    if max_order < 1:
        return None
    basis = interaction_basis(d, 1, max_order, centered=False)
    names = [":".join(d.g_names[s - 1] for s in label) for label in basis.labels]
    return basis.z, names
