"""
Mínimos quadrados via QR com pivotamento (decomposição que revela o posto)
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from mr2.config import MR2Config
from mr2.exceptions import CollinearityError

# Configurar logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LeastSquaresFit:
    coef: np.ndarray
    fitted: np.ndarray
    residual: np.ndarray
    rank: int

    @property
    def rss(self) -> float:
        return float(self.residual @ self.residual)


def _equilibrate(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Colunas com norma unitária (colunas nulas ficam como estão)"""
    norms = np.linalg.norm(x, axis=0)
    norms = np.where(norms > 0, norms, 1.0)
    return x / norms, norms


def _rank(r: np.ndarray, rank_tol: float) -> int:
    diag = np.abs(np.diag(r))
    return int(np.sum(diag > rank_tol * diag[0])) if diag.size and diag[0] > 0 else 0


def least_squares(
    design: np.ndarray,
    target: np.ndarray,
    names: Optional[Sequence[str]] = None,
    weights: Optional[np.ndarray] = None,
    rank_tol: Optional[float] = None,
    context: str = "design",
) -> LeastSquaresFit:
    """
    Resolve min ||sqrt(w)(target - design @ coef)||.

    As colunas são normalizadas antes do QR, então o posto não depende da
    escala de cada coluna. Posto incompleto (|R_jj| <= tol * |R_00|) gera
    CollinearityError com os nomes das colunas que ficaram fora do posto na
    ordem pivotada.
    """
    rank_tol = MR2Config.RANK_TOL if rank_tol is None else rank_tol
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    n, p = design.shape
    names = list(names) if names is not None else [f"x{j}" for j in range(p)]

    if weights is not None:
        root_w = np.sqrt(weights)
        x = design * root_w[:, None]
        t = target * (root_w if target.ndim == 1 else root_w[:, None])
    else:
        x, t = design, target

    x, norms = _equilibrate(x)
    q, r, piv = sla.qr(x, mode="economic", pivoting=True)
    rank = _rank(r, rank_tol)
    if rank < p:
        dependent = [names[j] for j in piv[rank:]]
        logger.debug(f"Rank {rank} < {p} in {context}; dependent columns {dependent}")
        raise CollinearityError(dependent, context)

    coef_piv = sla.solve_triangular(r, q.T @ t)
    coef = np.empty_like(coef_piv)
    coef[piv] = coef_piv
    coef = coef / (norms if coef.ndim == 1 else norms[:, None])
    fitted = design @ coef
    return LeastSquaresFit(coef=coef, fitted=fitted, residual=target - fitted, rank=rank)


def solve_symmetric(matrix: np.ndarray, rhs: np.ndarray, names: Sequence[str], context: str) -> np.ndarray:
    """Resolve matrix @ x = rhs para matriz de momentos simétrica, checando o posto"""
    return least_squares(matrix, rhs, names=names, context=context).coef


def with_intercept(*blocks: Optional[np.ndarray], n: Optional[int] = None) -> np.ndarray:
    """Concatena uma coluna de uns com os blocos não nulos (n é obrigatório se todos forem None)"""
    parts = [b.reshape(b.shape[0], -1) for b in blocks if b is not None]
    if parts:
        n = parts[0].shape[0]
    elif n is None:
        raise ValueError("with_intercept needs n when every block is None")
    return np.column_stack([np.ones(n)] + parts)


def independent_columns(matrix: np.ndarray, rank_tol: Optional[float] = None) -> np.ndarray:
    """
    Índices (em ordem crescente) de uma base para o espaço coluna de matrix.

    Usa a ordem do QR pivotado sobre as colunas normalizadas: ficam as
    colunas com |R_jj| > tol * |R_00|.
    """
    rank_tol = MR2Config.RANK_TOL if rank_tol is None else rank_tol
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[1] == 0:
        return np.arange(0)
    r, piv = sla.qr(_equilibrate(matrix)[0], mode="r", pivoting=True)
    return np.sort(piv[:_rank(r, rank_tol)])
