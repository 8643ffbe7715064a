"""
Enumeração da família K(k†) em ordem revolving door e conjuntos de interações
"""
import itertools
import logging
from dataclasses import dataclass
from math import comb
from typing import Iterable, List, Optional, Tuple

from mr2.config import MR2Config
from mr2.exceptions import CapacityError, ParameterError

# Configurar logging
logger = logging.getLogger(__name__)

IndexTuple = Tuple[int, ...]


@dataclass(frozen=True)
class SubsetFamily:
    """Família ordenada de subconjuntos de tamanho k† de {1..K}"""
    k_total: int
    k_dagger: int
    members: Tuple[IndexTuple, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def labels(self, prefix: str = "Z") -> List[str]:
        """Rótulos de coluna, ex.: Z_1_2"""
        return [prefix + "_" + "_".join(str(i) for i in member) for member in self.members]


def _check_range(k_total: int, k_dagger: int) -> None:
    if k_total < 1:
        raise ParameterError(f"K must be >= 1, got {k_total}")
    MR2Config.validate_k_dagger(k_dagger, k_total)


def _revolving_door(n: int, k: int) -> List[IndexTuple]:
    """
    Ordem revolving door (código de Gray para k-subconjuntos).

    R(n, k) = R(n-1, k) seguido de reverso(R(n-1, k-1)) com n acrescentado;
    R(n, 0) = [()] e R(n, n) = [(1..n)].
    """
    # table[m][j] = R(m, j), construída de baixo para cima
    table = [[[] for _ in range(k + 1)] for _ in range(n + 1)]
    for m in range(n + 1):
        table[m][0] = [()]
        for j in range(1, min(m, k) + 1):
            if j == m:
                table[m][j] = [tuple(range(1, m + 1))]
                continue
            tail = [member + (m,) for member in reversed(table[m - 1][j - 1])]
            table[m][j] = table[m - 1][j] + tail
        if m >= 1:
            # Só a linha anterior é necessária
            table[m - 1] = None
    return table[n][k]


def enumerate_family(k_total: int, k_dagger: int, cap: Optional[int] = None) -> SubsetFamily:
    """Enumera K(k†) com primeiro membro (1..k†) e vizinhos trocando um único índice"""
    _check_range(k_total, k_dagger)
    cap = MR2Config.SUBSET_CAP if cap is None else cap
    size = comb(k_total, k_dagger)
    if size > cap:
        raise CapacityError(f"K({k_dagger}) for K={k_total}", size, cap)

    members = tuple(_revolving_door(k_total, k_dagger))
    logger.debug(f"Enumerated {len(members)} subsets for K={k_total}, k_dagger={k_dagger}")
    return SubsetFamily(k_total=k_total, k_dagger=k_dagger, members=members)


def partial_id_interactions(k_total: int, k_dagger: int, cap: Optional[int] = None) -> List[IndexTuple]:
    """
    Conjuntos de índices de cardinalidade >= K-k†+1.

    Qualquer interação dessas contém ao menos um IV válido quando k† dos K
    candidatos são válidos, logo satisfaz a restrição de exclusão.
    """
    _check_range(k_total, k_dagger)
    cap = MR2Config.SUBSET_CAP if cap is None else cap
    orders = range(k_total - k_dagger + 1, k_total + 1)
    size = sum(comb(k_total, order) for order in orders)
    if size > cap:
        raise CapacityError(f"Interaction sets of order >= {orders.start} for K={k_total}", size, cap)

    universe = range(1, k_total + 1)
    return [combo for order in orders for combo in itertools.combinations(universe, order)]


def complement(subset: Iterable[int], k_total: int) -> IndexTuple:
    """Índices de {1..K} fora do subconjunto, ordenados"""
    chosen = set(subset)
    for index in chosen:
        if not 1 <= index <= k_total:
            raise ParameterError(f"Index {index} out of range [1, {k_total}]")
    return tuple(i for i in range(1, k_total + 1) if i not in chosen)
