"""
Modelo de dados em memória para a estimação e leitura/validação de CSV
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from mr2.exceptions import (
    CsvParseError,
    DataError,
    DegenerateInstrumentError,
    MissingColumnError,
    NonBinaryInstrumentError,
    NonFiniteValueError,
    SampleSizeError,
)

# Configurar logging
logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Amostra (Y, A, G_1..G_K[, M]) imutável após a construção"""
    y: np.ndarray
    a: np.ndarray
    g: np.ndarray
    m: Optional[np.ndarray] = None
    g_names: Tuple[str, ...] = ()
    m_names: Tuple[str, ...] = ()
    outcome_name: str = "Y"
    exposure_name: str = "A"
    binary_instruments: bool = False

    def __post_init__(self):
        """Validação pós-inicialização"""
        y = np.array(self.y, dtype=float).reshape(-1)
        a = np.array(self.a, dtype=float).reshape(-1)
        g = np.array(self.g, dtype=float)
        if g.ndim == 1:
            g = g.reshape(-1, 1)
        m = None if self.m is None else np.array(self.m, dtype=float)
        if m is not None and m.ndim == 1:
            m = m.reshape(-1, 1)

        n = y.shape[0]
        if n < 2:
            raise SampleSizeError(n, 1)
        if a.shape[0] != n or g.shape[0] != n or (m is not None and m.shape[0] != n):
            raise DataError("Outcome, exposure, instruments and covariates must have the same number of rows")
        if g.shape[1] < 1:
            raise DataError("At least one instrument column is required")

        g_names = tuple(self.g_names) or tuple(f"G{k + 1}" for k in range(g.shape[1]))
        if len(g_names) != g.shape[1]:
            raise DataError(f"Expected {g.shape[1]} instrument names, got {len(g_names)}")
        m_names: Tuple[str, ...] = ()
        if m is not None:
            m_names = tuple(self.m_names) or tuple(f"M{j + 1}" for j in range(m.shape[1]))
            if len(m_names) != m.shape[1]:
                raise DataError(f"Expected {m.shape[1]} covariate names, got {len(m_names)}")

        _check_finite(y, (self.outcome_name,))
        _check_finite(a, (self.exposure_name,))
        _check_finite(g, g_names)
        if m is not None:
            _check_finite(m, m_names)

        for k, name in enumerate(g_names):
            column = g[:, k]
            if np.all(column == column[0]):
                raise DegenerateInstrumentError(f"column '{name}'")
            if self.binary_instruments and not np.all((column == 0) | (column == 1)):
                raise NonBinaryInstrumentError(name)

        for arr in (y, a, g, m):
            if arr is not None:
                arr.setflags(write=False)

        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "g_names", g_names)
        object.__setattr__(self, "m_names", m_names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k_total(self) -> int:
        return self.g.shape[1]

    @property
    def is_binary(self) -> bool:
        """Todos os instrumentos assumem apenas valores em {0, 1}"""
        return bool(np.all((self.g == 0) | (self.g == 1)))

    def require_binary(self) -> None:
        for k, name in enumerate(self.g_names):
            column = self.g[:, k]
            if not np.all((column == 0) | (column == 1)):
                raise NonBinaryInstrumentError(name)

    def columns(self, indices: Sequence[int]) -> np.ndarray:
        """Retorna as colunas de G para índices 1-based"""
        return self.g[:, [i - 1 for i in indices]]

    def take(self, rows: np.ndarray) -> "Dataset":
        """Nova amostra com as linhas indicadas (usada no bootstrap)"""
        return Dataset(
            y=self.y[rows],
            a=self.a[rows],
            g=self.g[rows],
            m=None if self.m is None else self.m[rows],
            g_names=self.g_names,
            m_names=self.m_names,
            outcome_name=self.outcome_name,
            exposure_name=self.exposure_name,
            binary_instruments=self.binary_instruments,
        )


def _check_finite(values: np.ndarray, names: Sequence[str]) -> None:
    block = values.reshape(values.shape[0], -1)
    for j, name in enumerate(names):
        if not np.all(np.isfinite(block[:, j])):
            raise NonFiniteValueError(name)


def column_means(d: Dataset) -> np.ndarray:
    """Médias amostrais Ê(G_k), k = 1..K"""
    return d.g.mean(axis=0)


def _parse_column(frame: pd.DataFrame, column: str) -> np.ndarray:
    raw = frame[column].str.strip()
    parsed = pd.to_numeric(raw, errors="coerce")
    bad = parsed.isna().to_numpy()
    if bad.any():
        row = int(np.argmax(bad))
        # Linhas numeradas a partir de 1, sem contar o cabeçalho
        raise CsvParseError(row + 1, column, str(frame[column].iloc[row]))
    # to_numeric só valida; o parser rápido do pandas erra no último dígito
    values = raw.astype(float).to_numpy()
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(column)
    return values


def _read_frame(path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Input file {path} does not exist")

    logger.debug(f"Reading CSV {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        logger.error(f"Error reading {path}: {e}")
        raise DataError(f"Cannot read CSV {path}: {e}") from e

    for column in columns:
        if column not in frame.columns:
            raise MissingColumnError(column)
    return frame


def load_csv(
    path: PathLike,
    outcome: str,
    exposure: str,
    instruments: Sequence[str],
    covariates: Optional[Sequence[str]] = None,
    binary_instruments: bool = False,
) -> Dataset:
    """Lê um CSV com cabeçalho e monta um Dataset validado"""
    if not instruments:
        raise DataError("Instrument column list is empty")
    covariates = list(covariates or [])
    frame = _read_frame(path, [outcome, exposure, *instruments, *covariates])

    y = _parse_column(frame, outcome)
    a = _parse_column(frame, exposure)
    g = np.column_stack([_parse_column(frame, c) for c in instruments])
    m = np.column_stack([_parse_column(frame, c) for c in covariates]) if covariates else None

    d = Dataset(
        y=y,
        a=a,
        g=g,
        m=m,
        g_names=tuple(instruments),
        m_names=tuple(covariates),
        outcome_name=outcome,
        exposure_name=exposure,
        binary_instruments=binary_instruments,
    )
    logger.info(f"Loaded dataset from {path}: n={d.n}, K={d.k_total}, covariates={len(covariates)}")
    return d


def load_instruments_csv(
    path: PathLike,
    instruments: Sequence[str],
    covariates: Optional[Sequence[str]] = None,
    binary_instruments: bool = False,
) -> Dataset:
    """
    Lê apenas G (e M) para exportar instrumentos; Y e A ficam zerados e não
    devem ser usados em estimação.
    """
    if not instruments:
        raise DataError("Instrument column list is empty")
    covariates = list(covariates or [])
    frame = _read_frame(path, [*instruments, *covariates])
    g = np.column_stack([_parse_column(frame, c) for c in instruments])
    m = np.column_stack([_parse_column(frame, c) for c in covariates]) if covariates else None
    zeros = np.zeros(g.shape[0])
    return Dataset(
        y=zeros,
        a=zeros,
        g=g,
        m=m,
        g_names=tuple(instruments),
        m_names=tuple(covariates),
        binary_instruments=binary_instruments,
    )


def write_csv(d: Dataset, path: PathLike) -> Path:
    """Escreve o Dataset em CSV com 17 dígitos significativos"""
    path = Path(path)
    columns: List[Tuple[str, np.ndarray]] = [(d.outcome_name, d.y), (d.exposure_name, d.a)]
    columns += [(name, d.g[:, k]) for k, name in enumerate(d.g_names)]
    if d.m is not None:
        columns += [(name, d.m[:, j]) for j, name in enumerate(d.m_names)]
    frame = pd.DataFrame({name: values for name, values in columns})
    frame.to_csv(path, index=False, float_format="%.17g", encoding="utf-8")
    logger.debug(f"Dataset written to {path}")
    return path
