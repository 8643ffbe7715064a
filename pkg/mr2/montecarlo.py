"""
Motor de Monte Carlo: geração dos desenhos de simulação, replicação paralela e agregação
"""
import itertools
import logging
from math import sqrt
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from joblib import Parallel, delayed
from pydantic import ValidationError

from mr2.config import MR2Config
from mr2.dataset import Dataset
from mr2.estimator import FitResult, fit_h_opt, fit_mr2, fit_naive_2sls, fit_oracle_2sls, fit_ratio
from mr2.exceptions import (
    AggregationError,
    CollinearityError,
    DataError,
    ParameterError,
    SampleSizeError,
    WeakIdentificationError,
)
from mr2.instruments import interaction_basis
from mr2.models import EstimatorMetrics, Link, McReport, McScenario

# Configurar logging
logger = logging.getLogger(__name__)

# Falhas que excluem a replicação da agregação
REPLICATION_FAILURES = (WeakIdentificationError, CollinearityError, DataError, SampleSizeError)

_BETA_50_RULE = [0.0, 0.0, 0.0, 0.2, 0.2]
_BETA_PLURALITY = [0.0, 0.0, 0.1, 0.2, 0.3]
_BETA_BOTH_VIOLATED = [0.0, 0.0, 0.2, 0.2, 0.2]
_BLOCKS = (_BETA_50_RULE, _BETA_PLURALITY, _BETA_BOTH_VIOLATED)


def _build_presets() -> Dict[str, Dict[str, object]]:
    presets: Dict[str, Dict[str, object]] = {}
    for table, link, strength in (
        ("table1", Link.IDENTITY_FULL, 0.6),
        ("table3", Link.LOG, 1.0),
        ("table4", Link.PROBIT, 1.0),
        ("tableS1", Link.IDENTITY_FULL, 1.0),
    ):
        for block, beta in enumerate(_BLOCKS, start=1):
            presets[f"{table}-block{block}"] = {"link": link, "C": strength, "beta_direct": list(beta)}

    # interações esparsas: apenas os desenhos "50% vale" e "ambas violadas"
    for table, strength in (("table2", 0.6), ("tableS2", 1.0)):
        block = 1
        for beta in (_BETA_50_RULE, _BETA_BOTH_VIOLATED):
            for gamma in (0.3, 0.6):
                presets[f"{table}-block{block}"] = {
                    "link": Link.IDENTITY_SPARSE,
                    "C": strength,
                    "gamma": gamma,
                    "beta_direct": list(beta),
                }
                block += 1
    for name, values in presets.items():
        values["name"] = name
    return presets


PRESETS = _build_presets()


def list_presets() -> List[str]:
    return sorted(PRESETS)


def preset(name: str, **overrides) -> McScenario:
    """Cenário pré-definido com sobrescritas opcionais (n, reps, seed, ...)"""
    if name not in PRESETS:
        raise ParameterError(f"Unknown preset '{name}'. Available presets: {', '.join(list_presets())}")
    values = dict(PRESETS[name])
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return McScenario(**values)
    except ValidationError as e:
        raise ParameterError(f"Invalid scenario for preset '{name}': {e}") from e


_LIST_FIELDS = {"beta_direct", "error_cov"}


def load_scenario(path: Union[str, Path], **overrides) -> McScenario:
    """
    Lê um arquivo KEY=VALUE de cenário.

    Listas separadas por vírgula; error_cov como 4 números em ordem de linha.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"Scenario file {path} does not exist")
    raw = dotenv_values(path)
    fields = {name.lower(): name for name in McScenario.model_fields}
    values: Dict[str, object] = {}
    for key, value in raw.items():
        field = fields.get(key.strip().lower())
        if field is None:
            raise ParameterError(f"Unknown scenario key '{key}' in {path}")
        if value is None or value.strip() == "":
            continue
        if field in _LIST_FIELDS:
            try:
                numbers = [float(part) for part in value.split(",")]
            except ValueError as e:
                raise ParameterError(f"Scenario key '{key}' must be a comma-separated list of numbers") from e
            values[field] = [numbers[0:2], numbers[2:4]] if field == "error_cov" else numbers
        else:
            values[field] = value.strip()
    values.setdefault("name", path.stem)
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return McScenario(**values)
    except ValidationError as e:
        raise ParameterError(f"Invalid scenario file {path}: {e}") from e


def _replication_rng(seed: int, rep_index: int, stream: int = 0) -> np.random.Generator:
    """Fluxo independente por (semente mestre, replicação[, subfluxo])"""
    key = (rep_index,) if stream == 0 else (rep_index, stream)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _product_terms(g: np.ndarray, combos: Sequence[Tuple[int, ...]]) -> np.ndarray:
    if not combos:
        return np.zeros(g.shape[0])
    return sum(np.prod(g[:, list(combo)], axis=1) for combo in combos)


def sparse_interactions(scenario: McScenario, rep_index: int) -> List[Tuple[int, ...]]:
    """
    Sorteia a fração gamma das interações de ordem [2, ||beta||_0] e das de
    ordem >= ||beta||_0 + 1 (índices 0-based).
    """
    rng = _replication_rng(scenario.seed, 1 if scenario.freeze_interactions else rep_index, stream=1)
    order_split = scenario.n_invalid
    universe = range(scenario.K)
    lower = [c for order in range(2, order_split + 1) for c in itertools.combinations(universe, order)]
    higher = [c for order in range(max(order_split + 1, 2), scenario.K + 1) for c in itertools.combinations(universe, order)]

    selected: List[Tuple[int, ...]] = []
    for group in (lower, higher):
        size = int(round(scenario.gamma * len(group)))
        if size:
            chosen = np.sort(rng.choice(len(group), size=size, replace=False))
            selected += [group[j] for j in chosen]
    return selected


def generate(scenario: McScenario, rep_index: int) -> Dataset:
    """Gera uma amostra (Y, A, G) do desenho de simulação para a replicação dada"""
    rng = _replication_rng(scenario.seed, rep_index)
    g = rng.binomial(1, scenario.p, size=(scenario.n, scenario.K)).astype(float)
    errors = rng.multivariate_normal(np.zeros(2), np.asarray(scenario.error_cov), size=scenario.n)
    eps_y, eps_a = errors[:, 0], errors[:, 1]
    main = g.sum(axis=1)

    if scenario.link == Link.IDENTITY_FULL:
        # soma de todos os produtos de subconjuntos não vazios = prod(1 + G) - 1
        a = scenario.C * (np.prod(1.0 + g, axis=1) - 1.0) + eps_a
    elif scenario.link == Link.IDENTITY_SPARSE:
        combos = sparse_interactions(scenario, rep_index)
        a = scenario.C * (main + _product_terms(g, combos)) + eps_a
    elif scenario.link == Link.LOG:
        a = np.exp(scenario.C * main) + eps_a
    else:
        a = (-scenario.probit_threshold + scenario.C * main + eps_a > 0).astype(float)

    y = scenario.beta_a * a + g @ np.asarray(scenario.beta_direct) + eps_y
    return Dataset(y=y, a=a, g=g, binary_instruments=True)


def _fit_h_opt(d: Dataset, scenario: McScenario) -> FitResult:
    preliminary = fit_mr2(d, scenario.k_dagger)
    basis = interaction_basis(d, d.k_total - scenario.k_dagger + 1, d.k_total)
    return fit_h_opt(d, basis, preliminary.residual_eps, mode="heteroskedastic", k_dagger=scenario.k_dagger)


ESTIMATORS: Dict[str, Callable[[Dataset, McScenario], FitResult]] = {
    "mr2": lambda d, s: fit_mr2(d, s.k_dagger),
    "oracle": lambda d, s: fit_oracle_2sls(d, s.valid_indices),
    "naive": lambda d, s: fit_naive_2sls(d),
    "ratio": lambda d, s: fit_ratio(d),
    "mr2_hopt": _fit_h_opt,
}

Draw = Optional[Tuple[float, float, float]]


def _replicate(scenario: McScenario, rep_index: int, methods: Sequence[str]) -> Dict[str, Draw]:
    try:
        d = generate(scenario, rep_index)
    except DataError as e:
        logger.warning(f"Replication {rep_index}: generated data rejected ({e})")
        return {method: None for method in methods}

    draws: Dict[str, Draw] = {}
    for method in methods:
        try:
            fit = ESTIMATORS[method](d, scenario)
            draws[method] = (fit.beta_a, fit.variance(scenario.variance), fit.first_stage_p)
        except REPLICATION_FAILURES as e:
            logger.debug(f"Replication {rep_index}, {method} failed: {e}")
            draws[method] = None
    return draws


def _aggregate(method: str, draws: List[Draw], beta_a: float) -> EstimatorMetrics:
    ok = [draw for draw in draws if draw is not None]
    failed = len(draws) - len(ok)
    if not ok:
        raise AggregationError(method)
    if failed:
        logger.warning(f"{failed} of {len(draws)} replications failed for {method}; excluded from aggregates")

    estimates = np.array([draw[0] for draw in ok])
    variances = np.array([draw[1] for draw in ok])
    f_p = np.array([draw[2] for draw in ok])
    half_width = MR2Config.Z_CRIT_95 * np.sqrt(variances)
    sqrt_var = float(np.std(estimates, ddof=1)) if len(ok) > 1 else None
    finite_p = f_p[np.isfinite(f_p)]

    return EstimatorMetrics(
        method=method,
        abs_bias=abs(float(np.mean(estimates)) - beta_a),
        sqrt_var=sqrt_var,
        sqrt_evar=float(np.sqrt(np.mean(variances))),
        cov95=float(np.mean(np.abs(estimates - beta_a) <= half_width)),
        mcse=None if sqrt_var is None else sqrt_var / sqrt(len(ok)),
        mean_estimate=float(np.mean(estimates)),
        f_rejection_rate=float(np.mean(finite_p < MR2Config.WEAK_IV_ALPHA)) if finite_p.size else None,
        n_success=len(ok),
        n_failed=failed,
    )


def run(scenario: McScenario, estimators: Sequence[str], n_jobs: Optional[int] = None) -> McReport:
    """Executa reps replicações e agrega |Bias|, √Var, √EVar e Cov95 por estimador"""
    methods = list(dict.fromkeys(estimators))
    if not methods:
        raise ParameterError("At least one estimator is required")
    for method in methods:
        if method not in ESTIMATORS:
            raise ParameterError(f"Unknown estimator '{method}'. Available: {', '.join(ESTIMATORS)}")
    if "oracle" in methods and not scenario.valid_indices:
        raise ParameterError("Oracle estimator needs at least one valid instrument (a zero in beta_direct)")
    n_jobs = MR2Config.validate_threads(n_jobs or MR2Config.DEFAULT_THREADS)

    logger.info(f"Running scenario '{scenario.name}': n={scenario.n}, reps={scenario.reps}, methods={methods}, jobs={n_jobs}")
    results = Parallel(n_jobs=n_jobs)(
        delayed(_replicate)(scenario, rep, methods) for rep in range(1, scenario.reps + 1)
    )
    metrics = {method: _aggregate(method, [draws[method] for draws in results], scenario.beta_a) for method in methods}
    logger.info(f"Scenario '{scenario.name}' finished")
    return McReport(scenario=scenario, reps=scenario.reps, metrics=metrics)


def _cell(value: Optional[float]) -> str:
    return "NA" if value is None else f"{value:.3f}"


def format_table(report: McReport) -> str:
    """Tabela de texto com linhas |Bias|, √Var, √EVar, Cov95 e uma coluna por estimador"""
    methods = list(report.metrics)
    width = max(10, *(len(m) + 2 for m in methods))
    title = report.scenario.name or "scenario"
    lines = [
        f"{title}: n={report.scenario.n}, K={report.scenario.K}, C={report.scenario.C}, "
        f"beta={tuple(report.scenario.beta_direct)}, reps={report.reps}",
        f"{'':<8}" + "".join(f"{m:>{width}}" for m in methods),
    ]
    rows = (
        ("|Bias|", lambda m: m.abs_bias),
        ("√Var", lambda m: m.sqrt_var),
        ("√EVar", lambda m: m.sqrt_evar),
        ("Cov95", lambda m: m.cov95),
    )
    for label, getter in rows:
        lines.append(f"{label:<8}" + "".join(f"{_cell(getter(report.metrics[m])):>{width}}" for m in methods))
    failed = {m: report.metrics[m].n_failed for m in methods if report.metrics[m].n_failed}
    if failed:
        lines.append(f"failed replications: {failed}")
    return "\n".join(lines)
