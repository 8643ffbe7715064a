"""
mr2: estimação multiplamente robusta do efeito causal com variáveis instrumentais
"""
from mr2.dataset import Dataset, column_means, load_csv, write_csv
from mr2.diagnostics import HausmanResult, first_stage_f, hausman_test
from mr2.estimator import (
    FitResult,
    fit_2sls,
    fit_h_opt,
    fit_mr2,
    fit_naive_2sls,
    fit_oracle_2sls,
    h_opt_combination,
    ratio_estimate,
    variance_bootstrap,
    variance_homoskedastic,
    variance_sandwich,
)
from mr2.instruments import (
    InstrumentMatrix,
    WeightVector,
    build_instruments,
    build_weighted_instruments,
    default_h,
    estimate_weights,
)
from mr2.subsets import SubsetFamily, complement, enumerate_family, partial_id_interactions

__version__ = "1.0.0"
