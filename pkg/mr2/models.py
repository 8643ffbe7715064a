"""
Modelos pydantic de entrada/saída: resumos JSON de ajustes, cenários e relatórios de Monte Carlo
"""
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

if TYPE_CHECKING:
    from mr2.diagnostics import HausmanResult
    from mr2.estimator import FitResult


class Link(str, Enum):
    IDENTITY_FULL = "identity_full_interactions"
    IDENTITY_SPARSE = "identity_sparse"
    LOG = "log_main_effects"
    PROBIT = "probit_threshold"


class FitSummary(BaseModel):
    method: str
    beta_a: float
    beta_0: float
    se_sandwich: float
    se_homoskedastic: float
    se_bootstrap: Optional[float] = None
    se_efficient: Optional[float] = None
    first_stage_F: float
    first_stage_p: float
    n: int
    K: int
    k_dagger: Optional[int] = None
    J: int

    @classmethod
    def from_fit(cls, fit: "FitResult") -> "FitSummary":
        return cls(
            method=fit.method,
            beta_a=fit.beta_a,
            beta_0=fit.beta_0,
            se_sandwich=fit.se_sandwich,
            se_homoskedastic=fit.se_homoskedastic,
            se_bootstrap=None if fit.var_bootstrap is None else float(np.sqrt(fit.var_bootstrap)),
            se_efficient=None if fit.var_efficient is None else float(np.sqrt(fit.var_efficient)),
            first_stage_F=fit.first_stage_F,
            first_stage_p=fit.first_stage_p,
            n=fit.n,
            K=fit.K,
            k_dagger=fit.k_dagger,
            J=fit.J,
        )


class HausmanSummary(BaseModel):
    ht: Optional[float] = None
    p_value: Optional[float] = None
    k_ref: Optional[int] = None
    k_alt: Optional[int] = None
    status: str

    @classmethod
    def from_result(cls, result: "HausmanResult") -> "HausmanSummary":
        return cls(ht=result.ht, p_value=result.p_value, k_ref=result.k_ref, k_alt=result.k_alt, status=result.status.value)


class EstimateOutput(BaseModel):
    """Saída do subcomando estimate"""
    fits: List[FitSummary]
    hausman: List[HausmanSummary] = Field(default_factory=list)


class McScenario(BaseModel):
    """Configuração de um desenho de simulação"""
    name: Optional[str] = None
    n: int = Field(10_000, ge=2)
    K: int = Field(5, ge=1)
    p: float = 0.8
    beta_direct: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0, 0.2, 0.2])
    link: Link = Link.IDENTITY_FULL
    C: float = 0.6
    gamma: Optional[float] = None
    beta_a: float = 1.0
    error_cov: List[List[float]] = Field(default_factory=lambda: [[1.0, 0.25], [0.25, 1.0]])
    reps: int = Field(1000, ge=1)
    seed: int = Field(20240101, ge=0)
    k_dagger: int = Field(2, ge=1)
    probit_threshold: float = 3.0
    freeze_interactions: bool = False
    variance: str = "sandwich"

    @field_validator("p")
    @classmethod
    def check_p(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {value}")
        return value

    @field_validator("error_cov")
    @classmethod
    def check_error_cov(cls, value: List[List[float]]) -> List[List[float]]:
        matrix = np.asarray(value, dtype=float)
        if matrix.shape != (2, 2):
            raise ValueError("error_cov must be a 2x2 matrix")
        if not np.allclose(matrix, matrix.T):
            raise ValueError("error_cov must be symmetric")
        if np.min(np.linalg.eigvalsh(matrix)) <= 0.0:
            raise ValueError("error_cov must be positive definite")
        return value

    @field_validator("variance")
    @classmethod
    def check_variance(cls, value: str) -> str:
        if value not in ("sandwich", "homoskedastic"):
            raise ValueError(f"variance must be 'sandwich' or 'homoskedastic', got '{value}'")
        return value

    @model_validator(mode="after")
    def check_dimensions(self) -> "McScenario":
        if len(self.beta_direct) != self.K:
            raise ValueError(f"beta_direct has length {len(self.beta_direct)}, expected K={self.K}")
        if self.k_dagger > self.K:
            raise ValueError(f"k_dagger={self.k_dagger} exceeds K={self.K}")
        if self.link == Link.IDENTITY_SPARSE:
            if self.gamma is None or not 0.0 < self.gamma <= 1.0:
                raise ValueError("identity_sparse link requires gamma in (0, 1]")
        return self

    @property
    def valid_indices(self) -> Tuple[int, ...]:
        """Índices 1-based dos IVs sem efeito direto"""
        return tuple(k + 1 for k, b in enumerate(self.beta_direct) if b == 0.0)

    @property
    def n_invalid(self) -> int:
        return sum(1 for b in self.beta_direct if b != 0.0)


class EstimatorMetrics(BaseModel):
    method: str
    abs_bias: float
    sqrt_var: Optional[float] = None
    sqrt_evar: float
    cov95: float
    mcse: Optional[float] = None
    mean_estimate: float
    f_rejection_rate: Optional[float] = None
    n_success: int
    n_failed: int


class McReport(BaseModel):
    scenario: McScenario
    reps: int
    metrics: Dict[str, EstimatorMetrics]
