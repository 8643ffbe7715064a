"""
Configurações específicas do módulo mr2
"""
from config.settings import settings
from mr2.exceptions import ParameterError

class MR2Config:
    """Configurações para estimação e simulação"""

    # Limites combinatórios
    SUBSET_CAP = getattr(settings, 'MR2_SUBSET_CAP', 1_000_000)
    CELL_CAP = getattr(settings, 'MR2_CELL_CAP', 2 ** 20)

    # Tolerâncias
    RANK_TOL = getattr(settings, 'MR2_RANK_TOL', 1e-10)
    WEAK_ID_TOL = getattr(settings, 'MR2_WEAK_ID_TOL', 1e-8)

    # Pesos da Proposição de IVs correlacionados
    WEIGHT_SMOOTHING = getattr(settings, 'MR2_WEIGHT_SMOOTHING', 0.0)

    # Execução
    DEFAULT_THREADS = getattr(settings, 'MR2_THREADS', 1)
    DEFAULT_SEED = getattr(settings, 'MR2_DEFAULT_SEED', 20240101)
    BOOTSTRAP_REPS = getattr(settings, 'MR2_BOOTSTRAP_REPS', 200)

    # Inferência
    Z_CRIT_95 = 1.96
    WEAK_IV_ALPHA = 0.05

    # Métodos e modos aceitos
    METHODS = ("mr2", "oracle", "naive", "ratio", "mr2_hopt")
    VARIANCE_MODES = ("sandwich", "homoskedastic", "bootstrap")

    @classmethod
    def validate_k_dagger(cls, k_dagger: int, k_total: int) -> int:
        """Valida k† contra o número de instrumentos candidatos"""
        if not 1 <= k_dagger <= k_total:
            raise ParameterError(f"k_dagger={k_dagger} out of range [1, {k_total}]")
        return k_dagger

    @classmethod
    def validate_threads(cls, threads: int) -> int:
        if threads < 1:
            raise ParameterError(f"threads must be >= 1, got {threads}")
        return threads
