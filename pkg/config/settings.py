"""
Configurações centralizadas do projeto
"""
import os
from dotenv import load_dotenv

# Carregar variáveis de ambiente
load_dotenv()

class Settings:
    """Configurações centralizadas do projeto"""

    # Aplicação
    DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"
    MR2_LOG_LEVEL: str = os.getenv("MR2_LOG_LEVEL", "WARNING").upper()

    # Paralelismo (default do flag --threads)
    MR2_THREADS: int = int(os.getenv("MR2_THREADS", "1"))

    # Limites combinatórios
    MR2_SUBSET_CAP: int = int(os.getenv("MR2_SUBSET_CAP", "1000000"))
    MR2_CELL_CAP: int = int(os.getenv("MR2_CELL_CAP", str(2 ** 20)))

    # Tolerâncias numéricas
    MR2_RANK_TOL: float = float(os.getenv("MR2_RANK_TOL", "1e-10"))
    MR2_WEAK_ID_TOL: float = float(os.getenv("MR2_WEAK_ID_TOL", "1e-8"))

    # Pesos para IVs correlacionados (constante aditiva na pmf conjunta)
    MR2_WEIGHT_SMOOTHING: float = float(os.getenv("MR2_WEIGHT_SMOOTHING", "0.0"))

    # Simulação e bootstrap
    MR2_DEFAULT_SEED: int = int(os.getenv("MR2_DEFAULT_SEED", "20240101"))
    MR2_BOOTSTRAP_REPS: int = int(os.getenv("MR2_BOOTSTRAP_REPS", "200"))

    def validate(self) -> bool:
        """Valida se as configurações numéricas são coerentes"""
        return all([
            self.MR2_THREADS >= 1,
            self.MR2_SUBSET_CAP >= 1,
            self.MR2_CELL_CAP >= 2,
            self.MR2_RANK_TOL > 0,
            self.MR2_WEAK_ID_TOL > 0,
            self.MR2_WEIGHT_SMOOTHING >= 0,
            self.MR2_BOOTSTRAP_REPS >= 2,
        ])

# Instância global das configurações
settings = Settings()
