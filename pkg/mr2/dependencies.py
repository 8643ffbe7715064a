"""
Factory pattern para gerenciar dependências do serviço de estimação
"""
import logging
from typing import Optional

from config.settings import settings
from mr2.exceptions import ParameterError
from mr2.service import EstimationService

# Configurar logging
logger = logging.getLogger(__name__)


class EstimationServiceFactory:
    """Factory singleton que monta o EstimationService a partir das settings MR2_*"""

    _instance = None
    _estimation_service = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(EstimationServiceFactory, cls).__new__(cls)
        return cls._instance

    @classmethod
    def get_estimation_service(
        cls,
        bootstrap_reps: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> EstimationService:
        """
        Retorna instância singleton do EstimationService.

        Valores explícitos de bootstrap_reps ou seed recriam o serviço; os
        demais vêm de MR2_BOOTSTRAP_REPS e MR2_DEFAULT_SEED.
        """
        if cls._estimation_service is None or bootstrap_reps is not None or seed is not None:
            if not settings.validate():
                raise ParameterError("Invalid MR2_* settings; check the environment or .env file")
            cls._estimation_service = EstimationService(
                bootstrap_reps=settings.MR2_BOOTSTRAP_REPS if bootstrap_reps is None else bootstrap_reps,
                default_seed=settings.MR2_DEFAULT_SEED if seed is None else seed,
            )
            logger.debug("EstimationService built from settings")
        return cls._estimation_service

    @classmethod
    def reset(cls):
        """Reset das instâncias (útil para testes)"""
        cls._instance = None
        cls._estimation_service = None
