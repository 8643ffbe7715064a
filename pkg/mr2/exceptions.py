"""
Exceções customizadas para o módulo mr2
"""
from typing import Optional, Sequence

class MR2Error(Exception):
    """Exceção base para erros do módulo mr2"""
    pass

class ParameterError(MR2Error):
    """Exceção quando um parâmetro está fora do domínio"""
    pass

class CapacityError(MR2Error):
    """Exceção quando um limite configurado de tamanho é excedido"""
    def __init__(self, what: str, size: int, cap: int):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what} has size {size}, exceeding the configured cap {cap}")

class DataError(MR2Error):
    """Exceção base para dados de entrada inválidos"""
    pass

class MissingColumnError(DataError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"Column '{column}' not found in input")

class CsvParseError(DataError):
    """Exceção quando uma célula não pode ser lida como número"""
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"Cannot parse value {value!r} at row {row}, column '{column}'")

class NonFiniteValueError(DataError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"Column '{column}' contains NaN or infinite values")

class DegenerateInstrumentError(DataError):
    """Exceção quando um instrumento (original ou gerado) tem variância zero"""
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Instrument {name} has zero sample variance")

class NonBinaryInstrumentError(DataError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"Instrument '{column}' is not binary (values outside {{0, 1}})")

class UnsupportedError(MR2Error):
    pass

class CollinearityError(MR2Error):
    """Exceção quando uma matriz de desenho tem posto incompleto"""
    def __init__(self, columns: Sequence[str], context: str = "design"):
        self.columns = list(columns)
        self.context = context
        super().__init__(f"Rank-deficient {context}: linearly dependent columns {self.columns}")

class SampleSizeError(MR2Error):
    def __init__(self, n: int, required: int):
        self.n = n
        self.required = required
        super().__init__(f"Sample size n={n} is insufficient; need n > {required}")

class WeakIdentificationError(MR2Error):
    """Exceção quando o denominador de identificação é numericamente zero"""
    def __init__(self, value: float, first_stage_f: Optional[float] = None):
        self.value = value
        self.first_stage_f = first_stage_f
        message = f"Weak identification: denominator moment {value:.3e} is numerically zero"
        if first_stage_f is not None:
            message += f" (first-stage F = {first_stage_f:.4g})"
        super().__init__(message)

class OutputError(MR2Error):
    """Exceção quando um arquivo de saída não pode ser escrito"""
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Cannot write output {path}: {reason}")

class AggregationError(MR2Error):
    def __init__(self, method: str):
        self.method = method
        super().__init__(f"All Monte Carlo replications failed for estimator '{method}'")

class EstimationError(MR2Error):
    """Exceção para falhas inesperadas encapsuladas pelo serviço"""
    pass
