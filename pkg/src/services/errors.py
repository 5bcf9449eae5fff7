"""
Hierarquia de exceções do simulador.
Cada categoria tem um código de saída próprio na CLI (ver main.py).
"""
from typing import Optional


class SimulationError(Exception):
    """Erro base de todo o pacote."""


class ConfigurationError(SimulationError, ValueError):
    """Parâmetros inválidos, geometria inviável ou contexto incompleto."""


class UnknownPresetError(ConfigurationError):
    """Preset de experimento inexistente."""


class MetricError(SimulationError, ValueError):
    """Entrada inválida para as métricas de oscilação."""


class ResultsFormatError(SimulationError, ValueError):
    """CSV de resultados com cabeçalho inesperado."""


class CollisionError(SimulationError):
    """Espaçamento negativo detectado durante a simulação.

    Os argumentos são repassados a Exception para que o erro sobreviva
    ao pickle entre processos do pool de workers.
    """

    def __init__(self, message: str, step: int, vehicle: int,
                 spacing: float, seed: Optional[int] = None):
        super().__init__(message, step, vehicle, spacing, seed)
        self.message = message
        self.step = step
        self.vehicle = vehicle
        self.spacing = spacing
        self.seed = seed

    def with_seed(self, seed: int) -> "CollisionError":
        return CollisionError(self.message, self.step, self.vehicle, self.spacing, seed)

    def __str__(self) -> str:
        base = f"{self.message} (passo {self.step}, veículo {self.vehicle}, espaçamento {self.spacing:.6g} m)"
        if self.seed is not None:
            base += f" [seed {self.seed}]"
        return base


class EnsembleCollisionError(SimulationError):
    """Um ou mais ensembles abortados por colisão; os demais foram concluídos.

    `failures` guarda pares (rótulo do ensemble, CollisionError).
    """

    def __init__(self, failures):
        failures = list(failures)
        super().__init__(failures)
        self.failures = failures

    def __str__(self) -> str:
        parts = "; ".join(f"{label} [seed {error.seed}]" for label, error in self.failures)
        return f"colisão em {len(self.failures)} ensemble(s), ignorado(s): {parts}"
