"""
Modelo de seguimento veicular de Newell com ruído estocástico.

A velocidade no próximo intervalo τ é função do espaçamento desejado
de cada veículo, mais um termo de ruído para os tipos sem automação:

    v(t + τ, n) = min{ u0, max{ min{u0, (s_d - s_j)/τ} + σ̂·Z, 0 } }

O espaçamento desejado s_d depende do tipo do veículo (humano,
automatizado, com multi-antecipação ou conectado).
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class ModelParams:
    """Parâmetros do diagrama fundamental, comuns a todos os veículos."""
    u0: float = 25.0  # velocidade de fluxo livre, m/s
    s_j: float = 7.5  # espaçamento de congestionamento, m
    tau: float = 1.5  # intervalo de tempo (também o passo de atualização), s
    sigma_hat: float = 0.25  # amplitude do ruído por passo, m/s

    def __post_init__(self):
        if not self.u0 > 0:
            raise ConfigurationError(f"u0 deve ser positivo (recebido {self.u0})")
        if not self.s_j > 0:
            raise ConfigurationError(f"s_j deve ser positivo (recebido {self.s_j})")
        if not self.tau > 0:
            raise ConfigurationError(f"tau deve ser positivo (recebido {self.tau})")
        if not self.sigma_hat >= 0:
            raise ConfigurationError(f"sigma_hat não pode ser negativo (recebido {self.sigma_hat})")
        if not np.isfinite(self.free_flow_spacing):
            raise ConfigurationError("espaçamento de fluxo livre s_j + u0·tau não é finito")

    @property
    def free_flow_spacing(self) -> float:
        """Menor espaçamento em que o veículo atinge u0."""
        return self.s_j + self.u0 * self.tau

    def with_sigma(self, sigma_hat: float) -> "ModelParams":
        return replace(self, sigma_hat=sigma_hat)


class VehicleKind(str, Enum):
    """Os sete tipos de veículo considerados."""
    HV = "HV"  # dirigido por humano
    AV = "AV"  # automatizado
    MAV = "MAV"  # automatizado com multi-antecipação
    PCV = "PCV"  # parcialmente conectado (V2V)
    PCAV = "PCAV"  # parcialmente conectado e automatizado
    FCV = "FCV"  # totalmente conectado (V2I)
    FCAV = "FCAV"  # totalmente conectado e automatizado

    @property
    def noisy(self) -> bool:
        """Tipos que medem o espaçamento com erro usam σ̂; os demais usam 0."""
        return self in (VehicleKind.HV, VehicleKind.PCV, VehicleKind.FCV)

    @property
    def partially_connected(self) -> bool:
        return self in (VehicleKind.PCV, VehicleKind.PCAV)

    @property
    def fully_connected(self) -> bool:
        return self in (VehicleKind.FCV, VehicleKind.FCAV)

    @property
    def intelligent(self) -> bool:
        return self is not VehicleKind.HV

    @classmethod
    def parse(cls, value: Union[str, "VehicleKind"]) -> "VehicleKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ConfigurationError(f"tipo de veículo desconhecido '{value}' (válidos: {valid})") from None


@dataclass(frozen=True)
class SpacingContext:
    """Informação de espaçamento disponível a um veículo no instante t.

    `connected_spacings` inclui o espaçamento do próprio veículo quando
    ele é parcialmente conectado. `mean_spacing` é 1/k(t), a densidade
    média compartilhada via infraestrutura.
    """
    own_spacing: float
    leader_spacing: Optional[float] = None
    connected_spacings: Tuple[float, ...] = field(default_factory=tuple)
    mean_spacing: Optional[float] = None
    vehicle: Optional[int] = None

    def __post_init__(self):
        if self.own_spacing < 0:
            raise ConfigurationError(f"{self._who()}: espaçamento próprio negativo ({self.own_spacing})")
        if any(s < 0 for s in self.connected_spacings):
            raise ConfigurationError(f"{self._who()}: espaçamento conectado negativo")
        if self.mean_spacing is not None and not self.mean_spacing > 0:
            raise ConfigurationError(f"{self._who()}: mean_spacing deve ser positivo ({self.mean_spacing})")

    def _who(self) -> str:
        return f"veículo {self.vehicle}" if self.vehicle is not None else "veículo"


def equilibrium_speed(spacing: ArrayLike, params: ModelParams) -> ArrayLike:
    """Parte determinística da lei de Newell: min{u0, (s - s_j)/τ}.

    Pode retornar valores negativos abaixo de s_j; o corte em zero é
    responsabilidade de quem chama. Aceita escalares ou arrays numpy.
    """
    speed = np.minimum(params.u0, (np.asarray(spacing, dtype=float) - params.s_j) / params.tau)
    if np.ndim(speed) == 0:
        return float(speed)
    return speed


def noise_amplitude(kind: VehicleKind, params: ModelParams) -> float:
    return params.sigma_hat if kind.noisy else 0.0


def desired_spacing(kind: VehicleKind, ctx: SpacingContext) -> float:
    """Espaçamento desejado s_d(t, n) conforme o tipo do veículo."""
    if kind in (VehicleKind.HV, VehicleKind.AV):
        return float(ctx.own_spacing)

    if kind is VehicleKind.MAV:
        if ctx.leader_spacing is None:
            raise ConfigurationError(f"{ctx._who()} ({kind.value}): falta leader_spacing")
        return (ctx.own_spacing + ctx.leader_spacing) / 2.0

    if kind.partially_connected:
        if not ctx.connected_spacings:
            raise ConfigurationError(f"{ctx._who()} ({kind.value}): connected_spacings vazio")
        return float(np.mean(np.asarray(ctx.connected_spacings, dtype=float)))

    if kind.fully_connected:
        if ctx.mean_spacing is None:
            raise ConfigurationError(f"{ctx._who()} ({kind.value}): falta mean_spacing")
        return float(ctx.mean_spacing)

    raise ConfigurationError(f"tipo de veículo sem regra de espaçamento: {kind}")


def clamp_speeds(speed: ArrayLike, params: ModelParams) -> ArrayLike:
    """Aplica min{u0, max{·, 0}}."""
    clamped = np.minimum(params.u0, np.maximum(speed, 0.0))
    if np.ndim(clamped) == 0:
        return float(clamped)
    return clamped


def next_speed(kind: VehicleKind, ctx: SpacingContext, params: ModelParams,
               noise_sample: float) -> float:
    """Velocidade v(t + τ, n) de um veículo, dado um sorteio N(0, 1) externo."""
    target = equilibrium_speed(desired_spacing(kind, ctx), params)
    return clamp_speeds(target + noise_amplitude(kind, params) * noise_sample, params)


def next_speeds(desired: np.ndarray, sigma_eff: np.ndarray, params: ModelParams,
                noise: np.ndarray) -> np.ndarray:
    """Versão vetorizada de next_speed para a frota inteira.

    `sigma_eff` já vem com zero para os tipos sem ruído; as operações de
    ponto flutuante são as mesmas da versão escalar.
    """
    return clamp_speeds(equilibrium_speed(desired, params) + sigma_eff * noise, params)


def noise_amplitudes(kinds: Sequence[VehicleKind], params: ModelParams) -> np.ndarray:
    return np.array([noise_amplitude(k, params) for k in kinds], dtype=float)
