"""
Métricas de crescimento das oscilações.

- Métrica 1 (via aberta): desvio-padrão da velocidade de cada veículo
  do pelotão ao longo de uma janela de tempo.
- Métrica 2 (anel): desvio-padrão da velocidade entre todos os
  veículos, a cada instante.

Todos os desvios-padrão são amostrais (denominador n − 1).
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import MetricError
from .scenario import RunRecord

# tolerância para comparar instantes da janela com a grade de tempo
_TIME_EPS = 1e-9

DEFAULT_FIT_START = 10


@dataclass(frozen=True)
class MeasurementWindow:
    """Janela [t_start, t_end] em segundos; t_end None = até o fim do registro."""
    t_start: float = 0.0
    t_end: Optional[float] = None

    def resolve(self, record: RunRecord) -> "MeasurementWindow":
        t_last = float(record.times[-1])
        return MeasurementWindow(self.t_start, t_last if self.t_end is None else self.t_end)


@dataclass
class PerVehicleStdCurve:
    values: np.ndarray  # índice 0 = veículo 1
    window: MeasurementWindow

    @property
    def indices(self) -> np.ndarray:
        return np.arange(1, len(self.values) + 1)


@dataclass
class OverTimeStdCurve:
    values: np.ndarray  # uma entrada por amostra do registro
    dt: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.dt


def default_window(record: RunRecord) -> MeasurementWindow:
    """Descarta o aquecimento de N·τ segundos (tempo para a informação do líder atravessar o pelotão)."""
    return MeasurementWindow(record.n_vehicles * record.dt, float(record.times[-1]))


def _window_mask(record: RunRecord, window: MeasurementWindow) -> np.ndarray:
    times = record.times
    t_last = float(times[-1])
    if window.t_start < -_TIME_EPS or window.t_end > t_last + _TIME_EPS or window.t_end < window.t_start:
        raise MetricError(
            f"janela [{window.t_start}, {window.t_end}] s fora do registro [0, {t_last}] s"
        )
    mask = (times >= window.t_start - _TIME_EPS) & (times <= window.t_end + _TIME_EPS)
    if mask.sum() < 2:
        raise MetricError(
            f"janela [{window.t_start}, {window.t_end}] s tem {int(mask.sum())} amostra(s); mínimo 2"
        )
    return mask


def per_vehicle_std(record: RunRecord, window: Optional[MeasurementWindow] = None) -> PerVehicleStdCurve:
    """Métrica 1: desvio-padrão da velocidade de cada veículo dentro da janela."""
    window = default_window(record) if window is None else window.resolve(record)
    mask = _window_mask(record, window)
    values = np.std(record.speeds[mask], axis=0, ddof=1)
    return PerVehicleStdCurve(values=values, window=window)


def over_time_std(record: RunRecord) -> OverTimeStdCurve:
    """Métrica 2: desvio-padrão da velocidade entre os veículos, a cada amostra."""
    if record.n_vehicles < 2:
        raise MetricError(f"over_time_std exige N >= 2 (recebido {record.n_vehicles})")
    return OverTimeStdCurve(values=np.std(record.speeds, axis=1, ddof=1), dt=record.dt)


def reduction_pct(baseline: float, treated: float) -> float:
    """Redução percentual de `treated` em relação a `baseline`."""
    if not baseline > 0:
        raise MetricError(f"redução indefinida para baseline = {baseline}")
    return 100.0 * (baseline - treated) / baseline


def growth_exponent(curve: Union[PerVehicleStdCurve, Sequence[float], np.ndarray],
                    fit_range: Optional[Tuple[int, int]] = None) -> float:
    """Inclinação por mínimos quadrados de log(std) contra log(n).

    `fit_range` é (primeiro, último) veículo, base 1 e inclusivo; o padrão
    é 10..N para fugir dos transientes de n pequeno.
    """
    values = np.asarray(curve.values if isinstance(curve, PerVehicleStdCurve) else curve, dtype=float)
    first, last = fit_range if fit_range is not None else (DEFAULT_FIT_START, len(values))
    if first < 1 or last > len(values) or last < first:
        raise MetricError(f"fit_range ({first}, {last}) fora de 1..{len(values)}")
    n = np.arange(first, last + 1, dtype=float)
    y = values[first - 1:last]
    if len(y) < 5:
        raise MetricError(f"fit_range com {len(y)} pontos; mínimo 5")
    if np.any(y <= 0):
        raise MetricError("valores não positivos no intervalo do ajuste")
    slope, _ = np.polyfit(np.log(n), np.log(y), 1)
    return float(slope)


def tail_mean(values: Union[Sequence[float], np.ndarray], n_points: int = 1) -> float:
    """Média dos últimos `n_points` pontos de uma curva."""
    values = np.asarray(values, dtype=float)
    if n_points < 1 or n_points > len(values):
        raise MetricError(f"n_points = {n_points} inválido para curva de {len(values)} pontos")
    return float(np.mean(values[-n_points:]))
