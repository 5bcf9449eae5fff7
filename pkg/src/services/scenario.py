"""
Cenários de simulação: pelotão em via aberta atrás de um líder com
velocidade constante, ou anel de comprimento L.

A atualização é síncrona: todas as velocidades de t + τ saem dos
espaçamentos de t. O passo de tempo é sempre Δt = τ.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CollisionError, ConfigurationError
from .newell_model import (
    ModelParams,
    SpacingContext,
    VehicleKind,
    clamp_speeds,
    equilibrium_speed,
    next_speeds,
    noise_amplitudes,
)

logger = logging.getLogger(__name__)

# Rótulo do líder na saída de trajetórias (não é um VehicleKind).
LEADER_LABEL = "LEADER"


@dataclass(frozen=True)
class OpenRoad:
    """Via aberta; o líder (veículo 0) anda a velocidade constante.

    Sem `leader_speed`, o líder usa a velocidade de equilíbrio do
    espaçamento inicial, de modo que o pelotão parte em equilíbrio.
    """
    leader_speed: Optional[float] = None


@dataclass(frozen=True)
class Ring:
    """Via circular de comprimento `length` (m)."""
    length: float


Geometry = Union[OpenRoad, Ring]


@dataclass(frozen=True)
class FleetConfig:
    """Composição da frota, do veículo 1 (frente) ao N (fim)."""
    n_vehicles: int
    kinds: Tuple[VehicleKind, ...]
    initial_spacing: Optional[float] = None

    def __post_init__(self):
        if self.n_vehicles < 1:
            raise ConfigurationError(f"n_vehicles deve ser >= 1 (recebido {self.n_vehicles})")
        kinds = tuple(VehicleKind.parse(k) for k in self.kinds)
        if len(kinds) != self.n_vehicles:
            raise ConfigurationError(
                f"kinds tem {len(kinds)} entradas, mas n_vehicles = {self.n_vehicles}"
            )
        object.__setattr__(self, "kinds", kinds)

    @classmethod
    def homogeneous(cls, n_vehicles: int, kind: VehicleKind = VehicleKind.HV,
                    initial_spacing: Optional[float] = None) -> "FleetConfig":
        return cls(n_vehicles, (VehicleKind.parse(kind),) * n_vehicles, initial_spacing)

    def count(self, kind: VehicleKind) -> int:
        return sum(1 for k in self.kinds if k is kind)


@dataclass
class ScenarioState:
    """Estado da frota em um instante.

    `positions` é o odômetro (não reduzido módulo L). Os espaçamentos são
    integrados como estado, s ← s + Δt·(v_pred − v), o que mantém um
    equilíbrio exatamente fixo.
    """
    t: float
    step: int
    positions: np.ndarray
    speeds: np.ndarray
    spacings: np.ndarray
    dt: float
    leader_speed: Optional[float] = None
    leader_start: Optional[float] = None

    @property
    def leader_position(self) -> Optional[float]:
        if self.leader_speed is None:
            return None
        return self.leader_start + self.step * self.leader_speed * self.dt


@dataclass
class RunRecord:
    """Histórico completo de uma simulação (linhas = amostras, colunas = veículos)."""
    dt: float
    speeds: np.ndarray
    positions: np.ndarray
    kinds: Tuple[VehicleKind, ...]
    leader_positions: Optional[np.ndarray] = None
    leader_speed: Optional[float] = None
    ring_length: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.speeds.shape != self.positions.shape:
            raise ConfigurationError(
                f"dimensões inconsistentes: speeds {self.speeds.shape}, positions {self.positions.shape}"
            )
        if self.speeds.ndim != 2 or self.speeds.shape[1] != len(self.kinds):
            raise ConfigurationError("a matriz de velocidades não corresponde à lista de tipos")
        if self.leader_positions is not None and len(self.leader_positions) != self.speeds.shape[0]:
            raise ConfigurationError("leader_positions com comprimento diferente do histórico")

    @property
    def n_steps(self) -> int:
        return self.speeds.shape[0]

    @property
    def n_vehicles(self) -> int:
        return self.speeds.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt

    @property
    def is_ring(self) -> bool:
        return self.ring_length is not None

    def wrapped_positions(self) -> np.ndarray:
        """Posições módulo L no anel; na via aberta devolve o odômetro."""
        if self.ring_length is None:
            return self.positions
        return np.mod(self.positions, self.ring_length)


@dataclass(frozen=True)
class _FleetLayout:
    sigma_eff: np.ndarray
    mav: np.ndarray
    pc: np.ndarray
    fc: np.ndarray
    any_mav: bool
    any_pc: bool
    any_fc: bool


@lru_cache(maxsize=64)
def _layout(fleet: FleetConfig, params: ModelParams) -> _FleetLayout:
    kinds = fleet.kinds
    mav = np.array([k is VehicleKind.MAV for k in kinds])
    pc = np.array([k.partially_connected for k in kinds])
    fc = np.array([k.fully_connected for k in kinds])
    return _FleetLayout(
        sigma_eff=noise_amplitudes(kinds, params),
        mav=mav, pc=pc, fc=fc,
        any_mav=bool(mav.any()), any_pc=bool(pc.any()), any_fc=bool(fc.any()),
    )


def _resolve_spacing(geometry: Geometry, fleet: FleetConfig, params: ModelParams) -> float:
    n = fleet.n_vehicles
    if isinstance(geometry, Ring):
        length = float(geometry.length)
        if not length > n * params.s_j:
            raise ConfigurationError(
                f"anel inviável: L = {length} m não comporta {n} veículos com s_j = {params.s_j} m"
            )
        spacing = length / n
        if fleet.initial_spacing is not None and abs(fleet.initial_spacing * n - length) > 1e-9 * length:
            raise ConfigurationError(
                f"initial_spacing {fleet.initial_spacing} m incompatível com L/N = {spacing} m"
            )
        return spacing

    if isinstance(geometry, OpenRoad):
        if fleet.initial_spacing is None:
            raise ConfigurationError("via aberta exige initial_spacing")
        spacing = float(fleet.initial_spacing)
        if spacing < params.s_j:
            raise ConfigurationError(
                f"initial_spacing {spacing} m menor que o espaçamento de congestionamento {params.s_j} m"
            )
        return spacing

    raise ConfigurationError(f"geometria desconhecida: {geometry!r}")


def init_scenario(geometry: Geometry, fleet: FleetConfig, params: ModelParams) -> ScenarioState:
    """Posiciona a frota com espaçamento uniforme e velocidades de equilíbrio."""
    spacing = _resolve_spacing(geometry, fleet, params)
    n = fleet.n_vehicles
    v0 = clamp_speeds(equilibrium_speed(spacing, params), params)

    leader_speed = None
    leader_start = None
    if isinstance(geometry, OpenRoad):
        leader_speed = v0 if geometry.leader_speed is None else float(geometry.leader_speed)
        if not 0.0 <= leader_speed <= params.u0:
            raise ConfigurationError(
                f"velocidade do líder {leader_speed} m/s fora de [0, {params.u0}]"
            )
        leader_start = 0.0
        positions = -spacing * np.arange(1, n + 1, dtype=float)
    else:
        positions = -spacing * np.arange(n, dtype=float)

    return ScenarioState(
        t=0.0,
        step=0,
        positions=positions,
        speeds=np.full(n, v0, dtype=float),
        spacings=np.full(n, spacing, dtype=float),
        dt=params.tau,
        leader_speed=leader_speed,
        leader_start=leader_start,
    )


def fleet_mean_spacing(state: ScenarioState, geometry: Geometry, fleet: FleetConfig) -> float:
    """s̄ = 1/k(t): L/N no anel, média dos espaçamentos dos seguidores na via aberta."""
    if isinstance(geometry, Ring):
        return float(geometry.length) / fleet.n_vehicles
    return float(np.mean(state.spacings))


def spacing_context(state: ScenarioState, index: int, geometry: Geometry,
                    fleet: FleetConfig) -> SpacingContext:
    """Monta o SpacingContext do veículo `index` (base 0) a partir do estado em t.

    O MAV logo atrás do líder da via aberta não tem o segundo espaçamento
    e usa o próprio nos dois termos.
    """
    spacings = state.spacings
    own = float(spacings[index])
    if isinstance(geometry, Ring):
        leader = float(spacings[index - 1])
    else:
        leader = float(spacings[index - 1]) if index > 0 else own
    connected = tuple(float(s) for s, k in zip(spacings, fleet.kinds) if k.partially_connected)
    return SpacingContext(
        own_spacing=own,
        leader_spacing=leader,
        connected_spacings=connected,
        mean_spacing=fleet_mean_spacing(state, geometry, fleet),
        vehicle=index + 1,
    )


def _desired_spacings(state: ScenarioState, geometry: Geometry, fleet: FleetConfig,
                      layout: _FleetLayout) -> np.ndarray:
    spacings = state.spacings
    desired = spacings.copy()
    if layout.any_mav:
        if isinstance(geometry, Ring):
            leader = np.roll(spacings, 1)
        else:
            leader = np.concatenate(([spacings[0]], spacings[:-1]))
        desired[layout.mav] = (spacings[layout.mav] + leader[layout.mav]) / 2.0
    if layout.any_pc:
        desired[layout.pc] = np.mean(spacings[layout.pc])
    if layout.any_fc:
        desired[layout.fc] = fleet_mean_spacing(state, geometry, fleet)
    return desired


def step(state: ScenarioState, geometry: Geometry, fleet: FleetConfig,
         params: ModelParams, rng: np.random.Generator) -> ScenarioState:
    """Avança a frota um intervalo τ."""
    layout = _layout(fleet, params)
    dt = params.tau
    # um sorteio por veículo, inclusive os sem ruído, para alinhar os fluxos aleatórios entre tipos
    noise = rng.standard_normal(fleet.n_vehicles)
    speeds = next_speeds(_desired_spacings(state, geometry, fleet, layout), layout.sigma_eff, params, noise)

    if isinstance(geometry, Ring):
        pred_speeds = np.roll(speeds, 1)
    else:
        pred_speeds = np.concatenate(([state.leader_speed], speeds[:-1]))

    spacings = state.spacings + dt * (pred_speeds - speeds)
    if np.any(spacings < 0):
        idx = int(np.argmin(spacings))
        raise CollisionError("colisão detectada", step=state.step + 1, vehicle=idx + 1,
                             spacing=float(spacings[idx]))

    return ScenarioState(
        t=(state.step + 1) * dt,
        step=state.step + 1,
        positions=state.positions + speeds * dt,
        speeds=speeds,
        spacings=spacings,
        dt=dt,
        leader_speed=state.leader_speed,
        leader_start=state.leader_start,
    )


def run(geometry: Geometry, fleet: FleetConfig, params: ModelParams, seed: int,
        n_steps: int, rng: Optional[np.random.Generator] = None) -> RunRecord:
    """Simula `n_steps` amostras (estado inicial + n_steps − 1 atualizações).

    Sem `rng`, o gerador é criado a partir de `seed`; com `rng` (caso do
    ensemble, que já sorteou o posicionamento), `seed` serve só para
    identificar a execução em erros.
    """
    if n_steps < 1:
        raise ConfigurationError(f"n_steps deve ser >= 1 (recebido {n_steps})")
    if rng is None:
        rng = np.random.default_rng(seed)

    state = init_scenario(geometry, fleet, params)
    n = fleet.n_vehicles
    speeds = np.empty((n_steps, n), dtype=float)
    positions = np.empty((n_steps, n), dtype=float)
    speeds[0] = state.speeds
    positions[0] = state.positions

    try:
        for k in range(1, n_steps):
            state = step(state, geometry, fleet, params, rng)
            speeds[k] = state.speeds
            positions[k] = state.positions
    except CollisionError as e:
        logger.debug(f"Execução abortada: {e.with_seed(seed)}")
        raise e.with_seed(seed) from None

    leader_positions = None
    if state.leader_speed is not None:
        leader_positions = state.leader_start + np.arange(n_steps) * state.leader_speed * params.tau

    return RunRecord(
        dt=params.tau,
        speeds=speeds,
        positions=positions,
        kinds=fleet.kinds,
        leader_positions=leader_positions,
        leader_speed=state.leader_speed,
        ring_length=float(geometry.length) if isinstance(geometry, Ring) else None,
        seed=seed,
    )


def intelligent_count(n_vehicles: int, mpr: float) -> int:
    """round(mpr·N), arredondando meio para cima."""
    return int(np.floor(mpr * n_vehicles + 0.5))


def place_intelligent(n_vehicles: int, mpr: float, kind: VehicleKind,
                      rng: np.random.Generator) -> Tuple[VehicleKind, ...]:
    """Sorteia posições distintas para round(mpr·N) veículos de `kind`; o resto é HV."""
    if not 0.0 <= mpr <= 1.0:
        raise ConfigurationError(f"mpr deve estar em [0, 1] (recebido {mpr})")
    kind = VehicleKind.parse(kind)
    count = intelligent_count(n_vehicles, mpr)
    kinds = [VehicleKind.HV] * n_vehicles
    if count == 0:
        if mpr > 0:
            logger.warning(
                f"⚠️ MPR {mpr:.4g} com {n_vehicles} veículos arredonda para zero {kind.value}; frota só de HV"
            )
        return tuple(kinds)
    for idx in rng.choice(n_vehicles, size=count, replace=False):
        kinds[int(idx)] = kind
    return tuple(kinds)


def place_at(n_vehicles: int, positions: Sequence[int], kind: VehicleKind) -> Tuple[VehicleKind, ...]:
    """Coloca `kind` nas posições fixas (base 1) do pelotão; o resto é HV."""
    kind = VehicleKind.parse(kind)
    kinds = [VehicleKind.HV] * n_vehicles
    for pos in positions:
        if not 1 <= int(pos) <= n_vehicles:
            raise ConfigurationError(f"posição {pos} fora do pelotão 1..{n_vehicles}")
        kinds[int(pos) - 1] = kind
    return tuple(kinds)
