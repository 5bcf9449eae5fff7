"""
Simulações de Monte Carlo: várias execuções com sementes derivadas de
uma semente mestra e posicionamento aleatório dos veículos
inteligentes; a curva esperada é a média das curvas das execuções.
"""
import logging
import time
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.errors import CollisionError, ConfigurationError
from services.experiment_presets import ExperimentConfig
from services.newell_model import ModelParams, VehicleKind
from services.oscillation_metrics import (
    MeasurementWindow,
    over_time_std,
    per_vehicle_std,
    reduction_pct,
    tail_mean,
)
from services.scenario import FleetConfig, Geometry, RunRecord, place_at, place_intelligent, run

logger = logging.getLogger(__name__)

METRICS = ("per_vehicle", "over_time")

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """Finalizador SplitMix64: bijeção em inteiros de 64 bits."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def run_seed(master_seed: int, run_index: int) -> int:
    """Semente da execução `run_index`; distinta para cada índice < 2^64."""
    return splitmix64((splitmix64(master_seed & _MASK64) + run_index) & _MASK64)


@dataclass(frozen=True)
class EnsembleSpec:
    """Tudo o que determina um ensemble.

    Com `positions` (base 1) o posicionamento é fixo e `mpr` é ignorado.
    """
    geometry: Geometry
    n_vehicles: int
    mpr: float
    kind: VehicleKind
    n_runs: int
    n_steps: int
    master_seed: int
    metric: str = "per_vehicle"
    window: Optional[MeasurementWindow] = None
    params: ModelParams = field(default_factory=ModelParams)
    initial_spacing: Optional[float] = None
    positions: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", VehicleKind.parse(self.kind))
        if self.positions is not None:
            object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
        if self.n_runs < 1:
            raise ConfigurationError(f"n_runs deve ser >= 1 (recebido {self.n_runs})")
        if self.n_steps < 1:
            raise ConfigurationError(f"n_steps deve ser >= 1 (recebido {self.n_steps})")
        if not 0.0 <= self.mpr <= 1.0:
            raise ConfigurationError(f"mpr deve estar em [0, 1] (recebido {self.mpr})")
        if self.metric not in METRICS:
            raise ConfigurationError(f"métrica desconhecida '{self.metric}' (válidas: {', '.join(METRICS)})")

    @property
    def label(self) -> str:
        if self.positions is not None:
            return f"{self.kind.value}@{','.join(str(p) for p in self.positions)}"
        if self.is_baseline:
            return "HV"
        return f"{self.kind.value} {self.mpr * 100:g}%"

    @property
    def is_baseline(self) -> bool:
        return self.positions is None and (self.mpr == 0 or self.kind is VehicleKind.HV)

    def resolved_window(self) -> MeasurementWindow:
        t_last = (self.n_steps - 1) * self.params.tau
        if self.window is None:
            return MeasurementWindow(self.n_vehicles * self.params.tau, t_last)
        return MeasurementWindow(self.window.t_start, t_last if self.window.t_end is None else self.window.t_end)

    def fleet_for_run(self, rng: np.random.Generator) -> FleetConfig:
        if self.positions is not None:
            kinds = place_at(self.n_vehicles, self.positions, self.kind)
        else:
            kinds = place_intelligent(self.n_vehicles, self.mpr, self.kind, rng)
        return FleetConfig(self.n_vehicles, kinds, self.initial_spacing)


@dataclass
class EnsembleCurve:
    """Curva média e erro-padrão pontual sobre as execuções."""
    mean: np.ndarray
    stderr: np.ndarray
    n_runs: int
    spec: EnsembleSpec
    run_curves: Optional[np.ndarray] = field(default=None, repr=False)
    elapsed_s: float = 0.0

    @property
    def index(self) -> np.ndarray:
        """Posição no pelotão (1..N) ou número da amostra (0..T−1)."""
        if self.spec.metric == "per_vehicle":
            return np.arange(1, len(self.mean) + 1)
        return np.arange(len(self.mean))

    def tail(self, n_points: int = 1) -> Tuple[float, float]:
        """Média dos últimos `n_points` pontos e seu erro-padrão entre execuções."""
        value = tail_mean(self.mean, n_points)
        if self.run_curves is None or self.n_runs < 2:
            return value, 0.0
        per_run = np.mean(self.run_curves[:, -n_points:], axis=1)
        return value, float(np.std(per_run, ddof=1) / np.sqrt(self.n_runs))


def simulate_run(spec: EnsembleSpec, run_index: int) -> np.ndarray:
    """Uma execução do ensemble: posicionamento, simulação e métrica."""
    seed = run_seed(spec.master_seed, run_index)
    rng = np.random.default_rng(seed)
    fleet = spec.fleet_for_run(rng)
    record = run(spec.geometry, fleet, spec.params, seed, spec.n_steps, rng=rng)
    if spec.metric == "per_vehicle":
        return per_vehicle_std(record, spec.resolved_window()).values
    return over_time_std(record).values


def single_run(spec: EnsembleSpec, seed: int) -> RunRecord:
    """Execução avulsa (subcomando `run`): o mesmo gerador sorteia o posicionamento e o ruído."""
    rng = np.random.default_rng(seed)
    fleet = spec.fleet_for_run(rng)
    return run(spec.geometry, fleet, spec.params, seed, spec.n_steps, rng=rng)


def _simulate_task(task: Tuple[EnsembleSpec, int]) -> np.ndarray:
    return simulate_run(*task)


def aggregate(spec: EnsembleSpec, curves: Sequence[np.ndarray], elapsed_s: float = 0.0) -> EnsembleCurve:
    """Média e erro-padrão pontuais, na ordem dos índices das execuções."""
    stack = np.vstack(curves)
    n_runs = stack.shape[0]
    mean = np.mean(stack, axis=0)
    if n_runs > 1:
        stderr = np.std(stack, axis=0, ddof=1) / np.sqrt(n_runs)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleCurve(mean=mean, stderr=stderr, n_runs=n_runs, spec=spec,
                         run_curves=stack, elapsed_s=elapsed_s)


def run_ensemble(spec: EnsembleSpec, workers: int = 1) -> EnsembleCurve:
    """Executa as `n_runs` simulações do ensemble e agrega as curvas.

    O resultado não depende de `workers`: cada execução tem a própria
    semente e o agregado segue a ordem dos índices.
    """
    started = time.perf_counter()
    tasks = [(spec, i) for i in range(spec.n_runs)]
    logger.info(
        f"🎲 Ensemble {spec.label}: {spec.n_runs} execuções, {spec.n_steps} passos, "
        f"N={spec.n_vehicles}, {workers} worker(s)"
    )
    try:
        if workers > 1 and spec.n_runs > 1:
            chunksize = max(1, spec.n_runs // (workers * 4))
            with Pool(processes=workers) as pool:
                curves = pool.map(_simulate_task, tasks, chunksize=chunksize)
        else:
            curves = [_simulate_task(t) for t in tasks]
    except CollisionError as e:
        logger.error(f"❌ Ensemble {spec.label} abortado: {e}")
        raise

    elapsed = time.perf_counter() - started
    logger.info(f"✅ Ensemble {spec.label} concluído em {elapsed:.1f}s")
    return aggregate(spec, curves, elapsed_s=elapsed)


@dataclass
class ComparisonRow:
    label: str
    kind: VehicleKind
    mpr: float
    final_mean: float
    final_stderr: float
    reduction_pct: float
    n_runs: int


@dataclass
class ComparisonTable:
    rows: List[ComparisonRow]
    curves: List[EnsembleCurve]
    tail_points: int = 1
    # ensembles ignorados por colisão: (rótulo, erro)
    collisions: List[Tuple[str, CollisionError]] = field(default_factory=list)

    def by_label(self) -> Dict[str, ComparisonRow]:
        return {r.label: r for r in self.rows}


def _check_compatible(specs: Sequence[EnsembleSpec]) -> None:
    ref = specs[0]
    for other in specs[1:]:
        for attr in ("geometry", "n_vehicles", "n_steps", "window", "metric", "params", "initial_spacing"):
            if getattr(other, attr) != getattr(ref, attr):
                raise ConfigurationError(
                    f"specs incompatíveis para comparação: '{attr}' difere "
                    f"({getattr(ref, attr)!r} vs {getattr(other, attr)!r})"
                )


def compare_kinds(specs: Sequence[EnsembleSpec], workers: int = 1, tail_points: int = 1,
                  skip_collisions: bool = False) -> ComparisonTable:
    """Tabela de valor final (média da cauda) e redução em relação ao baseline só de HV.

    Sem um spec de baseline na lista, um é derivado do primeiro spec com
    mpr = 0. Com `skip_collisions`, um ensemble tratado que colide fica
    fora das linhas e vai para `collisions`; colisão no baseline sempre
    propaga.
    """
    if not specs:
        raise ConfigurationError("compare_kinds precisa de ao menos um spec")
    _check_compatible(specs)

    baseline_spec = next((s for s in specs if s.is_baseline), None)
    if baseline_spec is None:
        baseline_spec = replace(specs[0], mpr=0.0, kind=VehicleKind.HV, positions=None)
    ordered = [baseline_spec] + [s for s in specs if s is not baseline_spec]

    curves = [run_ensemble(baseline_spec, workers=workers)]
    completed = [baseline_spec]
    collisions = []
    for spec in ordered[1:]:
        try:
            curves.append(run_ensemble(spec, workers=workers))
        except CollisionError as e:
            if not skip_collisions:
                raise
            logger.warning(f"⚠️ {spec.label} fora da comparação: {e}")
            collisions.append((spec.label, e))
            continue
        completed.append(spec)
    base_value, _ = curves[0].tail(tail_points)

    rows = []
    for spec, curve in zip(completed, curves):
        value, err = curve.tail(tail_points)
        rows.append(ComparisonRow(
            label=spec.label,
            kind=spec.kind if not spec.is_baseline else VehicleKind.HV,
            mpr=0.0 if spec.is_baseline else (len(spec.positions) / spec.n_vehicles if spec.positions else spec.mpr),
            final_mean=value,
            final_stderr=err,
            reduction_pct=0.0 if spec is baseline_spec else reduction_pct(base_value, value),
            n_runs=curve.n_runs,
        ))
    return ComparisonTable(rows=rows, curves=curves, tail_points=tail_points, collisions=collisions)


def spec_from_experiment(config: ExperimentConfig, kind: Optional[str] = None,
                         mpr: Optional[float] = None) -> EnsembleSpec:
    """EnsembleSpec de uma combinação tipo × MPR (padrão: a primeira de cada lista)."""
    return EnsembleSpec(
        geometry=config.geometry_obj(),
        n_vehicles=config.n_vehicles,
        mpr=config.mprs[0] if mpr is None else mpr,
        kind=VehicleKind.parse(config.kinds[0] if kind is None else kind),
        n_runs=config.runs,
        n_steps=config.steps,
        master_seed=config.seed,
        metric=config.metric,
        window=config.window(),
        params=config.model_params(),
        initial_spacing=config.fleet_spacing(),
        positions=config.positions,
    )


def specs_from_experiment(config: ExperimentConfig) -> List[EnsembleSpec]:
    """Um spec por combinação tipo × MPR; com posições fixas, um por tipo."""
    if config.positions is not None:
        return [spec_from_experiment(config, kind=k) for k in config.kinds]
    return [spec_from_experiment(config, kind=k, mpr=m) for m in config.mprs for k in config.kinds]
