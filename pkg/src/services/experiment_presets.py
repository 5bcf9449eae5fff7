"""
Configuração de experimentos: presets embutidos para os experimentos
de referência e leitura de arquivos JSON com seções.

Precedência: flag da CLI > arquivo de configuração > preset > padrão.
"""
import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

from .errors import ConfigurationError, UnknownPresetError
from .newell_model import ModelParams, VehicleKind
from .oscillation_metrics import MeasurementWindow
from .scenario import Geometry, OpenRoad, Ring

logger = logging.getLogger(__name__)

ALL_INTELLIGENT = ("AV", "MAV", "PCV", "PCAV", "FCV", "FCAV")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parâmetros completos de um experimento (uma ou várias combinações tipo × MPR)."""
    name: str = "custom"
    # cenário
    geometry: str = "open"
    n_vehicles: int = 100
    ring_length: Optional[float] = None
    initial_spacing: Optional[float] = 22.0
    leader_speed: Optional[float] = None
    kinds: Tuple[str, ...] = ("HV",)
    positions: Optional[Tuple[int, ...]] = None
    # ensemble
    mprs: Tuple[float, ...] = (0.0,)
    runs: int = 1
    steps: int = 600
    seed: int = 0
    metric: str = "per_vehicle"
    window_start: Optional[float] = None
    window_end: Optional[float] = None
    tail_points: int = 1
    fit_range: Optional[Tuple[int, int]] = None
    # modelo
    u0: float = 25.0
    s_j: float = 7.5
    tau: float = 1.5
    sigma_hat: float = 0.25

    def __post_init__(self):
        if self.geometry not in ("open", "ring"):
            raise ConfigurationError(f"geometry deve ser 'open' ou 'ring' (recebido '{self.geometry}')")
        if self.geometry == "ring" and self.ring_length is None:
            raise ConfigurationError("geometry 'ring' exige ring_length")
        if not self.kinds:
            raise ConfigurationError("kinds vazio")
        if not self.mprs:
            raise ConfigurationError("mprs vazio")
        for kind in self.kinds:
            VehicleKind.parse(kind)
        if self.runs < 1 or self.steps < 1:
            raise ConfigurationError("runs e steps devem ser >= 1")
        if self.tail_points < 1:
            raise ConfigurationError("tail_points deve ser >= 1")

    def model_params(self) -> ModelParams:
        return ModelParams(u0=self.u0, s_j=self.s_j, tau=self.tau, sigma_hat=self.sigma_hat)

    def geometry_obj(self) -> Geometry:
        if self.geometry == "ring":
            return Ring(length=float(self.ring_length))
        return OpenRoad(leader_speed=self.leader_speed)

    def window(self) -> Optional[MeasurementWindow]:
        if self.window_start is None and self.window_end is None:
            return None
        start = self.window_start if self.window_start is not None else self.n_vehicles * self.tau
        return MeasurementWindow(start, self.window_end)

    def fleet_spacing(self) -> Optional[float]:
        return None if self.geometry == "ring" else self.initial_spacing

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_OPEN_100 = dict(geometry="open", n_vehicles=100, initial_spacing=22.0)
_OPEN_200 = dict(geometry="open", n_vehicles=200, initial_spacing=22.0)
_RING_2500 = dict(geometry="ring", n_vehicles=100, ring_length=2500.0, initial_spacing=None)
_RING_6000 = dict(geometry="ring", n_vehicles=200, ring_length=6000.0, initial_spacing=None)

# 200 amostras = 5 min com τ = 1.5 s
_RING_TAIL = 200

PRESETS: Dict[str, ExperimentConfig] = {
    "fig1": ExperimentConfig(name="fig1", **_OPEN_100, kinds=("HV",), mprs=(0.0,), runs=1, steps=600),
    "fig2": ExperimentConfig(name="fig2", **_OPEN_100, kinds=ALL_INTELLIGENT, positions=(50,),
                             runs=100, steps=1000),
    "fig3b": ExperimentConfig(name="fig3b", **_OPEN_100, kinds=ALL_INTELLIGENT, mprs=(0.01,),
                              runs=500, steps=1000),
    "fig4": ExperimentConfig(name="fig4", **_OPEN_200, kinds=("AV", "PCAV", "MAV", "FCAV"),
                             mprs=(0.01, 0.02), runs=250, steps=1200),
    "fig5": ExperimentConfig(name="fig5", **_RING_2500, kinds=("AV", "MAV", "FCAV"), mprs=(0.02,),
                             runs=1, steps=1200, metric="over_time", tail_points=_RING_TAIL),
}
for _pct in (1, 2, 5, 10):
    PRESETS[f"fig6-mpr{_pct}"] = ExperimentConfig(
        name=f"fig6-mpr{_pct}", **_RING_6000, kinds=ALL_INTELLIGENT, mprs=(_pct / 100.0,),
        runs=100, steps=1400, metric="over_time", tail_points=_RING_TAIL,
    )


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownPresetError(
            f"preset desconhecido '{name}' (disponíveis: {', '.join(sorted(PRESETS))})"
        ) from None


# seção do arquivo -> campos aceitos
SECTIONS: Dict[str, Tuple[str, ...]] = {
    "model": ("u0", "s_j", "tau", "sigma_hat"),
    "scenario": ("geometry", "n_vehicles", "ring_length", "initial_spacing", "leader_speed",
                 "kinds", "positions"),
    "ensemble": ("mprs", "runs", "steps", "seed", "metric", "window_start", "window_end",
                 "tail_points", "fit_range"),
    "output": ("dir",),
}

_TUPLE_FIELDS = {"kinds", "mprs", "positions", "fit_range"}


@dataclass
class ConfigFile:
    preset: Optional[str]
    values: Dict[str, Any]
    output_dir: Optional[str] = None


def load_config_file(path: str) -> ConfigFile:
    """Lê um arquivo JSON de experimento (seções model/scenario/ensemble/output)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: JSON inválido ({e})") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: o arquivo deve conter um objeto JSON")

    preset = raw.pop("preset", None)
    values: Dict[str, Any] = {}
    output_dir = None
    for section, content in raw.items():
        if section not in SECTIONS:
            raise ConfigurationError(f"{path}: seção desconhecida '{section}'")
        if not isinstance(content, dict):
            raise ConfigurationError(f"{path}: seção '{section}' deve ser um objeto")
        for key, value in content.items():
            if key not in SECTIONS[section]:
                raise ConfigurationError(f"{path}: chave desconhecida '{section}.{key}'")
            if section == "output":
                output_dir = value
            else:
                values[key] = value
    return ConfigFile(preset=preset, values=values, output_dir=output_dir)


def _normalize(values: Dict[str, Any]) -> Dict[str, Any]:
    normalized = {}
    for key, value in values.items():
        if key in _TUPLE_FIELDS and value is not None:
            value = tuple(value) if isinstance(value, (list, tuple)) else (value,)
        normalized[key] = value
    return normalized


def build_experiment(preset: Optional[str] = None, config_path: Optional[str] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> Tuple[ExperimentConfig, Optional[str]]:
    """Combina preset, arquivo e flags; devolve a configuração e o diretório de saída do arquivo."""
    file_cfg = load_config_file(config_path) if config_path else None
    preset_name = preset or (file_cfg.preset if file_cfg else None)
    base = get_preset(preset_name) if preset_name else ExperimentConfig()

    merged: Dict[str, Any] = {}
    if file_cfg:
        merged.update(_normalize(file_cfg.values))
    merged.update(_normalize({k: v for k, v in (overrides or {}).items() if v is not None}))

    valid = {f.name for f in fields(ExperimentConfig)}
    unknown = set(merged) - valid
    if unknown:
        raise ConfigurationError(f"parâmetros desconhecidos: {', '.join(sorted(unknown))}")

    if merged.get("geometry") == "ring" and "initial_spacing" not in merged:
        merged["initial_spacing"] = None

    try:
        config = replace(base, **merged)
    except TypeError as e:
        raise ConfigurationError(f"configuração inválida: {e}") from None
    logger.debug(f"Experimento resolvido: {config}")
    return config, (file_cfg.output_dir if file_cfg else None)
