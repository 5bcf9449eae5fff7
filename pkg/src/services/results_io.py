"""
Leitura e escrita dos resultados em CSV (sempre com cabeçalho) e dos
metadados de cada ensemble em JSON.

Esquemas:
- trajetória: t,vehicle,kind,position,speed (formato longo; líder = veículo 0)
- velocidades: t,v0..vN (formato largo; v0 só existe na via aberta)
- ensemble: index,mean_std,stderr
- comparação: label,kind,mpr,final_mean,final_stderr,reduction_pct,n_runs

Floats são gravados com 9 algarismos significativos.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .errors import ResultsFormatError
from .scenario import LEADER_LABEL, RunRecord

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.9g"

TRAJECTORY_COLUMNS = ["t", "vehicle", "kind", "position", "speed"]
ENSEMBLE_COLUMNS = ["index", "mean_std", "stderr"]
COMPARISON_COLUMNS = ["label", "kind", "mpr", "final_mean", "final_stderr", "reduction_pct", "n_runs"]

PathLike = Union[str, Path]


@dataclass
class TrajectoryTable:
    """Trajetórias em matrizes [amostra × veículo], como lidas do CSV."""
    times: np.ndarray
    vehicles: np.ndarray
    kinds: List[str]
    positions: np.ndarray
    speeds: np.ndarray

    @property
    def intelligent_mask(self) -> np.ndarray:
        return np.array([k not in ("HV", LEADER_LABEL) for k in self.kinds])


@dataclass
class CurveTable:
    index: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _read_csv(path: PathLike, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, **kwargs)
    except pd.errors.EmptyDataError:
        raise ResultsFormatError(f"{path}: arquivo vazio, sem cabeçalho") from None


def _read(path: PathLike, expected: List[str]) -> pd.DataFrame:
    df = _read_csv(path)
    if list(df.columns) != expected:
        raise ResultsFormatError(
            f"{path}: cabeçalho {list(df.columns)} diferente do esperado {expected}"
        )
    return df


def detect_schema(path: PathLike) -> str:
    """Identifica o esquema de um CSV de resultados pelo cabeçalho."""
    columns = list(_read_csv(path, nrows=0).columns)
    if columns == TRAJECTORY_COLUMNS:
        return "trajectory"
    if columns == ENSEMBLE_COLUMNS:
        return "ensemble"
    if columns == COMPARISON_COLUMNS:
        return "comparison"
    if columns and columns[0] == "t" and all(c.startswith("v") for c in columns[1:]):
        return "speeds"
    raise ResultsFormatError(f"{path}: cabeçalho não reconhecido {columns}")


def record_matrices(record: RunRecord):
    """Matrizes de posição/velocidade e rótulos, com o líder como coluna 0 na via aberta."""
    kinds = [k.value for k in record.kinds]
    vehicles = np.arange(1, record.n_vehicles + 1)
    positions, speeds = record.positions, record.speeds
    if record.leader_positions is not None:
        kinds = [LEADER_LABEL] + kinds
        vehicles = np.arange(0, record.n_vehicles + 1)
        positions = np.column_stack([record.leader_positions, positions])
        speeds = np.column_stack([np.full(record.n_steps, record.leader_speed), speeds])
    return vehicles, kinds, positions, speeds


def write_trajectory_csv(record: RunRecord, path: PathLike) -> Path:
    path = _prepare(path)
    vehicles, kinds, positions, speeds = record_matrices(record)
    n_cols = len(vehicles)
    df = pd.DataFrame({
        "t": np.repeat(record.times, n_cols),
        "vehicle": np.tile(vehicles, record.n_steps),
        "kind": np.tile(np.array(kinds, dtype=object), record.n_steps),
        "position": positions.ravel(),
        "speed": speeds.ravel(),
    }, columns=TRAJECTORY_COLUMNS)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"💾 Trajetória gravada em {path} ({record.n_steps} amostras × {n_cols} veículos)")
    return path


def read_trajectory_csv(path: PathLike) -> TrajectoryTable:
    df = _read(path, TRAJECTORY_COLUMNS)
    if df.empty:
        empty = np.empty((0, 0))
        return TrajectoryTable(np.empty(0), np.empty(0, dtype=int), [], empty, empty)
    positions = df.pivot(index="t", columns="vehicle", values="position").sort_index()
    speeds = df.pivot(index="t", columns="vehicle", values="speed").sort_index()
    kinds_by_vehicle = df.drop_duplicates("vehicle").set_index("vehicle")["kind"]
    vehicles = positions.columns.to_numpy()
    return TrajectoryTable(
        times=positions.index.to_numpy(dtype=float),
        vehicles=vehicles,
        kinds=[str(kinds_by_vehicle[v]) for v in vehicles],
        positions=positions.to_numpy(dtype=float),
        speeds=speeds.to_numpy(dtype=float),
    )


def write_speeds_csv(record: RunRecord, path: PathLike) -> Path:
    path = _prepare(path)
    vehicles, _, _, speeds = record_matrices(record)
    df = pd.DataFrame(speeds, columns=[f"v{v}" for v in vehicles])
    df.insert(0, "t", record.times)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_speeds_csv(path: PathLike) -> pd.DataFrame:
    if detect_schema(path) != "speeds":
        raise ResultsFormatError(f"{path}: não é um CSV de velocidades (t,v0..vN)")
    return _read_csv(path)


def write_ensemble_csv(curve, path: PathLike) -> Path:
    """Grava uma EnsembleCurve (ou qualquer objeto com index/mean/stderr)."""
    path = _prepare(path)
    df = pd.DataFrame({
        "index": np.asarray(curve.index, dtype=int),
        "mean_std": np.asarray(curve.mean, dtype=float),
        "stderr": np.asarray(curve.stderr, dtype=float),
    }, columns=ENSEMBLE_COLUMNS)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"💾 Curva do ensemble gravada em {path}")
    return path


def read_ensemble_csv(path: PathLike) -> CurveTable:
    df = _read(path, ENSEMBLE_COLUMNS)
    return CurveTable(
        index=df["index"].to_numpy(dtype=int),
        mean=df["mean_std"].to_numpy(dtype=float),
        stderr=df["stderr"].to_numpy(dtype=float),
    )


def write_comparison_csv(table, path: PathLike) -> Path:
    path = _prepare(path)
    df = pd.DataFrame([{
        "label": r.label,
        "kind": r.kind.value,
        "mpr": r.mpr,
        "final_mean": r.final_mean,
        "final_stderr": r.final_stderr,
        "reduction_pct": r.reduction_pct,
        "n_runs": r.n_runs,
    } for r in table.rows], columns=COMPARISON_COLUMNS)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"💾 Tabela de comparação gravada em {path}")
    return path


def read_comparison_csv(path: PathLike) -> pd.DataFrame:
    return _read(path, COMPARISON_COLUMNS)


def meta_path(csv_path: PathLike) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def write_meta(csv_path: PathLike, meta: Dict) -> Path:
    path = _prepare(meta_path(csv_path))
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, ensure_ascii=False, sort_keys=True)
    return path


def read_meta(csv_path: PathLike) -> Optional[Dict]:
    path = meta_path(csv_path)
    if not path.exists():
        return None
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
