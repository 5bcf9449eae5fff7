"""
Gráficos SVG dos resultados: trajetórias coloridas pela velocidade,
evolução das velocidades e curvas de desvio-padrão dos ensembles.
"""
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402
from matplotlib.colors import Normalize  # noqa: E402

logger = logging.getLogger(__name__)

# ids estáveis no SVG: a mesma entrada gera o mesmo arquivo
matplotlib.rcParams["svg.hashsalt"] = "stop-and-go"
# texto como <text>, não como contornos de glifos
matplotlib.rcParams["svg.fonttype"] = "none"
SPEED_CMAP = "viridis"
SVG_METADATA = {"Date": None}

PathLike = Union[str, Path]

# (rótulo, x, média, erro-padrão)
CurveSeries = Tuple[str, np.ndarray, np.ndarray, np.ndarray]


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    logger.info(f"🖼️ Gráfico gravado em {path}")
    return path


def _stride(n_samples: int, max_points: int) -> int:
    return max(1, int(np.ceil(n_samples / max_points)))


def _segments(times: np.ndarray, x: np.ndarray, v: np.ndarray,
              ring_length: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
    points = np.column_stack([times, x])
    segs = np.stack([points[:-1], points[1:]], axis=1)
    colors = v[1:]
    if ring_length is not None:
        # no anel, a volta completa não vira uma linha atravessando o gráfico
        keep = np.diff(x) >= 0
        segs, colors = segs[keep], colors[keep]
    return segs, colors


def plot_trajectories(times: np.ndarray, positions: np.ndarray, speeds: np.ndarray,
                      path: PathLike, u0: float, ring_length: Optional[float] = None,
                      title: Optional[str] = None, max_points: int = 400) -> Path:
    """Trajetórias posição × tempo com cor proporcional à velocidade em [0, u0]."""
    stride = _stride(len(times), max_points)
    t = np.asarray(times)[::stride]
    x = np.asarray(positions)[::stride]
    v = np.asarray(speeds)[::stride]
    if ring_length is not None:
        x = np.mod(x, ring_length)

    norm = Normalize(vmin=0.0, vmax=u0)
    fig, ax = plt.subplots(figsize=(10, 6))
    all_segs, all_colors = [], []
    for j in range(x.shape[1]):
        segs, colors = _segments(t, x[:, j], v[:, j], ring_length)
        all_segs.append(segs)
        all_colors.append(colors)
    if all_segs:
        lc = LineCollection(np.concatenate(all_segs), cmap=SPEED_CMAP, norm=norm, linewidths=0.6)
        lc.set_array(np.concatenate(all_colors))
        ax.add_collection(lc)
        fig.colorbar(lc, ax=ax, label="velocidade [m/s]")
    ax.autoscale()
    ax.set_xlabel("tempo [s]")
    ax.set_ylabel("posição [m]")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_speed_evolution(times: np.ndarray, speeds: np.ndarray, intelligent: Sequence[bool],
                         path: PathLike, u0: float, title: Optional[str] = None,
                         max_points: int = 400) -> Path:
    """Velocidade de cada veículo no tempo: HVs em cinza, inteligentes em vermelho."""
    stride = _stride(len(times), max_points)
    t = np.asarray(times)[::stride]
    v = np.asarray(speeds)[::stride]
    intelligent = np.asarray(intelligent, dtype=bool)

    fig, ax = plt.subplots(figsize=(10, 4))
    for j in np.flatnonzero(~intelligent):
        ax.plot(t, v[:, j], color="0.6", linewidth=0.4)
    for j in np.flatnonzero(intelligent):
        ax.plot(t, v[:, j], color="tab:red", linewidth=0.9)
    ax.set_ylim(0, u0 * 1.02)
    ax.set_xlabel("tempo [s]")
    ax.set_ylabel("velocidade [m/s]")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_curves(series: Sequence[CurveSeries], path: PathLike, xlabel: str,
                ylabel: str = "desvio-padrão da velocidade [m/s]",
                title: Optional[str] = None) -> Path:
    """Curvas médias com faixa de ±1 erro-padrão."""
    fig, ax = plt.subplots(figsize=(8, 5))
    for label, x, mean, stderr in series:
        line, = ax.plot(x, mean, label=label, linewidth=1.2)
        if np.any(stderr > 0):
            ax.fill_between(x, mean - stderr, mean + stderr, color=line.get_color(), alpha=0.2, linewidth=0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend()
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_reductions(labels: Sequence[str], reductions: Sequence[float], path: PathLike,
                    title: Optional[str] = None) -> Path:
    """Redução percentual do desvio-padrão final em relação ao baseline só de HV."""
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(len(labels)), reductions, color="tab:blue")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.axhline(0.0, color="0.3", linewidth=0.8)
    ax.set_ylabel("redução [%]")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
