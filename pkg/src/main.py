import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from config import load_config
from pipeline.ensemble import (
    EnsembleCurve,
    EnsembleSpec,
    compare_kinds,
    run_ensemble,
    single_run,
    spec_from_experiment,
    specs_from_experiment,
)
from services.errors import (
    CollisionError,
    ConfigurationError,
    EnsembleCollisionError,
    MetricError,
    ResultsFormatError,
    UnknownPresetError,
)
from services.experiment_presets import PRESETS, ExperimentConfig, build_experiment
from services.oscillation_metrics import growth_exponent
from services import results_io
from services import svg_plotter
from services.structured_error_logger import get_structured_logger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_UNKNOWN_PRESET = 3
EXIT_CONFIG = 4
EXIT_COLLISION = 5
EXIT_IO = 6

EPILOG = f"""códigos de saída:
  {EXIT_OK}  sucesso
  {EXIT_UNEXPECTED}  erro inesperado
  {EXIT_USAGE}  uso incorreto da linha de comando
  {EXIT_UNKNOWN_PRESET}  preset desconhecido
  {EXIT_CONFIG}  configuração inválida ou parâmetros inviáveis
  {EXIT_COLLISION}  colisão (espaçamento negativo); em mcs/compare os demais tipos são concluídos
  {EXIT_IO}  falha de leitura/escrita ou CSV mal formado

presets: {', '.join(sorted(PRESETS))}
"""


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, UnknownPresetError):
        return EXIT_UNKNOWN_PRESET
    if isinstance(error, (ConfigurationError, MetricError)):
        return EXIT_CONFIG
    if isinstance(error, (CollisionError, EnsembleCollisionError)):
        return EXIT_COLLISION
    if isinstance(error, (ResultsFormatError, OSError)):
        return EXIT_IO
    return EXIT_UNEXPECTED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Arquivo JSON de experimento (seções model/scenario/ensemble/output)")
    common.add_argument("--preset", help="Preset de experimento embutido")
    common.add_argument("--seed", type=int, help="Semente (mestra, no caso de ensembles)")
    common.add_argument("--out", help="Diretório de saída (padrão: STOPGO_OUTPUT_DIR)")
    common.add_argument("--kind", help="Tipo de veículo inteligente (AV, MAV, PCV, PCAV, FCV, FCAV)")
    common.add_argument("--mpr", type=float, help="Taxa de penetração de mercado em [0, 1]")
    common.add_argument("--runs", type=int, help="Número de execuções do ensemble")
    common.add_argument("--steps", type=int, help="Número de amostras por execução")
    common.add_argument("--sigma", type=float, help="Amplitude do ruído σ̂ (m/s) dos tipos com ruído (HV, PCV, FCV)")
    common.add_argument("--workers", type=int, help="Processos do pool (padrão: STOPGO_WORKERS)")

    parser = argparse.ArgumentParser(
        prog="stopgo",
        description="Simulador estocástico de ondas stop-and-go com veículos inteligentes",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    sub.add_parser("run", parents=[common], help="Uma execução: trajetórias e velocidades em CSV + SVG")
    sub.add_parser("mcs", parents=[common], help="Ensemble de Monte Carlo: curva média do desvio-padrão")
    sub.add_parser("compare", parents=[common], help="Tabela de redução em relação ao baseline só de HV")

    p_plot = sub.add_parser("plot", help="Gera SVG a partir de CSVs produzidos pelos outros subcomandos")
    p_plot.add_argument("inputs", nargs="+", help="CSV(s) de entrada")
    p_plot.add_argument("--output", help="Arquivo SVG de saída (padrão: ao lado do primeiro CSV)")
    p_plot.add_argument("--ring-length", dest="ring_length", type=float,
                        help="Comprimento do anel, para trajetórias sem metadados")
    p_plot.add_argument("--u0", type=float, help="Velocidade máxima da escala de cores")
    p_plot.add_argument("--title", help="Título do gráfico")
    return parser


def _overrides(args: argparse.Namespace) -> Dict:
    return {
        "seed": args.seed,
        "kinds": args.kind,
        "mprs": args.mpr,
        "runs": args.runs,
        "steps": args.steps,
        "sigma_hat": args.sigma,
    }


def _output_dir(args: argparse.Namespace, file_dir: Optional[str], cfg: Dict) -> Path:
    return Path(args.out or file_dir or cfg["OUTPUT_DIR"])


def _curve_stem(spec: EnsembleSpec) -> str:
    if spec.positions is not None:
        return f"{spec.kind.value}_at{'-'.join(str(p) for p in spec.positions)}"
    if spec.is_baseline:
        return "HV"
    return f"{spec.kind.value}_mpr{spec.mpr * 100:g}"


def _curve_meta(curve: EnsembleCurve, config: ExperimentConfig) -> Dict:
    spec = curve.spec
    tail_points = min(config.tail_points, len(curve.mean))
    tail_value, tail_stderr = curve.tail(tail_points)
    meta = {
        "label": spec.label,
        "kind": spec.kind.value,
        "mpr": spec.mpr,
        "positions": list(spec.positions) if spec.positions else None,
        "metric": spec.metric,
        "n_runs": curve.n_runs,
        "n_steps": spec.n_steps,
        "n_vehicles": spec.n_vehicles,
        "master_seed": spec.master_seed,
        "tail_points": tail_points,
        "tail_mean": tail_value,
        "tail_stderr": tail_stderr,
        "elapsed_s": round(curve.elapsed_s, 3),
        "experiment": config.to_dict(),
    }
    if spec.metric == "per_vehicle":
        window = spec.resolved_window()
        meta["window"] = [window.t_start, window.t_end]
        try:
            meta["growth_exponent"] = growth_exponent(curve.mean, config.fit_range)
        except MetricError as e:
            logger.warning(f"⚠️ Expoente de crescimento indisponível para {spec.label}: {e}")
            meta["growth_exponent"] = None
    return meta


def _series(curves: Sequence[EnsembleCurve]) -> List[svg_plotter.CurveSeries]:
    return [(c.spec.label, c.index, c.mean, c.stderr) for c in curves]


def _xlabel(metric: str) -> str:
    return "posição no pelotão" if metric == "per_vehicle" else "amostra"


def cmd_run(config: ExperimentConfig, out_dir: Path, slog) -> None:
    spec = spec_from_experiment(config)
    started = time.perf_counter()
    record = single_run(spec, config.seed)
    elapsed = time.perf_counter() - started
    slog.log_performance_metric(
        "run_duration", round(elapsed, 4), context={"label": spec.label}
    )

    trajectory = results_io.write_trajectory_csv(record, out_dir / "trajectory.csv")
    speeds = results_io.write_speeds_csv(record, out_dir / "speeds.csv")
    vehicles, kinds, positions, speed_matrix = results_io.record_matrices(record)
    meta = {
        "label": spec.label,
        "seed": config.seed,
        "kinds": kinds,
        "ring_length": record.ring_length,
        "u0": spec.params.u0,
        "experiment": config.to_dict(),
    }
    results_io.write_meta(trajectory, meta)
    results_io.write_meta(speeds, meta)

    title = f"{config.name} · {spec.label} · seed {config.seed}"
    svg_plotter.plot_trajectories(record.times, positions, speed_matrix, out_dir / "trajectory.svg",
                                  u0=spec.params.u0, ring_length=record.ring_length, title=title)
    intelligent = [k not in ("HV", results_io.LEADER_LABEL) for k in kinds]
    svg_plotter.plot_speed_evolution(record.times, speed_matrix, intelligent, out_dir / "speeds.svg",
                                     u0=spec.params.u0, title=title)
    print(f"Execução concluída: {record.n_steps} amostras × {len(vehicles)} veículos em {out_dir}")


def _skip_collision(slog, label: str, error: CollisionError) -> None:
    slog.log_error(error, {"label": label})
    logger.warning(f"⚠️ {label} ignorado após colisão: {error}")


def cmd_mcs(config: ExperimentConfig, out_dir: Path, workers: int, slog) -> None:
    curves = []
    collisions = []
    for spec in specs_from_experiment(config):
        try:
            curve = run_ensemble(spec, workers=workers)
        except CollisionError as e:
            _skip_collision(slog, spec.label, e)
            collisions.append((spec.label, e))
            continue
        slog.log_performance_metric("ensemble_duration", round(curve.elapsed_s, 4),
                                    context={"label": spec.label, "n_runs": spec.n_runs})
        path = results_io.write_ensemble_csv(curve, out_dir / f"mcs_{_curve_stem(spec)}.csv")
        meta = _curve_meta(curve, config)
        results_io.write_meta(path, meta)
        curves.append(curve)
        print(f"{spec.label}: valor final {meta['tail_mean']:.4f} ± {meta['tail_stderr']:.4f} m/s -> {path}")
    if curves:
        svg_plotter.plot_curves(_series(curves), out_dir / "mcs.svg", xlabel=_xlabel(config.metric),
                                title=config.name)
    if collisions:
        raise EnsembleCollisionError(collisions)


def cmd_compare(config: ExperimentConfig, out_dir: Path, workers: int, slog) -> None:
    specs = specs_from_experiment(config)
    curve_length = config.n_vehicles if config.metric == "per_vehicle" else config.steps
    tail_points = min(config.tail_points, curve_length)
    table = compare_kinds(specs, workers=workers, tail_points=tail_points, skip_collisions=True)
    for label, error in table.collisions:
        _skip_collision(slog, label, error)
    for curve in table.curves:
        slog.log_performance_metric("ensemble_duration", round(curve.elapsed_s, 4),
                                    context={"label": curve.spec.label, "n_runs": curve.n_runs})
        path = results_io.write_ensemble_csv(curve, out_dir / f"curve_{_curve_stem(curve.spec)}.csv")
        results_io.write_meta(path, _curve_meta(curve, config))

    results_io.write_comparison_csv(table, out_dir / "comparison.csv")
    svg_plotter.plot_curves(_series(table.curves), out_dir / "curves.svg",
                            xlabel=_xlabel(config.metric), title=config.name)
    treated = table.rows[1:]
    if treated:
        svg_plotter.plot_reductions([r.label for r in treated], [r.reduction_pct for r in treated],
                                    out_dir / "reductions.svg", title=config.name)

    print(f"{'rótulo':<16}{'final':>10}{'± ep':>10}{'redução %':>12}")
    for r in table.rows:
        print(f"{r.label:<16}{r.final_mean:>10.4f}{r.final_stderr:>10.4f}{r.reduction_pct:>12.2f}")
    if table.collisions:
        raise EnsembleCollisionError(table.collisions)


def cmd_plot(args: argparse.Namespace) -> None:
    inputs = [Path(p) for p in args.inputs]
    schemas = {results_io.detect_schema(p) for p in inputs}
    if len(schemas) > 1:
        raise ConfigurationError(f"plot: CSVs de esquemas diferentes ({', '.join(sorted(schemas))})")
    schema = schemas.pop()
    if schema != "ensemble" and len(inputs) > 1:
        raise ConfigurationError(f"plot: apenas um CSV de {schema} por vez")

    output = Path(args.output) if args.output else inputs[0].with_suffix(".svg")
    meta = results_io.read_meta(inputs[0]) or {}
    u0 = args.u0 if args.u0 is not None else meta.get("u0", 25.0)

    if schema == "trajectory":
        table = results_io.read_trajectory_csv(inputs[0])
        if table.times.size == 0:
            raise ResultsFormatError(f"{inputs[0]}: trajetória sem amostras")
        ring_length = args.ring_length if args.ring_length is not None else meta.get("ring_length")
        svg_plotter.plot_trajectories(table.times, table.positions, table.speeds, output,
                                      u0=u0, ring_length=ring_length, title=args.title)
    elif schema == "speeds":
        df = results_io.read_speeds_csv(inputs[0])
        kinds = meta.get("kinds")
        intelligent = ([k not in ("HV", results_io.LEADER_LABEL) for k in kinds]
                       if kinds and len(kinds) == df.shape[1] - 1 else [False] * (df.shape[1] - 1))
        svg_plotter.plot_speed_evolution(df["t"].to_numpy(), df.iloc[:, 1:].to_numpy(), intelligent,
                                         output, u0=u0, title=args.title)
    elif schema == "ensemble":
        series = []
        metric = None
        for path in inputs:
            curve = results_io.read_ensemble_csv(path)
            curve_meta = results_io.read_meta(path) or {}
            metric = metric or curve_meta.get("metric")
            series.append((curve_meta.get("label", path.stem), curve.index, curve.mean, curve.stderr))
        svg_plotter.plot_curves(series, output, xlabel=_xlabel(metric or "per_vehicle"), title=args.title)
    else:
        df = results_io.read_comparison_csv(inputs[0])
        treated = df.iloc[1:]
        svg_plotter.plot_reductions(treated["label"].astype(str).tolist(),
                                    treated["reduction_pct"].to_numpy(), output, title=args.title)
    print(f"Gráfico gravado em {output}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Ponto de entrada da CLI; devolve o código de saída."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        cfg = load_config()
    except ValueError as e:
        print(f"stopgo: erro: STOPGO_WORKERS inválido ({e})", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=getattr(logging, cfg["LOG_LEVEL"], logging.INFO),
        format='%(asctime)s - [%(levelname)s] - %(message)s'
    )
    slog = get_structured_logger(cfg["LOG_DIR"])

    with slog.error_context(command=args.cmd, preset=getattr(args, "preset", None),
                            seed=getattr(args, "seed", None)):
        try:
            if args.cmd == "plot":
                cmd_plot(args)
                return EXIT_OK

            config, file_dir = build_experiment(args.preset, args.config, _overrides(args))
            out_dir = _output_dir(args, file_dir, cfg)
            workers = args.workers if args.workers is not None else cfg["WORKERS"]
            if workers < 1:
                raise ConfigurationError(f"--workers deve ser >= 1 (recebido {workers})")
            logger.info(f"🚀 {args.cmd} · experimento '{config.name}' · saída em {out_dir}")

            if args.cmd == "run":
                cmd_run(config, out_dir, slog)
            elif args.cmd == "mcs":
                cmd_mcs(config, out_dir, workers, slog)
            else:
                cmd_compare(config, out_dir, workers, slog)
            return EXIT_OK
        except Exception as e:
            slog.log_error(e)
            code = exit_code_for(e)
            if code == EXIT_UNEXPECTED:
                logger.debug("❌ Erro inesperado", exc_info=True)
            print(f"stopgo: erro: {e}", file=sys.stderr)
            return code


if __name__ == "__main__":
    sys.exit(main())
