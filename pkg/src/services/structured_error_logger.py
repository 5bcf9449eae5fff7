"""
Logging estruturado de erros e de desempenho das simulações.
Grava JSONL para análise posterior e um log de texto legível.
"""

import hashlib
import json
import logging
import sys
from contextlib import contextmanager
from datetime import datetime
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import (
    CollisionError,
    ConfigurationError,
    EnsembleCollisionError,
    MetricError,
    ResultsFormatError,
)


class StructuredErrorLogger:
    """
    Logger estruturado: cada erro vira uma linha JSON com categoria,
    hash e o contexto ativo (subcomando, preset, semente).
    """

    def __init__(self, name: str = "stopgo", log_dir: str = "data/logs"):
        self.name = name
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)

        self.error_logger = self._setup_error_logger()
        self.performance_logger = self._setup_performance_logger()

        # Contexto atual para rastreamento
        self.current_context: Dict[str, Any] = {}

    def _setup_error_logger(self) -> logging.Logger:
        """Configura logger para erros estruturados."""
        logger = logging.getLogger(f"{self.name}_errors")
        logger.setLevel(logging.ERROR)
        logger.propagate = False

        if not logger.handlers:
            json_handler = logging.FileHandler(self.log_dir / "structured_errors.jsonl", encoding="utf-8")
            json_handler.setFormatter(self._get_json_formatter())
            logger.addHandler(json_handler)

            text_handler = logging.FileHandler(self.log_dir / "errors.log", encoding="utf-8")
            text_handler.setFormatter(self._get_text_formatter())
            logger.addHandler(text_handler)

        return logger

    def _setup_performance_logger(self) -> logging.Logger:
        """Configura logger para métricas de desempenho."""
        logger = logging.getLogger(f"{self.name}_performance")
        logger.setLevel(logging.INFO)
        logger.propagate = False

        if not logger.handlers:
            handler = logging.FileHandler(self.log_dir / "performance.jsonl", encoding="utf-8")
            handler.setFormatter(self._get_json_formatter())
            logger.addHandler(handler)

        return logger

    def _get_json_formatter(self) -> logging.Formatter:
        """Formatter para logs em formato JSON."""
        class JSONFormatter(logging.Formatter):
            def format(self, record):
                log_entry = {
                    'timestamp': datetime.fromtimestamp(record.created).isoformat(),
                    'level': record.levelname,
                    'logger': record.name,
                    'message': record.getMessage(),
                }
                if hasattr(record, 'extra_data'):
                    log_entry.update(record.extra_data)
                return json.dumps(log_entry, ensure_ascii=False, default=str)

        return JSONFormatter()

    def _get_text_formatter(self) -> logging.Formatter:
        return logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    def close(self):
        for logger in (self.error_logger, self.performance_logger):
            for handler in list(logger.handlers):
                handler.close()
                logger.removeHandler(handler)

    def categorize_error(self, error: BaseException) -> str:
        """Categoria do erro, usada também para escolher o código de saída."""
        if isinstance(error, (CollisionError, EnsembleCollisionError)):
            return 'collision'
        if isinstance(error, ConfigurationError):
            return 'configuration'
        if isinstance(error, MetricError):
            return 'metric'
        if isinstance(error, (ResultsFormatError, OSError)):
            return 'io'
        return 'unknown'

    @staticmethod
    def error_hash(error: BaseException) -> str:
        return hashlib.md5(f"{type(error).__name__}:{error}".encode("utf-8")).hexdigest()

    def extract_error_context(self, error: BaseException) -> Dict[str, Any]:
        """Extrai contexto detalhado de um erro."""
        context = {
            'error_type': type(error).__name__,
            'error_message': str(error),
            'error_category': self.categorize_error(error),
            'timestamp': datetime.now().isoformat(),
        }
        context.update(self.current_context)

        if isinstance(error, CollisionError):
            context.update({
                'step': error.step,
                'vehicle': error.vehicle,
                'spacing': error.spacing,
                'seed': error.seed,
            })
        elif isinstance(error, EnsembleCollisionError):
            context['collided'] = [
                {'label': label, 'seed': e.seed, 'step': e.step, 'vehicle': e.vehicle}
                for label, e in error.failures
            ]

        context.update({
            'python_version': sys.version.split()[0],
            'platform': sys.platform,
        })
        return context

    def log_error(self, error: BaseException, context: Optional[Dict[str, Any]] = None) -> str:
        """
        Registra um erro de forma estruturada.

        Returns:
            error_hash: hash MD5 do tipo + mensagem
        """
        full_context = self.extract_error_context(error)
        if context:
            full_context.update(context)
        error_hash = self.error_hash(error)
        full_context['error_hash'] = error_hash

        self.error_logger.error(
            f"[{error_hash}] {type(error).__name__}: {error}",
            extra={'extra_data': full_context}
        )
        return error_hash

    @contextmanager
    def error_context(self, **context_data):
        """
        Context manager para adicionar contexto temporário aos logs.

        Usage:
            with logger.error_context(command="mcs", preset="fig3b"):
                ...
        """
        old_context = self.current_context.copy()
        self.current_context.update(context_data)
        try:
            yield
        finally:
            self.current_context = old_context

    def log_performance_metric(self,
                               metric_name: str,
                               value: float,
                               unit: str = "seconds",
                               context: Optional[Dict[str, Any]] = None):
        """Registra métrica de desempenho."""
        metric_data = {
            'metric_name': metric_name,
            'value': value,
            'unit': unit,
        }
        metric_data.update(self.current_context)
        if context:
            metric_data.update(context)

        self.performance_logger.info(
            f"Performance metric: {metric_name} = {value} {unit}",
            extra={'extra_data': metric_data}
        )


@lru_cache(maxsize=None)
def get_structured_logger(log_dir: str = "data/logs") -> StructuredErrorLogger:
    """Uma instância por diretório de log."""
    return StructuredErrorLogger(name=f"stopgo[{log_dir}]", log_dir=log_dir)
