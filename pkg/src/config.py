import os
from dotenv import load_dotenv
import psutil


def default_workers() -> int:
    # núcleos físicos; psutil devolve None em alguns ambientes virtualizados
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def load_config():
    load_dotenv()
    workers_env = os.getenv("STOPGO_WORKERS", "").strip()
    return {
        "OUTPUT_DIR": os.getenv("STOPGO_OUTPUT_DIR", "output"),
        "LOG_DIR": os.getenv("STOPGO_LOG_DIR", "data/logs"),
        "LOG_LEVEL": os.getenv("STOPGO_LOG_LEVEL", "INFO").upper(),
        "WORKERS": int(workers_env) if workers_env else default_workers(),
    }
