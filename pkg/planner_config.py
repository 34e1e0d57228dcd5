"""
Configuración del planificador y del banco de pruebas
Valores por defecto desde variables de entorno (.env) con fallback
"""

import os
import logging.config

from dotenv import load_dotenv

load_dotenv()


def _env_float(name, default):
    value = os.getenv(name)
    return float(value) if value not in (None, '') else default


def _env_int(name, default):
    value = os.getenv(name)
    return int(value) if value not in (None, '') else default


# Parámetros por defecto del planificador
DEFAULTS = {
    'eta': _env_float('RRTSHARP_ETA', 1.0),  # radio de steering (unidades del mundo)
    'sample_budget': _env_int('RRTSHARP_SAMPLE_BUDGET', 10000),  # rechazos consecutivos
    'history_stride': _env_int('RRTSHARP_HISTORY_STRIDE', 10),
    'workers': _env_int('RRTSHARP_WORKERS', 1),
    'progress_every': _env_int('RRTSHARP_PROGRESS_EVERY', 5000),
    'log_level': os.getenv('RRTSHARP_LOG_LEVEL', 'INFO').upper(),
}

# Configuración de logging (dictConfig)
LOGGING_CONFIG = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {
            'format': '%(asctime)s [%(levelname)s] %(name)s: %(message)s'
        },
    },
    'handlers': {
        'default': {
            'level': 'DEBUG',
            'formatter': 'standard',
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
        },
    },
    'loggers': {
        '': {
            'handlers': ['default'],
            'level': DEFAULTS['log_level'],
            'propagate': True
        },
        'planner': {
            'level': DEFAULTS['log_level'],
        },
        'bench': {
            'level': DEFAULTS['log_level'],
        },
    }
}


def get_default_eta():
    """Radio de steering por defecto"""
    return DEFAULTS['eta']


def get_sample_budget():
    """Número máximo de rechazos consecutivos en el muestreo"""
    return DEFAULTS['sample_budget']


def get_history_stride():
    return DEFAULTS['history_stride']


def get_worker_count():
    """Workers para ensayos Monte Carlo en paralelo (1 = en serie)"""
    return max(1, DEFAULTS['workers'])


def get_progress_every():
    return max(1, DEFAULTS['progress_every'])


def get_logging_config(level=None):
    """Obtiene configuración de logging, opcionalmente con otro nivel"""
    if level is None:
        return LOGGING_CONFIG
    config = dict(LOGGING_CONFIG)
    config['loggers'] = {
        name: dict(entry, level=level.upper())
        for name, entry in LOGGING_CONFIG['loggers'].items()
    }
    return config


def setup_logging(level=None):
    """Aplica la configuración de logging (llamar una vez desde el CLI)"""
    logging.config.dictConfig(get_logging_config(level))
