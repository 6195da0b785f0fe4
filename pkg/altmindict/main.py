import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional, Type

from altmindict.exceptions import ConfigurationError
from config import Config, config

LOGGER_NAME = 'altmindict'
LOG_FORMAT = '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'
CONSOLE_FORMAT = '%(levelname)s %(name)s: %(message)s'


def _has_handler(logger: logging.Logger, handler_type: type) -> bool:
    return any(type(handler) is handler_type for handler in logger.handlers)


def create_app(config_name: Optional[str] = None, log_level: Optional[str] = None) -> Type[Config]:
    """
    Select the configuration class and configure package logging.

    Args:
        config_name: development | testing | production (default: ALTMIN_ENV)
        log_level: Explicit level name overriding the environment default
            (set by --verbose / --quiet)

    Returns:
        The active configuration class
    """
    # Determine config name from environment or parameter
    if config_name is None:
        config_name = os.environ.get('ALTMIN_ENV', 'development')
    if config_name not in config:
        raise ConfigurationError(f"unknown environment '{config_name}' (expected one of: {', '.join(config)})")
    app_config = config[config_name]

    logger = logging.getLogger(LOGGER_NAME)

    # Configure logging based on environment
    if log_level is not None:
        logger.setLevel(log_level)
    elif app_config.LOG_LEVEL:
        logger.setLevel(app_config.LOG_LEVEL.upper())
    elif app_config.DEBUG:
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.WARNING)

    if not _has_handler(logger, logging.StreamHandler):
        console = logging.StreamHandler()
        console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        logger.addHandler(console)

    # Add file logging for production
    if config_name == 'production' and not _has_handler(logger, RotatingFileHandler):
        log_dir = app_config.APP_DATA_DIR
        os.makedirs(log_dir, exist_ok=True)

        file_handler = RotatingFileHandler(
            os.path.join(log_dir, 'altmindict.log'),
            maxBytes=app_config.LOG_FILE_MAX_BYTES,
            backupCount=app_config.LOG_FILE_BACKUPS
        )
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        file_handler.setLevel(logging.WARNING)
        logger.addHandler(file_handler)

    logger.debug(f"Configuration '{config_name}' loaded (threads={app_config.THREADS}, "
                 f"data dir={app_config.APP_DATA_DIR})")
    return app_config
