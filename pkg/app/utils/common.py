import logging
import logging.config
from pathlib import Path

from app.dependencies import get_settings


def setup_logging(config_path: Path | None = None) -> None:
    """
    Sets up logging for the application using a configuration file.
    This ensures standardized logging across the entire application.
    """
    settings = get_settings()
    path = Path(config_path or settings.log_config).resolve()
    if path.exists():
        logging.config.fileConfig(path, disable_existing_loggers=False)
    else:
        logging.basicConfig(level=logging.INFO)
        logging.getLogger(__name__).warning("Logging config %s not found; using basicConfig", path)
    if settings.debug:
        logging.getLogger().setLevel(logging.DEBUG)
