import logging
import os

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def setup_logger(name: str = "therblig_kit") -> logging.Logger:
    """
    Configura e retorna um logger padrão do therblig-kit.
    Configure and return a standard therblig-kit logger.

    O nível vem da variável THERBLIG_LOG_LEVEL (padrão INFO).
    The level comes from THERBLIG_LOG_LEVEL (default INFO).

    Args:
        name (str): Nome do logger / Logger name.

    Returns:
        logging.Logger: Logger configurado / Configured logger.
    """
    level_name = os.getenv("THERBLIG_LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, logging.INFO)

    logger = logging.getLogger(name)
    logger.setLevel(level)

    if not logger.handlers:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)
        console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(console_handler)

    return logger
