from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional
import logging

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Settings(BaseSettings):
    """
    Runtime configuration for the lifting toolkit.
    Every field can be overridden with a PADIC_LIFT_-prefixed environment variable
    or a .env file in the working directory.
    """

    # --- Enumeration Caps ---
    # Upper bound on vertices / residues any single operation may enumerate
    SIZE_LIMIT: int = 1_000_000
    # Brute-force congruence-preservation walks every divisor pair, so it gets its own cap
    CP_SIZE_LIMIT: int = 10_000

    # --- Certification ---
    # Digits added on top of the target depth when cross-checking by enumeration
    CROSS_CHECK_EXTRA_DEPTH: int = 3
    DEFAULT_PRECISION: int = 4

    # --- Unramified Contexts ---
    # Irreducibility of the modulus is verified exhaustively up to this residue degree
    MAX_RESIDUE_DEGREE: int = 8

    # --- Logging ---
    LOG_LEVEL: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="PADIC_LIFT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


def resolve_size_limit(limit: Optional[int] = None) -> int:
    """Per-call override of the enumeration cap; falls back to the configured default."""
    return settings.SIZE_LIMIT if limit is None else limit


# Global settings instance to be imported by other modules
try:
    settings = Settings()
    logger.debug("✅ Configuration loaded successfully.")
except Exception as e:
    logger.error(f"❌ Failed to load configuration: {str(e)}")
    raise
