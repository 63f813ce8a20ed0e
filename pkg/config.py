"""
Configuration settings for the co-authorship recommender
"""
from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Process-wide settings read from the environment / .env"""

    # Application settings
    APP_NAME: str = "coauthornet"
    APP_VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    SHOW_PROGRESS: bool = True

    # Journal metrics
    COAUTHORNET_CACHE: Optional[Path] = None
    HTTP_TIMEOUT: float = 30.0

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True


# Global settings instance
settings = Settings()
