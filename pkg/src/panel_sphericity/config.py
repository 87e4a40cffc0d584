from functools import lru_cache

from pathlib import Path

from typing import Optional

from dotenv import load_dotenv

from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

class Config(BaseSettings):

    model_config = SettingsConfigDict(env_prefix="PANEL_SPHERICITY_", extra="ignore")

    SEED: Optional[int] = None

    THREADS: int = 1

    OUTPUT_DIR: Path = Path("runs")

    LOG_LEVEL: str = "WARNING"

@lru_cache()

def load_config() -> Config:

    """

    Loads environment variables and returns Config singleton.

    """

    return Config()

def resolve_seed(flag: Optional[int] = None, file_seed: Optional[int] = None) -> int:

    """

    Seed precedence: command-line flag, then config file, then PANEL_SPHERICITY_SEED, then 0.

    """

    for candidate in (flag, file_seed, load_config().SEED):

        if candidate is not None:

            return int(candidate)

    return 0
