import os
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class CrossbidBaseSettings(BaseSettings):
    seed: int = 0
    output_dir: Path = Path("runs")
    workers: int = 4

    model_config = SettingsConfigDict(
        env_prefix="CROSSBID_",
        env_nested_delimiter="__",
        env_file=os.getenv("CROSSBID_ENV_FILE", "env/config.env"),
        env_file_encoding="utf-8",
        extra="forbid",
    )

    def ensure_output_dir(self) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir
