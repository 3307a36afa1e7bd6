"""
Configuration management for the Gelfand-Dickey hierarchy engine
"""
from pathlib import Path
from typing import Optional, List
from dotenv import dotenv_values
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        case_sensitive=False,
        extra='ignore'
    )

    # Truncation defaults (mirrors the `solve` flags)
    r: int = 2
    times: int = 5
    degree: int = 4
    genus_max: int = 1
    depth: Optional[int] = None
    eps_cap: int = 2

    # File locations
    state_path: str = "state.json"
    report_path: str = "report.json"
    correlators_path: str = "correlators.json"
    export_path: str = "exports"

    # `numbers` / `verify` defaults
    flavor: str = "open"
    genus: int = 0
    checks: List[str] = [
        "string",
        "dilaton",
        "trr1",
        "symbols",
        "dimension",
        "r2bridge",
    ]

    # Computation
    hierarchy_threads: int = 1
    skip_selection_violators: bool = False
    random_seed: int = 20240601

    # Run ledger
    database_url: str = "sqlite:///data/runs.db"

    # Logging
    log_level: str = "INFO"
    log_file: str = "logs/app.log"
    log_max_bytes: int = 10485760  # 10MB
    log_backup_count: int = 5

    @property
    def base_dir(self) -> Path:
        """Get base directory of the project"""
        return Path(__file__).parent

    @property
    def data_dir(self) -> Path:
        """Get data directory"""
        path = self.base_dir / "data"
        path.mkdir(parents=True, exist_ok=True)
        return path

    @property
    def exports_dir(self) -> Path:
        """Get exports directory"""
        path = self.base_dir / self.export_path
        path.mkdir(parents=True, exist_ok=True)
        return path

    @property
    def logs_dir(self) -> Path:
        """Get logs directory"""
        path = self.base_dir / "logs"
        path.mkdir(parents=True, exist_ok=True)
        return path

    @property
    def final_database_url(self) -> str:
        """Get effective database URL, creating the sqlite directory when needed"""
        url = self.database_url
        if url.startswith("sqlite:///") and not url.startswith("sqlite:////"):
            relative = url[len("sqlite:///"):]
            if relative and relative != ":memory:":
                (self.base_dir / relative).parent.mkdir(parents=True, exist_ok=True)
                return f"sqlite:///{self.base_dir / relative}"
        return url

    def default_depth(self, r: int, times: int, degree: int) -> int:
        """
        Default number of retained negative d/dx orders

        Args:
            r: Order of the Lax operator
            times: Highest time N
            degree: Degree cap D in the times T_2..T_N

        Returns:
            max(2r + D + 2, N + r + 1)
        """
        return max(2 * r + degree + 2, times + r + 1)


def load_settings(config_file: Optional[str] = None) -> Settings:
    """
    Build settings, layering a KEY=value config file over environment and .env

    Args:
        config_file: Optional path to a config file mirroring the CLI flags

    Returns:
        Settings instance
    """
    if config_file is None:
        return Settings()
    values = {k.lower(): v for k, v in dotenv_values(config_file).items() if v is not None}
    if "checks" in values and not values["checks"].lstrip().startswith("["):
        values["checks"] = [c.strip() for c in values["checks"].split(",") if c.strip()]
    return Settings(**values)


def apply_settings(new: Settings) -> None:
    """Copy `new` into the shared settings object that modules imported"""
    for name in Settings.model_fields:
        setattr(settings, name, getattr(new, name))


# Global settings instance
settings = Settings()
