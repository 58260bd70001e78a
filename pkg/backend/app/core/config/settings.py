import os
from pathlib import Path
from typing import Dict, Literal, Optional, Tuple, Type, Union

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator
from pydantic_settings import (BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict,
                               TomlConfigSettingsSource)

from app.core.errors import SettingsError
from app.models.rendering import CameraSpec
from app.models.simulation import SimParams, WorkspaceConfig

load_dotenv()

ASSETS_DIR = Path(__file__).resolve().parents[3] / "assets"
DEFAULT_CONFIG_FILE = "idfra.toml"

BackendMode = Literal["live", "replay", "stub"]


class BackendSettings(BaseModel):
    mode: BackendMode = "live"
    base_url: str = "https://api.openai.com/v1"
    model_id: str = "gpt-4o"
    # name of the variable holding the credential, never the credential itself
    api_key_env: str = "MODEL_API_KEY"
    max_tokens: int = Field(default=4096, gt=0)
    timeout_s: float = Field(default=120.0, gt=0)
    max_retries: int = Field(default=3, ge=1)
    transcript_path: Optional[Path] = None
    script_path: Optional[Path] = None


class Temperatures(BaseModel):
    judge: float = Field(default=0.4, ge=0.0, le=2.0)
    replan: float = Field(default=0.5, ge=0.0, le=2.0)
    order: float = Field(default=0.5, ge=0.0, le=2.0)
    position: float = Field(default=0.25, ge=0.0, le=2.0)
    selector: float = Field(default=0.0, ge=0.0, le=2.0)
    rank: float = Field(default=0.0, ge=0.0, le=2.0)
    compare: float = Field(default=0.0, ge=0.0, le=2.0)


class RunSettings(BaseModel):
    iterations: int = Field(default=10, ge=1)
    seed: int = 0
    runs_root: Path = Path("runs")
    max_frames: int = Field(default=12, ge=1)
    # template name -> file replacing the built-in template
    prompt_overrides: Dict[str, Path] = Field(default_factory=dict)
    object_pool_path: Path = ASSETS_DIR / "object_pool.txt"

    @field_validator("prompt_overrides")
    @classmethod
    def _known_templates(cls, v: Dict[str, Path]) -> Dict[str, Path]:
        from app.agents.idfra.prompts import TEMPLATE_NAMES

        unknown = sorted(set(v) - set(TEMPLATE_NAMES))
        if unknown:
            raise ValueError(f"unknown prompt templates: {', '.join(unknown)}")
        return v


class Settings(BaseSettings):
    backend: BackendSettings = Field(default_factory=BackendSettings)
    temperatures: Temperatures = Field(default_factory=Temperatures)
    sim: SimParams = Field(default_factory=SimParams)
    workspace: WorkspaceConfig = Field(default_factory=WorkspaceConfig)
    camera: CameraSpec = Field(default_factory=CameraSpec)
    run: RunSettings = Field(default_factory=RunSettings)

    model_config = SettingsConfigDict(
        env_prefix="IDFRA_",
        env_nested_delimiter="__",
        env_file=".env",
        extra="ignore",
        toml_file=DEFAULT_CONFIG_FILE,
    )  # extra env variables are not ours

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return init_settings, env_settings, dotenv_settings, TomlConfigSettingsSource(settings_cls)

    def check_backend(self) -> None:
        """Raise SettingsError when the backend mode lacks what it needs"""
        backend = self.backend
        if backend.mode == "replay":
            if backend.transcript_path is None or not Path(backend.transcript_path).is_file():
                raise SettingsError(f"replay mode needs an existing transcript, got {backend.transcript_path}")
        elif backend.mode == "stub":
            if backend.script_path is None or not Path(backend.script_path).is_file():
                raise SettingsError(f"stub mode needs an existing script file, got {backend.script_path}")
        elif not os.environ.get(backend.api_key_env):
            raise SettingsError(f"live mode needs the {backend.api_key_env} environment variable set")


def load_settings(config_file: Optional[Union[str, Path]] = None, **overrides) -> Settings:
    """
    Settings bound to a specific TOML file.

    overrides are init values (CLI flags) and win over every other source;
    nested sections merge with what the other sources provide.
    """
    if config_file is None:
        return Settings(**overrides)
    path = Path(config_file)
    if not path.is_file():
        raise SettingsError(f"config file not found: {path}")
    bound = type("FileSettings", (Settings,), {
        "model_config": SettingsConfigDict(**{**Settings.model_config, "toml_file": path}),
    })
    return bound(**overrides)


settings = Settings()
