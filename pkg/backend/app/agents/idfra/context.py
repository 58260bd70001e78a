from typing import List, Optional

from pydantic import BaseModel, ConfigDict

from app.core.config.settings import Settings
from app.core.orchestration.run_store import RunStore, derive_run_id
from app.models.blocks import BlockInventory
from app.models.gateway import ChatMessage, ChatRequest
from app.models.run_log import RunConfig, RunLog
from app.services.gateway.backends import ModelBackend
from .prompts import PromptSet


class DesignContext(BaseModel):
    """Collaborators shared by every node of one run"""
    settings: Settings
    config: RunConfig
    inventory: BlockInventory
    backend: ModelBackend
    store: RunStore
    prompts: PromptSet
    log: RunLog

    model_config = ConfigDict(
        arbitrary_types_allowed=True
    )

    @classmethod
    def create(cls, settings: Settings, target_name: str, inventory: BlockInventory, inventory_path: str,
               backend: ModelBackend, run_id: Optional[str] = None) -> "DesignContext":
        config = run_config_from(settings, target_name, inventory_path)
        store = RunStore(settings.run.runs_root, run_id or derive_run_id(config))
        return cls(
            settings=settings,
            config=config,
            inventory=inventory,
            backend=backend,
            store=store,
            prompts=PromptSet(settings.run.prompt_overrides),
            log=RunLog(config=config),
        )

    def request(self, messages: List[ChatMessage], temperature: float, expect_json: bool = True) -> ChatRequest:
        return ChatRequest(
            model_id=self.settings.backend.model_id,
            messages=tuple(messages),
            temperature=temperature,
            max_tokens=self.settings.backend.max_tokens,
            expect_json=expect_json,
        )


def run_config_from(settings: Settings, target_name: str, inventory_path: str) -> RunConfig:
    return RunConfig(
        target_name=target_name,
        inventory_path=str(inventory_path),
        iterations=settings.run.iterations,
        seed=settings.run.seed,
        temperatures=settings.temperatures.model_dump(),
        max_frames=settings.run.max_frames,
        prompt_overrides={name: str(path) for name, path in settings.run.prompt_overrides.items()},
        backend_mode=settings.backend.mode,
        model_id=settings.backend.model_id,
        max_tokens=settings.backend.max_tokens,
        sim=settings.sim,
        workspace=settings.workspace,
        camera=settings.camera,
    )
