from .settings import BackendSettings, RunSettings, Settings, Temperatures, load_settings, settings

__all__ = ["settings", "load_settings", "Settings", "BackendSettings", "RunSettings", "Temperatures"]
