"""Example models shipped with the package."""
from __future__ import annotations

from importlib import resources

from .model import LoadedModel, parse_model

BUNDLED = ("fig1_left", "fig1_right", "fig2", "fig3", "fig5", "fig6", "fig8")


def bundled_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled model {name!r}; available: {', '.join(BUNDLED)}")
    return resources.files("importance_mc").joinpath("models", f"{name}.json").read_text("utf-8")


def load_bundled(name: str) -> LoadedModel:
    return parse_model(bundled_text(name))
