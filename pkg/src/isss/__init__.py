"""Inhomogeneous sub-self-similar sets: construction, dimensions and measures."""

from .codespace import RatioVector, Sft, golden_mean
from .construct import SystemSpec
from .geometry import AmbientBox, CondensationSet, PointCloud, Similarity

__all__ = [
    "AmbientBox",
    "CondensationSet",
    "PointCloud",
    "RatioVector",
    "Sft",
    "Similarity",
    "SystemSpec",
    "golden_mean",
    "bundled_config",
    "bundled_configs",
]


def bundled_configs() -> list[str]:
    """Names of the example configurations shipped with the package."""
    from importlib import resources

    return sorted(p.name[:-5] for p in resources.files(__name__).joinpath("configs").iterdir()
                  if p.name.endswith(".json"))


def bundled_config(name: str):
    """Path-like handle to a shipped configuration."""
    from importlib import resources

    return resources.files(__name__).joinpath("configs", f"{name}.json")
