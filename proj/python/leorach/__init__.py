"""Slotted random-access simulator and trainer for downlink LEO constellations."""

from ._core import (
    ConstellationConfig,
    Environment,
    LinkBudget,
    __version__,
    default_config_json,
    detect_collisions,
    evaluate_checkpoint,
    interferer_sets,
    link_rate,
    satellite_positions,
    signaling_cost,
    train,
    user_satellite_distance,
)

__all__ = [
    "ConstellationConfig",
    "Environment",
    "LinkBudget",
    "__version__",
    "default_config_json",
    "detect_collisions",
    "evaluate_checkpoint",
    "interferer_sets",
    "link_rate",
    "satellite_positions",
    "signaling_cost",
    "train",
    "user_satellite_distance",
]
