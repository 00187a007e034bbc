"""Deterministic symbolic text-to-image world."""

from .dsl import ConstraintSet, parse_prompt_dsl
from .edits import EditScript
from .scene import SceneGraph
from .world import NoiseConfig, apply_edits, check_constraints, diagnose, sample_scene, score

__all__ = ["ConstraintSet", "EditScript", "NoiseConfig", "SceneGraph", "apply_edits",
           "check_constraints", "diagnose", "parse_prompt_dsl", "sample_scene", "score"]
