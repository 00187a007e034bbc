"""In-process simulator backend over the symbolic scene world."""

from __future__ import annotations

from ..errors import MediaMismatch
from ..images import ImageRef
from ..sim.dsl import ConstraintSet, parse_prompt_dsl, try_parse_prompt_dsl
from ..sim.scene import SceneGraph
from ..sim.world import NoiseConfig, apply_edits, diagnose, sample_scene
from .base import resolve_payload

NO_PROMPT_RESPONSE = "I could not find a prompt in the request to compare the image against."


def extract_constraints(text: str) -> ConstraintSet | None:
    """First line of ``text`` that parses as a prompt.

    Understanding and question templates put the prompt on its own line.
    """
    for line in text.splitlines():
        if not line.strip():
            continue
        found = try_parse_prompt_dsl(line)
        if found:
            return found
    return None


class SimulatorBackend:
    """Generates, judges and edits scene graphs.

    Generation samples a flawed scene from the prompt, understanding runs
    the exact diagnoser, editing applies the instruction under ``noise``.
    """

    media_kinds = ("scene-graph",)

    def __init__(self, noise: NoiseConfig | None = None, store=None):
        self.noise = noise or NoiseConfig()
        self.store = store

    def _ref(self, scene: SceneGraph) -> ImageRef:
        payload = scene.serialize()
        if self.store is not None:
            return self.store.put(payload, "scene-graph")
        return ImageRef.from_payload(payload, "scene-graph")

    def _scene(self, image: ImageRef) -> SceneGraph:
        if image.media_kind != "scene-graph":
            raise MediaMismatch(f"simulator cannot read {image.media_kind} images")
        return SceneGraph.deserialize(resolve_payload(image, self.store))

    def probe(self) -> None:
        return None

    def generate(self, prompt: str, seed: int) -> ImageRef:
        return self._ref(sample_scene(parse_prompt_dsl(prompt), self.noise, seed))

    def understand(self, image: ImageRef, prompt: str) -> str:
        scene = self._scene(image)
        constraints = extract_constraints(prompt)
        if constraints is None:
            return NO_PROMPT_RESPONSE
        text, _ = diagnose(scene, constraints)
        return text

    def edit(self, image: ImageRef, instruction: str, seed: int) -> ImageRef:
        return self._ref(apply_edits(self._scene(image), instruction, self.noise, seed))
