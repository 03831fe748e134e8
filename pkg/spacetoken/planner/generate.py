import logging

import numpy as np

from spacetoken.coord_text.models import IndicatorElement, SpatialElement, TextElement
from spacetoken.coord_text.stream import is_grammar_valid, parse_waypoints, render_output
from spacetoken.diffcore import ops
from spacetoken.diffcore.nn import mlp
from spacetoken.diffcore.tensor import Tensor, no_grad
from spacetoken.geometry.models import Coordinate3D
from spacetoken.planner.model import embed_stream, embed_views, forward, prompt_input
from spacetoken.planner.models import GenerationResult, PlannerInput
from spacetoken.planner.state import TRAJECTORY_HEAD, PlannerState
from spacetoken.scene_synth.models import Scene
from spacetoken.spatial_pe.decoder import OUTPUT_SCALE_M, decode
from spacetoken.utils import notnone

LOGGER = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 96


def trajectory_head(hidden: Tensor, state: PlannerState) -> Tensor:
    """Whole-trajectory decoding: [N, width] hidden states to [N, 2*horizon] meters."""
    return ops.mul(mlp(state.store, TRAJECTORY_HEAD, hidden, 2), OUTPUT_SCALE_M)


def _last_row(t: Tensor) -> Tensor:
    return ops.index(t, slice(t.shape[0] - 1, None))


def generate(
    scene: Scene, state: PlannerState, max_steps: int = DEFAULT_MAX_STEPS
) -> GenerationResult:
    """
    Greedy decoding of the answer for one scene.

    An Indicator as the last input routes the next hidden state through the
    coordinate decoder instead of the language head; the decoded waypoint is
    appended as a BEV Spatial element and decoding continues from it.
    """
    config, vocab = state.config, state.vocab
    emitted: list[int] = []
    rendered: list[int | Coordinate3D] = []
    waypoints: list[tuple[float, float]] = []
    head_log: list[str] = []
    truncated = True

    with no_grad():
        visual = embed_views(scene.views, scene.rig, state)
        inp: PlannerInput = prompt_input(scene, vocab, config)
        for _ in range(max_steps):
            logits, hidden = forward(visual, embed_stream(inp, state), state)
            last = inp.stream.elements[-1]
            if config.spatial and isinstance(last, IndicatorElement):
                c = decode(_last_row(hidden), notnone(state.decoder))
                c = Coordinate3D(x=c.x, y=c.y)
                waypoints.append((c.x, c.y))
                rendered.append(c)
                head_log.append("pe")
                inp = inp.extend(SpatialElement(coord=c, bev=True))
                continue
            if config.whole_trajectory and last == TextElement(token_id=vocab.ind_id):
                if not waypoints:
                    out = trajectory_head(_last_row(hidden), state).numpy().reshape(-1, 2)
                    for x, y in out:
                        c = Coordinate3D(x=float(x), y=float(y))
                        waypoints.append((c.x, c.y))
                        rendered.append(c)
                    head_log.append("pe")

            token = int(np.argmax(logits.numpy()[-1]))
            emitted.append(token)
            rendered.append(token)
            head_log.append("lm")
            if token == vocab.eos_id:
                truncated = False
                break
            if token == vocab.ind_id and config.spatial and not config.whole_trajectory:
                inp = inp.extend(IndicatorElement())
            else:
                inp = inp.extend(TextElement(token_id=token))

    text = render_output(rendered, vocab).text
    if not config.spatial:
        parsed = parse_waypoints(text, config.horizon) or []
        waypoints = [(c.x, c.y) for c in parsed]
    result = GenerationResult(
        emitted=emitted,
        waypoints=waypoints,
        head_log=head_log,
        text=text,
        truncated=truncated,
        grammar_valid=not truncated and is_grammar_valid(text, config.horizon),
    )
    if truncated:
        LOGGER.debug(f"Scene {scene.seed}: no EOS within {max_steps} steps")
    return result
