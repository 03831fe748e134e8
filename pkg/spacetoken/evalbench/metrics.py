"""
Open-loop planning metrics: displacement error at 1/2/3 s, and the fraction of
future timestamps where the swept ego footprint hits an agent or leaves the
drivable region.
"""

from collections.abc import Sequence

import numpy as np
import shapely

from spacetoken.evalbench.models import AgentFootprint, L2Horizons, MetricInputError, Protocol
from spacetoken.geometry.footprint import EGO_LENGTH, EGO_WIDTH, oriented_box, path_headings
from spacetoken.scene_synth.models import Scene

STEPS_PER_SECOND = 2
HORIZON_SECONDS = (1, 2, 3)


def _as_path(points: np.ndarray | Sequence[Sequence[float]], what: str) -> np.ndarray:
    path = np.asarray(points, dtype=np.float64)
    if path.ndim != 2 or path.shape[1] != 2:
        raise MetricInputError(f"{what} must be [H, 2], got {path.shape}")
    return path


def l2_horizons(
    pred: np.ndarray | Sequence[Sequence[float]],
    gt: np.ndarray | Sequence[Sequence[float]],
    protocol: Protocol = "uniad",
) -> L2Horizons:
    """
    uniad: displacement at the waypoint of each horizon (indices 1, 3, 5).
    stp3: mean displacement over all waypoints up to and including it.
    """
    pred, gt = _as_path(pred, "prediction"), _as_path(gt, "ground truth")
    if pred.shape != gt.shape:
        raise MetricInputError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    needed = STEPS_PER_SECOND * HORIZON_SECONDS[-1]
    if len(pred) < needed:
        raise MetricInputError(f"need {needed} waypoints at {STEPS_PER_SECOND} Hz, got {len(pred)}")
    displacement = np.linalg.norm(pred - gt, axis=-1)
    values = []
    for seconds in HORIZON_SECONDS:
        end = seconds * STEPS_PER_SECOND
        if protocol == "uniad":
            values.append(float(displacement[end - 1]))
        else:
            values.append(float(displacement[:end].mean()))
    return L2Horizons(l2_1s=values[0], l2_2s=values[1], l2_3s=values[2])


def ego_footprints(
    pred: np.ndarray, length: float = EGO_LENGTH, width: float = EGO_WIDTH
) -> list[shapely.Geometry]:
    """The ego box at every waypoint, oriented along the path."""
    headings = path_headings(pred)
    return [oriented_box(x, y, h, length, width) for (x, y), h in zip(pred, headings, strict=True)]


def collision_rate(
    pred: np.ndarray | Sequence[Sequence[float]],
    agents: Sequence[AgentFootprint],
    length: float = EGO_LENGTH,
    width: float = EGO_WIDTH,
) -> float:
    """Percent of timestamps where the ego footprint overlaps any agent's box."""
    pred = _as_path(pred, "prediction")
    for agent in agents:
        if len(agent.poses) < len(pred):
            raise MetricInputError(
                f"agent covers {len(agent.poses)} timestamps, prediction {len(pred)}"
            )
    if len(pred) == 0:
        return 0.0
    hits = 0
    for t, ego in enumerate(ego_footprints(pred, length, width)):
        boxes = [
            oriented_box(a.poses[t].x, a.poses[t].y, a.poses[t].heading, a.length, a.width)
            for a in agents
        ]
        if boxes and bool(np.any(shapely.intersects(ego, boxes))):
            hits += 1
    return 100.0 * hits / len(pred)


def intersection_rate(
    pred: np.ndarray | Sequence[Sequence[float]],
    drivable: shapely.Geometry,
    length: float = EGO_LENGTH,
    width: float = EGO_WIDTH,
) -> float:
    """Percent of timestamps where the ego footprint is not fully inside the drivable region."""
    pred = _as_path(pred, "prediction")
    if len(pred) == 0:
        return 0.0
    shapely.prepare(drivable)
    inside = shapely.covers(drivable, ego_footprints(pred, length, width))
    return 100.0 * float(np.count_nonzero(~inside)) / len(pred)


def scene_footprints(scene: Scene) -> list[AgentFootprint]:
    return [
        AgentFootprint(length=a.length, width=a.width, poses=poses)
        for a, poses in zip(scene.agents, scene.agent_future_poses(), strict=True)
    ]
