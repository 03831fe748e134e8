import logging
from collections import defaultdict
from collections.abc import Sequence

import numpy as np

from spacetoken.evalbench.metrics import (
    collision_rate,
    intersection_rate,
    l2_horizons,
    scene_footprints,
)
from spacetoken.evalbench.models import (
    EvaluationReport,
    MetricInputError,
    Protocol,
    ScenePrediction,
    TrajectoryMetrics,
)
from spacetoken.planner.generate import generate
from spacetoken.planner.state import PlannerState
from spacetoken.scene_synth.models import Scene

LOGGER = logging.getLogger(__name__)


def complete_path(waypoints: Sequence[tuple[float, float]], horizon: int) -> np.ndarray:
    """
    The first ``horizon`` waypoints; a short answer is padded by holding its last
    waypoint (the origin when nothing was decoded).
    """
    path = [tuple(w) for w in waypoints[:horizon]]
    hold = path[-1] if path else (0.0, 0.0)
    path.extend([hold] * (horizon - len(path)))
    return np.array(path, dtype=np.float64).reshape(horizon, 2)


def score_prediction(
    scene: Scene, pred: np.ndarray, protocol: Protocol = "uniad"
) -> TrajectoryMetrics:
    l2 = l2_horizons(pred, scene.future_xy(), protocol)
    return TrajectoryMetrics(
        protocol=protocol,
        l2_1s=l2.l2_1s,
        l2_2s=l2.l2_2s,
        l2_3s=l2.l2_3s,
        l2_avg=l2.avg,
        collision=collision_rate(pred, scene_footprints(scene)),
        intersection=intersection_rate(pred, scene.drivable_region()),
    )


def mean_metrics(metrics: Sequence[TrajectoryMetrics], protocol: Protocol) -> TrajectoryMetrics:
    fields = ("l2_1s", "l2_2s", "l2_3s", "l2_avg", "collision", "intersection")
    return TrajectoryMetrics(
        protocol=protocol,
        **{f: float(np.mean([getattr(m, f) for m in metrics])) for f in fields},
    )


def evaluate(
    scenes: Sequence[Scene], state: PlannerState, protocol: Protocol = "uniad"
) -> EvaluationReport:
    """Greedy answers for every scene, scored and averaged."""
    horizon = state.config.horizon
    predictions: list[ScenePrediction] = []
    endpoints: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for i, scene in enumerate(scenes):
        result = generate(scene, state)
        pred = complete_path(result.waypoints, horizon)
        predictions.append(
            ScenePrediction(
                seed=scene.seed,
                command=scene.command,
                waypoints=[tuple(p) for p in pred.tolist()],
                ground_truth=[tuple(p) for p in scene.future_xy().tolist()],
                grammar_valid=result.grammar_valid,
                truncated=result.truncated,
                metrics=score_prediction(scene, pred, protocol),
            )
        )
        endpoints[scene.command].append((float(pred[-1, 0]), float(pred[-1, 1])))
        if (i + 1) % 50 == 0:
            LOGGER.info(f"Evaluated {i + 1}/{len(scenes)} scenes")

    if not predictions:
        raise MetricInputError("nothing to evaluate")
    report = EvaluationReport(
        metrics=mean_metrics([p.metrics for p in predictions], protocol),
        scenes=len(predictions),
        grammar_valid=sum(p.grammar_valid for p in predictions),
        truncated=sum(p.truncated for p in predictions),
        endpoints=dict(endpoints),
        predictions=predictions,
    )
    LOGGER.info(
        f"{report.scenes} scenes: avg L2 {report.metrics.l2_avg:.3f} m, "
        f"collision {report.metrics.collision:.2f}%, intersection "
        f"{report.metrics.intersection:.2f}%, grammar-valid {report.grammar_rate:.1f}%"
    )
    return report
