from spacetoken.evalbench.ablation import PRESETS, preset_matrix, run_ablation
from spacetoken.evalbench.evaluate import complete_path, evaluate, mean_metrics, score_prediction
from spacetoken.evalbench.metrics import collision_rate, intersection_rate, l2_horizons
from spacetoken.evalbench.models import (
    AblationCell,
    AblationCellSpec,
    AblationError,
    AblationMatrix,
    AgentFootprint,
    EvaluationReport,
    MetricInputError,
    ScenePrediction,
    TrajectoryMetrics,
)
from spacetoken.evalbench.report import load_cells, report_rows, write_report

__all__ = [
    "PRESETS",
    "AblationCell",
    "AblationCellSpec",
    "AblationError",
    "AblationMatrix",
    "AgentFootprint",
    "EvaluationReport",
    "MetricInputError",
    "ScenePrediction",
    "TrajectoryMetrics",
    "collision_rate",
    "complete_path",
    "evaluate",
    "intersection_rate",
    "l2_horizons",
    "load_cells",
    "mean_metrics",
    "preset_matrix",
    "report_rows",
    "run_ablation",
    "score_prediction",
    "write_report",
]
