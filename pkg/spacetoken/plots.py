"""SVG figures: trajectory overlays, loss curves and the per-command endpoint fan."""

import csv
import logging
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib import patches  # noqa: E402

from spacetoken.evalbench.models import EvaluationReport  # noqa: E402
from spacetoken.geometry.footprint import box_corners  # noqa: E402
from spacetoken.scene_synth.models import DatasetError, Scene  # noqa: E402

LOGGER = logging.getLogger(__name__)

COMMAND_COLORS = {"straight": "tab:blue", "left": "tab:green", "right": "tab:red"}


def _save(fig: plt.Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    LOGGER.info(f"Wrote {path}")
    return path


def plot_trajectory(
    scene: Scene, predicted: Sequence[Sequence[float]] | None, path: Path, title: str = ""
) -> Path:
    """Drivable region, agents at the current frame, ground-truth and predicted waypoints."""
    fig, ax = plt.subplots(1, 1, figsize=(6, 6))
    for record in scene.drivable:
        outline = np.asarray(record.polygon().exterior.coords)
        ax.add_patch(patches.Polygon(outline, closed=True, color="0.85", zorder=0))
    for agent in scene.agents:
        pose = agent.poses[scene.current_frame]
        corners = box_corners(pose.x, pose.y, pose.heading, agent.length, agent.width)
        ax.add_patch(patches.Polygon(corners, closed=True, fill=False, color="tab:orange"))
        ax.text(pose.x, pose.y, agent.category, fontsize=6, ha="center")

    history = scene.history_xy()
    truth = scene.future_xy()
    ax.plot(history[:, 0], history[:, 1], "k.--", label="history")
    ax.plot(truth[:, 0], truth[:, 1], "o-", color="tab:green", label="ground truth")
    if predicted is not None and len(predicted):
        pred = np.asarray(predicted, dtype=np.float64).reshape(-1, 2)
        ax.plot(pred[:, 0], pred[:, 1], "x-", color="tab:purple", label="predicted")

    ax.set_aspect("equal")
    ax.set_xlabel("x (m, forward)")
    ax.set_ylabel("y (m, left)")
    ax.set_title(title or f"scene {scene.seed} ({scene.command})")
    ax.legend(loc="upper left", fontsize=7)
    return _save(fig, path)


def read_metrics(path: Path) -> dict[str, np.ndarray]:
    if not path.exists():
        raise DatasetError(f"no training metrics at {path}")
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise DatasetError(f"{path} holds no training steps")
    return {key: np.array([float(r[key]) for r in rows]) for key in rows[0]}


def plot_loss_curves(metrics_csv: Path, path: Path) -> Path:
    metrics = read_metrics(metrics_csv)
    fig, (ax, ax_lr) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for key in ("total", "lm_loss", "reg_loss"):
        ax.plot(metrics["step"], metrics[key], label=key)
    ax.set_yscale("log")
    ax.set_ylabel("loss")
    ax.legend(fontsize=7)
    ax_lr.plot(metrics["step"], metrics["lr"], color="tab:gray")
    ax_lr.set_ylabel("learning rate")
    ax_lr.set_xlabel("step")
    return _save(fig, path)


def plot_endpoint_fan(report: EvaluationReport, path: Path) -> Path:
    """
    Predicted final waypoints colored by driving command. A planner that
    ignores its command collapses every color onto one cluster.
    """
    fig, ax = plt.subplots(1, 1, figsize=(6, 6))
    for command, points in sorted(report.endpoints.items()):
        if not points:
            continue
        xy = np.asarray(points, dtype=np.float64)
        color = COMMAND_COLORS.get(command, "tab:gray")
        for x, y in xy:
            ax.plot([0.0, x], [0.0, y], color=color, alpha=0.15, linewidth=0.8)
        ax.scatter(xy[:, 0], xy[:, 1], s=8, color=color, label=f"{command} ({len(xy)})")
    ax.scatter([0.0], [0.0], marker="s", color="k")
    ax.set_aspect("equal")
    ax.set_xlabel("x (m, forward)")
    ax.set_ylabel("y (m, left)")
    ax.set_title(f"planned endpoints, {report.scenes} scenes")
    ax.legend(fontsize=7)
    return _save(fig, path)
