import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from spacetoken.conf import CONFIG
from spacetoken.evalbench.evaluate import evaluate, mean_metrics
from spacetoken.evalbench.models import (
    AblationCell,
    AblationCellSpec,
    AblationError,
    AblationMatrix,
    EvaluationReport,
)
from spacetoken.globs import default_vocab
from spacetoken.planner.models import ModelConfig
from spacetoken.planner.state import init_state
from spacetoken.scene_synth.models import Scene
from spacetoken.trainer.batching import split_by_seed_parity
from spacetoken.trainer.loop import Trainer
from spacetoken.trainer.models import TrainConfig
from spacetoken.utils import SpaceTokenError

LOGGER = logging.getLogger(__name__)

FLAG_FIELDS = (
    "mode",
    "inject_visual",
    "encode_text_coords",
    "encode_ego",
    "use_ego_status",
    "alpha_init",
    "alpha_learnable",
    "pe_base",
    "pe_encoder",
    "pe_decoder",
    "task_specific",
)

_DIGITS = {"mode": "digit_text"}
_VISUAL = {"inject_visual": True, "encode_text_coords": False, "encode_ego": False}
_TEXT = {"inject_visual": False, "encode_text_coords": True, "encode_ego": False}
_UNIFIED = {"inject_visual": True, "encode_text_coords": True, "encode_ego": False}
_ALL = {"inject_visual": True, "encode_text_coords": True, "encode_ego": True}
_NO_EGO = {"use_ego_status": False}
_EGO = {"use_ego_status": True}

PRESETS: dict[str, list[AblationCellSpec]] = {
    "pe_embed": [
        AblationCellSpec(name="digits", model=_DIGITS | _NO_EGO),
        AblationCellSpec(name="visual", model=_VISUAL | _NO_EGO),
        AblationCellSpec(name="text", model=_TEXT | _NO_EGO),
        AblationCellSpec(name="visual_text", model=_UNIFIED | _NO_EGO),
        AblationCellSpec(name="digits_ego", model=_DIGITS | _EGO),
        AblationCellSpec(name="visual_text_ego", model=_UNIFIED | _EGO),
        AblationCellSpec(name="all_ego", model=_ALL | _EGO),
    ],
    "pe_en_decoder": [
        AblationCellSpec(name="sincos_coordwise", model=_UNIFIED | _NO_EGO),
        AblationCellSpec(name="mlp_coordwise", model=_UNIFIED | _NO_EGO | {"pe_encoder": "mlp"}),
        AblationCellSpec(name="sincos_sincos", model=_UNIFIED | _NO_EGO | {"pe_decoder": "sincos"}),
        AblationCellSpec(name="sincos_task", model=_UNIFIED | _NO_EGO | {"task_specific": True}),
    ],
    "pe_norm": [
        AblationCellSpec(
            name=f"alpha_{init}_{'learnable' if learnable else 'fixed'}",
            model=_UNIFIED | _NO_EGO | {"alpha_init": init, "alpha_learnable": learnable},
        )
        for learnable in (False, True)
        for init in (1.0, 0.1, 0.02)
    ],
    "pe_freq": [
        AblationCellSpec(name=f"base_{base}", model=_UNIFIED | _NO_EGO | {"pe_base": float(base)})
        for base in (1000, 10000, 20000)
    ],
    "reg_loss": [
        AblationCellSpec(name=f"loss_{kind}", model=_UNIFIED | _NO_EGO, train={"loss": kind})
        for kind in ("huber", "mae", "mse")
    ],
}


def preset_matrix(name: str, **overrides: Any) -> AblationMatrix:
    if name not in PRESETS:
        raise AblationError(f"unknown ablation preset {name!r}; known: {sorted(PRESETS)}")
    return AblationMatrix(name=name, cells=PRESETS[name], **overrides)


class SeedJob(BaseModel):
    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True)

    cell: str
    seed: int
    model: ModelConfig
    train: TrainConfig
    train_scenes: list[Scene]
    val_scenes: list[Scene]
    out: Path
    protocol: str
    max_steps: int | None


class SeedOutcome(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    cell: str
    seed: int
    report: EvaluationReport | None = None
    error: str | None = None


def cell_configs(matrix: AblationMatrix, spec: AblationCellSpec, seed: int):
    try:
        model = ModelConfig.model_validate(matrix.base_model.model_dump() | spec.model)
        train = TrainConfig.model_validate(
            matrix.base_train.model_dump() | spec.train | {"seed": seed}
        )
    except (ValidationError, SpaceTokenError) as e:
        raise AblationError(f"cell {spec.name!r}: invalid overrides ({e})") from e
    return model, train


def run_seed(job: SeedJob) -> SeedOutcome:
    """Trains one cell from scratch for one seed and evaluates it on the held-out scenes."""
    LOGGER.info(f"Cell {job.cell} seed {job.seed}: start")
    try:
        state = init_state(job.model, default_vocab(), job.seed)
        Trainer(state, job.train, job.out).train(job.train_scenes, max_steps=job.max_steps)
        report = evaluate(job.val_scenes, state, job.protocol)
    except (SpaceTokenError, ValidationError, FloatingPointError) as e:
        LOGGER.warning(f"Cell {job.cell} seed {job.seed}: failed: {e}")
        return SeedOutcome(cell=job.cell, seed=job.seed, error=str(e))
    LOGGER.info(f"Cell {job.cell} seed {job.seed}: avg L2 {report.metrics.l2_avg:.3f} m")
    return SeedOutcome(cell=job.cell, seed=job.seed, report=report)


def _flags(model: ModelConfig, train: TrainConfig) -> dict[str, Any]:
    flags = {f: getattr(model, f) for f in FLAG_FIELDS}
    flags["loss"] = train.loss
    return flags


def _aggregate(
    matrix: AblationMatrix, spec: AblationCellSpec, outcomes: list[SeedOutcome]
) -> AblationCell:
    model, train = cell_configs(matrix, spec, matrix.seeds[0])
    cell = AblationCell(name=spec.name, flags=_flags(model, train), seeds=list(matrix.seeds))
    failures = [o for o in outcomes if o.error is not None]
    if failures:
        cell.status = "failed"
        cell.error = "; ".join(f"seed {o.seed}: {o.error}" for o in failures)
        LOGGER.warning(f"Cell {spec.name} failed on {len(failures)} seeds")
        return cell
    reports = [o.report for o in outcomes if o.report is not None]
    metrics = [r.metrics for r in reports]
    cell.metrics = mean_metrics(metrics, matrix.protocol)
    cell.l2_std = float(np.std([m.l2_avg for m in metrics]))
    cell.collision_std = float(np.std([m.collision for m in metrics]))
    cell.intersection_std = float(np.std([m.intersection for m in metrics]))
    cell.grammar_rate = float(np.mean([r.grammar_rate for r in reports]))
    return cell


def run_ablation(
    matrix: AblationMatrix, scenes: list[Scene], out: Path, workers: int | None = None
) -> list[AblationCell]:
    """
    Every cell is trained from scratch once per matrix seed on the even-seed
    scenes and evaluated on the odd-seed ones. Cells that diverge are kept in
    the result, marked failed.
    """
    train_scenes, val_scenes = split_by_seed_parity(scenes)
    if not train_scenes or not val_scenes:
        raise AblationError(
            f"seed-parity split left {len(train_scenes)} train / {len(val_scenes)} val scenes"
        )
    jobs = []
    for spec in matrix.cells:
        for seed in matrix.seeds:
            model, train = cell_configs(matrix, spec, seed)
            jobs.append(
                SeedJob(
                    cell=spec.name,
                    seed=seed,
                    model=model,
                    train=train,
                    train_scenes=train_scenes,
                    val_scenes=val_scenes,
                    out=out / spec.name / f"seed-{seed}",
                    protocol=matrix.protocol,
                    max_steps=matrix.max_steps,
                )
            )

    workers = workers or CONFIG.run.workers
    LOGGER.info(
        f"Ablation {matrix.name}: {len(matrix.cells)} cells x {len(matrix.seeds)} seeds, "
        f"{workers} workers"
    )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_seed, jobs))
    else:
        outcomes = [run_seed(job) for job in jobs]

    return [
        _aggregate(matrix, spec, [o for o in outcomes if o.cell == spec.name])
        for spec in matrix.cells
    ]
