import pytest
from pydantic import ValidationError

from spacetoken.evalbench import (
    PRESETS,
    AblationCell,
    AblationCellSpec,
    AblationError,
    AblationMatrix,
    TrajectoryMetrics,
    ablation,
    load_cells,
    preset_matrix,
    report_rows,
    run_ablation,
    write_report,
)
from spacetoken.evalbench.ablation import cell_configs
from spacetoken.evalbench.report import render_markdown
from spacetoken.trainer.loop import Trainer
from spacetoken.trainer.models import TrainConfig, TrainingDivergedError


def _metrics(l2: float, collision: float = 1.0) -> TrajectoryMetrics:
    return TrajectoryMetrics(
        l2_1s=l2, l2_2s=l2, l2_3s=l2, l2_avg=l2, collision=collision, intersection=2.0
    )


@pytest.mark.parametrize(
    "name,cells",
    [("pe_embed", 7), ("pe_en_decoder", 4), ("pe_norm", 6), ("pe_freq", 3), ("reg_loss", 3)],
)
def test_presets(name, cells):
    matrix = preset_matrix(name)
    assert len(matrix.cells) == cells == len(PRESETS[name])
    assert matrix.seeds == [1, 2, 3]


def test_reference_cells():
    matrix = preset_matrix("pe_embed")
    model, _ = cell_configs(matrix, matrix.cells[0], 1)
    assert model.mode == "digit_text"
    model, train = cell_configs(preset_matrix("reg_loss"), PRESETS["reg_loss"][1], 2)
    assert train.loss == "mae"
    assert train.seed == 2
    assert model.inject_visual and model.encode_text_coords and not model.encode_ego


def test_unknown_preset():
    with pytest.raises(AblationError):
        preset_matrix("pe_rope")


def test_matrix_needs_three_seeds_and_unique_cells():
    with pytest.raises(ValidationError):
        preset_matrix("pe_freq", seeds=[1, 2])
    with pytest.raises(ValidationError):
        preset_matrix("pe_freq", seeds=[1, 1, 2])
    with pytest.raises(ValidationError):
        AblationMatrix(name="dup", cells=[AblationCellSpec(name="a"), AblationCellSpec(name="a")])


def test_invalid_cell_overrides():
    spec = AblationCellSpec(name="a", model={"width": 18, "heads": 2})
    matrix = AblationMatrix(name="bad", cells=[spec])
    with pytest.raises(AblationError):
        cell_configs(matrix, matrix.cells[0], 1)


def test_report_rows_sort_and_compare_to_the_reference():
    cells = [
        AblationCell(name="ref", flags={}, seeds=[1, 2, 3], metrics=_metrics(2.0)),
        AblationCell(name="better", flags={}, seeds=[1, 2, 3], metrics=_metrics(1.5, 0.5)),
        AblationCell(name="broken", flags={}, seeds=[1, 2, 3], status="failed", error="nan"),
    ]
    rows = report_rows(cells)
    assert [r.name for r in rows] == ["better", "ref", "broken"]
    assert rows[0].delta_l2_avg == pytest.approx(-0.5)
    assert rows[0].delta_collision == pytest.approx(-0.5)
    assert rows[1].delta_l2_avg == 0.0
    assert rows[2].l2_avg is None and rows[2].delta_l2_avg is None

    matrix = AblationMatrix(name="m", cells=[AblationCellSpec(name=c.name) for c in cells])
    text = render_markdown(matrix, rows)
    assert "reference cell `ref`" in text
    assert "## Failed cells" in text
    assert "- `broken`: nan" in text


def test_report_rows_need_cells():
    with pytest.raises(AblationError):
        report_rows([])


def test_write_report_and_load_cells(tmp_path):
    cells = [
        AblationCell(
            name="ref", flags={"mode": "spatial"}, seeds=[1, 2, 3], metrics=_metrics(2.0)
        ),
        AblationCell(name="alt", flags={"mode": "digit_text"}, seeds=[1, 2, 3]),
    ]
    matrix = AblationMatrix(name="m", cells=[AblationCellSpec(name=c.name) for c in cells])
    csv_path, md_path, cells_path = write_report(matrix, cells, tmp_path)
    assert csv_path.read_text().splitlines()[1].startswith("ref,ok,")
    assert md_path.read_text().startswith("# Ablation `m`")
    assert load_cells(cells_path) == cells


def test_load_cells_missing(tmp_path):
    with pytest.raises(AblationError):
        load_cells(tmp_path / "cells.json")


def test_run_ablation_trains_every_cell_per_seed(tiny_config, scenes, tmp_path):
    matrix = AblationMatrix(
        name="smoke",
        base_model=tiny_config,
        base_train=TrainConfig(batch_size=2, ckpt_every=1000),
        cells=[
            AblationCellSpec(name="digits", model={"mode": "digit_text"}),
            AblationCellSpec(name="unified", train={"loss": "mse"}),
        ],
        max_steps=1,
    )
    cells = run_ablation(matrix, scenes[:4], tmp_path, workers=1)
    assert [c.name for c in cells] == ["digits", "unified"]
    assert all(c.status == "ok" for c in cells)
    assert cells[0].flags["mode"] == "digit_text"
    assert cells[1].flags["loss"] == "mse"
    for cell in cells:
        assert cell.metrics is not None
        assert cell.l2_std is not None and cell.l2_std >= 0.0
        assert 0.0 <= cell.grammar_rate <= 100.0
        for seed in matrix.seeds:
            assert (tmp_path / cell.name / f"seed-{seed}" / "final").is_dir()


def test_run_ablation_needs_both_parities(tiny_config, scenes, tmp_path):
    matrix = AblationMatrix(
        name="smoke", base_model=tiny_config, cells=[AblationCellSpec(name="a")]
    )
    with pytest.raises(AblationError):
        run_ablation(matrix, [s for s in scenes if s.seed % 2 == 0], tmp_path, workers=1)


class _DivergingTrainer(Trainer):
    def train(self, scenes, max_steps=None, on_epoch_end=None):
        if self.cfg.lr == 0.5:
            raise TrainingDivergedError("loss diverged at step 0 (total=nan)")
        return super().train(scenes, max_steps=max_steps, on_epoch_end=on_epoch_end)


def test_run_ablation_keeps_failed_cells(tiny_config, scenes, tmp_path, monkeypatch):
    monkeypatch.setattr(ablation, "Trainer", _DivergingTrainer)
    matrix = AblationMatrix(
        name="smoke",
        base_model=tiny_config,
        base_train=TrainConfig(batch_size=2, ckpt_every=1000),
        cells=[
            AblationCellSpec(name="unified"),
            AblationCellSpec(name="hot", train={"lr": 0.5}),
        ],
        max_steps=1,
    )
    cells = run_ablation(matrix, scenes[:4], tmp_path, workers=1)
    assert [c.name for c in cells] == ["unified", "hot"]
    assert cells[0].status == "ok"
    assert cells[1].status == "failed"
    assert cells[1].metrics is None
    assert "seed 1: loss diverged" in cells[1].error
    rows = report_rows(cells)
    assert rows[-1].name == "hot" and rows[-1].l2_avg is None


def test_numeric_errors_fail_the_cell(tiny_config, scenes, tmp_path, monkeypatch):
    def overflow(*args, **kwargs):
        raise FloatingPointError("overflow encountered in exp")

    monkeypatch.setattr(ablation, "evaluate", overflow)
    matrix = AblationMatrix(
        name="smoke",
        base_model=tiny_config,
        base_train=TrainConfig(batch_size=2, ckpt_every=1000),
        cells=[AblationCellSpec(name="unified")],
        max_steps=1,
    )
    cells = run_ablation(matrix, scenes[:4], tmp_path, workers=1)
    assert cells[0].status == "failed"
    assert "overflow" in cells[0].error
