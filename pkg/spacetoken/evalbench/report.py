import csv
import json
import logging
from collections.abc import Sequence
from pathlib import Path

from pydantic import BaseModel, ConfigDict

from spacetoken.evalbench.models import AblationCell, AblationError, AblationMatrix

LOGGER = logging.getLogger(__name__)

REPORT_CSV = "ablation.csv"
REPORT_MD = "ablation.md"
CELLS_JSON = "cells.json"

METRIC_FIELDS = ("l2_1s", "l2_2s", "l2_3s", "l2_avg", "collision", "intersection")


class ReportRow(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    status: str
    l2_1s: float | None = None
    l2_2s: float | None = None
    l2_3s: float | None = None
    l2_avg: float | None = None
    l2_std: float | None = None
    collision: float | None = None
    collision_std: float | None = None
    intersection: float | None = None
    intersection_std: float | None = None
    grammar_rate: float | None = None
    delta_l2_avg: float | None = None
    delta_collision: float | None = None
    delta_intersection: float | None = None
    error: str | None = None


def report_rows(cells: Sequence[AblationCell]) -> list[ReportRow]:
    """
    One row per cell, sorted by average L2 with failed cells last. Deltas are
    against the matrix's first cell, its reference configuration.
    """
    if not cells:
        raise AblationError("no cells to report")
    reference = cells[0].metrics
    rows = []
    for cell in cells:
        row = ReportRow(name=cell.name, status=cell.status, error=cell.error)
        if cell.metrics is not None:
            for f in METRIC_FIELDS:
                setattr(row, f, getattr(cell.metrics, f))
            row.l2_std = cell.l2_std
            row.collision_std = cell.collision_std
            row.intersection_std = cell.intersection_std
            row.grammar_rate = cell.grammar_rate
            if reference is not None:
                row.delta_l2_avg = cell.metrics.l2_avg - reference.l2_avg
                row.delta_collision = cell.metrics.collision - reference.collision
                row.delta_intersection = cell.metrics.intersection - reference.intersection
        rows.append(row)
    return sorted(rows, key=lambda r: (r.l2_avg is None, r.l2_avg or 0.0))


def _fmt(value: float | None, signed: bool = False) -> str:
    if value is None:
        return "-"
    return f"{value:+.3f}" if signed else f"{value:.3f}"


def render_markdown(matrix: AblationMatrix, rows: Sequence[ReportRow]) -> str:
    lines = [
        f"# Ablation `{matrix.name}`",
        "",
        f"Protocol {matrix.protocol}, seeds {matrix.seeds}, reference cell "
        f"`{matrix.cells[0].name}`.",
        "",
        "| cell | status | L2 1s | L2 2s | L2 3s | avg L2 (± std) | Δ avg L2 "
        "| collision % | Δ coll. | intersection % | Δ inter. | grammar % |",
        "|---|---|---|---|---|---|---|---|---|---|---|---|",
    ]
    for r in rows:
        avg = f"{_fmt(r.l2_avg)} ± {_fmt(r.l2_std)}" if r.l2_avg is not None else "-"
        lines.append(
            f"| {r.name} | {r.status} | {_fmt(r.l2_1s)} | {_fmt(r.l2_2s)} | {_fmt(r.l2_3s)} "
            f"| {avg} | {_fmt(r.delta_l2_avg, True)} | {_fmt(r.collision)} "
            f"| {_fmt(r.delta_collision, True)} | {_fmt(r.intersection)} "
            f"| {_fmt(r.delta_intersection, True)} | {_fmt(r.grammar_rate)} |"
        )
    failed = [r for r in rows if r.error]
    if failed:
        lines += ["", "## Failed cells", ""]
        lines += [f"- `{r.name}`: {r.error}" for r in failed]
    return "\n".join(lines) + "\n"


def write_report(
    matrix: AblationMatrix, cells: Sequence[AblationCell], out: Path
) -> list[Path]:
    rows = report_rows(cells)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, md_path, cells_path = out / REPORT_CSV, out / REPORT_MD, out / CELLS_JSON
    with csv_path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(ReportRow.model_fields))
        writer.writeheader()
        for row in rows:
            writer.writerow(row.model_dump())
    md_path.write_text(render_markdown(matrix, rows))
    cells_path.write_text(json.dumps([c.model_dump(mode="json") for c in cells], indent=2))
    LOGGER.info(f"Wrote ablation report for {len(rows)} cells to {out}")
    return [csv_path, md_path, cells_path]


def load_cells(path: Path) -> list[AblationCell]:
    try:
        return [AblationCell.model_validate(c) for c in json.loads(path.read_text())]
    except (OSError, ValueError) as e:
        raise AblationError(f"cannot read ablation cells from {path}: {e}") from e
