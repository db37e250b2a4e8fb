import copy
import logging
from itertools import product
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, Field
from tabulate import tabulate

from shiftfusion.data import ModalSetting
from shiftfusion.models import FusionEncoder
from shiftfusion.tensor import derive_seed
from shiftfusion.training import LambdaMode
from shiftfusion.utils import set_by_path

from .config import ExperimentConfig, build_experiment_config
from .runner import run_experiment

logger = logging.getLogger(__name__)

GRIDS = ("modal", "encoder", "lambda", "modules", "depth")
LAMBDA_VALUES = tuple(round(0.1 * i, 1) for i in range(1, 11))
DEFAULT_DEPTHS = (1, 2, 3, 4, 5, 6)


class GridCell(BaseModel):
    label: str
    overrides: dict[str, Any] = Field(default_factory=dict)


class CellResult(BaseModel):
    label: str
    repeat: int
    seed: int
    status: str = "ok"
    error: Optional[str] = None
    output_dir: Optional[Path] = None
    best_epoch: Optional[int] = None
    val_weighted_f1: Optional[float] = None
    test_weighted_f1: Optional[float] = None
    test_accuracy: Optional[float] = None


def modal_grid() -> list[GridCell]:
    return [GridCell(label=s.value, overrides={"modal_setting": s.value}) for s in ModalSetting]


def encoder_grid() -> list[GridCell]:
    return [GridCell(label=e.value, overrides={"encoder": e.value}) for e in FusionEncoder]


def lambda_grid() -> list[GridCell]:
    cells = [
        GridCell(
            label=f"lambda={value}",
            overrides={
                "objective.lambda_mode": LambdaMode.MANUAL.value,
                "objective.lambda_value": value,
            },
        )
        for value in LAMBDA_VALUES
    ]
    cells.append(
        GridCell(
            label="lambda=automatic",
            overrides={"objective.lambda_mode": LambdaMode.AUTOMATIC.value},
        )
    )
    return cells


def modules_grid() -> list[GridCell]:
    return [
        GridCell(label="full"),
        GridCell(label="w/o unimodal", overrides={"ablation.disable_unimodal": True}),
        GridCell(label="w/o crossmodal", overrides={"ablation.disable_crossmodal": True}),
        GridCell(label="w/o shift", overrides={"ablation.disable_shift": True}),
    ]


def depth_grid(
    target: str = "crossmodal", depths: Sequence[int] = DEFAULT_DEPTHS
) -> list[GridCell]:
    """Vary one encoder's depth while the other keeps its configured value."""
    if target not in ("unimodal", "crossmodal"):
        raise ValueError(f"depth grid target must be 'unimodal' or 'crossmodal', got {target!r}")
    key = f"architecture.{target}_depth"
    return [GridCell(label=f"{target} depth={d}", overrides={key: d}) for d in depths]


def custom_grid(axes: dict[str, list[Any]]) -> list[GridCell]:
    """Cartesian product over dotted config keys."""
    if not axes:
        raise ValueError("custom grid needs at least one axis")
    names = list(axes)
    cells = []
    for combo in product(*(axes[n] for n in names)):
        overrides = dict(zip(names, combo, strict=True))
        label = ", ".join(f"{k}={v}" for k, v in overrides.items())
        cells.append(GridCell(label=label, overrides=overrides))
    return cells


def named_grid(name: str, depth_target: str = "crossmodal") -> list[GridCell]:
    if name == "modal":
        return modal_grid()
    if name == "encoder":
        return encoder_grid()
    if name == "lambda":
        return lambda_grid()
    if name == "modules":
        return modules_grid()
    if name == "depth":
        return depth_grid(depth_target)
    raise ValueError(f"unknown grid {name!r}; expected one of {', '.join(GRIDS)}")


def cell_seed(base_seed: int, repeat: int) -> int:
    """Repeat 0 keeps the base seed; later repeats derive their own."""
    if repeat == 0:
        return base_seed
    return derive_seed(base_seed, repeat) % (2**31)


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label).strip("_")


def run_cell(base: dict, cell: GridCell, repeat: int, output_root: str) -> CellResult:
    data = copy.deepcopy(base)
    seed = cell_seed(data.get("train", {}).get("seed", 0), repeat)
    for key, value in cell.overrides.items():
        set_by_path(data, key, value)
    set_by_path(data, "train.seed", seed)
    output_dir = Path(output_root) / f"{_slug(cell.label)}-r{repeat}"
    data["output_dir"] = str(output_dir)
    data["name"] = f"{data.get('name', 'experiment')}/{cell.label}"

    try:
        config = build_experiment_config(data)
        summary, _ = run_experiment(config)
    except Exception as e:
        error = f"{type(e).__name__}: {e}"
        logger.warning(f"Cell {cell.label!r} (repeat {repeat}) failed: {error}")
        return CellResult(
            label=cell.label, repeat=repeat, seed=seed, status="failed", error=error
        )
    return CellResult(
        label=cell.label,
        repeat=repeat,
        seed=seed,
        output_dir=summary.output_dir,
        best_epoch=summary.best_epoch,
        val_weighted_f1=summary.val.weighted_f1,
        test_weighted_f1=summary.test.weighted_f1,
        test_accuracy=summary.test.accuracy,
    )


def run_grid(
    base: ExperimentConfig,
    cells: Sequence[GridCell],
    output_root: str | Path,
    repeats: int = 1,
    workers: int = 1,
) -> list[CellResult]:
    """One training run per cell and repeat; failures are recorded, not raised."""
    if repeats < 1:
        raise ValueError(f"repeats must be positive, got {repeats}")
    data = base.model_dump(mode="json")
    tasks = [(data, cell, r, str(output_root)) for r in range(repeats) for cell in cells]
    logger.info(f"Running {len(tasks)} ablation runs with {workers} worker(s)")
    if workers > 1:
        with Pool(workers) as pool:
            return pool.starmap(run_cell, tasks)
    return [run_cell(*task) for task in tasks]


def results_frame(results: Sequence[CellResult]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump(mode="json") for r in results])


def summary_table(results: Sequence[CellResult]) -> str:
    frame = results_frame(results)
    ok = frame[frame["status"] == "ok"]
    order = list(dict.fromkeys(frame["label"]))
    rows = []
    for label in order:
        cell = ok[ok["label"] == label]
        failed = int((frame["label"] == label).sum() - len(cell))
        if cell.empty:
            rows.append([label, "-", "-", "-", failed])
            continue
        rows.append(
            [
                label,
                f"{cell['test_weighted_f1'].mean():.4f}",
                f"{cell['test_accuracy'].mean():.4f}",
                f"{cell['val_weighted_f1'].mean():.4f}",
                failed,
            ]
        )
    return tabulate(rows, headers=["setting", "W-F1", "Acc", "val W-F1", "failed"])
