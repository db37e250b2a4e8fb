import json
import logging
from pathlib import Path
from typing import Optional

import pandas as pd
from pydantic import BaseModel

from shiftfusion.data import Corpus
from shiftfusion.training import (
    MetricsReport,
    Predictions,
    Trainer,
    TrainResult,
    evaluate,
)

from .config import CONFIG_FILE_NAME, ExperimentConfig

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.json"
CONFUSION_FILE = "confusion.csv"
CONFUSION_NORMALIZED_FILE = "confusion_normalized.csv"


class RunSummary(BaseModel):
    name: str
    output_dir: Path
    best_epoch: int
    num_parameters: int
    val: MetricsReport
    test: MetricsReport
    shift_emotion_correlation: Optional[float] = None


def write_confusion(report: MetricsReport, path: str | Path, normalized: bool = False) -> Path:
    values = report.normalized_confusion() if normalized else report.confusion
    frame = pd.DataFrame(values, index=report.label_names, columns=report.label_names)
    frame.index.name = "gold"
    frame.to_csv(path)
    return Path(path)


def write_predictions(
    predictions: Predictions, label_names: list[str], path: str | Path
) -> Path:
    frame = pd.DataFrame(
        {
            "conversation_id": predictions.conversation_ids,
            "utterance_id": predictions.utterance_ids,
            "gold": [label_names[i] for i in predictions.gold],
            "pred": [label_names[i] for i in predictions.preds],
        }
    )
    for k, name in enumerate(label_names):
        frame[f"p_{name}"] = predictions.probs[:, k]
    frame.to_csv(path, index=False)
    return Path(path)


def write_embeddings(
    predictions: Predictions, label_names: list[str], path: str | Path
) -> Path:
    if predictions.embeddings is None:
        raise ValueError("predictions were made without embeddings")
    frame = pd.DataFrame(
        predictions.embeddings,
        columns=[f"h{i}" for i in range(predictions.embeddings.shape[1])],
    )
    frame.insert(0, "pred", [label_names[i] for i in predictions.preds])
    frame.insert(0, "gold", [label_names[i] for i in predictions.gold])
    frame.insert(0, "utterance_id", predictions.utterance_ids)
    frame.insert(0, "conversation_id", predictions.conversation_ids)
    frame.to_csv(path, index=False)
    return Path(path)


def write_metrics(payload: dict, path: str | Path) -> Path:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
    return Path(path)


def run_experiment(
    config: ExperimentConfig, corpus: Optional[Corpus] = None
) -> tuple[RunSummary, TrainResult]:
    """Train, test and write every artifact of one run into its output directory."""
    output_dir = config.resolved_output_dir()
    output_dir.mkdir(parents=True, exist_ok=True)
    config.model_copy(update={"output_dir": output_dir}).dump(output_dir / CONFIG_FILE_NAME)

    corpus = corpus or config.corpus.load()
    model_config = config.model_config_for(corpus)
    trainer = Trainer(corpus, model_config, config.objective, config.train, output_dir)
    result = trainer.fit()

    test = evaluate(
        result.model,
        corpus.split("test"),
        corpus.labels,
        config.train.eval_batch_size,
        config.train.precision.dtype,
    )
    summary = RunSummary(
        name=config.name,
        output_dir=output_dir,
        best_epoch=result.best_epoch,
        num_parameters=result.model.num_parameters(),
        val=result.best_metrics,
        test=test,
        shift_emotion_correlation=result.shift_emotion_correlation,
    )
    write_metrics(summary.model_dump(mode="json"), output_dir / METRICS_FILE)
    write_confusion(test, output_dir / CONFUSION_FILE)
    write_confusion(test, output_dir / CONFUSION_NORMALIZED_FILE, normalized=True)
    logger.info(
        f"{config.name}: test W-F1 {test.weighted_f1:.4f}, accuracy {test.accuracy:.4f}"
        f" (artifacts in {output_dir})"
    )
    return summary, result
