import json

import numpy as np
import pytest
import torch

from experiments.config import load_experiment_config
from experiments.runner import run_experiment
from shiftfusion.data import IEMOCAP_SENTIMENT, FeatureDims, map_to_sentiment
from shiftfusion.errors import DimensionError, DivergenceError
from shiftfusion.models import ModelConfig, build_model
from shiftfusion.training import (
    LambdaMode,
    ObjectiveConfig,
    Precision,
    TrainConfig,
    Trainer,
    check_compatible,
    evaluate,
    load_checkpoint,
    predict,
    train,
)
from shiftfusion.training import trainer as trainer_module
from shiftfusion.training.trainer import CHECKPOINT_FILE, HISTORY_FILE

from .conftest import make_corpus


@pytest.fixture
def train_config():
    return TrainConfig(
        learning_rate=1e-3,
        batch_size=2,
        eval_batch_size=2,
        max_epochs=3,
        seed=0,
        precision=Precision.FLOAT64,
    )


def test_history_is_reproducible(tiny_corpus, tiny_model_config, train_config, tmp_path):
    objective = ObjectiveConfig(lambda_value=0.9)
    train(tiny_corpus, tiny_model_config, objective, train_config, tmp_path / "a")
    train(tiny_corpus, tiny_model_config, objective, train_config, tmp_path / "b")
    first = (tmp_path / "a" / HISTORY_FILE).read_bytes()
    assert first == (tmp_path / "b" / HISTORY_FILE).read_bytes()
    records = [json.loads(line) for line in first.decode().splitlines()]
    assert [r["epoch"] for r in records] == [1, 2, 3]
    assert all(r["shift_loss"] is not None for r in records)
    assert all(r["val_shift_f1"] is not None for r in records)


def test_best_epoch_selection_and_checkpoint(
    tiny_corpus, tiny_model_config, train_config, tmp_path
):
    result = train(tiny_corpus, tiny_model_config, ObjectiveConfig(), train_config, tmp_path)
    scores = [r.val_weighted_f1 for r in result.history]
    assert result.best_epoch == scores.index(max(scores)) + 1
    assert sum(r.best for r in result.history) >= 1
    assert result.history[0].best

    loaded = load_checkpoint(tmp_path / CHECKPOINT_FILE)
    report = evaluate(
        loaded.model, tiny_corpus.split("val"), tiny_corpus.labels, 2, torch.float64
    )
    assert report.weighted_f1 == pytest.approx(result.best_metrics.weighted_f1)
    assert report.accuracy == pytest.approx(result.best_metrics.accuracy)

    assert loaded.header.best_epoch == result.best_epoch
    assert loaded.header.label_names == tiny_corpus.labels
    for key, value in result.model.state_dict().items():
        assert torch.equal(loaded.model.state_dict()[key], value)


def test_automatic_weighting_records_weights(
    tiny_corpus, tiny_model_config, train_config
):
    objective = ObjectiveConfig(lambda_mode=LambdaMode.AUTOMATIC)
    result = train(tiny_corpus, tiny_model_config, objective, train_config)
    weights = result.history[-1].loss_weights
    assert weights is not None
    assert weights != (1.0, 1.0)
    assert result.checkpoint_path is None


def test_without_shift_head(tiny_corpus, tiny_model_config, train_config):
    config = tiny_model_config.model_copy(update={"use_shift": False})
    result = train(tiny_corpus, config, ObjectiveConfig(), train_config)
    assert all(r.shift_loss is None for r in result.history)
    assert all(r.val_shift_f1 is None for r in result.history)
    assert result.shift_emotion_correlation is None


def test_epoch_order_is_seeded(tiny_corpus, tiny_model_config, train_config):
    a = Trainer(tiny_corpus, tiny_model_config, train_config=train_config)
    b = Trainer(tiny_corpus, tiny_model_config, train_config=train_config)
    assert a.epoch_order(1) == b.epoch_order(1)
    assert sorted(a.epoch_order(2)) == list(range(4))


def test_non_finite_loss_aborts(tiny_corpus, tiny_model_config, train_config, monkeypatch):
    def nan_loss(probs, gold):
        return probs.sum() * float("nan")

    monkeypatch.setattr(trainer_module, "classification_loss", nan_loss)
    with pytest.raises(DivergenceError, match="epoch 1, batch 0"):
        train(tiny_corpus, tiny_model_config, ObjectiveConfig(), train_config)


def test_checkpoint_rejects_other_dims(tiny_corpus, tiny_model_config, train_config, tmp_path):
    train(tiny_corpus, tiny_model_config, ObjectiveConfig(), train_config, tmp_path)
    other = make_corpus(
        tiny_corpus.labels, {"train": [[0, 1]], "val": [[1]], "test": [[2, 0]]}
    )
    other = other.model_copy(update={"labels": ["a", "b", "c", "d"]})
    with pytest.raises(DimensionError, match="3 classes"):
        check_compatible(load_checkpoint(tmp_path / CHECKPOINT_FILE).model, other)


def test_check_names_feature_dims(tiny_corpus, tiny_model_config, train_config, tmp_path):
    train(tiny_corpus, tiny_model_config, ObjectiveConfig(), train_config, tmp_path)
    other = tiny_corpus.model_copy(update={"dims": FeatureDims(text=7, visual=5, audio=4)})
    with pytest.raises(DimensionError, match="text=6"):
        check_compatible(load_checkpoint(tmp_path / CHECKPOINT_FILE).model, other)


def test_sentiment_corpus_trains_with_three_classes(tiny_architecture, train_config):
    emotions = ["neutral", "happy", "sad", "angry", "excited", "frustrated"]
    corpus = make_corpus(
        emotions,
        {
            "train": [[0, 1, 2, 3], [4, 5, 0, 1], [2, 2, 4, 5]],
            "val": [[0, 1, 2], [3, 4, 5]],
            "test": [[5, 4, 3, 2, 1, 0]],
        },
    )
    sentiment = map_to_sentiment(corpus, IEMOCAP_SENTIMENT)
    config = ModelConfig.for_corpus(sentiment, tiny_architecture)
    assert config.num_classes == 3
    result = train(sentiment, config, ObjectiveConfig(), train_config)
    report = evaluate(result.model, sentiment.split("test"), sentiment.labels, 2, torch.float64)
    assert report.label_names == ["negative", "neutral", "positive"]
    assert report.supports == [3, 1, 2]



def test_capped_shift_scoring_is_seeded(tiny_corpus, tiny_architecture):
    arch = tiny_architecture.model_copy(update={"shift_pair_cap": 2})
    model = build_model(ModelConfig.for_corpus(tiny_corpus, arch))
    val = tiny_corpus.split("val")
    torch.manual_seed(1)
    first = predict(model, val, batch_size=2)
    torch.manual_seed(2)
    second = predict(model, val, batch_size=2)
    assert first.shift_gold.shape == (2 * 4,)
    assert np.array_equal(first.shift_gold, second.shift_gold)
    assert np.array_equal(first.shift_preds, second.shift_preds)
    assert first.shift_f1 == second.shift_f1


@pytest.mark.slow
def test_synthetic_corpus_is_learned(tmp_path):
    config = load_experiment_config(preset="synthetic", overrides=[f"output_dir={tmp_path / 'full'}"])
    summary, result = run_experiment(config)
    assert summary.test.accuracy >= 0.9
    assert summary.shift_emotion_correlation is not None
    assert summary.shift_emotion_correlation > 0

    ablated = load_experiment_config(
        preset="synthetic",
        overrides=[f"output_dir={tmp_path / 'no_shift'}", "ablation.disable_shift=true"],
    )
    no_shift, _ = run_experiment(ablated)
    assert no_shift.test.weighted_f1 > 0
    assert (tmp_path / "no_shift" / "metrics.json").is_file()
