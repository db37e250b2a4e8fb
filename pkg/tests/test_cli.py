import json

import numpy as np
import pandas as pd
import pytest

from experiments import ablation
from experiments.ablation import cell_seed, custom_grid, named_grid
from experiments.cli import EXIT_CONFIG, EXIT_GRADCHECK, EXIT_OK, run
from experiments.config import load_experiment_config
from shiftfusion.data import load_corpus, shift_labels
from shiftfusion.errors import ConfigError
from shiftfusion.models import FusionEncoder


@pytest.fixture
def trained_run(tmp_path):
    out = tmp_path / "run"
    assert run(["train", "--preset", "tiny", "--output-dir", str(out)]) == EXIT_OK
    return out


class TestSynth:
    def test_same_spec_writes_identical_files(self, tmp_path):
        args = ["synth", "--preset", "tiny"]
        assert run([*args, "--out", str(tmp_path / "a")]) == EXIT_OK
        assert run([*args, "--out", str(tmp_path / "b")]) == EXIT_OK
        for name in ("manifest.json", "train.jsonl", "val.jsonl", "test.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_zero_shift_rate(self, tmp_path):
        code = run(
            ["synth", "--preset", "tiny", "--set", "shift_rate=0", "--out", str(tmp_path)]
        )
        assert code == EXIT_OK
        corpus = load_corpus(tmp_path / "manifest.json")
        for conv in corpus.split("train"):
            assert not shift_labels(conv.labels).any()

    def test_invalid_spec_value(self, tmp_path):
        code = run(["synth", "--preset", "tiny", "--set", "shift_rate=2", "--out", str(tmp_path)])
        assert code == EXIT_CONFIG


class TestTrainAndEval:
    def test_train_writes_artifacts(self, trained_run):
        for name in (
            "config.json",
            "metrics.json",
            "history.jsonl",
            "best.pt",
            "confusion.csv",
            "confusion_normalized.csv",
        ):
            assert (trained_run / name).is_file(), name
        metrics = json.loads((trained_run / "metrics.json").read_text())
        assert 0.0 <= metrics["test"]["weighted_f1"] <= 1.0
        assert metrics["best_epoch"] in (1, 2)
        confusion = pd.read_csv(trained_run / "confusion.csv", index_col="gold")
        assert confusion.shape == (3, 3)
        assert confusion.to_numpy().sum() == 8

    def test_eval_uses_run_config(self, trained_run, tmp_path):
        predictions = tmp_path / "preds.csv"
        embeddings = tmp_path / "emb.csv"
        code = run(
            [
                "eval",
                "--checkpoint",
                str(trained_run / "best.pt"),
                "--split",
                "val",
                "--predictions",
                str(predictions),
                "--embeddings",
                str(embeddings),
            ]
        )
        assert code == EXIT_OK
        report = json.loads((trained_run / "eval_val.json").read_text())
        assert report["split"] == "val"
        assert report["num_utterances"] == 8
        frame = pd.read_csv(predictions)
        assert len(frame) == 8
        assert {"gold", "pred", "p_class_0"} <= set(frame.columns)
        emb = pd.read_csv(embeddings)
        assert emb.shape == (8, 4 + 24)
        assert list(emb.columns[:5]) == ["conversation_id", "utterance_id", "gold", "pred", "h0"]
        assert emb["gold"].tolist() == frame["gold"].tolist()
        assert emb["pred"].tolist() == frame["pred"].tolist()
        assert set(emb["gold"]) <= {"class_0", "class_1", "class_2"}

    def test_eval_matches_training_test_metrics(self, trained_run):
        assert run(["eval", "--checkpoint", str(trained_run / "best.pt")]) == EXIT_OK
        evaluated = json.loads((trained_run / "eval_test.json").read_text())
        trained = json.loads((trained_run / "metrics.json").read_text())["test"]
        assert np.isclose(evaluated["weighted_f1"], trained["weighted_f1"])
        assert evaluated["confusion"] == trained["confusion"]

    def test_eval_rejects_mismatched_corpus(self, trained_run, tmp_path):
        code = run(
            [
                "eval",
                "--checkpoint",
                str(trained_run / "best.pt"),
                "--preset",
                "tiny",
                "--set",
                "corpus.synthetic.dims.text=7",
            ]
        )
        assert code == EXIT_CONFIG

    def test_unknown_split(self, trained_run):
        code = run(["eval", "--checkpoint", str(trained_run / "best.pt"), "--split", "dev"])
        assert code == EXIT_CONFIG

    def test_missing_checkpoint(self, tmp_path):
        assert run(["eval", "--checkpoint", str(tmp_path / "none.pt")]) == EXIT_CONFIG

    def test_invalid_override(self, tmp_path):
        code = run(
            [
                "train",
                "--preset",
                "tiny",
                "--set",
                "architecture.model_dim=7",
                "--output-dir",
                str(tmp_path),
            ]
        )
        assert code == EXIT_CONFIG

    def test_unknown_field(self, tmp_path):
        code = run(
            ["train", "--preset", "tiny", "--set", "train.epochs=3", "--output-dir", str(tmp_path)]
        )
        assert code == EXIT_CONFIG

    def test_unknown_preset(self):
        assert run(["train", "--preset", "nope"]) == EXIT_CONFIG


class TestGradcheck:
    def test_all_variants_pass(self):
        assert run(["gradcheck", "--all-variants"]) == EXIT_OK

    def test_impossible_tolerance_fails(self):
        assert run(["gradcheck", "--tolerance", "1e-12"]) == EXIT_GRADCHECK

    def test_degenerate_objective(self):
        assert run(["gradcheck", "--degenerate"]) == EXIT_OK

    def test_rejects_large_models(self):
        assert run(["gradcheck", "--preset", "synthetic"]) == EXIT_CONFIG


class TestAblation:
    def test_modules_grid(self, tmp_path):
        code = run(
            ["ablate", "--preset", "tiny", "--grid", "modules", "--output-dir", str(tmp_path)]
        )
        assert code == EXIT_OK
        frame = pd.read_csv(tmp_path / "ablation.csv")
        assert list(frame["label"]) == ["full", "w/o unimodal", "w/o crossmodal", "w/o shift"]
        assert (frame["status"] == "ok").all()
        assert (tmp_path / "w_o_shift-r0" / "metrics.json").is_file()

    def test_grid_file(self, tmp_path):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"encoder": ["tfe1", "tfe2"]}))
        code = run(
            [
                "ablate",
                "--preset",
                "tiny",
                "--grid-file",
                str(grid),
                "--output-dir",
                str(tmp_path / "out"),
            ]
        )
        assert code == EXIT_OK
        frame = pd.read_csv(tmp_path / "out" / "ablation.csv")
        assert list(frame["label"]) == ["encoder=tfe1", "encoder=tfe2"]

    def test_unexpected_error_fails_only_its_cell(self, tmp_path, monkeypatch):
        real_run = ablation.run_experiment

        def flaky_run(config):
            if config.encoder == FusionEncoder.SEQUENCE_TRANSFORMER:
                raise KeyError("speaker")
            return real_run(config)

        monkeypatch.setattr(ablation, "run_experiment", flaky_run)
        base = load_experiment_config(preset="tiny")
        results = ablation.run_grid(base, named_grid("encoder"), tmp_path)
        assert [r.status for r in results] == ["ok", "failed", "ok"]
        assert results[1].error == "KeyError: 'speaker'"
        frame = ablation.results_frame(results)
        assert frame.loc[1, "label"] == "tfe1"
        assert (tmp_path / "tfe2-r0" / "metrics.json").is_file()

    def test_grids(self):
        assert len(named_grid("lambda")) == 11
        assert len(named_grid("modal")) == 7
        assert [c.overrides for c in named_grid("depth", "unimodal")][0] == {
            "architecture.unimodal_depth": 1
        }
        assert len(custom_grid({"a": [1, 2], "b": [3, 4, 5]})) == 6
        with pytest.raises(ValueError):
            named_grid("width")

    def test_repeat_seeds(self):
        assert cell_seed(7, 0) == 7
        assert cell_seed(7, 1) != cell_seed(7, 2)


def test_presets_carry_published_hyperparameters():
    meld = load_experiment_config(preset="meld")
    assert meld.train.learning_rate == 1e-5
    assert meld.train.batch_size == 64
    assert (meld.architecture.unimodal_depth, meld.architecture.crossmodal_depth) == (2, 3)
    assert meld.objective.lambda_value == 0.9
    iemocap = load_experiment_config(preset="iemocap")
    assert iemocap.train.learning_rate == 2e-5
    assert (iemocap.architecture.unimodal_dropout, iemocap.architecture.crossmodal_dropout) == (
        0.2,
        0.4,
    )
    with pytest.raises(ConfigError):
        load_experiment_config(preset="meld", overrides=["objective.lambda_value=3"])
