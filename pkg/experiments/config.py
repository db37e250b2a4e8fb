import json
import logging
import os
from pathlib import Path
from typing import Iterable, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from shiftfusion.data import (
    Corpus,
    ModalSetting,
    SynthSpec,
    get_scheme,
    load_corpus,
    map_to_sentiment,
    synth_corpus,
)
from shiftfusion.errors import ConfigError
from shiftfusion.models import ArchitectureConfig, FusionEncoder, ModelConfig
from shiftfusion.training import ObjectiveConfig, TrainConfig
from shiftfusion.utils import apply_overrides

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"
CONFIG_FILE_NAME = "config.json"
DEFAULT_OUTPUT_ROOT = "runs"


class CorpusSource(BaseModel):
    model_config = ConfigDict(extra="forbid")

    manifest: Optional[Path] = Field(default=None, description="Path to a corpus manifest.json.")
    synthetic: Optional[SynthSpec] = Field(default=None, description="Recipe for a generated corpus.")
    sentiment: Optional[str | dict[str, str]] = Field(
        default=None,
        description=(
            "Relabel emotions to sentiment before use: 'iemocap', 'identity' or an"
            " explicit label -> target mapping."
        ),
    )

    @model_validator(mode="after")
    def check_single_source(self) -> "CorpusSource":
        if (self.manifest is None) == (self.synthetic is None):
            raise ValueError("exactly one of 'manifest' or 'synthetic' must be given")
        return self

    def load(self) -> Corpus:
        corpus = load_corpus(self.manifest) if self.manifest is not None else synth_corpus(self.synthetic)
        if self.sentiment is not None:
            corpus = map_to_sentiment(corpus, get_scheme(self.sentiment, corpus.labels))
        return corpus


class AblationSwitches(BaseModel):
    model_config = ConfigDict(extra="forbid")

    disable_unimodal: bool = False
    disable_crossmodal: bool = Field(
        default=False,
        description="Feed the concatenated unimodal outputs straight to the classifier.",
    )
    disable_shift: bool = False


class ExperimentConfig(BaseModel):
    """Everything one training run needs; persisted as config.json next to its artifacts."""

    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    corpus: CorpusSource
    modal_setting: ModalSetting = ModalSetting.TVA
    encoder: FusionEncoder = FusionEncoder.CROSSMODAL
    ablation: AblationSwitches = AblationSwitches()
    architecture: ArchitectureConfig = ArchitectureConfig()
    objective: ObjectiveConfig = ObjectiveConfig()
    train: TrainConfig = TrainConfig()
    output_dir: Optional[Path] = None

    def model_config_for(self, corpus: Corpus) -> ModelConfig:
        return ModelConfig.for_corpus(
            corpus,
            self.architecture,
            modal_setting=self.modal_setting,
            encoder=self.encoder,
            use_unimodal=not self.ablation.disable_unimodal,
            use_crossmodal=not self.ablation.disable_crossmodal,
            use_shift=not self.ablation.disable_shift,
        )

    def resolved_output_dir(self) -> Path:
        if self.output_dir is not None:
            return self.output_dir
        root = os.getenv("SHIFTFUSION_OUTPUT_DIR", DEFAULT_OUTPUT_ROOT)
        return Path(root) / self.name

    def dump(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.model_dump(mode="json"), indent=2) + "\n")
        return path


def list_presets() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def read_preset(name: str) -> dict:
    path = PRESET_DIR / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    with open(path, "r") as file:
        return json.load(file)


def describe_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{location}: {item['msg']}")
    return "; ".join(lines)


def build_experiment_config(data: dict, overrides: Iterable[str] = ()) -> ExperimentConfig:
    try:
        data = apply_overrides(data, overrides)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {describe_validation_error(e)}") from e


def load_experiment_config(
    path: Optional[str | Path] = None,
    preset: Optional[str] = None,
    overrides: Iterable[str] = (),
) -> ExperimentConfig:
    """Read a config file or preset, then apply ``dotted.key=value`` overrides."""
    if (path is None) == (preset is None):
        raise ConfigError("give exactly one of a config file or a preset")
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file {path} does not exist")
        with open(path, "r") as file:
            try:
                data = json.load(file)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: not valid JSON ({e})") from e
    else:
        data = read_preset(preset)
    return build_experiment_config(data, overrides)
