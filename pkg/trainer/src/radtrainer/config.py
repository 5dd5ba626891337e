"""Training configuration; defaults pin the reference training recipe."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the multi-label classifier.

    Defaults: 512x512 inputs normalized with ImageNet statistics, horizontal
    flip p=0.5, rotation +/-30 degrees, color jitter, AdamW at lr 1e-4,
    StepLR(step 7, gamma 0.1), BCE-with-logits, batch 32, 30 epochs. Every
    field is overridable (e.g. lr 1e-3 is accepted via config).
    """

    backbone: str = "tiny"  # "tiny" | "resnet50"
    input_size: int = 512
    normalize_mean: tuple[float, float, float] = (0.485, 0.456, 0.406)
    normalize_std: tuple[float, float, float] = (0.229, 0.224, 0.225)
    flip_p: float = 0.5
    rotation_deg: float = 30.0
    color_jitter: float = 0.1
    lr: float = 1e-4
    step_size: int = 7
    gamma: float = 0.1
    batch_size: int = 32
    epochs: int = 30

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "TrainConfig":
        known = {f: obj[f] for f in cls.__dataclass_fields__ if f in obj}
        for key in ("normalize_mean", "normalize_std"):
            if key in known:
                known[key] = tuple(known[key])
        return cls(**known)

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainConfig":
        return cls.from_json_obj(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["normalize_mean"] = list(self.normalize_mean)
        obj["normalize_std"] = list(self.normalize_std)
        return obj
