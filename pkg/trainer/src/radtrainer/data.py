"""Dataset plumbing: manifests, binary sheet directories, image loading.

The trainer talks to the labeling pipeline purely through files: a dataset
manifest pairing report ids with 1-2 image paths, per-report binary sheet
JSONs, and (on the way out) the score-matrix CSV.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset
from torchvision import transforms

from .config import TrainConfig


class ManifestMismatch(Exception):
    pass


class ViewCountMismatch(Exception):
    pass


class SchemaViolation(Exception):
    pass


def load_manifest(path: str | Path) -> dict:
    """Manifest: {"region", "views", "items": [{"report_id", "images", "split"?}]}."""
    path = Path(path)
    obj = json.loads(path.read_text(encoding="utf-8"))
    views = int(obj["views"])
    if views not in (1, 2):
        raise ViewCountMismatch(f"views must be 1 or 2, got {views}")
    items = obj["items"]
    if not items:
        raise ManifestMismatch("manifest has no items")
    seen = set()
    for item in items:
        if len(item["images"]) != views:
            raise ViewCountMismatch(
                f"{item['report_id']}: {len(item['images'])} images, manifest says {views}"
            )
        if item["report_id"] in seen:
            raise ManifestMismatch(f"duplicate report_id {item['report_id']}")
        seen.add(item["report_id"])
        for image in item["images"]:
            if not (path.parent / image).exists():
                raise ManifestMismatch(f"{item['report_id']}: missing image {image}")
    return obj


def load_sheet_dir(path: str | Path) -> tuple[list[str], dict[str, np.ndarray]]:
    """Label order plus per-report 0/1 vectors from a directory of sheet JSONs."""
    files = sorted(Path(path).glob("*.json"))
    if not files:
        raise ManifestMismatch(f"no sheets under {path}")
    labels: list[str] | None = None
    table: dict[str, np.ndarray] = {}
    for file in files:
        obj = json.loads(file.read_text(encoding="utf-8"))
        assignments = obj["assignments"]
        if labels is None:
            labels = list(assignments)
        elif set(labels) != set(assignments):
            raise ManifestMismatch(f"{file.name}: label domain differs")
        for value in assignments.values():
            if not isinstance(value, bool):
                raise SchemaViolation(f"{file.name}: non-binary assignment {value!r}")
        table[obj["report_id"]] = np.array([assignments[l] for l in labels], dtype=np.float32)
    return labels or [], table


def build_transforms(config: TrainConfig, train: bool):
    augment = []
    if train:
        augment = [
            transforms.RandomHorizontalFlip(p=config.flip_p),
            transforms.RandomRotation(config.rotation_deg),
            transforms.ColorJitter(brightness=config.color_jitter,
                                   contrast=config.color_jitter),
        ]
    return transforms.Compose([
        transforms.Resize((config.input_size, config.input_size)),
        *augment,
        transforms.ToTensor(),
        transforms.Normalize(mean=config.normalize_mean, std=config.normalize_std),
    ])


class RadiographDataset(Dataset):
    """Pairs 1-2 projections per report with its multi-label target vector."""

    def __init__(self, manifest: dict, manifest_dir: Path, labels: Sequence[str],
                 targets: dict[str, np.ndarray], config: TrainConfig, train: bool,
                 split: str | None = None):
        self.items = [item for item in manifest["items"]
                      if split is None or item.get("split", "train") == split]
        if not self.items:
            raise ManifestMismatch(f"manifest has no items in split {split!r}")
        missing = [i["report_id"] for i in self.items if i["report_id"] not in targets]
        if missing:
            raise ManifestMismatch(f"no sheets for manifest items: {missing[:5]}")
        self.manifest_dir = Path(manifest_dir)
        self.labels = list(labels)
        self.targets = targets
        self.views = int(manifest["views"])
        self.transform = build_transforms(config, train=train)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int):
        item = self.items[index]
        images = [
            self.transform(Image.open(self.manifest_dir / p).convert("RGB"))
            for p in item["images"]
        ]
        target = torch.from_numpy(self.targets[item["report_id"]])
        return images, target

    def report_ids(self) -> list[str]:
        return [item["report_id"] for item in self.items]


def collate(batch):
    views = len(batch[0][0])
    stacked = [torch.stack([sample[0][v] for sample in batch]) for v in range(views)]
    targets = torch.stack([sample[1] for sample in batch])
    return stacked, targets
