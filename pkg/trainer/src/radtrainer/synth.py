"""Separable synthetic radiograph stand-ins.

Each label owns a horizontal band in one view; the label being positive draws
a bright bar there. A linear probe on band brightness separates every label
perfectly, so the dataset certifies that the fusion architecture can learn
it within the configured schedule.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

DEFAULT_LABELS = ("alpha finding", "beta finding", "gamma finding", "delta finding")


def _view_of_label(index: int, views: int) -> int:
    return index % views


def render_image(rng: np.random.Generator, size: int, active_bands: list[int],
                 n_bands: int) -> np.ndarray:
    image = rng.normal(30.0, 8.0, size=(size, size))
    band_height = size // n_bands
    for band in active_bands:
        top = band * band_height + int(rng.integers(0, max(1, band_height // 4)))
        height = max(4, int(band_height * 0.5))
        left = int(rng.integers(0, size // 4))
        width = int(rng.integers(size // 2, size - left))
        image[top:top + height, left:left + width] += rng.normal(170.0, 10.0)
    return np.clip(image, 0, 255).astype(np.uint8)


def generate_synthetic_dataset(out_dir: str | Path, n_items: int = 200,
                               labels: tuple[str, ...] = DEFAULT_LABELS,
                               views: int = 2, image_size: int = 512,
                               prevalence: float = 0.5, seed: int = 0,
                               val_fraction: float = 0.2,
                               region: str = "synthetic") -> dict:
    """Images, manifest (train/validation splits), and binary truth sheets."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "sheets").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    per_view: dict[int, list[int]] = {v: [] for v in range(views)}
    for j in range(len(labels)):
        per_view[_view_of_label(j, views)].append(j)

    n_val = max(1, int(round(n_items * val_fraction)))
    items = []
    for i in range(n_items):
        rid = f"syn-{i:05d}"
        assignment = rng.random(len(labels)) < prevalence
        if not assignment.any():
            assignment[int(rng.integers(0, len(labels)))] = True
        image_paths = []
        for view in range(views):
            band_ids = [per_view[view].index(j) for j in per_view[view] if assignment[j]]
            image = render_image(rng, image_size, band_ids, max(1, len(per_view[view])))
            name = f"images/{rid}_v{view}.png"
            Image.fromarray(image, mode="L").save(out_dir / name)
            image_paths.append(name)
        items.append({"report_id": rid, "images": image_paths,
                      "split": "validation" if i < n_val else "train"})
        sheet = {"report_id": rid, "region": region, "policy": "ground_truth",
                 "assignments": {l: bool(a) for l, a in zip(labels, assignment)}}
        (out_dir / "sheets" / f"{rid}.json").write_text(
            json.dumps(sheet, indent=2) + "\n", encoding="utf-8")

    manifest = {"region": region, "views": views, "items": items}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                           encoding="utf-8")
    return manifest
