"""Training loop and scoring: AdamW + StepLR on BCE-with-logits.

Artifacts are self-contained torch checkpoints (weights, label order, view
count, config echo). Scoring writes the evaluator's score-matrix CSV:
``report_id,<label...>`` with probabilities in [0, 1], rows in manifest order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from .config import TrainConfig
from .data import (
    RadiographDataset,
    SchemaViolation,
    ViewCountMismatch,
    collate,
    load_manifest,
    load_sheet_dir,
)
from .model import MultiViewClassifier


def _rank_auc(scores: np.ndarray, targets: np.ndarray) -> float:
    """Tie-aware rank AUC for validation monitoring."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j < len(scores) and sorted_scores[j] == sorted_scores[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j - 1) + 1.0
        i = j
    n_pos = targets.sum()
    n_neg = len(targets) - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    return float((ranks[targets == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def macro_auc(scores: np.ndarray, targets: np.ndarray) -> float:
    per_label = [_rank_auc(scores[:, j], targets[:, j]) for j in range(scores.shape[1])]
    values = [v for v in per_label if not np.isnan(v)]
    if not values:
        return float("nan")
    return float(np.mean(values))


def _score_dataset(model: MultiViewClassifier, dataset: RadiographDataset,
                   batch_size: int) -> np.ndarray:
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False, collate_fn=collate)
    model.eval()
    rows = []
    with torch.no_grad():
        for views, _ in loader:
            rows.append(model.probabilities(views).numpy())
    return np.concatenate(rows, axis=0)


def write_score_csv(path: str | Path, labels: list[str], report_ids: list[str],
                    scores: np.ndarray) -> None:
    if scores.shape != (len(report_ids), len(labels)):
        raise SchemaViolation(f"score shape {scores.shape} does not match manifest")
    if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
        raise SchemaViolation("scores outside [0, 1]")
    lines = ["report_id," + ",".join(labels)]
    for rid, row in zip(report_ids, scores):
        lines.append(rid + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def train(manifest_path: str | Path, sheets_dir: str | Path, config: TrainConfig,
          seed: int, out_dir: str | Path, stop_at_macro_auc: float | None = None) -> dict:
    """Fit on the manifest's train split, score its validation split.

    Returns {"artifact", "val_scores_csv", "history", "summary"}. With
    ``stop_at_macro_auc`` set, training ends early once the validation
    macro-AUC reaches it (still within the configured epoch budget).
    """
    manifest_path = Path(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(seed)

    manifest = load_manifest(manifest_path)
    labels, targets = load_sheet_dir(sheets_dir)
    train_set = RadiographDataset(manifest, manifest_path.parent, labels, targets,
                                  config, train=True, split="train")
    val_set = RadiographDataset(manifest, manifest_path.parent, labels, targets,
                                config, train=False, split="validation")

    model = MultiViewClassifier(n_labels=len(labels), views=int(manifest["views"]),
                                backbone=config.backbone)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr)
    scheduler = torch.optim.lr_scheduler.StepLR(optimizer, step_size=config.step_size,
                                                gamma=config.gamma)
    criterion = torch.nn.BCEWithLogitsLoss()
    generator = torch.Generator().manual_seed(seed)
    loader = DataLoader(train_set, batch_size=config.batch_size, shuffle=True,
                        generator=generator, collate_fn=collate)

    val_targets = np.stack([targets[rid] for rid in val_set.report_ids()])
    history: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        model.train()
        losses = []
        for views, batch_targets in loader:
            optimizer.zero_grad()
            loss = criterion(model(views), batch_targets)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        scheduler.step()
        val_scores = _score_dataset(model, val_set, config.batch_size)
        entry = {"epoch": epoch, "train_loss": float(np.mean(losses)),
                 "val_macro_auc": macro_auc(val_scores, val_targets)}
        history.append(entry)
        if stop_at_macro_auc is not None and entry["val_macro_auc"] >= stop_at_macro_auc:
            break

    val_scores = _score_dataset(model, val_set, config.batch_size)
    csv_path = out_dir / "scores_validation.csv"
    write_score_csv(csv_path, labels, val_set.report_ids(), val_scores)

    artifact_path = out_dir / "model.pt"
    torch.save({
        "state_dict": model.state_dict(),
        "labels": labels,
        "views": model.views,
        "backbone": config.backbone,
        "config": config.to_json_obj(),
        "summary": model.summary(),
    }, artifact_path)
    (out_dir / "history.json").write_text(json.dumps(history, indent=2) + "\n",
                                          encoding="utf-8")
    return {"artifact": str(artifact_path), "val_scores_csv": str(csv_path),
            "history": history, "summary": model.summary()}


def load_artifact(path: str | Path) -> tuple[MultiViewClassifier, list[str], TrainConfig]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = TrainConfig.from_json_obj(payload["config"])
    model = MultiViewClassifier(n_labels=len(payload["labels"]),
                                views=payload["views"], backbone=payload["backbone"])
    model.load_state_dict(payload["state_dict"])
    return model, payload["labels"], config


def predict(artifact_path: str | Path, manifest_path: str | Path,
            out_csv: str | Path) -> dict:
    """Score every manifest item (manifest order) into an evaluator-ready CSV."""
    manifest_path = Path(manifest_path)
    model, labels, config = load_artifact(artifact_path)
    manifest = load_manifest(manifest_path)
    if int(manifest["views"]) != model.views:
        raise ViewCountMismatch(
            f"artifact expects {model.views} views, manifest has {manifest['views']}"
        )
    dummy_targets = {item["report_id"]: np.zeros(len(labels), dtype=np.float32)
                     for item in manifest["items"]}
    dataset = RadiographDataset(manifest, manifest_path.parent, labels, dummy_targets,
                                config, train=False, split=None)
    scores = _score_dataset(model, dataset, config.batch_size)
    write_score_csv(out_csv, labels, dataset.report_ids(), scores)
    return {"rows": len(dataset), "labels": labels, "out": str(out_csv)}
