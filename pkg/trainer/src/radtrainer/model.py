"""Per-view encoders with identity final layers, concatenated into one head.

Two-projection regions run each image through its own backbone; the feature
vectors are concatenated before the final fully connected layer, whose logits
pass through a sigmoid to become per-label probabilities.
"""

from __future__ import annotations

import torch
from torch import nn


class TinyEncoder(nn.Module):
    """Small strided CNN for desk-scale runs.

    Pooling keeps 8 vertical bands (x channel) instead of one global cell so
    the features stay location-aware; 256-dim output.
    """

    feature_dim = 256

    def __init__(self):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, 8, kernel_size=7, stride=4, padding=3),
            nn.BatchNorm2d(8),
            nn.ReLU(inplace=True),
            nn.Conv2d(8, 16, kernel_size=5, stride=4, padding=2),
            nn.BatchNorm2d(16),
            nn.ReLU(inplace=True),
            nn.Conv2d(16, 32, kernel_size=3, stride=2, padding=1),
            nn.BatchNorm2d(32),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d((8, 1)),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(x).flatten(1)


def build_encoder(backbone: str) -> tuple[nn.Module, int]:
    if backbone == "tiny":
        return TinyEncoder(), TinyEncoder.feature_dim
    if backbone == "resnet50":
        from torchvision.models import resnet50

        encoder = resnet50(weights=None)
        dim = encoder.fc.in_features
        encoder.fc = nn.Identity()  # identity final layer; features only
        return encoder, dim
    raise ValueError(f"unknown backbone {backbone!r}")


class MultiViewClassifier(nn.Module):
    """views independent encoders -> concatenated features -> multi-label head."""

    def __init__(self, n_labels: int, views: int = 2, backbone: str = "tiny"):
        super().__init__()
        if views not in (1, 2):
            raise ValueError("views must be 1 or 2")
        encoders = []
        dim = 0
        for _ in range(views):
            encoder, dim = build_encoder(backbone)
            encoders.append(encoder)
        self.encoders = nn.ModuleList(encoders)
        self.views = views
        self.backbone = backbone
        self.feature_dim = dim
        self.head = nn.Linear(dim * views, n_labels)

    def forward(self, views: list[torch.Tensor]) -> torch.Tensor:
        if len(views) != self.views:
            raise ValueError(f"expected {self.views} views, got {len(views)}")
        features = [encoder(x) for encoder, x in zip(self.encoders, views)]
        fused = torch.cat(features, dim=1) if self.views > 1 else features[0]
        return self.head(fused)

    def probabilities(self, views: list[torch.Tensor]) -> torch.Tensor:
        return torch.sigmoid(self.forward(views))

    def summary(self) -> dict:
        return {
            "views": self.views,
            "fusion": self.views > 1,
            "backbone": self.backbone,
            "feature_dim": self.feature_dim,
            "n_labels": self.head.out_features,
        }
