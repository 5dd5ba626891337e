"""Train/validation/test partitioning with balanced multi-label distribution.

The stratifier is the iterative, rarest-label-first scheme: labels are
processed from fewest remaining positives upward, and each carrier report
goes to the subset with the greatest remaining demand for that label.
Everything is deterministic given (corpus order, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import BinaryLabelSheet, MixedRegions, RadlabelError

__all__ = [
    "DegenerateFractions",
    "PoolTooSmall",
    "SplitAssignment",
    "SUBSETS",
    "subset_sizes",
    "stratified_split",
    "sample_external",
]

SUBSETS = ("train", "validation", "test")


class DegenerateFractions(RadlabelError):
    code = "degenerate_fractions"


class PoolTooSmall(RadlabelError):
    code = "pool_too_small"

    def __init__(self, region: str, have: int, want: int):
        super().__init__(f"region {region!r} pool has {have} ids, need {want}")
        self.region = region


@dataclass(frozen=True)
class SplitAssignment:
    """Total, disjoint mapping of report ids onto train/validation/test."""

    assignment: Mapping[str, str]
    seed: int
    fractions: tuple[float, float, float]

    def ids_in(self, subset: str) -> list[str]:
        return [rid for rid, s in self.assignment.items() if s == subset]

    def sizes(self) -> dict[str, int]:
        out = {name: 0 for name in SUBSETS}
        for subset in self.assignment.values():
            out[subset] += 1
        return out

    def to_json_obj(self) -> dict:
        return {"seed": self.seed, "fractions": list(self.fractions),
                "assignment": dict(self.assignment)}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "SplitAssignment":
        return cls(assignment=dict(obj["assignment"]), seed=int(obj["seed"]),
                   fractions=tuple(obj["fractions"]))


def subset_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Integer subset sizes for the given fractions, totalling exactly n.

    Non-final subsets take the ceiling of their share; the final subset takes
    the remainder. For (0.64, 0.16, 0.20) this reproduces the reference
    partitions (100 -> 64/16/20, 1170 -> 749/188/233).
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != len(SUBSETS):
        raise DegenerateFractions(f"expected {len(SUBSETS)} fractions, got {len(fractions)}")
    if any(f <= 0.0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise DegenerateFractions(f"fractions must be positive and sum to 1, got {fractions}")
    sizes = [math.ceil(round(n * f, 9)) for f in fractions[:-1]]
    sizes.append(n - sum(sizes))
    # Tiny corpora can starve the final subset; hand cells back from the
    # subsets that overshot their quota the most.
    while sizes[-1] < 1:
        overshoot = [sizes[i] - n * fractions[i] for i in range(len(sizes) - 1)]
        donor = max(range(len(overshoot)), key=lambda i: (overshoot[i], sizes[i]))
        if sizes[donor] <= 1:
            raise DegenerateFractions(f"fractions {fractions} leave an empty subset for n={n}")
        sizes[donor] -= 1
        sizes[-1] += 1
    if any(s <= 0 for s in sizes):
        raise DegenerateFractions(f"fractions {fractions} leave an empty subset for n={n}")
    return sizes


def stratified_split(corpus: Sequence[BinaryLabelSheet],
                     fractions: Sequence[float] = (0.64, 0.16, 0.20),
                     seed: int = 0) -> SplitAssignment:
    """Partition a corpus, balancing per-label positive counts across subsets."""
    if not corpus:
        raise DegenerateFractions("corpus must be non-empty")
    regions = {sheet.region for sheet in corpus}
    if len(regions) > 1:
        raise MixedRegions(regions)
    sizes = subset_sizes(len(corpus), fractions)
    rng = np.random.default_rng(seed)

    labels = list(corpus[0].assignments)
    positives = np.array(
        [[bool(sheet.assignments[l]) for l in labels] for sheet in corpus], dtype=bool
    )
    n_subsets = len(SUBSETS)
    capacity = np.array(sizes, dtype=int)
    # Remaining per-label demand of each subset, seeded at count * fraction.
    demand = positives.sum(axis=0)[:, None] * np.asarray(fractions)[None, :]

    assigned = np.full(len(corpus), -1, dtype=int)
    remaining_pos = positives.copy()

    def _tie_pick(candidates: np.ndarray) -> int:
        if len(candidates) == 1:
            return int(candidates[0])
        return int(rng.choice(candidates))

    while True:
        per_label = remaining_pos.sum(axis=0)
        open_labels = np.flatnonzero(per_label > 0)
        if len(open_labels) == 0:
            break
        rarest = per_label[open_labels].min()
        label = _tie_pick(open_labels[per_label[open_labels] == rarest])
        for report in np.flatnonzero(remaining_pos[:, label]):
            open_subsets = np.flatnonzero(capacity > 0)
            best = demand[label, open_subsets]
            tied = open_subsets[best == best.max()]
            if len(tied) > 1:
                cap = capacity[tied]
                tied = tied[cap == cap.max()]
            subset = _tie_pick(tied)
            assigned[report] = subset
            capacity[subset] -= 1
            demand[positives[report], subset] -= 1.0
            remaining_pos[report, :] = False

    for report in np.flatnonzero(assigned < 0):
        open_subsets = np.flatnonzero(capacity > 0)
        cap = capacity[open_subsets]
        subset = _tie_pick(open_subsets[cap == cap.max()])
        assigned[report] = subset
        capacity[subset] -= 1

    assignment = {sheet.report_id: SUBSETS[assigned[i]] for i, sheet in enumerate(corpus)}
    return SplitAssignment(assignment=assignment, seed=seed,
                           fractions=tuple(float(f) for f in fractions))


def sample_external(pool: Mapping[str, Sequence[str]], n_per_region: int,
                    seed: int = 0) -> dict[str, list[str]]:
    """Uniform without-replacement sample of n ids per region, seed-deterministic."""
    rng = np.random.default_rng(seed)
    selected: dict[str, list[str]] = {}
    for region in sorted(pool):
        ids = list(pool[region])
        if len(ids) < n_per_region:
            raise PoolTooSmall(region, len(ids), n_per_region)
        idx = rng.choice(len(ids), size=n_per_region, replace=False)
        selected[region] = [ids[i] for i in sorted(idx)]
    return selected
