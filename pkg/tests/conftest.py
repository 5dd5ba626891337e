from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from radlabel.core import LabelSheet, LabelState, get_template
from radlabel.generate import CorpusProfile, generate_corpus


@pytest.fixture(scope="session")
def clavicle_template():
    return get_template("clavicle")


@pytest.fixture(scope="session")
def elbow_template():
    return get_template("elbow")


@pytest.fixture(scope="session")
def thumb_template():
    return get_template("thumb")


def make_sheet(template, overrides=None, report_id="r-1", provenance="auto") -> LabelSheet:
    """All-False sheet with selected labels overridden."""
    assignments = {label: LabelState.FALSE for label in template.labels}
    for label, state in (overrides or {}).items():
        assignments[label] = state
    return LabelSheet(report_id=report_id, region=template.region,
                      assignments=assignments, provenance=provenance)


def random_instance(rng: np.random.Generator, max_n: int = 200,
                    with_ties: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Random (scores, labels) with both classes present, optionally tied scores."""
    n = int(rng.integers(4, max_n + 1))
    labels = np.zeros(n, dtype=int)
    n_pos = int(rng.integers(1, n))
    labels[:n_pos] = 1
    rng.shuffle(labels)
    if with_ties and rng.random() < 0.7:
        # quantized scores guarantee ties at moderate n
        scores = rng.integers(0, max(2, n // 4), size=n) / max(2, n // 4)
    else:
        scores = rng.random(n)
    return np.asarray(scores, dtype=float), labels


@pytest.fixture(scope="session")
def small_clavicle_corpus():
    """60 clavicle reports with hedges and PII, plus their truth sheets."""
    return generate_corpus("clavicle", 60, uncertainty_rate=0.1, seed=424, with_pii=True)
