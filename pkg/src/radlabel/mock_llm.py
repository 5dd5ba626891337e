"""Deterministic stand-ins for the real endpoint, for offline runs and tests.

Every mock answers in the filled-template wire format. Randomized modes
derive one RNG substream per report from (seed, report_id), so results do
not depend on call order or parallelism.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import LabelSheet, LabelState
from .extract import PromptPayload, serialize_sheet

__all__ = [
    "MockLlmSpec",
    "EchoTruthClient",
    "FlipNoiseClient",
    "UncertaintyDropClient",
    "AlwaysMalformedClient",
    "ScriptedClient",
    "build_mock_client",
]

MOCK_MODES = ("echo_truth", "flip_noise", "always_malformed", "uncertainty_drop")


@dataclass(frozen=True)
class MockLlmSpec:
    mode: str
    rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MOCK_MODES:
            raise ValueError(f"unknown mock mode {self.mode!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must lie in [0, 1]")

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "MockLlmSpec":
        return cls(mode=obj["mode"], rate=float(obj.get("rate", 0.0)),
                   seed=int(obj.get("seed", 0)))


def _report_rng(seed: int, report_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(report_id.encode("utf-8"))])


class EchoTruthClient:
    """Answers every prompt with the report's truth sheet, verbatim."""

    def __init__(self, truth: Mapping[str, LabelSheet], max_retries: int = 3):
        self.truth = dict(truth)
        self.max_retries = max_retries

    def complete(self, payload: PromptPayload, report_id: str) -> str:
        return serialize_sheet(self.truth[report_id])


class FlipNoiseClient:
    """Echoes truth with each cell flipped to another state with probability rate."""

    def __init__(self, truth: Mapping[str, LabelSheet], rate: float, seed: int = 0,
                 max_retries: int = 3):
        self.truth = dict(truth)
        self.rate = rate
        self.seed = seed
        self.max_retries = max_retries

    def complete(self, payload: PromptPayload, report_id: str) -> str:
        sheet = self.truth[report_id]
        rng = _report_rng(self.seed, report_id)
        states = list(LabelState)
        noisy: dict[str, LabelState] = {}
        for label, state in sheet.assignments.items():
            if rng.random() < self.rate:
                others = [s for s in states if s is not state]
                noisy[label] = others[int(rng.integers(0, len(others)))]
            else:
                noisy[label] = state
        return serialize_sheet(sheet.with_assignments(noisy))


class UncertaintyDropClient:
    """Echoes truth but misses hedging: Uncertain cells become True with probability rate."""

    def __init__(self, truth: Mapping[str, LabelSheet], rate: float, seed: int = 0,
                 max_retries: int = 3):
        self.truth = dict(truth)
        self.rate = rate
        self.seed = seed
        self.max_retries = max_retries

    def complete(self, payload: PromptPayload, report_id: str) -> str:
        sheet = self.truth[report_id]
        rng = _report_rng(self.seed, report_id)
        dropped = {
            label: (LabelState.TRUE
                    if state is LabelState.UNCERTAIN and rng.random() < self.rate
                    else state)
            for label, state in sheet.assignments.items()
        }
        return serialize_sheet(sheet.with_assignments(dropped))


class AlwaysMalformedClient:
    """Never produces valid JSON; exercises the retry/exhaustion path."""

    def __init__(self, max_retries: int = 3):
        self.max_retries = max_retries
        self.calls = 0

    def complete(self, payload: PromptPayload, report_id: str) -> str:
        self.calls += 1
        return "Sorry, here is the template: {not json"


class ScriptedClient:
    """Plays back a fixed sequence of responses per report (tests only)."""

    def __init__(self, scripts: Mapping[str, Sequence[str]], max_retries: int = 3):
        self._scripts = {rid: list(responses) for rid, responses in scripts.items()}
        self._cursor: dict[str, int] = {}
        self.max_retries = max_retries

    def complete(self, payload: PromptPayload, report_id: str) -> str:
        i = self._cursor.get(report_id, 0)
        responses = self._scripts[report_id]
        self._cursor[report_id] = i + 1
        return responses[min(i, len(responses) - 1)]


def build_mock_client(spec: MockLlmSpec, truth: Mapping[str, LabelSheet] | None = None,
                      max_retries: int = 3):
    """Instantiate the client for a mock spec; truth required except for always_malformed."""
    if spec.mode == "always_malformed":
        return AlwaysMalformedClient(max_retries=max_retries)
    if truth is None:
        raise ValueError(f"mock mode {spec.mode!r} needs truth sheets")
    if spec.mode == "echo_truth":
        return EchoTruthClient(truth, max_retries=max_retries)
    if spec.mode == "flip_noise":
        return FlipNoiseClient(truth, rate=spec.rate, seed=spec.seed, max_retries=max_retries)
    return UncertaintyDropClient(truth, rate=spec.rate, seed=spec.seed, max_retries=max_retries)
