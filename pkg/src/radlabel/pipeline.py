"""End-to-end run: anonymize -> extract -> relabel -> split -> qa -> eval.

Every produced file lands under one working directory and is recorded in a
manifest with its content hash. All randomness flows from named seeds in the
config, so identical configs yield byte-identical manifests when a mock
endpoint is in play.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import corpus_io
from .anonymize import default_rules, load_rules, scrub
from .core import LabelSheet, RadlabelError, ReportDocument, ScoreMatrix, get_template
from .evaluate import evaluate
from .extract import HttpChatClient, LlmEndpointConfig, extract_corpus
from .generate import generate_corpus
from .mock_llm import MockLlmSpec, build_mock_client
from .quality import extraction_quality
from .relabel import census, reassign_uncertain
from .split import stratified_split

__all__ = ["PipelineConfig", "StageFailure", "run_pipeline"]

logger = logging.getLogger("radlabel.pipeline")


class StageFailure(RadlabelError):
    code = "stage_failure"

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a full run needs; defaults follow the reference settings."""

    region: str
    workdir: Path
    n_reports: int = 300
    reports_dir: Path | None = None
    truth_dir: Path | None = None
    mock: MockLlmSpec | None = None
    endpoint: LlmEndpointConfig | None = None
    rules_path: Path | None = None
    policies: tuple[str, ...] = ("inclusive", "exclusive")
    fractions: tuple[float, float, float] = (0.64, 0.16, 0.20)
    seed: int = 0
    uncertainty_rate: float = 0.05
    prevalence: Mapping[str, float] | float | None = None
    min_positives: int = 10
    replicates: int = 1000
    alpha: float = 0.05
    level: float = 0.95
    scores_csv: Path | None = None
    val_scores_csv: Path | None = None
    pause_for_review: bool = False
    with_pii: bool = True

    @classmethod
    def from_json_obj(cls, obj: Mapping, workdir: str | Path | None = None) -> "PipelineConfig":
        eval_obj = obj.get("eval", {})
        return cls(
            region=obj["region"],
            workdir=Path(workdir or obj.get("workdir", "pipeline-out")),
            n_reports=int(obj.get("n_reports", 300)),
            reports_dir=Path(obj["reports_dir"]) if obj.get("reports_dir") else None,
            truth_dir=Path(obj["truth_dir"]) if obj.get("truth_dir") else None,
            mock=MockLlmSpec.from_json_obj(obj["mock"]) if obj.get("mock") else None,
            endpoint=(LlmEndpointConfig.from_json_obj(obj["endpoint"])
                      if obj.get("endpoint") else None),
            rules_path=Path(obj["rules"]) if obj.get("rules") else None,
            policies=tuple(obj.get("policies", ("inclusive", "exclusive"))),
            fractions=tuple(obj.get("fractions", (0.64, 0.16, 0.20))),
            seed=int(obj.get("seed", 0)),
            uncertainty_rate=float(obj.get("uncertainty_rate", 0.05)),
            prevalence=obj.get("prevalence"),
            min_positives=int(eval_obj.get("min_positives", 10)),
            replicates=int(eval_obj.get("replicates", 1000)),
            alpha=float(eval_obj.get("alpha", 0.05)),
            level=float(eval_obj.get("level", 0.95)),
            scores_csv=Path(obj["scores_csv"]) if obj.get("scores_csv") else None,
            val_scores_csv=Path(obj["val_scores_csv"]) if obj.get("val_scores_csv") else None,
            pause_for_review=bool(obj.get("pause_for_review", False)),
            with_pii=bool(obj.get("with_pii", True)),
        )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _reference_scores(sheets: Sequence[LabelSheet], labels: Sequence[str],
                      seed: Sequence[int], policy_separation: float = 1.0) -> ScoreMatrix:
    """Seeded stand-in scorer: truth plus Gaussian noise through a sigmoid.

    Gives AUCs around 0.9 per label; the interface point where a real
    trainer's CSV plugs in instead.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    ids = tuple(s.report_id for s in sheets)
    y = np.array([[1.0 if s.assignments[l] else -1.0 for l in labels] for s in sheets])
    logits = policy_separation * y + rng.normal(0.0, 1.0, size=y.shape)
    scores = 1.0 / (1.0 + np.exp(-logits))
    return ScoreMatrix(labels=tuple(labels), report_ids=ids, scores=scores)


def run_pipeline(config: PipelineConfig) -> Path:
    """Execute all stages and write ``manifest.json``; returns the manifest path.

    The first fatal stage error propagates as StageFailure after the manifest
    (including everything produced so far) has been written.
    """
    work = Path(config.workdir)
    work.mkdir(parents=True, exist_ok=True)
    stages_done: list[str] = []
    notes: dict[str, object] = {}

    def _finish(failed_stage: str | None = None, paused: bool = False) -> Path:
        files = {
            str(p.relative_to(work)): _sha256(p)
            for p in sorted(work.rglob("*"))
            if p.is_file() and p.name != "manifest.json"
        }
        manifest = {
            "region": config.region,
            "seed": config.seed,
            "stages": stages_done,
            "failed_stage": failed_stage,
            "paused": paused,
            "notes": notes,
            "files": files,
        }
        return corpus_io.write_json(work / "manifest.json", manifest)

    try:
        template = get_template(config.region)

        # corpus: generate unless an existing one is supplied
        if config.reports_dir is not None:
            reports = corpus_io.load_reports(config.reports_dir)
            truth = (corpus_io.load_sheets(config.truth_dir)
                     if config.truth_dir is not None else None)
        else:
            reports, truth = generate_corpus(
                config.region, config.n_reports, prevalence=config.prevalence,
                uncertainty_rate=config.uncertainty_rate, seed=config.seed,
                with_pii=config.with_pii,
            )
            for report in reports:
                corpus_io.write_report(work / "reports", report)
            for sheet in truth:
                corpus_io.write_sheet(work / "truth", sheet)
            stages_done.append("gen-corpus")
            logger.info("gen-corpus: %d reports", len(reports))

        # anonymize
        rules = load_rules(config.rules_path) if config.rules_path else default_rules()
        scrubbed: list[ReportDocument] = []
        with (work / "redaction_log.jsonl").open("w", encoding="utf-8") as log_fh:
            for report in reports:
                clean, log = scrub(report, rules)
                scrubbed.append(clean)
                for entry in log.to_json_objs():
                    log_fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        for report in scrubbed:
            corpus_io.write_report(work / "scrubbed", report)
        stages_done.append("anonymize")
        logger.info("anonymize: %d reports scrubbed", len(scrubbed))

        # extract
        if config.endpoint is not None:
            client = HttpChatClient(config.endpoint)
            parallelism = config.endpoint.parallelism
        else:
            spec = config.mock or MockLlmSpec(mode="echo_truth")
            truth_map = {s.report_id: s for s in truth} if truth else None
            client = build_mock_client(spec, truth_map)
            parallelism = 4
        results = extract_corpus(scrubbed, template, client, parallelism=parallelism)
        extracted = [r.sheet for r in results if r.ok]
        failures = [r for r in results if not r.ok]
        with (work / "failures.jsonl").open("w", encoding="utf-8") as fh:
            for result in failures:
                fh.write(json.dumps({"report_id": result.report_id,
                                     "attempts": result.attempts,
                                     "error": result.failure}, ensure_ascii=False) + "\n")
        for sheet in extracted:
            corpus_io.write_sheet(work / "sheets", sheet)
        notes["extraction_failures"] = len(failures)
        if not extracted:
            raise StageFailure("extract", f"all {len(results)} reports failed; "
                                          f"see failures.jsonl")
        stages_done.append("extract")
        logger.info("extract: %d sheets, %d failures", len(extracted), len(failures))

        if config.pause_for_review:
            notes["paused_after"] = "extract"
            return _finish(paused=True)

        # relabel under both policies, plus the three-state census
        corpus_io.write_json(work / "census.json", census(extracted).to_json_obj())
        binary = {}
        for policy in config.policies:
            binary[policy] = [reassign_uncertain(s, policy) for s in extracted]
            for sheet in binary[policy]:
                corpus_io.write_binary_sheet(work / "binary" / policy, sheet)
        stages_done.append("relabel")

        # split on exclusive-policy positives
        basis = binary.get("exclusive") or [reassign_uncertain(s, "exclusive")
                                            for s in extracted]
        assignment = stratified_split(basis, fractions=config.fractions, seed=config.seed)
        corpus_io.write_json(work / "split.json", assignment.to_json_obj())
        stages_done.append("split")
        logger.info("split: %s", assignment.sizes())

        # qa against truth, when truth exists
        if truth is not None:
            ok_ids = {s.report_id for s in extracted}
            truth_used = [t for t in truth if t.report_id in ok_ids]
            report = extraction_quality(extracted, truth_used, three_state=True)
            corpus_io.write_json(work / "quality.json", report.to_json_obj())
            stages_done.append("qa")
            notes["label_accuracy"] = report.label_accuracy

        # eval on the test split; thresholds from the validation split
        eval_truth = truth if truth is not None else extracted
        resolved = [reassign_uncertain(s, "exclusive") for s in eval_truth]
        notes["eval_truth"] = ("truth sheets, Uncertain auto-resolved exclusively"
                               if truth is not None else
                               "extracted sheets, Uncertain auto-resolved exclusively")
        by_subset: dict[str, list] = {"validation": [], "test": []}
        for sheet in resolved:
            subset = assignment.assignment.get(sheet.report_id)
            if subset in by_subset:
                by_subset[subset].append(sheet)
        labels = list(template.labels)
        if config.scores_csv is not None and config.val_scores_csv is not None:
            test_scores = ScoreMatrix.from_csv(config.scores_csv)
            val_scores = ScoreMatrix.from_csv(config.val_scores_csv)
        else:
            test_scores = _reference_scores(by_subset["test"], labels,
                                            seed=[config.seed, 101])
            val_scores = _reference_scores(by_subset["validation"], labels,
                                           seed=[config.seed, 102])
            test_scores.to_csv(work / "scores_test.csv")
            val_scores.to_csv(work / "scores_validation.csv")
        report = evaluate(test_scores, by_subset["test"], val_scores,
                          by_subset["validation"], min_positives=config.min_positives,
                          replicates=config.replicates, seed=config.seed,
                          level=config.level)
        corpus_io.write_json(work / "eval_report.json", report.to_json_obj())
        stages_done.append("eval")
        logger.info("eval: %d label rows", len(report.rows))

        return _finish()
    except StageFailure as exc:
        _finish(failed_stage=exc.stage)
        raise
    except RadlabelError as exc:
        stage = stages_done[-1] if stages_done else "init"
        _finish(failed_stage=f"after:{stage}")
        raise StageFailure(f"after:{stage}", str(exc)) from exc
