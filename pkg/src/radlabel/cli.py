"""Command line entry point wiring the pipeline stages together.

Exit codes: 0 on success, 2 for validation errors (bad arguments, malformed
inputs), 3 for stage failures at runtime.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from . import corpus_io
from .anonymize import default_rules, load_rules, scrub
from .core import LabelTemplate, MixedRegions, RadlabelError, ScoreMatrix, get_template, register_template
from .evaluate import compare_paired, compare_unpaired, evaluate
from .extract import HttpChatClient, LlmEndpointConfig, extract_corpus
from .generate import generate_corpus
from .mock_llm import MOCK_MODES, MockLlmSpec, build_mock_client
from .pipeline import PipelineConfig, run_pipeline
from .quality import IdMismatch, extraction_quality
from .relabel import POLICIES, census, reassign_uncertain
from .split import DegenerateFractions, stratified_split
from .stats import OutOfRange

VALIDATION_ERRORS = (DegenerateFractions, OutOfRange, MixedRegions, IdMismatch)


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except VALIDATION_ERRORS as exc:
            raise click.UsageError(str(exc)) from exc
        except (ValueError, json.JSONDecodeError) as exc:
            raise click.UsageError(str(exc)) from exc
        except RadlabelError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Pipeline config JSON (used by `run`).")
@click.option("--seed", type=int, default=None, help="Fallback seed for subcommands.")
@click.option("--verbose", is_flag=True, default=False)
@click.pass_context
def main(ctx: click.Context, config_path: str | None, seed: int | None, verbose: bool):
    """Extract, adjudicate, relabel, split, and statistically evaluate report labels."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["seed"] = seed
    ctx.obj["verbose"] = verbose
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _seed_of(ctx: click.Context, local: int | None) -> int:
    if local is not None:
        return local
    if ctx.obj.get("seed") is not None:
        return ctx.obj["seed"]
    return 0


def _echo_json(obj: object) -> None:
    click.echo(json.dumps(obj, ensure_ascii=False, indent=2))


@main.command("gen-corpus")
@click.option("--region", required=True)
@click.option("--n", "n_reports", type=int, default=300, show_default=True)
@click.option("--uncertainty-rate", type=float, default=0.05, show_default=True)
@click.option("--prevalence", "prevalence_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON object of per-label prevalences.")
@click.option("--seed", type=int, default=None)
@click.option("--with-pii/--no-pii", default=True, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
@_handle_errors
def gen_corpus_cmd(ctx, region, n_reports, uncertainty_rate, prevalence_path, seed,
                   with_pii, out_dir):
    """Synthesize reports plus three-state truth sheets."""
    prevalence = None
    if prevalence_path:
        prevalence = json.loads(Path(prevalence_path).read_text(encoding="utf-8"))
    reports, truth = generate_corpus(region, n_reports, prevalence=prevalence,
                                     uncertainty_rate=uncertainty_rate,
                                     seed=_seed_of(ctx, seed), with_pii=with_pii)
    out = Path(out_dir)
    for report in reports:
        corpus_io.write_report(out / "reports", report)
    for sheet in truth:
        corpus_io.write_sheet(out / "truth", sheet)
    _echo_json({"reports": len(reports), "census": census(truth).to_json_obj()})


@main.command("anonymize")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--rules", "rules_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False))
@_handle_errors
def anonymize_cmd(in_dir, rules_path, out_dir, log_path):
    """Scrub personal identifiers from a report directory."""
    rules = load_rules(rules_path) if rules_path else default_rules()
    reports = corpus_io.load_reports(in_dir)
    entries = 0
    log_file = Path(log_path)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    with log_file.open("w", encoding="utf-8") as fh:
        for report in reports:
            clean, log = scrub(report, rules)
            corpus_io.write_report(out_dir, clean)
            for obj in log.to_json_objs():
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
                entries += 1
    _echo_json({"reports": len(reports), "redactions": entries})


@main.command("extract")
@click.option("--region", required=True)
@click.option("--template", "template_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Override the shipped template JSON.")
@click.option("--reports", "reports_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--endpoint", "endpoint_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Endpoint config JSON; omit to use a mock.")
@click.option("--mock", "mock_mode", type=click.Choice(MOCK_MODES), default=None)
@click.option("--rate", type=float, default=0.0, help="Mock flip/drop rate.")
@click.option("--mock-seed", type=int, default=0)
@click.option("--truth", "truth_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Truth sheets for truth-based mocks.")
@click.option("--parallelism", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_handle_errors
def extract_cmd(region, template_path, reports_dir, endpoint_path, mock_mode, rate,
                mock_seed, truth_dir, parallelism, out_dir):
    """Fill templates over an endpoint (or mock) and validate the sheets."""
    if template_path:
        register_template(LabelTemplate.from_files(template_path, region=region))
    template = get_template(region)
    reports = corpus_io.load_reports(reports_dir)
    if endpoint_path:
        config = LlmEndpointConfig.from_json_obj(
            json.loads(Path(endpoint_path).read_text(encoding="utf-8")))
        client = HttpChatClient(config)
        workers = parallelism or config.parallelism
    elif mock_mode:
        truth = None
        if truth_dir:
            truth = {s.report_id: s for s in corpus_io.load_sheets(truth_dir)}
        client = build_mock_client(MockLlmSpec(mode=mock_mode, rate=rate, seed=mock_seed),
                                  truth)
        workers = parallelism or 4
    else:
        raise click.UsageError("provide --endpoint or --mock")
    results = extract_corpus(reports, template, client, parallelism=workers)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    failures = 0
    with (out / "failures.jsonl").open("w", encoding="utf-8") as fh:
        for result in results:
            if result.ok:
                corpus_io.write_sheet(out / "sheets", result.sheet)
            else:
                failures += 1
                fh.write(json.dumps({"report_id": result.report_id,
                                     "attempts": result.attempts,
                                     "error": result.failure}, ensure_ascii=False) + "\n")
    _echo_json({"extracted": len(results) - failures, "failed": failures})
    if failures == len(results):
        click.echo("error: extraction failed for every report", err=True)
        sys.exit(3)


@main.command("relabel")
@click.option("--policy", type=click.Choice(POLICIES), required=True)
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_handle_errors
def relabel_cmd(policy, in_dir, out_dir):
    """Reassign Uncertain per policy; prints the three-state census."""
    sheets = corpus_io.load_sheets(in_dir)
    for sheet in sheets:
        corpus_io.write_binary_sheet(out_dir, reassign_uncertain(sheet, policy))
    _echo_json(census(sheets).to_json_obj())


def _load_binary_basis(in_dir: str) -> list:
    """Binary sheets from a directory of either binary or three-state sheets."""
    paths = sorted(Path(in_dir).glob("*.json"))
    sheets = []
    for path in paths:
        obj = json.loads(path.read_text(encoding="utf-8"))
        if "policy" in obj:
            sheets.append(corpus_io.read_binary_sheet(path))
        else:
            sheets.append(reassign_uncertain(corpus_io.read_sheet(path), "exclusive"))
    return sheets


@main.command("split")
@click.option("--fractions", default="0.64,0.16,0.20", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_context
@_handle_errors
def split_cmd(ctx, fractions, seed, in_dir, out_path):
    """Stratified train/validation/test partition (exclusive-policy positives)."""
    fracs = tuple(float(f) for f in fractions.split(","))
    assignment = stratified_split(_load_binary_basis(in_dir), fractions=fracs,
                                  seed=_seed_of(ctx, seed))
    corpus_io.write_json(out_path, assignment.to_json_obj())
    _echo_json({"sizes": assignment.sizes()})


@main.command("qa")
@click.option("--extracted", "extracted_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--truth", "truth_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--three-state", is_flag=True, default=False,
              help="Truth still carries Uncertain (pre-adjudication record).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_handle_errors
def qa_cmd(extracted_dir, truth_dir, three_state, out_path):
    """Extraction quality versus ground truth."""
    extracted = corpus_io.load_sheets(extracted_dir)
    truth = corpus_io.load_sheets(truth_dir)
    report = extraction_quality(extracted, truth, three_state=three_state)
    corpus_io.write_json(out_path, report.to_json_obj())
    _echo_json(report.to_json_obj())


def _load_truth_dir(path: str):
    return _load_binary_basis(path)


@main.command("eval")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--truth", "truth_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--val-scores", "val_scores_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--val-truth", "val_truth_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--min-pos", type=int, default=10, show_default=True)
@click.option("--boot", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_context
@_handle_errors
def eval_cmd(ctx, scores_path, truth_dir, val_scores_path, val_truth_dir, min_pos,
             boot, seed, out_path):
    """Full per-label evaluation of a score matrix (thresholds from validation)."""
    report = evaluate(
        ScoreMatrix.from_csv(scores_path), _load_truth_dir(truth_dir),
        ScoreMatrix.from_csv(val_scores_path), _load_truth_dir(val_truth_dir),
        min_positives=min_pos, replicates=boot, seed=_seed_of(ctx, seed),
    )
    corpus_io.write_json(out_path, report.to_json_obj())
    _echo_json(report.macro or {"macro": None})


@main.command("compare")
@click.option("--mode", type=click.Choice(("paired", "unpaired")), required=True)
@click.option("--scores-a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scores-b", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--truth", "truth_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Shared truth (paired mode).")
@click.option("--truth-a", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--truth-b", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--min-pos", type=int, default=10, show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@_handle_errors
def compare_cmd(mode, scores_a, scores_b, truth_dir, truth_a, truth_b, min_pos,
                alpha, out_path):
    """DeLong comparison of two score matrices with BH-adjusted p-values."""
    a = ScoreMatrix.from_csv(scores_a)
    b = ScoreMatrix.from_csv(scores_b)
    if mode == "paired":
        if not truth_dir:
            raise click.UsageError("paired mode needs --truth")
        result = compare_paired(a, b, _load_truth_dir(truth_dir),
                                min_positives=min_pos, alpha=alpha)
    else:
        if not (truth_a and truth_b):
            raise click.UsageError("unpaired mode needs --truth-a and --truth-b")
        result = compare_unpaired(a, _load_truth_dir(truth_a), b, _load_truth_dir(truth_b),
                                  min_positives=min_pos, alpha=alpha)
    corpus_io.write_json(out_path, result)
    _echo_json({"mode": mode, "comparisons": len(result["comparisons"])})


@main.command("serve")
@click.option("--corpus", "corpus_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory holding scrubbed/ reports and sheets/ label sheets.")
@click.option("--audit", "audit_path", required=True, type=click.Path(dir_okay=False))
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--tokens", "tokens_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help='JSON {"token": "reviewer_id"} map.')
@click.option("--export-dir", type=click.Path(file_okay=False), default=None)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None,
              help="Static assets of the browser frontend.")
@_handle_errors
def serve_cmd(corpus_dir, audit_path, port, tokens_path, export_dir, ui_dir):
    """Run the adjudication HTTP service."""
    import uvicorn

    from .review import ReviewStore, create_app

    corpus = Path(corpus_dir)
    reports_dir = corpus / "scrubbed" if (corpus / "scrubbed").is_dir() else corpus / "reports"
    reports = {r.report_id: r for r in corpus_io.load_reports(reports_dir)}
    sheets = {s.report_id: s for s in corpus_io.load_sheets(corpus / "sheets")}
    tokens = None
    if tokens_path:
        tokens = json.loads(Path(tokens_path).read_text(encoding="utf-8"))
    store = ReviewStore(reports, sheets, audit_path=audit_path,
                        export_dir=export_dir or (corpus / "export"))
    app = create_app(store, tokens=tokens, static_dir=ui_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


@main.command("run")
@click.option("--workdir", type=click.Path(file_okay=False), default=None)
@click.option("--seed", type=int, default=None)
@click.pass_context
@_handle_errors
def run_cmd(ctx, workdir, seed):
    """Execute the whole pipeline from the --config JSON."""
    config_path = ctx.obj.get("config_path")
    if not config_path:
        raise click.UsageError("run needs a --config JSON (pass it before the subcommand)")
    obj = json.loads(Path(config_path).read_text(encoding="utf-8"))
    if seed is not None or ctx.obj.get("seed") is not None:
        obj["seed"] = _seed_of(ctx, seed)
    config = PipelineConfig.from_json_obj(obj, workdir=workdir)
    manifest = run_pipeline(config)
    _echo_json({"manifest": str(manifest)})


if __name__ == "__main__":
    main()
