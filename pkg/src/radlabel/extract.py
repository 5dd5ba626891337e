"""Zero-shot template filling over a chat-completions endpoint.

Builds the instruction prompt, calls the endpoint (or any stand-in client),
parses the returned JSON into a LabelSheet, and enforces the sub-category
consistency rule by checking and repairing the label hierarchy.
"""

from __future__ import annotations

import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import httpx

from .core import (
    ExtraLabel,
    LabelSheet,
    LabelState,
    LabelTemplate,
    MissingLabel,
    RadlabelError,
    ReportDocument,
    get_template,
    normalize_label,
    severity,
    validate_sheet,
)

__all__ = [
    "MalformedJson",
    "BadValue",
    "EndpointUnreachable",
    "AuthFailure",
    "RetriesExhausted",
    "PromptPayload",
    "LlmEndpointConfig",
    "ExtractionResult",
    "build_prompt",
    "parse_llm_response",
    "serialize_sheet",
    "check_hierarchy",
    "repair_hierarchy",
    "extract_labels",
    "extract_corpus",
    "HttpChatClient",
]


class MalformedJson(RadlabelError):
    code = "malformed_json"


class BadValue(RadlabelError):
    code = "bad_value"

    def __init__(self, label: str, raw: object):
        super().__init__(f"label {label!r} has unusable value {raw!r}")
        self.label = label
        self.raw = raw


class EndpointUnreachable(RadlabelError):
    code = "endpoint_unreachable"


class AuthFailure(RadlabelError):
    code = "auth_failure"


class RetriesExhausted(RadlabelError):
    code = "retries_exhausted"

    def __init__(self, report_id: str, attempts: int, last_error: Exception):
        super().__init__(f"{report_id}: no valid sheet after {attempts} attempts: {last_error}")
        self.report_id = report_id
        self.attempts = attempts
        self.last_error = last_error


# Hedging/uncertainty exemplars shown to the model, with German translations
# (the reports are German).
HEDGING_TERMS = (
    ("not clearly delineable", "nicht sicher abgrenzbar"),
    ("most likely", "am ehesten"),
    ("possibly", "möglicherweise"),
    ("cannot be ruled out", "nicht ausgeschlossen"),
    ("suspected", "Verdacht auf"),
)

# Region-appropriate sub-category example quoted in rule 4.
RULE4_EXAMPLES = {
    "clavicle": "Lateral Third Fracture",
    "elbow": "Radial Head Fracture",
    "thumb": "First Metacarpal Bone Fracture",
}

_RULES_TEMPLATE = """1. Mark a finding as true only if it is explicitly confirmed in the report with no uncertainty or hedging terms.
2. Mark a finding as uncertain if the report contains hedging or uncertainty terms like "not clearly delineable" (German: "nicht sicher abgrenzbar"), "most likely" ("am ehesten"), "possibly" ("möglicherweise"), "cannot be ruled out" ("nicht ausgeschlossen"), "suspected" ("Verdacht auf"), "a potential differential diagnosis may be X" ("als DD käme in Frage X" or "DD X") or similar phrases indicating doubt.
3. Mark a finding as false if the report explicitly states the absence of a finding or if the report contains no information related to the specific label.
4. If a specific sub-category finding (e.g., "{rule4_example}") is marked as true or uncertain, ensure that the broader category (e.g., "Fracture [All Locations]") is marked accordingly.
5. Ensure no findings from other anatomic regions are considered when marking the "finding" fields. Each finding must be strictly limited to the anatomic region of interest (e.g., {region}) specified in the template."""


@dataclass(frozen=True)
class PromptPayload:
    """What goes over the wire: instruction text plus decoding parameters."""

    user_text: str
    system_text: str | None = None
    temperature: float = 0.0
    max_tokens: int = 1024


@dataclass(frozen=True)
class LlmEndpointConfig:
    """Connection settings for a chat-completions-compatible endpoint.

    The auth token is never stored here; ``auth_env`` names the environment
    variable that holds it.
    """

    base_url: str
    model_name: str
    auth_env: str | None = None
    timeout_s: float = 60.0
    max_retries: int = 3
    parallelism: int = 4

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "LlmEndpointConfig":
        return cls(
            base_url=obj["base_url"],
            model_name=obj["model_name"],
            auth_env=obj.get("auth_env"),
            timeout_s=float(obj.get("timeout_s", 60.0)),
            max_retries=int(obj.get("max_retries", 3)),
            parallelism=int(obj.get("parallelism", 4)),
        )


@dataclass(frozen=True)
class ExtractionResult:
    report_id: str
    sheet: LabelSheet | None
    failure: str | None
    attempts: int
    raw_responses: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.sheet is not None


def _rule4_example(template: LabelTemplate) -> str:
    example = RULE4_EXAMPLES.get(template.region)
    if example is None and template.hierarchy:
        example = template.hierarchy[0][0]
    return example or (template.labels[0] if template.labels else "")


def build_prompt(template: LabelTemplate, report_text: str) -> PromptPayload:
    """Fill the instruction block with the template JSON and the report text.

    Decoding is pinned to temperature 0 with max_tokens sized to the template
    (16 per label) to keep extraction as deterministic as the endpoint allows.
    """
    rules = _RULES_TEMPLATE.format(rule4_example=_rule4_example(template),
                                   region=template.region)
    user_text = (
        f"Fill out the following template {template.template_json()} in JSON format "
        f"according to the information given in {report_text}. Adhere strictly to the "
        'structure of the template. Only fill out the "finding" fields and do not add '
        "anything else.\n"
        f"{rules}"
    )
    return PromptPayload(user_text=user_text, temperature=0.0,
                         max_tokens=16 * len(template.labels))


_FENCE = re.compile(r"^```[a-zA-Z]*\s*\n(.*)\n```\s*$", re.DOTALL)


def _strip_fences(raw: str) -> str:
    stripped = raw.strip()
    m = _FENCE.match(stripped)
    return m.group(1) if m else stripped


def parse_llm_response(raw: str, template: LabelTemplate, report_id: str) -> LabelSheet:
    """Validate a model response into a LabelSheet.

    The assignment domain must equal the template exactly; nothing is
    defaulted. JSON booleans map directly, "uncertain"/"true"/"false" strings
    are normalized case-insensitively, anything else is a BadValue. All
    errors are retry-eligible extraction failures.
    """
    try:
        obj = json.loads(_strip_fences(raw))
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"{report_id}: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedJson(f"{report_id}: expected a JSON object, got {type(obj).__name__}")

    normalized: dict[str, object] = {normalize_label(k): v for k, v in obj.items()}
    for name in template.labels:
        if name not in normalized:
            raise MissingLabel(name)
    for name in normalized:
        if name not in template.label_set:
            raise ExtraLabel(name)

    assignments: dict[str, LabelState] = {}
    for name in template.labels:
        value = normalized[name]
        if not isinstance(value, dict) or set(value) != {"finding"}:
            raise BadValue(name, value)
        try:
            assignments[name] = LabelState.from_json(value["finding"])
        except ValueError:
            raise BadValue(name, value["finding"]) from None
    return LabelSheet(report_id=report_id, region=template.region,
                      assignments=assignments, provenance="auto")


def serialize_sheet(sheet: LabelSheet) -> str:
    """Render a sheet in the filled-template wire format."""
    body = ",\n".join(
        f'  "{name}": {{"finding": {json.dumps(state.to_json())}}}'
        for name, state in sheet.assignments.items()
    )
    return "{\n" + body + "\n}"


def check_hierarchy(sheet: LabelSheet,
                    template: LabelTemplate | None = None) -> list[tuple[str, str]]:
    """Every (child, parent) edge where the child outranks the parent."""
    template = template or get_template(sheet.region)
    return [
        (child, parent)
        for child, parent in template.hierarchy
        if severity(sheet.assignments[child]) > severity(sheet.assignments[parent])
    ]


def repair_hierarchy(sheet: LabelSheet,
                     template: LabelTemplate | None = None) -> LabelSheet:
    """Raise each parent to the maximum severity among itself and its children.

    Applied in topological order so severity propagates transitively. Never
    lowers a label; labels without a violated descendant are untouched. The
    result's provenance is "repaired" when anything changed.
    """
    template = template or get_template(sheet.region)
    states = dict(sheet.assignments)
    by_severity = {0: LabelState.FALSE, 1: LabelState.UNCERTAIN, 2: LabelState.TRUE}
    for label in template.topological_order():
        for parent in template.parents_of(label):
            if severity(states[label]) > severity(states[parent]):
                states[parent] = by_severity[severity(states[label])]
    if states == dict(sheet.assignments):
        return sheet
    return sheet.with_assignments(states, provenance="repaired")


class ChatClient(Protocol):
    """Anything that can answer a prompt; the HTTP client and all mocks."""

    max_retries: int

    def complete(self, payload: PromptPayload, report_id: str) -> str: ...


class HttpChatClient:
    """POSTs to ``<base_url>/chat/completions`` in the de-facto wire format."""

    def __init__(self, config: LlmEndpointConfig):
        self.config = config
        self.max_retries = config.max_retries
        headers = {}
        if config.auth_env:
            token = os.environ.get(config.auth_env)
            if not token:
                raise AuthFailure(f"environment variable {config.auth_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(base_url=config.base_url, headers=headers,
                                    timeout=config.timeout_s)

    def complete(self, payload: PromptPayload, report_id: str) -> str:
        messages = []
        if payload.system_text:
            messages.append({"role": "system", "content": payload.system_text})
        messages.append({"role": "user", "content": payload.user_text})
        body = {
            "model": self.config.model_name,
            "messages": messages,
            "temperature": payload.temperature,
            "max_tokens": payload.max_tokens,
        }
        try:
            response = self._client.post("/chat/completions", json=body)
        except httpx.HTTPError as exc:
            raise EndpointUnreachable(f"{self.config.base_url}: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthFailure(f"endpoint rejected credentials ({response.status_code})")
        if response.status_code != 200:
            raise EndpointUnreachable(f"endpoint returned {response.status_code}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise MalformedJson(f"{report_id}: unusable completion envelope: {exc}") from exc

    def close(self) -> None:
        self._client.close()


_RETRY_NOTE = (
    "\n\nThe previous response was invalid: {error}. "
    "Return only the corrected JSON template."
)


def extract_labels(report: ReportDocument, template: LabelTemplate,
                   client: ChatClient) -> ExtractionResult:
    """Prompt -> completion -> parse -> hierarchy repair, with retries.

    Parse failures re-prompt with the error appended, up to the client's
    max_retries; endpoint/auth errors propagate immediately. A failed report
    is recorded (never silently defaulted) so it can be excluded downstream.
    """
    base = build_prompt(template, report.text)
    raw_responses: list[str] = []
    last_error: Exception | None = None
    attempts = 0
    for attempt in range(client.max_retries + 1):
        payload = base if attempt == 0 else PromptPayload(
            user_text=base.user_text + _RETRY_NOTE.format(error=last_error),
            system_text=base.system_text,
            temperature=base.temperature,
            max_tokens=base.max_tokens,
        )
        attempts += 1
        raw = client.complete(payload, report.report_id)
        raw_responses.append(raw)
        try:
            sheet = parse_llm_response(raw, template, report.report_id)
        except (MalformedJson, MissingLabel, ExtraLabel, BadValue) as exc:
            last_error = exc
            continue
        validate_sheet(sheet, template)
        sheet = repair_hierarchy(sheet, template)
        return ExtractionResult(report_id=report.report_id, sheet=sheet, failure=None,
                                attempts=attempts, raw_responses=tuple(raw_responses))
    failure = RetriesExhausted(report.report_id, attempts, last_error or RadlabelError("no attempt"))
    return ExtractionResult(report_id=report.report_id, sheet=None, failure=str(failure),
                            attempts=attempts, raw_responses=tuple(raw_responses))


def extract_corpus(reports: Sequence[ReportDocument], template: LabelTemplate,
                   client: ChatClient, parallelism: int = 1) -> list[ExtractionResult]:
    """Extract a corpus with up to ``parallelism`` reports in flight.

    Results come back in corpus order regardless of completion order.
    """
    if parallelism <= 1 or len(reports) <= 1:
        return [extract_labels(r, template, client) for r in reports]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(extract_labels, r, template, client) for r in reports]
        return [f.result() for f in futures]
