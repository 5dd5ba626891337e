"""Zero-shot template filling against the deterministic mock endpoint.

Shows the prompt the model would receive, a parsed/validated sheet, and
what hierarchy repair does to an inconsistent answer.
"""

from radlabel.core import LabelState, get_template
from radlabel.extract import (
    build_prompt,
    check_hierarchy,
    extract_corpus,
    parse_llm_response,
    repair_hierarchy,
    serialize_sheet,
)
from radlabel.generate import generate_corpus
from radlabel.mock_llm import EchoTruthClient, FlipNoiseClient

template = get_template("elbow")
reports, truth = generate_corpus("elbow", n=6, uncertainty_rate=0.2, seed=13)

payload = build_prompt(template, reports[0].text)
print("=== prompt (first 600 chars) ===")
print(payload.user_text[:600], "...")
print(f"\ndecoding: temperature={payload.temperature}, max_tokens={payload.max_tokens}")

truth_map = {s.report_id: s for s in truth}
results = extract_corpus(reports, template, EchoTruthClient(truth_map), parallelism=3)
print(f"\necho mock: {sum(r.ok for r in results)}/{len(results)} sheets extracted, "
      f"attempts per report: {[r.attempts for r in results]}")

# an inconsistent answer: child asserted, broader category forgotten
broken = truth[0].with_assignments({
    **truth[0].assignments,
    "Radial Head Fracture": LabelState.TRUE,
    "Radius Fracture": LabelState.FALSE,
    "Fracture (All Locations)": LabelState.FALSE,
})
sheet = parse_llm_response(serialize_sheet(broken), template, broken.report_id)
print("\nviolations before repair:", check_hierarchy(sheet, template))
repaired = repair_hierarchy(sheet, template)
print("violations after repair: ", check_hierarchy(repaired, template))
print("provenance:", repaired.provenance)

noisy = extract_corpus(reports, template, FlipNoiseClient(truth_map, rate=0.05, seed=3),
                       parallelism=3)
flips = sum(
    a.sheet.assignments[l] is not truth_map[a.report_id].assignments[l]
    for a in noisy for l in template.labels
)
print(f"\nflip-noise mock at 5%: {flips} of {len(noisy) * len(template.labels)} cells differ")
