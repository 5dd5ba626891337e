"""One seeded end-to-end run with the echo mock, plus the manifest."""

import json
import tempfile
from pathlib import Path

from radlabel.mock_llm import MockLlmSpec
from radlabel.pipeline import PipelineConfig, run_pipeline

workdir = Path(tempfile.mkdtemp(prefix="pipeline-demo-")) / "out"
config = PipelineConfig(
    region="clavicle",
    workdir=workdir,
    n_reports=80,
    mock=MockLlmSpec(mode="flip_noise", rate=0.012, seed=1),
    seed=20240801,
    uncertainty_rate=0.08,
    replicates=200,
)

manifest_path = run_pipeline(config)
manifest = json.loads(manifest_path.read_text())

print("stages:", " -> ".join(manifest["stages"]))
print("notes:", manifest["notes"])
print(f"{len(manifest['files'])} files written under {workdir}")

quality = json.loads((workdir / "quality.json").read_text())
print(f"\nextraction quality: label accuracy {quality['label_accuracy']:.4f}, "
      f"report accuracy {quality['report_accuracy']:.4f}")

report = json.loads((workdir / "eval_report.json").read_text())
if report["macro"]:
    macro = report["macro"]
    print(f"macro AUC {macro['mean_auc']:.3f} "
          f"(range {macro['min_auc']:.3f}-{macro['max_auc']:.3f}) "
          f"over {len(macro['labels'])} labels")
else:
    print("macro AUC: no label met the minimum-positives filter at this corpus size")
