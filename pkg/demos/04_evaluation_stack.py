"""The statistics engine on a synthetic two-model comparison.

ROC/PR curves, Youden operating points frozen on validation, bootstrap
intervals, paired DeLong with Benjamini-Hochberg across labels.
"""

import numpy as np

from radlabel.stats import (
    auc,
    benjamini_hochberg,
    bootstrap_ci,
    confusion_metrics,
    delong_paired,
    pr_curve,
    roc_curve,
    youden_threshold,
)

rng = np.random.default_rng(5)
n = 400
labels = (rng.random(n) < 0.3).astype(int)
labels[:2] = [1, 0]


def scorer(separation: float) -> np.ndarray:
    logits = separation * (2 * labels - 1) + rng.normal(0, 1, n)
    return 1 / (1 + np.exp(-logits))


model_a = scorer(1.8)
model_b = scorer(1.2)

print("=== per-model summaries ===")
for name, scores in (("model_a", model_a), ("model_b", model_b)):
    curve = roc_curve(scores, labels)
    pr = pr_curve(scores, labels)
    ci = bootstrap_ci(auc, scores, labels, replicates=1000, seed=11)
    print(f"{name}: AUC={auc(scores, labels):.3f} "
          f"(95% CI {ci.lower:.3f}-{ci.upper:.3f}), "
          f"AP={pr.average_precision:.3f}, ROC points={len(curve.points)}")

# operating point from a held-out validation sample
val_labels = (rng.random(200) < 0.3).astype(int)
val_labels[:2] = [1, 0]
val_scores = 1 / (1 + np.exp(-(1.8 * (2 * val_labels - 1) + rng.normal(0, 1, 200))))
threshold, j = youden_threshold(val_scores, val_labels)
accuracy, sensitivity, specificity = confusion_metrics(model_a, labels, threshold)
print(f"\nYouden on validation: threshold={threshold:.3f} (J={j:.3f})")
print(f"frozen on test: accuracy={accuracy:.3f}, sensitivity={sensitivity:.3f}, "
      f"specificity={specificity:.3f}")

print("\n=== paired DeLong, model_a vs model_b ===")
result = delong_paired(model_a, model_b, labels)
print(f"AUC {result.auc_a:.3f} vs {result.auc_b:.3f}: z={result.z:.3f}, "
      f"p={result.p_two_sided:.4f}")

raw = [result.p_two_sided, 0.2, 0.04, 0.8]
adjusted = benjamini_hochberg(raw)
print("\nBH over a label family:")
for p, q in zip(raw, adjusted):
    flag = "significant" if q < 0.05 else "ns"
    print(f"  p={p:.4f} -> q={q:.4f}  [{flag}]")
