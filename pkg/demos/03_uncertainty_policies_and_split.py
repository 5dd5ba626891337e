"""Inclusive/exclusive relabeling and the stratified 64/16/20 partition."""

from radlabel.generate import generate_corpus
from radlabel.relabel import census, census_by_label, reassign_uncertain
from radlabel.split import stratified_split

_, truth = generate_corpus("thumb", n=400, uncertainty_rate=0.12, seed=21)

counts = census(truth)
print("three-state census:", counts.to_json_obj())

inclusive = [reassign_uncertain(s, "inclusive") for s in truth]
exclusive = [reassign_uncertain(s, "exclusive") for s in truth]
pos_inc = sum(sum(s.assignments.values()) for s in inclusive)
pos_exc = sum(sum(s.assignments.values()) for s in exclusive)
print(f"inclusive positives: {pos_inc}  (= true {counts.true_count} + "
      f"uncertain {counts.uncertain_count})")
print(f"exclusive positives: {pos_exc}  (= true {counts.true_count})")

assignment = stratified_split(exclusive, fractions=(0.64, 0.16, 0.20), seed=21)
print("\nsplit sizes:", assignment.sizes())

print("\nper-label positive balance (labels with >= 5 positives):")
by_label = census_by_label(truth)
subset_of = assignment.assignment
for label, label_counts in by_label.items():
    total = sum(s.assignments[label] for s in exclusive)
    if total < 5:
        continue
    row = {name: sum(s.assignments[label] for s in exclusive
                     if subset_of[s.report_id] == name)
           for name in ("train", "validation", "test")}
    print(f"  {label[:48]:<48} total={total:>3} -> {row}")
