"""
Comparing pipeline variants
===========================

Run search-only, search+generate and search+generate+modify variants over
a toy test set, then compare how close each query modality gets to the
correct fix.

"""

import json

from sgmrepair.corpus import Dataset
from sgmrepair.pipeline import PipelineConfig, evaluate, write_report
from sgmrepair.synthetic import synthetic_corpus

corpus = synthetic_corpus(400, seed=3)
database = Dataset(corpus.records[:300])
test_set = Dataset(corpus.records[300:], "test")

# the modify stage here uses the expert policy, an upper bound on what a
# trained model could do; swap in modify_policy="model" plus a checkpoint
variants = [
    PipelineConfig(name="search", generate=False, modify=False),
    PipelineConfig(name="search+generate", generator="retrieval_copy", modify=False),
    PipelineConfig(name="search+generate+modify", generator="retrieval_copy",
                   modify_policy="oracle"),
]
report = evaluate(test_set, variants, baseline="search", database=database)

for name, res in report.variants.items():
    print(f"{name:24s} top1 {res.top1:.2f}  top5 {res.top5:.2f}")
print(json.dumps(report.improvements, indent=2))

# distances from retrieved patch to target, per query modality
for sample, values in sorted(report.distance_samples.items()):
    print(f"{sample:16s} mean {sum(values) / len(values):.3f}")
for t in report.tests[:4]:
    print(t["a"], "vs", t["b"], "p =", t["p_value"], "W1 =", round(t["wasserstein"], 4))

paths = write_report(report, "report")
print({k: str(v) for k, v in paths.items()})
