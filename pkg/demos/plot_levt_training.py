"""
Training the edit model on toy fixes
====================================

Fit a small Levenshtein Transformer to a synthetic fix rule and watch it
rewrite unseen buggy lines.  Takes a minute or two on one core.

"""

from sgmrepair import levt
from sgmrepair.corpus import split
from sgmrepair.pipeline import levt_examples
from sgmrepair.synthetic import fix_rule, synthetic_corpus
from sgmrepair.tokenize import build_vocab

swap, inserted = fix_rule(0)
print("operator swap:", swap, "| inserted token:", inserted)

corpus = synthetic_corpus(1000, seed=1)
train_set, val_set, test_set = split(corpus, (0.8, 0.1, 0.1), seed=1)

# the encoder sees the buggy line and its method, separated by <s>
train_x, val_x, test_x = (levt_examples(d) for d in (train_set, val_set, test_set))
vocab = build_vocab(e.source + e.target + e.context for e in train_x)

model = levt.LevTModel(levt.LevTConfig(), vocab)
config = levt.TrainConfig(max_epochs=12)
model, history = levt.train(model, train_x, val_x, config,
                            on_epoch=lambda r: print("epoch {epoch:2d}  loss {train_loss:.3f}  "
                                                     "val exact match {val_exact_match:.3f}".format(**r)))
print("held-out exact match:", levt.exact_match_rate(model, test_x))

# one greedy pass, step by step
ex = test_x[0]
out, trace = levt.refine(model, ex.source, ex.context)
step = trace.steps[0]
print("input      :", " ".join(step.input))
print("after del  :", " ".join(step.after_delete))
print("with [PLH] :", " ".join(step.with_plh))
print("output     :", " ".join(step.output))
print("target     :", " ".join(ex.target))

levt.save_checkpoint(model, "toy.levt")
