"""
Edit distances and expert edit labels
=====================================

Token-level Levenshtein distance, insert/delete alignments, and the
delete / placeholder / insert labels that supervise the edit model.

"""

from sgmrepair import align, apply, expert_labels, levenshtein, normalized_distance, tokenize

before = tokenize("if ( i < n ) return i ;")
after = tokenize("if ( i > n ) return i + 1 ;")

print("levenshtein:", levenshtein(before, after))
print("normalized :", round(normalized_distance(before, after), 3))

# an alignment lists deletions (positions in `before`) and insertions
# (gaps in the kept sequence); applying it recovers `after`
script = align(before, after)
for op in script:
    print(op)
assert apply(script, before) == after

# expert labels split the same information into three decisions
labels = expert_labels(before, after)
print("delete mask :", labels.del_mask)
print("placeholders:", labels.plh_counts)
print("insert      :", labels.ins_tokens)
print(" ".join(labels.with_placeholders(before, "[PLH]")))
print(" ".join(labels.reconstruct(before)))
