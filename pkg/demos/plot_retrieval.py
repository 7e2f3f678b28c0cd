"""
Retrieving similar past fixes
=============================

Index a small corpus of bug fixes and look up the nearest neighbours of a
new buggy line.

"""

from sgmrepair import retrieve, tfidf_index
from sgmrepair.synthetic import synthetic_corpus

# a few hundred seeded toy fixes stand in for a real patch database
database = synthetic_corpus(300, seed=0)
print(database[0].buggy_only, "->", database[0].fixed_code)

# the index embeds each record's buggy line and stores its fixed code
index = tfidf_index(database)
embedder = index.embedder()
print("terms in the TF-IDF vocabulary:", embedder.dim)

query = "if ( count < limit ) return total ;"
for hit in retrieve(query, index, k=3, embedder=embedder):
    print(f"{hit.distance:.3f}  {hit.record_id}  {' '.join(hit.patch)}")

# querying with an indexed line gives that record back at distance 0
same = retrieve(database[5].buggy_only, index, k=1, embedder=embedder)[0]
print(same.record_id, same.distance)

# several fields can be joined into one query with the <s> separator
multi = tfidf_index(database, modalities=["buggy_only", "commit_msg"])
q = f"{database[5].buggy_only} <s> {database[5].commit_msg}"
print(retrieve(q, multi, k=1, embedder=multi.embedder())[0].record_id)
