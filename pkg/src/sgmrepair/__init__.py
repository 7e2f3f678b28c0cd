"""Retrieval-augmented code patching: search prior patches, generate
candidates, then refine them with a Levenshtein Transformer edit model."""

from .corpus import Dataset, PatchRecord, load_jsonl, save_jsonl, split
from .editalg import (EditScript, ExpertLabels, align, apply, expert_labels, levenshtein,
                      min_topk_distance, normalized_distance)
from .search import (PatchIndex, RetrievedPatch, build_tfidf, cosine_distance, load_index,
                     retrieve, save_index, tfidf_index)
from .tokenize import Vocabulary, build_vocab, decode, encode, identifiers, tokenize

__version__ = "0.1.0"
