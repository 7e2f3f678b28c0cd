"""Seeded toy bug-fix corpus for smoke tests, demos and acceptance runs.

Every buggy line contains exactly one binary operator.  The fix swaps that
operator through a fixed permutation and inserts one fixed token right after
the first token of the line.  Both choices depend only on the rule seed, so a
model can learn the mapping from examples.
"""

from __future__ import annotations

import random

from .corpus import Dataset, PatchRecord
from .tokenize import detokenize, tokenize

OPERATORS = ("<", ">", "+", "-", "*", "/", "%", "&", "|", "^")
OPERATOR_NAMES = {
    "<": "comparison", ">": "comparison", "+": "addition", "-": "subtraction",
    "*": "multiplication", "/": "division", "%": "remainder", "&": "mask",
    "|": "flag union", "^": "toggle",
}
INSERT_CHOICES = ("final", "synchronized", "volatile", "strictfp")
NAMES = ("count", "size", "index", "total", "left", "right", "offset", "limit",
         "value", "step", "width", "height", "depth", "score", "delta", "start")
METHODS = ("update", "compute", "resolve", "merge", "scan", "apply", "check", "build")
TYPES = ("int", "long", "short")

TEMPLATES = (
    "if ( {a} {op} {b} ) return {c} ;",
    "{a} = {b} {op} {c} ;",
    "return {a} {op} {b} ;",
    "{t} {a} = {b} {op} {c} ;",
    "while ( {a} {op} {b} ) {c} = {d} ;",
    "{a} . {m} ( {b} {op} {c} ) ;",
)


def fix_rule(seed: int = 0):
    """Operator permutation without fixed points, and the inserted token."""
    rng = random.Random(f"sgm-synthetic-rule-{seed}")
    ops = list(OPERATORS)
    while True:
        perm = ops[:]
        rng.shuffle(perm)
        if all(a != b for a, b in zip(ops, perm)):
            break
    return dict(zip(ops, perm)), rng.choice(INSERT_CHOICES)


def apply_rule(tokens, swap, inserted):
    out = [swap.get(t, t) for t in tokens]
    return out[:1] + [inserted] + out[1:]


def _operand(rng):
    return rng.choice(NAMES) if rng.random() < 0.75 else str(rng.randrange(10))


def synthetic_record(rng: random.Random, rid: str, swap, inserted) -> PatchRecord:
    op = rng.choice(OPERATORS)
    fields = {k: _operand(rng) for k in "abcd"}
    fields["a"] = rng.choice(NAMES)
    fields.update(op=op, t=rng.choice(TYPES), m=rng.choice(METHODS))
    line = rng.choice(TEMPLATES).format(**fields)
    tokens = tokenize(line)
    method = rng.choice(METHODS) + rng.choice(NAMES).capitalize()
    p1, p2, local = rng.sample(NAMES, 3)
    prev_code = "\n".join([
        f"{rng.choice(TYPES)} {method} ( int {p1} , int {p2} ) {{",
        f"  int {local} = {p1} ;",
        f"  {line}",
        f"  return {local} ;",
        "}",
    ])
    return PatchRecord(
        id=rid,
        buggy_only=line,
        prev_code=prev_code,
        commit_msg=f"fix {OPERATOR_NAMES[op]} in {method}",
        fixed_code=detokenize(apply_rule(tokens, swap, inserted)),
    )


def synthetic_corpus(n: int, seed: int = 0, rule_seed: int = 0) -> Dataset:
    swap, inserted = fix_rule(rule_seed)
    rng = random.Random(seed)
    return Dataset([synthetic_record(rng, f"syn-{i:05d}", swap, inserted) for i in range(n)])
