"""A small Levenshtein Transformer for editing token sequences.

The encoder reads the multi-modal context, the decoder reads the sequence
being edited, and three classifiers sit on the decoder states:

* deletion, per token: keep or delete;
* placeholder, per adjacent pair: how many tokens to insert between them;
* insertion, per placeholder: which vocabulary token fills it.

Refinement applies the three in that order.  Decisions are expressed
through a small policy protocol (``delete`` / ``placeholders`` / ``insert``
over surface tokens) so the trained network and the expert oracle can be
swapped freely.
"""

from __future__ import annotations

import copy
import json
import logging
import math
import random
import struct
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .editalg import expert_labels
from .errors import CheckpointError, TrainingError
from .tokenize import BOS, EOS, PAD, PLH, PLH_TOKEN, SEP, UNK, Vocabulary, encode

log = logging.getLogger(__name__)

IGNORE = -100
CHECKPOINT_MAGIC = b"SGMLEVT1"


@dataclass
class LevTConfig:
    d_model: int = 64
    n_heads: int = 4
    n_enc_layers: int = 2
    n_dec_layers: int = 2
    ffn_dim: int = 128
    max_plh: int = 8
    max_seq_len: int = 128
    dropout: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        if self.max_plh < 1:
            raise ValueError("max_plh must be >= 1")
        if self.max_seq_len < 3:
            raise ValueError("max_seq_len must leave room for sentinels")


def sinusoidal_table(length: int, dim: int) -> torch.Tensor:
    pos = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    rate = torch.exp(torch.arange(0, dim, 2, dtype=torch.float64) * (-math.log(10000.0) / dim))
    table = torch.zeros(length, dim, dtype=torch.float64)
    table[:, 0::2] = torch.sin(pos * rate)
    table[:, 1::2] = torch.cos(pos * rate)[:, : dim // 2]
    return table


class Attention(nn.Module):
    def __init__(self, d_model, n_heads, dropout):
        super().__init__()
        self.n_heads = n_heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, mem, mem_pad):
        b, t, d = x.shape
        s = mem.shape[1]
        h = self.n_heads

        def split(y, n):
            return y.view(b, n, h, d // h).transpose(1, 2)

        q, k, v = split(self.q(x), t), split(self.k(mem), s), split(self.v(mem), s)
        scores = q @ k.transpose(-1, -2) / math.sqrt(d // h)
        if mem_pad is not None:
            scores = scores.masked_fill(mem_pad[:, None, None, :], -1e9)
        attn = self.drop(torch.softmax(scores, dim=-1))
        return self.out((attn @ v).transpose(1, 2).reshape(b, t, d))


class FeedForward(nn.Module):
    def __init__(self, d_model, ffn_dim, dropout):
        super().__init__()
        self.up = nn.Linear(d_model, ffn_dim)
        self.down = nn.Linear(ffn_dim, d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x):
        return self.down(self.drop(F.gelu(self.up(x))))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: LevTConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.d_model)
        self.attn = Attention(cfg.d_model, cfg.n_heads, cfg.dropout)
        self.norm2 = nn.LayerNorm(cfg.d_model)
        self.ffn = FeedForward(cfg.d_model, cfg.ffn_dim, cfg.dropout)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, pad):
        y = self.norm1(x)
        x = x + self.drop(self.attn(y, y, pad))
        return x + self.drop(self.ffn(self.norm2(x)))


class DecoderLayer(nn.Module):
    """Pre-norm block: bidirectional self-attention, cross-attention, FFN."""

    def __init__(self, cfg: LevTConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.d_model)
        self.self_attn = Attention(cfg.d_model, cfg.n_heads, cfg.dropout)
        self.norm2 = nn.LayerNorm(cfg.d_model)
        self.cross_attn = Attention(cfg.d_model, cfg.n_heads, cfg.dropout)
        self.norm3 = nn.LayerNorm(cfg.d_model)
        self.ffn = FeedForward(cfg.d_model, cfg.ffn_dim, cfg.dropout)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, pad, mem, mem_pad):
        y = self.norm1(x)
        x = x + self.drop(self.self_attn(y, y, pad))
        x = x + self.drop(self.cross_attn(self.norm2(x), mem, mem_pad))
        return x + self.drop(self.ffn(self.norm3(x)))


class LevTModel(nn.Module):
    def __init__(self, config: LevTConfig, vocab: Vocabulary):
        super().__init__()
        self.config = config
        self.vocab = vocab
        torch.manual_seed(config.seed)
        d = config.d_model
        self.embed = nn.Embedding(len(vocab), d)
        nn.init.normal_(self.embed.weight, std=d ** -0.5)
        self.register_buffer("positions", sinusoidal_table(config.max_seq_len, d).float(),
                             persistent=False)
        self.encoder = nn.ModuleList(EncoderLayer(config) for _ in range(config.n_enc_layers))
        self.enc_norm = nn.LayerNorm(d)
        self.decoder = nn.ModuleList(DecoderLayer(config) for _ in range(config.n_dec_layers))
        self.dec_norm = nn.LayerNorm(d)
        self.drop = nn.Dropout(config.dropout)
        self.w_del = nn.Linear(d, 2)
        self.w_plh = nn.Linear(2 * d, config.max_plh + 1)
        self.w_ins = nn.Linear(d, len(vocab))

    def _embed(self, ids):
        x = self.embed(ids) * math.sqrt(self.config.d_model)
        return self.drop(x + self.positions[: ids.shape[1]].to(x.dtype))

    def encode(self, src, src_pad=None):
        if src_pad is None:
            src_pad = src.eq(PAD) & ~src.eq(PAD).all(dim=1, keepdim=True)
        x = self._embed(src)
        for layer in self.encoder:
            x = layer(x, src_pad)
        return self.enc_norm(x), src_pad

    def decode(self, tgt, memory, mem_pad):
        pad = tgt.eq(PAD)
        x = self._embed(tgt)
        for layer in self.decoder:
            x = layer(x, pad, memory, mem_pad)
        return self.dec_norm(x)

    def del_logits(self, z):
        return self.w_del(z)

    def plh_logits(self, z):
        return self.w_plh(torch.cat([z[:, :-1], z[:, 1:]], dim=-1))

    def ins_logits(self, z):
        return self.w_ins(z)


# functional surface --------------------------------------------------------------

def _batched(model, z):
    z = torch.as_tensor(z, dtype=model.w_del.weight.dtype)
    return (z.unsqueeze(0), True) if z.dim() == 2 else (z, False)


def encode_context(model: LevTModel, input_ids: Sequence[int]):
    """Hidden states ``(len, d_model)`` for one id sequence; inference mode.

    Inputs longer than ``max_seq_len`` are cut; the second return value says
    whether that happened.
    """
    ids = list(input_ids)[: model.config.max_seq_len]
    truncated = len(ids) < len(input_ids)
    was_training = model.training
    model.eval()
    with torch.no_grad():
        h, _ = model.encode(torch.tensor([ids], dtype=torch.long))
    model.train(was_training)
    return h[0], truncated


def head_del(model: LevTModel, z) -> torch.Tensor:
    z, single = _batched(model, z)
    probs = torch.softmax(model.del_logits(z), dim=-1)
    return probs[0] if single else probs


def head_plh(model: LevTModel, z) -> torch.Tensor:
    z, single = _batched(model, z)
    probs = torch.softmax(model.plh_logits(z), dim=-1)
    return probs[0] if single else probs


def head_ins(model: LevTModel, z, plh_mask=None) -> torch.Tensor:
    """Insertion distributions for the placeholder rows of ``z``.

    With ``plh_mask`` the rows are selected from a full decoder state
    sequence; without it every row of ``z`` is treated as a placeholder.
    """
    z = torch.as_tensor(z, dtype=model.w_ins.weight.dtype)
    if plh_mask is not None:
        z = z[torch.as_tensor(plh_mask, dtype=torch.bool)]
    if z.shape[0] == 0:
        return torch.zeros(0, len(model.vocab), dtype=z.dtype)
    return torch.softmax(model.ins_logits(z), dim=-1)


# policies --------------------------------------------------------------------

class OraclePolicy:
    """Expert policy steering any sequence towards a fixed target."""

    def __init__(self, target: Sequence[str]):
        self.target = list(target)

    def delete(self, tokens, context):
        return [bool(d) for d in expert_labels(tokens, self.target).del_mask]

    def placeholders(self, tokens, context):
        return list(expert_labels(tokens, self.target).plh_counts)

    def insert(self, tokens, context):
        kept = [t for t in tokens if t != PLH_TOKEN]
        labels = expert_labels(kept, self.target)
        fills = iter(labels.ins_tokens)
        return [next(fills, PLH_TOKEN) for t in tokens if t == PLH_TOKEN]


class IdentityPolicy:
    def delete(self, tokens, context):
        return [False] * len(tokens)

    def placeholders(self, tokens, context):
        return [0] * (len(tokens) + 1)

    def insert(self, tokens, context):
        return []


_NEVER_INSERT = (PAD, UNK, BOS, EOS, SEP, PLH)


class LevTPolicy:
    """Greedy decisions read off a trained model."""

    def __init__(self, model: LevTModel):
        self.model = model
        self.vocab = model.vocab
        self._ctx_key = None
        self._memory = None
        self.context_truncated = False

    def _memory_for(self, context):
        key = tuple(context)
        if key != self._ctx_key:
            ids = encode(context, self.vocab, add_sentinels=True)
            limit = self.model.config.max_seq_len
            self.context_truncated = len(ids) > limit
            ids = ids[: limit - 1] + [EOS] if len(ids) > limit else ids
            with torch.no_grad():
                self._memory = self.model.encode(torch.tensor([ids], dtype=torch.long))
            self._ctx_key = key
        return self._memory

    def _states(self, tokens, context):
        self.model.eval()
        memory, mem_pad = self._memory_for(context)
        ids = torch.tensor([encode(tokens, self.vocab, add_sentinels=True)], dtype=torch.long)
        with torch.no_grad():
            return self.model.decode(ids, memory, mem_pad)

    def delete(self, tokens, context):
        if not tokens:
            return []
        with torch.no_grad():
            logits = self.model.del_logits(self._states(tokens, context))[0, 1:-1]
        return [bool(v) for v in logits.argmax(dim=-1).tolist()]

    def placeholders(self, tokens, context):
        with torch.no_grad():
            logits = self.model.plh_logits(self._states(tokens, context))[0]
        return logits.argmax(dim=-1).tolist()

    def insert(self, tokens, context):
        if PLH_TOKEN not in tokens:
            return []
        ids = [PLH if t == PLH_TOKEN else i
               for t, i in zip(tokens, encode(tokens, self.vocab))]
        self.model.eval()
        memory, mem_pad = self._memory_for(context)
        with torch.no_grad():
            z = self.model.decode(torch.tensor([[BOS] + ids + [EOS]]), memory, mem_pad)[0, 1:-1]
            logits = self.model.ins_logits(z[torch.tensor(ids).eq(PLH)])
            logits[:, list(_NEVER_INSERT)] = -torch.inf
        return [self.vocab.token_of[i] for i in logits.argmax(dim=-1).tolist()]


def as_policy(model_or_policy):
    if isinstance(model_or_policy, LevTModel):
        return LevTPolicy(model_or_policy)
    return model_or_policy


# refinement ------------------------------------------------------------------

@dataclass
class RefinementStep:
    input: list[str]
    deleted: list[bool]
    after_delete: list[str]
    plh_counts: list[int]
    with_plh: list[str]
    inserted: list[str]
    output: list[str]


@dataclass
class RefinementTrace:
    steps: list[RefinementStep] = field(default_factory=list)
    context_truncated: bool = False

    def __len__(self):
        return len(self.steps)


def refine(model, v_gen: Sequence[str], context: Sequence[str], iterations: int = 1,
           max_seq_len: int | None = None):
    """Greedy delete -> placeholder -> insert passes over ``v_gen``.

    ``model`` is a :class:`LevTModel` or any object with the policy methods.
    Stops early once a pass leaves the sequence unchanged.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    policy = as_policy(model)
    if max_seq_len is None:
        cfg = getattr(model, "config", None) or getattr(getattr(model, "model", None), "config", None)
        max_seq_len = getattr(cfg, "max_seq_len", None)
    budget = None if max_seq_len is None else max_seq_len - 2
    tokens = list(v_gen)
    if budget is not None:
        tokens = tokens[:budget]
    trace = RefinementTrace()
    for _ in range(iterations):
        deleted = [bool(d) for d in policy.delete(tokens, context)]
        kept = [t for t, d in zip(tokens, deleted) if not d]
        counts = [max(0, int(c)) for c in policy.placeholders(kept, context)]
        if budget is not None:
            excess = len(kept) + sum(counts) - budget
            for g in range(len(counts) - 1, -1, -1):
                if excess <= 0:
                    break
                cut = min(excess, counts[g])
                counts[g] -= cut
                excess -= cut
        with_plh = []
        for g, c in enumerate(counts):
            with_plh.extend([PLH_TOKEN] * c)
            if g < len(kept):
                with_plh.append(kept[g])
        fills = list(policy.insert(with_plh, context)) if sum(counts) else []
        it = iter(fills)
        out = [next(it) if t == PLH_TOKEN else t for t in with_plh]
        trace.steps.append(RefinementStep(tokens, deleted, kept, counts, with_plh, fills, out))
        if out == tokens:
            break
        tokens = out
    trace.context_truncated = bool(getattr(policy, "context_truncated", False))
    return tokens, trace


# training --------------------------------------------------------------------

@dataclass
class LevTExample:
    source: list[str]
    target: list[str]
    context: list[str]
    record_id: str = ""


def _pad(rows, value=PAD):
    width = max(len(r) for r in rows)
    return torch.tensor([r + [value] * (width - len(r)) for r in rows], dtype=torch.long)


def _clip(seq, limit):
    return list(seq)[: limit - 2]


def make_targets(vocab: Vocabulary, roll_in, y_star, max_plh, max_seq_len):
    """Decoder inputs and labels for the three heads on one example."""
    y_hat = _clip(roll_in, max_seq_len)
    y_star = _clip(y_star, max_seq_len)
    labels = expert_labels(y_hat, y_star)
    del_in = encode(y_hat, vocab, add_sentinels=True)
    del_tgt = [IGNORE] + list(labels.del_mask) + [IGNORE]
    kept = labels.kept(y_hat)
    plh_in = encode(kept, vocab, add_sentinels=True)
    plh_tgt = [min(c, max_plh) for c in labels.plh_counts]
    ins_in, ins_tgt = [BOS], [IGNORE]
    fills = iter(labels.ins_tokens)
    for g, count in enumerate(labels.plh_counts):
        gap_tokens = [next(fills) for _ in range(count)]
        for tok in gap_tokens[:max_plh]:
            ins_in.append(PLH)
            ins_tgt.append(vocab.id_of.get(tok, UNK))
        if g < len(kept):
            ins_in.append(vocab.id_of.get(kept[g], UNK))
            ins_tgt.append(IGNORE)
    ins_in.append(EOS)
    ins_tgt.append(IGNORE)
    return del_in, del_tgt, plh_in, plh_tgt, ins_in, ins_tgt


def loss_terms(model: LevTModel, batch) -> dict[str, torch.Tensor]:
    """Cross-entropy of each head against expert labels, batch-averaged.

    ``batch`` holds ``(y_roll_in, y_star, context)`` token-list triples.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    cfg, vocab = model.config, model.vocab
    rows = [make_targets(vocab, r, t, cfg.max_plh, cfg.max_seq_len) for r, t, _ in batch]
    ctx = []
    for _, _, c in batch:
        ids = encode(c, vocab, add_sentinels=True)
        ctx.append(ids[: cfg.max_seq_len - 1] + [EOS] if len(ids) > cfg.max_seq_len else ids)
    memory, mem_pad = model.encode(_pad(ctx))

    def head_loss(col_in, col_tgt, head):
        z = model.decode(_pad([r[col_in] for r in rows]), memory, mem_pad)
        logits = head(z)
        width = logits.shape[1]
        tgt = torch.tensor([r[col_tgt] + [IGNORE] * (width - len(r[col_tgt])) for r in rows],
                           dtype=torch.long)
        valid = tgt.ne(IGNORE)
        if not valid.any():
            return logits.sum() * 0.0
        return F.cross_entropy(logits[valid], tgt[valid])

    return {
        "del": head_loss(0, 1, model.del_logits),
        "plh": head_loss(2, 3, model.plh_logits),
        "ins": head_loss(4, 5, model.ins_logits),
    }


def loss(model: LevTModel, batch) -> torch.Tensor:
    terms = loss_terms(model, batch)
    return terms["del"] + terms["plh"] + terms["ins"]


def roll_in(y_star: Sequence[str], mode: str = "drop", noise_p: float = 0.3, seed: int = 0,
            model=None, context: Sequence[str] = ()) -> list[str]:
    """Noised decoder input built from the target.

    ``drop`` deletes each token independently with probability ``noise_p``;
    ``model`` additionally applies the model's own greedy deletions.
    """
    if not 0.0 <= noise_p <= 1.0:
        raise ValueError("noise_p must be in [0, 1]")
    rng = random.Random(seed)
    noised = [t for t in y_star if rng.random() >= noise_p]
    if mode == "drop":
        return noised
    if mode == "model":
        if model is None:
            raise ValueError("model roll-in needs a model")
        policy = as_policy(model)
        was_training = getattr(model, "training", False)
        drops = policy.delete(noised, context)
        if isinstance(model, nn.Module):
            model.train(was_training)
        return [t for t, d in zip(noised, drops) if not d]
    raise ValueError(f"unknown roll-in mode {mode!r}")


@dataclass
class TrainConfig:
    lr: float = 3e-4
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 5
    seed: int = 0
    mix_prob: float = 0.5
    noise_p: float = 0.3
    refine_iterations: int = 1
    grad_clip: float = 1.0

    # rate for fine-tuning pretrained models; too slow from scratch
    FINETUNE_LR = 5e-5


@dataclass
class TrainHistory:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_exact_match: float = -1.0
    stopped_early: bool = False

    @property
    def losses(self):
        return [e["train_loss"] for e in self.epochs]


def exact_match_rate(model, examples: Sequence[LevTExample], iterations: int = 1) -> float:
    if not examples:
        return 0.0
    policy = as_policy(model)
    hits = 0
    for ex in examples:
        out, _ = refine(policy, ex.source, ex.context, iterations,
                        max_seq_len=model.config.max_seq_len)
        hits += out == list(ex.target)
    return hits / len(examples)


def train(model: LevTModel, train_set: Sequence[LevTExample], val_set: Sequence[LevTExample] = (),
          config: TrainConfig = TrainConfig(), on_epoch=None):
    """Imitation training against expert labels with early stopping.

    Each example contributes its generator output as a roll-in, plus one
    noised copy of the target: with probability ``mix_prob`` random token
    drops, otherwise random drops followed by the model's own deletions.
    Validation exact match decides early stopping and which weights are kept.
    """
    if not train_set:
        raise ValueError("training set must be nonempty")
    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)
    opt = torch.optim.Adam(model.parameters(), lr=config.lr)
    history = TrainHistory()
    best_state = copy.deepcopy(model.state_dict())
    stale = 0
    step = 0
    val_set = list(val_set) or list(train_set)
    order = list(range(len(train_set)))
    for epoch in range(1, config.max_epochs + 1):
        rng.shuffle(order)
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            chunk = [train_set[i] for i in order[start:start + config.batch_size]]
            batch = []
            model.eval()
            for ex in chunk:
                batch.append((ex.source, ex.target, ex.context))
                mode = "drop" if rng.random() < config.mix_prob else "model"
                batch.append((roll_in(ex.target, mode, config.noise_p, rng.randrange(2**31),
                                      model=model if mode == "model" else None,
                                      context=ex.context),
                              ex.target, ex.context))
            model.train()
            value = loss(model, batch)
            step += 1
            if not torch.isfinite(value):
                raise TrainingError("loss is not finite", step)
            opt.zero_grad()
            value.backward()
            if config.grad_clip:
                nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            opt.step()
            total += value.item() * len(chunk)
            count += len(chunk)
        model.eval()
        em = exact_match_rate(model, val_set, config.refine_iterations)
        record = {"epoch": epoch, "train_loss": total / count, "val_exact_match": em}
        history.epochs.append(record)
        log.info("epoch %d loss %.4f val_em %.4f", epoch, record["train_loss"], em)
        if on_epoch is not None:
            on_epoch(record)
        if em > history.best_exact_match:
            history.best_exact_match = em
            history.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                history.stopped_early = True
                break
    model.load_state_dict(best_state)
    model.eval()
    return model, history


# checkpoints -------------------------------------------------------------------

def save_checkpoint(model: LevTModel, path) -> None:
    """Write ``magic | u64 header length | JSON header | float64 LE block``.

    The header lists every parameter name and shape in the order their
    values appear in the block.
    """
    params = [(name, p.detach().cpu().to(torch.float64).numpy())
              for name, p in model.state_dict().items()]
    header = {
        "format": "sgm-levt/1",
        "config": asdict(model.config),
        "vocab_hash": model.vocab.fingerprint(),
        "vocab": list(model.vocab.token_of),
        "parameters": [[name, list(arr.shape)] for name, arr in params],
        "dtype": str(next(model.parameters()).dtype).replace("torch.", ""),
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, arr in params:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> LevTModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != CHECKPOINT_MAGIC or len(data) < 16:
        raise CheckpointError("not a LevT checkpoint")
    (hlen,) = struct.unpack("<Q", data[8:16])
    try:
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"bad checkpoint header: {exc}") from exc
    try:
        vocab = Vocabulary(tuple(header["vocab"]))
        expected_hash = header["vocab_hash"]
        config = LevTConfig(**header["config"])
        names = header["parameters"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"bad checkpoint header: {exc}") from exc
    if vocab.fingerprint() != expected_hash:
        raise CheckpointError("vocabulary hash mismatch")
    model = LevTModel(config, vocab)
    if header.get("dtype") == "float64":
        model.double()
    offset = 16 + hlen
    state = {}
    for name, shape in names:
        n = int(np.prod(shape)) if shape else 1
        end = offset + 8 * n
        if end > len(data):
            raise CheckpointError("checkpoint parameter block is truncated")
        arr = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape)
        state[name] = torch.from_numpy(arr.copy())
        offset = end
    if offset != len(data):
        raise CheckpointError("trailing bytes after parameter block")
    own = model.state_dict()
    for name, value in state.items():
        if name not in own:
            raise CheckpointError(f"unexpected parameter {name!r}")
        state[name] = value.to(own[name].dtype)
    model.load_state_dict(state)
    model.eval()
    return model
