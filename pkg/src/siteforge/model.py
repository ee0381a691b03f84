"""Prompt-conditioned autoregressive tile model.

A compact decoder-only transformer predicts the next category token from the
flattened layout prefix, with cross-attention to a 5-row prompt memory (one
learned embedding per (feature, level) pair).  Training minimizes next-token
cross-entropy with teacher forcing; sampling is seeded and reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .catalog import CATEGORY_CHARS
from .dataset import LEVELS, DatasetRecord, START_CHAR, END_CHAR
from .features import FEATURE_NAMES
from .seeds import Rng, derive

N_CATEGORIES = 7
START_ID = 7
END_ID = 8
PAD_ID = 9
VOCAB = 10
EMPTY_CATEGORY = 6  # index of the empty category in declaration order

CHECKPOINT_FORMAT = "sitelm v1"


class ModelError(RuntimeError):
    pass


@dataclass
class ModelConfig:
    vocab: int = VOCAB
    layers: int = 4
    heads: int = 4
    model_dim: int = 128
    ff_dim: int = 512
    context: int = 512

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ModelError("model_dim must be divisible by heads")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def token_ids(tokens: str) -> list[int]:
    """Map a dataset token string to vocabulary indices."""
    out = []
    for ch in tokens:
        if ch == START_CHAR:
            out.append(START_ID)
        elif ch == END_CHAR:
            out.append(END_ID)
        else:
            out.append(CATEGORY_CHARS.index(ch))
    return out


def label_indices(labels: tuple[str, ...]) -> list[int]:
    """Prompt-table rows for a 5-tuple of levels: feature*3 + level."""
    if len(labels) != 5:
        raise ModelError(f"need 5 labels, got {len(labels)}")
    return [i * 3 + LEVELS.index(lv) for i, lv in enumerate(labels)]


class Attention(nn.Module):
    """Multi-head attention; causal over the sequence or cross to a memory."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.dk = dim // heads
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(dim, dim)
        self.v = nn.Linear(dim, dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, x, mem=None, causal=False):
        B, L, D = x.shape
        src = x if mem is None else mem
        M = src.shape[1]
        q = self.q(x).view(B, L, self.heads, self.dk).transpose(1, 2)
        k = self.k(src).view(B, M, self.heads, self.dk).transpose(1, 2)
        v = self.v(src).view(B, M, self.heads, self.dk).transpose(1, 2)
        att = (q @ k.transpose(-2, -1)) / math.sqrt(self.dk)
        if causal:
            mask = torch.triu(torch.ones(L, M, dtype=torch.bool, device=x.device), 1)
            att = att.masked_fill(mask, float("-inf"))
        att = F.softmax(att, dim=-1)
        y = (att @ v).transpose(1, 2).reshape(B, L, D)
        return self.out(y)


class Block(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.model_dim)
        self.attn = Attention(cfg.model_dim, cfg.heads)
        self.ln2 = nn.LayerNorm(cfg.model_dim)
        self.cross = Attention(cfg.model_dim, cfg.heads)
        self.ln3 = nn.LayerNorm(cfg.model_dim)
        self.mlp = nn.Sequential(
            nn.Linear(cfg.model_dim, cfg.ff_dim),
            nn.GELU(),
            nn.Linear(cfg.ff_dim, cfg.model_dim),
        )

    def forward(self, x, mem):
        x = x + self.attn(self.ln1(x), causal=True)
        x = x + self.cross(self.ln2(x), mem=mem)
        return x + self.mlp(self.ln3(x))


class TileLM(nn.Module):
    """Decoder stack with a 15-entry prompt table feeding cross-attention."""

    def __init__(self, cfg: ModelConfig, dtype: torch.dtype = torch.float32):
        super().__init__()
        self.cfg = cfg
        self.tok = nn.Embedding(cfg.vocab, cfg.model_dim)
        self.pos = nn.Embedding(cfg.context, cfg.model_dim)
        self.prompt_table = nn.Embedding(15, cfg.model_dim)
        self.blocks = nn.ModuleList(Block(cfg) for _ in range(cfg.layers))
        self.ln_f = nn.LayerNorm(cfg.model_dim)
        self.head = nn.Linear(cfg.model_dim, cfg.vocab)
        if dtype is not torch.float32:
            self.to(dtype)

    def encode_prompt(self, labels: tuple[str, ...]) -> torch.Tensor:
        """Prompt memory (5, dim); row i depends only on feature i's level."""
        idx = torch.tensor(label_indices(labels), dtype=torch.long)
        return self.prompt_table(idx)

    def logits(self, ids: torch.Tensor, memory: torch.Tensor) -> torch.Tensor:
        """(B, L) token ids and (B, 5, dim) memory -> (B, L, vocab) logits."""
        B, L = ids.shape
        if L > self.cfg.context:
            raise ModelError(f"sequence length {L} exceeds context {self.cfg.context}")
        x = self.tok(ids) + self.pos(torch.arange(L, device=ids.device))
        for block in self.blocks:
            x = block(x, memory)
        return self.head(self.ln_f(x))

    def forward(self, prefix: list[int] | torch.Tensor, labels: tuple[str, ...]) -> np.ndarray:
        """Probability vector for the token following ``prefix``."""
        ids = torch.as_tensor(prefix, dtype=torch.long).reshape(1, -1)
        mem = self.encode_prompt(labels).unsqueeze(0).to(self.tok.weight.dtype)
        with torch.no_grad():
            lg = self.logits(ids, mem)[0, -1]
            return F.softmax(lg, dim=-1).cpu().numpy()

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


# ------------------------------------------------------------------ training


@dataclass
class TrainResult:
    model: "TileLM"
    loss_log: list[tuple[int, float]]
    steps_done: int
    diverged: bool = False


def init_model(cfg: ModelConfig, seed: int, dtype: torch.dtype = torch.float32) -> TileLM:
    torch.manual_seed(derive(seed, "init") % (1 << 63))
    return TileLM(cfg, dtype)


def _batch_tensors(records: list[DatasetRecord], idx: np.ndarray, model: TileLM):
    ids = torch.tensor([token_ids(records[i].tokens) for i in idx], dtype=torch.long)
    mem_rows = torch.tensor([label_indices(records[i].labels) for i in idx], dtype=torch.long)
    memory = model.prompt_table(mem_rows)
    return ids, memory


def train(
    records: list[DatasetRecord],
    cfg: ModelConfig,
    steps: int,
    batch: int = 16,
    lr: float = 1e-3,
    seed: int = 0,
    model: TileLM | None = None,
    log_every: int = 50,
    snapshot_every: int = 100,
) -> TrainResult:
    """Teacher-forced next-token cross-entropy with Adam.

    Batches are drawn uniformly with replacement by a seeded generator, so a
    run is reproducible from (records, config, steps, batch, lr, seed).  A
    NaN loss aborts and restores the last snapshot.
    """
    if not records:
        raise ModelError("empty training dataset")
    if model is None:
        model = init_model(cfg, seed)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    rng = Rng(derive(seed, "batches"))
    log: list[tuple[int, float]] = []
    snapshot = {k: v.detach().clone() for k, v in model.state_dict().items()}
    snap_step = 0

    model.train()
    for step in range(steps):
        idx = np.array([rng.choice_index(len(records)) for _ in range(batch)])
        ids, memory = _batch_tensors(records, idx, model)
        logits = model.logits(ids[:, :-1], memory)
        loss = F.cross_entropy(logits.reshape(-1, cfg.vocab), ids[:, 1:].reshape(-1))
        if not torch.isfinite(loss):
            model.load_state_dict(snapshot)
            log.append((step, float("nan")))
            import sys

            print(
                f"train: non-finite loss at step {step}; restored snapshot from {snap_step}",
                file=sys.stderr,
            )
            return TrainResult(model, log, snap_step, diverged=True)
        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % log_every == 0 or step == steps - 1:
            log.append((step, float(loss.item())))
        if (step + 1) % snapshot_every == 0:
            snapshot = {k: v.detach().clone() for k, v in model.state_dict().items()}
            snap_step = step + 1
    model.eval()
    return TrainResult(model, log, steps)


def next_token_accuracy(model: TileLM, records: list[DatasetRecord]) -> float:
    """Teacher-forced argmax accuracy over all predicted positions."""
    model.eval()
    with torch.no_grad():
        ids, memory = _batch_tensors(records, np.arange(len(records)), model)
        logits = model.logits(ids[:, :-1], memory)
        pred = logits.argmax(dim=-1)
        return float((pred == ids[:, 1:]).float().mean())


def mean_loss(model: TileLM, records: list[DatasetRecord]) -> float:
    model.eval()
    with torch.no_grad():
        ids, memory = _batch_tensors(records, np.arange(len(records)), model)
        logits = model.logits(ids[:, :-1], memory)
        return float(
            F.cross_entropy(logits.reshape(-1, model.cfg.vocab), ids[:, 1:].reshape(-1))
        )


# ------------------------------------------------------------------ sampling


@dataclass
class SampleResult:
    categories: np.ndarray  # (h, w) category indices
    early_end: bool  # model emitted the end token before h*w cells


def sample_batch(
    model: TileLM,
    labels_list: list[tuple[str, ...]],
    h: int,
    w: int,
    seeds: list[int],
    temperature: float = 1.0,
    top_k: int = 7,
    forced: np.ndarray | None = None,
) -> list[SampleResult]:
    """Sample coarse category grids for a batch of prompts.

    Each item draws from its own counter-based stream, so results depend only
    on (checkpoint, labels, seed, temperature, top_k), not on batch grouping.
    Eligible tokens are the 7 categories plus the end token; an early end
    pads the remainder with the empty category and sets the flag.  ``forced``
    is an optional (h*w,) array of category indices (-1 = free) applied to
    every item, used for region-constrained regeneration.
    """
    if temperature <= 0:
        raise ModelError("temperature must be positive")
    if len(labels_list) != len(seeds):
        raise ModelError("labels and seeds must align")
    B, L = len(labels_list), h * w
    model.eval()
    rngs = [Rng(s) for s in seeds]
    ids = torch.full((B, 1), START_ID, dtype=torch.long)
    mem_rows = torch.tensor([label_indices(lb) for lb in labels_list], dtype=torch.long)
    with torch.no_grad():
        memory = model.prompt_table(mem_rows)
        out = np.full((B, L), EMPTY_CATEGORY, dtype=np.int8)
        done = np.zeros(B, dtype=bool)
        early = np.zeros(B, dtype=bool)
        eligible = list(range(N_CATEGORIES)) + [END_ID]
        for t in range(L):
            logits = model.logits(ids, memory)[:, -1, :]
            probs = F.softmax(logits[:, eligible] / temperature, dim=-1).cpu().numpy()
            nxt = np.full(B, PAD_ID, dtype=np.int64)
            for b in range(B):
                if done[b]:
                    continue
                if forced is not None and forced[t] >= 0:
                    choice = int(forced[t])
                else:
                    p = probs[b]
                    k = min(max(1, top_k), len(p))
                    top = np.argsort(p, kind="stable")[::-1][:k]
                    sub = p[top]
                    j = rngs[b].weighted_index(sub)
                    choice = eligible[int(top[j])]
                if choice == END_ID:
                    done[b] = True
                    early[b] = True
                    nxt[b] = END_ID
                else:
                    out[b, t] = choice
                    nxt[b] = choice
            ids = torch.cat([ids, torch.from_numpy(nxt).reshape(B, 1)], dim=1)
            if done.all():
                break
    return [
        SampleResult(out[b].reshape(h, w).copy(), bool(early[b])) for b in range(B)
    ]


def sample(
    model: TileLM,
    labels: tuple[str, ...],
    h: int,
    w: int,
    seed: int,
    temperature: float = 1.0,
    top_k: int = 7,
    forced: np.ndarray | None = None,
) -> SampleResult:
    return sample_batch(model, [labels], h, w, [seed], temperature, top_k, forced)[0]


# ---------------------------------------------------------------- checkpoint


def save_checkpoint(
    model: TileLM,
    path,
    step: int,
    schema_hash: str,
    catalog_hash: str,
) -> None:
    """Self-describing header line plus raw little-endian parameter blocks."""
    state = model.state_dict()
    manifest = []
    blobs = []
    for name in sorted(state):
        t = state[name].detach().cpu().contiguous()
        arr = t.numpy()
        manifest.append(
            {"name": name, "shape": list(arr.shape), "dtype": str(arr.dtype)}
        )
        blobs.append(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())
    header = {
        "format": CHECKPOINT_FORMAT,
        "config": model.cfg.to_dict(),
        "step": int(step),
        "schema_hash": schema_hash,
        "catalog_hash": catalog_hash,
        "params": manifest,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for blob in blobs:
            f.write(blob)


@dataclass
class Checkpoint:
    model: TileLM
    step: int
    schema_hash: str
    catalog_hash: str

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.blake2b(digest_size=16)
        state = self.model.state_dict()
        for name in sorted(state):
            h.update(name.encode())
            h.update(state[name].detach().cpu().contiguous().numpy().tobytes())
        return h.hexdigest()


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        header = json.loads(f.readline())
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ModelError(f"not a checkpoint file: {path}")
        cfg = ModelConfig.from_dict(header["config"])
        model = TileLM(cfg)
        state = {}
        for entry in header["params"]:
            dtype = np.dtype(entry["dtype"]).newbyteorder("<")
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            raw = f.read(count * dtype.itemsize)
            arr = np.frombuffer(raw, dtype=dtype).reshape(entry["shape"]).copy()
            state[entry["name"]] = torch.from_numpy(arr)
        model.load_state_dict(state)
        model.eval()
    return Checkpoint(model, header["step"], header["schema_hash"], header["catalog_hash"])
