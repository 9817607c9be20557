"""Compact transformer text classifier and its on-disk model directory."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from . import MODEL_VERSION

PAD, UNK = 0, 1
_TOKEN = re.compile(r"[a-z0-9]+|[^\sa-z0-9]")


@dataclass
class DmConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    dim_feedforward: int = 128
    dropout: float = 0.1
    max_input_tokens: int = 512
    threshold: float = 0.5


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class WordTokenizer:
    """Word-level vocabulary built from the training corpus."""

    def __init__(self, vocab: dict[str, int]):
        self.vocab = vocab

    @classmethod
    def build(cls, texts: list[str], max_vocab: int = 50_000) -> "WordTokenizer":
        counts: dict[str, int] = {}
        for text in texts:
            for token in tokenize(text):
                counts[token] = counts.get(token, 0) + 1
        ordered = sorted(counts, key=lambda t: (-counts[t], t))[: max_vocab - 2]
        vocab = {token: i + 2 for i, token in enumerate(ordered)}
        return cls(vocab)

    def encode(self, text: str, max_tokens: int) -> list[int]:
        """Token ids, middle-truncated so the head (instruction/question) and
        the tail (current answer/rationale) are both preserved."""
        ids = [self.vocab.get(t, UNK) for t in tokenize(text)]
        if len(ids) > max_tokens:
            head = (max_tokens + 1) // 2
            tail = max_tokens - head
            ids = ids[:head] + ids[len(ids) - tail:]
        return ids

    def __len__(self) -> int:
        return len(self.vocab) + 2


class DmClassifier(nn.Module):
    """Embedding + transformer encoder + masked mean pooling + 2-way head."""

    def __init__(self, config: DmConfig):
        super().__init__()
        self.config = config
        self.embedding = nn.Embedding(config.vocab_size, config.d_model, padding_idx=PAD)
        self.position = nn.Embedding(config.max_input_tokens, config.d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=config.d_model,
            nhead=config.n_heads,
            dim_feedforward=config.dim_feedforward,
            dropout=config.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.n_layers)
        self.head = nn.Linear(config.d_model, 2)

    def forward(self, input_ids: torch.Tensor) -> torch.Tensor:
        mask = input_ids.eq(PAD)
        positions = torch.arange(input_ids.size(1), device=input_ids.device)
        hidden = self.embedding(input_ids) + self.position(positions)[None, :, :]
        hidden = self.encoder(hidden, src_key_padding_mask=mask)
        keep = (~mask).unsqueeze(-1).float()
        pooled = (hidden * keep).sum(1) / keep.sum(1).clamp(min=1.0)
        return self.head(pooled)


def pad_batch(sequences: list[list[int]], device=None) -> torch.Tensor:
    width = max(len(s) for s in sequences)
    batch = torch.full((len(sequences), width), PAD, dtype=torch.long, device=device)
    for i, seq in enumerate(sequences):
        batch[i, : len(seq)] = torch.tensor(seq, dtype=torch.long, device=device)
    return batch


def save_model_dir(path: str | Path, model: DmClassifier, tokenizer: WordTokenizer) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "config.json").write_text(
        json.dumps({"model_version": MODEL_VERSION, **asdict(model.config)}, indent=2) + "\n"
    )
    (path / "vocab.json").write_text(json.dumps(tokenizer.vocab))
    torch.save(model.state_dict(), path / "weights.pt")


def load_model_dir(path: str | Path) -> tuple[DmClassifier, WordTokenizer, str]:
    path = Path(path)
    raw = json.loads((path / "config.json").read_text())
    version = raw.pop("model_version", "unknown")
    config = DmConfig(**raw)
    model = DmClassifier(config)
    model.load_state_dict(torch.load(path / "weights.pt", map_location="cpu"))
    model.eval()
    tokenizer = WordTokenizer(json.loads((path / "vocab.json").read_text()))
    return model, tokenizer, version


@torch.no_grad()
def predict_p_accept(model: DmClassifier, tokenizer: WordTokenizer, text: str) -> float:
    model.eval()
    ids = tokenizer.encode(text, model.config.max_input_tokens) or [UNK]
    logits = model(pad_batch([ids]))
    return torch.softmax(logits, dim=-1)[0, 1].item()
