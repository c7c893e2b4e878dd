"""Character transformer with one shared encoder and per-stream decoders.

The encoder reads the surface word; the segmentation decoder and (in the
multitask variant) the gloss decoder cross-attend to the same encoder
states. Embedding tables and output projections are per-stream.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import DecoderUnavailableError, SegglossError, SequenceTooLongError
from .vocab import BOS, PAD, Vocabularies

SEGMENTATION = "segmentation"
GLOSS = "gloss"
STREAMS = (SEGMENTATION, GLOSS)


@dataclass
class ModelConfig:
    encoder_layers: int = 4
    decoder_layers: int = 4
    attention_heads: int = 4
    embedding_dim: int = 256
    hidden_dim: int = 1024
    dropout: float = 0.1
    attention_dropout: float = 0.1
    max_positions: int = 128

    def __post_init__(self):
        for name in ("encoder_layers", "decoder_layers", "attention_heads", "embedding_dim", "hidden_dim", "max_positions"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.embedding_dim % self.attention_heads:
            raise ValueError("embedding_dim must be divisible by attention_heads")
        for name in ("dropout", "attention_dropout"):
            p = getattr(self, name)
            if not 0 <= p < 1:
                raise ValueError(f"{name} must be in [0, 1)")


def sinusoidal_positions(n_positions: int, dim: int) -> torch.Tensor:
    position = torch.arange(n_positions, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float32) * (-math.log(10000.0) / dim))
    table = torch.zeros(n_positions, dim)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div[: dim // 2])
    return table


class SymbolEmbedding(nn.Module):
    """Scaled embedding plus fixed sinusoidal positions."""

    def __init__(self, vocab_size: int, config: ModelConfig):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, config.embedding_dim, padding_idx=PAD)
        nn.init.uniform_(self.embed.weight, -config.embedding_dim**-0.5, config.embedding_dim**-0.5)
        with torch.no_grad():
            self.embed.weight[PAD].zero_()
        self.register_buffer(
            "positions", sinusoidal_positions(config.max_positions, config.embedding_dim), persistent=False
        )
        self.dropout = nn.Dropout(config.dropout)
        self.scale = math.sqrt(config.embedding_dim)
        self.max_positions = config.max_positions

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        length = ids.shape[1]
        if length > self.max_positions:
            raise SequenceTooLongError(f"sequence length {length} exceeds max_positions {self.max_positions}")
        x = self.embed(ids) * self.scale + self.positions[:length].to(ids.device)
        return self.dropout(x)


class MultiHeadAttention(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        dim = config.embedding_dim
        self.heads = config.attention_heads
        self.head_dim = dim // self.heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(dim, dim)
        self.v_proj = nn.Linear(dim, dim)
        self.out_proj = nn.Linear(dim, dim)
        self.dropout = nn.Dropout(config.attention_dropout)

    def forward(self, query, key, value, key_mask=None, causal=False):
        bsz, q_len, dim = query.shape
        k_len = key.shape[1]

        def heads(x, length):
            return x.view(bsz, length, self.heads, self.head_dim).transpose(1, 2)

        q = heads(self.q_proj(query), q_len)
        k = heads(self.k_proj(key), k_len)
        v = heads(self.v_proj(value), k_len)
        scores = torch.matmul(q, k.transpose(-2, -1)) / math.sqrt(self.head_dim)
        if key_mask is not None:
            scores = scores.masked_fill(~key_mask[:, None, None, :], float("-inf"))
        if causal:
            future = torch.triu(torch.ones(q_len, k_len, dtype=torch.bool, device=query.device), diagonal=1)
            scores = scores.masked_fill(future, float("-inf"))
        weights = self.dropout(torch.softmax(scores, dim=-1))
        mixed = torch.matmul(weights, v).transpose(1, 2).reshape(bsz, q_len, dim)
        return self.out_proj(mixed)


class FeedForward(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.inner = nn.Linear(config.embedding_dim, config.hidden_dim)
        self.outer = nn.Linear(config.hidden_dim, config.embedding_dim)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x):
        return self.outer(self.dropout(F.relu(self.inner(x))))


class EncoderLayer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.self_attn = MultiHeadAttention(config)
        self.attn_norm = nn.LayerNorm(config.embedding_dim)
        self.ffn = FeedForward(config)
        self.ffn_norm = nn.LayerNorm(config.embedding_dim)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x, pad_mask):
        x = self.attn_norm(x + self.dropout(self.self_attn(x, x, x, key_mask=pad_mask)))
        return self.ffn_norm(x + self.dropout(self.ffn(x)))


class DecoderLayer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.self_attn = MultiHeadAttention(config)
        self.self_norm = nn.LayerNorm(config.embedding_dim)
        self.cross_attn = MultiHeadAttention(config)
        self.cross_norm = nn.LayerNorm(config.embedding_dim)
        self.ffn = FeedForward(config)
        self.ffn_norm = nn.LayerNorm(config.embedding_dim)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x, memory, memory_mask):
        x = self.self_norm(x + self.dropout(self.self_attn(x, x, x, causal=True)))
        x = self.cross_norm(x + self.dropout(self.cross_attn(x, memory, memory, key_mask=memory_mask)))
        return self.ffn_norm(x + self.dropout(self.ffn(x)))


class DecoderStack(nn.Module):
    def __init__(self, config: ModelConfig, vocab_size: int):
        super().__init__()
        self.embed = SymbolEmbedding(vocab_size, config)
        self.layers = nn.ModuleList(DecoderLayer(config) for _ in range(config.decoder_layers))
        self.proj = nn.Linear(config.embedding_dim, vocab_size)

    def forward(self, prefix_ids, memory, memory_mask):
        x = self.embed(prefix_ids)
        for layer in self.layers:
            x = layer(x, memory, memory_mask)
        return self.proj(x)


class SegGlossModel(nn.Module):
    """Shared encoder feeding a segmentation decoder and, in multitask
    mode, a gloss decoder. `gloss_vocab_size=None` builds the
    single-decoder variant."""

    def __init__(
        self,
        config: ModelConfig,
        source_vocab_size: int,
        segmentation_vocab_size: int,
        gloss_vocab_size: int | None = None,
    ):
        super().__init__()
        self.config = config
        self.source_vocab_size = source_vocab_size
        self.segmentation_vocab_size = segmentation_vocab_size
        self.gloss_vocab_size = gloss_vocab_size
        self.src_embed = SymbolEmbedding(source_vocab_size, config)
        self.encoder_layers = nn.ModuleList(EncoderLayer(config) for _ in range(config.encoder_layers))
        decoders = {SEGMENTATION: DecoderStack(config, segmentation_vocab_size)}
        if gloss_vocab_size is not None:
            decoders[GLOSS] = DecoderStack(config, gloss_vocab_size)
        self.decoders = nn.ModuleDict(decoders)

    @property
    def multitask(self) -> bool:
        return GLOSS in self.decoders

    def stack(self, stream: str) -> DecoderStack:
        if stream not in STREAMS:
            raise ValueError(f"unknown stream {stream!r}")
        if stream not in self.decoders:
            raise DecoderUnavailableError(f"this model has no {stream} decoder")
        return self.decoders[stream]

    def encode(self, src_ids: torch.Tensor, src_mask: torch.Tensor | None = None) -> torch.Tensor:
        """Encoder states, one vector per input position; padded positions
        are excluded from every attention as keys."""
        if src_ids.ndim != 2:
            raise SegglossError("src_ids must be a (batch, length) tensor")
        if src_mask is None:
            src_mask = src_ids != PAD
        if src_ids.shape[1] == 0 or bool((src_mask.sum(dim=1) == 0).any()):
            raise SegglossError("encode called with an empty input sequence")
        x = self.src_embed(src_ids)
        for layer in self.encoder_layers:
            x = layer(x, src_mask)
        return x

    def decode(
        self,
        stream: str,
        encoder_states: torch.Tensor,
        src_mask: torch.Tensor,
        prefix_ids: torch.Tensor,
    ) -> torch.Tensor:
        """Log-probabilities (batch, prefix_len, vocab) under causal masking."""
        stack = self.stack(stream)
        if prefix_ids.shape[1] == 0 or bool((prefix_ids[:, 0] != BOS).any()):
            raise SegglossError("decoder prefix must begin with BOS")
        logits = stack(prefix_ids, encoder_states, src_mask)
        return F.log_softmax(logits, dim=-1)

    def decode_step(self, stream, encoder_states, src_mask, prefix_ids) -> torch.Tensor:
        """Next-symbol log-distribution for each prefix in the batch."""
        return self.decode(stream, encoder_states, src_mask, prefix_ids)[:, -1, :]

    def count_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters() if p.requires_grad)


def save_checkpoint(path, model: SegGlossModel, vocabs: Vocabularies, meta: dict) -> None:
    """Self-describing checkpoint: config, vocab snapshots, parameters,
    and training-state metadata (epoch, dev score, seed)."""
    payload = {
        "format_version": 1,
        "model_config": asdict(model.config),
        "multitask": model.multitask,
        "vocabs": vocabs.to_dict(),
        "state_dict": model.state_dict(),
        "meta": dict(meta),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path) -> tuple[SegGlossModel, Vocabularies, dict]:
    payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    config = ModelConfig(**payload["model_config"])
    vocabs = Vocabularies.from_dict(payload["vocabs"])
    model = SegGlossModel(
        config,
        source_vocab_size=len(vocabs.source),
        segmentation_vocab_size=len(vocabs.segmentation),
        gloss_vocab_size=len(vocabs.gloss) if payload["multitask"] else None,
    )
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, vocabs, payload["meta"]
