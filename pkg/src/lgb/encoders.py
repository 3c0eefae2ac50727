"""Neural encoders: token-sequence text encoder, graph encoders, fusion head.

The text encoder turns each account's token ids into one vector by mean
pooling; graph encoders propagate those vectors over the social graph so a
node's representation mixes in its neighborhood. Everything runs in float64
so training is bit-reproducible and gradients can be checked numerically.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import torch
from torch import nn

from .graph_store import SocialGraph

DTYPE = torch.float64

GNN_KINDS = ("gcn", "gin", "gat")
FUSE_MODES = ("concat", "average", "max")


def undirected_adjacency(g: SocialGraph) -> torch.Tensor:
    """Dense symmetric 0/1 adjacency in canonical node order, self-loops off."""
    a = torch.zeros((g.n_nodes, g.n_nodes), dtype=DTYPE)
    for i, j in g.undirected_pairs():
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a


def adjacency_from_pairs(n: int, pairs: Iterable[tuple[int, int]]) -> torch.Tensor:
    a = torch.zeros((n, n), dtype=DTYPE)
    for i, j in pairs:
        if i == j:
            continue
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a


class TextEncoder(nn.Module):
    """Mean-pooled token embedding encoder for account text sequences.

    Each sequence is embedded and averaged over its real (non-pad) positions;
    a sequence with no tokens encodes to the zero vector. With
    ``use_attention`` a single self-attention layer mixes positions before
    pooling.
    """

    def __init__(self, vocab_size: int, dim: int, pad_id: int = 0,
                 use_attention: bool = False):
        super().__init__()
        self.dim = dim
        self.pad_id = pad_id
        self.use_attention = use_attention
        self.embedding = nn.Embedding(vocab_size, dim, dtype=DTYPE)
        if use_attention:
            self.q_proj = nn.Linear(dim, dim, dtype=DTYPE)
            self.k_proj = nn.Linear(dim, dim, dtype=DTYPE)
            self.v_proj = nn.Linear(dim, dim, dtype=DTYPE)

    def forward(self, token_ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """token_ids [B, T] int64, mask [B, T] bool -> [B, dim]."""
        emb = self.embedding(token_ids)
        valid = mask.to(DTYPE).unsqueeze(-1)
        if self.use_attention:
            q = self.q_proj(emb)
            k = self.k_proj(emb)
            v = self.v_proj(emb)
            scores = q @ k.transpose(-2, -1) / math.sqrt(self.dim)
            scores = scores.masked_fill(~mask.unsqueeze(1), float("-inf"))
            attn = torch.softmax(scores, dim=-1)
            attn = torch.nan_to_num(attn, nan=0.0)  # rows with no valid keys
            emb = emb + attn @ v
        summed = (emb * valid).sum(dim=1)
        counts = valid.sum(dim=1)
        return torch.where(counts > 0, summed / counts.clamp(min=1.0), torch.zeros_like(summed))

    def encode(self, id_lists: Sequence[Sequence[int]]) -> torch.Tensor:
        """Pad a batch of variable-length id lists and encode them."""
        if not id_lists:
            return torch.zeros((0, self.dim), dtype=DTYPE)
        width = max(1, max(len(ids) for ids in id_lists))
        batch = torch.full((len(id_lists), width), self.pad_id, dtype=torch.int64)
        mask = torch.zeros((len(id_lists), width), dtype=torch.bool)
        for r, ids in enumerate(id_lists):
            if ids:
                batch[r, :len(ids)] = torch.tensor(ids, dtype=torch.int64)
                mask[r, :len(ids)] = True
        return self(batch, mask)


class GCNEncoder(nn.Module):
    """Stacked graph convolutions with symmetric degree normalization.

    Each layer computes D^{-1/2} (A + I) D^{-1/2} H W with ReLU between
    layers only, so every node averages itself with its neighbors.
    """

    def __init__(self, dims: Sequence[int]):
        super().__init__()
        self.dropout = 0.0
        self.layers = nn.ModuleList(
            nn.Linear(dims[i], dims[i + 1], dtype=DTYPE) for i in range(len(dims) - 1))

    @staticmethod
    def normalize(adj: torch.Tensor) -> torch.Tensor:
        a_hat = adj + torch.eye(adj.shape[0], dtype=DTYPE)
        d_inv_sqrt = a_hat.sum(dim=1).pow(-0.5)
        return d_inv_sqrt.unsqueeze(1) * a_hat * d_inv_sqrt.unsqueeze(0)

    def forward(self, x: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        norm = self.normalize(adj)
        h = x
        for i, layer in enumerate(self.layers):
            h = layer(norm @ h)
            if i + 1 < len(self.layers):
                h = torch.relu(h)
                h = nn.functional.dropout(h, self.dropout, self.training)
        return h


class GINEncoder(nn.Module):
    """Sum-aggregation graph layers: MLP((1 + eps) h_i + sum of neighbor h_j).

    On an isolated node the neighbor sum vanishes and the layer reduces to a
    transform of the node's own features.
    """

    def __init__(self, dims: Sequence[int]):
        super().__init__()
        self.dropout = 0.0
        self.mlps = nn.ModuleList()
        self.eps = nn.ParameterList()
        for i in range(len(dims) - 1):
            self.mlps.append(nn.Sequential(
                nn.Linear(dims[i], dims[i + 1], dtype=DTYPE),
                nn.ReLU(),
                nn.Linear(dims[i + 1], dims[i + 1], dtype=DTYPE)))
            self.eps.append(nn.Parameter(torch.zeros((), dtype=DTYPE)))

    def forward(self, x: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        h = x
        for i, (mlp, eps) in enumerate(zip(self.mlps, self.eps)):
            h = mlp((1.0 + eps) * h + adj @ h)
            if i + 1 < len(self.mlps):
                h = torch.relu(h)
                h = nn.functional.dropout(h, self.dropout, self.training)
        return h


class GATEncoder(nn.Module):
    """Single-head attention aggregation over each node's closed neighborhood.

    Attention logits use the standard additive form with a LeakyReLU of
    slope 0.2 and are softmax-normalized over N(i) plus the node itself.
    """

    negative_slope = 0.2

    def __init__(self, dims: Sequence[int]):
        super().__init__()
        self.dropout = 0.0
        self.weights = nn.ModuleList(
            nn.Linear(dims[i], dims[i + 1], bias=False, dtype=DTYPE)
            for i in range(len(dims) - 1))
        self.att_src = nn.ParameterList(
            nn.Parameter(torch.empty(dims[i + 1], dtype=DTYPE)) for i in range(len(dims) - 1))
        self.att_dst = nn.ParameterList(
            nn.Parameter(torch.empty(dims[i + 1], dtype=DTYPE)) for i in range(len(dims) - 1))
        for p in (*self.att_src, *self.att_dst):
            nn.init.normal_(p, std=0.1)

    def forward(self, x: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        mask = (adj + torch.eye(adj.shape[0], dtype=DTYPE)) > 0
        h = x
        for i, w in enumerate(self.weights):
            wh = w(h)
            logits = (wh @ self.att_src[i]).unsqueeze(1) + (wh @ self.att_dst[i]).unsqueeze(0)
            logits = nn.functional.leaky_relu(logits, self.negative_slope)
            logits = logits.masked_fill(~mask, float("-inf"))
            alpha = torch.softmax(logits, dim=1)
            h = alpha @ wh
            if i + 1 < len(self.weights):
                h = torch.relu(h)
                h = nn.functional.dropout(h, self.dropout, self.training)
        return h


def make_gnn(kind: str, dims: Sequence[int]) -> nn.Module:
    """Build a graph encoder; dims is (input, hidden..., output)."""
    if kind not in GNN_KINDS:
        raise ValueError(f"unknown graph encoder kind {kind!r}, expected one of {GNN_KINDS}")
    cls = {"gcn": GCNEncoder, "gin": GINEncoder, "gat": GATEncoder}[kind]
    if len(dims) < 2:
        raise ValueError("dims needs at least an input and an output size")
    return cls(dims)


class ClassifierHead(nn.Module):
    """MLP classifier; hidden_dims=() makes it a single linear layer."""

    def __init__(self, in_dim: int, hidden_dims: Sequence[int] = (), n_classes: int = 2):
        super().__init__()
        self.dropout = 0.0
        dims = [in_dim, *hidden_dims, n_classes]
        self.layers = nn.ModuleList(
            nn.Linear(dims[i], dims[i + 1], dtype=DTYPE) for i in range(len(dims) - 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = x
        for i, layer in enumerate(self.layers):
            h = layer(h)
            if i + 1 < len(self.layers):
                h = torch.relu(h)
                h = nn.functional.dropout(h, self.dropout, self.training)
        return h

    def predict_proba(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self(x), dim=-1)


def fuse(x: torch.Tensor, h: torch.Tensor, mode: str = "concat") -> torch.Tensor:
    """Combine text and graph representations row-wise."""
    if mode not in FUSE_MODES:
        raise ValueError(f"unknown fuse mode {mode!r}, expected one of {FUSE_MODES}")
    if mode != "concat" and x.shape != h.shape:
        raise ValueError(
            f"fuse mode {mode!r} needs matching shapes, got {tuple(x.shape)} and {tuple(h.shape)}")
    if mode == "concat":
        return torch.cat([x, h], dim=-1)
    if mode == "average":
        return (x + h) / 2.0
    return torch.maximum(x, h)
