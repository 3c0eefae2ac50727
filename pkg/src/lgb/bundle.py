"""Model bundle: the trainable parts, their architecture config, provenance.

A bundle groups the text encoder, graph encoder and classifier heads that
belong to one detection model, plus the vocabulary and a record of which
training stages produced it. Checkpoints embed a hash of the architecture
config so weights can never be loaded into a mismatched topology.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import torch

from .encoders import ClassifierHead, TextEncoder, make_gnn
from .text_pipeline import Vocabulary


class CheckpointError(Exception):
    """Raised when a checkpoint cannot be loaded safely."""


def canonical_json(obj: Any) -> str:
    """Deterministic JSON: sorted keys, no whitespace, ascii-escaped."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(config: Mapping[str, Any]) -> str:
    """sha256 of the canonical JSON form; stable under key reordering."""
    return hashlib.sha256(canonical_json(dict(config)).encode("utf-8")).hexdigest()


DEFAULT_ARCH = {
    "text_dim": 64,
    "use_attention": False,
    "gnn_kind": "gcn",
    "gnn_hidden": 64,
    "gnn_out": 64,
    "lm_head_hidden": [64],
    "fusion_head_hidden": [64],
    "fuse_mode": "concat",
    "max_len": 256,
}


def _fusion_input_dim(config: Mapping[str, Any]) -> int:
    mode = config["fuse_mode"]
    if mode == "concat":
        return config["text_dim"] + config["gnn_out"]
    if mode in ("average", "max"):
        if config["text_dim"] != config["gnn_out"]:
            raise ValueError(
                f"fuse mode {mode!r} needs text_dim == gnn_out, "
                f"got {config['text_dim']} and {config['gnn_out']}")
        return config["text_dim"]
    if mode == "none":
        return config["gnn_out"]
    raise ValueError(f"unknown fuse mode {config['fuse_mode']!r}")


@dataclass
class ModelBundle:
    """One detection model: modules, vocabulary, config, stage history."""

    vocab: Vocabulary
    text_encoder: TextEncoder
    gnn: torch.nn.Module
    lm_head: ClassifierHead
    fusion_head: ClassifierHead
    config: dict[str, Any]
    stages: list[dict[str, Any]] = field(default_factory=list)

    @classmethod
    def build(cls, vocab: Vocabulary, config: Mapping[str, Any] | None = None) -> "ModelBundle":
        """Construct fresh modules for a vocabulary; unspecified keys take
        defaults. Parameter init follows torch's global RNG state."""
        cfg = dict(DEFAULT_ARCH)
        cfg.update(config or {})
        unknown = set(cfg) - set(DEFAULT_ARCH)
        if unknown:
            raise ValueError(f"unknown architecture config keys: {sorted(unknown)}")
        cfg["vocab_size"] = len(vocab)

        text_encoder = TextEncoder(cfg["vocab_size"], cfg["text_dim"],
                                   pad_id=vocab.pad_id,
                                   use_attention=cfg["use_attention"])
        gnn = make_gnn(cfg["gnn_kind"],
                       [cfg["text_dim"], cfg["gnn_hidden"], cfg["gnn_out"]])
        lm_head = ClassifierHead(cfg["text_dim"], tuple(cfg["lm_head_hidden"]))
        fusion_head = ClassifierHead(_fusion_input_dim(cfg),
                                     tuple(cfg["fusion_head_hidden"]))
        return cls(vocab=vocab, text_encoder=text_encoder, gnn=gnn,
                   lm_head=lm_head, fusion_head=fusion_head, config=cfg)

    @property
    def arch_hash(self) -> str:
        return config_hash(self.config)

    def record_stage(self, name: str, **info: Any) -> None:
        """Append a training-stage record; history is never rewritten."""
        self.stages.append({"stage": name, **info})

    def modules(self) -> dict[str, torch.nn.Module]:
        return {"text_encoder": self.text_encoder, "gnn": self.gnn,
                "lm_head": self.lm_head, "fusion_head": self.fusion_head}

    def save(self, path: str | Path) -> None:
        payload = {
            "config": self.config,
            "config_hash": self.arch_hash,
            "stages": list(self.stages),
            "vocab_tokens": list(self.vocab.tokens),
            "state": {name: dict(m.state_dict()) for name, m in self.modules().items()},
        }
        torch.save(payload, str(path))

    @classmethod
    def load(cls, path: str | Path,
             expected_config: Mapping[str, Any] | None = None) -> "ModelBundle":
        """Rebuild a bundle from disk; refuses hash mismatches."""
        try:
            payload = torch.load(str(path), weights_only=True)
        except Exception as exc:
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
        for key in ("config", "config_hash", "stages", "vocab_tokens", "state"):
            if key not in payload:
                raise CheckpointError(f"checkpoint {path} is missing {key!r}")
        cfg = dict(payload["config"])
        if config_hash(cfg) != payload["config_hash"]:
            raise CheckpointError(f"checkpoint {path} config does not match its recorded hash")
        if expected_config is not None and config_hash(dict(expected_config)) != payload["config_hash"]:
            raise CheckpointError(
                f"checkpoint {path} was built with a different architecture config")

        vocab = Vocabulary(payload["vocab_tokens"])
        if len(vocab) != cfg["vocab_size"]:
            raise CheckpointError(f"checkpoint {path} vocabulary size does not match config")
        bundle = cls.build(vocab, {k: v for k, v in cfg.items() if k != "vocab_size"})
        for name, module in bundle.modules().items():
            module.load_state_dict(payload["state"][name])
        bundle.stages = list(payload["stages"])
        return bundle
