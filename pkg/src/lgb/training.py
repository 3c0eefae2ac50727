"""Three-stage training: text-encoder fine-tuning, graph-contrastive
pre-training, and fusion fine-tuning, plus the full pipeline driver.

Stage one fine-tunes the text encoder with cross-entropy on labeled
accounts. Stage two freezes text features and pre-trains the graph encoder
by contrasting two edge-dropped views of the graph. Stage three trains the
graph encoder and fusion head on labeled accounts over the full graph.
Every stage is a deterministic function of its inputs, config and seed.
"""

from __future__ import annotations

import copy
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import torch

from .bundle import ModelBundle
from .encoders import adjacency_from_pairs, fuse, undirected_adjacency
from .graph_store import DatasetSplit, SocialGraph, UserRecord, make_split
from .metrics import ClassificationMetrics, compute_metrics
from .text_pipeline import SegmentCaps, build_sequence, build_vocabulary, to_ids

STAGES = ("sft", "pretrain", "finetune")
VARIANTS = ("full", "no_sft", "no_finetune", "no_pretrain", "no_concat",
            "fuse_average", "fuse_max", "lm_only")


class TrainingError(Exception):
    """Raised when a stage cannot run or diverges."""


class DegenerateLabelsError(TrainingError):
    """Raised when a supervised stage sees only one class."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training stage."""

    stage: str
    learning_rate: float
    weight_decay: float
    max_epochs: int
    patience: int = 5
    dropout_rate: float = 0.0
    seed: int = 0
    batch_size: int = 64
    tau: float = 0.4
    drop_probs: tuple[float, float] = (0.2, 0.4)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}, got {self.stage!r}")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.max_epochs < 1 or self.patience < 1 or self.batch_size < 1:
            raise ValueError("max_epochs, patience and batch_size must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not all(0.0 <= p < 1.0 for p in self.drop_probs):
            raise ValueError("edge-drop probabilities must lie in [0, 1)")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    @classmethod
    def sft(cls, **over) -> "TrainConfig":
        return cls(**{**dict(stage="sft", learning_rate=1e-5, weight_decay=1e-2,
                             max_epochs=20), **over})

    @classmethod
    def pretrain(cls, **over) -> "TrainConfig":
        return cls(**{**dict(stage="pretrain", learning_rate=1e-3, weight_decay=1e-5,
                             max_epochs=50), **over})

    @classmethod
    def finetune(cls, **over) -> "TrainConfig":
        return cls(**{**dict(stage="finetune", learning_rate=5e-4, weight_decay=1e-5,
                             max_epochs=30), **over})


@dataclass(frozen=True)
class GraphView:
    """One edge-dropped view of a graph: same nodes, a subset of edges."""

    n_nodes: int
    base_pairs: tuple[tuple[int, int], ...]
    mask: tuple[bool, ...]
    seed: int

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(p for p, keep in zip(self.base_pairs, self.mask) if keep)

    def adjacency(self) -> torch.Tensor:
        return adjacency_from_pairs(self.n_nodes, self.pairs)


def generate_views(g: SocialGraph, p1: float, p2: float, seed: int) -> tuple[GraphView, GraphView]:
    """Two independent edge-dropped views: each edge survives view m with
    probability 1 - p_m. Node features are shared; only edges differ."""
    if not (0.0 <= p1 < 1.0 and 0.0 <= p2 < 1.0):
        raise ValueError("drop probabilities must lie in [0, 1)")
    pairs = tuple(g.undirected_pairs())
    rng = random.Random(seed)
    masks = [tuple(rng.random() >= p for _ in pairs) for p in (p1, p2)]
    return (GraphView(g.n_nodes, pairs, masks[0], seed),
            GraphView(g.n_nodes, pairs, masks[1], seed))


def _cosine_matrix(a: torch.Tensor, b: torch.Tensor, names: str) -> torch.Tensor:
    for label, m in zip(names.split(","), (a, b)):
        norms = m.norm(dim=1)
        bad = (norms == 0).nonzero()
        if len(bad):
            raise ValueError(
                f"cosine similarity undefined: zero-norm row at node {int(bad[0])} in {label}")
    return (a @ b.T) / (a.norm(dim=1).unsqueeze(1) * b.norm(dim=1).unsqueeze(0))


def infonce_loss(h1: torch.Tensor, h2: torch.Tensor, tau: float) -> torch.Tensor:
    """Contrastive alignment of two views.

    For each node, its representation in one view must identify its
    counterpart in the other view against two kinds of negatives: other
    nodes across views and other nodes within the anchor's own view. The
    result averages both directions over all nodes.
    """
    if h1.shape != h2.shape:
        raise ValueError(f"view shapes differ: {tuple(h1.shape)} vs {tuple(h2.shape)}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    n = h1.shape[0]
    s12 = _cosine_matrix(h1, h2, "view 1,view 2")
    s11 = _cosine_matrix(h1, h1, "view 1,view 1")
    s22 = _cosine_matrix(h2, h2, "view 2,view 2")
    e12 = torch.exp(s12 / tau)
    e11 = torch.exp(s11 / tau)
    e22 = torch.exp(s22 / tau)
    off = 1.0 - torch.eye(n, dtype=h1.dtype)

    pos = e12.diagonal()
    denom_12 = pos + (e12 * off).sum(dim=1) + (e11 * off).sum(dim=1)
    denom_21 = pos + (e12.T * off).sum(dim=1) + (e22 * off).sum(dim=1)
    losses = -torch.log(pos / denom_12) - torch.log(pos / denom_21)
    return losses.sum() / (2.0 * n)


@dataclass
class StageResult:
    """Outcome of one training stage, including its metrics log rows."""

    stage: str
    epochs_run: int
    best_epoch: int | None
    best_val_accuracy: float | None
    history: list[dict] = field(default_factory=list)

    @property
    def loss_history(self) -> list[float]:
        return [row["loss"] for row in self.history if row["split"] == "train"]


def write_metrics_log(path: str | Path, rows: Sequence[Mapping]) -> None:
    """Append stage history to a TSV log, writing the header once."""
    path = Path(path)
    new = not path.exists()
    with open(path, "a", encoding="utf-8") as fh:
        if new:
            fh.write("epoch\tsplit\tloss\taccuracy\tf1\tauc\n")
        for r in rows:
            cells = [str(r.get(k, "")) for k in ("epoch", "split", "loss",
                                                 "accuracy", "f1", "auc")]
            fh.write("\t".join("" if c == "None" else c for c in cells) + "\n")


def encode_all(bundle: ModelBundle, token_ids: Sequence[Sequence[int]],
               batch_size: int = 256) -> torch.Tensor:
    """Encode every node's token ids with the frozen text encoder."""
    bundle.text_encoder.eval()
    outs = []
    with torch.no_grad():
        for start in range(0, len(token_ids), batch_size):
            outs.append(bundle.text_encoder.encode(token_ids[start:start + batch_size]))
    if not outs:
        return torch.zeros((0, bundle.config["text_dim"]), dtype=torch.float64)
    return torch.cat(outs, dim=0)


def _check_finite(loss: torch.Tensor, stage: str, epoch: int) -> None:
    if not math.isfinite(loss.item()):
        raise TrainingError(
            f"{stage} diverged at epoch {epoch}: non-finite loss; "
            "parameters left at the last finite state")


def _class_check(labels: Sequence[int]) -> None:
    present = set(labels)
    if len(present) < 2:
        raise DegenerateLabelsError(
            f"training labels contain a single class {sorted(present)}; need both")


class _EarlyStopper:
    """Keeps the best-validation state; ties go to the earliest epoch."""

    def __init__(self, modules: Mapping[str, torch.nn.Module], patience: int):
        self.modules = dict(modules)
        self.patience = patience
        self.best_epoch: int | None = None
        self.best_acc = -1.0
        self.best_state: dict | None = None

    def observe(self, epoch: int, val_acc: float) -> bool:
        """Record an epoch; returns True when training should stop."""
        if val_acc > self.best_acc:
            self.best_acc = val_acc
            self.best_epoch = epoch
            self.best_state = {name: copy.deepcopy(m.state_dict())
                               for name, m in self.modules.items()}
        return epoch - self.best_epoch >= self.patience

    def restore(self) -> None:
        if self.best_state is not None:
            for name, m in self.modules.items():
                m.load_state_dict(self.best_state[name])


def _split_metrics(y_true: list[int], probs: torch.Tensor) -> ClassificationMetrics:
    return compute_metrics(y_true, [float(p) for p in probs[:, 1]])


def sft_language_model(bundle: ModelBundle, token_ids: Sequence[Sequence[int]],
                       labels: Sequence[int | None], train_idx: Sequence[int],
                       val_idx: Sequence[int], cfg: TrainConfig) -> StageResult:
    """Fine-tune the text encoder and its head on labeled accounts.

    Minimizes mean cross-entropy over the training accounts with AdamW,
    early-stopping on validation accuracy; the returned bundle carries the
    best-validation weights.
    """
    if cfg.stage != "sft":
        raise ValueError(f"expected an sft config, got stage {cfg.stage!r}")
    train_idx, val_idx = list(train_idx), list(val_idx)
    if not train_idx or not val_idx:
        raise TrainingError("sft needs nonempty train and validation sets")
    y_train = [labels[i] for i in train_idx]
    y_val = [labels[i] for i in val_idx]
    if any(y is None for y in y_train + y_val):
        raise TrainingError("sft received an unlabeled node index")
    _class_check(y_train)

    torch.manual_seed(cfg.seed)
    enc, head = bundle.text_encoder, bundle.lm_head
    head.dropout = cfg.dropout_rate
    params = list(enc.parameters()) + list(head.parameters())
    opt = torch.optim.AdamW(params, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    stopper = _EarlyStopper({"text_encoder": enc, "lm_head": head}, cfg.patience)
    result = StageResult(stage="sft", epochs_run=0, best_epoch=None, best_val_accuracy=None)

    train_ids = [token_ids[i] for i in train_idx]
    val_ids = [token_ids[i] for i in val_idx]
    y_train_t = torch.tensor(y_train, dtype=torch.int64)

    for epoch in range(cfg.max_epochs):
        enc.train(), head.train()
        order = torch.randperm(len(train_idx))
        total_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size].tolist()
            logits = head(enc.encode([train_ids[i] for i in batch]))
            loss = torch.nn.functional.cross_entropy(logits, y_train_t[batch])
            _check_finite(loss, "sft", epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total_loss += loss.item() * len(batch)
        epoch_loss = total_loss / len(train_idx)

        enc.eval(), head.eval()
        with torch.no_grad():
            val_probs = head.predict_proba(enc.encode(val_ids))
        val = _split_metrics(y_val, val_probs)
        result.history.append({"epoch": epoch, "split": "train", "loss": epoch_loss})
        result.history.append({"epoch": epoch, "split": "val", "loss": None,
                               "accuracy": val.accuracy, "f1": val.f1, "auc": val.auc})
        result.epochs_run = epoch + 1
        if stopper.observe(epoch, val.accuracy):
            break

    stopper.restore()
    enc.eval(), head.eval()
    result.best_epoch = stopper.best_epoch
    result.best_val_accuracy = stopper.best_acc
    bundle.record_stage("sft", seed=cfg.seed, epochs=result.epochs_run,
                        best_epoch=result.best_epoch)
    return result


def pretrain_gnn(bundle: ModelBundle, g: SocialGraph,
                 token_ids: Sequence[Sequence[int]], cfg: TrainConfig) -> StageResult:
    """Contrastive pre-training of the graph encoder on two edge-dropped
    views per epoch; text features are computed once and frozen. Runs a
    fixed number of epochs (no validation signal exists here)."""
    if cfg.stage != "pretrain":
        raise ValueError(f"expected a pretrain config, got stage {cfg.stage!r}")
    torch.manual_seed(cfg.seed)
    x = encode_all(bundle, token_ids).detach()
    gnn = bundle.gnn
    gnn.dropout = cfg.dropout_rate
    opt = torch.optim.AdamW(gnn.parameters(), lr=cfg.learning_rate,
                            weight_decay=cfg.weight_decay)
    view_rng = random.Random(cfg.seed)
    result = StageResult(stage="pretrain", epochs_run=0, best_epoch=None,
                         best_val_accuracy=None)

    gnn.train()
    for epoch in range(cfg.max_epochs):
        v1, v2 = generate_views(g, *cfg.drop_probs, seed=view_rng.randrange(2**63))
        h1 = gnn(x, v1.adjacency())
        h2 = gnn(x, v2.adjacency())
        loss = infonce_loss(h1, h2, cfg.tau)
        _check_finite(loss, "pretrain", epoch)
        opt.zero_grad()
        loss.backward()
        opt.step()
        result.history.append({"epoch": epoch, "split": "train", "loss": loss.item()})
        result.epochs_run = epoch + 1

    gnn.eval()
    bundle.record_stage("pretrain", seed=cfg.seed, epochs=result.epochs_run)
    return result


def _fused_logits(bundle: ModelBundle, x: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
    h = bundle.gnn(x, adj)
    mode = bundle.config["fuse_mode"]
    fused = h if mode == "none" else fuse(x, h, mode)
    return bundle.fusion_head(fused)


def _params_hash(module: torch.nn.Module) -> str:
    from .bundle import config_hash
    return config_hash({k: v.tolist() for k, v in module.state_dict().items()})


def finetune_fusion(bundle: ModelBundle, g: SocialGraph,
                    token_ids: Sequence[Sequence[int]],
                    labels: Sequence[int | None], train_idx: Sequence[int],
                    val_idx: Sequence[int], cfg: TrainConfig) -> StageResult:
    """Train the graph encoder and fusion head on the full graph.

    Text features are frozen (enforced by parameter-hash comparison); the
    head classifies the fusion of text and graph representations, with
    early stopping on validation accuracy.
    """
    if cfg.stage != "finetune":
        raise ValueError(f"expected a finetune config, got stage {cfg.stage!r}")
    train_idx, val_idx = list(train_idx), list(val_idx)
    if not train_idx or not val_idx:
        raise TrainingError("finetune needs nonempty train and validation sets")
    y_train = [labels[i] for i in train_idx]
    y_val = [labels[i] for i in val_idx]
    if any(y is None for y in y_train + y_val):
        raise TrainingError("finetune received an unlabeled node index")
    _class_check(y_train)

    torch.manual_seed(cfg.seed)
    text_hash_before = _params_hash(bundle.text_encoder)
    x = encode_all(bundle, token_ids).detach()
    adj = undirected_adjacency(g)
    gnn, head = bundle.gnn, bundle.fusion_head
    gnn.dropout = cfg.dropout_rate
    head.dropout = cfg.dropout_rate
    params = list(gnn.parameters()) + list(head.parameters())
    opt = torch.optim.AdamW(params, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    stopper = _EarlyStopper({"gnn": gnn, "fusion_head": head}, cfg.patience)
    result = StageResult(stage="finetune", epochs_run=0, best_epoch=None,
                         best_val_accuracy=None)
    train_t = torch.tensor(train_idx, dtype=torch.int64)
    y_train_t = torch.tensor(y_train, dtype=torch.int64)

    for epoch in range(cfg.max_epochs):
        gnn.train(), head.train()
        logits = _fused_logits(bundle, x, adj)
        loss = torch.nn.functional.cross_entropy(logits[train_t], y_train_t)
        _check_finite(loss, "finetune", epoch)
        opt.zero_grad()
        loss.backward()
        opt.step()

        gnn.eval(), head.eval()
        with torch.no_grad():
            probs = torch.softmax(_fused_logits(bundle, x, adj), dim=1)
        val = _split_metrics(y_val, probs[val_idx])
        result.history.append({"epoch": epoch, "split": "train", "loss": loss.item()})
        result.history.append({"epoch": epoch, "split": "val", "loss": None,
                               "accuracy": val.accuracy, "f1": val.f1, "auc": val.auc})
        result.epochs_run = epoch + 1
        if stopper.observe(epoch, val.accuracy):
            break

    stopper.restore()
    gnn.eval(), head.eval()
    if _params_hash(bundle.text_encoder) != text_hash_before:
        raise TrainingError("finetune must not modify text-encoder parameters")
    result.best_epoch = stopper.best_epoch
    result.best_val_accuracy = stopper.best_acc
    bundle.record_stage("finetune", seed=cfg.seed, epochs=result.epochs_run,
                        best_epoch=result.best_epoch)
    return result


def lm_probabilities(bundle: ModelBundle, token_ids: Sequence[Sequence[int]]) -> torch.Tensor:
    """Class probabilities from the text path alone."""
    bundle.text_encoder.eval(), bundle.lm_head.eval()
    with torch.no_grad():
        return bundle.lm_head.predict_proba(encode_all(bundle, token_ids))


def fused_probabilities(bundle: ModelBundle, g: SocialGraph,
                        token_ids: Sequence[Sequence[int]]) -> torch.Tensor:
    """Class probabilities from the fused text-and-graph path."""
    for m in bundle.modules().values():
        m.eval()
    with torch.no_grad():
        x = encode_all(bundle, token_ids)
        return torch.softmax(_fused_logits(bundle, x, undirected_adjacency(g)), dim=1)


@dataclass
class PipelineResult:
    """A trained model plus its evaluation artifacts."""

    bundle: ModelBundle
    split: DatasetSplit
    variant: str
    test_metrics: ClassificationMetrics
    stage_results: list[StageResult]
    bot_probabilities: dict[str, float]


def _record_for(g: SocialGraph, v: str) -> UserRecord:
    return g.user_records.get(v) or UserRecord(id=v, name=v, followers_count=0,
                                               following_count=0)


def prepare_token_ids(g: SocialGraph, vocab, max_len: int,
                      caps: SegmentCaps = SegmentCaps()) -> list[list[int]]:
    seqs = [build_sequence(_record_for(g, v), caps) for v in g.nodes]
    return [to_ids(s, vocab, max_len) for s in seqs]


def resolve_split(g: SocialGraph, ratios: tuple[float, float, float],
               seed: int) -> DatasetSplit:
    # dataset-provided split assignments win over a fresh random split
    if g.splits:
        labeled = set(g.labeled_nodes())
        return DatasetSplit(
            train=frozenset(v for v, s in g.splits.items() if s == "train" and v in labeled),
            val=frozenset(v for v, s in g.splits.items() if s == "val" and v in labeled),
            test=frozenset(v for v, s in g.splits.items() if s == "test" and v in labeled))
    return make_split(g, ratios, seed)


def run_pipeline(g: SocialGraph, *, seed: int = 0, variant: str = "full",
                 arch: Mapping | None = None,
                 sft_cfg: TrainConfig | None = None,
                 pretrain_cfg: TrainConfig | None = None,
                 finetune_cfg: TrainConfig | None = None,
                 split_ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
                 vocab_min_count: int = 1, vocab_max_size: int = 50_000,
                 caps: SegmentCaps = SegmentCaps()) -> PipelineResult:
    """Run the staged pipeline end to end on one graph and evaluate on test.

    The variant picks which stages run and how text and graph representations
    combine; "full" runs all three stages with concatenation fusion.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    arch = dict(arch or {})
    if variant == "no_concat":
        arch["fuse_mode"] = "none"
    elif variant == "fuse_average":
        arch["fuse_mode"] = "average"
    elif variant == "fuse_max":
        arch["fuse_mode"] = "max"

    sft_cfg = sft_cfg or TrainConfig.sft(seed=seed)
    pretrain_cfg = pretrain_cfg or TrainConfig.pretrain(seed=seed)
    finetune_cfg = finetune_cfg or TrainConfig.finetune(seed=seed)

    seqs = [build_sequence(_record_for(g, v), caps) for v in g.nodes]
    vocab = build_vocabulary(seqs, min_count=vocab_min_count, max_size=vocab_max_size)
    max_len = int(arch.get("max_len", 256))
    token_ids = [to_ids(s, vocab, max_len) for s in seqs]

    split = resolve_split(g, split_ratios, seed)
    labels = [g.labels.get(v) for v in g.nodes]
    train_idx = [g.node_index(v) for v in g.nodes if v in split.train]
    val_idx = [g.node_index(v) for v in g.nodes if v in split.val]
    test_idx = [g.node_index(v) for v in g.nodes if v in split.test]
    if not test_idx:
        raise TrainingError("the test split is empty; nothing to evaluate")

    torch.manual_seed(seed)
    bundle = ModelBundle.build(vocab, arch)
    stage_results: list[StageResult] = []

    if variant != "no_sft":
        stage_results.append(sft_language_model(
            bundle, token_ids, labels, train_idx, val_idx, sft_cfg))
    if variant == "lm_only":
        probs = lm_probabilities(bundle, token_ids)
    else:
        if variant != "no_pretrain":
            stage_results.append(pretrain_gnn(bundle, g, token_ids, pretrain_cfg))
        if variant != "no_finetune":
            stage_results.append(finetune_fusion(
                bundle, g, token_ids, labels, train_idx, val_idx, finetune_cfg))
        probs = fused_probabilities(bundle, g, token_ids)

    y_test = [labels[i] for i in test_idx]
    test_metrics = compute_metrics(y_test, [float(probs[i, 1]) for i in test_idx])
    return PipelineResult(
        bundle=bundle, split=split, variant=variant, test_metrics=test_metrics,
        stage_results=stage_results,
        bot_probabilities={v: float(probs[g.node_index(v), 1]) for v in g.nodes})


def ablation_variant(g: SocialGraph, variant: str, *, seed: int = 0,
                     arch: Mapping | None = None,
                     sft_cfg: TrainConfig | None = None,
                     pretrain_cfg: TrainConfig | None = None,
                     finetune_cfg: TrainConfig | None = None,
                     split_ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
                     ) -> ClassificationMetrics:
    """Run the pipeline with exactly one component removed or substituted
    and report the same metric triple as the main path."""
    return run_pipeline(g, seed=seed, variant=variant, arch=arch,
                        sft_cfg=sft_cfg, pretrain_cfg=pretrain_cfg,
                        finetune_cfg=finetune_cfg,
                        split_ratios=split_ratios).test_metrics
