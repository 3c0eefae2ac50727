"""Benchmark protocols: synthetic data, robustness studies, transfer curves.

The synthetic generator produces labeled social graphs whose text and
structure signals are independently tunable, so pipeline behavior can be
checked at desk scale. Robustness runs corrupt one aspect of the data
(training labels, edges, or text) and retrain from scratch; the feedback
study measures how accuracy grows with the number of labeled examples
per class when a model trained on one dataset continues training on
another.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .bundle import ModelBundle, config_hash
from .graph_store import (
    LABEL_BOT,
    LABEL_HUMAN,
    SocialGraph,
    UserRecord,
    neighbors,
)
from .metrics import (
    BucketAccuracy,
    ClassificationMetrics,
    MetricsReport,
    MetricSummary,
    compute_metrics,
    neighbor_bucket,
)
from .training import (
    DegenerateLabelsError,
    PipelineResult,
    TrainConfig,
    resolve_split,
    finetune_fusion,
    fused_probabilities,
    prepare_token_ids,
    pretrain_gnn,
    run_pipeline,
    sft_language_model,
)

__all__ = [
    "SyntheticSpec",
    "generate_synthetic",
    "accuracy_by_neighbor_count",
    "ROBUSTNESS_MODES",
    "corrupt_dataset",
    "run_robustness",
    "run_feedback_study",
    "summarize_run",
    "write_robustness_report",
    "write_feedback_report",
    "write_bucket_report",
    "compute_metrics",
    "ClassificationMetrics",
    "MetricsReport",
    "MetricSummary",
]

# token pools for the class-conditional text model
_BOT_POOL = tuple(f"promoblast{i}" for i in range(20))
_HUMAN_POOL = tuple(f"dailynote{i}" for i in range(20))
_NEUTRAL_POOL = tuple(f"topic{i}" for i in range(30))
# among a revealing account's tokens, this share comes from its class pool
_CLASS_TOKEN_RATE = 0.7


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic social-graph generator.

    ``text_signal`` is the probability that an account's text reveals its
    class: revealing accounts mix class-specific and neutral tokens (a
    ``class_token_rate`` share of their tokens comes from the class pool),
    the rest post neutral tokens only and are identifiable just through
    their edges. ``intra_edge_prob``/``inter_edge_prob`` are the
    block-model edge probabilities for same-class and cross-class pairs,
    and ``isolated_fraction`` of the nodes are forced to have no edges at
    all.
    """

    n_nodes: int = 200
    bot_fraction: float = 0.5
    text_signal: float = 0.8
    intra_edge_prob: float = 0.05
    inter_edge_prob: float = 0.005
    isolated_fraction: float = 0.0
    seed: int = 0
    tweets_per_user: int = 3
    tokens_per_tweet: int = 8
    class_token_rate: float = _CLASS_TOKEN_RATE

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be >= 2")
        if not 0.0 < self.bot_fraction < 1.0:
            raise ValueError("bot_fraction must lie strictly between 0 and 1")
        for name in ("text_signal", "intra_edge_prob", "inter_edge_prob",
                     "isolated_fraction"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if not 0.0 < self.class_token_rate <= 1.0:
            raise ValueError("class_token_rate must lie in (0, 1]")
        if self.tweets_per_user < 1 or self.tokens_per_tweet < 1:
            raise ValueError("each account needs at least one tweet and token")
        n_bots = round(self.bot_fraction * self.n_nodes)
        if n_bots == 0 or n_bots == self.n_nodes:
            raise ValueError("bot_fraction leaves one class empty at this n_nodes")
        n_connected = self.n_nodes - round(self.isolated_fraction * self.n_nodes)
        if n_connected == 1:
            raise ValueError("cannot give edges to a single connected node; "
                             "adjust isolated_fraction")


def _draw_tokens(rng: random.Random, label: int, revealing: bool, n: int,
                 rate: float = _CLASS_TOKEN_RATE) -> list[str]:
    pool = _BOT_POOL if label == LABEL_BOT else _HUMAN_POOL
    out = []
    for _ in range(n):
        if revealing and rng.random() < rate:
            out.append(rng.choice(pool))
        else:
            out.append(rng.choice(_NEUTRAL_POOL))
    return out


def generate_synthetic(spec: SyntheticSpec) -> SocialGraph:
    """Sample a labeled social graph from a stochastic block model.

    Same-class pairs connect with ``intra_edge_prob`` and cross-class pairs
    with ``inter_edge_prob``; a random ``isolated_fraction`` of the nodes is
    withheld from edge sampling entirely, and every remaining node is
    guaranteed at least one edge (topped up toward a same-class partner),
    so the realized isolated fraction is exact. Bit-reproducible per seed.
    """
    rng = random.Random(spec.seed)
    n = spec.n_nodes
    ids = [f"u{i:04d}" for i in range(n)]

    n_bots = round(spec.bot_fraction * n)
    label_list = [LABEL_BOT] * n_bots + [LABEL_HUMAN] * (n - n_bots)
    rng.shuffle(label_list)
    labels = dict(zip(ids, label_list))

    n_isolated = round(spec.isolated_fraction * n)
    isolated = set(rng.sample(ids, n_isolated))
    connected = [v for v in ids if v not in isolated]

    edges = []
    degree = {v: 0 for v in connected}
    for i in range(len(connected)):
        for j in range(i + 1, len(connected)):
            a, b = connected[i], connected[j]
            p = spec.intra_edge_prob if labels[a] == labels[b] else spec.inter_edge_prob
            if rng.random() < p:
                src, tgt = (a, b) if rng.random() < 0.5 else (b, a)
                edges.append((src, tgt, "follow"))
                degree[a] += 1
                degree[b] += 1
    for v in connected:
        if degree[v] == 0:
            same = [u for u in connected if u != v and labels[u] == labels[v]]
            pool = same or [u for u in connected if u != v]
            u = rng.choice(pool)
            edges.append((v, u, "follow"))
            degree[v] += 1
            degree[u] += 1

    records = {}
    for i, v in enumerate(ids):
        revealing = rng.random() < spec.text_signal
        tweets = tuple(
            " ".join(_draw_tokens(rng, labels[v], revealing,
                                  spec.tokens_per_tweet, spec.class_token_rate))
            for _ in range(spec.tweets_per_user))
        description = " ".join(_draw_tokens(rng, labels[v], revealing, 4,
                                            spec.class_token_rate))
        records[v] = UserRecord(
            id=v, name=f"user {i}",
            followers_count=rng.randint(0, 50),
            following_count=rng.randint(0, 50),
            description=description, tweets=tweets)

    return SocialGraph.build(nodes=ids, edges=edges, labels=labels,
                             user_records=records)


def accuracy_by_neighbor_count(predictions: Mapping[str, float], g: SocialGraph,
                               node_ids: Sequence[str] | None = None,
                               ) -> dict[str, BucketAccuracy]:
    """Accuracy per undirected-neighbor-count bucket (0..9, then 10+).

    ``predictions`` maps node id to bot probability; a node predicts bot at
    probability >= 0.5. Defaults to the graph's test split when one is
    recorded, otherwise to all labeled nodes. Empty buckets are omitted.
    """
    if node_ids is None:
        node_ids = sorted(v for v, s in g.splits.items()
                          if s == "test" and v in g.labels) or g.labeled_nodes()
    node_ids = list(node_ids)
    missing = [v for v in node_ids if v not in predictions]
    if missing:
        raise ValueError(f"predictions missing for nodes: {missing[:5]}")
    unlabeled = [v for v in node_ids if v not in g.labels]
    if unlabeled:
        raise ValueError(f"cannot score unlabeled nodes: {unlabeled[:5]}")

    totals: dict[str, list[int]] = {}
    for v in node_ids:
        pred = 1 if predictions[v] >= 0.5 else 0
        bucket = totals.setdefault(neighbor_bucket(len(neighbors(g, v))), [0, 0])
        bucket[0] += 1
        bucket[1] += int(pred == g.labels[v])
    return {key: BucketAccuracy(n=cnt, accuracy=ok / cnt)
            for key, (cnt, ok) in totals.items()}


ROBUSTNESS_MODES = ("label", "edge", "feature")
# deleting a corrupted account's text removes this share of its tokens
_FEATURE_DELETE_SHARE = 0.1


def _level_range(mode: str) -> tuple[float, float]:
    # label keeps a positive fraction of training labels; the others go to 0
    return (0.0, 1.0) if mode != "label" else (1e-9, 1.0)


def _check_levels(mode: str, levels: Sequence[float]) -> list[float]:
    if mode not in ROBUSTNESS_MODES:
        raise ValueError(f"unknown robustness mode {mode!r}, "
                         f"expected one of {ROBUSTNESS_MODES}")
    lo, hi = _level_range(mode)
    out = [float(l) for l in levels]
    for l in out:
        if not lo <= l <= hi:
            raise ValueError(f"{mode} level {l} outside legal range "
                             f"[{lo}, {hi}]")
    return out


def _derived_seed(*parts) -> int:
    text = ":".join(repr(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def _subsample_labels(g: SocialGraph, level: float, rng: random.Random,
                      split_ratios, split_seed: int) -> SocialGraph:
    split = resolve_split(g, split_ratios, split_seed)
    kept: list[str] = []
    for cls in (LABEL_HUMAN, LABEL_BOT):
        members = sorted(v for v in split.train if g.labels.get(v) == cls)
        k = round(level * len(members))
        if k == 0:
            raise DegenerateLabelsError(
                f"label level {level} leaves class {cls} with no training labels")
        kept.extend(rng.sample(members, k))
    splits = {v: "train" for v in kept}
    splits.update({v: "val" for v in split.val})
    splits.update({v: "test" for v in split.test})
    return SocialGraph.build(nodes=g.nodes, edges=g.edges, labels=g.labels,
                             splits=splits, user_records=g.user_records)


def _subsample_edges(g: SocialGraph, level: float, rng: random.Random) -> SocialGraph:
    k = round(level * len(g.edges))
    keep = sorted(rng.sample(range(len(g.edges)), k))
    return SocialGraph.build(nodes=g.nodes, edges=[g.edges[i] for i in keep],
                             labels=g.labels, splits=g.splits,
                             user_records=g.user_records)


def _delete_tokens(rec: UserRecord, rng: random.Random) -> UserRecord:
    # positions across description followed by each tweet, whitespace tokens
    segments = [rec.description.split()] + [t.split() for t in rec.tweets]
    total = sum(len(s) for s in segments)
    n_drop = round(_FEATURE_DELETE_SHARE * total)
    if n_drop == 0:
        return rec
    drop = set(rng.sample(range(total), n_drop))
    kept_segments, pos = [], 0
    for seg in segments:
        kept_segments.append([tok for i, tok in enumerate(seg)
                              if pos + i not in drop])
        pos += len(seg)
    return dataclasses.replace(
        rec,
        description=" ".join(kept_segments[0]),
        tweets=tuple(" ".join(s) for s in kept_segments[1:]))


def _corrupt_features(g: SocialGraph, level: float, rng: random.Random,
                      split_ratios, split_seed: int) -> SocialGraph:
    split = resolve_split(g, split_ratios, split_seed)
    records = dict(g.user_records)
    for v in g.nodes:
        if v in split.train and v in records and rng.random() < level:
            records[v] = _delete_tokens(records[v], rng)
    return SocialGraph.build(nodes=g.nodes, edges=g.edges, labels=g.labels,
                             splits=g.splits, user_records=records)


def corrupt_dataset(g: SocialGraph, mode: str, level: float, seed: int,
                    split_ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
                    split_seed: int = 0) -> SocialGraph:
    """Apply one robustness corruption and return the corrupted dataset.

    Label mode keeps a stratified ``level`` fraction of training labels,
    edge mode keeps a uniform ``level`` fraction of the edges, and feature
    mode visits each training account and, with probability ``level``,
    deletes a uniformly random tenth of its text tokens. The no-corruption
    level (1.0 for label/edge, 0.0 for feature) returns the input unchanged.
    """
    (level,) = _check_levels(mode, [level])
    rng = random.Random(seed)
    if mode == "label":
        if level == 1.0:
            return g
        return _subsample_labels(g, level, rng, split_ratios, split_seed)
    if mode == "edge":
        if level == 1.0:
            return g
        return _subsample_edges(g, level, rng)
    if level == 0.0:
        return g
    return _corrupt_features(g, level, rng, split_ratios, split_seed)


def run_robustness(g: SocialGraph, mode: str, levels: Sequence[float], *,
                   seeds: Sequence[int] = (0, 1, 2, 3, 4),
                   corruption_seed: int = 0,
                   split_ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
                   **pipeline_kwargs) -> dict[float, MetricsReport]:
    """Retrain the full pipeline on corrupted data at each level.

    Each level is evaluated once per seed and aggregated into a
    MetricsReport; at the no-corruption level every run coincides exactly
    with the uncorrupted baseline under the same seed.
    """
    levels = _check_levels(mode, levels)
    out: dict[float, MetricsReport] = {}
    for level in levels:
        runs = []
        for s in seeds:
            corrupted = corrupt_dataset(
                g, mode, level, seed=_derived_seed(corruption_seed, mode, level, s),
                split_ratios=split_ratios, split_seed=s)
            runs.append(run_pipeline(corrupted, seed=s, split_ratios=split_ratios,
                                     **pipeline_kwargs).test_metrics)
        out[level] = MetricsReport.from_runs(runs)
    return out


def run_feedback_study(bundle: ModelBundle, dataset_b: SocialGraph,
                       k_values: Sequence[int], seed: int, *,
                       sft_cfg: TrainConfig | None = None,
                       pretrain_cfg: TrainConfig | None = None,
                       finetune_cfg: TrainConfig | None = None,
                       split_ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
                       ) -> dict[int, float]:
    """Accuracy on a new dataset after continuing training on K labels per class.

    The transferred bundle keeps its vocabulary; for each K the study clones
    it, continues all three training stages on K training accounts of each
    class from ``dataset_b``, and reports test accuracy. K=0 skips training
    and scores the transferred model as-is. Samples are nested across K, so
    a larger budget always contains the smaller one.
    """
    k_values = [int(k) for k in k_values]
    if any(k < 0 for k in k_values):
        raise ValueError("K values must be >= 0")
    sft_cfg = sft_cfg or TrainConfig.sft(seed=seed)
    pretrain_cfg = pretrain_cfg or TrainConfig.pretrain(seed=seed)
    finetune_cfg = finetune_cfg or TrainConfig.finetune(seed=seed)

    split = resolve_split(dataset_b, split_ratios, seed)
    max_len = int(bundle.config.get("max_len", 256))
    token_ids = prepare_token_ids(dataset_b, bundle.vocab, max_len)
    labels = [dataset_b.labels.get(v) for v in dataset_b.nodes]
    val_idx = [dataset_b.node_index(v) for v in dataset_b.nodes if v in split.val]
    test_idx = [dataset_b.node_index(v) for v in dataset_b.nodes if v in split.test]
    train_idx = [dataset_b.node_index(v) for v in dataset_b.nodes if v in split.train]

    rng = random.Random(seed)
    order = {cls: rng.sample([i for i in train_idx if labels[i] == cls],
                             sum(1 for i in train_idx if labels[i] == cls))
             for cls in (LABEL_HUMAN, LABEL_BOT)}
    cap = min(len(order[LABEL_HUMAN]), len(order[LABEL_BOT]))
    too_big = [k for k in k_values if k > cap]
    if too_big:
        raise ValueError(f"K={too_big[0]} exceeds the smaller training class "
                         f"({cap} accounts)")

    def accuracy(b: ModelBundle, graph: SocialGraph) -> float:
        probs = fused_probabilities(b, graph, token_ids)
        preds = [1 if float(probs[i, 1]) >= 0.5 else 0 for i in test_idx]
        return sum(int(p == labels[i]) for p, i in zip(preds, test_idx)) / len(test_idx)

    curve: dict[int, float] = {}
    for k in k_values:
        if k == 0:
            curve[k] = accuracy(bundle, dataset_b)
            continue
        clone = copy.deepcopy(bundle)
        subset = sorted(order[LABEL_HUMAN][:k] + order[LABEL_BOT][:k])
        sft_language_model(clone, token_ids, labels, subset, val_idx, sft_cfg)
        pretrain_gnn(clone, dataset_b, token_ids, pretrain_cfg)
        finetune_fusion(clone, dataset_b, token_ids, labels, subset, val_idx,
                        finetune_cfg)
        curve[k] = accuracy(clone, dataset_b)
    return curve


def summarize_run(result: PipelineResult, seed: int) -> dict:
    """Machine-readable summary of one pipeline run."""
    m = result.test_metrics
    return {
        "accuracy": m.accuracy,
        "f1": m.f1,
        "auc": m.auc,
        "n_test": m.n,
        "variant": result.variant,
        "config_hash": config_hash(dict(result.bundle.config)),
        "seed": seed,
    }


def _cell(v) -> str:
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def write_robustness_report(path: str | Path, mode: str,
                            reports: Mapping[float, MetricsReport]) -> None:
    """One tab-separated row per corruption level, means and stds."""
    lines = ["mode\tlevel\taccuracy_mean\taccuracy_std\tf1_mean\tf1_std"
             "\tauc_mean\tauc_std\tn_runs"]
    for level in sorted(reports):
        r = reports[level]
        cells = [mode, _cell(level),
                 _cell(r.accuracy.mean), _cell(r.accuracy.std),
                 _cell(r.f1.mean), _cell(r.f1.std),
                 _cell(r.auc.mean), _cell(r.auc.std), str(r.n_runs)]
        lines.append("\t".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_feedback_report(path: str | Path, curve: Mapping[int, float]) -> None:
    """Tab-separated accuracy-versus-K table."""
    lines = ["k\taccuracy"]
    lines += [f"{k}\t{_cell(curve[k])}" for k in sorted(curve)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _bucket_sort_key(name: str) -> int:
    return 10 if name == "10+" else int(name)


def write_bucket_report(path: str | Path,
                        table: Mapping[str, BucketAccuracy]) -> None:
    """Tab-separated per-neighbor-count accuracy table, ascending buckets."""
    lines = ["neighbors\tn\taccuracy"]
    for name in sorted(table, key=_bucket_sort_key):
        b = table[name]
        lines.append(f"{name}\t{b.n}\t{_cell(b.accuracy)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
