"""Immutable social-graph store: ingestion, neighbor/ego access, and stratified splits.

The graph is a snapshot: once built it never mutates, so analytics and
training stages can read it concurrently without coordination. Directed
edges are kept verbatim for provenance; neighbor queries offer both the
directed view and the symmetrized (undirected) view used by analytics and
GNN aggregation. Multi-edges between the same pair collapse to a single
neighbor entry; relation tags stay on the raw edge list as metadata.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

Edge = tuple[str, str, str]  # (source, target, relation)

LABEL_HUMAN = 0
LABEL_BOT = 1

_LABEL_NAMES = {"human": LABEL_HUMAN, "bot": LABEL_BOT}
_SPLIT_NAMES = ("train", "val", "test")

_USER_REQUIRED_KEYS = ("id", "name", "followers_count", "following_count", "description", "tweets")
_EDGE_REQUIRED_KEYS = ("source", "target", "relation")


class GraphError(Exception):
    """Base class for graph-store failures."""


class ParseError(GraphError):
    """A record in an input file is malformed; message names file and line."""


class IntegrityError(GraphError):
    """Input violates a structural invariant (duplicate ids, dangling edges)."""


class UnknownNodeError(GraphError):
    """A queried node id is not in the graph."""


class EmptySplitError(GraphError):
    """A split was requested for a graph without labeled nodes."""


@dataclass(frozen=True)
class UserRecord:
    """Raw social information for one account."""

    id: str
    name: str
    followers_count: int
    following_count: int
    description: str = ""
    tweets: tuple[str, ...] = ()
    extra_attributes: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.followers_count < 0 or self.following_count < 0:
            raise ValueError(f"user {self.id!r}: follower/following counts must be >= 0")
        object.__setattr__(self, "tweets", tuple(self.tweets))
        object.__setattr__(self, "extra_attributes", MappingProxyType(dict(self.extra_attributes)))


@dataclass(frozen=True)
class EgoNetwork:
    """A node plus its first-order neighbors and the edges among them."""

    ego: str
    members: frozenset[str]
    induced_edges: tuple[Edge, ...]


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/val/test node-id sets over the labeled nodes."""

    train: frozenset[str]
    val: frozenset[str]
    test: frozenset[str]

    def __post_init__(self):
        for field in ("train", "val", "test"):
            object.__setattr__(self, field, frozenset(getattr(self, field)))
        if self.train & self.val or self.train & self.test or self.val & self.test:
            raise ValueError("split sets must be pairwise disjoint")

    def of(self, name: str) -> frozenset[str]:
        if name not in _SPLIT_NAMES:
            raise KeyError(f"unknown split name {name!r}")
        return getattr(self, name)


class SocialGraph:
    """Immutable directed social graph with precomputed adjacency.

    Construct via :meth:`build` (validates invariants) or :func:`ingest_dataset`.
    """

    __slots__ = ("nodes", "edges", "labels", "splits", "user_records",
                 "_index", "_out", "_und", "_edge_idx_by_source")

    def __init__(self, nodes, edges, labels, splits, user_records,
                 index, out_adj, und_adj, edge_idx_by_source):
        self.nodes: tuple[str, ...] = nodes
        self.edges: tuple[Edge, ...] = edges
        self.labels: Mapping[str, int] = labels
        self.splits: Mapping[str, str] = splits
        self.user_records: Mapping[str, UserRecord] = user_records
        self._index = index
        self._out = out_adj
        self._und = und_adj
        self._edge_idx_by_source = edge_idx_by_source

    @classmethod
    def build(cls,
              nodes: Iterable[str],
              edges: Iterable[Edge] = (),
              labels: Mapping[str, int] | None = None,
              splits: Mapping[str, str] | None = None,
              user_records: Mapping[str, UserRecord] | None = None) -> "SocialGraph":
        nodes = tuple(nodes)
        edges = tuple((str(s), str(t), str(r)) for s, t, r in edges)
        labels = dict(labels or {})
        splits = dict(splits or {})
        user_records = dict(user_records or {})

        node_set = set(nodes)
        if len(node_set) != len(nodes):
            seen, dups = set(), []
            for v in nodes:
                if v in seen:
                    dups.append(v)
                seen.add(v)
            raise IntegrityError(f"duplicate node ids: {sorted(set(dups))}")

        dangling = sorted({v for s, t, _ in edges for v in (s, t) if v not in node_set})
        if dangling:
            raise IntegrityError(f"edges reference unknown nodes: {dangling}")

        for v, y in labels.items():
            if v not in node_set:
                raise IntegrityError(f"label for unknown node {v!r}")
            if y not in (LABEL_HUMAN, LABEL_BOT):
                raise IntegrityError(f"label for {v!r} must be 0 or 1, got {y!r}")
        for v, s in splits.items():
            if v not in node_set:
                raise IntegrityError(f"split for unknown node {v!r}")
            if s not in _SPLIT_NAMES:
                raise IntegrityError(f"split for {v!r} must be one of {_SPLIT_NAMES}, got {s!r}")
        for v, rec in user_records.items():
            if v not in node_set:
                raise IntegrityError(f"user record for unknown node {v!r}")
            if rec.id != v:
                raise IntegrityError(f"user record id {rec.id!r} does not match key {v!r}")

        index = {v: i for i, v in enumerate(nodes)}
        out_sets: dict[str, set[str]] = {v: set() for v in nodes}
        und_sets: dict[str, set[str]] = {v: set() for v in nodes}
        edge_idx: dict[str, list[int]] = {v: [] for v in nodes}
        for k, (s, t, _) in enumerate(edges):
            out_sets[s].add(t)
            und_sets[s].add(t)
            und_sets[t].add(s)
            edge_idx[s].append(k)

        return cls(
            nodes=nodes,
            edges=edges,
            labels=MappingProxyType(labels),
            splits=MappingProxyType(splits),
            user_records=MappingProxyType(user_records),
            index=index,
            out_adj={v: tuple(sorted(s)) for v, s in out_sets.items()},
            und_adj={v: tuple(sorted(s)) for v, s in und_sets.items()},
            edge_idx_by_source={v: tuple(ix) for v, ix in edge_idx.items()},
        )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_node(self, v: str) -> bool:
        return v in self._index

    def node_index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownNodeError(f"unknown node id {v!r}") from None

    def undirected_pairs(self) -> list[tuple[int, int]]:
        """Unique symmetrized index pairs (i < j), self-loops dropped."""
        pairs = set()
        for s, t, _ in self.edges:
            i, j = self._index[s], self._index[t]
            if i == j:
                continue
            pairs.add((min(i, j), max(i, j)))
        return sorted(pairs)

    def labeled_nodes(self) -> list[str]:
        """Labeled node ids in canonical (node-list) order."""
        return [v for v in self.nodes if v in self.labels]


def neighbors(g: SocialGraph, v: str, directed: bool = False) -> set[str]:
    """Neighbor ids of ``v``: out-neighbors if directed, symmetrized union otherwise."""
    if not g.has_node(v):
        raise UnknownNodeError(f"unknown node id {v!r}")
    return set(g._out[v] if directed else g._und[v])


def ego_network(g: SocialGraph, v: str) -> EgoNetwork:
    """Induced subgraph of ``v`` and its first-order undirected neighbors."""
    if not g.has_node(v):
        raise UnknownNodeError(f"unknown node id {v!r}")
    members = frozenset((v, *g._und[v]))
    idx: list[int] = []
    for m in members:
        for k in g._edge_idx_by_source[m]:
            if g.edges[k][1] in members:
                idx.append(k)
    return EgoNetwork(ego=v, members=members,
                      induced_edges=tuple(g.edges[k] for k in sorted(idx)))


def _allocate(n: int, ratios: tuple[float, float, float]) -> list[int]:
    # largest-remainder rounding: every bucket within 1 of its exact share
    exact = [n * r for r in ratios]
    base = [math.floor(e) for e in exact]
    leftovers = sorted(range(3), key=lambda i: (-(exact[i] - base[i]), i))
    for i in leftovers[: n - sum(base)]:
        base[i] += 1
    return base


def make_split(g: SocialGraph, ratios: tuple[float, float, float],
               seed: int) -> DatasetSplit:
    """Class-stratified train/val/test split, deterministic for a fixed seed."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    labeled = g.labeled_nodes()
    if not labeled:
        raise EmptySplitError("cannot split a graph with no labeled nodes")

    rng = random.Random(seed)
    # Global bucket totals follow largest-remainder rounding; per-class
    # floors are then topped up by remainder, never past a bucket's total.
    # Keeps both the overall sizes and each class within 1 of exact.
    totals = _allocate(len(labeled), tuple(ratios))
    filled = [0, 0, 0]
    members_by_class: dict[int, list[str]] = {}
    alloc_by_class: dict[int, list[int]] = {}
    leftover: dict[int, int] = {}
    cells: list[tuple[float, int, int]] = []
    for cls in (LABEL_HUMAN, LABEL_BOT):
        members = [v for v in labeled if g.labels[v] == cls]
        if not members:
            continue
        rng.shuffle(members)
        members_by_class[cls] = members
        exact = [len(members) * r for r in ratios]
        alloc = [math.floor(e) for e in exact]
        alloc_by_class[cls] = alloc
        leftover[cls] = len(members) - sum(alloc)
        for b in range(3):
            filled[b] += alloc[b]
            cells.append((-(exact[b] - alloc[b]), b, cls))
    for _, b, cls in sorted(cells):
        if leftover[cls] > 0 and filled[b] < totals[b]:
            alloc_by_class[cls][b] += 1
            filled[b] += 1
            leftover[cls] -= 1

    buckets: tuple[list[str], list[str], list[str]] = ([], [], [])
    for cls, members in members_by_class.items():
        n_train, n_val, _ = alloc_by_class[cls]
        buckets[0].extend(members[:n_train])
        buckets[1].extend(members[n_train:n_train + n_val])
        buckets[2].extend(members[n_train + n_val:])
    return DatasetSplit(train=frozenset(buckets[0]),
                        val=frozenset(buckets[1]),
                        test=frozenset(buckets[2]))


def _parse_jsonl(path: Path, required: tuple[str, ...], what: str):
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid {what} record: {exc}") from None
            if not isinstance(obj, dict):
                raise ParseError(f"{path}:{lineno}: {what} record must be an object")
            missing = [k for k in required if k not in obj]
            if missing:
                raise ParseError(f"{path}:{lineno}: {what} record missing keys {missing}")
            records.append((lineno, obj))
    return records


def _user_from_obj(path: Path, lineno: int, obj: dict) -> tuple[UserRecord, int | None, str | None]:
    tweets = obj["tweets"]
    if not isinstance(tweets, list) or not all(isinstance(t, str) for t in tweets):
        raise ParseError(f"{path}:{lineno}: 'tweets' must be an array of strings")
    for key in ("followers_count", "following_count"):
        if not isinstance(obj[key], int) or obj[key] < 0:
            raise ParseError(f"{path}:{lineno}: {key!r} must be a nonnegative integer")

    label = None
    if "label" in obj:
        if obj["label"] not in _LABEL_NAMES:
            raise ParseError(f"{path}:{lineno}: label must be 'human' or 'bot', got {obj['label']!r}")
        label = _LABEL_NAMES[obj["label"]]
    split = None
    if "split" in obj:
        if obj["split"] not in _SPLIT_NAMES:
            raise ParseError(f"{path}:{lineno}: split must be one of {_SPLIT_NAMES}, got {obj['split']!r}")
        split = obj["split"]

    extra = {k: v for k, v in obj.items()
             if k not in _USER_REQUIRED_KEYS and k not in ("label", "split")}
    record = UserRecord(
        id=str(obj["id"]),
        name=str(obj["name"]),
        followers_count=obj["followers_count"],
        following_count=obj["following_count"],
        description=str(obj["description"]),
        tweets=tuple(tweets),
        extra_attributes=extra,
    )
    return record, label, split


def ingest_dataset(users_path: str | Path, edges_path: str | Path) -> SocialGraph:
    """Load a dataset from JSONL users/edges files into an immutable graph.

    A pure function of file contents: byte-identical inputs yield identical
    graphs. Edges referencing unknown nodes and duplicate node ids are
    rejected with an integrity error.
    """
    users_path, edges_path = Path(users_path), Path(edges_path)

    nodes: list[str] = []
    labels: dict[str, int] = {}
    splits: dict[str, str] = {}
    records: dict[str, UserRecord] = {}
    for lineno, obj in _parse_jsonl(users_path, _USER_REQUIRED_KEYS, "user"):
        rec, label, split = _user_from_obj(users_path, lineno, obj)
        if rec.id in records:
            raise IntegrityError(f"{users_path}:{lineno}: duplicate node id {rec.id!r}")
        nodes.append(rec.id)
        records[rec.id] = rec
        if label is not None:
            labels[rec.id] = label
        if split is not None:
            splits[rec.id] = split

    edges: list[Edge] = []
    for lineno, obj in _parse_jsonl(edges_path, _EDGE_REQUIRED_KEYS, "edge"):
        edges.append((str(obj["source"]), str(obj["target"]), str(obj["relation"])))

    return SocialGraph.build(nodes=nodes, edges=edges, labels=labels,
                             splits=splits, user_records=records)


def write_dataset(g: SocialGraph, users_path: str | Path, edges_path: str | Path) -> None:
    """Serialize a graph back to the ingestion JSONL format."""
    with open(users_path, "w", encoding="utf-8") as fh:
        for line in users_jsonl_lines(g):
            fh.write(line + "\n")
    with open(edges_path, "w", encoding="utf-8") as fh:
        for line in edges_jsonl_lines(g.edges):
            fh.write(line + "\n")


def users_jsonl_lines(g: SocialGraph) -> list[str]:
    lines = []
    for v in g.nodes:
        rec = g.user_records.get(v) or UserRecord(id=v, name=v, followers_count=0, following_count=0)
        lines.append(user_record_json(rec, label=g.labels.get(v), split=g.splits.get(v)))
    return lines


def user_record_json(rec: UserRecord, label: int | None = None, split: str | None = None) -> str:
    obj: dict[str, object] = {
        "id": rec.id,
        "name": rec.name,
        "followers_count": rec.followers_count,
        "following_count": rec.following_count,
        "description": rec.description,
        "tweets": list(rec.tweets),
    }
    obj.update(rec.extra_attributes)
    if label is not None:
        obj["label"] = "bot" if label == LABEL_BOT else "human"
    if split is not None:
        obj["split"] = split
    return json.dumps(obj, ensure_ascii=False, sort_keys=False)


def edges_jsonl_lines(edges: Iterable[Edge]) -> list[str]:
    return [json.dumps({"source": s, "target": t, "relation": r}, ensure_ascii=False)
            for s, t, r in edges]
