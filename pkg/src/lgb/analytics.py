"""Read-only social-structure analytics over a social graph.

Three views drive the detection heuristics: how many neighbors accounts
have, how a node's neighborhood splits into connected components when
restricted to one class, and how the empirical bot rate moves with that
component count. All operations treat edges as undirected and never
mutate the graph.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .graph_store import LABEL_BOT, LABEL_HUMAN, EgoNetwork, SocialGraph, ego_network, neighbors

CLASS_FILTERS = ("human", "bot", "all")
# neighbor-count buckets for curve rows; (low, high) inclusive, high None = open
DEFAULT_BUCKETS = ((1, 5), (6, 10), (11, 20), (21, None))


@dataclass(frozen=True)
class NeighborHistogram:
    """Distribution of undirected neighbor counts, with exact fractions."""

    counts: Mapping[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def fraction_of(self, k: int) -> Fraction:
        if self.total == 0:
            return Fraction(0)
        return Fraction(self.counts.get(k, 0), self.total)

    @property
    def isolated_fraction(self) -> Fraction:
        return self.fraction_of(0)

    @property
    def one_neighbor_fraction(self) -> Fraction:
        return self.fraction_of(1)

    @property
    def over_ten_fraction(self) -> Fraction:
        if self.total == 0:
            return Fraction(0)
        return Fraction(sum(n for k, n in self.counts.items() if k > 10),
                        self.total)


def neighbor_distribution(g: SocialGraph) -> NeighborHistogram:
    """Histogram of undirected neighbor counts over all nodes."""
    counts: dict[int, int] = {}
    for v in g.nodes:
        k = len(neighbors(g, v))
        counts[k] = counts.get(k, 0) + 1
    return NeighborHistogram(counts=counts)


def count_components(e: EgoNetwork, keep: Callable[[str], bool] = lambda v: True,
                     exclude_ego: bool = True) -> int:
    """Connected components among the ego network's surviving members.

    Members failing ``keep`` are dropped, as is the ego itself unless
    ``exclude_ego`` is False; components are counted in the undirected
    induced subgraph via union-find.
    """
    members = {v for v in e.members if keep(v)}
    if exclude_ego:
        members.discard(e.ego)
    if not members:
        return 0

    parent = {v: v for v in members}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    n = len(members)
    for s, t, _ in e.induced_edges:
        if s in members and t in members:
            rs, rt = find(s), find(t)
            if rs != rt:
                parent[rs] = rt
                n -= 1
    return n


@dataclass(frozen=True)
class CurveRow:
    """One (neighbor-count bucket, component count) cell of a curve."""

    bucket: str
    numcc: int
    class_filter: str
    bot_probability: float
    support: int


@dataclass(frozen=True)
class NumCCCurve:
    rows: tuple[CurveRow, ...]


def _bucket_label(lo: int, hi: int | None) -> str:
    return f"{lo}+" if hi is None else f"{lo}-{hi}"


def _bucket_for(k: int, buckets) -> str | None:
    for lo, hi in buckets:
        if k >= lo and (hi is None or k <= hi):
            return _bucket_label(lo, hi)
    return None


def _keep_for(g: SocialGraph, class_filter: str) -> Callable[[str], bool]:
    if class_filter == "human":
        return lambda v: g.labels.get(v) == LABEL_HUMAN
    if class_filter == "bot":
        return lambda v: g.labels.get(v) == LABEL_BOT
    return lambda v: True


def bot_probability_by_numcc(g: SocialGraph, class_filter: str = "human",
                             buckets: Sequence[tuple[int, int | None]] = DEFAULT_BUCKETS,
                             ) -> NumCCCurve:
    """Empirical bot rate grouped by neighbor-count bucket and NumCC.

    For every labeled node with at least one neighbor, NumCC is the number
    of connected components its neighbors form after restriction to
    ``class_filter`` (ego excluded). Cells without members are omitted, so
    every row has support >= 1. Rows are ordered by bucket then NumCC.
    """
    if class_filter not in CLASS_FILTERS:
        raise ValueError(f"class_filter must be one of {CLASS_FILTERS}, "
                         f"got {class_filter!r}")
    labeled = g.labeled_nodes()
    if not labeled:
        raise ValueError("no labeled nodes to analyze")

    keep = _keep_for(g, class_filter)
    order = {_bucket_label(lo, hi): i for i, (lo, hi) in enumerate(buckets)}
    cells: dict[tuple[str, int], list[int]] = {}
    for v in labeled:
        bucket = _bucket_for(len(neighbors(g, v)), buckets)
        if bucket is None:
            continue
        numcc = count_components(ego_network(g, v), keep, exclude_ego=True)
        cell = cells.setdefault((bucket, numcc), [0, 0])
        cell[0] += 1
        cell[1] += int(g.labels[v] == LABEL_BOT)

    rows = tuple(
        CurveRow(bucket=b, numcc=c, class_filter=class_filter,
                 bot_probability=bots / n, support=n)
        for (b, c), (n, bots) in sorted(cells.items(),
                                        key=lambda kv: (order[kv[0][0]], kv[0][1])))
    return NumCCCurve(rows=rows)


def write_neighbor_histogram_csv(path: str | Path, hist: NeighborHistogram) -> None:
    """Plot-ready CSV, one row per neighbor count, ascending."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["neighbors", "count", "fraction"])
        for k in sorted(hist.counts):
            w.writerow([k, hist.counts[k], float(hist.fraction_of(k))])


def write_numcc_curve_csv(path: str | Path, curve: NumCCCurve) -> None:
    """Plot-ready CSV, one row per (bucket, NumCC) cell."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["bucket", "numcc", "class_filter", "bot_probability",
                    "support"])
        for r in curve.rows:
            w.writerow([r.bucket, r.numcc, r.class_filter,
                        r.bot_probability, r.support])
