"""Structure-analytics tests with BFS flood-fill and enumeration oracles."""

import csv
import random
from fractions import Fraction

import pytest

from lgb.analytics import (
    DEFAULT_BUCKETS,
    NeighborHistogram,
    bot_probability_by_numcc,
    count_components,
    neighbor_distribution,
    write_neighbor_histogram_csv,
    write_numcc_curve_csv,
)
from lgb.graph_store import EgoNetwork, SocialGraph, ego_network, neighbors


def bfs_component_count(members, edges):
    """Independent flood-fill oracle over an undirected edge list."""
    members = set(members)
    adj = {v: set() for v in members}
    for s, t, _ in edges:
        if s in members and t in members and s != t:
            adj[s].add(t)
            adj[t].add(s)
    seen, count = set(), 0
    for v in sorted(members):
        if v in seen:
            continue
        count += 1
        frontier = [v]
        while frontier:
            u = frontier.pop()
            if u in seen:
                continue
            seen.add(u)
            frontier.extend(adj[u] - seen)
    return count


def random_ego(rng, n_members=40, p=0.08):
    names = [f"m{i}" for i in range(n_members)]
    ego = names[0]
    edges = tuple((a, b, "f") for i, a in enumerate(names)
                  for b in names[i + 1:] if rng.random() < p)
    return EgoNetwork(ego=ego, members=frozenset(names), induced_edges=edges)


# ---------------------------------------------------------------- histogram

class TestNeighborDistribution:
    def test_empty_graph(self):
        hist = neighbor_distribution(SocialGraph.build([]))
        assert hist.counts == {}
        assert hist.isolated_fraction == 0

    def test_four_nodes_one_edge(self):
        g = SocialGraph.build(["a", "b", "c", "d"], [("a", "b", "f")])
        hist = neighbor_distribution(g)
        assert hist.counts == {0: 2, 1: 2}
        assert hist.isolated_fraction == Fraction(1, 2)
        assert hist.one_neighbor_fraction == Fraction(1, 2)
        assert hist.over_ten_fraction == 0

    def test_reciprocal_edges_count_once(self):
        g = SocialGraph.build(["a", "b"], [("a", "b", "f"), ("b", "a", "f")])
        assert neighbor_distribution(g).counts == {1: 2}

    def test_over_ten_needs_eleven(self):
        leaves = [f"l{i}" for i in range(11)]
        g = SocialGraph.build(["hub", "hub10"] + leaves + ["x"],
                              [("hub", l, "f") for l in leaves]
                              + [("hub10", l, "f") for l in leaves[:10]])
        hist = neighbor_distribution(g)
        assert hist.counts[11] == 1 and hist.counts[10] == 1
        assert hist.over_ten_fraction == Fraction(1, 14)

    def test_fractions_sum_to_one_and_match_counts(self):
        rng = random.Random(0)
        names = [f"v{i}" for i in range(30)]
        edges = [(a, b, "f") for i, a in enumerate(names)
                 for b in names[i + 1:] if rng.random() < 0.1]
        g = SocialGraph.build(names, edges)
        hist = neighbor_distribution(g)
        assert hist.total == 30
        assert sum(hist.fraction_of(k) for k in hist.counts) == 1
        for k, n in hist.counts.items():
            assert n == sum(1 for v in names if len(neighbors(g, v)) == k)


# --------------------------------------------------------------- components

class TestCountComponents:
    def test_no_survivors(self):
        e = EgoNetwork(ego="x", members=frozenset({"x"}), induced_edges=())
        assert count_components(e) == 0
        e2 = EgoNetwork(ego="x", members=frozenset({"x", "a"}), induced_edges=())
        assert count_components(e2, keep=lambda v: False) == 0

    def test_triangle_and_independent_neighbors(self):
        members = frozenset({"x", "a", "b", "c"})
        star = tuple(("x", v, "f") for v in "abc")
        triangle = star + (("a", "b", "f"), ("b", "c", "f"), ("a", "c", "f"))
        assert count_components(EgoNetwork("x", members, triangle)) == 1
        assert count_components(EgoNetwork("x", members, star)) == 3

    def test_including_ego_can_merge(self):
        members = frozenset({"x", "a", "b"})
        edges = (("x", "a", "f"), ("x", "b", "f"))
        assert count_components(EgoNetwork("x", members, edges)) == 2
        assert count_components(EgoNetwork("x", members, edges),
                                exclude_ego=False) == 1

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_bfs_oracle_on_random_networks(self, seed):
        rng = random.Random(seed)
        e = random_ego(rng)
        keep_set = {v for v in e.members if rng.random() < 0.6}
        keep = keep_set.__contains__
        for exclude in (True, False):
            survivors = {v for v in e.members if keep(v)}
            if exclude:
                survivors.discard(e.ego)
            expected = bfs_component_count(survivors, e.induced_edges)
            assert count_components(e, keep, exclude_ego=exclude) == expected

    @pytest.mark.parametrize("seed", range(10))
    def test_at_most_survivors_with_equality_iff_edge_free(self, seed):
        rng = random.Random(100 + seed)
        e = random_ego(rng, n_members=15, p=0.1)
        survivors = set(e.members) - {e.ego}
        got = count_components(e)
        assert got <= len(survivors)
        has_edge = any(s in survivors and t in survivors
                       for s, t, _ in e.induced_edges if s != t)
        assert (got == len(survivors)) == (not has_edge)

    def test_bridging_edge_merges_exactly_one_pair(self):
        members = frozenset({"x", "a", "b", "c", "d"})
        edges = (("a", "b", "f"),)
        before = count_components(EgoNetwork("x", members, edges))
        after = count_components(
            EgoNetwork("x", members, edges + (("c", "d", "f"),)))
        assert before == 3 and after == 2


# -------------------------------------------------------------- numcc curve

def curve_oracle(g, class_filter, buckets=DEFAULT_BUCKETS):
    """Exhaustive regrouping with brute-force neighbor scans and BFS."""
    want = {"human": 0, "bot": 1}.get(class_filter)
    cells = {}
    for v, y in g.labels.items():
        nbrs = {t for s, t, _ in g.edges if s == v} | \
               {s for s, t, _ in g.edges if t == v}
        nbrs.discard(v)
        k = len(nbrs)
        bucket = None
        for lo, hi in buckets:
            if k >= lo and (hi is None or k <= hi):
                bucket = f"{lo}+" if hi is None else f"{lo}-{hi}"
        if bucket is None:
            continue
        kept = {u for u in nbrs if want is None or g.labels.get(u) == want}
        numcc = bfs_component_count(kept, g.edges)
        cell = cells.setdefault((bucket, numcc), [0, 0])
        cell[0] += 1
        cell[1] += y
    return {key: (n, bots / n) for key, (n, bots) in cells.items()}


def star_graph(stars):
    """Disjoint stars: (center_label, leaf_label, n_leaves) per star."""
    nodes, edges, labels = [], [], {}
    for i, (cl, ll, n) in enumerate(stars):
        center = f"c{i}"
        nodes.append(center)
        labels[center] = cl
        for j in range(n):
            leaf = f"c{i}l{j}"
            nodes.append(leaf)
            labels[leaf] = ll
            edges.append((center, leaf, "f"))
    return SocialGraph.build(nodes, edges, labels)


class TestBotProbabilityByNumcc:
    def test_all_bots_give_probability_one(self):
        g = star_graph([(1, 1, 2), (1, 1, 4)])
        curve = bot_probability_by_numcc(g, "all")
        assert curve.rows
        assert all(r.bot_probability == 1.0 for r in curve.rows)

    def test_hand_built_eight_node_graph(self):
        # x (bot): human neighbors n1,n2,n3 with edge n1-n2 -> NumCC 2
        # y (human): human neighbors m1,m2, no inter-edges -> NumCC 2
        nodes = ["x", "n1", "n2", "n3", "y", "m1", "m2", "z"]
        edges = [("x", "n1", "f"), ("x", "n2", "f"), ("x", "n3", "f"),
                 ("n1", "n2", "f"),
                 ("y", "m1", "f"), ("y", "m2", "f"), ("z", "m2", "f")]
        labels = {"x": 1, "y": 0, "n1": 0, "n2": 0, "n3": 0,
                  "m1": 0, "m2": 0, "z": 1}
        g = SocialGraph.build(nodes, edges, labels)
        rows = {(r.bucket, r.numcc): r
                for r in bot_probability_by_numcc(g, "human").rows}
        cell = rows[("1-5", 2)]
        assert cell.support == 2 and cell.bot_probability == 0.5
        # n3, m1 see one human neighbor apiece; z sees one; n1, n2 see two
        # connected humans -> NumCC 1 for all five, all five are 0.2 bot
        cell = rows[("1-5", 1)]
        assert cell.support == 5 and cell.bot_probability == 0.2

    @pytest.mark.parametrize("seed", range(15))
    @pytest.mark.parametrize("class_filter", ["human", "bot", "all"])
    def test_matches_enumeration_oracle(self, seed, class_filter):
        rng = random.Random(seed)
        names = [f"v{i}" for i in range(25)]
        edges = [(a, b, "f") for i, a in enumerate(names)
                 for b in names[i + 1:] if rng.random() < 0.12]
        labels = {v: rng.randint(0, 1) for v in names if rng.random() < 0.8}
        if not labels:
            labels = {names[0]: 1}
        g = SocialGraph.build(names, edges, labels)
        curve = bot_probability_by_numcc(g, class_filter)
        expected = curve_oracle(g, class_filter)
        got = {(r.bucket, r.numcc): (r.support, r.bot_probability)
               for r in curve.rows}
        assert got == expected

    def test_all_support_splits_by_class_on_single_class_neighborhoods(self):
        rng = random.Random(7)
        stars = [(rng.randint(0, 1), rng.randint(0, 1), rng.randint(1, 5))
                 for _ in range(25)]
        g = star_graph(stars)
        tables = {f: {(r.bucket, r.numcc): r.support
                      for r in bot_probability_by_numcc(g, f).rows}
                  for f in ("human", "bot", "all")}
        for (bucket, numcc), support in tables["all"].items():
            if numcc == 0:
                continue
            assert support == tables["human"].get((bucket, numcc), 0) + \
                tables["bot"].get((bucket, numcc), 0)

    def test_rows_sorted_and_supported(self):
        g = star_graph([(1, 0, 1), (0, 0, 3), (1, 0, 6), (0, 1, 12)])
        curve = bot_probability_by_numcc(g, "all")
        keys = [( {"1-5": 0, "6-10": 1, "11-20": 2, "21+": 3}[r.bucket], r.numcc)
                for r in curve.rows]
        assert keys == sorted(keys)
        assert all(r.support >= 1 for r in curve.rows)
        assert all(0.0 <= r.bot_probability <= 1.0 for r in curve.rows)

    def test_isolated_nodes_never_emit_rows(self):
        g = SocialGraph.build(["a", "b"], [], labels={"a": 1, "b": 0})
        assert bot_probability_by_numcc(g, "all").rows == ()

    def test_no_labels_rejected(self):
        g = SocialGraph.build(["a", "b"], [("a", "b", "f")])
        with pytest.raises(ValueError, match="labeled"):
            bot_probability_by_numcc(g, "human")

    def test_unknown_filter_rejected(self):
        g = star_graph([(1, 0, 2)])
        with pytest.raises(ValueError, match="class_filter"):
            bot_probability_by_numcc(g, "martian")

    def test_decreases_on_fixture_built_to_show_it(self):
        # egos with NumCC c have human neighbor pods and bot rates falling
        # with c; pods get extra unlabeled contacts so they land in another
        # neighbor-count bucket and leave the ego cells untouched
        schedule = {1: 9, 2: 6, 3: 3, 4: 1}  # bots among 10 egos per NumCC
        nodes, edges, labels = [], [], {}
        filler = 0
        for c, n_bots in schedule.items():
            for i in range(10):
                ego = f"e{c}_{i}"
                nodes.append(ego)
                labels[ego] = 1 if i < n_bots else 0
                for j in range(c):
                    pod = f"{ego}p{j}"
                    nodes.append(pod)
                    labels[pod] = 0
                    edges.append((ego, pod, "f"))
                    for _ in range(5):
                        name = f"f{filler}"
                        filler += 1
                        nodes.append(name)
                        edges.append((pod, name, "f"))
        g = SocialGraph.build(nodes, edges, labels)
        rows = {r.numcc: r for r in bot_probability_by_numcc(g, "human").rows
                if r.bucket == "1-5"}
        assert set(rows) == {1, 2, 3, 4}
        assert [rows[c].bot_probability for c in (1, 2, 3, 4)] == \
               [0.9, 0.6, 0.3, 0.1]
        assert all(rows[c].support == 10 for c in (1, 2, 3, 4))


# ------------------------------------------------------------------- emission

class TestCsvEmission:
    def test_histogram_csv_rows_ascend(self, tmp_path):
        g = SocialGraph.build(["a", "b", "c", "d"], [("a", "b", "f")])
        path = tmp_path / "hist.csv"
        write_neighbor_histogram_csv(path, neighbor_distribution(g))
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["neighbors", "count", "fraction"]
        assert rows[1:] == [["0", "2", "0.5"], ["1", "2", "0.5"]]

    def test_curve_csv_round_trips(self, tmp_path):
        g = star_graph([(1, 0, 2), (0, 1, 3)])
        curve = bot_probability_by_numcc(g, "all")
        path = tmp_path / "curve.csv"
        write_numcc_curve_csv(path, curve)
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["bucket", "numcc", "class_filter",
                           "bot_probability", "support"]
        assert len(rows) == 1 + len(curve.rows)
        for row, r in zip(rows[1:], curve.rows):
            assert row == [r.bucket, str(r.numcc), r.class_filter,
                           str(r.bot_probability), str(r.support)]
