"""Graph statistics and sample-selection bias detection for knowledge graphs."""

from __future__ import annotations

from collections import Counter, defaultdict, deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptyGraphError
from .kg import KnowledgeGraph

BIAS_THRESHOLDS = (0.5, 0.75, 0.5)
# mean number of partners above which a relation side counts as "many"
MANY_CARDINALITY = 1.5


@dataclass(frozen=True)
class GraphStats:
    edge_count: int
    vertex_count: int
    relation_count: int
    closeness_mean: float
    closeness_std: float
    degree_centrality_mean: float
    degree_centrality_std: float
    avg_neighbour_degree_mean: float
    avg_neighbour_degree_std: float
    avg_degree_mean: float
    avg_degree_std: float
    zero_degree_vertices: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def undirected_adjacency(edges) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = defaultdict(set)
    for h, t in edges:
        adj[h]
        adj[t]
        if h != t:
            adj[h].add(t)
            adj[t].add(h)
    return dict(adj)


def bfs_distances(adj: dict[int, set[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def closeness(adj: dict[int, set[int]]) -> dict[int, float]:
    """Closeness with the Wasserman-Faust scaling for disconnected graphs."""
    n = len(adj)
    out = {}
    for x in adj:
        dist = bfs_distances(adj, x)
        reach = len(dist) - 1
        total = sum(dist.values())
        out[x] = (reach / total) * (reach / (n - 1)) if total > 0 and n > 1 else 0.0
    return out


def degree_centrality(adj: dict[int, set[int]], variant: str = "printed") -> dict[int, float]:
    """``(|V|-1)/deg`` as printed for the benchmark table, or the usual ``deg/(|V|-1)``.

    Zero-degree vertices are left out of the printed variant.
    """
    n = len(adj)
    if variant == "printed":
        return {x: (n - 1) / len(nb) for x, nb in adj.items() if nb}
    if variant == "standard":
        return {x: len(nb) / (n - 1) if n > 1 else 0.0 for x, nb in adj.items()}
    raise ValueError(f"unknown degree centrality variant {variant!r}")


def average_neighbour_degree(adj: dict[int, set[int]]) -> dict[int, float]:
    return {x: (sum(len(adj[y]) for y in nb) / len(nb) if nb else 0.0) for x, nb in adj.items()}


def _mean_std(values) -> tuple[float, float]:
    a = np.fromiter(values, dtype=float)
    if a.size == 0:
        return 0.0, 0.0
    return float(a.mean()), float(a.std())


def compute_stats(kg: KnowledgeGraph, degree_variant: str = "printed") -> GraphStats:
    edges = kg.entity_triples()
    if not edges:
        raise EmptyGraphError("graph has no entity-to-entity triples")
    adj = undirected_adjacency((h, t) for h, _, t in edges)
    dc = degree_centrality(adj, degree_variant)
    return GraphStats(
        len(edges),
        len(adj),
        len(kg.structural_relations()),
        *_mean_std(closeness(adj).values()),
        *_mean_std(dc.values()),
        *_mean_std(average_neighbour_degree(adj).values()),
        *_mean_std(len(nb) for nb in adj.values()),
        zero_degree_vertices=sum(1 for nb in adj.values() if not nb),
    )


# -- biases ---------------------------------------------------------------

@dataclass
class BiasReport:
    triples: list[tuple[int, int, int]]
    b1: list[float]
    b2: list[float]
    b3: list[float]
    thresholds: tuple[float, float, float] = BIAS_THRESHOLDS
    flagged: dict[str, set] = field(default_factory=dict)

    def flagged_any(self) -> set:
        return set().union(*self.flagged.values()) if self.flagged else set()

    def to_dict(self, kg: KnowledgeGraph | None = None) -> dict:
        def name(tr):
            if kg is None:
                return list(tr)
            return [kg.entities[tr[0]], kg.relations[tr[1]], kg.entities[tr[2]]]

        return {
            "thresholds": list(self.thresholds),
            "max": {"b1": max(self.b1, default=0.0), "b2": max(self.b2, default=0.0),
                    "b3": max(self.b3, default=0.0)},
            "flagged": {k: [name(tr) for tr in sorted(v)] for k, v in self.flagged.items()},
        }


def _bias_scores(triples):
    """Per-triple B1/B2/B3 scores after Rossi et al. (2021), both prediction directions.

    B1: share of the relation's triples whose tail (head) equals this
    triple's tail (head). B2: for relations that are "to-many" on the
    predicted side, share of the relation's distinct heads (tails) linked
    to this triple's tail (head). B3: largest share of the relation's
    (head, tail) pairs also linked by another relation.
    """
    n_rel = Counter(r for _, r, _ in triples)
    rel_tail = Counter((r, t) for _, r, t in triples)
    rel_head = Counter((r, h) for h, r, _ in triples)
    heads_of = defaultdict(set)
    tails_of = defaultdict(set)
    pairs = defaultdict(set)
    for h, r, t in triples:
        heads_of[r].add(h)
        tails_of[r].add(t)
        pairs[r].add((h, t))
    heads_linking = defaultdict(set)  # (r, t) -> heads
    tails_linked = defaultdict(set)  # (r, h) -> tails
    for h, r, t in triples:
        heads_linking[r, t].add(h)
        tails_linked[r, h].add(t)

    b3_rel = {}
    for r in pairs:
        overlap = max((len(pairs[r] & pairs[o]) for o in pairs if o != r), default=0)
        b3_rel[r] = overlap / len(pairs[r])

    b1, b2, b3 = [], [], []
    for h, r, t in triples:
        b1.append(max(rel_tail[r, t], rel_head[r, h]) / n_rel[r])
        to_many = n_rel[r] / len(heads_of[r]) > MANY_CARDINALITY
        many_to = n_rel[r] / len(tails_of[r]) > MANY_CARDINALITY
        tail_side = len(heads_linking[r, t]) / len(heads_of[r]) if to_many else 0.0
        head_side = len(tails_linked[r, h]) / len(tails_of[r]) if many_to else 0.0
        b2.append(max(tail_side, head_side))
        b3.append(b3_rel[r])
    return b1, b2, b3


def detect_biases(kg: KnowledgeGraph, thresholds=BIAS_THRESHOLDS) -> BiasReport:
    triples = sorted(kg.entity_triples())
    b1, b2, b3 = _bias_scores(triples)
    flagged = {
        name: {tr for tr, s in zip(triples, scores) if s > thr}
        for name, scores, thr in zip(("b1", "b2", "b3"), (b1, b2, b3), thresholds)
    }
    return BiasReport(triples, b1, b2, b3, tuple(thresholds), flagged)


def debias(kg: KnowledgeGraph, thresholds=BIAS_THRESHOLDS) -> KnowledgeGraph:
    """Drop every triple flagged by any bias type (single pass)."""
    flagged = detect_biases(kg, thresholds).flagged_any()
    if not flagged:
        return kg
    return kg.subset(tr for tr in kg.triples if tr not in flagged)
