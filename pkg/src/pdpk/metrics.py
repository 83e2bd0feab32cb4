"""Link-prediction metrics and procedural-knowledge retention (matches@k)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embedding import EmbeddingModel
from .errors import (
    DegenerateCandidateSetError,
    EmptyInputError,
    InsufficientQualitiesError,
    UnknownIdError,
)
from .kg import ADJUSTMENT_VALUE, LOWER_BOUND, UPPER_BOUND, KnowledgeGraph, Literal, Rule, entity_iri

SIDES = ("head", "tail")
TIE_MODES = ("mean", "optimistic", "pessimistic")
# hops from a quality node to the parameter layer
PROPAGATION_STEPS = {"ch_e": 2, "ch_e_eta": 2, "ch_l_eta": 1, "rei_e": 2}
LITERAL_ROLES = (ADJUSTMENT_VALUE, LOWER_BOUND, UPPER_BOUND)


@dataclass(frozen=True)
class RankResult:
    rank: float
    candidates: int


def rank(
    model: EmbeddingModel,
    test: Iterable[tuple],
    known: Iterable[tuple],
    side: str,
    tie: str = "mean",
    filtered: bool = True,
) -> list[RankResult]:
    """Rank the true entity of each test triple among all substitutions on ``side``.

    Triples are in the model's row space. In the filtered setting every
    candidate forming a triple of ``known`` (train plus test) is dropped.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    if tie not in TIE_MODES:
        raise ValueError(f"tie must be one of {TIE_MODES}")
    known = set(known)
    test = list(test)
    n = len(model.entities)
    all_entities = np.arange(n)
    out = []
    for h, r, t in test:
        for x in (h, t):
            model.entity_row(x)
        model.relation_row(r)
        if side == "tail":
            scores = model.scores(np.full(n, h), np.full(n, r), all_entities)
            true, blocked = t, {c for c in range(n) if (h, r, c) in known} if filtered else set()
        else:
            scores = model.scores(all_entities, np.full(n, r), np.full(n, t))
            true, blocked = h, {c for c in range(n) if (c, r, t) in known} if filtered else set()
        blocked.discard(true)
        keep = np.ones(n, dtype=bool)
        keep[list(blocked)] = False
        s_true = scores[true]
        surv = scores[keep]
        better = int(np.sum(surv > s_true))
        tied = int(np.sum(surv == s_true)) - 1
        if tie == "optimistic":
            r_val = better + 1.0
        elif tie == "pessimistic":
            r_val = better + 1.0 + tied
        else:
            r_val = better + 1.0 + tied / 2.0
        out.append(RankResult(r_val, int(keep.sum())))
    return out


def hits_at_k(ranks: Sequence[RankResult], k: int) -> float:
    if not ranks:
        raise EmptyInputError("no ranks given")
    return sum(1 for x in ranks if x.rank <= k) / len(ranks)


def mean_rank(ranks: Sequence[RankResult]) -> float:
    if not ranks:
        raise EmptyInputError("no ranks given")
    return float(np.mean([x.rank for x in ranks]))


def amri(ranks: Sequence[RankResult]) -> float:
    """Adjusted arithmetic mean rank index, 1 - 2*sum(r-1) / sum(|S|-1).

    1 is optimal, 0 is the expectation under random scores, -1 the worst.
    """
    if not ranks:
        raise EmptyInputError("no ranks given")
    if any(x.candidates < 2 for x in ranks):
        raise DegenerateCandidateSetError("every candidate set needs at least 2 entries")
    num = sum(x.rank - 1 for x in ranks)
    den = sum(x.candidates - 1 for x in ranks)
    return float(min(1.0, max(-1.0, 1.0 - 2.0 * num / den)))


# -- sub-graph aggregation and matches@k -----------------------------------

@dataclass(frozen=True)
class MatchesConfig:
    k: int = 3
    include_head: bool = True
    propagation_steps: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.propagation_steps is not None and self.propagation_steps < 1:
            raise ValueError("propagation_steps must be >= 1")

    def steps_for(self, representation: str) -> int:
        if self.propagation_steps is not None:
            return self.propagation_steps
        return PROPAGATION_STEPS.get(representation, 2)


def _neighbourhood(kg: KnowledgeGraph, source: int, steps: int) -> set[int]:
    """Entities within ``steps`` undirected hops; parameter nodes are not expanded."""
    adj: dict[int, set[int]] = {}
    for h, _, t in kg.triples:
        if isinstance(t, Literal):
            continue
        adj.setdefault(h, set()).add(t)
        adj.setdefault(t, set()).add(h)
    seen = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        if seen[x] == steps or (x != source and kg.kind(x) == "parameter"):
            continue
        for y in adj.get(x, ()):
            if y not in seen:
                seen[y] = seen[x] + 1
                queue.append(y)
    return set(seen)


def aggregate_subgraph(model: EmbeddingModel, kg: KnowledgeGraph, quality: int, cfg: MatchesConfig) -> np.ndarray:
    """Sum of the vectors of the quality's sub-graph.

    Graphs with a literal layer get one extra coordinate per literal role
    holding the sum of that role's values over the reached entities.
    """
    if not 0 <= quality < len(kg.entities) or kg.kind(quality) != "quality":
        raise UnknownIdError(f"entity {quality} is not a quality of the graph")
    reached = _neighbourhood(kg, quality, cfg.steps_for(kg.representation))
    if not cfg.include_head:
        reached.discard(quality)
    vec = np.zeros(model.dim)
    for e in sorted(reached):
        vec += model.entity_vector(kg.entities[e])
    roles = [i for i, r in enumerate(kg.relations) if r in LITERAL_ROLES]
    if roles:
        extra = np.zeros(len(roles))
        for h, r, t in kg.triples:
            if isinstance(t, Literal) and h in reached and r in roles:
                extra[roles.index(r)] += t.value
        vec = np.concatenate([vec, extra])
    return vec


def graph_neighbours(rules: Sequence[Rule]) -> dict[int, list[int]]:
    """Other qualities ordered by shared adjusted parameters (desc), then index."""
    params: dict[int, set[int]] = {}
    for rule in rules:
        params.setdefault(rule.quality, set()).add(rule.parameter)
    out = {}
    for q in sorted(params):
        others = [o for o in sorted(params) if o != q]
        out[q] = sorted(others, key=lambda o: (-len(params[q] & params[o]), o))
    return out


def embedding_neighbours(vectors: dict[int, np.ndarray]) -> dict[int, list[int]]:
    out = {}
    for q in sorted(vectors):
        others = [o for o in sorted(vectors) if o != q]
        out[q] = sorted(others, key=lambda o: (float(np.linalg.norm(vectors[q] - vectors[o])), o))
    return out


def overlap_at_k(graph: dict[int, list[int]], embed: dict[int, list[int]], k: int) -> float:
    scores = [len(set(graph[q][:k]) & set(embed[q][:k])) / k for q in graph]
    return float(np.mean(scores))


def matches_at_k(model: EmbeddingModel, kg: KnowledgeGraph, rules: Sequence[Rule], cfg: MatchesConfig) -> float:
    """Mean top-k overlap between graph-space and embedding-space quality neighbours.

    Qualities are indexed by their generator index, which fixes the
    tie-break order independently of graph or model ids.
    """
    graph = graph_neighbours(rules)
    if len(graph) < cfg.k + 1:
        raise InsufficientQualitiesError(f"need at least {cfg.k + 1} qualities, got {len(graph)}")
    vectors = {q: aggregate_subgraph(model, kg, kg.entity_id(entity_iri("q", q)), cfg) for q in graph}
    return overlap_at_k(graph, embedding_neighbours(vectors), cfg.k)
