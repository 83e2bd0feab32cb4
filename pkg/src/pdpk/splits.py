"""Train/test splits for link prediction and downstream process-data tasks."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import SplitInfeasibleError
from .kg import KnowledgeGraph, Literal
from .pqspace import round_half_up

LINK_PREDICTION = "link_prediction"
DOWNSTREAM = "downstream"
SPLIT_KINDS = (LINK_PREDICTION, DOWNSTREAM)


@dataclass
class SplitResult:
    kind: str
    train: list
    test: list
    requested_fraction: float
    pruned_kg: dict | KnowledgeGraph | None = None
    report: dict = field(default_factory=dict)

    @property
    def achieved_fraction(self) -> float:
        total = len(self.train) + len(self.test)
        return len(self.test) / total if total else 0.0


def _check_fraction(fraction: float) -> None:
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")


def split_link_prediction(kg: KnowledgeGraph, fraction: float, rng: np.random.Generator) -> SplitResult:
    """Move ``round(fraction * n)`` structural triples into the test set.

    Candidates are visited in a uniformly random order; a triple is only
    taken if its head, tail and relation stay present among the remaining
    entity-valued training triples, so every test id is known at training
    time. When too few triples qualify the split is smaller than requested
    and the shortfall is reported. Literal-layer triples always stay in
    train. ``train`` and ``test`` hold triples in ``kg``'s id space.
    """
    _check_fraction(fraction)
    source = kg.entity_triples()
    if len(source) < 2:
        raise SplitInfeasibleError(f"need at least 2 triples to split, got {len(source)}")
    target = round_half_up(fraction * len(source))
    target = min(max(target, 1), len(source) - 1)

    entity_count: Counter = Counter()
    relation_count: Counter = Counter()
    for h, r, t in kg.triples:
        if isinstance(t, Literal):
            continue
        entity_count[h] += 1
        entity_count[t] += 1
        relation_count[r] += 1

    order = rng.permutation(len(source))
    chosen = set()
    for i in order:
        if len(chosen) == target:
            break
        h, r, t = source[i]
        need_h = 2 if h == t else 1
        if entity_count[h] <= need_h or entity_count[t] <= need_h or relation_count[r] <= 1:
            continue
        entity_count[h] -= 1
        entity_count[t] -= 1
        relation_count[r] -= 1
        chosen.add(int(i))
    if not chosen:
        raise SplitInfeasibleError("no triple can be held out without hiding an entity or relation")

    test = [source[i] for i in sorted(chosen)]
    test_set = set(test)
    train = [tr for tr in kg.triples if tr not in test_set]
    result = SplitResult(LINK_PREDICTION, train, test, fraction)
    result.report = {
        "source_triples": len(source),
        "requested_test": target,
        "achieved_test": len(test),
        "achieved_fraction": len(test) / len(source),
        "shortfall": target - len(test),
    }
    return result


def split_graphs(result: SplitResult, kg: KnowledgeGraph) -> tuple[KnowledgeGraph, KnowledgeGraph]:
    """Train and test graphs of an LP split (ids re-canonicalised per graph)."""
    return kg.subset(result.train), kg.subset(result.test)


def split_downstream(dataset, fraction: float, rng: np.random.Generator) -> SplitResult:
    """Hold out whole process iterations, identified by ``(process_id, index)``.

    Rules are extracted from the causal dependencies rather than from
    observed iterations, so nothing has to be pruned from the graphs; this is
    checked and reported.
    """
    _check_fraction(fraction)
    items = [(p.id, it.index) for p in sorted(dataset.processes, key=lambda p: p.id) for it in p.iterations]
    n_test = round_half_up(fraction * len(items))
    picked = set(rng.choice(len(items), size=n_test, replace=False).tolist()) if items else set()
    test = [items[i] for i in sorted(picked)]
    train = [x for i, x in enumerate(items) if i not in picked]
    pruned = {rep: prune_kg(kg, test) for rep, kg in dataset.kgs.items()}
    noop = all(pruned[rep] is kg for rep, kg in dataset.kgs.items())
    result = SplitResult(DOWNSTREAM, train, test, fraction, pruned)
    result.report = {
        "source_iterations": len(items),
        "requested_test": n_test,
        "achieved_test": len(test),
        "achieved_fraction": len(test) / len(items) if items else 0.0,
        "pruning": "no-op: rules derive from causal dependencies, not observed iterations" if noop
        else "pruned",
    }
    return result


def prune_kg(kg: KnowledgeGraph, test_iterations) -> KnowledgeGraph:
    """Remove knowledge derived from held-out iterations.

    Generated graphs carry no iteration-derived triples, so the input graph
    is returned unchanged.
    """
    return kg


def process_subset(processes, keep) -> list:
    """Processes restricted to the iterations listed in ``keep``."""
    keep = set(keep)
    out = []
    for p in sorted(processes, key=lambda p: p.id):
        its = tuple(it for it in p.iterations if (p.id, it.index) in keep)
        if its:
            out.append(type(p)(p.id, p.behaviour, p.q_opt, p.threshold, its, p.converged))
    return out
