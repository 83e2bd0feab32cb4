"""Independent brute-force oracles and hand-built fixtures shared by the tests."""

import itertools
import math

import numpy as np

from pdpk.embedding import EmbeddingModel
from pdpk.kg import Rule
from pdpk.pqspace import ValueRange


def hand_model(scorer, ent, rel):
    ent = np.asarray(ent, dtype=float)
    rel = np.asarray(rel, dtype=float)
    return EmbeddingModel(scorer, ent.shape[1], tuple(f"e{i}" for i in range(len(ent))),
                          tuple(f"r{i}" for i in range(len(rel))), ent, rel)


def brute_score(scorer, ent, rel, h, r, t):
    if scorer == "translation":
        return -math.sqrt(sum((ent[h][d] + rel[r][d] - ent[t][d]) ** 2 for d in range(len(rel[r]))))
    return sum(ent[h][d] * rel[r][d] * ent[t][d] for d in range(len(rel[r])))


def brute_rank(scorer, ent, rel, triple, known, side):
    h, r, t = triple
    true = t if side == "tail" else h
    cands = []
    for c in range(len(ent)):
        trip = (h, r, c) if side == "tail" else (c, r, t)
        if c != true and trip in known:
            continue
        cands.append(brute_score(scorer, ent, rel, *trip))
    s = brute_score(scorer, ent, rel, h, r, t)
    better = sum(1 for x in cands if x > s)
    ties = sum(1 for x in cands if x == s) - 1
    return better + 1 + ties / 2, len(cands)


def toy_instance(seed):
    rng = np.random.default_rng(seed)
    n_e, n_r = int(rng.integers(2, 7)), int(rng.integers(1, 4))
    dim = int(rng.integers(1, 4))
    # small integer vectors make exact ties common
    ent = rng.integers(-1, 2, size=(n_e, dim)).tolist()
    rel = rng.integers(-1, 2, size=(n_r, dim)).tolist()
    all_triples = list(itertools.product(range(n_e), range(n_r), range(n_e)))
    pick = rng.choice(len(all_triples), size=int(rng.integers(1, min(12, len(all_triples)) + 1)), replace=False)
    known = {all_triples[i] for i in pick}
    test = sorted(known)[: max(1, len(known) // 2)]
    return rng, ent, rel, known, test


class RandomScorer:
    """Duck-typed model scoring every triple uniformly at random."""

    def __init__(self, kg, rng):
        self.entities, self._rel, self.rng = kg.entities, kg.relations, rng

    def entity_row(self, e):
        return int(e)

    def relation_row(self, r):
        return int(r)

    def scores(self, h, r, t):
        return self.rng.random(len(np.atleast_1d(h)))


def rule(j, k, rho=1.0, lo=0.0, hi=10.0):
    return Rule(j, k, ValueRange(lo, hi), rho)


def top_k_by_counting(keys: dict, k: int) -> set:
    """Members whose sort key is beaten by fewer than k others."""
    return {o for o in keys if sum(1 for x in keys if keys[x] < keys[o]) < k}


def brute_matches(rules, vectors, k):
    params = {}
    for r in rules:
        params.setdefault(r.quality, set()).add(r.parameter)
    scores = []
    for q in params:
        others = [o for o in params if o != q]
        g = top_k_by_counting({o: (-len(params[q] & params[o]), o) for o in others}, k)
        e = top_k_by_counting(
            {o: (math.sqrt(sum((a - b) ** 2 for a, b in zip(vectors[q], vectors[o]))), o) for o in others}, k)
        scores.append(len(g & e) / k)
    return sum(scores) / len(scores)


def random_rules(rng, n_q, n_p):
    rules = []
    for j in range(n_q):
        for kk in rng.choice(n_p, size=int(rng.integers(1, n_p + 1)), replace=False):
            rules.append(rule(j, int(kk)))
    return rules


def reference_rules():
    """48 rules over 16 qualities and 26 parameters (42 participating entities)."""
    pairs = [(j, j + 10 * i) for i in range(2) for j in range(16)]
    pairs += [(j, 20 + j % 6) for j in range(16)]
    assert len(set(pairs)) == 48
    return [Rule(j, k, ValueRange(0, 10), -10.0 / 9) for j, k in pairs]
