"""Procedural-knowledge rules and their knowledge-graph representations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import DomainError, EmptyRuleSetError, EstimatorError
from .pqspace import DependencyFunction, PQSpace, Quality, ValueRange

VOCAB = "http://purl.org/pdpk/vocab#"
ENTITY = "http://purl.org/pdpk/entity#"
XSD = "http://www.w3.org/2001/XMLSchema#"
XSD_DOUBLE = XSD + "double"

REPRESENTATIONS = ("ch_e", "ch_e_eta", "ch_l_eta", "rei_e")

IMPLIES = VOCAB + "implies"
ADJUSTS = VOCAB + "adjusts"
HAS_CONDITION = VOCAB + "hasCondition"
HAS_ADJUSTMENT = VOCAB + "hasAdjustment"
ON_PARAMETER = VOCAB + "onParameter"
# relations of the literal layer; excluded from structural counts
HAS_ANNOTATION = VOCAB + "hasAnnotation"
ANNOTATED_PARAMETER = VOCAB + "annotatedParameter"
ADJUSTMENT_VALUE = VOCAB + "adjustmentValue"
LOWER_BOUND = VOCAB + "lowerBound"
UPPER_BOUND = VOCAB + "upperBound"
LITERAL_LAYER = frozenset({HAS_ANNOTATION, ANNOTATED_PARAMETER, ADJUSTMENT_VALUE, LOWER_BOUND, UPPER_BOUND})

ENTITY_KINDS = {"p": "parameter", "q": "quality", "adj": "adjustment", "st": "statement",
                "rho": "quantity", "ann": "annotation"}


@dataclass(frozen=True, order=True)
class Literal:
    value: float
    datatype: str = XSD_DOUBLE

    @property
    def lexical(self) -> str:
        return repr(float(self.value))


Tail = Union[int, Literal]


@dataclass(frozen=True)
class Rule:
    quality: int
    parameter: int
    condition_range: ValueRange
    quantified_adjustment: float

    @property
    def key(self) -> tuple:
        return (self.quality, self.parameter, self.condition_range.min, self.condition_range.max)


# -- quantification -------------------------------------------------------

def _grid(l: float, u: float) -> np.ndarray:
    n = max(1, math.ceil(u - l - 1e-9))
    pts = l + (u - l) * np.arange(n + 1) / n
    pts[-1] = u
    return pts


def quantify_parameter(f: DependencyFunction, l: float, u: float) -> float:
    """Mean per-step parameter change over the quality range ``[l, u]``.

    Sums ``f^-1(s) - f^-1(s+1)`` over unit steps ``s = l .. u-1`` and divides
    by ``width(d_q) - 1``. Non-integer ranges are walked in
    ``ceil(u - l)`` equal steps.
    """
    dq = f.target_domain
    if not l < u:
        raise DomainError(f"empty condition range [{l}, {u}]")
    if not (dq.contains(l) and dq.contains(u)):
        raise DomainError(f"[{l}, {u}] not inside quality range {dq.to_list()}")
    denom = dq.width() - 1.0
    if denom <= 0:
        raise DomainError("quality range must be wider than 1")
    pts = _grid(l, u)
    total = 0.0
    for s, s_next in zip(pts[:-1], pts[1:]):
        total += f.inverse(s) - f.inverse(s_next)
    return total / denom


def quantify_parameter_closed_form(f: DependencyFunction, l: float, u: float) -> float:
    return (f.inverse(l) - f.inverse(u)) / (f.target_domain.width() - 1.0)


@dataclass(frozen=True)
class FixedCount:
    n: int = 1


@dataclass(frozen=True)
class FreedmanDiaconis:
    # quality id -> observed values
    samples: Mapping[int, Sequence[float]] = field(default_factory=dict)


def _equal_bins(domain: ValueRange, n: int) -> list[ValueRange]:
    edges = [domain.min + domain.width() * i / n for i in range(n)] + [domain.max]
    return [ValueRange(edges[i], edges[i + 1]) for i in range(n)]


def freedman_diaconis_bins(domain: ValueRange, samples: Sequence[float]) -> list[ValueRange]:
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise EstimatorError("Freedman-Diaconis needs at least two samples")
    q75, q25 = np.percentile(x, [75, 25])
    iqr = q75 - q25
    if iqr <= 0:
        raise EstimatorError("interquartile range is zero")
    h = 2.0 * iqr * x.size ** (-1.0 / 3.0)
    return _equal_bins(domain, max(1, math.ceil(domain.width() / h - 1e-12)))


def quantify_conditions(quality: Quality, strategy, fallback: bool = True) -> list[ValueRange]:
    """Partition the quality range into condition ranges.

    With ``fallback`` a degenerate Freedman-Diaconis estimate (zero IQR)
    collapses to a single range instead of raising :class:`EstimatorError`.
    """
    if isinstance(strategy, FixedCount):
        if strategy.n < 1:
            raise ValueError("fixed_count needs n >= 1")
        return _equal_bins(quality.domain, strategy.n)
    if isinstance(strategy, FreedmanDiaconis):
        try:
            return freedman_diaconis_bins(quality.domain, strategy.samples.get(quality.id, ()))
        except EstimatorError:
            if not fallback:
                raise
            return [quality.domain]
    raise TypeError(f"unsupported strategy {strategy!r}")


def dependency_samples(space: PQSpace, points: int = 50) -> dict[int, list[float]]:
    """Quality values obtained by sweeping every dependency over its parameter range."""
    out: dict[int, list[float]] = {}
    for (k, j), f in sorted(space.dependencies.items()):
        src = f.source_domain
        grid = np.linspace(src.min, src.max, points)
        out.setdefault(j, []).extend(f.forward(float(p)) for p in grid)
    return out


def extract_rules(space: PQSpace, strategy=FixedCount(1)) -> list[Rule]:
    rules = []
    ranges = {}
    for k, j in sorted(space.known, key=lambda kj: (kj[1], kj[0])):
        if j not in ranges:
            ranges[j] = quantify_conditions(space.qualities[j], strategy)
        f = space.dependencies[k, j]
        for r in ranges[j]:
            rules.append(Rule(j, k, r, quantify_parameter(f, r.min, r.max)))
    return rules


# -- graph ----------------------------------------------------------------

def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x).replace("+", "")


def entity_iri(kind: str, *parts) -> str:
    return ENTITY + "_".join([kind] + [_num(p) if isinstance(p, float) else str(p) for p in parts])


def local_name(iri: str) -> str:
    return iri.rsplit("#", 1)[-1]


def entity_kind(iri: str) -> str:
    return ENTITY_KINDS.get(local_name(iri).split("_", 1)[0], "other")


def parse_rule_iri(iri: str) -> tuple[int, int, float, float]:
    """``(quality, parameter, lower, upper)`` encoded in a per-rule entity IRI."""
    _, j, k, l, u = local_name(iri).split("_")
    return int(j), int(k), float(l), float(u)


@dataclass(frozen=True)
class KnowledgeGraph:
    """Triples over registered entities and relations.

    Ids index the sorted IRI registries, so equal triple sets always get
    equal ids. ``annotations`` carries per-entity quantifications that are
    not materialised as triples.
    """

    representation: str
    entities: tuple[str, ...]
    relations: tuple[str, ...]
    triples: tuple[tuple[int, int, Tail], ...]
    annotations: Mapping[str, Mapping[str, float]] = field(default_factory=dict, compare=False)

    @classmethod
    def from_iri_triples(cls, representation: str, iri_triples: Iterable[tuple], annotations=None):
        iri_triples = set(iri_triples)
        ents = set()
        rels = set()
        for h, r, t in iri_triples:
            ents.add(h)
            rels.add(r)
            if not isinstance(t, Literal):
                ents.add(t)
        entities = tuple(sorted(ents))
        relations = tuple(sorted(rels))
        e_id = {e: i for i, e in enumerate(entities)}
        r_id = {r: i for i, r in enumerate(relations)}
        triples = sorted(
            ((e_id[h], r_id[r], t if isinstance(t, Literal) else e_id[t]) for h, r, t in iri_triples),
            key=_triple_key,
        )
        return cls(representation, entities, relations, tuple(triples), dict(annotations or {}))

    def iri_triples(self) -> list[tuple]:
        return [
            (self.entities[h], self.relations[r], t if isinstance(t, Literal) else self.entities[t])
            for h, r, t in self.triples
        ]

    def entity_id(self, iri: str) -> int:
        return self.entities.index(iri)

    def literal_layer_relations(self) -> frozenset:
        return frozenset(i for i, r in enumerate(self.relations) if r in LITERAL_LAYER)

    def entity_triples(self) -> list[tuple[int, int, int]]:
        """Entity-to-entity triples outside the literal layer."""
        lit = self.literal_layer_relations()
        return [tr for tr in self.triples if not isinstance(tr[2], Literal) and tr[1] not in lit]

    def structural_relations(self) -> list[int]:
        return sorted({r for _, r, _ in self.entity_triples()})

    def vertices(self) -> list[int]:
        return sorted({x for h, _, t in self.entity_triples() for x in (h, t)})

    def kind(self, entity: int) -> str:
        return entity_kind(self.entities[entity])

    def subset(self, triples: Iterable[tuple]) -> "KnowledgeGraph":
        """New graph over a subset of this graph's triples (ids re-canonicalised)."""
        iri = [
            (self.entities[h], self.relations[r], t if isinstance(t, Literal) else self.entities[t])
            for h, r, t in triples
        ]
        return KnowledgeGraph.from_iri_triples(self.representation, iri, self.annotations)


def _triple_key(tr):
    h, r, t = tr
    return (h, r, (1, t.value) if isinstance(t, Literal) else (0, t))


def _rule_triples(rule: Rule, representation: str) -> tuple[list, dict]:
    j, k = rule.quality, rule.parameter
    l, u = rule.condition_range.min, rule.condition_range.max
    q, p = entity_iri("q", j), entity_iri("p", k)
    ann = {"rho": rule.quantified_adjustment, "lower": l, "upper": u}
    if representation in ("ch_e", "ch_e_eta"):
        adj = entity_iri("adj", j, k, float(l), float(u))
        if representation == "ch_e":
            return [(q, HAS_CONDITION, adj), (adj, ADJUSTS, p)], {adj: ann}
        return [(q, IMPLIES, adj), (adj, ADJUSTS, p), (q, IMPLIES, p)], {adj: ann}
    if representation == "ch_l_eta":
        holder = entity_iri("ann", j, k, float(l), float(u))
        return [
            (q, IMPLIES, p),
            (q, HAS_ANNOTATION, holder),
            (holder, ANNOTATED_PARAMETER, p),
            (holder, ADJUSTMENT_VALUE, Literal(float(rule.quantified_adjustment))),
            (holder, LOWER_BOUND, Literal(float(l))),
            (holder, UPPER_BOUND, Literal(float(u))),
        ], {}
    if representation == "rei_e":
        st = entity_iri("st", j, k, float(l), float(u))
        quant = entity_iri("rho", j, k, float(l), float(u))
        return [(st, HAS_CONDITION, q), (st, HAS_ADJUSTMENT, quant), (st, ON_PARAMETER, p)], {quant: ann}
    raise ValueError(f"unknown representation {representation!r}")


def build_kg(rules: Sequence[Rule], representation: str) -> KnowledgeGraph:
    if not rules:
        raise EmptyRuleSetError("cannot build a knowledge graph without rules")
    triples, annotations = [], {}
    for rule in rules:
        ts, ann = _rule_triples(rule, representation)
        triples.extend(ts)
        annotations.update(ann)
    return KnowledgeGraph.from_iri_triples(representation, triples, annotations)


def rules_from_kg(kg: KnowledgeGraph, annotations: Mapping[str, Mapping[str, float]] | None = None) -> list[Rule]:
    """Recover the rule list a graph was built from.

    Entity-quantified representations need ``annotations`` (defaults to the
    graph's own) since their adjustments are not stored as triples.
    """
    annotations = kg.annotations if annotations is None else annotations
    rules = []
    if kg.representation == "ch_l_eta":
        values: dict[str, dict] = {}
        names = {ADJUSTMENT_VALUE: "rho", LOWER_BOUND: "lower", UPPER_BOUND: "upper"}
        for h, r, t in kg.iri_triples():
            if r in names:
                values.setdefault(h, {})[names[r]] = t.value
        for holder, v in values.items():
            j, k, _, _ = parse_rule_iri(holder)
            rules.append(Rule(j, k, ValueRange(v["lower"], v["upper"]), v["rho"]))
    else:
        node_kind = "quantity" if kg.representation == "rei_e" else "adjustment"
        for iri in kg.entities:
            if entity_kind(iri) == node_kind:
                j, k, l, u = parse_rule_iri(iri)
                rules.append(Rule(j, k, ValueRange(l, u), float(annotations[iri]["rho"])))
    return sorted(rules, key=lambda r: r.key)


def participating_entities(rules: Sequence[Rule]) -> int:
    """Number of distinct quality and parameter entities the rules touch."""
    return len({r.quality for r in rules}) + len({r.parameter for r in rules})


def structural_counts(rules: Sequence[Rule], representation: str) -> dict[str, int]:
    """Expected edge/vertex/relation counts of ``build_kg(rules, representation)``.

    With one rule per (quality, parameter) pair these reduce to 2R, 3R, R, 3R
    edges and V0+R, V0+R, V0, V0+2R vertices.
    """
    n, v0 = len({r.key for r in rules}), participating_entities(rules)
    pairs = len({(r.quality, r.parameter) for r in rules})
    table = {
        "ch_e": (2 * n, v0 + n, 2),
        "ch_e_eta": (2 * n + pairs, v0 + n, 2),
        "ch_l_eta": (pairs, v0, 1),
        "rei_e": (3 * n, v0 + 2 * n, 3),
    }
    e, v, r = table[representation]
    return {"edges": e, "vertices": v, "relations": r}
