"""Desk-scale knowledge graph embeddings: translation (TransE) and bilinear (DistMult) scorers.

Training is plain numpy with hand-written gradients and an Adam optimiser
with decoupled weight decay. Entity vectors are renormalised to unit
length after every update, as in the original TransE recipe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraphError, TrainingDivergedError, UnknownIdError
from .kg import KnowledgeGraph, Literal

SCORERS = ("translation", "bilinear")
DEFAULT_DIM = 46
DEFAULT_LR = 4e-4
DEFAULT_WEIGHT_DECAY = 1e-5
DEFAULT_EPOCHS = {"translation": 400, "bilinear": 800}
DEFAULT_BATCH_SIZE = None  # full batch
MARGIN = 1.0


@dataclass
class EmbeddingModel:
    scorer: str
    dim: int
    entities: tuple[str, ...]
    relations: tuple[str, ...]
    entity_vectors: np.ndarray
    relation_vectors: np.ndarray
    loss_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.scorer not in SCORERS:
            raise ValueError(f"unknown scorer {self.scorer!r}; choose from {SCORERS}")
        self._ent = {e: i for i, e in enumerate(self.entities)}
        self._rel = {r: i for i, r in enumerate(self.relations)}

    def entity_row(self, entity) -> int:
        return _lookup(entity, self._ent, len(self.entities), "entity")

    def relation_row(self, relation) -> int:
        return _lookup(relation, self._rel, len(self.relations), "relation")

    def entity_vector(self, entity) -> np.ndarray:
        return self.entity_vectors[self.entity_row(entity)]

    def scores(self, h, r, t) -> np.ndarray:
        """Vectorised scores for integer row arrays (higher = more plausible)."""
        return _score(self.scorer, self.entity_vectors[h], self.relation_vectors[r], self.entity_vectors[t])


def _lookup(key, table: dict, size: int, what: str) -> int:
    if isinstance(key, str):
        if key not in table:
            raise UnknownIdError(f"unknown {what} {key!r}")
        return table[key]
    key = int(key)
    if not 0 <= key < size:
        raise UnknownIdError(f"unknown {what} id {key}")
    return key


def _score(scorer: str, vh, vr, vt):
    if scorer == "translation":
        return -np.linalg.norm(vh + vr - vt, axis=-1)
    return np.sum(vh * vr * vt, axis=-1)


def score_triple(model: EmbeddingModel, h, r, t) -> float:
    """Plausibility of one triple; ids are model rows or IRIs."""
    return float(model.scores(model.entity_row(h), model.relation_row(r), model.entity_row(t)))


def training_triples(kg: KnowledgeGraph) -> list[tuple[int, int, int]]:
    """All entity-valued triples; literal-valued ones are not scored."""
    return [tr for tr in kg.triples if not isinstance(tr[2], Literal)]


def init_model(kg: KnowledgeGraph, scorer: str, dim: int, rng: np.random.Generator) -> EmbeddingModel:
    bound = 6.0 / np.sqrt(dim)
    ent = rng.uniform(-bound, bound, size=(len(kg.entities), dim))
    rel = rng.uniform(-bound, bound, size=(len(kg.relations), dim))
    ent /= np.linalg.norm(ent, axis=1, keepdims=True)
    return EmbeddingModel(scorer, dim, kg.entities, kg.relations, ent, rel)


class _AdamW:
    def __init__(self, shapes, lr, weight_decay, betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.wd, self.b1, self.b2, self.eps = lr, weight_decay, betas[0], betas[1], eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= self.lr * ((m / c1) / (np.sqrt(v / c2) + self.eps) + self.wd * p)


def _corrupt(batch: np.ndarray, n_entities: int, rng: np.random.Generator) -> np.ndarray:
    """Replace head or tail (equal odds) by a uniformly drawn *different* entity."""
    neg = batch.copy()
    replace_head = rng.random(len(batch)) < 0.5
    col = np.where(replace_head, 0, 2)
    rows = np.arange(len(batch))
    drawn = rng.integers(0, n_entities - 1, size=len(batch))
    original = neg[rows, col]
    neg[rows, col] = drawn + (drawn >= original)
    return neg


def _translation_grads(E, R, pos, neg):
    def dist_and_dir(tr):
        x = E[tr[:, 0]] + R[tr[:, 1]] - E[tr[:, 2]]
        d = np.linalg.norm(x, axis=1)
        return d, x / np.maximum(d, 1e-12)[:, None]

    dp, up = dist_and_dir(pos)
    dn, un = dist_and_dir(neg)
    loss = np.maximum(0.0, MARGIN + dp - dn)
    active = (loss > 0).astype(float)[:, None] / len(pos)
    gE = np.zeros_like(E)
    gR = np.zeros_like(R)
    # d/dh = u, d/dr = u, d/dt = -u; loss = d_pos - d_neg
    for tr, u, sign in ((pos, up, 1.0), (neg, un, -1.0)):
        g = sign * active * u
        np.add.at(gE, tr[:, 0], g)
        np.add.at(gR, tr[:, 1], g)
        np.add.at(gE, tr[:, 2], -g)
    return float(loss.mean()), gE, gR


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _bilinear_grads(E, R, pos, neg):
    gE = np.zeros_like(E)
    gR = np.zeros_like(R)
    total = 0.0
    # positives carry label +1, negatives -1; loss softplus(-y * s)
    for tr, y in ((pos, 1.0), (neg, -1.0)):
        h, r, t = E[tr[:, 0]], R[tr[:, 1]], E[tr[:, 2]]
        s = np.sum(h * r * t, axis=1)
        total += float(_softplus(-y * s).sum())
        coef = (-y * _sigmoid(-y * s) / (2 * len(pos)))[:, None]
        np.add.at(gE, tr[:, 0], coef * r * t)
        np.add.at(gR, tr[:, 1], coef * h * t)
        np.add.at(gE, tr[:, 2], coef * h * r)
    return total / (2 * len(pos)), gE, gR


def train(
    kg: KnowledgeGraph,
    scorer: str,
    dim: int = DEFAULT_DIM,
    epochs: int | None = None,
    lr: float = DEFAULT_LR,
    weight_decay: float = DEFAULT_WEIGHT_DECAY,
    rng: np.random.Generator | None = None,
    triples=None,
    batch_size: int | None = DEFAULT_BATCH_SIZE,
    normalize_entities: bool = True,
) -> EmbeddingModel:
    """Fit entity and relation vectors for ``kg``.

    ``triples`` restricts training to a subset of ``kg``'s triples (an LP
    train split); vectors still exist for every registered entity. One
    uniformly corrupted negative (head or tail, equal odds) is drawn per
    positive and epoch. Mean loss per epoch is kept in ``loss_history``.
    """
    if scorer not in SCORERS:
        raise ValueError(f"unknown scorer {scorer!r}; choose from {SCORERS}")
    rng = rng if rng is not None else np.random.default_rng(0)
    epochs = DEFAULT_EPOCHS[scorer] if epochs is None else epochs
    data = training_triples(kg) if triples is None else [tr for tr in triples if not isinstance(tr[2], Literal)]
    if not data:
        raise EmptyGraphError("no entity-valued triples to train on")
    data = np.asarray(data, dtype=np.int64)
    if len(kg.entities) < 2:
        raise EmptyGraphError("need at least two entities to draw negatives")
    model = init_model(kg, scorer, dim, rng)
    E, R = model.entity_vectors, model.relation_vectors
    opt = _AdamW([E.shape, R.shape], lr, weight_decay)
    grads = _translation_grads if scorer == "translation" else _bilinear_grads
    n = len(data)
    batch_size = n if batch_size is None else batch_size
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            pos = data[order[start:start + batch_size]]
            neg = _corrupt(pos, len(E), rng)
            loss, gE, gR = grads(E, R, pos, neg)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"loss became {loss}")
            with np.errstate(invalid="ignore", over="ignore"):
                opt.step([E, R], [gE, gR])
            if not (np.all(np.isfinite(E)) and np.all(np.isfinite(R))):
                raise TrainingDivergedError("parameters became non-finite")
            if normalize_entities:
                E /= np.maximum(np.linalg.norm(E, axis=1, keepdims=True), 1e-12)
            epoch_loss += loss * len(pos)
        model.loss_history.append(epoch_loss / n)
    return model


def tail_loss_trend(model: EmbeddingModel, share: float = 0.1) -> float:
    """Least-squares slope of the loss over the final ``share`` of epochs."""
    hist = np.asarray(model.loss_history)
    tail = hist[-max(2, int(round(share * len(hist)))):]
    if len(tail) < 2:
        return 0.0
    return float(np.polyfit(np.arange(len(tail)), tail, 1)[0])


def random_model(kg: KnowledgeGraph, scorer: str, dim: int, rng: np.random.Generator) -> EmbeddingModel:
    """Untrained model with the training initialisation; the random baseline."""
    return init_model(kg, scorer, dim, rng)
