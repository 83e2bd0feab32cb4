"""Parameter-quality space: value ranges, causal dependency functions and
the space builder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, DomainError, SingularityError

KINDS = ("linear", "quadratic", "logarithmic")

# relative slack when checking membership of floating point values in a range
_DOMAIN_EPS = 1e-12
_FLAT_SLOPE = 1e-12


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ValueRange:
    min: float
    max: float

    def __post_init__(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or not self.min < self.max:
            raise DomainError(f"invalid range [{self.min}, {self.max}]")

    def width(self) -> float:
        return self.max - self.min

    def contains(self, x: float, eps: float = _DOMAIN_EPS) -> bool:
        slack = eps * self.width()
        return self.min - slack <= x <= self.max + slack

    def clamp(self, x):
        return np.clip(x, self.min, self.max)

    def to_list(self) -> list[float]:
        return [self.min, self.max]

    @classmethod
    def from_list(cls, pair: Iterable[float]) -> "ValueRange":
        lo, hi = pair
        return cls(float(lo), float(hi))


@dataclass(frozen=True)
class Parameter:
    id: int
    name: str
    domain: ValueRange


@dataclass(frozen=True)
class Quality:
    id: int
    name: str
    domain: ValueRange


@dataclass(frozen=True)
class DependencyFunction:
    """Strictly monotone map from a parameter range onto a quality range.

    Coefficients per kind:

    * linear: ``(a, b)`` with ``f(p) = a*p + b``
    * quadratic: ``(a, v, c)`` with ``f(p) = a*(p - v)**2 + c`` and the
      vertex ``v`` at or outside one end of the source range
    * logarithmic: ``(a, s, b)`` with ``f(p) = a*ln(p - s) + b``, ``s < min(source)``
    """

    kind: str
    coefficients: tuple[float, ...]
    source_domain: ValueRange
    target_domain: ValueRange

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dependency kind {self.kind!r}")
        src = self.source_domain
        if self.kind == "linear":
            if self.coefficients[0] == 0:
                raise ValueError("linear slope must be non-zero")
        elif self.kind == "quadratic":
            a, v, _ = self.coefficients
            if a == 0 or src.min < v < src.max:
                raise ValueError("quadratic vertex must lie outside the open source range")
        else:
            a, s, _ = self.coefficients
            if a == 0 or s >= src.min:
                raise ValueError("logarithm shift must lie below the source range")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_endpoints(
        cls,
        kind: str,
        source: ValueRange,
        target: ValueRange,
        increasing: bool = True,
        offset: float = 0.5,
        vertex_below: bool = True,
    ) -> "DependencyFunction":
        """Solve coefficients so ``source`` endpoints land on ``target`` endpoints.

        ``offset`` places the quadratic vertex / logarithm pole at
        ``offset * width(source)`` outside the source range.
        """
        qa, qb = (target.min, target.max) if increasing else (target.max, target.min)
        if kind == "linear":
            a = (qb - qa) / source.width()
            return cls(kind, (a, qa - a * source.min), source, target)
        if kind == "quadratic":
            v = source.min - offset * source.width() if vertex_below else source.max + offset * source.width()
            g0, g1 = (source.min - v) ** 2, (source.max - v) ** 2
            a = (qb - qa) / (g1 - g0)
            return cls(kind, (a, v, qa - a * g0), source, target)
        if kind == "logarithmic":
            s = source.min - offset * source.width()
            if offset <= 0:
                raise ValueError("logarithmic offset must be positive")
            h0, h1 = math.log(source.min - s), math.log(source.max - s)
            a = (qb - qa) / (h1 - h0)
            return cls(kind, (a, s, qa - a * h0), source, target)
        raise ValueError(f"unknown dependency kind {kind!r}")

    # -- evaluation -------------------------------------------------------

    def _raw(self, p):
        c = self.coefficients
        if self.kind == "linear":
            return c[0] * p + c[1]
        if self.kind == "quadratic":
            return c[0] * (p - c[1]) ** 2 + c[2]
        return c[0] * np.log(p - c[1]) + c[2]

    def _raw_inverse(self, q):
        c = self.coefficients
        if self.kind == "linear":
            return (q - c[1]) / c[0]
        if self.kind == "quadratic":
            root = np.sqrt(np.maximum((q - c[2]) / c[0], 0.0))
            sign = 1.0 if c[1] <= self.source_domain.min else -1.0
            return c[1] + sign * root
        return c[1] + np.exp((q - c[2]) / c[0])

    def slope(self, p):
        c = self.coefficients
        if self.kind == "linear":
            return c[0] + 0.0 * p
        if self.kind == "quadratic":
            return 2.0 * c[0] * (p - c[1])
        return c[0] / (p - c[1])

    def is_increasing(self) -> bool:
        mid = 0.5 * (self.source_domain.min + self.source_domain.max)
        return bool(self.slope(mid) > 0)

    def forward(self, p_value: float) -> float:
        if not self.source_domain.contains(p_value):
            raise DomainError(f"{p_value} outside parameter range {self.source_domain.to_list()}")
        p = float(self.source_domain.clamp(p_value))
        return float(self.target_domain.clamp(self._raw(p)))

    def inverse(self, q_value: float) -> float:
        if not self.target_domain.contains(q_value):
            raise DomainError(f"{q_value} outside quality range {self.target_domain.to_list()}")
        q = float(self.target_domain.clamp(q_value))
        return float(self.source_domain.clamp(self._raw_inverse(q)))

    def inverse_derivative(self, q_value: float) -> float:
        p = self.inverse(q_value)
        d = float(self.slope(p))
        if abs(d) < _FLAT_SLOPE:
            raise SingularityError(f"{self.kind} dependency is flat at q={q_value}")
        return 1.0 / d

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "coefficients": list(self.coefficients),
            "source_domain": self.source_domain.to_list(),
            "target_domain": self.target_domain.to_list(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DependencyFunction":
        return cls(
            d["kind"],
            tuple(float(x) for x in d["coefficients"]),
            ValueRange.from_list(d["source_domain"]),
            ValueRange.from_list(d["target_domain"]),
        )


def forward(f: DependencyFunction, p_value: float) -> float:
    return f.forward(p_value)


def inverse(f: DependencyFunction, q_value: float) -> float:
    return f.inverse(q_value)


def inverse_derivative(f: DependencyFunction, q_value: float) -> float:
    """Slope of the inverse dependency, ``1 / f'(f^-1(q))``."""
    return f.inverse_derivative(q_value)


@dataclass(frozen=True, eq=True)
class PQSpace:
    parameters: tuple[Parameter, ...]
    qualities: tuple[Quality, ...]
    dependencies: Mapping[tuple[int, int], DependencyFunction] = field(hash=False)
    known: frozenset = frozenset()

    def __post_init__(self):
        for i, p in enumerate(self.parameters):
            if p.id != i:
                raise ValueError("parameter ids must be contiguous from 0")
        for j, q in enumerate(self.qualities):
            if q.id != j:
                raise ValueError("quality ids must be contiguous from 0")
        if not set(self.known) <= set(self.dependencies):
            raise ValueError("known dependencies must be a subset of all dependencies")

    def affecting(self, j: int) -> list[int]:
        """Parameters with a causal dependency on quality ``j``."""
        return sorted(k for k, jj in self.dependencies if jj == j)

    def affected(self, k: int) -> list[int]:
        return sorted(j for kk, j in self.dependencies if kk == k)

    def known_affected(self, k: int) -> list[int]:
        return sorted(j for kk, j in self.known if kk == k)

    def parameters_with_dependencies(self) -> list[int]:
        return sorted({k for k, _ in self.dependencies})

    def to_dict(self) -> dict:
        return {
            "parameters": [{"id": p.id, "name": p.name, "domain": p.domain.to_list()} for p in self.parameters],
            "qualities": [{"id": q.id, "name": q.name, "domain": q.domain.to_list()} for q in self.qualities],
            "dependencies": [
                {"parameter": k, "quality": j, "known": (k, j) in self.known, **self.dependencies[k, j].to_dict()}
                for k, j in sorted(self.dependencies)
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PQSpace":
        params = tuple(Parameter(p["id"], p["name"], ValueRange.from_list(p["domain"])) for p in d["parameters"])
        quals = tuple(Quality(q["id"], q["name"], ValueRange.from_list(q["domain"])) for q in d["qualities"])
        deps, known = {}, set()
        for e in d["dependencies"]:
            key = (int(e["parameter"]), int(e["quality"]))
            deps[key] = DependencyFunction.from_dict(e)
            if e["known"]:
                known.add(key)
        return cls(params, quals, deps, frozenset(known))


def _draw_fanouts(rng: np.random.Generator, n_params: int, lo: int, hi: int, target: int) -> list[int]:
    # per-parameter bounds take precedence over the global count
    fan = [int(x) for x in rng.integers(lo, hi + 1, size=n_params)]
    total = sum(fan)
    while total > target:
        shrinkable = [k for k in range(n_params) if fan[k] > lo]
        if shrinkable:
            fan[shrinkable[rng.integers(len(shrinkable))]] -= 1
            total -= 1
            continue
        active = [k for k in range(n_params) if fan[k] > 0]
        if not active or abs(total - lo - target) >= abs(total - target):
            break
        fan[active[rng.integers(len(active))]] = 0
        total -= lo
    while total < target:
        growable = [k for k in range(n_params) if 0 < fan[k] < hi]
        if growable:
            fan[growable[rng.integers(len(growable))]] += 1
            total += 1
            continue
        idle = [k for k in range(n_params) if fan[k] == 0]
        if not idle or abs(total + lo - target) >= abs(total - target):
            break
        fan[idle[rng.integers(len(idle))]] = lo
        total += lo
    return fan


def build_pq_space(config, rng: np.random.Generator) -> PQSpace:
    """Sample causal and known dependencies for ``config``."""
    n_p, n_q = config.p_count, config.q_count
    lo, hi = config.fanout_min, min(config.fanout_max, n_q)
    if lo > n_q:
        raise ConfigError([("fanout_min", f"{lo} exceeds the number of qualities {n_q}")])
    target = round_half_up(config.pq_causal_share * n_p * n_q)
    if target > n_p * hi:
        raise ConfigError([("pq_causal_share", f"{target} dependencies exceed fan-out capacity {n_p * hi}")])
    if 0 < target < lo:
        raise ConfigError([("pq_causal_share", f"{target} dependencies cannot satisfy fanout_min={lo}")])

    p_domains = config.parameter_ranges()
    q_domains = config.quality_ranges()
    parameters = tuple(Parameter(k, f"p_{k}", p_domains[k]) for k in range(n_p))
    qualities = tuple(Quality(j, f"q_{j}", q_domains[j]) for j in range(n_q))

    fan = _draw_fanouts(rng, n_p, lo, hi, target) if target > 0 else [0] * n_p
    pairs = []
    for k in range(n_p):
        if fan[k]:
            chosen = rng.choice(n_q, size=fan[k], replace=False)
            pairs.extend((k, int(j)) for j in sorted(chosen))

    kinds = [k for k in KINDS if k in set(config.function_kinds)]
    deps = {}
    for k, j in pairs:
        kind = kinds[int(rng.integers(len(kinds)))]
        increasing = bool(rng.random() < 0.5)
        offset = float(rng.uniform(0.05, 1.0))
        vertex_below = bool(rng.random() < 0.5)
        deps[k, j] = DependencyFunction.from_endpoints(
            kind, parameters[k].domain, qualities[j].domain, increasing, offset, vertex_below
        )

    n_known = round_half_up(config.pq_known_share * len(pairs))
    picked = rng.choice(len(pairs), size=n_known, replace=False) if n_known else []
    known = frozenset(pairs[int(i)] for i in picked)
    return PQSpace(parameters, qualities, deps, known)
