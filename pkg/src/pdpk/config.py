"""Generator configuration and its JSON loader."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Any

from .errors import ConfigError, DomainError
from .pqspace import KINDS, ValueRange

CONDITION_STRATEGIES = ("fixed_count", "freedman_diaconis")


@dataclass(frozen=True)
class GeneratorConfig:
    """All knobs of the generator. Defaults reproduce the benchmark dataset."""

    seed: int = 42
    p_count: int = 46
    q_count: int = 16
    pq_causal_share: float = 0.10
    pq_known_share: float = 0.75
    fanout_min: int = 1
    fanout_max: int = 14
    # either one [min, max] pair shared by every entry or one pair per entry
    parameter_domains: Any = (0.0, 100.0)
    quality_domains: Any = (0.0, 10.0)
    function_kinds: tuple = KINDS
    threshold: float = 0.25
    max_iterations: int = 15
    total_iterations: int = 500
    exploitative_share: float = 0.5
    q_opt_size_min: int = 1
    q_opt_size_max: int = 2
    noise_sigma_rel: float = 0.0
    condition_strategy: str = "fixed_count"
    condition_bins: int = 1
    lp_test_fraction: float = 0.2
    downstream_test_fraction: float = 0.2

    def __post_init__(self):
        # JSON yields lists; store tuples so equal configs compare equal
        for key in ("parameter_domains", "quality_domains", "function_kinds"):
            object.__setattr__(self, key, _tupleize(getattr(self, key)))
        problems = validate(self)
        if problems:
            raise ConfigError(problems)

    def parameter_ranges(self) -> list[ValueRange]:
        return _expand_ranges(self.parameter_domains, self.p_count)

    def quality_ranges(self) -> list[ValueRange]:
        return _expand_ranges(self.quality_domains, self.q_count)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("parameter_domains", "quality_domains", "function_kinds"):
            d[key] = _listify(d[key])
        return d

    def replace(self, **changes) -> "GeneratorConfig":
        return dataclasses.replace(self, **changes)


def _listify(x):
    if isinstance(x, (list, tuple)):
        return [_listify(v) for v in x]
    return x


def _tupleize(x):
    if isinstance(x, (list, tuple)):
        return tuple(_tupleize(v) for v in x)
    return x


def _is_pair(x) -> bool:
    return isinstance(x, (list, tuple)) and len(x) == 2 and all(_is_number(v) for v in x)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _expand_ranges(spec, count: int) -> list[ValueRange]:
    if _is_pair(spec):
        return [ValueRange(float(spec[0]), float(spec[1]))] * count
    return [ValueRange(float(a), float(b)) for a, b in spec]


def _check_ranges(name: str, spec, count) -> list:
    if _is_pair(spec):
        entries = [(name, spec)]
    elif isinstance(spec, (list, tuple)) and all(_is_pair(x) for x in spec):
        if isinstance(count, int) and len(spec) != count:
            return [(name, f"expected {count} ranges, got {len(spec)}")]
        entries = [(f"{name}[{i}]", x) for i, x in enumerate(spec)]
    else:
        return [(name, "expected [min, max] or a list of [min, max] pairs")]
    problems = []
    for path, (lo, hi) in entries:
        try:
            ValueRange(float(lo), float(hi))
        except DomainError:
            problems.append((path, f"min must be < max, got [{lo}, {hi}]"))
    return problems


_INT_FIELDS = ("seed", "p_count", "q_count", "fanout_min", "fanout_max", "max_iterations",
               "total_iterations", "q_opt_size_min", "q_opt_size_max", "condition_bins")
_SHARE_FIELDS = ("pq_causal_share", "pq_known_share", "exploitative_share", "threshold")
_OPEN_FRACTIONS = ("lp_test_fraction", "downstream_test_fraction")


def validate(cfg: GeneratorConfig) -> list:
    problems = []
    for name in _INT_FIELDS:
        v = getattr(cfg, name)
        if not isinstance(v, int) or isinstance(v, bool):
            problems.append((name, f"expected integer, got {v!r}"))
    for name in _SHARE_FIELDS + _OPEN_FRACTIONS + ("noise_sigma_rel",):
        v = getattr(cfg, name)
        if not _is_number(v) or not math.isfinite(v):
            problems.append((name, f"expected number, got {v!r}"))
    if problems:
        return problems

    for name in _SHARE_FIELDS:
        if not 0.0 <= getattr(cfg, name) <= 1.0:
            problems.append((name, "must lie in [0, 1]"))
    for name in _OPEN_FRACTIONS:
        if not 0.0 < getattr(cfg, name) < 1.0:
            problems.append((name, "must lie in (0, 1)"))
    if cfg.noise_sigma_rel < 0:
        problems.append(("noise_sigma_rel", "must be >= 0"))
    for name in ("p_count", "q_count", "max_iterations", "condition_bins"):
        if getattr(cfg, name) < 1:
            problems.append((name, "must be >= 1"))
    if cfg.fanout_min < 1:
        problems.append(("fanout_min", "must be >= 1"))
    if cfg.fanout_min > cfg.fanout_max:
        problems.append(("fanout_max", "must be >= fanout_min"))
    if cfg.fanout_max > cfg.q_count:
        problems.append(("fanout_max", f"must be <= q_count ({cfg.q_count})"))
    if cfg.total_iterations < cfg.max_iterations:
        problems.append(("total_iterations", "must be >= max_iterations"))
    if not 1 <= cfg.q_opt_size_min <= cfg.q_opt_size_max <= cfg.q_count:
        problems.append(("q_opt_size_max", "need 1 <= q_opt_size_min <= q_opt_size_max <= q_count"))
    kinds = cfg.function_kinds
    if not isinstance(kinds, (list, tuple)) or not kinds or any(k not in KINDS for k in kinds):
        problems.append(("function_kinds", f"non-empty subset of {list(KINDS)} required"))
    if cfg.condition_strategy not in CONDITION_STRATEGIES:
        problems.append(("condition_strategy", f"one of {list(CONDITION_STRATEGIES)}"))
    problems += _check_ranges("parameter_domains", cfg.parameter_domains, cfg.p_count)
    problems += _check_ranges("quality_domains", cfg.quality_domains, cfg.q_count)
    return problems


def config_fields() -> dict[str, Any]:
    """Config keys mapped to their defaults, in declaration order."""
    return GeneratorConfig().to_dict()


def load_config(text: str) -> GeneratorConfig:
    """Parse a JSON document; missing keys fall back to the benchmark defaults."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"malformed JSON: {exc}")]) from exc
    if not isinstance(data, dict):
        raise ConfigError([("", "top-level JSON value must be an object")])
    known = {f.name for f in dataclasses.fields(GeneratorConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError([(k, "unknown key") for k in unknown])
    return GeneratorConfig(**data)
