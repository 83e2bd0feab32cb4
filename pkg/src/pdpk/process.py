"""Production-process and parametrisation-process simulation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyTargetError, InitialisationError, NoAdjustableParameterError
from .pqspace import PQSpace

EXPLOITATIVE = "exploitative"
EXPLORATIVE = "explorative"
BEHAVIOURS = (EXPLOITATIVE, EXPLORATIVE)

SCORE_TOLERANCE = 1e-9
EXPLORE_STEP = 0.1
MAX_INIT_ATTEMPTS = 1000


@dataclass(frozen=True)
class ProcessIteration:
    index: int
    parametrisation: tuple[float, ...]
    qualities: tuple[float, ...]
    score: float


@dataclass(frozen=True)
class ParametrisationProcess:
    id: int
    behaviour: str
    q_opt: tuple[int, ...]
    threshold: float
    iterations: tuple[ProcessIteration, ...]
    converged: bool


@dataclass(frozen=True)
class ExplorationState:
    active_parameter: int
    direction: int
    last_score: Optional[float] = None


def compute_quality(space: PQSpace, rho: Sequence[float]) -> np.ndarray:
    """Mean influence of all affecting parameters on each quality.

    Qualities without any affecting parameter sit at their (defect-free)
    domain minimum.
    """
    sums = np.zeros(len(space.qualities))
    counts = np.zeros(len(space.qualities), dtype=int)
    for (k, j), f in space.dependencies.items():
        sums[j] += f.forward(rho[k])
        counts[j] += 1
    out = np.empty(len(space.qualities))
    for q in space.qualities:
        j = q.id
        out[j] = q.domain.clamp(sums[j] / counts[j]) if counts[j] else q.domain.min
    return out


def apply_noise(o: Sequence[float], sigma_rel: float, rng: np.random.Generator, space: PQSpace) -> np.ndarray:
    o = np.asarray(o, dtype=float)
    if sigma_rel == 0:
        return o.copy()
    lo = np.array([q.domain.min for q in space.qualities])
    hi = np.array([q.domain.max for q in space.qualities])
    noisy = o + rng.normal(0.0, 1.0, size=o.shape) * sigma_rel * (hi - lo)
    return np.clip(noisy, lo, hi)


def normalised_defect(space: PQSpace, j: int, value: float) -> float:
    d = space.qualities[j].domain
    return (value - d.min) / d.width()


def score(o: Sequence[float], q_opt, space: PQSpace) -> float:
    """Mean normalised defect over the targeted qualities; 0 is optimal."""
    q_opt = list(q_opt)
    if not q_opt:
        raise EmptyTargetError("q_opt must not be empty")
    return float(sum(normalised_defect(space, j, o[j]) for j in q_opt) / len(q_opt))


def exploit_step(space: PQSpace, prev: ProcessIteration, q_opt, t: float) -> np.ndarray:
    """Subtract the mean known inverse slope from each adjustable parameter."""
    rho = np.array(prev.parametrisation, dtype=float)
    targets = set(q_opt)
    for p in space.parameters:
        adj = [j for j in space.known_affected(p.id) if j in targets]
        if not adj:
            continue
        deltas = []
        for j in adj:
            o_prev = prev.qualities[j]
            if normalised_defect(space, j, o_prev) <= t:
                deltas.append(0.0)
            else:
                deltas.append(space.dependencies[p.id, j].inverse_derivative(o_prev))
        rho[p.id] = p.domain.clamp(rho[p.id] - sum(deltas) / len(deltas))
    return rho


def _adjustable(space: PQSpace) -> list[int]:
    ks = space.parameters_with_dependencies()
    if not ks:
        raise NoAdjustableParameterError("no parameter has a causal dependency")
    return ks


def initial_exploration_state(space: PQSpace, rng: np.random.Generator) -> ExplorationState:
    ks = _adjustable(space)
    k = ks[int(rng.integers(len(ks)))]
    return ExplorationState(k, 1 if rng.random() < 0.5 else -1, None)


def explore_step(
    space: PQSpace,
    prev: ProcessIteration,
    state: ExplorationState,
    t: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, ExplorationState]:
    """Trial-and-error adjustment of one parameter by a tenth of its range.

    The outcome of the previous adjustment (``state.last_score`` against
    ``prev.score``) decides whether to continue, reverse, or move on to the
    next parameter in round-robin order.
    """
    ks = _adjustable(space)
    k, direction = state.active_parameter, state.direction
    if state.last_score is not None:
        change = prev.score - state.last_score
        if change > SCORE_TOLERANCE:
            direction = -direction
        elif change >= -SCORE_TOLERANCE:
            pos = ks.index(k) if k in ks else -1
            k = ks[(pos + 1) % len(ks)]
            direction = 1 if rng.random() < 0.5 else -1
    rho = np.array(prev.parametrisation, dtype=float)
    dom = space.parameters[k].domain
    rho[k] = dom.clamp(rho[k] - (-EXPLORE_STEP * dom.width() * direction))
    return rho, ExplorationState(k, direction, prev.score)


def _observe(space, rho, config, rng, q_opt, index):
    o = apply_noise(compute_quality(space, rho), config.noise_sigma_rel, rng, space)
    return ProcessIteration(index, tuple(float(x) for x in rho), tuple(float(x) for x in o), score(o, q_opt, space))


def run_parametrisation_process(
    space: PQSpace,
    behaviour: str,
    config,
    rng: np.random.Generator,
    process_id: int = 0,
) -> ParametrisationProcess:
    if behaviour not in BEHAVIOURS:
        raise ValueError(f"unknown behaviour {behaviour!r}")
    _adjustable(space)
    t = config.threshold
    # qualities no parameter affects are pinned at their optimum and can never be erroneous
    affected = sorted({j for _, j in space.dependencies})
    size = min(int(rng.integers(config.q_opt_size_min, config.q_opt_size_max + 1)), len(affected))
    q_opt = tuple(sorted(affected[int(i)] for i in rng.choice(len(affected), size=size, replace=False)))

    lo = np.array([p.domain.min for p in space.parameters])
    hi = np.array([p.domain.max for p in space.parameters])
    for _ in range(MAX_INIT_ATTEMPTS):
        current = _observe(space, rng.uniform(lo, hi), config, rng, q_opt, 0)
        if current.score > t:
            break
    else:
        raise InitialisationError(
            f"no erroneous start found for q_opt={q_opt} after {MAX_INIT_ATTEMPTS} attempts (t={t})"
        )

    iterations = [current]
    state = initial_exploration_state(space, rng) if behaviour == EXPLORATIVE else None
    while current.score > t and len(iterations) < config.max_iterations:
        if behaviour == EXPLOITATIVE:
            rho = exploit_step(space, current, q_opt, t)
        else:
            rho, state = explore_step(space, current, state, t, rng)
        current = _observe(space, rho, config, rng, q_opt, len(iterations))
        iterations.append(current)
    return ParametrisationProcess(
        process_id, behaviour, q_opt, t, tuple(iterations), current.score <= t
    )


def generate_processes(space: PQSpace, config, rng: np.random.Generator) -> list[ParametrisationProcess]:
    """Run episodes until ``config.total_iterations`` iterations are recorded.

    The last episode is kept whole, so the total may overshoot by less than
    ``config.max_iterations``.
    """
    processes = []
    total = 0
    while total < config.total_iterations:
        behaviour = EXPLOITATIVE if rng.random() < config.exploitative_share else EXPLORATIVE
        proc = run_parametrisation_process(space, behaviour, config, rng, process_id=len(processes))
        processes.append(proc)
        total += len(proc.iterations)
    return processes
