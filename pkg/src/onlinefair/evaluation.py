"""Exact and sampled evaluation of mechanisms.

Three engines:

* ``exact-full`` enumerates every branch and returns the distribution over
  allocations (Ranking: every priority order, weight 1/n!).
* ``exact-compressed`` propagates a distribution over mechanism states
  (count vectors, plus the priority for Ranking) round by round and
  accumulates the assignment matrix directly.
* ``monte-carlo`` runs vectorized trials with numpy in float arithmetic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .core import (
    DISCARD,
    AllocationDistribution,
    AssignmentMatrix,
    BidProfile,
    Instance,
    WelfareReport,
)
from .instances import like_adversary_response
from .mechanisms import Mechanism, MechanismState

ENGINES = ("exact-full", "exact-compressed", "monte-carlo")
RANKING_EXACT_MAX_N = 9
DEFAULT_BRANCH_CAP = 200_000
DEFAULT_STATE_CAP = 500_000
MC_BATCH = 4096


class EngineCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    engine: str = "exact-compressed"
    branch_cap: int = DEFAULT_BRANCH_CAP
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {', '.join(ENGINES)}")
        if self.branch_cap <= 0:
            raise ValueError("branch_cap must be positive")
        if self.engine == "monte-carlo" and self.samples <= 0:
            raise ValueError("samples must be positive")


@dataclass(frozen=True)
class MonteCarloReport:
    es: float
    uw: float
    ew: float
    per_agent: tuple[float, ...]
    es_stderr: float
    uw_stderr: float
    ew_stderr: float
    per_agent_stderr: tuple[float, ...]
    samples: int
    seed: int

    def value(self, objective) -> float:
        return {"ES": self.es, "UW": self.uw, "EW": self.ew}[getattr(objective, "value", objective)]

    def stderr(self, objective) -> float:
        key = getattr(objective, "value", objective)
        return {"ES": self.es_stderr, "UW": self.uw_stderr, "EW": self.ew_stderr}[key]

    def to_dict(self) -> dict:
        return {
            "es": self.es,
            "uw": self.uw,
            "ew": self.ew,
            "per_agent": list(self.per_agent),
            "es_stderr": self.es_stderr,
            "uw_stderr": self.uw_stderr,
            "ew_stderr": self.ew_stderr,
            "samples": self.samples,
            "seed": self.seed,
        }


def _bids_for(inst: Instance, bids: Optional[BidProfile]) -> BidProfile:
    if bids is None:
        return BidProfile.sincere(inst)
    bids.check(inst)
    return bids


def _initial_states(inst: Instance, mechanism: Mechanism) -> dict[MechanismState, Fraction]:
    if not mechanism.needs_priority or mechanism.fully_advised(inst.m):
        # a fully advised run never consults the priority
        priority = tuple(range(inst.n)) if mechanism.needs_priority else None
        return {MechanismState.initial(inst.n, priority): Fraction(1)}
    if inst.n > RANKING_EXACT_MAX_N:
        raise EngineCapExceeded(
            f"exact Ranking enumerates n! priority orders and is capped at n<={RANKING_EXACT_MAX_N}; "
            "use the monte-carlo engine"
        )
    w = Fraction(1, math.factorial(inst.n))
    return {MechanismState.initial(inst.n, perm): w for perm in itertools.permutations(range(inst.n))}


def evaluate_exact_full(
    inst: Instance,
    mechanism: Mechanism,
    bids: Optional[BidProfile] = None,
    branch_cap: int = DEFAULT_BRANCH_CAP,
) -> AllocationDistribution:
    """Exact distribution over allocations by explicit branch enumeration."""
    bids = _bids_for(inst, bids)
    rule = mechanism.rule
    leaves: list[tuple[tuple, Fraction]] = []
    stack = [(state, (), p) for state, p in _initial_states(inst, mechanism).items()]
    while stack:
        state, taken, prob = stack.pop()
        if state.round == inst.m:
            leaves.append((taken, prob))
            if len(leaves) > branch_cap:
                raise EngineCapExceeded(
                    f"more than {branch_cap} branches; use the exact-compressed or monte-carlo engine"
                )
            continue
        j = inst.order[state.round]
        for agent, q in reversed(rule(inst, bids, state, j)):
            stack.append((state.after(agent), taken + ((j, agent),), prob * q))
    weighted = []
    for taken, prob in leaves:
        a = [DISCARD] * inst.m
        for j, agent in taken:
            a[j] = agent
        weighted.append((tuple(a), prob))
    return AllocationDistribution.from_weights(weighted)


def propagate(
    inst: Instance,
    mechanism: Mechanism,
    states: dict[MechanismState, Fraction],
    bids: Optional[BidProfile] = None,
    stop: Optional[int] = None,
    p: Optional[list[list[Fraction]]] = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> dict[MechanismState, Fraction]:
    """Advance a state distribution until round ``stop`` (default: the end).

    All states must share the same round. Receipt probabilities are added
    into ``p`` when given.
    """
    bids = _bids_for(inst, bids)
    rule = mechanism.rule
    stop = inst.m if stop is None else stop
    rounds = {s.round for s in states}
    if len(rounds) > 1:
        raise ValueError("states must share a round")
    current = dict(states)
    r = rounds.pop() if rounds else stop
    while r < stop:
        j = inst.order[r]
        nxt: dict[MechanismState, Fraction] = {}
        for state, prob in current.items():
            for agent, q in rule(inst, bids, state, j):
                w = prob * q
                if agent is not DISCARD and p is not None:
                    p[agent][j] += w
                child = state.after(agent)
                nxt[child] = nxt.get(child, Fraction(0)) + w
        if len(nxt) > state_cap:
            raise EngineCapExceeded(f"more than {state_cap} states; use the monte-carlo engine")
        current = nxt
        r += 1
    return current


def expected_served(states: dict[MechanismState, Fraction]) -> Fraction:
    return sum((prob * sum(s.served) for s, prob in states.items()), Fraction(0))


def evaluate_exact_compressed(
    inst: Instance,
    mechanism: Mechanism,
    bids: Optional[BidProfile] = None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> tuple[WelfareReport, AssignmentMatrix]:
    """Exact welfare and assignment matrix by state-distribution propagation."""
    p = [[Fraction(0)] * inst.m for _ in range(inst.n)]
    final = propagate(inst, mechanism, _initial_states(inst, mechanism), bids, p=p, state_cap=state_cap)
    matrix = AssignmentMatrix(tuple(tuple(row) for row in p))
    return WelfareReport.from_parts(expected_served(final), matrix.expected_utilities(inst)), matrix


def completion_es(inst: Instance, mechanism: Mechanism, counts, start_round: int) -> Fraction:
    """Expected matching size when ``mechanism`` completes a fixed prefix allocation.

    ``counts`` are the per-agent item counts after the first ``start_round``
    arrivals.
    """
    if mechanism.needs_priority:
        states = {
            MechanismState(tuple(counts), start_round, s.priority): prob
            for s, prob in _initial_states(inst, mechanism).items()
        }
    else:
        states = {MechanismState(tuple(counts), start_round): Fraction(1)}
    return expected_served(propagate(inst, mechanism, states))


# --- Monte Carlo -------------------------------------------------------------

RoundFn = Callable[[int, np.ndarray], tuple[Optional[int], np.ndarray, np.ndarray, np.ndarray]]


def _choose(kind: str, pos, top, counts, prio, rng) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized decision for one round across a batch of trials."""
    B, n = counts.shape
    if kind in ("like", "maximum-like") and pos.ndim == 1:
        cands = np.flatnonzero(pos if kind == "like" else top)
        if cands.size == 0:
            return np.zeros(B, dtype=np.intp), np.zeros(B, dtype=bool)
        return cands[rng.integers(cands.size, size=B)], np.ones(B, dtype=bool)
    pos = np.broadcast_to(pos, (B, n))
    if kind == "like":
        cand = pos
    elif kind == "maximum-like":
        cand = np.broadcast_to(top, (B, n))
    elif kind == "balanced-like":
        masked = np.where(pos, counts, np.iinfo(counts.dtype).max)
        cand = pos & (counts == masked.min(axis=1, keepdims=True))
    else:  # random, ranking
        cand = pos & (counts == 0)
    if kind == "ranking":
        keys = np.where(cand, -prio, -np.inf)
    else:
        keys = np.where(cand, rng.random((B, n)), -1.0)
    return keys.argmax(axis=1), cand.any(axis=1)


def _simulate(
    kind: str,
    n: int,
    m: int,
    round_fn: RoundFn,
    samples: int,
    seed: int,
) -> MonteCarloReport:
    sums = {"es": 0.0, "es2": 0.0, "uw": 0.0, "uw2": 0.0}
    pa = np.zeros(n)
    pa2 = np.zeros(n)
    for b, start in enumerate(range(0, samples, MC_BATCH)):
        B = min(MC_BATCH, samples - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        counts = np.zeros((B, n), dtype=np.int64)
        util = np.zeros((B, n))
        prio = rng.random((B, n)) if kind == "ranking" else None
        rows = np.arange(B)
        for r in range(m):
            advised, pos, top, uvec = round_fn(r, counts)
            if advised is not None:
                counts[:, advised] += 1
                util[:, advised] += np.broadcast_to(uvec, (B, n))[:, advised]
                continue
            choice, ok = _choose(kind, pos, top, counts, prio, rng)
            rr, cc = rows[ok], choice[ok]
            counts[rr, cc] += 1
            util[rr, cc] += np.broadcast_to(uvec, (B, n))[rr, cc]
        es_t = (counts > 0).sum(axis=1).astype(float)
        uw_t = util.sum(axis=1)
        sums["es"] += es_t.sum()
        sums["es2"] += (es_t**2).sum()
        sums["uw"] += uw_t.sum()
        sums["uw2"] += (uw_t**2).sum()
        pa += util.sum(axis=0)
        pa2 += (util**2).sum(axis=0)

    def mean_se(s, s2):
        mean = s / samples
        if samples < 2:
            return mean, 0.0
        var = max(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
        return mean, math.sqrt(var / samples)

    es, es_se = mean_se(sums["es"], sums["es2"])
    uw, uw_se = mean_se(sums["uw"], sums["uw2"])
    per = [mean_se(pa[i], pa2[i]) for i in range(n)]
    worst = min(range(n), key=lambda i: per[i][0])
    return MonteCarloReport(
        es, uw, per[worst][0], tuple(x for x, _ in per), es_se, uw_se, per[worst][1],
        tuple(s for _, s in per), samples, seed,
    )


def evaluate_monte_carlo(
    inst: Instance,
    mechanism: Mechanism,
    cfg: EngineConfig,
    bids: Optional[BidProfile] = None,
) -> MonteCarloReport:
    """Sampled welfare over ``cfg.samples`` trials.

    Trials are split into fixed-size batches; batch b draws from a generator
    seeded by ``(cfg.seed, b)``, so results depend only on seed and sample
    count.
    """
    bids = _bids_for(inst, bids)
    b = [[bool(x > 0) for x in row] for row in bids.bids]
    positive = np.array(b, dtype=bool)
    col_max = [max(row[j] for row in bids.bids) for j in range(inst.m)]
    top = np.array(
        [[bids.bids[i][j] == col_max[j] and col_max[j] > 0 for j in range(inst.m)] for i in range(inst.n)],
        dtype=bool,
    )
    u = np.array([[float(x) for x in row] for row in inst.utilities])
    advice = mechanism.advice_map

    def round_fn(r, counts):
        j = inst.order[r]
        return advice.get(r), positive[:, j], top[:, j], u[:, j]

    return _simulate(mechanism.kind, inst.n, inst.m, round_fn, cfg.samples, cfg.seed)


def evaluate(inst: Instance, mechanism: Mechanism, cfg: EngineConfig = EngineConfig(), bids=None):
    """Dispatch on ``cfg.engine``; exact engines return a WelfareReport."""
    from .core import welfare_of_distribution

    if cfg.engine == "exact-full":
        return welfare_of_distribution(inst, evaluate_exact_full(inst, mechanism, bids, cfg.branch_cap))
    if cfg.engine == "exact-compressed":
        return evaluate_exact_compressed(inst, mechanism, bids)[0]
    return evaluate_monte_carlo(inst, mechanism, cfg, bids)


# --- adaptive Like adversary ----------------------------------------------------


def _first_half_instance(n: int) -> Instance:
    return Instance([[1] * (n // 2) for _ in range(n)], name=f"like-adversary-first-half-{n}")


def exact_adaptive_like_adversary(mechanism: Mechanism, n: int) -> Fraction:
    """Exact expected matching size against the adaptive Like adversary."""
    if mechanism.advice:
        raise ValueError("the adaptive adversary is defined for unadvised mechanisms")
    half = n // 2
    first = _first_half_instance(n)
    mid = propagate(first, mechanism, _initial_states(first, mechanism))
    by_served: dict[tuple, dict[MechanismState, Fraction]] = {}
    for state, prob in mid.items():
        key = tuple(i for i, s in enumerate(state.served) if s)
        by_served.setdefault(key, {})[state] = prob
    total = Fraction(0)
    for served, states in by_served.items():
        full = like_adversary_response(n, served)
        total += expected_served(propagate(full, mechanism, states))
    assert all(s.round == half for s in mid)
    return total


def monte_carlo_adaptive_like_adversary(mechanism: Mechanism, n: int, cfg: EngineConfig) -> MonteCarloReport:
    """Sampled welfare against the adaptive Like adversary.

    After the first n/2 items (liked by everyone) each trial gets its own
    second half: item n/2 + t is liked only by the t-th agent in the list
    of served agents followed by unserved ones.
    """
    if mechanism.advice:
        raise ValueError("the adaptive adversary is defined for unadvised mechanisms")
    if n < 2 or n % 2:
        raise ValueError("n must be even")
    half = n // 2
    everyone = np.ones(n, dtype=bool)
    ones = np.ones(n)
    targets: dict[str, np.ndarray] = {}

    def round_fn(r, counts):
        if r < half:
            return None, everyone, everyone, ones
        if r == half:
            unserved = counts == 0
            key = unserved * n + np.arange(n)
            targets["t"] = np.argsort(key, axis=1, kind="stable")[:, :half]
        liker = targets["t"][:, r - half]
        pos = np.zeros(counts.shape, dtype=bool)
        pos[np.arange(len(liker)), liker] = True
        return None, pos, pos, pos.astype(float)

    return _simulate(mechanism.kind, n, n, round_fn, cfg.samples, cfg.seed)
