"""Online allocation mechanisms as per-round randomized decision rules.

A decision rule maps ``(instance, bids, state, item)`` to a branch list
``[(agent_or_DISCARD, probability), ...]`` whose probabilities sum to 1.
Engines own the state update: the chosen agent's count goes up by one.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from .core import DISCARD, BidProfile, Instance

Branch = tuple[Optional[int], Fraction]
DecisionRule = Callable[[Instance, BidProfile, "MechanismState", int], list[Branch]]

KINDS = ("like", "balanced-like", "maximum-like", "ranking", "random")


@dataclass(frozen=True)
class MechanismState:
    counts: tuple[int, ...]
    round: int = 0
    priority: Optional[tuple[int, ...]] = None

    @classmethod
    def initial(cls, n: int, priority: Optional[Sequence[int]] = None) -> "MechanismState":
        return cls((0,) * n, 0, tuple(priority) if priority is not None else None)

    @property
    def served(self) -> tuple[bool, ...]:
        return tuple(c > 0 for c in self.counts)

    def after(self, agent: Optional[int]) -> "MechanismState":
        if agent is DISCARD:
            return replace(self, round=self.round + 1)
        counts = list(self.counts)
        counts[agent] += 1
        return replace(self, counts=tuple(counts), round=self.round + 1)


def _uniform(agents: Sequence[int]) -> list[Branch]:
    if not agents:
        return [(DISCARD, Fraction(1))]
    p = Fraction(1, len(agents))
    return [(a, p) for a in agents]


def _positive_bidders(bids: BidProfile, j: int) -> list[int]:
    return [i for i, row in enumerate(bids.bids) if row[j] > 0]


def like_rule(inst: Instance, bids: BidProfile, state: MechanismState, j: int) -> list[Branch]:
    return _uniform(_positive_bidders(bids, j))


def balanced_like_rule(inst: Instance, bids: BidProfile, state: MechanismState, j: int) -> list[Branch]:
    bidders = _positive_bidders(bids, j)
    if not bidders:
        return _uniform(())
    fewest = min(state.counts[i] for i in bidders)
    return _uniform([i for i in bidders if state.counts[i] == fewest])


def maximum_like_rule(inst: Instance, bids: BidProfile, state: MechanismState, j: int) -> list[Branch]:
    column = [row[j] for row in bids.bids]
    best = max(column)
    if best == 0:
        return _uniform(())
    return _uniform([i for i, b in enumerate(column) if b == best])


def ranking_rule(inst: Instance, bids: BidProfile, state: MechanismState, j: int) -> list[Branch]:
    if state.priority is None:
        raise ValueError("ranking needs a priority ordering in the mechanism state")
    for i in state.priority:
        if bids.bids[i][j] > 0 and state.counts[i] == 0:
            return [(i, Fraction(1))]
    return [(DISCARD, Fraction(1))]


def random_rule(inst: Instance, bids: BidProfile, state: MechanismState, j: int) -> list[Branch]:
    return _uniform([i for i in _positive_bidders(bids, j) if state.counts[i] == 0])


def advised_rule(base: DecisionRule, advice: Mapping[int, int]) -> DecisionRule:
    """Wrap ``base`` so rounds present in ``advice`` go to the advised agent."""

    def rule(inst: Instance, bids: BidProfile, state: MechanismState, j: int) -> list[Branch]:
        agent = advice.get(state.round)
        if agent is not None:
            return [(agent, Fraction(1))]
        return base(inst, bids, state, j)

    return rule


_RULES: dict[str, DecisionRule] = {
    "like": like_rule,
    "balanced-like": balanced_like_rule,
    "maximum-like": maximum_like_rule,
    "ranking": ranking_rule,
    "random": random_rule,
}


@dataclass(frozen=True)
class Mechanism:
    """A named decision rule, optionally reading an advice tape.

    ``advice`` maps a round index (position in the arrival order) to the
    advised agent. ``kind`` names the base rule so the Monte Carlo engine can
    use its vectorized version.
    """

    kind: str
    advice: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in _RULES:
            raise ValueError(f"unknown mechanism {self.kind!r}; choose from {', '.join(KINDS)}")
        object.__setattr__(self, "advice", tuple(sorted((int(r), int(a)) for r, a in self.advice)))
        rounds = [r for r, _ in self.advice]
        if len(set(rounds)) != len(rounds):
            raise ValueError("a round is advised twice")

    @property
    def name(self) -> str:
        return f"advised:{self.kind}" if self.advice else self.kind

    @property
    def needs_priority(self) -> bool:
        return self.kind == "ranking"

    @property
    def advice_map(self) -> dict[int, int]:
        return dict(self.advice)

    @property
    def rule(self) -> DecisionRule:
        base = _RULES[self.kind]
        return advised_rule(base, self.advice_map) if self.advice else base

    def fully_advised(self, m: int) -> bool:
        return len(self.advice) == m


def advised(base: Mechanism | str, tape) -> Mechanism:
    """Advised version of ``base`` reading ``tape`` (an AdviceTape or (round, agent) pairs)."""
    kind = base.kind if isinstance(base, Mechanism) else base
    pairs = tape.decoded if hasattr(tape, "decoded") else tape
    return Mechanism(kind, tuple(pairs))


def get_mechanism(identifier: str, tape=None) -> Mechanism:
    """Resolve a CLI identifier such as ``ranking`` or ``advised:like``."""
    if identifier.startswith("advised:"):
        if tape is None:
            raise ValueError(f"{identifier} needs an advice tape")
        return advised(identifier.split(":", 1)[1], tape)
    return Mechanism(identifier)
