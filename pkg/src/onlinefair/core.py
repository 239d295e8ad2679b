"""Domain types and welfare objectives for online fair division.

All quantities on exact paths are :class:`fractions.Fraction`; floats only
appear in the Monte Carlo engine.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

Rational = Fraction

#: Marker for an item that no agent receives.
DISCARD = None

#: Distinguished value for an unbounded ratio (achieved welfare of 0).
INFINITE = math.inf

# An allocation maps item index -> agent index, or DISCARD.
Allocation = tuple[Optional[int], ...]
Matrix = tuple[tuple[Fraction, ...], ...]


class Objective(str, enum.Enum):
    ES = "ES"
    UW = "UW"
    EW = "EW"


def to_rational(value: Union[int, str, Fraction]) -> Fraction:
    """Parse an integer, a ``"p/q"`` string or a Fraction. Floats are rejected."""
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"exact rational expected, got {value!r}")
    return Fraction(value)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _as_matrix(rows: Iterable[Iterable]) -> Matrix:
    return tuple(tuple(to_rational(v) for v in row) for row in rows)


@dataclass(frozen=True)
class Instance:
    """Agents, items, a utility matrix ``utilities[i][j]`` and an arrival order."""

    utilities: Matrix
    order: tuple[int, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "utilities", _as_matrix(self.utilities))
        if not self.utilities or not self.utilities[0]:
            raise ValueError("instance needs at least one agent and one item")
        m = len(self.utilities[0])
        if any(len(row) != m for row in self.utilities):
            raise ValueError("ragged utility matrix")
        order = tuple(self.order) if self.order else tuple(range(m))
        if sorted(order) != list(range(m)):
            raise ValueError(f"arrival order {order} is not a permutation of 0..{m - 1}")
        object.__setattr__(self, "order", order)
        for i, row in enumerate(self.utilities):
            if any(u < 0 for u in row):
                raise ValueError("utilities must be non-negative")
            if not any(u > 0 for u in row):
                raise ValueError(f"agent {i} likes no item")
        for j in range(m):
            if not any(row[j] > 0 for row in self.utilities):
                raise ValueError(f"item {j} is liked by no agent")

    @property
    def n(self) -> int:
        return len(self.utilities)

    @property
    def m(self) -> int:
        return len(self.utilities[0])

    def is_binary(self) -> bool:
        return all(u in (0, 1) for row in self.utilities for u in row)

    def likers(self, j: int) -> list[int]:
        return [i for i in range(self.n) if self.utilities[i][j] > 0]

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "m": self.m,
            "utilities": [[_serialize_entry(u) for u in row] for row in self.utilities],
            "order": list(self.order),
        }
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        inst = cls(d["utilities"], tuple(d.get("order") or ()), d.get("name", ""))
        if inst.n != d.get("n", inst.n) or inst.m != d.get("m", inst.m):
            raise ValueError("declared n/m do not match the utility matrix")
        return inst


def _serialize_entry(u: Fraction) -> Union[int, str]:
    return u.numerator if u.denominator == 1 else format_rational(u)


def load_instance(path: Union[str, Path]) -> Instance:
    return Instance.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def dump_instance(inst: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class BidProfile:
    """Reported bids ``bids[i][j]``; sincere agents bid their utilities."""

    bids: Matrix

    def __post_init__(self):
        object.__setattr__(self, "bids", _as_matrix(self.bids))
        if any(b < 0 for row in self.bids for b in row):
            raise ValueError("bids must be non-negative")

    @classmethod
    def sincere(cls, inst: Instance) -> "BidProfile":
        return cls(inst.utilities)

    def __getitem__(self, i: int) -> tuple[Fraction, ...]:
        return self.bids[i]

    def check(self, inst: Instance) -> None:
        if len(self.bids) != inst.n or any(len(r) != inst.m for r in self.bids):
            raise ValueError("bid profile dimensions do not match the instance")

    def with_row(self, i: int, row: Sequence) -> "BidProfile":
        rows = list(self.bids)
        rows[i] = tuple(to_rational(v) for v in row)
        return BidProfile(tuple(rows))


def matching_size(a: Allocation) -> int:
    """Number of distinct agents that receive at least one item."""
    return len({agent for agent in a if agent is not DISCARD})


def bundle_utility(inst: Instance, a: Allocation, agent: int, of: Optional[int] = None) -> Fraction:
    """Utility ``agent`` assigns to the bundle of ``of`` (default: its own bundle)."""
    owner = agent if of is None else of
    row = inst.utilities[agent]
    return sum((row[j] for j, k in enumerate(a) if k == owner), Fraction(0))


@dataclass(frozen=True)
class AllocationDistribution:
    support: tuple[tuple[Allocation, Fraction], ...]

    def __post_init__(self):
        support = tuple((tuple(a), Fraction(p)) for a, p in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise ValueError("empty distribution")
        if any(not (0 < p <= 1) for _, p in support):
            raise ValueError("probabilities must lie in (0, 1]")
        if sum(p for _, p in support) != 1:
            raise ValueError("probabilities must sum to exactly 1")
        if len({a for a, _ in support}) != len(support):
            raise ValueError("duplicate allocation in support")
        if len({len(a) for a, _ in support}) != 1:
            raise ValueError("allocations of different lengths")

    @classmethod
    def from_weights(cls, weighted: Iterable[tuple[Allocation, Fraction]]) -> "AllocationDistribution":
        """Merge equal allocations; entries are kept in first-seen order."""
        acc: dict[Allocation, Fraction] = {}
        for a, p in weighted:
            acc[tuple(a)] = acc.get(tuple(a), Fraction(0)) + p
        return cls(tuple((a, p) for a, p in acc.items() if p != 0))

    @classmethod
    def point(cls, a: Allocation) -> "AllocationDistribution":
        return cls(((tuple(a), Fraction(1)),))

    @property
    def m(self) -> int:
        return len(self.support[0][0])

    def __len__(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class AssignmentMatrix:
    """``p[i][j]`` is the probability that agent i receives item j."""

    p: Matrix

    @property
    def n(self) -> int:
        return len(self.p)

    @property
    def m(self) -> int:
        return len(self.p[0]) if self.p else 0

    def row_sums(self) -> list[Fraction]:
        return [sum(row, Fraction(0)) for row in self.p]

    def column_sums(self) -> list[Fraction]:
        return [sum((row[j] for row in self.p), Fraction(0)) for j in range(self.m)]

    def expected_utilities(self, inst: Instance) -> list[Fraction]:
        return [
            sum((pij * uij for pij, uij in zip(prow, urow)), Fraction(0))
            for prow, urow in zip(self.p, inst.utilities)
        ]


@dataclass(frozen=True)
class WelfareReport:
    es: Fraction
    uw: Fraction
    ew: Fraction
    per_agent: tuple[Fraction, ...]

    @classmethod
    def from_parts(cls, es: Fraction, per_agent: Sequence[Fraction]) -> "WelfareReport":
        per_agent = tuple(per_agent)
        return cls(es, sum(per_agent, Fraction(0)), min(per_agent), per_agent)

    def value(self, objective: Objective) -> Fraction:
        return {Objective.ES: self.es, Objective.UW: self.uw, Objective.EW: self.ew}[Objective(objective)]

    def to_dict(self) -> dict:
        return {
            "es": format_rational(self.es),
            "uw": format_rational(self.uw),
            "ew": format_rational(self.ew),
            "per_agent": [format_rational(u) for u in self.per_agent],
        }


def assignment_matrix(d: AllocationDistribution, inst: Instance) -> AssignmentMatrix:
    if d.m != inst.m:
        raise ValueError("distribution and instance disagree on the number of items")
    p = [[Fraction(0)] * inst.m for _ in range(inst.n)]
    for a, prob in d.support:
        for j, agent in enumerate(a):
            if agent is not DISCARD:
                p[agent][j] += prob
    return AssignmentMatrix(tuple(tuple(row) for row in p))


def welfare_of_distribution(inst: Instance, d: AllocationDistribution) -> WelfareReport:
    if d.m != inst.m:
        raise ValueError("distribution and instance disagree on the number of items")
    if any(agent is not DISCARD and not 0 <= agent < inst.n for a, _ in d.support for agent in a):
        raise ValueError("allocation refers to an unknown agent")
    es = sum((p * matching_size(a) for a, p in d.support), Fraction(0))
    per_agent = [Fraction(0)] * inst.n
    for a, prob in d.support:
        for j, agent in enumerate(a):
            if agent is not DISCARD:
                per_agent[agent] += prob * inst.utilities[agent][j]
    return WelfareReport.from_parts(es, per_agent)


@dataclass(frozen=True)
class RatioReport:
    objective: Objective
    optimum: Fraction
    achieved: Fraction
    ratio: Union[Fraction, float]
    additive_slack: Fraction = field(default=Fraction(0))

    @property
    def reciprocal(self) -> Fraction:
        """achieved / optimum, the [0, 1] convention used for advice sweeps."""
        if self.optimum == 0:
            return Fraction(1)
        return self.achieved / self.optimum

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.value,
            "optimum": format_rational(self.optimum),
            "achieved": format_rational(self.achieved),
            "ratio": "inf" if self.ratio == INFINITE else format_rational(self.ratio),
            "additive_slack": format_rational(self.additive_slack),
        }


def ratio(objective: Union[Objective, str], optimum, achieved) -> RatioReport:
    """Competitive ratio optimum/achieved with zero additive slack.

    0/0 is reported as 1: a mechanism matching an optimum of 0 is not worse
    than it.
    """
    optimum, achieved = Fraction(optimum), Fraction(achieved)
    if optimum < 0 or achieved < 0:
        raise ValueError("welfare values must be non-negative")
    if achieved > 0:
        r: Union[Fraction, float] = optimum / achieved
    elif optimum == 0:
        r = Fraction(1)
    else:
        r = INFINITE
    return RatioReport(Objective(objective), optimum, achieved, r)
