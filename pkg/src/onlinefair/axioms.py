"""Exact checks of strategy-proofness, envy-freeness and Pareto efficiency.

Strategy-proofness is searched over a bounded report space (permutations
and 0/1 masks of the true row), so SATISFIED there means no profitable
misreport was found in that space.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional

from .core import (
    DISCARD,
    Allocation,
    BidProfile,
    Instance,
    bundle_utility,
)
from .evaluation import evaluate_exact_compressed, evaluate_exact_full
from .mechanisms import Mechanism

SATISFIED = "SATISFIED"
VIOLATED = "VIOLATED"
DEFAULT_REPORT_SPACE_CAP = 5_000
PARETO_ALLOCATION_CAP = 200_000


@dataclass(frozen=True)
class Verdict:
    axiom: str
    status: str
    value: Optional[Fraction] = None
    counterexample: Any = None
    note: str = ""

    @property
    def satisfied(self) -> bool:
        return self.status == SATISFIED

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "status": self.status,
            "value": None if self.value is None else f"{self.value.numerator}/{self.value.denominator}",
            "counterexample": _jsonable(self.counterexample),
            "note": self.note,
        }


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def report_space(row) -> list[tuple[Fraction, ...]]:
    """Distinct permutations and 0/1 masks of a bid row, excluding the row itself."""
    row = tuple(row)
    seen = {row}
    out = []
    for perm in itertools.permutations(row):
        if perm not in seen:
            seen.add(perm)
            out.append(perm)
    for mask in itertools.product((0, 1), repeat=len(row)):
        masked = tuple(v if keep else Fraction(0) for v, keep in zip(row, mask))
        if masked not in seen:
            seen.add(masked)
            out.append(masked)
    return out


def true_utility_under(inst: Instance, mechanism: Mechanism, bids: BidProfile, agent: int) -> Fraction:
    _, matrix = evaluate_exact_compressed(inst, mechanism, bids)
    return matrix.expected_utilities(inst)[agent]


def check_strategyproof(
    inst: Instance, mechanism: Mechanism, report_space_cap: int = DEFAULT_REPORT_SPACE_CAP
) -> Verdict:
    sincere = BidProfile.sincere(inst)
    _, matrix = evaluate_exact_compressed(inst, mechanism)
    honest = matrix.expected_utilities(inst)
    best_gain = Fraction(0)
    witness = None
    for agent in range(inst.n):
        reports = report_space(inst.utilities[agent])
        if len(reports) > report_space_cap:
            raise ValueError(f"report space of {len(reports)} exceeds cap {report_space_cap}")
        for report in reports:
            gain = true_utility_under(inst, mechanism, sincere.with_row(agent, report), agent) - honest[agent]
            if gain > best_gain:
                best_gain = gain
                witness = {"agent": agent, "report": list(report), "gain": gain}
    return Verdict(
        "strategy-proofness",
        VIOLATED if witness else SATISFIED,
        best_gain,
        witness,
        "searched permutations and 0/1 masks of each true row",
    )


def envy_matrix(inst: Instance, p) -> list[list[Fraction]]:
    """envy[i][k] = sum_j (p_k(j) - p_i(j)) u_ij."""
    rows = p.p if hasattr(p, "p") else p
    u = inst.utilities
    return [
        [
            sum(((rows[k][j] - rows[i][j]) * u[i][j] for j in range(inst.m)), Fraction(0))
            for k in range(inst.n)
        ]
        for i in range(inst.n)
    ]


def check_envy_ex_ante(inst: Instance, mechanism: Mechanism) -> Verdict:
    _, matrix = evaluate_exact_compressed(inst, mechanism)
    envy = envy_matrix(inst, matrix)
    worst, pair = Fraction(0), None
    for i in range(inst.n):
        for k in range(inst.n):
            if i != k and (pair is None or envy[i][k] > worst):
                worst, pair = envy[i][k], (i, k)
    if inst.n == 1:
        return Verdict("envy-freeness ex ante", SATISFIED, Fraction(0))
    status = SATISFIED if worst <= 0 else VIOLATED
    return Verdict("envy-freeness ex ante", status, worst, {"envier": pair[0], "envied": pair[1]})


def ex_post_envy(inst: Instance, a: Allocation) -> tuple[Fraction, Optional[tuple[int, int]]]:
    worst, pair = None, None
    for i in range(inst.n):
        own = bundle_utility(inst, a, i)
        for k in range(inst.n):
            if i != k:
                e = bundle_utility(inst, a, i, of=k) - own
                if worst is None or e > worst:
                    worst, pair = e, (i, k)
    return (worst if worst is not None else Fraction(0)), pair


def check_envy_ex_post(inst: Instance, mechanism: Mechanism, r=0, branch_cap: int = 200_000) -> Verdict:
    """Bounded envy-freeness ex post: no realized envy above ``r``."""
    r = Fraction(r)
    dist = evaluate_exact_full(inst, mechanism, branch_cap=branch_cap)
    worst, witness = None, None
    for a, prob in dist.support:
        e, pair = ex_post_envy(inst, a)
        if worst is None or e > worst:
            worst, witness = e, {"allocation": list(a), "probability": prob, "envier": pair and pair[0],
                                 "envied": pair and pair[1]}
    status = SATISFIED if worst <= r else VIOLATED
    return Verdict(f"envy-freeness ex post (r={r})", status, worst, witness)


def utilities_of(inst: Instance, a: Allocation) -> tuple[Fraction, ...]:
    return tuple(bundle_utility(inst, a, i) for i in range(inst.n))


def pareto_dominator(inst: Instance, a: Allocation) -> Optional[Allocation]:
    """An allocation weakly better for everyone and strictly for someone, if any."""
    if inst.n ** inst.m > PARETO_ALLOCATION_CAP:
        raise ValueError("too many alternative allocations to enumerate")
    base = utilities_of(inst, a)
    for alt in itertools.product(range(inst.n), repeat=inst.m):
        vals = utilities_of(inst, alt)
        if all(v >= b for v, b in zip(vals, base)) and any(v > b for v, b in zip(vals, base)):
            return tuple(alt)
    return None


def check_pareto_ex_post(inst: Instance, mechanism: Mechanism) -> Verdict:
    dist = evaluate_exact_full(inst, mechanism)
    for a, prob in dist.support:
        dominator = pareto_dominator(inst, a)
        if dominator is not None:
            return Verdict(
                "Pareto efficiency ex post",
                VIOLATED,
                prob,
                {"allocation": list(a), "probability": prob, "dominated_by": list(dominator)},
            )
    return Verdict("Pareto efficiency ex post", SATISFIED)


def replay_strategyproof(inst: Instance, mechanism: Mechanism, witness: dict) -> Fraction:
    """Recompute the gain of a strategy-proofness counterexample."""
    agent = witness["agent"]
    honest = true_utility_under(inst, mechanism, BidProfile.sincere(inst), agent)
    lied = true_utility_under(inst, mechanism, BidProfile.sincere(inst).with_row(agent, witness["report"]), agent)
    return lied - honest


def replay_envy_ex_post(inst: Instance, witness: dict) -> Fraction:
    a = tuple(DISCARD if x is None else x for x in witness["allocation"])
    i, k = witness["envier"], witness["envied"]
    return bundle_utility(inst, a, i, of=k) - bundle_utility(inst, a, i)


AXIOMS = {
    "strategyproof": check_strategyproof,
    "envy-ex-ante": check_envy_ex_ante,
    "envy-ex-post": check_envy_ex_post,
    "pareto-ex-post": check_pareto_ex_post,
}
