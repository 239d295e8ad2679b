"""Offline optima and the Birkhoff decomposition of bistochastic matrices."""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .core import DISCARD, Allocation, AssignmentMatrix, Instance

EW_BRUTE_FORCE_MAX_N = 6
EW_BRUTE_FORCE_MAX_M = 8


class NoPerfectAllocation(ValueError):
    pass


def _try_augment(agent: int, adj: Sequence[Sequence[int]], owner: list, seen: list) -> bool:
    for j in adj[agent]:
        if seen[j]:
            continue
        seen[j] = True
        if owner[j] is None or _try_augment(owner[j], adj, owner, seen):
            owner[j] = agent
            return True
    return False


def max_matching(adj: Sequence[Sequence[int]], m: int) -> dict[int, int]:
    """Maximum bipartite matching by augmenting paths.

    ``adj[i]`` lists the items agent ``i`` may take. Returns agent -> item.
    """
    owner: list[Optional[int]] = [None] * m
    for agent in range(len(adj)):
        _try_augment(agent, adj, owner, [False] * m)
    return {a: j for j, a in enumerate(owner) if a is not None}


def lex_smallest_perfect_matching(adj: Sequence[Sequence[int]], m: int) -> Optional[tuple[int, ...]]:
    """Agent-saturating matching whose item sequence (by agent) is lexicographically smallest.

    Rows are fixed greedily to their smallest item that still leaves the
    remaining agents matchable; feasibility is checked with augmenting paths.
    """
    n = len(adj)
    chosen: list[int] = []
    used: set[int] = set()
    for agent in range(n):
        for j in sorted(adj[agent]):
            if j in used:
                continue
            rest = [[x for x in adj[a] if x not in used and x != j] for a in range(agent + 1, n)]
            if len(max_matching(rest, m)) == n - agent - 1:
                chosen.append(j)
                used.add(j)
                break
        else:
            return None
    return tuple(chosen)


def _positive_adjacency(inst: Instance, threshold: Fraction = Fraction(0), strict: bool = True):
    if strict:
        return [[j for j in range(inst.m) if inst.utilities[i][j] > threshold] for i in range(inst.n)]
    return [[j for j in range(inst.m) if inst.utilities[i][j] >= threshold] for i in range(inst.n)]


def _allocation_from_matching(matching: dict[int, int], m: int) -> Allocation:
    a: list[Optional[int]] = [DISCARD] * m
    for agent, j in matching.items():
        a[j] = agent
    return tuple(a)


def offline_es(inst: Instance) -> tuple[int, Allocation]:
    """Maximum number of agents that can each receive a liked item, with a witness."""
    matching = max_matching(_positive_adjacency(inst), inst.m)
    return len(matching), _allocation_from_matching(matching, inst.m)


def perfect_allocation(inst: Instance) -> Allocation:
    """Lexicographically smallest allocation giving every agent one liked item."""
    chosen = lex_smallest_perfect_matching(_positive_adjacency(inst), inst.m)
    if chosen is None:
        raise NoPerfectAllocation(f"{inst.name or 'instance'} has no perfect allocation")
    return _allocation_from_matching(dict(enumerate(chosen)), inst.m)


def has_perfect_allocation(inst: Instance) -> bool:
    return len(max_matching(_positive_adjacency(inst), inst.m)) == inst.n


def offline_uw(inst: Instance) -> Fraction:
    return sum((max(row[j] for row in inst.utilities) for j in range(inst.m)), Fraction(0))


def offline_ew(inst: Instance) -> tuple[Fraction, Allocation]:
    """Optimal deterministic egalitarian welfare and a witness allocation.

    For m = n the optimum is a perfect allocation; the threshold is found by
    binary search over the distinct positive utilities. Other shapes use a
    capped branch-and-bound over all allocations.
    """
    if inst.m == inst.n:
        return _bottleneck_ew(inst)
    return brute_force_ew(inst)


def _bottleneck_ew(inst: Instance) -> tuple[Fraction, Allocation]:
    if not has_perfect_allocation(inst):
        raise NoPerfectAllocation(f"{inst.name or 'instance'} has no perfect allocation")
    values = sorted({u for row in inst.utilities for u in row if u > 0})
    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        adj = _positive_adjacency(inst, values[mid], strict=False)
        if len(max_matching(adj, inst.m)) == inst.n:
            lo = mid
        else:
            hi = mid - 1
    chosen = lex_smallest_perfect_matching(_positive_adjacency(inst, values[lo], strict=False), inst.m)
    assert chosen is not None
    return values[lo], _allocation_from_matching(dict(enumerate(chosen)), inst.m)


def brute_force_ew(inst: Instance) -> tuple[Fraction, Allocation]:
    """Max-min utility over every allocation of items to positive-utility agents."""
    n, m = inst.n, inst.m
    if n > EW_BRUTE_FORCE_MAX_N or m > EW_BRUTE_FORCE_MAX_M:
        raise ValueError(
            f"brute-force egalitarian optimum capped at n<={EW_BRUTE_FORCE_MAX_N}, "
            f"m<={EW_BRUTE_FORCE_MAX_M}; got n={n}, m={m}"
        )
    u = inst.utilities
    # remaining[j][i]: utility agent i can still collect from items j..m-1
    remaining = [[Fraction(0)] * n for _ in range(m + 1)]
    for j in range(m - 1, -1, -1):
        remaining[j] = [remaining[j + 1][i] + u[i][j] for i in range(n)]
    best_value = Fraction(-1)
    best: list[Optional[int]] = []
    current: list[Optional[int]] = [DISCARD] * m
    totals = [Fraction(0)] * n

    def search(j: int) -> None:
        nonlocal best_value, best
        if min(totals[i] + remaining[j][i] for i in range(n)) <= best_value:
            return
        if j == m:
            best_value, best = min(totals), list(current)
            return
        for i in range(n):
            if u[i][j] > 0:
                current[j] = i
                totals[i] += u[i][j]
                search(j + 1)
                totals[i] -= u[i][j]
        current[j] = DISCARD

    search(0)
    return best_value, tuple(best)


def is_bistochastic(p: AssignmentMatrix | Sequence[Sequence[Fraction]]) -> bool:
    rows = p.p if isinstance(p, AssignmentMatrix) else p
    n = len(rows)
    if any(len(r) != n for r in rows):
        return False
    if any(x < 0 for r in rows for x in r):
        return False
    return all(sum(r) == 1 for r in rows) and all(sum(r[j] for r in rows) == 1 for j in range(n))


def birkhoff_decompose(
    p: AssignmentMatrix | Sequence[Sequence[Fraction]], require_bistochastic: bool = True
) -> list[tuple[tuple[int, ...], Fraction]]:
    """Write a bistochastic matrix as a convex combination of permutations.

    Each permutation is returned as ``perm`` with ``perm[i]`` the column
    (item) of row (agent) ``i``. Every step peels the lexicographically
    smallest perfect matching on the positive support with the largest
    weight it admits, so the support face shrinks and at most n^2 - 2n + 2
    terms are produced.
    """
    rows = p.p if isinstance(p, AssignmentMatrix) else p
    if require_bistochastic and not is_bistochastic(rows):
        raise ValueError("matrix is not bistochastic")
    n = len(rows)
    work = [[Fraction(x) for x in r] for r in rows]
    remaining = sum((sum(r) for r in work), Fraction(0)) / n if n else Fraction(0)
    terms: list[tuple[tuple[int, ...], Fraction]] = []
    while remaining > 0:
        adj = [[j for j in range(n) if work[i][j] > 0] for i in range(n)]
        perm = lex_smallest_perfect_matching(adj, n)
        if perm is None:
            raise RuntimeError("positive support has no perfect matching; input was not bistochastic")
        weight = min(work[i][perm[i]] for i in range(n))
        for i in range(n):
            work[i][perm[i]] -= weight
        remaining -= weight
        terms.append((perm, weight))
    return terms


def recompose(terms: Sequence[tuple[Sequence[int], Fraction]], n: int) -> list[list[Fraction]]:
    out = [[Fraction(0)] * n for _ in range(n)]
    for perm, w in terms:
        for i, j in enumerate(perm):
            out[i][j] += w
    return out
