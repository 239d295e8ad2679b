"""Advice tapes and the offline oracles that fill them.

Agent choices are packed into a single integer in a mixed-radix
(factorial-base) code: the t-th choice is the index of the agent among the
agents not yet chosen, in index order, so k distinct choices among n agents
take ceil(log2(n!/(n-k)!)) bits. When the advised rounds are not the first
k rounds, the round subset is prepended as its combinatorial rank.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import Instance, Objective
from .offline import lex_smallest_perfect_matching, offline_ew


def bits_for(count: int) -> int:
    """ceil(log2(count)) for count >= 1."""
    if count < 1:
        raise ValueError("count must be positive")
    return (count - 1).bit_length()


def choice_space(n: int, k: int, distinct: bool = True) -> int:
    if distinct:
        if k > n:
            raise ValueError(f"cannot choose {k} distinct agents among {n}")
        return math.perm(n, k)
    return n ** k


def factorial_bit_budget(k: int) -> int:
    """ceil(log2 k!): bits to name an ordering of k advised agents."""
    return bits_for(math.factorial(k))


def _to_bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def _rank_agents(agents: Sequence[int], n: int, distinct: bool) -> int:
    value = 0
    pool = list(range(n))
    for a in agents:
        if not 0 <= a < n:
            raise ValueError(f"agent {a} outside 0..{n - 1}")
        if distinct:
            if a not in pool:
                raise ValueError(f"agent {a} advised twice")
            digit, radix = pool.index(a), len(pool)
            pool.remove(a)
        else:
            digit, radix = a, n
        value = value * radix + digit
    return value


def _unrank_agents(value: int, n: int, k: int, distinct: bool) -> list[int]:
    radices = [n - t for t in range(k)] if distinct else [n] * k
    digits = []
    for radix in reversed(radices):
        value, d = divmod(value, radix)
        digits.append(d)
    digits.reverse()
    if not distinct:
        return digits
    pool = list(range(n))
    return [pool.pop(d) for d in digits]


def _rank_subset(rounds: Sequence[int], m: int) -> int:
    """Lexicographic rank of a sorted k-subset of range(m)."""
    k = len(rounds)
    rank, prev = 0, -1
    for t, r in enumerate(rounds):
        for skipped in range(prev + 1, r):
            rank += math.comb(m - skipped - 1, k - t - 1)
        prev = r
    return rank


def _unrank_subset(rank: int, m: int, k: int) -> list[int]:
    out, start = [], 0
    for t in range(k):
        for r in range(start, m):
            block = math.comb(m - r - 1, k - t - 1)
            if rank < block:
                out.append(r)
                start = r + 1
                break
            rank -= block
    return out


@dataclass(frozen=True)
class AdviceTape:
    """Bit string plus its decoded ``(round, agent)`` pairs."""

    bits: str
    decoded: tuple[tuple[int, int], ...]
    declared_bit_budget: int
    n: int
    distinct: bool = True
    m: Optional[int] = None  # set when the round subset is encoded on the tape

    def __post_init__(self):
        if len(self.bits) != self.declared_bit_budget:
            raise ValueError("tape length differs from the declared bit budget")
        if set(self.bits) - {"0", "1"}:
            raise ValueError("tape must be a 0/1 string")
        agents = [a for _, a in self.decoded]
        if self.distinct and len(set(agents)) != len(agents):
            raise ValueError("tape advises the same agent twice")

    @property
    def k(self) -> int:
        return len(self.decoded)

    @property
    def advised_agents(self) -> int:
        """Number of distinct advised agents (the l of the partial-advice table)."""
        return len({a for _, a in self.decoded})

    @property
    def factorial_bit_budget(self) -> int:
        return factorial_bit_budget(self.k)

    @property
    def hex(self) -> str:
        return format(int(self.bits, 2), "x") if self.bits else ""

    def to_dict(self) -> dict:
        return {
            "hex": self.hex,
            "bits": self.declared_bit_budget,
            "factorial_bits": self.factorial_bit_budget,
            "distinct": self.distinct,
            "advice": [list(p) for p in self.decoded],
        }


def encode_advice(
    advised: Sequence[int],
    n: int,
    *,
    rounds: Optional[Sequence[int]] = None,
    m: Optional[int] = None,
    distinct: bool = True,
) -> AdviceTape:
    """Encode the agents advised for ``rounds`` (default: the first k rounds)."""
    k = len(advised)
    if rounds is None:
        rounds = list(range(k))
    rounds = list(rounds)
    if len(rounds) != k or rounds != sorted(set(rounds)):
        raise ValueError("rounds must be strictly increasing, one per advised agent")
    prefix = rounds == list(range(k))
    agent_bits = bits_for(choice_space(n, k, distinct))
    bits = _to_bits(_rank_agents(advised, n, distinct), agent_bits)
    tape_m = None
    if not prefix:
        if m is None or rounds[-1] >= m:
            raise ValueError("non-prefix advice needs the item count m")
        tape_m = m
        bits = _to_bits(_rank_subset(rounds, m), bits_for(math.comb(m, k))) + bits
    return AdviceTape(bits, tuple(zip(rounds, advised)), len(bits), n, distinct, tape_m)


def decode_tape(bits: str, n: int, k: int, *, m: Optional[int] = None, distinct: bool = True) -> AdviceTape:
    """Rebuild a tape from its bits; ``m`` marks a tape carrying its round subset."""
    agent_bits = bits_for(choice_space(n, k, distinct))
    subset_bits = bits_for(math.comb(m, k)) if m is not None else 0
    if len(bits) != agent_bits + subset_bits:
        raise ValueError(f"expected {agent_bits + subset_bits} bits, got {len(bits)}")
    rounds = list(range(k))
    if m is not None:
        rank = int(bits[:subset_bits], 2) if subset_bits else 0
        if rank >= math.comb(m, k):
            raise ValueError("round subset code out of range")
        rounds = _unrank_subset(rank, m, k)
    value = int(bits[subset_bits:], 2) if agent_bits else 0
    if value >= choice_space(n, k, distinct):
        raise ValueError("agent code out of range")
    agents = _unrank_agents(value, n, k, distinct)
    return AdviceTape(bits, tuple(zip(rounds, agents)), len(bits), n, distinct, m)


def decode_advice(tape, n: int, k: int, distinct: bool = True) -> list[int]:
    """Agents advised by ``tape`` (an AdviceTape or a prefix-tape bit string)."""
    if isinstance(tape, AdviceTape):
        return [a for _, a in decode_tape(tape.bits, n, k, m=tape.m, distinct=tape.distinct).decoded]
    return [a for _, a in decode_tape(tape, n, k, distinct=distinct).decoded]


def tape_from_pairs(pairs: Sequence[tuple[int, int]], n: int, m: int) -> AdviceTape:
    pairs = sorted(pairs)
    agents = [a for _, a in pairs]
    return encode_advice(
        agents, n, rounds=[r for r, _ in pairs], m=m, distinct=len(set(agents)) == len(agents)
    )


def _check_k(inst: Instance, k: int) -> None:
    if not 0 <= k <= inst.m:
        raise ValueError(f"k={k} outside 0..{inst.m}")


def _distinct_matching_advice(inst: Instance, k: int) -> AdviceTape:
    """Advise matched agents, scanning rounds in arrival order, for k items.

    The matching saturates every agent, so each agent left unadvised still
    has an unadvised liked item. Advice is distinct, hence k <= n.
    """
    _check_k(inst, k)
    adj = [[j for j in range(inst.m) if inst.utilities[i][j] > 0] for i in range(inst.n)]
    chosen = lex_smallest_perfect_matching(adj, inst.m)
    if chosen is None:
        raise ValueError(f"{inst.name or 'instance'} has no allocation giving every agent a liked item")
    agent_of = {j: i for i, j in enumerate(chosen)}
    pairs = [(r, agent_of[j]) for r, j in enumerate(inst.order) if j in agent_of][:k]
    if len(pairs) < k:
        raise ValueError(f"only {len(pairs)} items can go to distinct agents; k={k}")
    return tape_from_pairs(pairs, inst.n, inst.m)


def oracle_es(inst: Instance, k: int) -> AdviceTape:
    """Advice from a perfect allocation for the first k items (m = n)."""
    return _distinct_matching_advice(inst, k)


def oracle_uw(inst: Instance, k: int, regime: str = "general") -> AdviceTape:
    """Advise a top-utility agent for each of the k most valued items."""
    if regime == "binary":
        return _distinct_matching_advice(inst, k)
    _check_k(inst, k)
    top = [max(row[j] for row in inst.utilities) for j in range(inst.m)]
    items = sorted(range(inst.m), key=lambda j: (-top[j], j))[:k]
    position = {j: r for r, j in enumerate(inst.order)}
    pairs = []
    for j in items:
        agent = next(i for i in range(inst.n) if inst.utilities[i][j] == top[j])
        pairs.append((position[j], agent))
    return tape_from_pairs(pairs, inst.n, inst.m)


def oracle_ew(inst: Instance, k: int, regime: str = "binary") -> AdviceTape:
    """Egalitarian advice.

    Binary utilities: distinct agents taken from an agent-saturating
    matching. General utilities: the first k items follow an optimal
    egalitarian allocation, so every unadvised agent keeps its whole
    optimal bundle within reach.
    """
    if regime == "binary":
        return _distinct_matching_advice(inst, k)
    _check_k(inst, k)
    _, witness = offline_ew(inst)
    pairs = [(r, witness[j]) for r, j in enumerate(inst.order[:k])]
    return tape_from_pairs(pairs, inst.n, inst.m)


@dataclass(frozen=True)
class OraclePolicy:
    objective: Objective
    utility_regime: str
    k: int

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        if self.utility_regime not in ("binary", "general"):
            raise ValueError(f"unknown regime {self.utility_regime!r}")

    def tape(self, inst: Instance) -> AdviceTape:
        if self.objective is Objective.ES:
            return oracle_es(inst, self.k)
        if self.objective is Objective.UW:
            return oracle_uw(inst, self.k, self.utility_regime)
        return oracle_ew(inst, self.k, self.utility_regime)


def oracle(objective, inst: Instance, k: int, regime: Optional[str] = None) -> AdviceTape:
    regime = regime or ("binary" if inst.is_binary() else "general")
    return OraclePolicy(objective, regime, k).tape(inst)
