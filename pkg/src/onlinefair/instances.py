"""Instance families: triangular worst cases, adversaries, the worked examples,
exhaustive binary enumeration and seeded random instances."""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .core import Instance

ENUMERATE_MAX_CELLS = 12
EXAMPLE3_DEFAULT_U = 100


def upper_triangular(n: int) -> Instance:
    """Agent i (1-based) likes items 1..n-i+1."""
    if n < 1:
        raise ValueError("n must be positive")
    rows = [[1 if j < n - i else 0 for j in range(n)] for i in range(n)]
    return Instance(rows, name=f"upper-triangular-{n}")


def lower_triangular(n: int) -> Instance:
    """Agent i (1-based) likes items 1..i."""
    if n < 1:
        raise ValueError("n must be positive")
    rows = [[1 if j <= i else 0 for j in range(n)] for i in range(n)]
    return Instance(rows, name=f"lower-triangular-{n}")


def like_adversary(n: int) -> Instance:
    """Fixed realization of the Like adversary.

    Every agent likes the first n/2 items; item n/2 + t is liked only by
    agent t. The adaptive form, where the second half targets whoever was
    served, is :func:`like_adversary_response`.
    """
    if n < 2 or n % 2:
        raise ValueError("like_adversary needs an even n >= 2")
    half = n // 2
    rows = [[1] * half + [1 if t == i else 0 for t in range(half)] for i in range(n)]
    return Instance(rows, name=f"like-adversary-{n}")


def like_adversary_response(n: int, served: Iterable[int]) -> Instance:
    """Instance the adaptive Like adversary commits to after the first half.

    The first n/2 items are liked by everyone. Having seen which agents
    were served, the adversary makes each of the last n/2 items liked by
    exactly one agent: first the served agents, then unserved ones in index
    order, so the matching cannot grow beyond n/2.
    """
    if n < 2 or n % 2:
        raise ValueError("like_adversary_response needs an even n >= 2")
    half = n // 2
    served = sorted(set(served))
    if len(served) > half:
        raise ValueError("at most n/2 agents can be served by n/2 items")
    targets = served + [i for i in range(n) if i not in served][: half - len(served)]
    rows = [[1] * half + [1 if targets[t] == i else 0 for t in range(half)] for i in range(n)]
    return Instance(rows, name=f"like-adversary-adaptive-{n}")


def maximum_like_adversary(n: int) -> Instance:
    """Everybody likes every item but agent 0 values each one most."""
    rows = [[2 if i == 0 else 1] * n for i in range(n)]
    return Instance(rows, name=f"maximum-like-adversary-{n}")


def example_fixture(example_id: int, u=EXAMPLE3_DEFAULT_U, n: int = 3) -> Instance:
    """Utility matrices of the five worked examples.

    ``u`` parameterizes Example 3 and ``n`` the size of Example 1.
    """
    if example_id == 1:
        return upper_triangular(n)
    table = {
        2: [[2, 0], [1, 2]],
        3: [[0, 1], [1, Fraction(u)]],
        4: [[2, 2], [1, 1]],
        5: [[2, 1], [1, 2]],
    }
    if example_id not in table:
        raise ValueError(f"no example {example_id}; expected 1..5")
    return Instance(table[example_id], name=f"example-{example_id}")


def enumerate_binary(n: int, m: int) -> Iterator[Instance]:
    """All 0/1 instances with no empty row or column, identity arrival order."""
    if n * m > ENUMERATE_MAX_CELLS:
        raise ValueError(f"enumeration capped at n*m <= {ENUMERATE_MAX_CELLS}")
    for bits in itertools.product((0, 1), repeat=n * m):
        rows = [bits[i * m:(i + 1) * m] for i in range(n)]
        if all(any(r) for r in rows) and all(any(r[j] for r in rows) for j in range(m)):
            yield Instance(rows, name="binary-" + "".join(map(str, bits)))


def random_instance(n: int, m: int, regime: str = "binary", seed: int = 0, max_utility: int = 4) -> Instance:
    """Seeded random instance satisfying the positivity assumptions.

    Binary: fair coins. General: integers in [0, max_utility]. Empty rows
    and columns are repaired by setting a random cell positive.
    """
    rng = np.random.default_rng(seed)
    if regime == "binary":
        u = rng.integers(0, 2, size=(n, m))
    elif regime == "general":
        u = rng.integers(0, max_utility + 1, size=(n, m))
    else:
        raise ValueError(f"unknown regime {regime!r}")
    for i in range(n):
        if not u[i].any():
            u[i, rng.integers(m)] = 1 if regime == "binary" else rng.integers(1, max_utility + 1)
    for j in range(m):
        if not u[:, j].any():
            u[rng.integers(n), j] = 1 if regime == "binary" else rng.integers(1, max_utility + 1)
    return Instance(u.tolist(), name=f"random-{regime}-{n}x{m}-s{seed}")


FAMILIES = {
    "upper-triangular": upper_triangular,
    "lower-triangular": lower_triangular,
    "like-adversary": like_adversary,
    "maximum-like-adversary": maximum_like_adversary,
}


def family(name: str, n: int) -> Instance:
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")
    return FAMILIES[name](n)
