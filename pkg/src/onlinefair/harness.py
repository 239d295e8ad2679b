"""Experiments: example regression, advice sweeps, Figure 1 curves, Table 1
guarantee checks and the dominance scan."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .advice import oracle
from .axioms import _jsonable
from .core import Instance, Objective, format_rational, ratio
from .evaluation import EngineConfig, evaluate, evaluate_exact_compressed
from .instances import (
    enumerate_binary,
    example_fixture,
    family as make_family,
    random_instance,
    upper_triangular,
    maximum_like_adversary,
)
from .mechanisms import Mechanism, advised
from .offline import has_perfect_allocation, offline_es, offline_ew, offline_uw

CSV_COLUMNS = [
    "mechanism", "objective", "regime", "family", "n", "m", "k", "l", "engine", "value",
    "value_exact", "optimum", "ratio", "convention", "seed", "samples", "stderr",
]
BASE_MECHANISMS = ("like", "balanced-like", "maximum-like", "ranking")
ONE_MINUS_INV_E = 1 - 1 / math.e


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, float):
        return "inf" if math.isinf(x) else repr(x)
    return str(x)


def write_rows(rows: Sequence[dict], fmt: str = "csv", columns: Optional[Sequence[str]] = None) -> str:
    """Serialize rows; exact values are written as p/q strings."""
    if fmt == "json":
        return json.dumps([_jsonable(r) for r in rows], indent=2) + "\n"
    if columns is None:
        if not rows or set(CSV_COLUMNS) <= set(rows[0]):
            columns = CSV_COLUMNS + [c for c in (rows[0] if rows else {}) if c not in CSV_COLUMNS]
        else:
            columns = list(rows[0])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({c: _fmt(r.get(c)) for c in columns})
    return buf.getvalue()


def optimum(inst: Instance, objective) -> Fraction:
    objective = Objective(objective)
    if objective is Objective.ES:
        return Fraction(offline_es(inst)[0])
    if objective is Objective.UW:
        return offline_uw(inst)
    return offline_ew(inst)[0]


# --- example regression -------------------------------------------------------

# (example, params, quantity, mechanism or "offline", objective, pinned value)
PINNED_EXAMPLES = [
    (2, {}, "maximum-like", "ES", Fraction(2)),
    (2, {}, "ranking", "ES", Fraction(3, 2)),
    (3, {"u": 100}, "offline", "UW", Fraction(101)),
    (3, {"u": 100}, "balanced-like", "UW", Fraction(2)),
    (3, {"u": 100}, "ranking", "UW", Fraction(2)),
    (4, {}, "maximum-like", "EW", Fraction(0)),
    (4, {}, "offline", "EW", Fraction(1)),
    (5, {}, "maximum-like", "EW", Fraction(2)),
    (5, {}, "like", "EW", Fraction(3, 2)),
    (5, {}, "balanced-like", "EW", Fraction(3, 2)),
    (5, {}, "ranking", "EW", Fraction(3, 2)),
]


@dataclass
class Report:
    rows: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.get("status", "PASS") != "FAIL" for r in self.rows)


def run_examples() -> Report:
    """Evaluate the worked examples exactly and compare with the pinned values.

    Every mechanism is evaluated on every example; rows with a pinned value
    carry PASS/FAIL, the rest are informational.
    """
    report = Report()
    pinned = {(ex, mech, obj): val for ex, _, mech, obj, val in PINNED_EXAMPLES}
    for ex in (2, 3, 4, 5):
        inst = example_fixture(ex)
        values = {}
        for mech in BASE_MECHANISMS:
            values[mech] = evaluate_exact_compressed(inst, Mechanism(mech))[0]
        for obj in Objective:
            entries = [(mech, values[mech].value(obj)) for mech in BASE_MECHANISMS]
            entries.append(("offline", optimum(inst, obj)))
            for mech, measured in entries:
                expected = pinned.get((ex, mech, obj.value))
                status = "INFO" if expected is None else ("PASS" if measured == expected else "FAIL")
                report.rows.append({
                    "example": ex, "mechanism": mech, "objective": obj.value,
                    "measured": measured, "expected": expected, "status": status,
                })
    return report


# --- advice sweeps ------------------------------------------------------------


def _engine_value(inst: Instance, mech: Mechanism, objective: Objective, cfg: EngineConfig):
    result = evaluate(inst, mech, cfg)
    if cfg.engine == "monte-carlo":
        return result.value(objective), None, result.stderr(objective)
    value = result.value(objective)
    return value, value, 0.0


def sweep_advice(
    family: Union[str, Instance],
    n: int,
    objective,
    mechanism: str,
    k_range: Iterable[int],
    cfg: EngineConfig = EngineConfig(),
    regime: Optional[str] = None,
) -> list[dict]:
    """Reciprocal ratio achieved/optimum of the advised mechanism for each k."""
    objective = Objective(objective)
    inst = family if isinstance(family, Instance) else make_family(family, n)
    fam_name = inst.name if isinstance(family, Instance) else family
    regime = regime or ("binary" if inst.is_binary() else "general")
    opt = optimum(inst, objective)
    rows = []
    for k in k_range:
        tape = oracle(objective, inst, k, regime)
        mech = advised(mechanism, tape)
        value, exact, se = _engine_value(inst, mech, objective, cfg)
        recip = (Fraction(value) / opt if opt else Fraction(1)) if exact is not None else (
            value / float(opt) if opt else 1.0)
        rows.append({
            "mechanism": mech.name if k else f"advised:{mechanism}", "objective": objective.value,
            "regime": regime, "family": fam_name, "n": inst.n, "m": inst.m, "k": k,
            "l": tape.advised_agents, "engine": cfg.engine, "value": float(value),
            "value_exact": exact, "optimum": opt, "ratio": recip if exact is not None else float(recip),
            "convention": "reciprocal", "seed": cfg.seed if cfg.engine == "monte-carlo" else "",
            "samples": cfg.samples if cfg.engine == "monte-carlo" else "", "stderr": se,
            "bits": tape.declared_bit_budget, "factorial_bits": tape.factorial_bit_budget,
        })
    return rows


# --- Figure 1 -------------------------------------------------------------------


def offline_curves(k: int, n: int) -> dict[str, Union[Fraction, float]]:
    """Closed-form reciprocal ratios against the offline optimum."""
    return {
        "advised:maximum-like": Fraction(k, n),
        "advised:balanced-like": Fraction(k + n, 2 * n),
        "advised:like": Fraction(k + n, 2 * n),  # upper bound
        "advised:ranking": (k + (n - k) * ONE_MINUS_INV_E) / n,
    }


def online_curves(k: int, n: int) -> dict[str, float]:
    """Closed-form reciprocal ratios against advised Ranking."""
    e = math.e
    return {
        "advised:maximum-like": e * k / ((e - 1) * n + k),
        "advised:balanced-like": e * (k + n) / (2 * (e - 1) * n + 2 * k),
        "advised:like": e * (k + n) / (2 * (e - 1) * n + 2 * k),  # upper bound
        "advised:ranking": 1.0,
    }


def figure1_data(n: int = 10, measured: bool = True, samples: int = 20_000, seed: int = 0) -> list[dict]:
    """Both panels of the partial-advice ES curves for k = 0..n.

    Measured rows: advised Ranking on the upper-triangular family (Monte
    Carlo) and advised Maximum Like on its adversarial family (exact).
    """
    rows = []
    base = {"objective": "ES", "regime": "binary", "n": n, "m": n, "seed": "", "samples": "", "stderr": ""}
    for k in range(n + 1):
        for panel, curves in (("offline", offline_curves(k, n)), ("online", online_curves(k, n))):
            for mech, value in curves.items():
                bound = mech == "advised:like" and k < n
                rows.append({
                    **base, "mechanism": mech, "family": "closed-form", "k": k, "l": k,
                    "engine": "closed-form", "value": float(value),
                    "value_exact": value if isinstance(value, Fraction) else None,
                    "optimum": "", "ratio": value,
                    "convention": f"reciprocal-{panel}" + ("-upper-bound" if bound else ""),
                })
    if not measured:
        return rows
    ut = upper_triangular(n)
    mla = maximum_like_adversary(n)
    cfg = EngineConfig("monte-carlo", samples=samples, seed=seed)
    for k in range(n + 1):
        rank = evaluate(ut, advised("ranking", oracle("ES", ut, k)), cfg if k < n else EngineConfig())
        rank_es = float(rank.es)
        rank_se = getattr(rank, "es_stderr", 0.0)
        maxlike = evaluate_exact_compressed(mla, advised("maximum-like", oracle("ES", mla, k)))[0].es
        for mech, fam, value, exact, se, engine in (
            ("advised:ranking", "upper-triangular", rank_es, None, rank_se, "monte-carlo"),
            ("advised:maximum-like", "maximum-like-adversary", float(maxlike), maxlike, 0.0, "exact-compressed"),
        ):
            rows.append({
                **base, "mechanism": mech, "family": fam, "k": k, "l": k, "engine": engine,
                "value": value, "value_exact": exact, "optimum": n,
                "ratio": value / n if exact is None else exact / n, "convention": "reciprocal-offline",
                "seed": seed if engine == "monte-carlo" else "", "samples": samples if engine == "monte-carlo" else "",
                "stderr": se,
            })
        rows.append({
            **base, "mechanism": "advised:maximum-like", "family": "maximum-like-adversary/upper-triangular",
            "k": k, "l": k, "engine": "mixed", "value": float(maxlike) / rank_es, "value_exact": None,
            "optimum": "", "ratio": float(maxlike) / rank_es, "convention": "reciprocal-online",
        })
    return rows


# --- Table 1 ----------------------------------------------------------------------


def _bound(cell: str, n: int, m: int, k: int, l: int) -> Fraction:
    if cell == "one":
        return Fraction(1)
    if cell == "k/m":
        return Fraction(k, m)
    if cell == "like-uw":
        return Fraction(k, m) + Fraction(1, n) - Fraction(k, n * m)
    if cell == "1/n":
        return Fraction(1, n)
    if cell == "1/(n-l)":
        return Fraction(1) if l >= n else Fraction(1, n - l)
    if cell == "(k+n)/m":
        # at most n unadvised items reach unserved agents; n/m when k = 0
        return min(Fraction(1), Fraction(k + n, m))
    raise ValueError(cell)


# (mechanism, objective, regime, shape, claim, direction); direction is
# ">=" (floor), "==", or "<=" (ceiling). shape: "m=n", "m>n" or "m>=n".
TABLE1_CELLS = [
    ("maximum-like", "UW", "binary", "m>=n", "one", "=="),
    ("balanced-like", "UW", "binary", "m>=n", "one", "=="),
    ("like", "UW", "binary", "m>=n", "one", "=="),
    ("ranking", "UW", "binary", "m>=n", "(k+n)/m", "<="),
    ("maximum-like", "UW", "general", "m>=n", "one", "=="),
    ("balanced-like", "UW", "general", "m>=n", "k/m", ">="),
    ("like", "UW", "general", "m>=n", "like-uw", ">="),
    ("ranking", "UW", "general", "m>=n", "k/m", ">="),
    ("maximum-like", "EW", "binary", "m=n", "1/n", ">="),
    ("balanced-like", "EW", "binary", "m=n", "1/(n-l)", ">="),
    ("like", "EW", "binary", "m=n", "1/n", ">="),
    ("ranking", "EW", "binary", "m=n", "1/(n-l)", ">="),
    ("maximum-like", "EW", "binary", "m>n", "1/n", ">="),
    ("balanced-like", "EW", "binary", "m>n", "1/(n-l)", ">="),
    ("like", "EW", "binary", "m>n", "1/n", ">="),
    ("ranking", "EW", "binary", "m>n", "1/(n-l)", ">="),
    ("balanced-like", "EW", "general", "m=n", "1/(n-l)", ">="),
    ("like", "EW", "general", "m=n", "1/n", ">="),
    ("ranking", "EW", "general", "m=n", "1/(n-l)", ">="),
    ("like", "EW", "general", "m>n", "1/n", ">="),
]

# With binary utilities and m > n the egalitarian optimum can exceed 1
# while these floors are stated against an optimum of 1; such rows are
# measured and reported, not enforced.
INFORMATIONAL_CELLS = {(mech, "EW", "binary", "m>n") for mech in BASE_MECHANISMS}

# cells whose guarantee is 0: a witness family with ratio tending to 0
# (mechanism, regime, shape, matrix builder)
TABLE1_ZERO_CELLS = [
    ("maximum-like", "m=n", lambda u: [[2, 2], [1, 1]]),
    ("maximum-like", "m>n", lambda u: [[2, 2, 2], [1, 1, 1]]),
    ("balanced-like", "m>n", lambda u: [[1, u, 0], [0, 1, u]]),
    ("ranking", "m>n", lambda u: [[1, u, 0], [0, 1, u]]),
]


def _shape_ok(shape: str, n: int, m: int) -> bool:
    return {"m=n": m == n, "m>n": m > n, "m>=n": m >= n}[shape]


def table1_families(sizes: Sequence[tuple[int, int]], general_count: int, seed: int):
    """Binary: every enumerable instance with an agent-saturating allocation.
    General: seeded random instances with such an allocation."""
    binary, general = [], []
    for n, m in sizes:
        binary += [i for i in enumerate_binary(n, m) if has_perfect_allocation(i)]
        s = seed
        found = 0
        while found < general_count:
            inst = random_instance(n, m, "general", seed=s)
            s += 1
            if has_perfect_allocation(inst):
                general.append(inst)
                found += 1
    return binary, general


def table1_check(
    sizes: Sequence[tuple[int, int]] = ((2, 2), (3, 3), (2, 3), (2, 4), (3, 4)),
    general_count: int = 40,
    seed: int = 0,
    zero_scales: Sequence[int] = (10, 100, 1000),
) -> Report:
    """Check each partial-advice guarantee over every k in [0, m)."""
    binary, general = table1_families(sizes, general_count, seed)
    report = Report()
    for mech, obj, regime, shape, claim, direction in TABLE1_CELLS:
        pool = [i for i in (binary if regime == "binary" else general) if _shape_ok(shape, i.n, i.m)]
        worst_slack, witness, checked = None, None, 0
        for inst in pool:
            opt = optimum(inst, obj)
            k_max = min(inst.m - 1, inst.n) if regime == "binary" else inst.m - 1
            for k in range(k_max + 1):
                tape = oracle(obj, inst, k, regime)
                rep = evaluate_exact_compressed(inst, advised(mech, tape))[0]
                r = rep.value(obj) / opt if opt else Fraction(1)
                bound = _bound(claim, inst.n, inst.m, k, tape.advised_agents)
                slack = {">=": r - bound, "<=": bound - r, "==": -abs(r - bound)}[direction]
                checked += 1
                if worst_slack is None or slack < worst_slack:
                    worst_slack = slack
                    witness = {"instance": inst.name, "utilities": [[format_rational(x) for x in row]
                                                                    for row in inst.utilities],
                               "k": k, "l": tape.advised_agents, "ratio": r, "bound": bound}
        report.rows.append({
            "mechanism": f"advised:{mech}", "objective": obj, "regime": regime, "shape": shape,
            "claim": f"{direction} {claim}", "instances": len(pool), "checks": checked,
            "worst_slack": worst_slack, "witness": witness,
            "status": ("SKIP" if not checked
                       else "INFO" if (mech, obj, regime, shape) in INFORMATIONAL_CELLS
                       else "PASS" if worst_slack >= 0 else "FAIL"),
        })
    for mech, shape, build in TABLE1_ZERO_CELLS:
        ratios = []
        for u in zero_scales:
            inst = Instance(build(u), name=f"zero-witness-{mech}-{shape}-u{u}")
            opt = optimum(inst, "EW")
            achieved = evaluate_exact_compressed(inst, Mechanism(mech))[0].ew
            ratios.append(achieved / opt)
        tends_to_zero = ratios[-1] == 0 or all(b < a for a, b in zip(ratios, ratios[1:]))
        report.rows.append({
            "mechanism": f"advised:{mech}", "objective": "EW", "regime": "general", "shape": shape,
            "claim": "-> 0", "instances": len(zero_scales), "checks": len(zero_scales),
            "worst_slack": ratios[-1], "witness": {"utilities(u)": build("u"), "k": 0,
                                                   "ratios": dict(zip(zero_scales, ratios))},
            "status": "PASS" if tends_to_zero else "FAIL",
        })
    return report


# --- dominance scan -------------------------------------------------------------


def dominance_scan(max_n: int = 3) -> Report:
    """Pointwise comparisons of Ranking, Balanced Like and Like on binary n=m instances."""
    mechs = ("ranking", "balanced-like", "like", "random")
    pairs = [("balanced-like", "like", "ES"), ("ranking", "balanced-like", "ES"),
             ("balanced-like", "like", "EW"), ("ranking", "balanced-like", "EW"),
             ("balanced-like", "random", "ES")]
    stats = {p: {"ge": 0, "gt": 0, "lt": 0, "eq": 0, "counterexample": None} for p in pairs}
    uw_full = {"like": 0, "balanced-like": 0}
    ranking_uw_below = 0
    total = 0
    for n in range(1, max_n + 1):
        for inst in enumerate_binary(n, n):
            total += 1
            reps = {k: evaluate_exact_compressed(inst, Mechanism(k))[0] for k in mechs}
            for a, b, obj in pairs:
                va, vb = reps[a].value(obj), reps[b].value(obj)
                s = stats[(a, b, obj)]
                s["ge"] += va >= vb
                s["gt"] += va > vb
                s["eq"] += va == vb
                if va < vb:
                    s["lt"] += 1
                    s["counterexample"] = s["counterexample"] or inst.name
            for k in uw_full:
                uw_full[k] += reps[k].uw == inst.m
            ranking_uw_below += reps["ranking"].uw < inst.m
    report = Report()
    for (a, b, obj), s in stats.items():
        if (a, b) == ("balanced-like", "like") and obj == "ES":
            status = "PASS" if s["lt"] == 0 and s["gt"] > 0 else "FAIL"
        elif (a, b) == ("balanced-like", "random"):
            status = "PASS" if s["eq"] == total else "FAIL"
        else:
            status = "INFO"
        report.rows.append({
            "comparison": f"{a} vs {b}", "objective": obj, "instances": total, "at_least": s["ge"],
            "strictly_better": s["gt"], "equal": s["eq"], "worse": s["lt"],
            "counterexample": s["counterexample"], "status": status,
        })
    for k, count in uw_full.items():
        report.rows.append({"comparison": f"{k} UW = m", "objective": "UW", "instances": total,
                            "at_least": count, "status": "PASS" if count == total else "FAIL"})
    report.rows.append({"comparison": "ranking UW < m", "objective": "UW", "instances": total,
                        "strictly_better": ranking_uw_below, "status": "PASS" if ranking_uw_below else "FAIL"})
    ex2 = example_fixture(2)
    ml = evaluate_exact_compressed(ex2, Mechanism("maximum-like"))[0].es
    rk = evaluate_exact_compressed(ex2, Mechanism("ranking"))[0].es
    report.rows.append({"comparison": "maximum-like vs ranking on example 2", "objective": "ES",
                        "instances": 1, "counterexample": f"{format_rational(ml)} > {format_rational(rk)}",
                        "status": "PASS" if ml > rk else "FAIL"})
    return report


def competitive_ratio(inst: Instance, mechanism: Mechanism, objective, cfg: EngineConfig = EngineConfig()):
    """Offline competitive ratio (c >= 1 convention) of an exact evaluation."""
    rep = evaluate(inst, mechanism, cfg)
    return ratio(objective, optimum(inst, objective), rep.value(Objective(objective)))
