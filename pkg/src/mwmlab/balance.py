"""Balancing partial order on queue-length vectors and its verifiers.

The one-step relation holds between two equal-length vectors when one is a
componentwise reduction of the other, a transposition of two entries, or a
balancing interchange (move one packet from a strictly larger entry to a
strictly smaller one without overshooting). Its transitive closure is a
partial order; the cost functions registered here are monotone with respect
to it.

A balancing server reallocation replaces the slot's matching with one whose
post-service vector either componentwise decreases with a strict decrease
somewhere (C1) or is one balancing interchange away (C2). The verifiers
below check, exhaustively on small systems, that every reallocation
strictly increases the matching weight and that a reallocation exists
exactly when the matching weight is below the optimum.
"""

from __future__ import annotations

import time
from collections import deque
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from itertools import product

from .matching import (
    Matching,
    Pair,
    enumerate_matchings,
    matching_weight,
    max_weight_matching,
    validate_matching,
    weight_matrix,
)
from .queueing import QueueState, serve

# Breadth-first search guards; beyond these the reachable set is too large.
PRECEQ_MAX_SUM = 24
PRECEQ_MAX_LEN = 6

REDUCTION = "reduction"
TRANSPOSITION = "transposition"
BALANCING_INTERCHANGE = "balancing_interchange"


@dataclass(frozen=True)
class OrderStep:
    """One-step relation witness; indices are (raised, lowered) for interchanges."""

    kind: str
    indices: tuple[int, int] | None = None


class BalancingChainError(RuntimeError):
    """No chain of balancing reallocations reaches a maximum weight matching.

    Raising this is a counterexample report: on every instance checked so
    far, repeated reallocations always reach the optimum.
    """


def _check_same_length(x_tilde: Sequence[int], x: Sequence[int]) -> None:
    if len(x_tilde) != len(x):
        raise ValueError(
            f"vectors have different lengths ({len(x_tilde)} vs {len(x)})"
        )


def preceq_one(x_tilde: Sequence[int], x: Sequence[int]) -> OrderStep | None:
    """Check the one-step relation, returning which clause applies.

    Clauses are tried in order: reduction, transposition, balancing
    interchange. Returns None when none applies.
    """
    _check_same_length(x_tilde, x)
    if all(a <= b for a, b in zip(x_tilde, x)):
        return OrderStep(REDUCTION)
    diffs = [i for i in range(len(x)) if x_tilde[i] != x[i]]
    if len(diffs) != 2:
        return None
    n, m = diffs
    if x_tilde[n] == x[m] and x_tilde[m] == x[n]:
        return OrderStep(TRANSPOSITION, (n, m))
    for lo, hi in ((n, m), (m, n)):
        if (
            x_tilde[lo] == x[lo] + 1
            and x_tilde[hi] == x[hi] - 1
            and x[lo] < x_tilde[lo] <= x_tilde[hi] < x[hi]
        ):
            return OrderStep(BALANCING_INTERCHANGE, (lo, hi))
    return None


def _successors(v: QueueState) -> Iterator[QueueState]:
    """Single-step neighbors generating the same closure as the full relation.

    Unit reductions stand in for arbitrary reductions: any componentwise
    reduction is a chain of them.
    """
    n = len(v)
    for i in range(n):
        if v[i] > 0:
            yield v[:i] + (v[i] - 1,) + v[i + 1:]
    for i in range(n):
        for j in range(i + 1, n):
            if v[i] != v[j]:
                w = list(v)
                w[i], w[j] = w[j], w[i]
                yield tuple(w)
    for i in range(n):
        for j in range(n):
            if i != j and v[j] >= v[i] + 2:
                w = list(v)
                w[i] += 1
                w[j] -= 1
                yield tuple(w)


def _check_search_guards(x: Sequence[int]) -> None:
    if len(x) > PRECEQ_MAX_LEN:
        raise ValueError(
            f"vector length {len(x)} exceeds search guard {PRECEQ_MAX_LEN}"
        )
    if sum(x) > PRECEQ_MAX_SUM:
        raise ValueError(
            f"vector sum {sum(x)} exceeds search guard {PRECEQ_MAX_SUM}"
        )


def reachable_below(x: Sequence[int]) -> set[QueueState]:
    """Every vector reachable from ``x``, i.e. the full lower set of ``x``."""
    _check_search_guards(x)
    start = tuple(int(v) for v in x)
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for s in _successors(v):
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return seen


def preceq_p(x_tilde: Sequence[int], x: Sequence[int]) -> bool:
    """Whether ``x_tilde`` is below ``x`` in the transitive closure.

    Breadth-first search from ``x`` with early exit; every step preserves or
    lowers the component sum, so the search space is finite.
    """
    _check_same_length(x_tilde, x)
    _check_search_guards(x)
    target = tuple(int(v) for v in x_tilde)
    start = tuple(int(v) for v in x)
    if target == start:
        return True
    if sum(target) > sum(start):
        return False
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for s in _successors(v):
            if s == target:
                return True
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return False


# --- cost functions -------------------------------------------------------

def total_occupancy(x: Sequence[int]) -> int:
    """Total packet count; the system-occupancy cost."""
    return sum(x)


def max_queue(x: Sequence[int]) -> int:
    return max(x)


def sum_of_squares(x: Sequence[int]) -> int:
    return sum(v * v for v in x)


def verify_monotone_on_pairs(
    fn: Callable[[Sequence[int]], float],
    pairs: Iterable[tuple[QueueState, QueueState]],
) -> list[tuple[QueueState, QueueState]]:
    """Violations of ``fn(below) <= fn(above)`` over ordered pairs; empty means pass."""
    return [(lo, hi) for lo, hi in pairs if fn(lo) > fn(hi)]


def default_monotonicity_pairs() -> list[tuple[QueueState, QueueState]]:
    """Deterministic ordered pairs used to gate cost-function registration."""
    tops = [(3, 1, 0), (2, 2, 2), (4, 0), (1, 2, 3, 0)]
    pairs = []
    for top in tops:
        for below in sorted(reachable_below(top)):
            pairs.append((below, top))
    return pairs


COST_FUNCTIONS: dict[str, Callable[[Sequence[int]], float]] = {
    "total_occupancy": total_occupancy,
    "max_queue": max_queue,
}


def register_cost_function(
    name: str,
    fn: Callable[[Sequence[int]], float],
    pairs: Iterable[tuple[QueueState, QueueState]] | None = None,
) -> None:
    """Register a cost function after checking monotonicity on ordered pairs.

    Only functions that never decrease when moving up the order may be
    registered; the check runs on ``pairs`` (default: a fixed generated
    sample) and a single violation rejects the candidate.
    """
    check = list(pairs) if pairs is not None else default_monotonicity_pairs()
    bad = verify_monotone_on_pairs(fn, check)
    if bad:
        lo, hi = bad[0]
        raise ValueError(
            f"{name} is not monotone: f({lo}) = {fn(lo)} > f({hi}) = {fn(hi)}"
        )
    COST_FUNCTIONS[name] = fn


register_cost_function("sum_of_squares", sum_of_squares)


# --- balancing server reallocations ---------------------------------------

CONDITION_C1 = "C1"
CONDITION_C2 = "C2"


@dataclass(frozen=True)
class ReallocationWitness:
    """A replacement matching together with the condition its outcome satisfies."""

    original: Matching
    replacement: Matching
    condition: str


def balancing_condition(
    x_served: Sequence[int], x_served_new: Sequence[int]
) -> str | None:
    """Classify the post-service change: C1, C2, or neither.

    C1: componentwise no larger and strictly smaller somewhere.
    C2: exactly one balancing interchange apart.
    """
    _check_same_length(x_served_new, x_served)
    if all(a <= b for a, b in zip(x_served_new, x_served)) and any(
        a < b for a, b in zip(x_served_new, x_served)
    ):
        return CONDITION_C1
    step = preceq_one(x_served_new, x_served)
    if step is not None and step.kind == BALANCING_INTERCHANGE:
        return CONDITION_C2
    return None


def iter_balancing_reallocations(
    x_prev: Sequence[int], c: Sequence[Sequence[int]], m: Sequence[Pair]
) -> Iterator[ReallocationWitness]:
    """All balancing server reallocations of ``m``, in enumeration order."""
    n_queues = len(x_prev)
    n_servers = len(c[0])
    original = validate_matching(m, n_queues, n_servers)
    x_served = serve(x_prev, c, original)
    for cand in enumerate_matchings(n_queues, n_servers):
        if cand == original:
            continue
        cond = balancing_condition(x_served, serve(x_prev, c, cand))
        if cond is not None:
            yield ReallocationWitness(original, cand, cond)


def find_balancing_reallocation(
    x_prev: Sequence[int], c: Sequence[Sequence[int]], m: Sequence[Pair]
) -> ReallocationWitness | None:
    """First balancing server reallocation of ``m``, or None when none exists."""
    return next(iter_balancing_reallocations(x_prev, c, m), None)


def verify_lemma1(
    x_prev: Sequence[int],
    c: Sequence[Sequence[int]],
    m: Sequence[Pair],
    witness: ReallocationWitness,
) -> bool:
    """Whether the witness reallocation strictly increases the matching weight."""
    n_queues = len(x_prev)
    n_servers = len(c[0])
    original = validate_matching(m, n_queues, n_servers)
    if validate_matching(witness.original, n_queues, n_servers) != original:
        raise ValueError("witness does not refer to the given matching")
    replacement = validate_matching(witness.replacement, n_queues, n_servers)
    cond = balancing_condition(
        serve(x_prev, c, original), serve(x_prev, c, replacement)
    )
    if cond != witness.condition:
        raise ValueError(
            f"invalid witness: claims {witness.condition}, actual {cond}"
        )
    return matching_weight(x_prev, c, replacement) > matching_weight(x_prev, c, original)


def verify_lemma2_corollary1(
    x_prev: Sequence[int], c: Sequence[Sequence[int]], m: Sequence[Pair]
) -> bool:
    """Biconditional: weight below optimum iff some reallocation exists."""
    opt = matching_weight(x_prev, c, max_weight_matching(weight_matrix(x_prev, c)))
    below = matching_weight(x_prev, c, m) < opt
    exists = find_balancing_reallocation(x_prev, c, m) is not None
    return below == exists


def distance_to_mwm(
    x_prev: Sequence[int], c: Sequence[Sequence[int]], m: Sequence[Pair]
) -> int:
    """Fewest balancing reallocations from ``m`` to any maximum weight matching.

    Breadth-first search over the matching graph whose directed edges are
    single balancing server reallocations. Raises BalancingChainError if no
    maximum weight matching is reachable, which would be a counterexample.
    """
    n_queues = len(x_prev)
    n_servers = len(c[0])
    start = validate_matching(m, n_queues, n_servers)
    candidates = list(enumerate_matchings(n_queues, n_servers))
    weights = {cand: matching_weight(x_prev, c, cand) for cand in candidates}
    served = {cand: serve(x_prev, c, cand) for cand in candidates}
    opt = max(weights.values())
    if weights[start] == opt:
        return 0
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        cur, dist = queue.popleft()
        base = served[cur]
        for cand in candidates:
            if cand in seen:
                continue
            if balancing_condition(base, served[cand]) is None:
                continue
            if weights[cand] == opt:
                return dist + 1
            seen.add(cand)
            queue.append((cand, dist + 1))
    raise BalancingChainError(
        f"no maximum weight matching reachable from {start} "
        f"(x_prev={tuple(x_prev)}, c={tuple(tuple(r) for r in c)})"
    )


# --- exhaustive sweep ------------------------------------------------------

@dataclass
class LemmaSweepReport:
    """Outcome of an exhaustive sweep over small instances."""

    max_n: int
    max_k: int
    max_x: int
    instances: int = 0
    reallocation_pairs: int = 0
    weight_increase_violations: list[str] = field(default_factory=list)
    biconditional_violations: list[str] = field(default_factory=list)
    unreachable_optimum: list[str] = field(default_factory=list)
    solver_mismatches: list[str] = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def violation_count(self) -> int:
        return (
            len(self.weight_increase_violations)
            + len(self.biconditional_violations)
            + len(self.unreachable_optimum)
            + len(self.solver_mismatches)
        )


def _all_connectivities(n_queues: int, n_servers: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    cells = n_queues * n_servers
    for bits in range(1 << cells):
        yield tuple(
            tuple((bits >> (n * n_servers + k)) & 1 for k in range(n_servers))
            for n in range(n_queues)
        )


def sweep_lemmas(max_n: int, max_k: int, max_x: int) -> LemmaSweepReport:
    """Exhaustively check the reallocation properties on every small instance.

    Covers every system with 1..max_n queues, 1..max_k servers, queue
    lengths in 0..max_x, every connectivity matrix, and every matching:

    * every balancing reallocation strictly increases the matching weight;
    * a reallocation exists iff the matching weight is below the optimum;
    * chained reallocations reach a maximum weight matching;
    * the exact solver agrees with enumeration on the optimal weight.
    """
    report = LemmaSweepReport(max_n=max_n, max_k=max_k, max_x=max_x)
    t0 = time.perf_counter()
    for n_queues in range(1, max_n + 1):
        for n_servers in range(1, max_k + 1):
            matchings = list(enumerate_matchings(n_queues, n_servers))
            n_m = len(matchings)
            for x in product(range(max_x + 1), repeat=n_queues):
                for c in _all_connectivities(n_queues, n_servers):
                    served = [serve(x, c, m) for m in matchings]
                    mw = [
                        sum(x[n] * c[n][k] for n, k in m) for m in matchings
                    ]
                    opt = max(mw)
                    inst = f"N={n_queues} K={n_servers} x={x} c={c}"

                    solved = max_weight_matching(weight_matrix(x, c))
                    if sum(x[n] * c[n][k] for n, k in solved) != opt:
                        report.solver_mismatches.append(f"{inst} solver={solved}")

                    # condition[i][j] holds when matching j is a balancing
                    # reallocation of matching i
                    out_edges: list[list[int]] = [[] for _ in range(n_m)]
                    for i in range(n_m):
                        base = served[i]
                        for j in range(n_m):
                            if i == j:
                                continue
                            if balancing_condition(base, served[j]) is not None:
                                out_edges[i].append(j)

                    report.instances += n_m
                    for i in range(n_m):
                        for j in out_edges[i]:
                            report.reallocation_pairs += 1
                            if mw[j] <= mw[i]:
                                report.weight_increase_violations.append(
                                    f"{inst} m={matchings[i]} -> {matchings[j]} "
                                    f"weight {mw[i]} -> {mw[j]}"
                                )
                        if (mw[i] < opt) != bool(out_edges[i]):
                            report.biconditional_violations.append(
                                f"{inst} m={matchings[i]} weight={mw[i]} opt={opt} "
                                f"reallocations={len(out_edges[i])}"
                            )

                    # reverse reachability from the optimum-weight matchings
                    reached = [False] * n_m
                    stack = [i for i in range(n_m) if mw[i] == opt]
                    for i in stack:
                        reached[i] = True
                    incoming: list[list[int]] = [[] for _ in range(n_m)]
                    for i in range(n_m):
                        for j in out_edges[i]:
                            incoming[j].append(i)
                    while stack:
                        j = stack.pop()
                        for i in incoming[j]:
                            if not reached[i]:
                                reached[i] = True
                                stack.append(i)
                    for i in range(n_m):
                        if not reached[i]:
                            report.unreachable_optimum.append(
                                f"{inst} m={matchings[i]} weight={mw[i]} opt={opt}"
                            )
    report.elapsed_seconds = time.perf_counter() - t0
    return report


def format_sweep_report(report: LemmaSweepReport) -> str:
    """Plain-text sweep report; ends with the total violation count."""
    lines = [
        "balancing reallocation sweep",
        f"  ranges: N in 1..{report.max_n}, K in 1..{report.max_k}, "
        f"queue lengths in 0..{report.max_x}",
        f"  instances checked (state, connectivity, matching): {report.instances}",
        f"  reallocation pairs checked: {report.reallocation_pairs}",
        f"  weight-increase violations: {len(report.weight_increase_violations)}",
        f"  existence-biconditional violations: {len(report.biconditional_violations)}",
        f"  unreachable-optimum counterexamples: {len(report.unreachable_optimum)}",
        f"  solver-vs-enumeration mismatches: {len(report.solver_mismatches)}",
        f"  elapsed seconds: {report.elapsed_seconds:.3f}",
    ]
    for label, entries in (
        ("weight-increase", report.weight_increase_violations),
        ("biconditional", report.biconditional_violations),
        ("unreachable", report.unreachable_optimum),
        ("solver", report.solver_mismatches),
    ):
        for entry in entries:
            lines.append(f"  VIOLATION [{label}] {entry}")
    lines.append(f"total violations: {report.violation_count}")
    return "\n".join(lines)
