"""Coupled Monte Carlo comparison of server assignment policies.

Every policy replays the identical realization of connectivities and
arrivals for each replication, so trajectory differences are attributable
to the policies alone. The comparison aggregates per-slot mean costs and
empirical tail probabilities with exact binomial confidence intervals, and
flags any point where the reference policy's tail provably exceeds a
baseline's.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta as _beta

from . import policies, rng
from .balance import COST_FUNCTIONS, PRECEQ_MAX_SUM, reachable_below
from .matching import Matching
from .queueing import QueueState, SamplePath, SystemParams, serve, validate_state

CONFIDENCE_LEVEL = 0.99

# Mean-occupancy growth beyond these factors between the third and final
# quarter of the horizon flags a policy as possibly unstable at this load.
_GROWTH_FACTOR = 1.05
_GROWTH_SLACK = 0.5

AUDIT_MAX_QUEUES = 4
AUDIT_MAX_HORIZON = 50


@dataclass(frozen=True)
class SimConfig:
    """Full description of one coupled experiment."""

    params: SystemParams
    horizon: int
    replications: int
    seed: int
    policies: tuple[str, ...]
    cost_functions: tuple[str, ...] = ("total_occupancy",)
    record_interval: int = 1
    initial_state: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.replications > rng.REPLICATION_LIMIT:
            raise ValueError("replication count exceeds the stream key space")
        if not self.policies:
            raise ValueError("at least one policy is required")
        for name in self.policies:
            if name not in policies.POLICY_NAMES:
                raise ValueError(
                    f"unknown policy {name!r}; expected one of {policies.POLICY_NAMES}"
                )
        if len(set(self.policies)) != len(self.policies):
            raise ValueError("policies must be unique")
        if not self.cost_functions:
            raise ValueError("at least one cost function is required")
        for name in self.cost_functions:
            if name not in COST_FUNCTIONS:
                raise ValueError(
                    f"unknown cost function {name!r}; registered: "
                    f"{tuple(sorted(COST_FUNCTIONS))}"
                )
        if self.record_interval < 1:
            raise ValueError(
                f"record_interval must be >= 1, got {self.record_interval}"
            )
        if self.initial_state is not None:
            state = validate_state(self.initial_state)
            if len(state) != self.params.n_queues:
                raise ValueError(
                    f"initial state has {len(state)} entries for "
                    f"{self.params.n_queues} queues"
                )

    def start_state(self) -> QueueState:
        if self.initial_state is None:
            return (0,) * self.params.n_queues
        return tuple(int(v) for v in self.initial_state)


@dataclass(frozen=True)
class TraceRecord:
    """State of one policy's replication at one recorded slot."""

    replication: int
    slot: int
    policy: str
    state: QueueState
    mw_index: int
    costs: tuple[int, ...]


@dataclass(frozen=True)
class DominanceViolation:
    """A (slot, threshold) point where the reference tail provably exceeds a baseline's."""

    cost: str
    slot: int
    threshold: int
    policy: str
    mwm_ccdf: float
    policy_ccdf: float
    mwm_ci_low: float
    policy_ci_high: float


@dataclass(frozen=True)
class StabilityCheck:
    """Growth comparison between the third and final quarter of the horizon."""

    third_quarter_mean: float
    final_quarter_mean: float
    flagged: bool


@dataclass(frozen=True)
class DominanceReport:
    """Aggregated coupled-comparison results."""

    policies: tuple[str, ...]
    cost_functions: tuple[str, ...]
    replications: int
    horizon: int
    sampled_slots: tuple[int, ...]
    # per cost: rows (slot, threshold, policy, ccdf, ci_low, ci_high)
    ccdf: dict[str, tuple[tuple[int, int, str, float, float, float], ...]]
    # per cost, per policy: mean cost at each sampled slot
    mean_costs: dict[str, dict[str, tuple[float, ...]]]
    # per policy: mean total occupancy at every slot 0..horizon
    mean_occupancy: dict[str, tuple[float, ...]]
    stability: dict[str, StabilityCheck]
    violations: tuple[DominanceViolation, ...]


def sampled_slots(horizon: int) -> tuple[int, ...]:
    """Geometric slot grid 1, 2, 4, ... plus the final slot."""
    slots = []
    t = 1
    while t <= horizon:
        slots.append(t)
        t *= 2
    if slots[-1] != horizon:
        slots.append(horizon)
    return tuple(slots)


@dataclass
class _PolicyRun:
    sampled_values: dict[str, list[int]]
    occupancy: list[int]
    records: list[TraceRecord]
    states: list[QueueState] | None
    digest: str


# Decisions are pure functions of (queue lengths, connectivity), so caching
# them is safe across replications and configurations.
_DECISION_MEMOS: dict[str, dict] = {name: {} for name in policies.DETERMINISTIC_DECIDERS}


def _simulate_one(
    config: SimConfig,
    path: SamplePath,
    policy: str,
    sampled: Sequence[int],
    keep_states: bool = False,
) -> _PolicyRun:
    params = config.params
    horizon = config.horizon
    interval = config.record_interval
    x = config.start_state()

    c_list = path.connectivity.tolist()
    a_list = path.arrivals.tolist()
    flat = path.connectivity.reshape(horizon, -1)
    c_keys = [flat[i].tobytes() for i in range(horizon)]

    policy_u = None
    memo = None
    fn = None
    if policy == policies.RANDOM_MAXIMAL:
        policy_u = rng.path_uniforms(
            config.seed, path.replication, rng.STREAM_POLICY, horizon,
            params.n_queues * params.n_servers,
        )
    else:
        memo = _DECISION_MEMOS[policy]
        fn = policies.DETERMINISTIC_DECIDERS[policy]

    cost_fns = [COST_FUNCTIONS[name] for name in config.cost_functions]
    sampled_set = frozenset(sampled)
    sampled_values: dict[str, list[int]] = {name: [] for name in config.cost_functions}
    occupancy = [0] * (horizon + 1)
    occupancy[0] = sum(x)
    records: list[TraceRecord] = []
    states: list[QueueState] | None = [x] if keep_states else None

    for t in range(1, horizon + 1):
        c_rows = c_list[t - 1]
        if policy_u is not None:
            m: Matching = policies.random_maximal_from_uniforms(
                x, c_rows, policy_u[t - 1]
            )
        else:
            key = (x, c_keys[t - 1])
            m = memo.get(key)
            if m is None:
                m = fn(x, c_rows)
                memo[key] = m
        recording = t % interval == 0
        if recording:
            mw = sum(x[n] * c_rows[n][k] for n, k in m)
        x_served = serve(x, c_rows, m)
        x = tuple(s + a for s, a in zip(x_served, a_list[t - 1]))
        occupancy[t] = sum(x)
        if t in sampled_set:
            for name, cfn in zip(config.cost_functions, cost_fns):
                sampled_values[name].append(cfn(x))
        if recording:
            records.append(
                TraceRecord(
                    path.replication, t, policy, x, mw,
                    tuple(cfn(x) for cfn in cost_fns),
                )
            )
        if keep_states:
            states.append(x)

    return _PolicyRun(sampled_values, occupancy, records, states, path.digest())


def run_replication(
    config: SimConfig, replication: int, policy: str
) -> list[TraceRecord]:
    """Trace one policy through one replication of the shared sample path."""
    if policy not in policies.POLICY_NAMES:
        raise ValueError(f"unknown policy {policy!r}")
    path = SamplePath(config.params, config.seed, replication, config.horizon)
    return _simulate_one(config, path, policy, sampled=()).records


def _replication_payload(args: tuple[SimConfig, int, tuple[int, ...]]):
    config, replication, sampled = args
    out = {}
    for policy in config.policies:
        # Each policy rebuilds the path from (seed, replication) so the
        # digest comparison actually exercises the coupling contract.
        path = SamplePath(config.params, config.seed, replication, config.horizon)
        out[policy] = _simulate_one(config, path, policy, sampled)
    return out


def run_experiment(
    config: SimConfig, max_workers: int = 1
) -> tuple[DominanceReport, list[TraceRecord]]:
    """Run all policies over all replications and aggregate.

    Replications are independent work units; aggregation always reduces in
    replication order, so the result is identical for any worker count.
    """
    if policies.MWM not in config.policies:
        raise ValueError("the coupled comparison needs the mwm policy included")
    sampled = sampled_slots(config.horizon)
    tasks = [(config, r, sampled) for r in range(config.replications)]
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            chunk = max(1, config.replications // (max_workers * 4))
            payloads = list(pool.map(_replication_payload, tasks, chunksize=chunk))
    else:
        payloads = [_replication_payload(t) for t in tasks]

    horizon = config.horizon
    n_slots = len(sampled)
    occ_sums = {p: np.zeros(horizon + 1, dtype=np.int64) for p in config.policies}
    values = {
        p: {c: np.empty((config.replications, n_slots), dtype=np.int64)
            for c in config.cost_functions}
        for p in config.policies
    }
    records: list[TraceRecord] = []
    for r, payload in enumerate(payloads):
        digests = {p: payload[p].digest for p in config.policies}
        if len(set(digests.values())) != 1:
            raise RuntimeError(
                f"coupling integrity broken at replication {r}: {digests}"
            )
        for p in config.policies:
            run = payload[p]
            occ_sums[p] += np.asarray(run.occupancy, dtype=np.int64)
            for c in config.cost_functions:
                values[p][c][r, :] = run.sampled_values[c]
            records.extend(run.records)

    report = _build_report(config, sampled, occ_sums, values)
    return report, records


def coupled_compare(config: SimConfig, max_workers: int = 1) -> DominanceReport:
    """Coupled comparison of every configured policy against the mwm reference."""
    return run_experiment(config, max_workers=max_workers)[0]


def clopper_pearson(successes: int, trials: int, level: float = CONFIDENCE_LEVEL):
    """Two-sided exact binomial confidence interval for a proportion."""
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in 0..trials")
    alpha = 1.0 - level
    lo = 0.0 if successes == 0 else float(
        _beta.ppf(alpha / 2, successes, trials - successes + 1)
    )
    hi = 1.0 if successes == trials else float(
        _beta.ppf(1 - alpha / 2, successes + 1, trials - successes)
    )
    return lo, hi


def empirical_ccdf(sample: Sequence[int], threshold: int) -> float:
    """Fraction of the sample strictly above the threshold."""
    if len(sample) == 0:
        raise ValueError("empty sample")
    return sum(1 for v in sample if v > threshold) / len(sample)


def _percentile_99(flat: np.ndarray) -> int:
    ordered = np.sort(flat, axis=None)
    idx = max(0, -(-99 * ordered.size // 100) - 1)
    return int(ordered[idx])


def _build_report(config, sampled, occ_sums, values) -> DominanceReport:
    reps = config.replications
    horizon = config.horizon

    mean_occupancy = {
        p: tuple((occ_sums[p] / reps).tolist()) for p in config.policies
    }
    stability = {
        p: _stability_check(occ_sums[p], reps, horizon) for p in config.policies
    }

    ccdf: dict[str, tuple] = {}
    mean_costs: dict[str, dict[str, tuple[float, ...]]] = {}
    violations: list[DominanceViolation] = []
    for cost in config.cost_functions:
        pooled = np.concatenate([values[p][cost].ravel() for p in config.policies])
        r_max = _percentile_99(pooled)
        rows = []
        for slot_idx, slot in enumerate(sampled):
            for threshold in range(r_max + 1):
                points = {}
                for p in config.policies:
                    k = int((values[p][cost][:, slot_idx] > threshold).sum())
                    lo, hi = clopper_pearson(k, reps)
                    points[p] = (k / reps, lo, hi)
                    rows.append((slot, threshold, p, k / reps, lo, hi))
                mwm_p, mwm_lo, _ = points[policies.MWM]
                for p in config.policies:
                    pol_p, _, pol_hi = points[p]
                    if mwm_lo > pol_hi:
                        violations.append(
                            DominanceViolation(
                                cost, slot, threshold, p,
                                mwm_p, pol_p, mwm_lo, pol_hi,
                            )
                        )
        ccdf[cost] = tuple(rows)
        mean_costs[cost] = {
            p: tuple((values[p][cost].sum(axis=0) / reps).tolist())
            for p in config.policies
        }

    return DominanceReport(
        policies=config.policies,
        cost_functions=config.cost_functions,
        replications=reps,
        horizon=horizon,
        sampled_slots=tuple(sampled),
        ccdf=ccdf,
        mean_costs=mean_costs,
        mean_occupancy=mean_occupancy,
        stability=stability,
        violations=tuple(violations),
    )


def _stability_check(occ_sum: np.ndarray, reps: int, horizon: int) -> StabilityCheck:
    i3 = horizon // 2
    i4 = (3 * horizon) // 4
    if i4 <= i3 or horizon <= i4:
        return StabilityCheck(0.0, 0.0, False)
    third = float(occ_sum[i3 + 1 : i4 + 1].sum()) / (reps * (i4 - i3))
    final = float(occ_sum[i4 + 1 : horizon + 1].sum()) / (reps * (horizon - i4))
    flagged = final > third * _GROWTH_FACTOR + _GROWTH_SLACK
    return StabilityCheck(third, final, flagged)


# --- order audit ------------------------------------------------------------

@dataclass(frozen=True)
class PreceqAuditReport:
    """Slot-by-slot comparison of the mwm trajectory against a baseline's.

    Exploratory: a slot where the mwm state is not below the baseline state
    in the partial order is reported, not treated as an error.
    """

    baseline: str
    replications: int
    horizon: int
    slots_checked: int
    slots_holding: int
    failures: tuple[tuple[int, int, QueueState, QueueState], ...]
    skipped_guard: tuple[tuple[int, int, int], ...]

    @property
    def fraction_holding(self) -> float:
        if self.slots_checked == 0:
            return 1.0
        return self.slots_holding / self.slots_checked


def per_slot_preceq_audit(config: SimConfig, baseline: str) -> PreceqAuditReport:
    """Check, on coupled paths, whether the mwm state stays below the baseline's.

    Guarded to desk scale because each slot needs a reachability search from
    the baseline state. Slots whose baseline occupancy exceeds the search
    guard are skipped and reported.
    """
    if baseline not in policies.POLICY_NAMES:
        raise ValueError(f"unknown policy {baseline!r}")
    if config.params.n_queues > AUDIT_MAX_QUEUES:
        raise ValueError(
            f"audit guard: n_queues {config.params.n_queues} > {AUDIT_MAX_QUEUES}"
        )
    if config.horizon > AUDIT_MAX_HORIZON:
        raise ValueError(
            f"audit guard: horizon {config.horizon} > {AUDIT_MAX_HORIZON}"
        )
    checked = holding = 0
    failures = []
    skipped = []
    closures: dict[QueueState, set[QueueState]] = {}
    for r in range(config.replications):
        path = SamplePath(config.params, config.seed, r, config.horizon)
        run_m = _simulate_one(config, path, policies.MWM, (), keep_states=True)
        run_b = _simulate_one(config, path, baseline, (), keep_states=True)
        for t in range(1, config.horizon + 1):
            xm = run_m.states[t]
            xb = run_b.states[t]
            if sum(xb) > PRECEQ_MAX_SUM:
                skipped.append((r, t, sum(xb)))
                continue
            checked += 1
            # The lower set is permutation-invariant, so cache it by the
            # sorted baseline state.
            key = tuple(sorted(xb))
            closure = closures.get(key)
            if closure is None:
                closure = reachable_below(key)
                closures[key] = closure
            if xm in closure:
                holding += 1
            else:
                failures.append((r, t, xm, xb))
    return PreceqAuditReport(
        baseline=baseline,
        replications=config.replications,
        horizon=config.horizon,
        slots_checked=checked,
        slots_holding=holding,
        failures=tuple(failures),
        skipped_guard=tuple(skipped),
    )


def format_audit_report(report: PreceqAuditReport) -> str:
    lines = [
        "per-slot partial-order audit (exploratory)",
        f"  baseline: {report.baseline}",
        f"  replications: {report.replications}, horizon: {report.horizon}",
        f"  slots checked: {report.slots_checked}",
        f"  slots where mwm state is below baseline: {report.slots_holding}",
        f"  fraction holding: {report.fraction_holding!r}",
        f"  slots skipped by search guard: {len(report.skipped_guard)}",
    ]
    for r, t, xm, xb in report.failures:
        lines.append(f"  NOT BELOW replication={r} slot={t} mwm={xm} baseline={xb}")
    return "\n".join(lines)


# --- file output -------------------------------------------------------------

def trace_csv_lines(config: SimConfig, records: Iterable[TraceRecord]):
    """Long-format trace rows, one line per (record, cost function)."""
    n = config.params.n_queues
    yield (
        "replication,slot,policy,cost_name,cost_value,mw_index,"
        + ",".join(f"x_{i}" for i in range(n))
    )
    for rec in records:
        state = ",".join(str(v) for v in rec.state)
        for cost_name, cost_value in zip(config.cost_functions, rec.costs):
            yield (
                f"{rec.replication},{rec.slot},{rec.policy},"
                f"{cost_name},{cost_value},{rec.mw_index},{state}"
            )


def dominance_csv_lines(report: DominanceReport, cost: str):
    """Tail-probability rows with confidence bounds for one cost function."""
    yield "slot,r,policy,ccdf,ci_low,ci_high"
    for slot, threshold, policy, ccdf, lo, hi in report.ccdf[cost]:
        yield f"{slot},{threshold},{policy},{ccdf!r},{lo!r},{hi!r}"


def write_lines(path, lines: Iterable[str]) -> None:
    """Write text lines with '\\n' endings and a trailing newline."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def format_dominance_summary(report: DominanceReport) -> str:
    lines = [
        "coupled dominance comparison",
        f"  policies: {', '.join(report.policies)}",
        f"  cost functions: {', '.join(report.cost_functions)}",
        f"  replications: {report.replications}, horizon: {report.horizon}",
        f"  sampled slots: {', '.join(str(t) for t in report.sampled_slots)}",
    ]
    for cost in report.cost_functions:
        lines.append(f"  mean {cost} at final sampled slot:")
        for p in report.policies:
            lines.append(f"    {p}: {report.mean_costs[cost][p][-1]!r}")
    for p in report.policies:
        s = report.stability[p]
        note = "FLAGGED: mean occupancy still growing" if s.flagged else "steady"
        lines.append(
            f"  stability {p}: third-quarter mean {s.third_quarter_mean!r}, "
            f"final-quarter mean {s.final_quarter_mean!r} ({note})"
        )
    lines.append(f"  dominance violations: {len(report.violations)}")
    for v in report.violations:
        lines.append(
            f"  VIOLATION cost={v.cost} slot={v.slot} r={v.threshold} "
            f"policy={v.policy} mwm_ccdf={v.mwm_ccdf!r} ({v.mwm_ci_low!r} lower bound) "
            f"exceeds {v.policy_ccdf!r} ({v.policy_ci_high!r} upper bound)"
        )
    return "\n".join(lines)
