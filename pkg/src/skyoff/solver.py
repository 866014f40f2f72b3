"""Plan construction and optimization.

Greedy arrival-order construction followed by first-improvement local
search, with an exhaustive oracle for small instances.  Everything here
is deterministic: scan orders are fixed and ties break on ids or on the
lexicographic plan encoding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from skyoff.domain import Scenario, TaskRequest
from skyoff.netmodel import ConnectivityGraph, build_graph
from skyoff.offload import (
    CacheMove,
    InfeasiblePlanError,
    OffloadPlan,
    PlanMetrics,
    ReuseLedger,
    TaskPlan,
    apply_reuse,
    evaluate_plan,
    plan_energy,
)

STATUS_ORACLE = "optimal_oracle"
STATUS_LOCAL = "local_optimum"
STATUS_INFEASIBLE = "infeasible"

MOVE_KINDS = ("reassign_master", "add_chunk", "remove_chunk", "pair_reuse")

ORACLE_MAX_UAVS = 3
ORACLE_MAX_TASKS = 3
ORACLE_MAX_K = 2

MODE_RESTRICTIONS = ("o2o", "o2m", "m2o", "m2m")


class SolverInfeasibleError(ValueError):
    """Some task has no energy-feasible reachable UAV."""


class OracleCapError(ValueError):
    """Instance exceeds the exhaustive-search caps."""


@dataclass
class SolverConfig:
    split_granularity: int | None = None  # None: take the scenario's K
    max_local_search_iters: int = 1000
    neighborhood: tuple[str, ...] = MOVE_KINDS
    rng_seed: int = 0


@dataclass
class SolveResult:
    plan: OffloadPlan | None
    metrics: PlanMetrics | None
    status: str
    iterations: int


def _copy_plan(plan: OffloadPlan) -> OffloadPlan:
    out = OffloadPlan()
    for tid, tp in plan.tasks.items():
        out.tasks[tid] = TaskPlan(
            master_uav=tp.master_uav,
            splits=dict(tp.splits),
            cache_moves=[CacheMove(**vars(m)) for m in tp.cache_moves],
            reuse_source=tp.reuse_source,
            mode_tag=tp.mode_tag,
        )
    return out


def _encode_plan(plan: OffloadPlan):
    """Lexicographic encoding used for deterministic tie-breaking."""
    out = []
    for tid in sorted(plan.tasks):
        tp = plan.tasks[tid]
        out.append(
            (
                tid,
                tp.master_uav,
                tuple(sorted(tp.splits.items())),
                tp.reuse_source or "",
                tuple(
                    (m.from_uav, m.to_uav, m.content_id, m.bits) for m in tp.cache_moves
                ),
            )
        )
    return tuple(out)


def _energy_ok(plan: OffloadPlan, scenario: Scenario, graph: ConnectivityGraph) -> bool:
    tasks = [t for t in scenario.tasks if plan.covers(t.id)]
    try:
        energy = plan_energy(plan, tasks, graph, scenario)
    except InfeasiblePlanError:
        return False
    for u in scenario.uavs:
        comp_j, tx_j = energy[u.id]
        if u.energy_spent + comp_j + tx_j > u.energy_budget:
            return False
    return True


def check_feasibility(
    plan: OffloadPlan, scenario: Scenario, graph: ConnectivityGraph | None = None
) -> list[str]:
    """List every constraint a plan violates; empty means feasible."""
    if graph is None:
        graph = build_graph(scenario, 0.0)
    out: list[str] = []
    k = scenario.split_granularity
    for tid in sorted(plan.tasks):
        tp = plan.tasks[tid]
        task = scenario.task(tid)
        prefix = f"task {tid}"
        if tp.reuse_source is not None:
            if tp.splits:
                out.append(f"{prefix}: reuse task must not carry splits")
        else:
            chunk = task.compute_cycles / k
            total_split = tp.offloaded_cycles()
            if total_split > task.compute_cycles:
                out.append(f"{prefix}: splits exceed compute_cycles")
            for j, beta in sorted(tp.splits.items()):
                if beta <= 0:
                    out.append(f"{prefix}: split to uav {j} must be positive")
                    continue
                n = beta / chunk
                if abs(n - round(n)) > 1e-9:
                    out.append(
                        f"{prefix}: split to uav {j} not a multiple of C/{k}"
                    )
            for j in sorted(tp.splits):
                if not graph.connected(("uav", tp.master_uav), ("uav", j)):
                    out.append(f"{prefix}: link uav {tp.master_uav} to uav {j} is down")
        user = ("user", task.user_id)
        if not graph.connected(user, ("uav", tp.master_uav)):
            out.append(
                f"{prefix}: link user {task.user_id} to uav {tp.master_uav} is down"
            )
        for m in tp.cache_moves:
            if not graph.connected(("uav", m.from_uav), ("uav", m.to_uav)):
                out.append(f"{prefix}: link uav {m.from_uav} to uav {m.to_uav} is down")
    tasks = [t for t in scenario.tasks if plan.covers(t.id)]
    try:
        energy = plan_energy(plan, tasks, graph, scenario)
    except InfeasiblePlanError:
        energy = None
    if energy is not None:
        for u in scenario.uavs:
            comp_j, tx_j = energy[u.id]
            if u.energy_spent + comp_j + tx_j > u.energy_budget:
                out.append(f"uav {u.id}: energy budget exceeded")
    return out


# ---------------------------------------------------------------------------
# Greedy construction


def _reuse_holder(
    plan: OffloadPlan, scenario: Scenario, producer_task_id: int, content_id: str, at: float
) -> int | None:
    """Find the UAV holding a reusable copy of content_id, if any."""
    tp = plan.tasks.get(producer_task_id)
    if tp is not None and tp.reuse_source is None:
        return tp.master_uav
    holders = [
        u.id for u in scenario.uavs if u.live_cache_entry(content_id, at) is not None
    ]
    return min(holders) if holders else None


def greedy_construct(
    scenario: Scenario,
    graph: ConnectivityGraph,
    ledger: ReuseLedger | None = None,
    now: float = 0.0,
) -> OffloadPlan:
    """Arrival-order construction: reuse where possible, else the whole
    task goes to the energy-feasible UAV with the smallest standalone
    delay (ties to the lower UAV id).

    Raises SolverInfeasibleError when a task fits nowhere.
    """
    if ledger is None:
        ledger = ReuseLedger()
    hits, _ = apply_reuse(scenario.tasks, ledger, now, scenario.reuse_ttl)
    plan = OffloadPlan()
    for task in sorted(scenario.tasks, key=lambda t: (t.arrival_time, t.id)):
        assigned = False
        entry = hits.get(task.id)
        holder = None
        if entry is not None:
            holder = _reuse_holder(
                plan, scenario, entry.producer_task_id, task.content_id, task.arrival_time
            )
        if holder is None:
            # no in-batch producer: a pre-placed cached copy also counts
            holders = [
                u.id
                for u in scenario.uavs
                if u.live_cache_entry(task.content_id, task.arrival_time) is not None
            ]
            holder = min(holders) if holders else None
        if holder is not None:
            candidate = TaskPlan(master_uav=holder, reuse_source=task.content_id)
            plan.tasks[task.id] = candidate
            if (
                graph.connected(("user", task.user_id), ("uav", holder))
                and _energy_ok(plan, scenario, graph)
            ):
                assigned = True
            else:
                del plan.tasks[task.id]
        if not assigned:
            best = None
            for u in sorted(scenario.uavs, key=lambda u: u.id):
                ukey = ("uav", u.id)
                user = ("user", task.user_id)
                if not graph.connected(user, ukey):
                    continue
                r = graph.rate(user, ukey)
                delay = (
                    task.input_bits / r
                    + task.compute_cycles / u.cpu_rate
                    + task.output_bits / r
                )
                plan.tasks[task.id] = TaskPlan(master_uav=u.id)
                ok = _energy_ok(plan, scenario, graph)
                del plan.tasks[task.id]
                if ok and (best is None or delay < best[0]):
                    best = (delay, u.id)
            if best is None:
                raise SolverInfeasibleError(
                    f"task {task.id}: no energy-feasible reachable UAV"
                )
            plan.tasks[task.id] = TaskPlan(master_uav=best[1])
    return plan


# ---------------------------------------------------------------------------
# Local search


def _chunk(task: TaskRequest, k: int) -> float:
    return task.compute_cycles / k


def _candidate_moves(plan: OffloadPlan, scenario: Scenario, k: int, kinds):
    """Yield candidate plans in the fixed scan order: increasing task id,
    then move kind, then target UAV id."""
    uav_ids = sorted(u.id for u in scenario.uavs)
    tasks_by_id = {t.id: t for t in scenario.tasks if plan.covers(t.id)}
    for tid in sorted(plan.tasks):
        tp = plan.tasks[tid]
        task = tasks_by_id[tid]
        for kind in MOVE_KINDS:
            if kind not in kinds:
                continue
            if kind == "reassign_master" and tp.reuse_source is None:
                for v in uav_ids:
                    if v == tp.master_uav or v in tp.splits:
                        continue
                    cand = _copy_plan(plan)
                    cand.tasks[tid].master_uav = v
                    yield cand
            elif kind == "add_chunk" and tp.reuse_source is None:
                chunk = _chunk(task, k)
                if task.compute_cycles - tp.offloaded_cycles() < chunk - 1e-9:
                    continue
                for v in uav_ids:
                    if v == tp.master_uav:
                        continue
                    cand = _copy_plan(plan)
                    ctp = cand.tasks[tid]
                    n = round(ctp.splits.get(v, 0.0) / chunk) + 1
                    ctp.splits[v] = n * chunk
                    yield cand
            elif kind == "remove_chunk" and tp.reuse_source is None:
                chunk = _chunk(task, k)
                for v in sorted(tp.splits):
                    cand = _copy_plan(plan)
                    ctp = cand.tasks[tid]
                    n = round(ctp.splits[v] / chunk) - 1
                    if n <= 0:
                        del ctp.splits[v]
                    else:
                        ctp.splits[v] = n * chunk
                    yield cand
            elif kind == "pair_reuse" and tp.reuse_source is None:
                # convert this task into a consumer of an earlier identical task
                for pid in sorted(plan.tasks):
                    if pid == tid:
                        continue
                    producer = tasks_by_id[pid]
                    ptp = plan.tasks[pid]
                    if (
                        ptp.reuse_source is not None
                        or producer.content_id != task.content_id
                        or producer.arrival_time > task.arrival_time
                        or task.arrival_time > producer.arrival_time + scenario.reuse_ttl
                    ):
                        continue
                    cand = _copy_plan(plan)
                    cand.tasks[tid] = TaskPlan(
                        master_uav=ptp.master_uav, reuse_source=task.content_id
                    )
                    yield cand


def local_search(
    plan: OffloadPlan,
    scenario: Scenario,
    config: SolverConfig | None = None,
    graph: ConnectivityGraph | None = None,
) -> SolveResult:
    """First-improvement descent over the move neighborhood.

    Scans the neighborhood in a fixed order, applies the first strictly
    improving feasible move, and repeats until no move improves or the
    iteration cap is hit.  Mean delay never increases.
    """
    if config is None:
        config = SolverConfig()
    if graph is None:
        graph = build_graph(scenario, 0.0)
    k = config.split_granularity or scenario.split_granularity

    current = _copy_plan(plan)
    metrics = evaluate_plan(current, scenario, graph)
    iterations = 0
    while iterations < config.max_local_search_iters:
        accepted = False
        for cand in _candidate_moves(current, scenario, k, config.neighborhood):
            if check_feasibility(cand, scenario, graph):
                continue
            try:
                cm = evaluate_plan(cand, scenario, graph)
            except InfeasiblePlanError:
                continue
            if cm.mean_delay_s < metrics.mean_delay_s:
                current, metrics = cand, cm
                iterations += 1
                accepted = True
                break
        if not accepted:
            break
    return SolveResult(current, metrics, STATUS_LOCAL, iterations)


def solve(
    scenario: Scenario,
    config: SolverConfig | None = None,
    graph: ConnectivityGraph | None = None,
    ledger: ReuseLedger | None = None,
    now: float = 0.0,
) -> SolveResult:
    """Greedy construction plus local search; infeasibility is a status,
    not an exception."""
    if graph is None:
        graph = build_graph(scenario, now)
    try:
        plan = greedy_construct(scenario, graph, ledger, now)
    except SolverInfeasibleError:
        return SolveResult(None, None, STATUS_INFEASIBLE, 0)
    return local_search(plan, scenario, config, graph)


# ---------------------------------------------------------------------------
# Exhaustive oracle


def _split_vectors(uav_ids, master, k):
    """All ways to hand 0..k chunks to the non-master UAVs."""
    slaves = [v for v in uav_ids if v != master]
    for counts in itertools.product(range(k + 1), repeat=len(slaves)):
        if sum(counts) > k:
            continue
        yield {v: n for v, n in zip(slaves, counts) if n > 0}


def _reuse_sources(task, tasks, scenario, at):
    """Reuse options for one task: an earlier in-batch producer, or a UAV
    already holding the content."""
    out = []
    for other in tasks:
        if (
            other.content_id == task.content_id
            and (other.arrival_time, other.id) < (task.arrival_time, task.id)
            and task.arrival_time <= other.arrival_time + scenario.reuse_ttl
        ):
            out.append(("task", other.id))
    for u in sorted(scenario.uavs, key=lambda u: u.id):
        item = u.live_cache_entry(task.content_id, at)
        if item is not None:
            out.append(("cache", u.id, item.bits))
    return out


def brute_force_oracle(
    scenario: Scenario,
    k: int | None = None,
    mode: str | None = None,
    graph: ConnectivityGraph | None = None,
) -> SolveResult:
    """Exact minimizer of mean delay over the full plan lattice.

    Enumerates every reuse pairing, master assignment and chunk split,
    filters by feasibility, and keeps the best plan (ties broken by the
    lexicographic plan encoding).  Refuses instances beyond the caps.
    An optional mode restriction prunes the search space: "o2o" forbids
    reuse and splits, "o2m" forbids splits, "m2o" forbids reuse, "m2m"
    allows everything.
    """
    if k is None:
        k = scenario.split_granularity
    if mode is not None and mode not in MODE_RESTRICTIONS:
        raise ValueError(f"unknown mode restriction: {mode}")
    n_uavs, n_tasks = len(scenario.uavs), len(scenario.tasks)
    if n_uavs > ORACLE_MAX_UAVS or n_tasks > ORACLE_MAX_TASKS or k > ORACLE_MAX_K:
        raise OracleCapError(
            f"instance exceeds oracle caps: {n_uavs} UAVs (max {ORACLE_MAX_UAVS}), "
            f"{n_tasks} tasks (max {ORACLE_MAX_TASKS}), K={k} (max {ORACLE_MAX_K})"
        )
    if graph is None:
        graph = build_graph(scenario, 0.0)

    allow_reuse = mode in (None, "o2m", "m2m")
    allow_split = mode in (None, "m2o", "m2m")

    tasks = sorted(scenario.tasks, key=lambda t: t.id)
    uav_ids = sorted(u.id for u in scenario.uavs)

    per_task_sources = []
    for t in tasks:
        options = [("compute",)]
        if allow_reuse:
            options += _reuse_sources(t, tasks, scenario, t.arrival_time)
        per_task_sources.append(options)

    def task_assignments(task, source):
        if source[0] == "compute":
            chunk = task.compute_cycles / k
            for m in uav_ids:
                if allow_split:
                    for counts in _split_vectors(uav_ids, m, k):
                        yield TaskPlan(
                            master_uav=m,
                            splits={v: n * chunk for v, n in counts.items()},
                        )
                else:
                    yield TaskPlan(master_uav=m)
        else:
            # a consumer may sit on the holding UAV or pull the result over
            for m in uav_ids:
                yield ("consumer", m, source)

    best = None
    examined = 0
    for combo in itertools.product(*per_task_sources):
        # a producer referenced by a consumer must itself compute
        ok = True
        for src in combo:
            if src[0] == "task":
                pidx = next(i for i, t in enumerate(tasks) if t.id == src[1])
                if combo[pidx][0] != "compute":
                    ok = False
                    break
        if not ok:
            continue
        per_task_plans = [
            list(task_assignments(t, src)) for t, src in zip(tasks, combo)
        ]
        for choice in itertools.product(*per_task_plans):
            plan = OffloadPlan()
            # computing tasks first so a consumer can look up its
            # producer's master regardless of task ordering
            for task, picked in zip(tasks, choice):
                if isinstance(picked, TaskPlan):
                    plan.tasks[task.id] = TaskPlan(
                        master_uav=picked.master_uav, splits=dict(picked.splits)
                    )
            for task, picked in zip(tasks, choice):
                if isinstance(picked, TaskPlan):
                    continue
                _, m, source = picked
                if source[0] == "task":
                    holder = plan.tasks[source[1]].master_uav
                    bits = scenario.task(source[1]).output_bits
                else:
                    holder = source[1]
                    bits = source[2]
                moves = []
                if holder != m:
                    moves.append(CacheMove(holder, m, task.content_id, bits))
                plan.tasks[task.id] = TaskPlan(
                    master_uav=m,
                    reuse_source=task.content_id,
                    cache_moves=moves,
                )
            if check_feasibility(plan, scenario, graph):
                continue
            try:
                metrics = evaluate_plan(plan, scenario, graph)
            except InfeasiblePlanError:
                continue
            examined += 1
            key = (metrics.mean_delay_s, _encode_plan(plan))
            if best is None or key < best[0]:
                best = (key, plan, metrics)
    if best is None:
        return SolveResult(None, None, STATUS_INFEASIBLE, examined)
    return SolveResult(best[1], best[2], STATUS_ORACLE, examined)


def solve_result_to_jsonable(result: SolveResult) -> dict:
    out = {"status": result.status, "iterations": result.iterations}
    if result.plan is not None:
        out["plan"] = {
            str(tid): {
                "master_uav": tp.master_uav,
                "splits": {str(j): b for j, b in sorted(tp.splits.items())},
                "reuse_source": tp.reuse_source,
                "cache_moves": [
                    {
                        "from_uav": m.from_uav,
                        "to_uav": m.to_uav,
                        "content_id": m.content_id,
                        "bits": m.bits,
                    }
                    for m in tp.cache_moves
                ],
            }
            for tid, tp in sorted(result.plan.tasks.items())
        }
    if result.metrics is not None:
        out["mean_delay_s"] = result.metrics.mean_delay_s
        out["total_energy_j"] = result.metrics.total_energy_j
    return out
