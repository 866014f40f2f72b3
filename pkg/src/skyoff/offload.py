"""Offloading plans, service-mode classification, delay and energy models.

A plan assigns every task a master UAV, an optional set of cycle splits
toward slave UAVs, an optional cached-result source, and any cache
transfers needed to bring that result to the master.  Evaluation turns a
plan into per-task delay breakdowns and per-UAV energy figures.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from skyoff.domain import Scenario, TaskRequest
from skyoff.netmodel import ConnectivityGraph

MODE_O2O = "O2O"
MODE_O2M = "O2M"
MODE_M2O = "M2O"
MODE_M2M = "M2M"


class InfeasiblePlanError(ValueError):
    """A plan references a link that is down or a node it cannot use."""


@dataclass
class CacheMove:
    """One cached-content transfer between UAVs (sender pays the energy)."""

    from_uav: int
    to_uav: int
    content_id: str
    bits: float


@dataclass
class TaskPlan:
    """How one task is served."""

    master_uav: int
    splits: dict[int, float] = field(default_factory=dict)  # slave id -> cycles
    cache_moves: list[CacheMove] = field(default_factory=list)
    reuse_source: str | None = None  # content_id consumed instead of computing
    mode_tag: str | None = None  # descriptive, filled by classify_mode

    def offloaded_cycles(self) -> float:
        return sum(self.splits.values())


@dataclass
class OffloadPlan:
    tasks: dict[int, TaskPlan] = field(default_factory=dict)

    def covers(self, task_id: int) -> bool:
        return task_id in self.tasks


@dataclass
class DelayBreakdown:
    upload_s: float
    setup_s: float
    compute_s: float
    collect_s: float
    download_s: float

    @property
    def total_s(self) -> float:
        # literal component sum, so the exact-sum invariant holds by construction
        return self.upload_s + self.setup_s + self.compute_s + self.collect_s + self.download_s


@dataclass
class UavEnergy:
    uav_id: int
    compute_j: float
    tx_j: float
    budget_j: float
    violated: bool

    @property
    def total_j(self) -> float:
        return self.compute_j + self.tx_j


@dataclass
class TaskMetricsRow:
    task_id: int
    mode: str
    delay: DelayBreakdown


@dataclass
class PlanMetrics:
    task_rows: list[TaskMetricsRow]
    uav_rows: list[UavEnergy]
    mean_delay_s: float
    failed_tasks: int = 0

    @property
    def total_energy_j(self) -> float:
        return sum(r.total_j for r in self.uav_rows)

    def has_violation(self) -> bool:
        return any(r.violated for r in self.uav_rows)


# ---------------------------------------------------------------------------
# Reuse accounting


@dataclass
class ReuseEntry:
    content_id: str
    producer_task_id: int
    result_bits: float
    produced_at: float
    expiry: float


class ReuseLedger:
    """Tracks which task results are live for reuse; one entry per content."""

    def __init__(self):
        self.entries: dict[str, ReuseEntry] = {}

    def live(self, content_id: str, at: float) -> ReuseEntry | None:
        e = self.entries.get(content_id)
        if e is not None and e.produced_at <= at <= e.expiry:
            return e
        return None

    def register(self, content_id, producer_task_id, result_bits, produced_at, ttl):
        self.entries[content_id] = ReuseEntry(
            content_id=content_id,
            producer_task_id=producer_task_id,
            result_bits=result_bits,
            produced_at=produced_at,
            expiry=produced_at + ttl,
        )

    def prune(self, now: float) -> None:
        dead = [c for c, e in self.entries.items() if e.expiry < now]
        for c in dead:
            del self.entries[c]

    def copy(self) -> "ReuseLedger":
        out = ReuseLedger()
        out.entries = {c: ReuseEntry(**vars(e)) for c, e in self.entries.items()}
        return out


def apply_reuse(
    tasks: list[TaskRequest], ledger: ReuseLedger, t: float, ttl: float
) -> tuple[dict[int, ReuseEntry], ReuseLedger]:
    """Decide which tasks can consume an earlier task's cached result.

    Tasks are visited in arrival order.  A task whose content has a live
    ledger entry at its own arrival time becomes a reuse hit; the first
    task carrying a new content becomes the producer and registers an
    entry that expires TTL seconds after its arrival.  Entries already
    expired at time t are dropped first.  Returns (hits, updated ledger)
    where hits maps task id to the consumed entry.
    """
    ledger = ledger.copy()
    ledger.prune(t)
    hits: dict[int, ReuseEntry] = {}
    for task in sorted(tasks, key=lambda x: (x.arrival_time, x.id)):
        entry = ledger.live(task.content_id, task.arrival_time)
        if entry is not None and entry.producer_task_id != task.id:
            hits[task.id] = entry
        else:
            ledger.register(
                task.content_id, task.id, task.output_bits, task.arrival_time, ttl
            )
    return hits, ledger


# ---------------------------------------------------------------------------
# Mode classification


def classify_mode(plan: OffloadPlan, task: TaskRequest) -> str:
    """Derive the service-mode tag for one task under a plan.

    Sharing means the task either consumes a cached result or its own
    result is consumed by another task in the same plan; splitting means
    cycles are delegated to at least one slave.
    """
    tp = plan.tasks[task.id]
    shared = tp.reuse_source is not None
    if not shared and any(
        other.reuse_source == task.content_id
        for tid, other in plan.tasks.items()
        if tid != task.id
    ):
        shared = True
    split = bool(tp.splits)
    if shared and split:
        return MODE_M2M
    if split:
        return MODE_M2O
    if shared:
        return MODE_O2M
    return MODE_O2O


# ---------------------------------------------------------------------------
# Delay model


def _require_rate(graph: ConnectivityGraph, a, b) -> float:
    r = graph.rate(a, b)
    if r <= 0.0:
        raise InfeasiblePlanError(f"link {a}-{b} is down")
    return r


def task_delay(
    plan: OffloadPlan, task: TaskRequest, graph: ConnectivityGraph, scenario: Scenario
) -> DelayBreakdown:
    """Per-task delay decomposition under a plan.

    A reuse hit skips upload and compute entirely; a cache move, if the
    plan carries one, is paid in the collect phase.  For a computed task
    the master and its slaves form a fork-join: slaves each pay setup,
    input-chunk dispatch, compute, and result return, the master computes
    its retained cycles in parallel, and the join completes when the
    slowest branch does.  The critical branch's compute time is reported
    as compute_s and the rest of the joint span as collect_s.
    """
    tp = plan.tasks[task.id]
    m = ("uav", tp.master_uav)
    user = ("user", task.user_id)
    setup_latency = scenario.d2d_setup_latency

    if tp.reuse_source is not None:
        setup_s = setup_latency if tp.cache_moves else 0.0
        collect_s = 0.0
        for move in tp.cache_moves:
            r = _require_rate(graph, ("uav", move.from_uav), ("uav", move.to_uav))
            collect_s += move.bits / r
        download_s = task.output_bits / _require_rate(graph, m, user)
        return DelayBreakdown(0.0, setup_s, 0.0, collect_s, download_s)

    upload_s = task.input_bits / _require_rate(graph, user, m)
    setup_s = setup_latency if tp.splits else 0.0

    c_total = task.compute_cycles
    rho = task.input_bits / c_total  # input bits carried per offloaded cycle
    retained = c_total - tp.offloaded_cycles()
    f_m = scenario.uav(tp.master_uav).cpu_rate

    # branch times measured from the end of upload + serial setup; each
    # slave branch pays the setup latency again before dispatch starts
    branches: list[tuple[float, float, tuple[int, int]]] = []
    branches.append((retained / f_m, retained / f_m, (0, tp.master_uav)))
    for j in sorted(tp.splits):
        beta = tp.splits[j]
        r_out = _require_rate(graph, m, ("uav", j))
        r_back = _require_rate(graph, ("uav", j), m)
        f_j = scenario.uav(j).cpu_rate
        compute_j = beta / f_j
        span = (
            setup_latency
            + (beta * rho) / r_out
            + compute_j
            + (task.output_bits * beta / c_total) / r_back
        )
        branches.append((span, compute_j, (1, j)))

    joint = max(b[0] for b in branches)
    # critical branch decides the compute/collect split; ties go to the
    # master, then the lowest slave id
    critical = min((b for b in branches if b[0] == joint), key=lambda b: b[2])
    compute_s = critical[1]
    collect_s = joint - compute_s

    download_s = task.output_bits / _require_rate(graph, m, user)
    return DelayBreakdown(upload_s, setup_s, compute_s, collect_s, download_s)


# ---------------------------------------------------------------------------
# Energy model


def plan_energy(
    plan: OffloadPlan,
    tasks: list[TaskRequest],
    graph: ConnectivityGraph,
    scenario: Scenario,
) -> dict[int, tuple[float, float]]:
    """Per-UAV (compute_j, tx_j) energy a plan would spend.

    Compute energy is linear in executed cycles; transmission energy is
    tx_power times time on air.  Cache moves charge the sender.  Uploads
    from users are not charged to any UAV.
    """
    comp: dict[int, float] = {u.id: 0.0 for u in scenario.uavs}
    tx: dict[int, float] = {u.id: 0.0 for u in scenario.uavs}
    by_id = {t.id: t for t in tasks}
    for task_id, tp in plan.tasks.items():
        task = by_id[task_id]
        m = ("uav", tp.master_uav)
        if tp.reuse_source is not None:
            for move in tp.cache_moves:
                r = _require_rate(graph, ("uav", move.from_uav), ("uav", move.to_uav))
                sender = scenario.uav(move.from_uav)
                tx[move.from_uav] += sender.tx_power * (move.bits / r)
        else:
            c_total = task.compute_cycles
            rho = task.input_bits / c_total
            retained = c_total - tp.offloaded_cycles()
            comp[tp.master_uav] += scenario.uav(tp.master_uav).comp_energy_per_cycle * retained
            master = scenario.uav(tp.master_uav)
            for j, beta in sorted(tp.splits.items()):
                r_out = _require_rate(graph, m, ("uav", j))
                r_back = _require_rate(graph, ("uav", j), m)
                slave = scenario.uav(j)
                comp[j] += slave.comp_energy_per_cycle * beta
                tx[tp.master_uav] += master.tx_power * ((beta * rho) / r_out)
                tx[j] += slave.tx_power * ((task.output_bits * beta / c_total) / r_back)
        # result download to the requesting user, sent by the master
        r_down = _require_rate(graph, m, ("user", task.user_id))
        tx[tp.master_uav] += scenario.uav(tp.master_uav).tx_power * (
            task.output_bits / r_down
        )
    return {uid: (comp[uid], tx[uid]) for uid in comp}


# ---------------------------------------------------------------------------
# Plan evaluation


def evaluate_plan(
    plan: OffloadPlan, scenario: Scenario, graph: ConnectivityGraph
) -> PlanMetrics:
    """Combine per-task delays and per-UAV energy into PlanMetrics.

    Energy violation flags compare the UAV's already-spent energy plus
    this plan's cost against its budget.
    """
    tasks = [t for t in scenario.tasks if plan.covers(t.id)]
    rows = []
    for task in sorted(tasks, key=lambda t: t.id):
        bd = task_delay(plan, task, graph, scenario)
        rows.append(TaskMetricsRow(task.id, classify_mode(plan, task), bd))
    energy = plan_energy(plan, tasks, graph, scenario)
    uav_rows = []
    for u in sorted(scenario.uavs, key=lambda u: u.id):
        comp_j, tx_j = energy[u.id]
        total = comp_j + tx_j
        uav_rows.append(
            UavEnergy(
                uav_id=u.id,
                compute_j=comp_j,
                tx_j=tx_j,
                budget_j=u.energy_budget,
                violated=u.energy_spent + total > u.energy_budget,
            )
        )
    mean = (
        sum(r.delay.total_s for r in rows) / len(rows) if rows else 0.0
    )
    return PlanMetrics(task_rows=rows, uav_rows=uav_rows, mean_delay_s=mean)


def metrics_to_csv(metrics: PlanMetrics) -> str:
    """Serialize metrics to the three-section CSV schema.

    Floats are written with repr so output is byte-stable and round-trips
    exactly.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["task_id", "mode", "upload_s", "setup_s", "compute_s", "collect_s", "download_s", "total_s"]
    )
    for r in metrics.task_rows:
        d = r.delay
        w.writerow(
            [r.task_id, r.mode]
            + [repr(x) for x in (d.upload_s, d.setup_s, d.compute_s, d.collect_s, d.download_s, d.total_s)]
        )
    w.writerow(["uav_id", "compute_j", "tx_j", "total_j", "budget_j", "violated"])
    for u in metrics.uav_rows:
        w.writerow(
            [u.uav_id]
            + [repr(x) for x in (u.compute_j, u.tx_j, u.total_j, u.budget_j)]
            + [int(u.violated)]
        )
    w.writerow(["mean_delay_s", "failed_tasks", "total_energy_j"])
    w.writerow([repr(metrics.mean_delay_s), metrics.failed_tasks, repr(metrics.total_energy_j)])
    return buf.getvalue()
