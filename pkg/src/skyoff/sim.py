"""Deterministic discrete-event engine and synthetic input generators.

The engine copies all node state out of the input scenario, so a run
never mutates its inputs and rerunning the same scenario reproduces the
trace byte for byte.  When a task arrives the policy plans it against
the current geometry and energy state; the whole event chain (upload,
dispatch, compute, return, download) is then scheduled from the same
closed-form decomposition the evaluator uses, with per-event energy
debits that realize the reservation made at solve time.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from skyoff.deploy import RequestLog, build_demand_map, detect_hotspots, reposition
from skyoff.domain import CachedItem, Scenario, TaskRequest
from skyoff.forecast.model import ForecastConfig, LoadSeries
from skyoff.forecast.split import split_by_forecast
from skyoff.forecast.train import forecast as roll_forecast
from skyoff.forecast.train import train
from skyoff.netmodel import build_graph
from skyoff.offload import (
    DelayBreakdown,
    InfeasiblePlanError,
    OffloadPlan,
    PlanMetrics,
    TaskMetricsRow,
    TaskPlan,
    UavEnergy,
    classify_mode,
    plan_energy,
    task_delay,
)
from skyoff.solver import (
    SolverInfeasibleError,
    check_feasibility,
    greedy_construct,
    local_search,
)

POLICIES = ("static_greedy", "greedy_plus_local_search", "forecast_driven")

# sub-seed offsets from the scenario/CLI seed, one knob upstream
SEED_OFFSET_WORKLOAD = 1
SEED_OFFSET_FORECAST = 2
SEED_OFFSET_SOLVER = 3


@dataclass
class EngineConfig:
    mobility_period: float = 1.0  # s between position updates
    forecast_period: float = 10.0  # s between load samples
    redeploy_period: float | None = None  # s; None disables redeploy ticks
    redeploy_k: int = 1  # hotspots targeted per redeploy tick
    cell_size: float = 100.0  # m, demand grid resolution
    vmax: float = 20.0  # m/s repositioning speed cap
    # engine-side forecaster (deliberately small; the offline experiment
    # uses its own config)
    forecast_window: int = 12
    forecast_horizon: int = 6
    forecast_hidden: int = 8
    forecast_epochs: int = 2
    forecast_lr: float = 0.05


class SimEngine:
    """Single-threaded event engine over one scenario."""

    def __init__(self, scenario: Scenario, policy: str, config: EngineConfig | None = None):
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}, expected one of {POLICIES}")
        self.policy = policy
        self.config = config or EngineConfig()
        self.scenario = scenario
        # engine-owned copies; the input scenario is never mutated
        self.uavs = [
            replace(u, cache_contents=[replace(ci) for ci in u.cache_contents])
            for u in scenario.uavs
        ]
        self.users = [replace(u) for u in scenario.users]
        self._uav_by_id = {u.id: u for u in self.uavs}

        self._heap: list[tuple[float, int, str, dict]] = []
        self._seq = 0
        self._rec_seq = 0
        self.records: list[dict] = []
        self.completed = 0
        self.failed = 0
        self.reserved: dict[int, dict[int, float]] = {}  # task_id -> uav -> J
        self.active: dict[int, set[int]] = {}  # task_id -> participating uavs
        self.arrival_log = RequestLog()
        self.tx_acc: dict[int, float] = {u.id: 0.0 for u in self.uavs}
        self.load_hist: dict[int, list[float]] = {u.id: [] for u in self.uavs}
        self.forecasts: dict[int, list[float]] = {}
        self._last_time = 0.0

    # -- plumbing -----------------------------------------------------------

    def _push(self, time: float, kind: str, payload: dict) -> None:
        heapq.heappush(self._heap, (time, self._seq, kind, payload))
        self._seq += 1

    def _record(self, time: float, kind: str, **fields) -> None:
        rec = {"t": time, "seq": self._rec_seq, "kind": kind}
        rec.update(fields)
        self.records.append(rec)
        self._rec_seq += 1
        self._last_time = max(self._last_time, time)

    def _reserved_total(self, uav_id: int) -> float:
        return sum(per.get(uav_id, 0.0) for per in self.reserved.values())

    def _solve_view(self, task: TaskRequest) -> Scenario:
        view_uavs = [
            replace(u, energy_spent=min(
                u.energy_budget, u.energy_spent + self._reserved_total(u.id)
            ))
            for u in self.uavs
        ]
        return Scenario(
            uavs=view_uavs,
            users=self.users,
            tasks=[task],
            link_params=self.scenario.link_params,
            d2d_setup_latency=self.scenario.d2d_setup_latency,
            split_granularity=self.scenario.split_granularity,
            reuse_ttl=self.scenario.reuse_ttl,
            horizon=self.scenario.horizon,
            seed=self.scenario.seed,
        )

    def _prune_caches(self, now: float) -> None:
        for u in self.uavs:
            u.cache_contents[:] = [ci for ci in u.cache_contents if ci.expiry_time >= now]

    def _busy_uavs(self) -> set[int]:
        out: set[int] = set()
        for uavs in self.active.values():
            out |= uavs
        return out

    # -- planning -----------------------------------------------------------

    def _plan_task(self, task: TaskRequest, view: Scenario, graph) -> OffloadPlan:
        if self.policy == "forecast_driven" and len(self.forecasts) == len(self.uavs):
            plan = self._forecast_plan(task, view, graph)
            if plan is not None:
                return plan
        plan = greedy_construct(view, graph, now=task.arrival_time)
        if self.policy == "greedy_plus_local_search":
            plan = local_search(plan, view, graph=graph).plan
        return plan

    def _forecast_plan(self, task: TaskRequest, view: Scenario, graph) -> OffloadPlan | None:
        try:
            shares = split_by_forecast(task, self.forecasts, view.split_granularity)
        except ValueError:
            return None
        master = min(shares, key=lambda uid: (-shares[uid], uid))
        splits = {uid: c for uid, c in shares.items() if uid != master and c > 0.0}
        plan = OffloadPlan()
        plan.tasks[task.id] = TaskPlan(master_uav=master, splits=splits)
        if check_feasibility(plan, view, graph):
            return None
        return plan

    # -- event handlers -----------------------------------------------------

    def _on_arrival(self, now: float, task_id: int) -> None:
        task = self.scenario.task(task_id)
        self._prune_caches(now)
        user = next(u for u in self.users if u.id == task.user_id)
        self.arrival_log.append(now, task.user_id, task.content_id, user.position)
        self._record(now, "task_arrival", task_id=task_id)

        view = self._solve_view(task)
        graph = build_graph(view, 0.0)
        try:
            plan = self._plan_task(task, view, graph)
            bd = task_delay(plan, task, graph, view)
            energy = plan_energy(plan, [task], graph, view)
        except (SolverInfeasibleError, InfeasiblePlanError) as exc:
            self.failed += 1
            self._record(now, "task_failed", task_id=task_id, reason=str(exc))
            return

        tp = plan.tasks[task.id]
        self.reserved[task_id] = {
            uid: comp + tx for uid, (comp, tx) in energy.items() if comp + tx > 0.0
        }
        participants = {tp.master_uav} | set(tp.splits) | {
            m.from_uav for m in tp.cache_moves
        }
        self.active[task_id] = participants
        self._record(
            now,
            "task_planned",
            task_id=task_id,
            master=tp.master_uav,
            splits={str(j): b for j, b in sorted(tp.splits.items())},
            reuse=tp.reuse_source is not None,
            mode=classify_mode(plan, task),
        )
        self._schedule_chain(now, task, tp, bd, graph, view)

    def _schedule_chain(self, t0, task, tp, bd: DelayBreakdown, graph, view) -> None:
        m = ("uav", tp.master_uav)
        user = ("user", task.user_id)
        master = view.uav(tp.master_uav)
        setup = view.d2d_setup_latency
        done_t = t0 + bd.total_s

        if tp.reuse_source is not None:
            cur = t0 + bd.setup_s
            for move in tp.cache_moves:
                rate = graph.rate(("uav", move.from_uav), ("uav", move.to_uav))
                dur = move.bits / rate
                sender = view.uav(move.from_uav)
                cur += dur
                self._push(cur, "transfer_done", {
                    "task_id": task.id, "what": "cache_move",
                    "from": move.from_uav, "to": move.to_uav,
                    "bits": move.bits, "rate": rate,
                    "uav": move.from_uav, "energy_j": sender.tx_power * dur,
                    "cache_as": move.content_id,
                })
        else:
            rate_up = graph.rate(user, m)
            self._push(t0 + bd.upload_s, "transfer_done", {
                "task_id": task.id, "what": "upload",
                "from": task.user_id, "to": tp.master_uav,
                "bits": task.input_bits, "rate": rate_up,
                "uav": None, "energy_j": 0.0,
            })
            phase = t0 + bd.upload_s + bd.setup_s
            c_total = task.compute_cycles
            rho = task.input_bits / c_total
            retained = c_total - tp.offloaded_cycles()
            if retained > 0.0:
                self._push(phase + retained / master.cpu_rate, "compute_done", {
                    "task_id": task.id, "uav": tp.master_uav, "cycles": retained,
                    "energy_j": master.comp_energy_per_cycle * retained,
                })
            for j in sorted(tp.splits):
                beta = tp.splits[j]
                slave = view.uav(j)
                r_out = graph.rate(m, ("uav", j))
                r_back = graph.rate(("uav", j), m)
                d_out = (beta * rho) / r_out
                d_cmp = beta / slave.cpu_rate
                back_bits = task.output_bits * beta / c_total
                d_back = back_bits / r_back
                t_disp = phase + setup + d_out
                self._push(t_disp, "transfer_done", {
                    "task_id": task.id, "what": "dispatch",
                    "from": tp.master_uav, "to": j,
                    "bits": beta * rho, "rate": r_out,
                    "uav": tp.master_uav, "energy_j": master.tx_power * d_out,
                })
                self._push(t_disp + d_cmp, "compute_done", {
                    "task_id": task.id, "uav": j, "cycles": beta,
                    "energy_j": slave.comp_energy_per_cycle * beta,
                })
                self._push(t_disp + d_cmp + d_back, "transfer_done", {
                    "task_id": task.id, "what": "return",
                    "from": j, "to": tp.master_uav,
                    "bits": back_bits, "rate": r_back,
                    "uav": j, "energy_j": slave.tx_power * d_back,
                })

        rate_down = graph.rate(m, user)
        d_down = task.output_bits / rate_down
        self._push(done_t, "transfer_done", {
            "task_id": task.id, "what": "download",
            "from": tp.master_uav, "to": task.user_id,
            "bits": task.output_bits, "rate": rate_down,
            "uav": tp.master_uav, "energy_j": master.tx_power * d_down,
        })
        self._push(done_t, "task_done", {
            "task_id": task.id, "master": tp.master_uav,
            "mode": classify_mode_from_parts(tp),
            "upload_s": bd.upload_s, "setup_s": bd.setup_s,
            "compute_s": bd.compute_s, "collect_s": bd.collect_s,
            "download_s": bd.download_s, "total_s": bd.total_s,
            "content_id": task.content_id, "output_bits": task.output_bits,
        })

    def _on_transfer_done(self, now: float, p: dict) -> None:
        uid = p.get("uav")
        e = p.get("energy_j", 0.0)
        if uid is not None:
            self._uav_by_id[uid].energy_spent += e
            per = self.reserved.get(p["task_id"])
            if per is not None and uid in per:
                per[uid] -= e
            self.tx_acc[uid] += p["bits"] / p["rate"]
        self._record(
            now, "transfer_done",
            task_id=p["task_id"], what=p["what"],
            src=p["from"], dst=p["to"], bits=p["bits"], rate=p["rate"],
            uav=uid, energy_j=e,
        )
        if p.get("cache_as") is not None:
            self._try_cache(p["to"], p["cache_as"], p["bits"], now)

    def _on_compute_done(self, now: float, p: dict) -> None:
        uid = p["uav"]
        self._uav_by_id[uid].energy_spent += p["energy_j"]
        per = self.reserved.get(p["task_id"])
        if per is not None and uid in per:
            per[uid] -= p["energy_j"]
        self._record(
            now, "compute_done",
            task_id=p["task_id"], uav=uid, cycles=p["cycles"], energy_j=p["energy_j"],
        )

    def _try_cache(self, uav_id: int, content_id: str, bits: float, now: float) -> None:
        u = self._uav_by_id[uav_id]
        self._prune_caches(now)
        if u.live_cache_entry(content_id, now) is not None:
            return
        if u.cached_bits() + bits <= u.cache_capacity:
            u.cache_contents.append(
                CachedItem(content_id, bits, now + self.scenario.reuse_ttl)
            )

    def _on_task_done(self, now: float, p: dict) -> None:
        self.completed += 1
        self.reserved.pop(p["task_id"], None)
        self.active.pop(p["task_id"], None)
        self._record(
            now, "task_done",
            task_id=p["task_id"], mode=p["mode"],
            upload_s=p["upload_s"], setup_s=p["setup_s"],
            compute_s=p["compute_s"], collect_s=p["collect_s"],
            download_s=p["download_s"], total_s=p["total_s"],
        )
        # a finished result is cacheable at the master for the TTL
        self._try_cache(p["master"], p["content_id"], p["output_bits"], now)

    def _on_mobility_tick(self, now: float) -> None:
        dt = self.config.mobility_period
        for node in self.uavs + self.users:
            node.position = tuple(
                pc + vc * dt for pc, vc in zip(node.position, node.velocity)
            )
        self._record(now, "mobility_tick")

    def _on_forecast_tick(self, now: float) -> None:
        period = self.config.forecast_period
        loads = {}
        for u in self.uavs:
            sample = min(1.0, self.tx_acc[u.id] / period)
            self.tx_acc[u.id] = 0.0
            self.load_hist[u.id].append(sample)
            loads[str(u.id)] = sample
        self._record(now, "forecast_tick", loads=loads)
        if self.policy != "forecast_driven":
            return
        cfg = self.config
        need = cfg.forecast_window + cfg.forecast_horizon
        for u in self.uavs:
            hist = self.load_hist[u.id][-4 * need :]
            if len(hist) < need:
                continue
            fc = ForecastConfig(
                window=cfg.forecast_window,
                horizon=cfg.forecast_horizon,
                hidden_size=cfg.forecast_hidden,
                learning_rate=cfg.forecast_lr,
                epochs=cfg.forecast_epochs,
                seed=self.scenario.seed + SEED_OFFSET_FORECAST,
            )
            result = train(hist, fc)
            preds = roll_forecast(
                result.model, hist[-cfg.forecast_window :], cfg.forecast_horizon
            )
            self.forecasts[u.id] = [float(x) for x in preds]

    def _on_redeploy_tick(self, now: float) -> None:
        window = self.config.redeploy_period
        moved: dict[str, list[float]] = {}
        dmap = build_demand_map(
            self.arrival_log, window, now=now, cell_size=self.config.cell_size
        )
        try:
            centroids = detect_hotspots(dmap, self.config.redeploy_k)
        except ValueError:
            centroids = []
        if centroids:
            new_vel = reposition(
                self.uavs, centroids, window, self.config.vmax, self._busy_uavs()
            )
            for uid in sorted(new_vel):
                self._uav_by_id[uid].velocity = new_vel[uid]
                moved[str(uid)] = list(new_vel[uid])
        self._record(now, "redeploy_tick", moved=moved)

    # -- main loop ----------------------------------------------------------

    def run(self) -> tuple[PlanMetrics, str]:
        s = self.scenario
        self._record(
            0.0, "init",
            policy=self.policy, seed=s.seed, horizon=s.horizon,
            uavs=[
                {"id": u.id, "budget_j": u.energy_budget, "spent0_j": u.energy_spent}
                for u in sorted(self.uavs, key=lambda u: u.id)
            ],
        )
        for task in sorted(s.tasks, key=lambda t: (t.arrival_time, t.id)):
            if task.arrival_time <= s.horizon:
                self._push(task.arrival_time, "task_arrival", {"task_id": task.id})
        n_ticks = int(s.horizon / self.config.mobility_period)
        for i in range(1, n_ticks + 1):
            self._push(i * self.config.mobility_period, "mobility_tick", {})
        n_fticks = int(s.horizon / self.config.forecast_period)
        for i in range(1, n_fticks + 1):
            self._push(i * self.config.forecast_period, "forecast_tick", {})
        if self.config.redeploy_period is not None:
            n_rticks = int(s.horizon / self.config.redeploy_period)
            for i in range(1, n_rticks + 1):
                self._push(i * self.config.redeploy_period, "redeploy_tick", {})

        while self._heap:
            time, _, kind, payload = heapq.heappop(self._heap)
            if kind == "task_arrival":
                self._on_arrival(time, payload["task_id"])
            elif kind == "transfer_done":
                self._on_transfer_done(time, payload)
            elif kind == "compute_done":
                self._on_compute_done(time, payload)
            elif kind == "task_done":
                self._on_task_done(time, payload)
            elif kind == "mobility_tick":
                self._on_mobility_tick(time)
            elif kind == "forecast_tick":
                self._on_forecast_tick(time)
            elif kind == "redeploy_tick":
                self._on_redeploy_tick(time)

        self._record(
            max(self._last_time, s.horizon), "sim_end",
            completed=self.completed, failed=self.failed,
        )
        metrics = aggregate_records(self.records)
        trace = "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)
        return metrics, trace


def classify_mode_from_parts(tp: TaskPlan) -> str:
    # engine-side tag: sharing is visible through reuse_source only,
    # since each arrival is planned alone
    shared = tp.reuse_source is not None
    split = bool(tp.splits)
    if shared and split:
        return "M2M"
    if split:
        return "M2O"
    if shared:
        return "O2M"
    return "O2O"


def run(
    scenario: Scenario, policy: str = "greedy_plus_local_search",
    config: EngineConfig | None = None,
) -> tuple[PlanMetrics, str]:
    """Simulate one scenario under a policy; returns (metrics, trace)."""
    return SimEngine(scenario, policy, config).run()


# ---------------------------------------------------------------------------
# Trace replay


def aggregate_records(records: list[dict]) -> PlanMetrics:
    """Rebuild the aggregate metrics from trace records alone.

    The engine reports its own aggregates through this same function, so
    replaying a trace must reproduce them exactly.
    """
    budgets: dict[int, float] = {}
    spent0: dict[int, float] = {}
    comp: dict[int, float] = {}
    tx: dict[int, float] = {}
    task_rows: dict[int, TaskMetricsRow] = {}
    failed = 0
    for idx, rec in enumerate(records):
        try:
            kind = rec["kind"]
            if kind == "init":
                for u in rec["uavs"]:
                    budgets[u["id"]] = u["budget_j"]
                    spent0[u["id"]] = u["spent0_j"]
                    comp[u["id"]] = 0.0
                    tx[u["id"]] = 0.0
            elif kind == "transfer_done":
                if rec["uav"] is not None:
                    tx[rec["uav"]] += rec["energy_j"]
            elif kind == "compute_done":
                comp[rec["uav"]] += rec["energy_j"]
            elif kind == "task_done":
                bd = DelayBreakdown(
                    rec["upload_s"], rec["setup_s"], rec["compute_s"],
                    rec["collect_s"], rec["download_s"],
                )
                task_rows[rec["task_id"]] = TaskMetricsRow(
                    rec["task_id"], rec["mode"], bd
                )
            elif kind == "task_failed":
                failed += 1
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed trace record {idx}: {exc}") from exc
    rows = [task_rows[tid] for tid in sorted(task_rows)]
    uav_rows = [
        UavEnergy(
            uav_id=uid,
            compute_j=comp[uid],
            tx_j=tx[uid],
            budget_j=budgets[uid],
            violated=spent0[uid] + comp[uid] + tx[uid] > budgets[uid],
        )
        for uid in sorted(budgets)
    ]
    mean = sum(r.delay.total_s for r in rows) / len(rows) if rows else 0.0
    return PlanMetrics(
        task_rows=rows, uav_rows=uav_rows, mean_delay_s=mean, failed_tasks=failed
    )


def parse_trace(text: str) -> list[dict]:
    records = []
    for idx, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed trace record {idx}: {exc}") from exc
    return records


def replay_trace(text: str) -> PlanMetrics:
    return aggregate_records(parse_trace(text))


# ---------------------------------------------------------------------------
# Synthetic generators


@dataclass
class SyntheticLoadSpec:
    """Shape of one synthetic communication-load trace."""

    base: float = 0.4
    amplitude: float = 0.1
    osc_period: float = 600.0  # s
    regime_shifts: list[tuple[float, float]] = field(default_factory=list)  # (t, new base)
    noise_sigma: float = 0.0
    seed: int = 0


def generate_loads(
    spec: SyntheticLoadSpec, n_uavs: int, duration: float, period: float
) -> list[LoadSeries]:
    """Deterministic per-seed load series: shifted base + sinusoid +
    Gaussian noise, clamped to [0, 1].  UAV k gets a phase offset so the
    series are not copies of each other."""
    if duration < period:
        raise ValueError("duration must cover at least one period")
    rng = np.random.default_rng(spec.seed)
    n = int(duration / period) + 1
    shifts = sorted(spec.regime_shifts)
    out = []
    for k in range(n_uavs):
        phase = 2.0 * math.pi * k / max(1, n_uavs)
        noise = (
            rng.normal(0.0, spec.noise_sigma, size=n)
            if spec.noise_sigma > 0
            else np.zeros(n)
        )
        samples = []
        for i in range(n):
            t = i * period
            base = spec.base
            for ts, nb in shifts:
                if ts <= t:
                    base = nb
            v = base + spec.amplitude * math.sin(2.0 * math.pi * t / spec.osc_period + phase)
            v += float(noise[i])
            samples.append((t, min(1.0, max(0.0, v))))
        out.append(LoadSeries(uav_id=k, samples=samples, sample_period=period))
    return out


def generate_poisson_tasks(
    rate: float,
    horizon: float,
    seed: int,
    user_ids: list[int],
    start_id: int = 0,
    content_pool: int = 5,
    input_bits_range: tuple[float, float] = (1e6, 8e6),
    cycles_range: tuple[float, float] = (2e8, 2e9),
    output_ratio: float = 0.1,
) -> list[TaskRequest]:
    """Seeded Poisson arrival workload; attributes drawn uniformly."""
    if rate <= 0:
        raise ValueError("rate must be > 0")
    if not user_ids:
        raise ValueError("need at least one user id")
    rng = np.random.default_rng(seed)
    tasks = []
    t = 0.0
    tid = start_id
    while True:
        t += float(rng.exponential(1.0 / rate))
        if t > horizon:
            break
        bits = float(rng.uniform(*input_bits_range))
        tasks.append(
            TaskRequest(
                id=tid,
                user_id=user_ids[int(rng.integers(len(user_ids)))],
                arrival_time=t,
                input_bits=bits,
                compute_cycles=float(rng.uniform(*cycles_range)),
                output_bits=bits * output_ratio,
                content_id=f"c{int(rng.integers(content_pool))}",
            )
        )
        tid += 1
    return tasks
