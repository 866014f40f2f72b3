"""Core value types shared by every other module.

All quantities are SI base units throughout: bits, CPU cycles, seconds,
joules, meters, watts.  No unit conversion happens anywhere downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

Vec3 = tuple[float, float, float]

DEFAULT_D2D_SETUP_LATENCY = 0.1  # s
DEFAULT_REUSE_TTL = 60.0  # s
DEFAULT_SPLIT_GRANULARITY = 4
DEFAULT_HORIZON = 3600.0  # s

# UAV hardware defaults used when a scenario document omits the field.
DEFAULT_CACHE_CAPACITY = 1e9  # bits
DEFAULT_ENERGY_BUDGET = 1e4  # J
DEFAULT_COMP_ENERGY_PER_CYCLE = 1e-9  # J/cycle
DEFAULT_TX_POWER = 0.5  # W


class ScenarioParseError(ValueError):
    """Malformed scenario document; the message carries a field locator."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class CachedItem:
    """One cached task result held in a UAV's storage."""

    content_id: str
    bits: float
    expiry_time: float  # absolute seconds; math.inf for pre-placed contents


@dataclass
class UavNode:
    """One UAV's computing, caching and communication state."""

    id: int
    position: Vec3  # m
    velocity: Vec3  # m/s
    cpu_rate: float  # cycles/s
    cache_capacity: float = DEFAULT_CACHE_CAPACITY  # bits
    energy_budget: float = DEFAULT_ENERGY_BUDGET  # J
    comp_energy_per_cycle: float = DEFAULT_COMP_ENERGY_PER_CYCLE  # J/cycle
    tx_power: float = DEFAULT_TX_POWER  # W
    cache_contents: list[CachedItem] = field(default_factory=list)
    energy_spent: float = 0.0  # J, mutated only by the event engine

    def cached_bits(self) -> float:
        return sum(item.bits for item in self.cache_contents)

    def live_cache_entry(self, content_id: str, at: float) -> CachedItem | None:
        for item in self.cache_contents:
            if item.content_id == content_id and item.expiry_time >= at:
                return item
        return None


@dataclass
class UserTerminal:
    id: int
    position: Vec3  # m
    velocity: Vec3 = (0.0, 0.0, 0.0)  # m/s


@dataclass
class TaskRequest:
    """A user's multi-modal task request.

    Equal ``content_id`` marks identical, reusable results; modality is
    encoded only through the (input_bits, compute_cycles, output_bits,
    content_id) tuple.
    """

    id: int
    user_id: int
    arrival_time: float  # s
    input_bits: float
    compute_cycles: float
    output_bits: float
    content_id: str
    deadline: float | None = None  # s, absent means none


@dataclass
class LinkParams:
    """Pairwise link model parameters (see netmodel.link_rate)."""

    bandwidth: float = 1e6  # Hz
    ref_snr_at_1m: float = 1e6  # dimensionless combined tx-power/noise factor
    pathloss_exponent: float = 2.0
    max_range: float = 5000.0  # m
    min_rate: float = 0.0  # bits/s below which a link counts as down


@dataclass
class Scenario:
    """Complete simulation input: nodes, workload and shared parameters."""

    uavs: list[UavNode]
    users: list[UserTerminal]
    tasks: list[TaskRequest]
    link_params: LinkParams = field(default_factory=LinkParams)
    d2d_setup_latency: float = DEFAULT_D2D_SETUP_LATENCY  # s
    split_granularity: int = DEFAULT_SPLIT_GRANULARITY  # K
    reuse_ttl: float = DEFAULT_REUSE_TTL  # s
    horizon: float = DEFAULT_HORIZON  # s
    seed: int = 0

    def uav(self, uav_id: int) -> UavNode:
        for u in self.uavs:
            if u.id == uav_id:
                return u
        raise KeyError(f"no UAV with id {uav_id}")

    def user(self, user_id: int) -> UserTerminal:
        for u in self.users:
            if u.id == user_id:
                return u
        raise KeyError(f"no user with id {user_id}")

    def task(self, task_id: int) -> TaskRequest:
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(f"no task with id {task_id}")


def _check_vec3(v, path, out):
    for i, comp in enumerate(v):
        if not math.isfinite(comp):
            out.append(f"{path}[{i}]: must be finite")


def validate_scenario(s: Scenario) -> list[str]:
    """Return every invariant violation with a path-like locator.

    An empty list means the scenario is valid.  Violations are data, not
    errors: callers decide whether to raise.
    """
    out: list[str] = []
    if not s.uavs:
        out.append("uavs: at least one UAV required")

    seen_uav = set()
    for i, u in enumerate(s.uavs):
        p = f"uavs[{i}]"
        if u.id in seen_uav:
            out.append(f"{p}.id: duplicate id {u.id}")
        seen_uav.add(u.id)
        _check_vec3(u.position, f"{p}.position", out)
        _check_vec3(u.velocity, f"{p}.velocity", out)
        if not u.cpu_rate > 0:
            out.append(f"{p}.cpu_rate: must be > 0")
        if not u.energy_budget > 0:
            out.append(f"{p}.energy_budget: must be > 0")
        if not 0 <= u.energy_spent <= u.energy_budget:
            out.append(f"{p}.energy_spent: must be within [0, energy_budget]")
        if u.cache_capacity < 0:
            out.append(f"{p}.cache_capacity: must be >= 0")
        cached = u.cached_bits()
        if cached > u.cache_capacity:
            out.append(
                f"{p}.cache_contents: cached bits {cached} exceed capacity "
                f"{u.cache_capacity}"
            )
        if u.comp_energy_per_cycle < 0:
            out.append(f"{p}.comp_energy_per_cycle: must be >= 0")
        if u.tx_power < 0:
            out.append(f"{p}.tx_power: must be >= 0")

    seen_user = set()
    for i, u in enumerate(s.users):
        p = f"users[{i}]"
        if u.id in seen_user:
            out.append(f"{p}.id: duplicate id {u.id}")
        seen_user.add(u.id)
        _check_vec3(u.position, f"{p}.position", out)

    seen_task = set()
    for i, t in enumerate(s.tasks):
        p = f"tasks[{i}]"
        if t.id in seen_task:
            out.append(f"{p}.id: duplicate id {t.id}")
        seen_task.add(t.id)
        if t.user_id not in seen_user:
            out.append(f"{p}.user_id: no such user {t.user_id}")
        if not t.input_bits > 0:
            out.append(f"{p}.input_bits: must be > 0")
        if not t.compute_cycles > 0:
            out.append(f"{p}.compute_cycles: must be > 0")
        if not t.output_bits > 0:
            out.append(f"{p}.output_bits: must be > 0")
        if t.arrival_time < 0:
            out.append(f"{p}.arrival_time: must be >= 0")

    lp = s.link_params
    if not lp.bandwidth > 0:
        out.append("link.bandwidth: must be > 0")
    if not lp.ref_snr_at_1m > 0:
        out.append("link.ref_snr_at_1m: must be > 0")
    if not lp.pathloss_exponent >= 2:
        out.append("link.pathloss_exp: must be >= 2")
    if not lp.max_range > 0:
        out.append("link.max_range: must be > 0")
    if lp.min_rate < 0:
        out.append("link.min_rate: must be >= 0")

    if s.split_granularity < 1:
        out.append("sim.split_granularity: must be >= 1")
    if not s.horizon > 0:
        out.append("sim.horizon: must be > 0")
    if s.d2d_setup_latency < 0:
        out.append("sim.d2d_setup_latency: must be >= 0")
    if not s.reuse_ttl > 0:
        out.append("sim.reuse_ttl: must be > 0")
    return out


# ---------------------------------------------------------------------------
# JSON document parsing.  Top-level keys: uavs, users, tasks, link, sim.
# Unknown fields are rejected; missing optional fields take the documented
# defaults above.


def _number(obj, path, minimum=None):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ScenarioParseError(path, "expected a number")
    if minimum is not None and obj < minimum:
        raise ScenarioParseError(path, f"must be >= {minimum}")
    return float(obj)


def _integer(obj, path):
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ScenarioParseError(path, "expected an integer")
    return obj


def _vec3(obj, path) -> Vec3:
    if not isinstance(obj, list) or len(obj) != 3:
        raise ScenarioParseError(path, "expected [x, y, z]")
    return tuple(_number(c, f"{path}[{i}]") for i, c in enumerate(obj))


_REQUIRED = object()


class _Fields:
    """Tracks consumed keys of one JSON object to reject unknown fields."""

    def __init__(self, obj, path):
        if not isinstance(obj, dict):
            raise ScenarioParseError(path, "expected an object")
        self.obj = obj
        self.path = path
        self.seen: set[str] = set()

    def take(self, key, default=_REQUIRED):
        self.seen.add(key)
        if key not in self.obj:
            if default is _REQUIRED:
                raise ScenarioParseError(self.path, f"missing required field '{key}'")
            return default
        return self.obj[key]

    def finish(self):
        unknown = sorted(set(self.obj) - self.seen)
        if unknown:
            raise ScenarioParseError(self.path, f"unknown field '{unknown[0]}'")


def _parse_uav(obj, path) -> UavNode:
    f = _Fields(obj, path)
    uav = UavNode(
        id=_integer(f.take("id"), f"{path}.id"),
        position=_vec3(f.take("pos"), f"{path}.pos"),
        velocity=_vec3(f.take("vel", [0.0, 0.0, 0.0]), f"{path}.vel"),
        cpu_rate=_number(f.take("cpu_rate"), f"{path}.cpu_rate"),
        cache_capacity=_number(
            f.take("cache_capacity", DEFAULT_CACHE_CAPACITY), f"{path}.cache_capacity"
        ),
        energy_budget=_number(
            f.take("energy_budget", DEFAULT_ENERGY_BUDGET), f"{path}.energy_budget"
        ),
        comp_energy_per_cycle=_number(
            f.take("comp_energy_per_cycle", DEFAULT_COMP_ENERGY_PER_CYCLE),
            f"{path}.comp_energy_per_cycle",
        ),
        tx_power=_number(f.take("tx_power", DEFAULT_TX_POWER), f"{path}.tx_power"),
    )
    f.finish()
    return uav


def _parse_user(obj, path) -> UserTerminal:
    f = _Fields(obj, path)
    user = UserTerminal(
        id=_integer(f.take("id"), f"{path}.id"),
        position=_vec3(f.take("pos"), f"{path}.pos"),
        velocity=_vec3(f.take("vel", [0.0, 0.0, 0.0]), f"{path}.vel"),
    )
    f.finish()
    return user


def _parse_task(obj, path) -> TaskRequest:
    f = _Fields(obj, path)
    content = f.take("content_id")
    if not isinstance(content, (str, int)) or isinstance(content, bool):
        raise ScenarioParseError(f"{path}.content_id", "expected a string or integer")
    deadline = f.take("deadline", None)
    task = TaskRequest(
        id=_integer(f.take("id"), f"{path}.id"),
        user_id=_integer(f.take("user"), f"{path}.user"),
        arrival_time=_number(f.take("arrival"), f"{path}.arrival"),
        input_bits=_number(f.take("input_bits"), f"{path}.input_bits"),
        compute_cycles=_number(f.take("cycles"), f"{path}.cycles"),
        output_bits=_number(f.take("output_bits"), f"{path}.output_bits"),
        content_id=str(content),
        deadline=None if deadline is None else _number(deadline, f"{path}.deadline"),
    )
    f.finish()
    return task


def _parse_link(obj) -> LinkParams:
    f = _Fields(obj, "link")
    d = LinkParams()
    lp = LinkParams(
        bandwidth=_number(f.take("bandwidth", d.bandwidth), "link.bandwidth"),
        ref_snr_at_1m=_number(f.take("ref_snr_at_1m", d.ref_snr_at_1m), "link.ref_snr_at_1m"),
        pathloss_exponent=_number(f.take("pathloss_exp", d.pathloss_exponent), "link.pathloss_exp"),
        max_range=_number(f.take("max_range", d.max_range), "link.max_range"),
        min_rate=_number(f.take("min_rate", d.min_rate), "link.min_rate"),
    )
    f.finish()
    return lp


def scenario_from_json(text: str) -> Scenario:
    """Parse a scenario JSON document, validate it, and return the Scenario.

    Raises ScenarioParseError on schema problems (with a field locator) and
    ValueError listing violations when the parsed scenario is invalid.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"line {exc.lineno}", exc.msg) from exc
    top = _Fields(doc, "$")

    uavs = [_parse_uav(o, f"uavs[{i}]") for i, o in enumerate(top.take("uavs"))]
    users = [_parse_user(o, f"users[{i}]") for i, o in enumerate(top.take("users", []))]
    tasks = [_parse_task(o, f"tasks[{i}]") for i, o in enumerate(top.take("tasks", []))]
    link = _parse_link(top.take("link", {}))

    sim = _Fields(top.take("sim", {}), "sim")
    scenario = Scenario(
        uavs=uavs,
        users=users,
        tasks=tasks,
        link_params=link,
        d2d_setup_latency=_number(
            sim.take("d2d_setup_latency", DEFAULT_D2D_SETUP_LATENCY), "sim.d2d_setup_latency"
        ),
        split_granularity=_integer(
            sim.take("split_granularity", DEFAULT_SPLIT_GRANULARITY), "sim.split_granularity"
        ),
        reuse_ttl=_number(sim.take("reuse_ttl", DEFAULT_REUSE_TTL), "sim.reuse_ttl"),
        horizon=_number(sim.take("horizon", DEFAULT_HORIZON), "sim.horizon"),
        seed=_integer(sim.take("seed", 0), "sim.seed"),
    )
    sim.finish()
    top.finish()

    violations = validate_scenario(scenario)
    if violations:
        raise ValueError("invalid scenario: " + "; ".join(violations))
    return scenario


def scenario_to_json(s: Scenario) -> str:
    """Serialize the configuration of a Scenario back to its JSON document.

    Runtime state (energy_spent, cache_contents) is not part of the document
    schema and is not serialized.
    """
    doc = {
        "uavs": [
            {
                "id": u.id,
                "pos": list(u.position),
                "vel": list(u.velocity),
                "cpu_rate": u.cpu_rate,
                "cache_capacity": u.cache_capacity,
                "energy_budget": u.energy_budget,
                "comp_energy_per_cycle": u.comp_energy_per_cycle,
                "tx_power": u.tx_power,
            }
            for u in s.uavs
        ],
        "users": [
            {"id": u.id, "pos": list(u.position), "vel": list(u.velocity)}
            for u in s.users
        ],
        "tasks": [
            {
                "id": t.id,
                "user": t.user_id,
                "arrival": t.arrival_time,
                "input_bits": t.input_bits,
                "cycles": t.compute_cycles,
                "output_bits": t.output_bits,
                "content_id": t.content_id,
                **({} if t.deadline is None else {"deadline": t.deadline}),
            }
            for t in s.tasks
        ],
        "link": {
            "bandwidth": s.link_params.bandwidth,
            "ref_snr_at_1m": s.link_params.ref_snr_at_1m,
            "pathloss_exp": s.link_params.pathloss_exponent,
            "max_range": s.link_params.max_range,
            "min_rate": s.link_params.min_rate,
        },
        "sim": {
            "horizon": s.horizon,
            "seed": s.seed,
            "d2d_setup_latency": s.d2d_setup_latency,
            "split_granularity": s.split_granularity,
            "reuse_ttl": s.reuse_ttl,
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_json(fh.read())
