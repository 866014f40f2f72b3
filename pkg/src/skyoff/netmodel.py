"""Link rates, connectivity and straight-line mobility.

Link capacity follows the Shannon form r = B * log2(1 + snr(d)) with a
distance-power received-SNR model snr(d) = ref_snr_at_1m / d**alpha.  Rates
are a pure function of geometry; transfers sample the rate once when they
start and keep it until they finish.
"""

from __future__ import annotations

import math

from skyoff.domain import LinkParams, Scenario, Vec3

NodeKey = tuple[str, int]  # ("uav", id) or ("user", id)


def distance(a: Vec3, b: Vec3) -> float:
    return math.dist(a, b)


def link_rate(pos_a: Vec3, pos_b: Vec3, params: LinkParams) -> float:
    """Achievable rate in bits/s between two positions, 0 if unreachable.

    Zero distance is rejected: the model has no self-links, and co-located
    distinct nodes indicate a broken scenario rather than an infinite-rate
    channel.
    """
    d = distance(pos_a, pos_b)
    if d == 0.0:
        raise ValueError("link_rate: zero distance between endpoints")
    if d > params.max_range:
        return 0.0
    snr = params.ref_snr_at_1m / d**params.pathloss_exponent
    rate = params.bandwidth * math.log2(1.0 + snr)
    if rate < params.min_rate:
        return 0.0
    return rate


def transfer_time(bits: float, rate: float) -> float:
    """Seconds to move `bits` at `rate`; infinite when the link is down."""
    if bits < 0:
        raise ValueError("transfer_time: negative bit count")
    if bits == 0:
        return 0.0
    if rate <= 0:
        return math.inf
    return bits / rate


def positions_at(scenario: Scenario, t: float) -> dict[NodeKey, Vec3]:
    """Node positions extrapolated to time t along constant velocities."""
    out: dict[NodeKey, Vec3] = {}
    for u in scenario.uavs:
        out[("uav", u.id)] = tuple(p + v * t for p, v in zip(u.position, u.velocity))
    for u in scenario.users:
        out[("user", u.id)] = tuple(p + v * t for p, v in zip(u.position, u.velocity))
    return out


class ConnectivityGraph:
    """Symmetric rate table over all node pairs at one instant.

    Keyed by ("uav", id) / ("user", id) pairs so UAV and user id spaces
    cannot collide.
    """

    def __init__(self, rates: dict[tuple[NodeKey, NodeKey], float]):
        self._rates = rates

    def rate(self, a: NodeKey, b: NodeKey) -> float:
        if a == b:
            raise ValueError("no self-links")
        key = (a, b) if a <= b else (b, a)
        try:
            return self._rates[key]
        except KeyError:
            raise KeyError(f"no such node pair: {a}, {b}") from None

    def connected(self, a: NodeKey, b: NodeKey) -> bool:
        return self.rate(a, b) > 0.0

    def neighbors(self, a: NodeKey) -> list[NodeKey]:
        """Nodes with a live link to `a`, sorted for determinism."""
        out = []
        for (x, y), r in self._rates.items():
            if r <= 0.0:
                continue
            if x == a:
                out.append(y)
            elif y == a:
                out.append(x)
        return sorted(out)


def build_graph(scenario: Scenario, t: float = 0.0) -> ConnectivityGraph:
    """Snapshot the full pairwise rate table at time t."""
    pos = positions_at(scenario, t)
    keys = sorted(pos)
    rates: dict[tuple[NodeKey, NodeKey], float] = {}
    for i, a in enumerate(keys):
        for b in keys[i + 1 :]:
            rates[(a, b)] = link_rate(pos[a], pos[b], scenario.link_params)
    return ConnectivityGraph(rates)
