"""Forecast-driven task splitting.

Headroom (one minus the mean predicted load) decides each UAV's share
of a divisible task; shares are snapped to the chunk lattice with
largest-remainder rounding so cycles are conserved exactly.
"""

from __future__ import annotations

import math

from skyoff.domain import TaskRequest


def split_by_forecast(
    task: TaskRequest, forecasts: dict[int, list[float] | object], k: int
) -> dict[int, float]:
    """Apportion task cycles over UAVs by forecast headroom.

    forecasts maps uav_id to its predicted load sequence.  Returns
    uav_id -> cycles on the C/K lattice, summing to exactly
    task.compute_cycles.  Raises when every UAV is saturated.
    """
    if k < 1:
        raise ValueError("split granularity must be >= 1")
    means = {}
    for uid in sorted(forecasts):
        seq = list(forecasts[uid])
        if not seq:
            raise ValueError(f"uav {uid}: empty forecast")
        means[uid] = sum(seq) / len(seq)
    weights = {uid: max(0.0, 1.0 - m) for uid, m in means.items()}
    total_w = sum(weights.values())
    if total_w <= 0.0:
        raise ValueError("all UAVs saturated: no forecast headroom anywhere")

    c = task.compute_cycles
    chunk = c / k
    raw = {uid: (w / total_w) * k for uid, w in weights.items()}
    counts = {uid: int(raw[uid]) for uid in raw}
    leftover = k - sum(counts.values())
    # hand the leftover chunks to the largest remainders, ties to the
    # lower UAV id
    order = sorted(raw, key=lambda uid: (-(raw[uid] - counts[uid]), uid))
    for uid in order[:leftover]:
        counts[uid] += 1

    # the highest participating id absorbs the floating-point crumbs; it
    # closes the ascending-id sum (later ids hold 0.0), so its share can
    # be tuned until the running total lands on C exactly
    absorber = max(uid for uid in counts if counts[uid] > 0)
    out: dict[int, float] = {}
    for uid in sorted(counts):
        out[uid] = 0.0 if uid == absorber else counts[uid] * chunk

    def settle() -> bool:
        prefix = 0.0
        for uid, share in out.items():
            if uid != absorber:
                prefix += share
        out[absorber] = c - prefix
        # walk the closing share one ulp at a time toward a total of C
        for _ in range(8):
            total = 0.0
            for share in out.values():
                total += share
            if total == c:
                return True
            out[absorber] = math.nextafter(
                out[absorber], math.inf if total < c else -math.inf
            )
        return False

    if not settle():
        # round-to-even ties can hide C from the walk when the prefix sits
        # on the half-ulp grid of the total; shifting an earlier share by
        # one of its own ulps breaks that alignment
        predecessors = [u for u in out if u != absorber and counts[u] > 0]
        done = False
        for p in reversed(predecessors):
            for _ in range(4):
                out[p] = math.nextafter(out[p], 0.0)
                if settle():
                    done = True
                    break
            if done:
                break
        if not done:
            raise ArithmeticError(
                f"cycle shares would not sum exactly to {c!r}"
            )
    return out
