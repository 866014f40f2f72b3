import math

import pytest

from skyoff.domain import LinkParams
from skyoff.netmodel import (
    ConnectivityGraph,
    build_graph,
    distance,
    link_rate,
    positions_at,
    transfer_time,
)
from helpers import worked_example


LP = LinkParams(
    bandwidth=1e6,
    ref_snr_at_1m=2.55e6,
    pathloss_exponent=2.0,
    max_range=500.0,
    min_rate=1.0,
)


def test_distance():
    assert distance((0, 0, 0), (3, 4, 0)) == 5.0
    assert distance((1, 1, 1), (1, 1, 1)) == 0.0


def test_link_rate_exact_instance():
    # SNR 2.55e6 / 100^2 = 255, so 1 MHz * log2(256) = 8 Mbit/s exactly
    assert link_rate((0, 0, 0), (0, 0, 100), LP) == 8e6


def test_link_rate_decreases_with_distance():
    r1 = link_rate((0, 0, 0), (0, 0, 50), LP)
    r2 = link_rate((0, 0, 0), (0, 0, 100), LP)
    r3 = link_rate((0, 0, 0), (0, 0, 200), LP)
    assert r1 > r2 > r3 > 0


def test_link_rate_out_of_range_is_zero():
    assert link_rate((0, 0, 0), (0, 0, 500.1), LP) == 0.0


def test_link_rate_below_min_rate_is_zero():
    lp = LinkParams(
        bandwidth=1e6,
        ref_snr_at_1m=2.55e6,
        pathloss_exponent=2.0,
        max_range=1e6,
        min_rate=1e9,
    )
    assert link_rate((0, 0, 0), (0, 0, 100), lp) == 0.0


def test_link_rate_zero_distance_raises():
    with pytest.raises(ValueError):
        link_rate((1, 2, 3), (1, 2, 3), LP)


def test_transfer_time():
    assert transfer_time(8e6, 8e6) == 1.0
    assert transfer_time(0.0, 8e6) == 0.0
    assert transfer_time(1.0, 0.0) == math.inf
    with pytest.raises(ValueError):
        transfer_time(-1.0, 8e6)


def test_positions_at_zero_velocity():
    sc = worked_example()
    pos = positions_at(sc, 50.0)
    assert pos[("uav", 1)] == (0.0, 0.0, 100.0)


def test_positions_at_linear_motion():
    sc = worked_example()
    sc.uav(1).velocity = (10.0, 0.0, 0.0)
    pos = positions_at(sc, 5.0)
    assert pos[("uav", 1)] == (50.0, 0.0, 100.0)


def test_graph_symmetric_and_rates():
    sc = worked_example()
    g = build_graph(sc)
    a, b = ("user", 1), ("uav", 1)
    assert g.rate(a, b) == g.rate(b, a) == 8e6
    assert g.rate(("uav", 1), ("uav", 2)) == 8e6
    assert g.connected(a, b)


def test_graph_self_link_raises():
    sc = worked_example()
    g = build_graph(sc)
    with pytest.raises(ValueError):
        g.rate(("uav", 1), ("uav", 1))


def test_graph_unknown_pair_raises():
    g = ConnectivityGraph({})
    with pytest.raises(KeyError):
        g.rate(("uav", 1), ("uav", 2))


def test_graph_neighbors_sorted():
    sc = worked_example()
    g = build_graph(sc)
    ns = g.neighbors(("user", 1))
    assert ns == sorted(ns)
    assert ("uav", 1) in ns


def test_graph_respects_range():
    sc = worked_example()
    sc.uav(2).position = (0.0, 5000.0, 100.0)
    g = build_graph(sc)
    assert not g.connected(("uav", 1), ("uav", 2))


def test_graph_at_later_time_uses_moved_positions():
    sc = worked_example()
    sc.uav(2).velocity = (0.0, 100.0, 0.0)
    g0 = build_graph(sc, 0.0)
    g5 = build_graph(sc, 5.0)
    assert g0.connected(("uav", 1), ("uav", 2))
    # at t=5 UAV 2 sits 600 m away, beyond range
    assert not g5.connected(("uav", 1), ("uav", 2))
