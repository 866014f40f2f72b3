"""Shared fixtures: canonical hand-checked scenarios and a seeded
generator of small random instances that stay inside the oracle caps."""

from __future__ import annotations

import json

import numpy as np

from skyoff.domain import Scenario, scenario_from_json


def worked_example_doc() -> dict:
    """Two UAVs 100 m apart, one user directly under UAV 1; every link
    runs at exactly 8 Mbit/s (SNR 255 over 1 MHz)."""
    return {
        "uavs": [
            {"id": 1, "pos": [0, 0, 100], "cpu_rate": 1e9},
            {"id": 2, "pos": [0, 100, 100], "cpu_rate": 1e9},
        ],
        "users": [{"id": 1, "pos": [0, 0, 0]}],
        "tasks": [
            {
                "id": 1,
                "user": 1,
                "arrival": 0.0,
                "input_bits": 8e6,
                "cycles": 1e9,
                "output_bits": 8e5,
                "content_id": "a",
            }
        ],
        "link": {
            "bandwidth": 1e6,
            "pathloss_exp": 2.0,
            "ref_snr_at_1m": 2.55e6,
            "max_range": 500.0,
            "min_rate": 1.0,
        },
        "sim": {"horizon": 100.0, "seed": 0},
    }


def worked_example() -> Scenario:
    return scenario_from_json(json.dumps(worked_example_doc()))


def random_instance(seed: int, n_uavs=None, n_tasks=None, k: int = 2) -> Scenario:
    """Random scenario within the oracle caps: <=3 UAVs, <=3 tasks, K<=2.

    Geometry keeps every node pair well inside link range and budgets are
    generous, so instances are feasible unless a test tightens them.
    """
    rng = np.random.default_rng(seed)
    nu = int(n_uavs if n_uavs is not None else rng.integers(2, 4))
    nt = int(n_tasks if n_tasks is not None else rng.integers(1, 4))
    uavs = []
    for i in range(nu):
        uavs.append(
            {
                "id": i + 1,
                "pos": [float(rng.uniform(0, 200)), float(rng.uniform(0, 200)), 100.0],
                "cpu_rate": float(rng.uniform(0.5e9, 2e9)),
                "energy_budget": 1e4,
            }
        )
    users = [
        {"id": 1, "pos": [float(rng.uniform(0, 200)), float(rng.uniform(0, 200)), 0.0]},
        {"id": 2, "pos": [float(rng.uniform(0, 200)), float(rng.uniform(0, 200)), 0.0]},
    ]
    tasks = []
    for t in range(nt):
        tasks.append(
            {
                "id": t + 1,
                "user": int(rng.integers(1, 3)),
                "arrival": round(float(rng.uniform(0.0, 5.0)), 3),
                "input_bits": float(rng.uniform(1e6, 8e6)),
                "cycles": float(rng.uniform(2e8, 2e9)),
                "output_bits": float(rng.uniform(1e5, 8e5)),
                "content_id": f"c{int(rng.integers(0, 3))}",
            }
        )
    doc = {
        "uavs": uavs,
        "users": users,
        "tasks": tasks,
        "link": {
            "bandwidth": 1e6,
            "pathloss_exp": 2.0,
            "ref_snr_at_1m": 2.55e6,
            "max_range": 500.0,
            "min_rate": 1.0,
        },
        "sim": {"horizon": 200.0, "seed": seed, "split_granularity": k},
    }
    return scenario_from_json(json.dumps(doc))
