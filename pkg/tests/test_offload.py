import pytest

from skyoff.netmodel import build_graph
from skyoff.offload import (
    CacheMove,
    InfeasiblePlanError,
    MODE_M2M,
    MODE_M2O,
    MODE_O2M,
    MODE_O2O,
    OffloadPlan,
    ReuseLedger,
    TaskPlan,
    apply_reuse,
    classify_mode,
    evaluate_plan,
    metrics_to_csv,
    plan_energy,
    task_delay,
)
from helpers import worked_example, random_instance


def _single(tp):
    return OffloadPlan(tasks={1: tp})


def test_worked_local_execution():
    sc = worked_example()
    g = build_graph(sc)
    bd = task_delay(_single(TaskPlan(1, {}, [], None)), sc.task(1), g, sc)
    assert (bd.upload_s, bd.setup_s, bd.compute_s, bd.collect_s, bd.download_s) == (
        1.0,
        0.0,
        1.0,
        0.0,
        0.1,
    )
    assert bd.total_s == 2.1


def test_worked_split_execution():
    sc = worked_example()
    g = build_graph(sc)
    bd = task_delay(_single(TaskPlan(1, {2: 5e8}, [], None)), sc.task(1), g, sc)
    assert bd.upload_s == 1.0
    assert bd.setup_s == 0.1
    # slave branch: 0.1 setup + 0.5 chunk dispatch + 0.5 compute + 0.05
    # result return = 1.15, master finishes its half in 0.5
    assert bd.compute_s == 0.5
    assert abs(bd.collect_s - 0.65) < 1e-12
    assert abs(bd.total_s - 2.35) < 1e-12


def test_total_is_literal_sum():
    for seed in range(30):
        sc = random_instance(seed)
        g = build_graph(sc)
        for task in sc.tasks:
            tp = TaskPlan(sc.uavs[0].id, {}, [], None)
            bd = task_delay(OffloadPlan({task.id: tp}), task, g, sc)
            assert bd.total_s == (
                bd.upload_s + bd.setup_s + bd.compute_s + bd.collect_s + bd.download_s
            )


def test_reuse_skips_upload_and_compute():
    sc = worked_example()
    g = build_graph(sc)
    bd = task_delay(_single(TaskPlan(1, {}, [], "a")), sc.task(1), g, sc)
    assert bd.upload_s == 0.0
    assert bd.compute_s == 0.0
    assert bd.setup_s == 0.0
    assert bd.download_s == 0.1
    assert bd.total_s == 0.1


def test_reuse_with_cache_move_pays_transfer():
    sc = worked_example()
    g = build_graph(sc)
    tp = TaskPlan(1, {}, [CacheMove(2, 1, "a", 8e5)], "a")
    bd = task_delay(_single(tp), sc.task(1), g, sc)
    assert bd.setup_s == 0.1
    assert bd.collect_s == 0.1  # 8e5 bits over the 8 Mbit/s D2D link
    assert bd.upload_s == 0.0 and bd.compute_s == 0.0


def test_master_slower_than_slave_branch():
    sc = worked_example()
    g = build_graph(sc)
    # tiny chunk: slave branch is short, master retains almost everything
    bd = task_delay(_single(TaskPlan(1, {2: 2.5e8}, [], None)), sc.task(1), g, sc)
    assert bd.compute_s == 0.75  # master's retained cycles decide the join
    slave_span = 0.1 + 0.25 + 0.25 + 0.025
    assert slave_span < 0.75
    assert bd.collect_s == 0.0


def test_dead_link_raises():
    sc = worked_example()
    sc.uav(2).position = (0.0, 5000.0, 100.0)
    g = build_graph(sc)
    with pytest.raises(InfeasiblePlanError):
        task_delay(_single(TaskPlan(1, {2: 5e8}, [], None)), sc.task(1), g, sc)


def test_classify_modes():
    sc = worked_example()
    t = sc.task(1)
    assert classify_mode(_single(TaskPlan(1, {}, [], None)), t) == MODE_O2O
    assert classify_mode(_single(TaskPlan(1, {2: 5e8}, [], None)), t) == MODE_M2O
    assert classify_mode(_single(TaskPlan(1, {}, [], "a")), t) == MODE_O2M
    assert classify_mode(_single(TaskPlan(1, {2: 5e8}, [], "x")), t) == MODE_M2M


def test_classify_producer_side_sharing():
    sc = worked_example()
    plan = OffloadPlan(
        tasks={
            1: TaskPlan(1, {}, [], None),
            2: TaskPlan(1, {}, [], "a"),
        }
    )
    # task 2 consumes content "a", so producer task 1 is shared too
    assert classify_mode(plan, sc.task(1)) == MODE_O2M


def test_worked_energy_split():
    sc = worked_example()
    g = build_graph(sc)
    plan = _single(TaskPlan(1, {2: 5e8}, [], None))
    e = plan_energy(plan, [sc.task(1)], g, sc)
    comp1, tx1 = e[1]
    comp2, tx2 = e[2]
    # 5e8 cycles each at 1e-9 J/cycle; master transmits the 4e6 bit chunk
    # and the 8e5 bit download at 0.5 W over 8 Mbit/s links
    assert comp1 == 0.5 and comp2 == 0.5
    assert abs(tx1 - 0.3) < 1e-12
    assert abs(tx2 - 0.025) < 1e-12


def test_upload_charges_no_uav():
    sc = worked_example()
    g = build_graph(sc)
    e = plan_energy(_single(TaskPlan(1, {}, [], None)), [sc.task(1)], g, sc)
    comp1, tx1 = e[1]
    assert comp1 == 1.0
    assert abs(tx1 - 0.05) < 1e-12  # download only


def test_cache_move_charges_sender():
    sc = worked_example()
    g = build_graph(sc)
    tp = TaskPlan(1, {}, [CacheMove(2, 1, "a", 8e5)], "a")
    e = plan_energy(_single(tp), [sc.task(1)], g, sc)
    assert e[2][1] == 0.5 * 0.1  # sender pays the 0.1 s move
    assert e[2][0] == 0.0


def test_reuse_ledger_ttl():
    led = ReuseLedger()
    led.register("a", 1, 8e5, produced_at=10.0, ttl=60.0)
    assert led.live("a", at=70.0) is not None
    assert led.live("a", at=70.1) is None
    assert led.live("a", at=9.9) is None
    led.prune(200.0)
    assert led.entries == {}


def test_apply_reuse_within_ttl():
    sc = worked_example()
    t1 = sc.task(1)
    import dataclasses

    t2 = dataclasses.replace(t1, id=2, arrival_time=30.0)
    hits, led = apply_reuse([t1, t2], ReuseLedger(), 0.0, sc.reuse_ttl)
    assert set(hits) == {2}
    assert hits[2].producer_task_id == 1
    assert led.live("a", 30.0) is not None


def test_apply_reuse_expired_producer():
    sc = worked_example()
    t1 = sc.task(1)
    import dataclasses

    t2 = dataclasses.replace(t1, id=2, arrival_time=61.0)
    hits, led = apply_reuse([t1, t2], ReuseLedger(), 0.0, sc.reuse_ttl)
    assert hits == {}
    # the late task became the new producer
    assert led.entries["a"].producer_task_id == 2


def test_evaluate_plan_and_csv():
    sc = worked_example()
    g = build_graph(sc)
    metrics = evaluate_plan(_single(TaskPlan(1, {2: 5e8}, [], None)), sc, g)
    assert abs(metrics.mean_delay_s - 2.35) < 1e-12
    assert metrics.failed_tasks == 0
    assert not metrics.has_violation()
    total = sum(r.total_j for r in metrics.uav_rows)
    assert abs(metrics.total_energy_j - total) < 1e-15
    text = metrics_to_csv(metrics)
    lines = text.splitlines()
    assert lines[0] == "task_id,mode,upload_s,setup_s,compute_s,collect_s,download_s,total_s"
    assert any(line.startswith("uav_id,") for line in lines)
    assert any(line.startswith("mean_delay_s,") for line in lines)
    assert "1,M2O,1.0,0.1,0.5," in text


def test_budget_violation_flag():
    sc = worked_example()
    sc.uav(1).energy_budget = 1.0  # compute alone costs 1.0 J
    g = build_graph(sc)
    metrics = evaluate_plan(_single(TaskPlan(1, {}, [], None)), sc, g)
    row = next(r for r in metrics.uav_rows if r.uav_id == 1)
    assert row.violated
    assert metrics.has_violation()


def test_budget_exact_spend_ok():
    sc = worked_example()
    sc.uav(1).energy_budget = 1.05  # exactly compute 1.0 + download tx 0.05
    g = build_graph(sc)
    metrics = evaluate_plan(_single(TaskPlan(1, {}, [], None)), sc, g)
    row = next(r for r in metrics.uav_rows if r.uav_id == 1)
    assert not row.violated
