import json

import pytest

from oec.errors import CorruptLedger, InvalidScenario
from oec.ledger import export_lines, parse_lines
from oec.records import Kind
from oec.sim import (
    Behavior,
    BehaviorPolicy,
    Scenario,
    compute_metrics,
    membership_exclusive,
    random_scenario,
    run_scenario,
)

RES = {"processing": 4, "storage": 8, "communication": 100}
TASK = {"ref_data": 100, "ref_time": 10, "req_p": 4, "req_s": 8, "req_c": 100}


def scenario(nodes, systems=None, **kw):
    d = {
        "seed": 1,
        "epochs": 5,
        "nodes": [{"name": "lead", "bc_node": True, "resources": RES}] + nodes,
        "systems": systems
        if systems is not None
        else [{"name": "s", "leader": "lead", "target_capacity": 5, "rate": 10, "task": TASK}],
    }
    d.update(kw)
    return Scenario.from_dict(d)


def member(name, **kw):
    return {"name": name, "system": "s", "resources": RES, **kw}


def test_single_honest_node_earns_50():
    r = run_scenario(scenario([member("n")]))
    nid = r.node_ids["n"]
    assert r.metrics.earned[nid] == 50_000_000
    assert r.state.balances[r.node_ids["lead"]] == -50_000_000


def test_under_deliverer_earns_a_quarter():
    r = run_scenario(scenario([member("h"), member("u", behavior={"kind": "under_deliverer", "delta": 0.5})]))
    h, u = r.metrics.earned[r.node_ids["h"]], r.metrics.earned[r.node_ids["u"]]
    assert u * 4 == h


def test_determinism():
    sc = scenario([member("a"), member("b", behavior={"kind": "churner", "period": 2})], epochs=12)
    a, b = run_scenario(sc), run_scenario(sc)
    assert [x.hash for x in a.ledger.blocks] == [x.hash for x in b.ledger.blocks]
    assert a.metrics == b.metrics
    assert a.ledger.manager_sequence() == b.ledger.manager_sequence()
    c = run_scenario(sc, seed=2)
    assert c.ledger.tip.hash != a.ledger.tip.hash


def test_metrics_recomputed_from_ledger_match_live():
    sc = scenario([member("a"), member("u", behavior={"kind": "under_deliverer", "delta": 0.3})], epochs=9)
    r = run_scenario(sc)
    blocks = parse_lines(export_lines(r.ledger.blocks))
    assert compute_metrics(blocks, r.ledger.params) == r.metrics


def test_system_full_counted():
    systems = [{"name": "s", "leader": "lead", "target_capacity": 1, "rate": 10, "task": TASK}]
    nodes = [member(f"n{i}") for i in range(4)]
    r = run_scenario(scenario(nodes, systems))
    assert r.metrics.rejection_counts["SYSTEM_FULL"] == 3


def test_forger_never_subscribes():
    r = run_scenario(scenario([member("h"), {"name": "m", "resources": RES, "behavior": {"kind": "forger"}}]))
    assert r.forgery_attempts == 1 and r.forgeries_accepted == 0
    assert r.node_ids["m"] not in r.state.profiles


def test_under_deliverer_paid_less_than_honest_peer():
    r = run_scenario(scenario([member("h"), member("u", behavior={"kind": "under_deliverer", "delta": 0.9})], epochs=8))
    assert r.metrics.earned[r.node_ids["u"]] < r.metrics.earned[r.node_ids["h"]]


def test_churner_joins_and_leaves_on_period():
    r = run_scenario(scenario([member("c", behavior={"kind": "churner", "period": 2})], epochs=9))
    nid = r.node_ids["c"]
    kinds = [(b.index, t.kind) for b in r.ledger.blocks for t in b.txs if t.actor == nid and t.kind in (Kind.JOIN, Kind.LEAVE)]
    assert kinds == [(1, Kind.JOIN), (3, Kind.LEAVE), (5, Kind.JOIN), (7, Kind.LEAVE), (9, Kind.JOIN)]


def test_offline_member_is_paid_after_reconnecting():
    sc = scenario([member("a"), member("b")], epochs=10, offline_windows={"b": [[3, 6]]})
    r = run_scenario(sc)
    a, b = r.node_ids["a"], r.node_ids["b"]
    # b worked every epoch, reporting epochs 3..5 itself at reconnection
    assert r.metrics.earned[a] == r.metrics.earned[b] == 100_000_000
    selfrep = [t for blk in r.ledger.blocks for t in blk.txs if t.kind is Kind.PERFORMANCE_REPORT and t.actor == b]
    assert [t.payload.epoch for t in selfrep] == [3, 4, 5]
    assert all(blk.index == 6 for blk in r.ledger.blocks for t in blk.txs if t in selfrep)


def test_spectrum_and_utilization():
    res = {**RES, "spectrum": [{"band_id": 1, "bandwidth_mhz": 20}]}
    sc = scenario([{**member("a"), "resources": res}, {"name": "idle", "resources": res}], epochs=3)
    m = run_scenario(sc).metrics
    assert m.spectrum == [(1, 40.0, 20.0), (2, 40.0, 20.0), (3, 40.0, 20.0)]
    assert [u[4] for u in m.utilization] == [1.0, 1.0, 1.0]


def test_membership_stays_exclusive():
    for seed in range(5):
        r = run_scenario(random_scenario(seed, max_nodes=15, max_epochs=30))
        assert membership_exclusive(r.state)
        assert r.metrics.chain_ok


def test_insolvency_is_flagged():
    m = run_scenario(scenario([member("a")])).metrics
    assert len(m.insolvent) == 1


def test_compute_metrics_refuses_corrupt_chain():
    r = run_scenario(scenario([member("a")]))
    blocks = list(r.ledger.blocks)
    blocks[2] = blocks[3]
    with pytest.raises(CorruptLedger):
        compute_metrics(blocks, r.ledger.params)


def test_scenario_json_round_trip(tmp_path):
    sc = scenario([member("a", leave_epoch=3, rejoin_epoch=4), member("u", behavior={"kind": "under_deliverer", "delta": 0.5})])
    path = tmp_path / "s.json"
    path.write_text(json.dumps(sc.to_dict()))
    assert Scenario.load(path) == sc


def test_count_expands_nodes():
    sc = scenario([member("w", count=3)])
    assert [n.name for n in sc.nodes] == ["lead", "w-0", "w-1", "w-2"]


@pytest.mark.parametrize(
    "bad",
    [
        {"epochs": 0},
        {"nodes": [{"name": "lead", "bc_node": True, "resources": RES}, {"name": "lead", "resources": RES}]},
        {"nodes": [{"name": "x", "resources": RES}]},
        {"offline_windows": {"lead": [[1, 3]]}},
        {"offline_windows": {"ghost": [[1, 3]]}},
        {"security": "toy", "nodes": [{"name": "lead", "bc_node": True, "resources": RES}] + [member(f"n{i}") for i in range(10)]},
    ],
)
def test_invalid_scenarios(bad):
    d = {"seed": 1, "epochs": 3, "nodes": [{"name": "lead", "bc_node": True, "resources": RES}], "systems": []}
    d.update(bad)
    with pytest.raises(InvalidScenario):
        Scenario.from_dict(d)


def test_invalid_behaviors():
    with pytest.raises(InvalidScenario):
        BehaviorPolicy(Behavior.UNDER_DELIVERER, delta=1.0)
    with pytest.raises(InvalidScenario):
        BehaviorPolicy(Behavior.CHURNER, period=0)
    with pytest.raises(InvalidScenario):
        Scenario.load("/nonexistent/scenario.json")


def test_toy_group_scenario_runs():
    sc = scenario([member("a"), member("b")], security="toy", epochs=4)
    r = run_scenario(sc)
    assert r.metrics.chain_ok and r.metrics.earned[r.node_ids["a"]] == 40_000_000
