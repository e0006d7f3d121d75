import math

import pytest

from oec.errors import DegenerateAdvertisement, InvalidReport, NothingToSettle
from oec.incentives import (
    compute_payment,
    compute_performance,
    expected_performance,
    payment_micro,
    settle_epoch,
    update_reputation,
    window_ratio,
)
from oec.records import Kind

from conftest import FULL, HALF, TASK, World, config


def test_performance_examples():
    assert compute_performance(TASK, 50, 10) == 0.5
    assert compute_performance(TASK, 200, 10) == 1.0
    assert compute_performance(TASK, 0, 10) == 0.0
    for d, t in ((1, 0), (1, -1), (-1, 1), (math.nan, 1), (1, math.inf)):
        with pytest.raises(InvalidReport):
            compute_performance(TASK, d, t)


def test_expected_performance_examples():
    assert expected_performance(TASK, 2, 8, 100) == 0.5
    assert expected_performance(TASK, 4, 8, 100) == 1.0
    assert expected_performance(TASK, 8, 16, 200) == 1.0
    assert expected_performance(TASK, 0, 8, 100) == 0.0


def test_payment_examples():
    assert compute_payment(0.5, 1.0, 10) == 2.5
    assert compute_payment(0.3, 0.3, 7) == 0.3 * 7
    assert compute_payment(0.0, 0.5, 10) == 0.0
    assert payment_micro(0.5, 1.0, 10) == 2_500_000
    with pytest.raises(DegenerateAdvertisement):
        compute_payment(0.5, 0.0, 10)


def test_micro_rounding_is_half_even():
    # 1/128 credit = 7812.5 micro-credits exactly; ties go to the even neighbour
    assert payment_micro(1.0, 1.0, 1 / 128) == 7812
    assert payment_micro(1.0, 1.0, 3 / 128) == 23438


def test_monotonicity():
    for g in (0.25, 0.5, 1.0):
        zs = [compute_payment(f, g, 10) for f in (0.1, 0.2, 0.4, 0.8)]
        assert zs == sorted(zs) and len(set(zs)) == 4
    zs = [compute_payment(0.3, g, 10) for g in (0.25, 0.5, 0.75, 1.0)]
    assert zs == sorted(zs, reverse=True)
    assert compute_payment(0.2, 0.4, 10) <= 0.2 * 10


def test_reputation_examples():
    assert update_reputation(0.5, 1.0, 0.2) == pytest.approx(0.6, abs=1e-15)
    assert update_reputation(0.5, 0.5, 0.2) == 0.5
    r = 0.5
    for k in range(1, 7):
        r = update_reputation(r, 0.2)
        assert abs(r - (0.2 + 0.3 * 0.8**k)) < 1e-9
    assert r < 0.3
    assert update_reputation(0.9, 5.0) == update_reputation(0.9, 1.0)
    assert 0 <= update_reputation(0.0, 0.0, 0.99) <= 1


def test_honest_stream_converges_up():
    r, prev = 0.5, 0.0
    for _ in range(100):
        r = update_reputation(r, 1.0)
        assert prev < r <= 1.0
        prev = r


def test_window_ratio():
    assert window_ratio([0.5, 0.5], 1.0) == 0.5
    assert window_ratio([1.0], 0.5) == 1.0


def two_member_world():
    w = World()
    w.subscribe("lead", bc_node=True)
    w.subscribe("a", HALF)
    w.subscribe("b", FULL)
    sid = w.create("lead", config(settlement_period=1))
    w.commit()
    w.join("a", sid)
    w.join("b", sid)
    w.commit()
    return w, sid


def test_settlement_conserves_credits():
    w, sid = two_member_world()
    w.report("lead", "a", sid, 25.0)  # f = 0.25 against g = 0.5: Z = 0.25 * 10 * 0.5 = 1.25
    w.report("lead", "b", sid, 100.0)  # f = 1 = g: Z = 10
    txs = w.platform.settle_due()
    settlements = [t.payload for t in txs if t.kind is Kind.SETTLEMENT]
    assert [s.debit for s in settlements] == [sum(r.amount for r in s.records) for s in settlements]
    w.commit()
    bal = w.ledger.state.balances
    assert bal[w.id("a")] == 1_250_000 and bal[w.id("b")] == 10_000_000
    assert bal[w.id("lead")] == -11_250_000
    assert sum(bal.values()) == 0


def test_two_members_owed_2_5_and_10():
    w, sid = two_member_world()
    w.report("lead", "a", sid, 50.0)  # f = g = 0.5: Z = 5
    w.report("lead", "b", sid, 50.0)  # f = 0.5, g = 1: Z = 2.5
    w.platform.settle_due()
    w.commit()
    bal = w.ledger.state.balances
    assert bal[w.id("b")] == 2_500_000
    assert bal[w.id("a")] == 5_000_000
    assert bal[w.id("lead")] == -7_500_000


def test_settle_twice_is_nothing_to_settle():
    w, sid = two_member_world()
    w.report("lead", "a", sid, 50.0)
    first = settle_epoch(w.state, sid, w.platform.epoch, w.platform.manager)
    for tx in first:
        w.platform.submit(tx)
    with pytest.raises(NothingToSettle):
        settle_epoch(w.state, sid, w.platform.epoch, w.platform.manager)


def test_empty_system_settles_nothing():
    w = World()
    w.subscribe("lead", bc_node=True)
    sid = w.create("lead")
    w.commit()
    with pytest.raises(NothingToSettle):
        settle_epoch(w.state, sid, 2, w.platform.manager)
    assert w.platform.settle_due() == []


def test_settlement_waits_for_its_period():
    w = World()
    w.subscribe("lead", bc_node=True)
    w.subscribe("a")
    sid = w.create("lead", config(settlement_period=3))
    w.commit()  # epoch 1
    w.join("a", sid)
    for _ in range(4):  # epochs 2..5
        w.report("lead", "a", sid, 100.0)
        w.platform.settle_due()
        w.commit()
    # reports 2 and 3 settled at epoch 3; 4 and 5 still open
    assert w.ledger.state.balances[w.id("a")] == 20_000_000
    rec = w.ledger.state.systems[sid].members[w.id("a")]
    assert [r.epoch for r in rec.unsettled] == [4, 5]
