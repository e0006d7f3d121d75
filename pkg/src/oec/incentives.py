"""Performance scoring, the payment rule and reputation updates.

Payment for one report::

    Z = f * X_T * (f / g)

where ``f`` is delivered performance, ``g`` the performance promised by the
node's advertised capacities and ``X_T`` the system's credit rate.  A node
that delivers a fraction ``d`` of what it advertised is paid ``d**2`` of the
honest amount, so under-delivery costs quadratically.

Credits live on the ledger as integer micro-credits.  ``Z`` is evaluated
exactly over rationals and rounded half-to-even once per payment record.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING

from .errors import DegenerateAdvertisement, InvalidReport, NothingToSettle
from .records import (
    EdgeSystemConfig,
    Kind,
    PaymentRecord,
    PerformanceReport,
    ReputationUpdate,
    Settlement,
    TaskSpec,
)

if TYPE_CHECKING:
    from .account import Account
    from .lifecycle import EdgeSystem

MICRO = 1_000_000


@lru_cache(maxsize=65536)
def compute_performance(task: TaskSpec, data_processed: float, time_taken: float) -> float:
    """Delivered throughput relative to the task's reference rate, capped at 1."""
    if not (time_taken > 0 and math.isfinite(time_taken)):
        raise InvalidReport(f"time_taken must be > 0, got {time_taken}")
    if not (data_processed >= 0 and math.isfinite(data_processed)):
        raise InvalidReport(f"data_processed must be >= 0, got {data_processed}")
    ratio = (Fraction(data_processed) * Fraction(task.ref_time)) / (
        Fraction(time_taken) * Fraction(task.ref_data)
    )
    return float(min(Fraction(1), ratio))


def expected_performance(task: TaskSpec, processing: float, storage: float, communication: float) -> float:
    """Bottleneck of the three advertised capacities against the task's needs, capped at 1."""
    if min(processing, storage, communication) < 0:
        raise ValueError("advertised capacities must be >= 0")
    return min(1.0, processing / task.req_p, storage / task.req_s, communication / task.req_c)


def _exact_payment(f: float, g: float, rate: float) -> Fraction:
    if not g > 0:
        raise DegenerateAdvertisement(f"expected performance must be > 0, got {g}")
    F = Fraction(f)
    return F * Fraction(rate) * (F / Fraction(g))


def compute_payment(f: float, g: float, rate: float) -> float:
    """Payment f*X*f/g in credits, correctly rounded to the nearest double."""
    return float(_exact_payment(f, g, rate))


@lru_cache(maxsize=65536)
def payment_micro(f: float, g: float, rate: float) -> int:
    """Payment f*X*f/g in micro-credits, rounded half-to-even."""
    return round(_exact_payment(f, g, rate) * MICRO)


def update_reputation(old: float, ratio: float, alpha: float = 0.2) -> float:
    """Exponential moving average toward the delivery ratio, clamped to [0, 1]."""
    ratio = min(1.0, ratio)
    new = (1 - alpha) * old + alpha * ratio
    return min(1.0, max(0.0, new))


def settlement_due(config: EdgeSystemConfig, epoch: int) -> bool:
    return epoch % config.settlement_period == 0


def window_ratio(fs, g: float) -> float:
    """``min(1, sum f / sum g)`` over a settlement window with a constant ``g``."""
    total = sum((Fraction(f) for f in fs), Fraction(0))
    return float(min(Fraction(1), total / (len(fs) * Fraction(g))))


def build_settlement(system: "EdgeSystem", member: bytes, epoch: int) -> Settlement | None:
    """Settlement of every unsettled report of ``member`` with epoch <= ``epoch``."""
    rec = system.members[member]
    due = [r for r in rec.unsettled if r.epoch <= epoch]
    if not due:
        return None
    cfg = system.config
    g = rec.g_advertised
    records = []
    fs = []
    for r in due:
        f = compute_performance(cfg.task, r.data_processed, r.time_taken)
        fs.append(f)
        records.append(
            PaymentRecord(
                payer=system.leader,
                payee=member,
                system=system.id,
                epoch_from=r.epoch,
                epoch_to=r.epoch,
                amount=payment_micro(f, g, cfg.rate),
                f_value=f,
                g_value=g,
            )
        )
    return Settlement(
        system=system.id,
        payee=member,
        epoch=epoch,
        records=tuple(records),
        debit=sum(p.amount for p in records),
        ratio=window_ratio(fs, g),
    )


def member_settlement_txs(state, system_id: bytes, member: bytes, epoch: int, manager: "Account"):
    """[Settlement, ReputationUpdate] for one member, or [] if nothing is owed."""
    system = state.systems[system_id]
    st = build_settlement(system, member, epoch)
    if st is None:
        return []
    old = state.profiles[member].reputation
    new = update_reputation(old, st.ratio, system.config.alpha)
    return [
        manager.sign(Kind.SETTLEMENT, st),
        manager.sign(Kind.REPUTATION_UPDATE, ReputationUpdate(member, system_id, old, new, st.ratio)),
    ]


def settle_epoch(state, system_id: bytes, epoch: int, manager: "Account", *, on_exit: bool = False):
    """Settlement and reputation transactions for every member owed pay.

    Periodic settlement requires ``epoch`` to be a multiple of the system's
    settlement period; exits (``on_exit=True``) settle at any epoch.
    Raises NothingToSettle when no member has an unsettled report.
    """
    system = state.systems[system_id]
    if not on_exit and not settlement_due(system.config, epoch):
        raise ValueError(f"epoch {epoch} is not a settlement epoch for period {system.config.settlement_period}")
    txs = []
    for member in sorted(system.members):
        txs.extend(member_settlement_txs(state, system_id, member, epoch, manager))
    if not txs:
        raise NothingToSettle(f"nothing to settle in system {system_id.hex()[:12]} at epoch {epoch}")
    return txs


def report_for(node: bytes, system: bytes, epoch: int, data_processed: float, time_taken: float) -> PerformanceReport:
    return PerformanceReport(node, system, epoch, float(data_processed), float(time_taken))
