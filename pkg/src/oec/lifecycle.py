"""Edge-system lifecycle: create, join, leave and break.

A node is admitted to a system only if all four hold:

1. it is not currently a member of any system;
2. its reputation is at least the system's ``min_reputation``;
3. its expected performance ``g`` for the system's task is at least ``min_expected_perf``;
4. the members' summed ``g`` is still below the system's ``target_capacity``.

Leaving (or breaking a system) first settles every unsettled report and updates
the departing members' reputations; only then is the membership removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

from .errors import InvalidTransaction, Reason
from .incentives import expected_performance, member_settlement_txs
from .records import CreateSystem, EdgeSystemConfig, Kind, NodeId, PerformanceReport, SystemAction, SystemId


class Status(IntEnum):
    ACTIVE = 1
    DISSOLVED = 2


@dataclass(frozen=True)
class MembershipRecord:
    joined_epoch: int
    g_advertised: float
    unsettled: tuple[PerformanceReport, ...] = ()
    # delivery ratio of the last settlement, awaiting its reputation update
    pending_ratio: float | None = None


@dataclass
class EdgeSystem:
    id: SystemId
    leader: NodeId
    config: EdgeSystemConfig
    members: dict[NodeId, MembershipRecord] = field(default_factory=dict)
    status: Status = Status.ACTIVE
    last_report: dict[NodeId, int] = field(default_factory=dict)

    def clone(self) -> "EdgeSystem":
        return EdgeSystem(self.id, self.leader, self.config, dict(self.members), self.status, dict(self.last_report))

    @property
    def active(self) -> bool:
        return self.status is Status.ACTIVE

    def committed_capacity(self) -> float:
        return math.fsum(m.g_advertised for m in self.members.values())


@dataclass(frozen=True)
class Rejection:
    """A refused action: the signed transaction and why it cannot commit."""

    reason: Reason
    tx: object


def node_g(state, node: NodeId, config: EdgeSystemConfig) -> float:
    res = state.profiles[node].resources
    return expected_performance(config.task, res.processing, res.storage, res.communication)


# --- predicates -----------------------------------------------------------


def check_join(state, node: NodeId, system_id: SystemId) -> Reason | None:
    if node not in state.profiles:
        return Reason.UNKNOWN_NODE
    system = state.systems.get(system_id)
    if system is None:
        return Reason.UNKNOWN_SYSTEM
    if not system.active:
        return Reason.SYSTEM_DISSOLVED
    if node == system.leader:
        return Reason.LEADER_CANNOT_JOIN
    cfg = system.config
    if state.memberships.get(node) is not None:
        return Reason.ALREADY_MEMBER
    if state.profiles[node].reputation < cfg.min_reputation:
        return Reason.LOW_REPUTATION
    if node_g(state, node, cfg) < cfg.min_expected_perf:
        return Reason.LOW_CAPACITY
    if system.committed_capacity() >= cfg.target_capacity:
        return Reason.SYSTEM_FULL
    return None


def _has_open_books(rec: MembershipRecord) -> bool:
    return bool(rec.unsettled) or rec.pending_ratio is not None


def check_leave(state, node: NodeId, system_id: SystemId) -> Reason | None:
    system = state.systems.get(system_id)
    if system is None:
        return Reason.UNKNOWN_SYSTEM
    if not system.active:
        return Reason.SYSTEM_DISSOLVED
    if node == system.leader:
        return Reason.LEADER_MUST_BREAK
    rec = system.members.get(node)
    if rec is None:
        return Reason.NOT_MEMBER
    if _has_open_books(rec):
        return Reason.UNSETTLED_REPORTS
    return None


def check_break(state, node: NodeId, system_id: SystemId) -> Reason | None:
    system = state.systems.get(system_id)
    if system is None:
        return Reason.UNKNOWN_SYSTEM
    if not system.active:
        return Reason.SYSTEM_DISSOLVED
    if node != system.leader:
        return Reason.NOT_LEADER
    if any(_has_open_books(rec) for rec in system.members.values()):
        return Reason.UNSETTLED_REPORTS
    return None


def check_report(state, actor: NodeId, report: PerformanceReport, epoch: int) -> Reason | None:
    system = state.systems.get(report.system)
    if system is None:
        return Reason.UNKNOWN_SYSTEM
    if not system.active:
        return Reason.SYSTEM_DISSOLVED
    if report.node not in system.members:
        return Reason.NOT_MEMBER
    # the leader measures; a member may self-report work done while offline
    if actor not in (system.leader, report.node):
        return Reason.NOT_REPORTER
    if not (report.time_taken > 0 and math.isfinite(report.time_taken)):
        return Reason.INVALID_REPORT
    if not (report.data_processed >= 0 and math.isfinite(report.data_processed)):
        return Reason.INVALID_REPORT
    if report.epoch > epoch:
        return Reason.INVALID_REPORT
    last = system.last_report.get(report.node)
    if last is not None and report.epoch <= last:
        return Reason.DUPLICATE_REPORT
    return None


# --- effects (called by the ledger fold after validation) -----------------


def apply_join(state, node: NodeId, system_id: SystemId, epoch: int) -> None:
    system = state.systems[system_id]
    system.members[node] = MembershipRecord(epoch, node_g(state, node, system.config))
    state.memberships[node] = system_id


def apply_leave(state, node: NodeId, system_id: SystemId) -> None:
    del state.systems[system_id].members[node]
    state.memberships[node] = None


def apply_break(state, system_id: SystemId) -> None:
    system = state.systems[system_id]
    for m in system.members:
        state.memberships[m] = None
    system.members = {}
    system.status = Status.DISSOLVED


def apply_report(state, report: PerformanceReport) -> None:
    system = state.systems[report.system]
    rec = system.members[report.node]
    system.members[report.node] = replace(rec, unsettled=rec.unsettled + (report,))
    system.last_report[report.node] = report.epoch


# --- actions --------------------------------------------------------------


def _raise(reason: Reason | None, detail: str = "") -> None:
    if reason is not None:
        raise InvalidTransaction(reason, detail=detail)


def create_system(state, leader, config: EdgeSystemConfig):
    """Signed CreateSystem transaction from ``leader`` (an Account)."""
    if leader.id not in state.profiles:
        raise InvalidTransaction(Reason.UNKNOWN_NODE)
    problems = config.problems()
    if problems:
        raise InvalidTransaction(Reason.INVALID_CONFIG, detail="; ".join(problems))
    return leader.sign(Kind.CREATE_SYSTEM, CreateSystem(config))


def join(state, node, system_id: SystemId):
    """Signed Join, or a Rejection carrying the signed Join and the failed rule.

    Unknown nodes and systems are input errors and raise instead.
    """
    reason = check_join(state, node.id, system_id)
    if reason in (Reason.UNKNOWN_NODE, Reason.UNKNOWN_SYSTEM):
        raise InvalidTransaction(reason)
    tx = node.sign(Kind.JOIN, SystemAction(system_id))
    if reason is None:
        return tx
    return Rejection(reason, tx)


def exit_settlements(state, system_id: SystemId, members, epoch: int, manager):
    """Settlement + reputation transactions owed to departing ``members``."""
    txs = []
    for m in members:
        txs.extend(member_settlement_txs(state, system_id, m, epoch, manager))
    return txs


def leave(state, node, system_id: SystemId, manager, epoch: int):
    """[Settlement, ReputationUpdate]? followed by the member's Leave."""
    reason = check_leave(state, node.id, system_id)
    if reason is not Reason.UNSETTLED_REPORTS:
        _raise(reason)
    pre = exit_settlements(state, system_id, [node.id], epoch, manager)
    return pre + [node.sign(Kind.LEAVE, SystemAction(system_id))]


def break_system(state, leader, system_id: SystemId, manager, epoch: int):
    """Every member's settlement pair, then the leader's Break."""
    reason = check_break(state, leader.id, system_id)
    if reason is not Reason.UNSETTLED_REPORTS:
        _raise(reason)
    members = sorted(state.systems[system_id].members)
    pre = exit_settlements(state, system_id, members, epoch, manager)
    return pre + [leader.sign(Kind.BREAK, SystemAction(system_id))]
