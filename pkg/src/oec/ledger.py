"""Hash-chained block store and the fold that derives platform state from it.

The ledger is event-sourced: :class:`LedgerState` is never persisted, it is
recomputed by folding every transaction in block order.  The fold is also the
validator, so a block is accepted exactly when folding it succeeds.

Manager terms: block 0 is genesis; term ``t`` covers blocks
``t*L + 1 .. (t+1)*L`` for term length ``L``.  The term's manager is picked from
the BC peers known after block ``t*L`` (the term's anchor) using the anchor's
hash.  When no BC peer exists yet (term 0 of a fresh ledger) the committer of
block 1 bootstraps the chain: its first transaction must be its own BC-node
subscription, and it manages the rest of that term.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

from . import lifecycle
from .codec import encode
from .errors import (
    AuthFailed,
    CorruptLedger,
    DecodeError,
    DuplicateIdentity,
    InvalidTransaction,
    MalformedProof,
    NoPeers,
    NotManager,
    Reason,
)
from .identity import GroupParams, manager_index, node_id, verify_proof
from .incentives import build_settlement, member_settlement_txs, settlement_due, update_reputation
from .lifecycle import EdgeSystem
from .records import (
    INITIAL_REPUTATION,
    MANAGER_KINDS,
    ZERO_HASH,
    Block,
    Kind,
    NodeId,
    NodeProfile,
    SystemId,
    RejectedAction,
    Transaction,
    decode_block,
    genesis,
    hash_block,
    seal,
    system_id,
)

DEFAULT_TERM_LENGTH = 16
GENESIS = genesis()

# reasons a manager may record on-chain as a RejectedAction instead of refusing the tx
NOT_RECORDABLE = frozenset(
    {
        Reason.AUTH_FAILED,
        Reason.SEQUENCE_REPLAY,
        Reason.UNKNOWN_NODE,
        Reason.DUPLICATE_IDENTITY,
        Reason.MALFORMED,
        Reason.NOT_MANAGER,
        Reason.SETTLEMENT_MISMATCH,
        Reason.NOTHING_TO_SETTLE,
        Reason.REPUTATION_MISMATCH,
        Reason.REJECTION_MISMATCH,
    }
)
RECORDABLE = frozenset(Reason) - NOT_RECORDABLE


@dataclass
class LedgerState:
    profiles: dict[NodeId, NodeProfile] = field(default_factory=dict)
    systems: dict[SystemId, EdgeSystem] = field(default_factory=dict)
    balances: dict[NodeId, int] = field(default_factory=dict)
    memberships: dict[NodeId, SystemId | None] = field(default_factory=dict)
    last_seq: dict[NodeId, int] = field(default_factory=dict)
    tip_index: int = 0
    tip_hash: bytes = GENESIS.hash
    term_index: int = 0
    term_manager: NodeId = ZERO_HASH

    def clone(self) -> "LedgerState":
        return LedgerState(
            dict(self.profiles),
            {k: v.clone() for k, v in self.systems.items()},
            dict(self.balances),
            dict(self.memberships),
            dict(self.last_seq),
            self.tip_index,
            self.tip_hash,
            self.term_index,
            self.term_manager,
        )

    def bc_peers(self) -> list[NodeId]:
        return sorted(i for i, p in self.profiles.items() if p.bc_node)


@dataclass(frozen=True)
class BlockContext:
    params: GroupParams
    epoch: int
    manager: NodeId


# --- validation -----------------------------------------------------------


def _proof_ok(params: GroupParams, pk: int, tx: Transaction) -> bool:
    try:
        return verify_proof(params, pk, tx.proof)
    except MalformedProof:
        return False


def check_tx(state: LedgerState, tx: Transaction, ctx: BlockContext) -> Reason | None:
    """First rule ``tx`` violates against ``state``, or None if it may commit."""
    kind = tx.kind
    if kind in MANAGER_KINDS and tx.actor != ctx.manager:
        return Reason.NOT_MANAGER
    if kind is Kind.SUBSCRIBE:
        prof: NodeProfile = tx.payload
        if prof.id != tx.actor or prof.id != node_id(prof.pk):
            return Reason.MALFORMED
        if prof.reputation != INITIAL_REPUTATION or not prof.resources.is_valid():
            return Reason.MALFORMED
        if not ctx.params.is_element(prof.pk):
            return Reason.MALFORMED
        if prof.id in state.profiles:
            return Reason.DUPLICATE_IDENTITY
        if not _proof_ok(ctx.params, prof.pk, tx):
            return Reason.AUTH_FAILED
        return None
    actor = state.profiles.get(tx.actor)
    if actor is None:
        return Reason.UNKNOWN_NODE
    if tx.seq <= state.last_seq.get(tx.actor, 0):
        return Reason.SEQUENCE_REPLAY
    if not _proof_ok(ctx.params, actor.pk, tx):
        return Reason.AUTH_FAILED
    return _check_payload(state, tx, ctx)


def _check_payload(state: LedgerState, tx: Transaction, ctx: BlockContext) -> Reason | None:
    kind, p = tx.kind, tx.payload
    if kind is Kind.CREATE_SYSTEM:
        return Reason.INVALID_CONFIG if p.config.problems() else None
    if kind is Kind.JOIN:
        return lifecycle.check_join(state, tx.actor, p.system)
    if kind is Kind.LEAVE:
        return lifecycle.check_leave(state, tx.actor, p.system)
    if kind is Kind.BREAK:
        return lifecycle.check_break(state, tx.actor, p.system)
    if kind is Kind.PERFORMANCE_REPORT:
        return lifecycle.check_report(state, tx.actor, p, ctx.epoch)
    if kind is Kind.SETTLEMENT:
        system = state.systems.get(p.system)
        if system is None or not system.active:
            return Reason.SETTLEMENT_MISMATCH
        rec = system.members.get(p.payee)
        if rec is None or rec.pending_ratio is not None or p.epoch > ctx.epoch:
            return Reason.SETTLEMENT_MISMATCH
        expected = build_settlement(system, p.payee, p.epoch)
        if expected is None:
            return Reason.NOTHING_TO_SETTLE
        return None if expected == p else Reason.SETTLEMENT_MISMATCH
    if kind is Kind.REPUTATION_UPDATE:
        system = state.systems.get(p.system)
        rec = system.members.get(p.node) if system is not None else None
        if rec is None or rec.pending_ratio is None:
            return Reason.REPUTATION_MISMATCH
        old = state.profiles[p.node].reputation
        ok = (
            p.ratio == rec.pending_ratio
            and p.old == old
            and p.new == update_reputation(old, rec.pending_ratio, system.config.alpha)
        )
        return None if ok else Reason.REPUTATION_MISMATCH
    if kind is Kind.REJECTED_ACTION:
        inner = p.inner
        if inner.kind in MANAGER_KINDS or inner.kind is Kind.SUBSCRIBE or p.reason not in RECORDABLE:
            return Reason.MALFORMED
        return None if check_tx(state, inner, ctx) == p.reason else Reason.REJECTION_MISMATCH
    return Reason.MALFORMED


# --- effects --------------------------------------------------------------


def _apply_effects(state: LedgerState, tx: Transaction, ctx: BlockContext) -> None:
    kind, p = tx.kind, tx.payload
    if kind is Kind.SUBSCRIBE:
        state.profiles[p.id] = p
        state.balances[p.id] = 0
        state.memberships[p.id] = None
    elif kind is Kind.CREATE_SYSTEM:
        sid = system_id(tx.actor, tx.seq)
        state.systems[sid] = EdgeSystem(sid, tx.actor, p.config)
    elif kind is Kind.JOIN:
        lifecycle.apply_join(state, tx.actor, p.system, ctx.epoch)
    elif kind is Kind.LEAVE:
        lifecycle.apply_leave(state, tx.actor, p.system)
    elif kind is Kind.BREAK:
        lifecycle.apply_break(state, p.system)
    elif kind is Kind.PERFORMANCE_REPORT:
        lifecycle.apply_report(state, p)
    elif kind is Kind.SETTLEMENT:
        system = state.systems[p.system]
        state.balances[system.leader] -= p.debit
        state.balances[p.payee] += p.debit
        rec = system.members[p.payee]
        system.members[p.payee] = replace(
            rec,
            unsettled=tuple(r for r in rec.unsettled if r.epoch > p.epoch),
            pending_ratio=p.ratio,
        )
    elif kind is Kind.REPUTATION_UPDATE:
        state.profiles[p.node] = replace(state.profiles[p.node], reputation=p.new)
        system = state.systems[p.system]
        system.members[p.node] = replace(system.members[p.node], pending_ratio=None)
    elif kind is Kind.REJECTED_ACTION:
        state.last_seq[p.inner.actor] = p.inner.seq
    state.last_seq[tx.actor] = tx.seq


def apply_tx(state: LedgerState, tx: Transaction, ctx: BlockContext) -> None:
    """Validate ``tx`` and fold it into ``state``; ``state`` is untouched on error."""
    reason = check_tx(state, tx, ctx)
    if reason is not None:
        if reason is Reason.AUTH_FAILED:
            raise AuthFailed(tx)
        if reason is Reason.DUPLICATE_IDENTITY:
            raise DuplicateIdentity(tx)
        raise InvalidTransaction(reason, tx)
    _apply_effects(state, tx, ctx)


# --- blocks ---------------------------------------------------------------


def term_of(index: int, term_length: int) -> int:
    return 0 if index == 0 else (index - 1) // term_length


def check_genesis(b: Block) -> bool:
    return (
        b.index == 0
        and b.prev_hash == ZERO_HASH
        and b.manager == ZERO_HASH
        and b.term == 0
        and not b.txs
        and b.hash == hash_block(b)
    )


def expected_manager(state: LedgerState, index: int, term_length: int) -> tuple[int, NodeId | None]:
    """(term, manager) for the block after ``state``'s tip; manager None means bootstrap."""
    term = term_of(index, term_length)
    if (index - 1) % term_length != 0:
        return term, state.term_manager
    peers = state.bc_peers()
    if not peers:
        return term, None
    return term, peers[manager_index(term, state.tip_hash, len(peers))]


def apply_block(
    state: LedgerState,
    block: Block,
    params: GroupParams,
    term_length: int,
    on_tx: Callable[[LedgerState, Transaction, BlockContext], None] | None = None,
) -> None:
    """Fold ``block`` into ``state`` in place. Callers clone first if they need atomicity."""
    if block.index != state.tip_index + 1 or block.prev_hash != state.tip_hash:
        raise CorruptLedger(f"block {block.index} does not extend the tip")
    if block.hash != hash_block(block):
        raise CorruptLedger(f"block {block.index} hash mismatch")
    term, manager = expected_manager(state, block.index, term_length)
    if block.term != term:
        raise CorruptLedger(f"block {block.index} claims term {block.term}, expected {term}")
    if manager is None:
        first = block.txs[0] if block.txs else None
        if first is None or first.kind is not Kind.SUBSCRIBE or first.actor != block.manager or not first.payload.bc_node:
            raise NotManager("bootstrap block must open with its committer's BC-node subscription")
        manager = block.manager
    if block.manager != manager:
        raise NotManager(f"block {block.index} committed by {block.manager.hex()[:12]}, manager is {manager.hex()[:12]}")
    ctx = BlockContext(params, block.index, manager)
    for tx in block.txs:
        if on_tx is not None:
            on_tx(state, tx, ctx)
        apply_tx(state, tx, ctx)
    state.tip_index = block.index
    state.tip_hash = block.hash
    state.term_index = term
    state.term_manager = manager


@dataclass(frozen=True)
class ChainVerdict:
    ok: bool
    bad_index: int | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_chain(blocks: Iterable[Block], params: GroupParams, term_length: int = DEFAULT_TERM_LENGTH) -> ChainVerdict:
    """Check genesis, hash links, recomputed hashes, managers and the full fold."""
    blocks = list(blocks)
    if not blocks or not check_genesis(blocks[0]):
        return ChainVerdict(False, 0, "malformed genesis")
    state = LedgerState()
    for position, b in enumerate(blocks[1:], start=1):
        try:
            apply_block(state, b, params, term_length)
        except (CorruptLedger, NotManager, InvalidTransaction) as exc:
            return ChainVerdict(False, position, str(exc))
    return ChainVerdict(True)


def replay(
    blocks: Iterable[Block],
    params: GroupParams,
    term_length: int = DEFAULT_TERM_LENGTH,
    on_block: Callable[[Block, LedgerState], None] | None = None,
    on_tx: Callable[[LedgerState, Transaction, BlockContext], None] | None = None,
) -> LedgerState:
    """Pure fold of a whole chain; raises CorruptLedger if the chain does not verify."""
    blocks = list(blocks)
    if not blocks or not check_genesis(blocks[0]):
        raise CorruptLedger("malformed genesis")
    state = LedgerState()
    if on_block is not None:
        on_block(blocks[0], state)
    for b in blocks[1:]:
        try:
            apply_block(state, b, params, term_length, on_tx)
        except (NotManager, InvalidTransaction) as exc:
            raise CorruptLedger(f"block {b.index}: {exc}") from exc
        if on_block is not None:
            on_block(b, state)
    return state


# --- files ----------------------------------------------------------------


def export_lines(blocks: Iterable[Block]) -> str:
    return "".join(encode(b).hex() + "\n" for b in blocks)


def parse_lines(text: str) -> list[Block]:
    blocks = []
    for n, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            raw = bytes.fromhex(line)
        except ValueError:
            raise DecodeError(f"line {n}: not hex") from None
        try:
            blocks.append(decode_block(raw))
        except DecodeError as exc:
            raise DecodeError(f"line {n}: {exc}") from None
    if not blocks:
        raise DecodeError("empty ledger file")
    return blocks


class Ledger:
    """Single-writer chain with its live folded state."""

    def __init__(self, params: GroupParams, term_length: int = DEFAULT_TERM_LENGTH) -> None:
        if term_length < 1:
            raise ValueError("term_length must be >= 1")
        self.params = params
        self.term_length = term_length
        self.blocks: list[Block] = [GENESIS]
        self.state = LedgerState()
        self._lock = threading.Lock()

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.tip.index

    def snapshot(self) -> LedgerState:
        return self.state.clone()

    def next_manager(self) -> NodeId | None:
        return expected_manager(self.state, self.height + 1, self.term_length)[1]

    def next_term(self) -> int:
        return term_of(self.height + 1, self.term_length)

    def append_block(self, txs: Iterable[Transaction], manager: NodeId) -> Block:
        """Commit ``txs`` as the next block. All-or-nothing."""
        with self._lock:
            tip = self.tip
            block = seal(tip.index + 1, tip.hash, manager, self.next_term(), txs)
            work = self.state.clone()
            apply_block(work, block, self.params, self.term_length)
            self.blocks.append(block)
            self.state = work
            return block

    def verify(self) -> ChainVerdict:
        return verify_chain(self.blocks, self.params, self.term_length)

    def replay(self, **kw) -> LedgerState:
        return replay(self.blocks, self.params, self.term_length, **kw)

    def manager_for_term(self, term_index: int) -> NodeId:
        """Manager of ``term_index`` as fixed by the chain prefix."""
        anchor = term_index * self.term_length
        if anchor > self.height:
            raise ValueError(f"term {term_index} is not anchored yet (height {self.height})")
        state = replay(self.blocks[: anchor + 1], self.params, self.term_length)
        _, manager = expected_manager(state, anchor + 1, self.term_length)
        if manager is not None:
            return manager
        if anchor + 1 <= self.height:
            return self.blocks[anchor + 1].manager
        raise NoPeers(f"no BC peers at the anchor of term {term_index}")

    def manager_sequence(self) -> list[NodeId]:
        return [b.manager for b in self.blocks[1:]]

    def export(self, path: str | Path) -> None:
        Path(path).write_text(export_lines(self.blocks))

    @classmethod
    def from_blocks(cls, blocks: list[Block], params: GroupParams, term_length: int = DEFAULT_TERM_LENGTH) -> "Ledger":
        verdict = verify_chain(blocks, params, term_length)
        if not verdict:
            raise CorruptLedger(f"chain fails verification at block {verdict.bad_index}: {verdict.detail}")
        led = cls(params, term_length)
        led.blocks = list(blocks)
        led.state = replay(blocks, params, term_length)
        return led

    @classmethod
    def load(cls, path: str | Path, params: GroupParams, term_length: int = DEFAULT_TERM_LENGTH) -> "Ledger":
        return cls.from_blocks(parse_lines(Path(path).read_text()), params, term_length)


class Platform:
    """Builds the next block on behalf of the current manager.

    Proposals are validated against a working copy of the state as they arrive.
    Refusals the manager is allowed to record become RejectedAction transactions;
    a Leave or Break with unsettled work is preceded by its settlements.
    """

    def __init__(self, ledger: Ledger, signers) -> None:
        self.ledger = ledger
        self.signers = signers  # NodeId -> Account for every BC peer that may manage
        self._reset()

    def _reset(self) -> None:
        self.working: LedgerState = self.ledger.snapshot()
        self.pending: list[Transaction] = []
        self.manager_id: NodeId | None = self.ledger.next_manager()

    @property
    def epoch(self) -> int:
        return self.ledger.height + 1

    @property
    def state(self) -> LedgerState:
        return self.working

    @property
    def manager(self):
        if self.manager_id is None:
            raise NotManager("no manager yet: the first transaction must be a BC-node subscription")
        return self.signers[self.manager_id]

    def _ctx(self) -> BlockContext:
        return BlockContext(self.ledger.params, self.epoch, self.manager_id or ZERO_HASH)

    def _apply(self, tx: Transaction) -> Transaction:
        apply_tx(self.working, tx, self._ctx())
        self.pending.append(tx)
        return tx

    def submit(self, tx: Transaction) -> Transaction:
        """Queue ``tx`` for the next block and return its on-chain disposition."""
        if self.manager_id is None:
            if tx.kind is not Kind.SUBSCRIBE or not tx.payload.bc_node:
                raise NotManager("the first transaction of a fresh ledger must be a BC-node subscription")
            self.manager_id = tx.actor
        ctx = self._ctx()
        reason = check_tx(self.working, tx, ctx)
        if reason is Reason.UNSETTLED_REPORTS and tx.kind in (Kind.LEAVE, Kind.BREAK):
            sid = tx.payload.system
            members = [tx.actor] if tx.kind is Kind.LEAVE else sorted(self.working.systems[sid].members)
            for stx in lifecycle.exit_settlements(self.working, sid, members, self.epoch, self.manager):
                self._apply(stx)
            if tx.actor == self.manager_id:
                # the settlements consumed the manager's own later seq numbers
                tx = self.manager.sign(tx.kind, tx.payload)
            reason = check_tx(self.working, tx, ctx)
        if reason is None:
            # just checked against the working state; fold without re-checking
            _apply_effects(self.working, tx, ctx)
            self.pending.append(tx)
            return tx
        if reason in RECORDABLE:
            return self._apply(self.manager.sign(Kind.REJECTED_ACTION, RejectedAction(tx, reason)))
        if reason is Reason.AUTH_FAILED:
            raise AuthFailed(tx)
        if reason is Reason.DUPLICATE_IDENTITY:
            raise DuplicateIdentity(tx)
        raise InvalidTransaction(reason, tx)

    def submit_all(self, txs: Iterable[Transaction]) -> list[Transaction]:
        return [self.submit(tx) for tx in txs]

    def settle_due(self) -> list[Transaction]:
        """Periodic settlement of every active system whose period ends this epoch."""
        out = []
        epoch = self.epoch
        for sid in sorted(self.working.systems):
            system = self.working.systems[sid]
            if not system.active or not settlement_due(system.config, epoch):
                continue
            for m in sorted(system.members):
                for stx in member_settlement_txs(self.working, sid, m, epoch, self.manager):
                    out.append(self._apply(stx))
        return out

    def commit(self) -> Block:
        manager = self.manager_id
        if manager is None:
            manager = self.ledger.next_manager()
        if manager is None:
            raise NotManager("cannot commit a bootstrap block without a BC-node subscription")
        try:
            return self.ledger.append_block(self.pending, manager)
        finally:
            self._reset()
