"""Wire records: everything that is hashed, signed or written to the ledger file."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any

from .codec import (
    BIGINT,
    BOOL,
    F64,
    HASH,
    TEXT,
    U64,
    EnumOf,
    ListOf,
    Reader,
    RecordOf,
    Writer,
    decode,
    encode,
    encode_fields,
    read_record,
    write_record,
)
from .errors import Reason
from .identity import ZkProof

NodeId = bytes
SystemId = bytes
ZERO_HASH = bytes(32)
INITIAL_REPUTATION = 0.5


class Kind(IntEnum):
    SUBSCRIBE = 1
    CREATE_SYSTEM = 2
    JOIN = 3
    LEAVE = 4
    BREAK = 5
    PERFORMANCE_REPORT = 6
    SETTLEMENT = 7
    REPUTATION_UPDATE = 8
    REJECTED_ACTION = 9


# kinds only the block's manager may author
MANAGER_KINDS = frozenset({Kind.SETTLEMENT, Kind.REPUTATION_UPDATE, Kind.REJECTED_ACTION})


@dataclass(frozen=True)
class Band:
    band_id: int
    bandwidth_mhz: float

    CODEC = (("band_id", U64), ("bandwidth_mhz", F64))


@dataclass(frozen=True)
class Resources:
    """Advertised capacities: processing units, storage (GB), link (Mbps), spectrum."""

    processing: float
    storage: float
    communication: float
    spectrum: tuple[Band, ...] = ()

    CODEC = (
        ("processing", F64),
        ("storage", F64),
        ("communication", F64),
        ("spectrum", ListOf(RecordOf(Band))),
    )

    @property
    def bandwidth_mhz(self) -> float:
        return sum(b.bandwidth_mhz for b in self.spectrum)

    def is_valid(self) -> bool:
        vals = [self.processing, self.storage, self.communication]
        vals += [b.bandwidth_mhz for b in self.spectrum]
        return all(v >= 0 and v != float("inf") for v in vals)


@dataclass(frozen=True)
class NodeProfile:
    id: NodeId
    pk: int
    resources: Resources
    payment_detail: str = ""
    reputation: float = INITIAL_REPUTATION
    bc_node: bool = False

    CODEC = (
        ("id", HASH),
        ("pk", BIGINT),
        ("resources", RecordOf(Resources)),
        ("payment_detail", TEXT),
        ("reputation", F64),
        ("bc_node", BOOL),
    )


@dataclass(frozen=True)
class TaskSpec:
    """Reference workload: ``ref_data`` MB in ``ref_time`` s, plus per-node requirements."""

    ref_data: float
    ref_time: float
    req_p: float
    req_s: float
    req_c: float

    CODEC = (
        ("ref_data", F64),
        ("ref_time", F64),
        ("req_p", F64),
        ("req_s", F64),
        ("req_c", F64),
    )

    def is_valid(self) -> bool:
        return all(
            0 < v < float("inf")
            for v in (self.ref_data, self.ref_time, self.req_p, self.req_s, self.req_c)
        )


@dataclass(frozen=True)
class EdgeSystemConfig:
    target_capacity: float
    rate: float
    task: TaskSpec
    settlement_period: int = 1
    min_reputation: float = 0.3
    min_expected_perf: float = 0.25
    alpha: float = 0.2

    CODEC = (
        ("target_capacity", F64),
        ("rate", F64),
        ("task", RecordOf(TaskSpec)),
        ("settlement_period", U64),
        ("min_reputation", F64),
        ("min_expected_perf", F64),
        ("alpha", F64),
    )

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.target_capacity < float("inf"):
            out.append("target_capacity must be > 0")
        if not 0 < self.rate < float("inf"):
            out.append("rate must be > 0")
        if self.settlement_period < 1:
            out.append("settlement_period must be >= 1")
        if not 0 <= self.min_reputation <= 1:
            out.append("min_reputation must lie in [0, 1]")
        if not 0 < self.min_expected_perf <= 1:
            out.append("min_expected_perf must lie in (0, 1]")
        if not 0 < self.alpha < 1:
            out.append("alpha must lie in (0, 1)")
        if not self.task.is_valid():
            out.append("task fields must all be > 0")
        return out


# --- payloads -------------------------------------------------------------


@dataclass(frozen=True)
class CreateSystem:
    config: EdgeSystemConfig

    CODEC = (("config", RecordOf(EdgeSystemConfig)),)


@dataclass(frozen=True)
class SystemAction:
    """Payload of Join, Leave and Break."""

    system: SystemId

    CODEC = (("system", HASH),)


@dataclass(frozen=True)
class PerformanceReport:
    node: NodeId
    system: SystemId
    epoch: int
    data_processed: float
    time_taken: float

    CODEC = (
        ("node", HASH),
        ("system", HASH),
        ("epoch", U64),
        ("data_processed", F64),
        ("time_taken", F64),
    )


@dataclass(frozen=True)
class PaymentRecord:
    payer: NodeId
    payee: NodeId
    system: SystemId
    epoch_from: int
    epoch_to: int
    amount: int  # micro-credits
    f_value: float
    g_value: float

    CODEC = (
        ("payer", HASH),
        ("payee", HASH),
        ("system", HASH),
        ("epoch_from", U64),
        ("epoch_to", U64),
        ("amount", U64),
        ("f_value", F64),
        ("g_value", F64),
    )


@dataclass(frozen=True)
class Settlement:
    system: SystemId
    payee: NodeId
    epoch: int
    records: tuple[PaymentRecord, ...]
    debit: int  # micro-credits taken from the leader
    ratio: float  # min(1, sum f / sum g) over the window, feeds the reputation update

    CODEC = (
        ("system", HASH),
        ("payee", HASH),
        ("epoch", U64),
        ("records", ListOf(RecordOf(PaymentRecord))),
        ("debit", U64),
        ("ratio", F64),
    )


@dataclass(frozen=True)
class ReputationUpdate:
    node: NodeId
    system: SystemId
    old: float
    new: float
    ratio: float

    CODEC = (
        ("node", HASH),
        ("system", HASH),
        ("old", F64),
        ("new", F64),
        ("ratio", F64),
    )


@dataclass(frozen=True)
class RejectedAction:
    inner: "Transaction"
    reason: Reason

    # CODEC set below, once Transaction exists


# --- transactions and blocks ----------------------------------------------


PAYLOAD_TYPES: dict[Kind, type] = {
    Kind.SUBSCRIBE: NodeProfile,
    Kind.CREATE_SYSTEM: CreateSystem,
    Kind.JOIN: SystemAction,
    Kind.LEAVE: SystemAction,
    Kind.BREAK: SystemAction,
    Kind.PERFORMANCE_REPORT: PerformanceReport,
    Kind.SETTLEMENT: Settlement,
    Kind.REPUTATION_UPDATE: ReputationUpdate,
    Kind.REJECTED_ACTION: RejectedAction,
}

_KIND = EnumOf(Kind)


def signing_bytes(kind: Kind, actor: NodeId, seq: int, payload: Any) -> bytes:
    """The context every transaction proof is bound to."""
    w = Writer()
    _KIND.write(w, kind)
    w.raw32(actor)
    w.u64(seq)
    write_record(w, payload)
    return w.getvalue()


@dataclass(frozen=True)
class Transaction:
    kind: Kind
    actor: NodeId
    seq: int
    payload: Any
    proof_t: int
    proof_s: int

    def __post_init__(self) -> None:
        expected = PAYLOAD_TYPES[self.kind]
        if type(self.payload) is not expected:
            raise TypeError(f"{self.kind.name} expects {expected.__name__} payload")

    def signing_bytes(self) -> bytes:
        # immutable, so the encoding is computed once and kept on the instance
        cached = self.__dict__.get("_signing")
        if cached is None:
            cached = signing_bytes(self.kind, self.actor, self.seq, self.payload)
            object.__setattr__(self, "_signing", cached)
        return cached

    @property
    def proof(self) -> ZkProof:
        return ZkProof(self.proof_t, self.proof_s, self.signing_bytes())

    def write_to(self, w: Writer) -> None:
        w.buf += self.signing_bytes()
        w.bigint(self.proof_t)
        w.bigint(self.proof_s)

    @classmethod
    def read_from(cls, r: Reader) -> "Transaction":
        kind = _KIND.read(r)
        actor = r.raw32()
        seq = r.u64()
        payload = read_record(r, PAYLOAD_TYPES[kind])
        t = r.bigint()
        s = r.bigint()
        return cls(kind, actor, seq, payload, t, s)


RejectedAction.CODEC = (("inner", RecordOf(Transaction)), ("reason", EnumOf(Reason)))


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    manager: NodeId
    term: int
    txs: tuple[Transaction, ...]
    hash: bytes = field(default=ZERO_HASH)

    CODEC = (
        ("index", U64),
        ("prev_hash", HASH),
        ("manager", HASH),
        ("term", U64),
        ("txs", ListOf(RecordOf(Transaction))),
        ("hash", HASH),
    )

    def header_bytes(self) -> bytes:
        """Canonical bytes of every field except ``hash``."""
        w = Writer()
        for name, f in self.CODEC[:-1]:
            f.write(w, getattr(self, name))
        return w.getvalue()


def hash_block(b: Block) -> bytes:
    """SHA-256 over the canonical encoding of the block without its hash field."""
    return hashlib.sha256(b.header_bytes()).digest()


def seal(index: int, prev_hash: bytes, manager: NodeId, term: int, txs) -> Block:
    b = Block(index, prev_hash, manager, term, tuple(txs))
    return Block(index, prev_hash, manager, term, b.txs, hash_block(b))


def genesis() -> Block:
    return seal(0, ZERO_HASH, ZERO_HASH, 0, ())


def system_id(leader: NodeId, seq: int) -> SystemId:
    return hashlib.sha256(b"system" + encode_fields((HASH, leader), (U64, seq))).digest()


def decode_block(data: bytes) -> Block:
    return decode(Block, data)


__all__ = [
    "Band",
    "Block",
    "CreateSystem",
    "EdgeSystemConfig",
    "Kind",
    "NodeProfile",
    "PaymentRecord",
    "PerformanceReport",
    "RejectedAction",
    "ReputationUpdate",
    "Resources",
    "Settlement",
    "SystemAction",
    "TaskSpec",
    "Transaction",
    "encode",
    "genesis",
    "hash_block",
    "seal",
    "system_id",
]
