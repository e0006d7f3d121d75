"""Deferred participation for nodes without connectivity.

A disconnected node keeps signing its actions and appends them to a local
queue.  Nothing is checked against global state until reconnection, when the
queue is flushed in order through the current manager.  Actions that went stale
in the meantime still land on-chain, as RejectedAction records.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .codec import U64, RecordOf, decode, encode
from .errors import DecodeError, SequenceGap
from .records import NodeId, Transaction


@dataclass(frozen=True)
class QueuedAction:
    tx: Transaction
    queued_at: int

    CODEC = (("tx", RecordOf(Transaction)), ("queued_at", U64))


class OfflineQueue:
    def __init__(self, node: NodeId, last_seq: int = 0) -> None:
        self.node = node
        self.last_seq = last_seq
        self.items: list[QueuedAction] = []

    def __len__(self) -> int:
        return len(self.items)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OfflineQueue):
            return NotImplemented
        return self.node == other.node and self.last_seq == other.last_seq and self.items == other.items

    def push(self, tx: Transaction, queued_at: int) -> "OfflineQueue":
        if tx.actor != self.node:
            raise ValueError("a queue only holds its own node's transactions")
        if tx.seq != self.last_seq + 1:
            raise SequenceGap(f"expected seq {self.last_seq + 1}, got {tx.seq}")
        self.items.append(QueuedAction(tx, queued_at))
        self.last_seq = tx.seq
        return self

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(encode(item).hex() + "\n" for item in self.items))

    @classmethod
    def load(cls, path: str | Path, node: NodeId, last_seq: int = 0) -> "OfflineQueue":
        q = cls(node, last_seq)
        for n, line in enumerate(Path(path).read_text().splitlines()):
            if not line.strip():
                continue
            try:
                item = decode(QueuedAction, bytes.fromhex(line.strip()))
            except ValueError as exc:
                raise DecodeError(f"queue line {n}: {exc}") from None
            q.push(item.tx, item.queued_at)
        return q


def queue_action(queue: OfflineQueue, tx: Transaction, queued_at: int = 0) -> OfflineQueue:
    return queue.push(tx, queued_at)


def flush(queue: OfflineQueue, platform) -> list[Transaction]:
    """Submit every queued action in order; returns each one's on-chain disposition.

    An authentication failure stops the flush at the failing action, which stays
    queued together with everything after it.
    """
    out = []
    while queue.items:
        # AuthFailed (and any other unrecordable refusal) propagates before the pop
        out.append(platform.submit(queue.items[0].tx))
        queue.items.pop(0)
    return out
