"""A node's signing identity: key pair, sequence counter and nonce source."""

from __future__ import annotations

from .identity import GroupParams, KeyPair, node_id, prove_knowledge
from .records import Kind, NodeId, Transaction, signing_bytes


class Account:
    def __init__(self, params: GroupParams, keypair: KeyPair, rng, seq: int = 0) -> None:
        self.params = params
        self.keypair = keypair
        self.rng = rng
        self.seq = seq
        self.id: NodeId = node_id(keypair.pk)

    @classmethod
    def generate(cls, params: GroupParams, rng) -> "Account":
        return cls(params, KeyPair.generate(params, rng), rng)

    @property
    def pk(self) -> int:
        return self.keypair.pk

    def nonce(self) -> int:
        return 1 + self.rng.randbelow(self.params.q - 1)

    def sign(self, kind: Kind, payload) -> Transaction:
        """Build and prove the next transaction from this account."""
        self.seq += 1
        ctx = signing_bytes(kind, self.id, self.seq, payload)
        proof = prove_knowledge(self.params, self.keypair, ctx, self.nonce())
        return Transaction(kind, self.id, self.seq, payload, proof.t, proof.s)

    def __repr__(self) -> str:
        return f"Account({self.id.hex()[:12]}, seq={self.seq})"
