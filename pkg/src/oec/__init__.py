"""Permissioned ledger, identity proofs and incentives for open edge computing."""

from .errors import AuthFailed, CorruptLedger, InvalidScenario, InvalidTransaction, Reason
from .identity import KeyPair, Security, ZkProof, generate_params, node_id, prove_knowledge, verify_proof
from .incentives import compute_payment, compute_performance, expected_performance, update_reputation
from .ledger import Ledger, LedgerState, Platform, replay, verify_chain
from .offline import OfflineQueue, flush, queue_action
from .records import Block, EdgeSystemConfig, Kind, NodeProfile, Resources, TaskSpec, Transaction
from .sim import Scenario, compute_metrics, random_scenario, run_scenario

__all__ = [
    "AuthFailed", "CorruptLedger", "InvalidScenario", "InvalidTransaction", "Reason",
    "KeyPair", "Security", "ZkProof", "generate_params", "node_id", "prove_knowledge", "verify_proof",
    "compute_payment", "compute_performance", "expected_performance", "update_reputation",
    "Ledger", "LedgerState", "Platform", "replay", "verify_chain",
    "OfflineQueue", "flush", "queue_action",
    "Block", "EdgeSystemConfig", "Kind", "NodeProfile", "Resources", "TaskSpec", "Transaction",
    "Scenario", "compute_metrics", "random_scenario", "run_scenario",
]

__version__ = "0.1.0"
