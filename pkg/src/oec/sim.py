"""Seeded discrete-event simulation of node populations on the platform.

One epoch is one block.  Within an epoch the order of events is fixed:

1. subscriptions (epoch 1) and system creation
2. flushes for nodes whose offline window ends this epoch
3. scheduled joins, leaves and breaks
4. performance reports for every member (leader-measured; offline members queue self-reports)
5. periodic settlement for systems whose period ends this epoch
6. the manager commits the block

All randomness (keys, proof nonces) comes from one xoshiro256** stream seeded by
the scenario, so a scenario and seed always give the same ledger bytes.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import lifecycle
from .account import Account
from .errors import AuthFailed, InvalidScenario
from .identity import KeyPair, Security, generate_params, prove_knowledge
from .incentives import report_for
from .ledger import DEFAULT_TERM_LENGTH, Ledger, LedgerState, Platform, replay, verify_chain
from .offline import OfflineQueue, flush
from .records import (
    Band,
    Block,
    EdgeSystemConfig,
    Kind,
    NodeProfile,
    Resources,
    SystemAction,
    TaskSpec,
    Transaction,
    signing_bytes,
    system_id,
)
from .rng import Xoshiro256StarStar


class Behavior(str, Enum):
    HONEST = "honest"
    UNDER_DELIVERER = "under_deliverer"
    CHURNER = "churner"
    FORGER = "forger"


@dataclass(frozen=True)
class BehaviorPolicy:
    kind: Behavior = Behavior.HONEST
    delta: float = 1.0  # delivered fraction of advertised performance (under-deliverers)
    period: int = 0  # epochs between join and leave (churners)

    def __post_init__(self) -> None:
        if self.kind is Behavior.UNDER_DELIVERER and not 0 <= self.delta < 1:
            raise InvalidScenario("under_deliverer needs 0 <= delta < 1")
        if self.kind is Behavior.CHURNER and self.period < 1:
            raise InvalidScenario("churner needs period >= 1")

    @property
    def delivery(self) -> float:
        return self.delta if self.kind is Behavior.UNDER_DELIVERER else 1.0


@dataclass(frozen=True)
class NodeSpec:
    name: str
    resources: Resources
    behavior: BehaviorPolicy = BehaviorPolicy()
    bc_node: bool = False
    system: str | None = None
    join_epoch: int = 1
    leave_epoch: int | None = None
    rejoin_epoch: int | None = None


@dataclass(frozen=True)
class SystemSpec:
    name: str
    leader: str
    config: EdgeSystemConfig
    create_epoch: int = 1
    break_epoch: int | None = None


@dataclass
class Scenario:
    seed: int
    epochs: int
    nodes: list[NodeSpec]
    systems: list[SystemSpec] = field(default_factory=list)
    offline_windows: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    security: Security = Security.STANDARD
    term_length: int = DEFAULT_TERM_LENGTH

    def validate(self) -> None:
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise InvalidScenario("node names must be unique")
        if self.epochs < 1:
            raise InvalidScenario("epochs must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidScenario("seed must be a 64-bit unsigned integer")
        if self.term_length < 1:
            raise InvalidScenario("term_length must be >= 1")
        by_name = {n.name: n for n in self.nodes}
        if not any(n.bc_node and n.behavior.kind is not Behavior.FORGER for n in self.nodes):
            raise InvalidScenario("at least one non-forger node must be a BC node")
        sys_names = [s.name for s in self.systems]
        if len(set(sys_names)) != len(sys_names):
            raise InvalidScenario("system names must be unique")
        for s in self.systems:
            leader = by_name.get(s.leader)
            if leader is None or leader.behavior.kind is Behavior.FORGER:
                raise InvalidScenario(f"system {s.name!r}: leader must be a non-forger node")
            problems = s.config.problems()
            if problems:
                raise InvalidScenario(f"system {s.name!r}: " + "; ".join(problems))
            if s.create_epoch < 1:
                raise InvalidScenario(f"system {s.name!r}: create_epoch must be >= 1")
        for n in self.nodes:
            if n.system is not None and n.system not in sys_names:
                raise InvalidScenario(f"node {n.name!r} targets unknown system {n.system!r}")
            if not n.resources.is_valid():
                raise InvalidScenario(f"node {n.name!r}: resources must be >= 0")
            if n.join_epoch < 1:
                raise InvalidScenario(f"node {n.name!r}: join_epoch must be >= 1")
        for name, windows in self.offline_windows.items():
            if name not in by_name:
                raise InvalidScenario(f"offline window for unknown node {name!r}")
            if by_name[name].bc_node:
                raise InvalidScenario(f"BC node {name!r} cannot go offline: it may be the block manager")
            for start, end in windows:
                if not 1 <= start < end:
                    raise InvalidScenario(f"offline window {start}..{end} for {name!r} is empty or before epoch 1")
        if self.security is Security.TOY:
            q = generate_params(Security.TOY).q
            if len(self.nodes) > q - 1:
                raise InvalidScenario(f"toy group holds at most {q - 1} distinct keys")

    # --- JSON ---

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            nodes = []
            for raw in d["nodes"]:
                count = int(raw.get("count", 1))
                for i in range(count):
                    name = raw["name"] if count == 1 else f"{raw['name']}-{i}"
                    nodes.append(_node_from_dict(raw, name))
            systems = [_system_from_dict(s) for s in d.get("systems", [])]
            windows = {
                k: [(int(a), int(b)) for a, b in v] for k, v in d.get("offline_windows", {}).items()
            }
            sc = cls(
                seed=int(d.get("seed", 0)),
                epochs=int(d["epochs"]),
                nodes=nodes,
                systems=systems,
                offline_windows=windows,
                security=Security(d.get("security", "standard")),
                term_length=int(d.get("term_length", DEFAULT_TERM_LENGTH)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidScenario(f"bad scenario: {exc!r}") from None
        sc.validate()
        return sc

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise InvalidScenario(f"cannot read scenario: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InvalidScenario(f"scenario is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidScenario("scenario must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "epochs": self.epochs,
            "security": self.security.value,
            "term_length": self.term_length,
            "nodes": [_node_to_dict(n) for n in self.nodes],
            "systems": [_system_to_dict(s) for s in self.systems],
            "offline_windows": {k: [list(w) for w in v] for k, v in self.offline_windows.items()},
        }


def _resources_from_dict(r: dict) -> Resources:
    bands = tuple(Band(int(b["band_id"]), float(b["bandwidth_mhz"])) for b in r.get("spectrum", []))
    return Resources(float(r["processing"]), float(r["storage"]), float(r["communication"]), bands)


def _node_from_dict(raw: dict, name: str) -> NodeSpec:
    b = raw.get("behavior", {"kind": "honest"})
    if isinstance(b, str):
        b = {"kind": b}
    policy = BehaviorPolicy(Behavior(b["kind"]), float(b.get("delta", 1.0)), int(b.get("period", 0)))
    opt = lambda k: None if raw.get(k) is None else int(raw[k])  # noqa: E731
    return NodeSpec(
        name=name,
        resources=_resources_from_dict(raw["resources"]),
        behavior=policy,
        bc_node=bool(raw.get("bc_node", False)),
        system=raw.get("system"),
        join_epoch=int(raw.get("join_epoch", 1)),
        leave_epoch=opt("leave_epoch"),
        rejoin_epoch=opt("rejoin_epoch"),
    )


def _system_from_dict(s: dict) -> SystemSpec:
    t = s["task"]
    task = TaskSpec(float(t["ref_data"]), float(t["ref_time"]), float(t["req_p"]), float(t["req_s"]), float(t["req_c"]))
    cfg = EdgeSystemConfig(
        target_capacity=float(s["target_capacity"]),
        rate=float(s["rate"]),
        task=task,
        settlement_period=int(s.get("settlement_period", 1)),
        min_reputation=float(s.get("min_reputation", 0.3)),
        min_expected_perf=float(s.get("min_expected_perf", 0.25)),
        alpha=float(s.get("alpha", 0.2)),
    )
    brk = s.get("break_epoch")
    return SystemSpec(s["name"], s["leader"], cfg, int(s.get("create_epoch", 1)), None if brk is None else int(brk))


def _node_to_dict(n: NodeSpec) -> dict:
    r = n.resources
    return {
        "name": n.name,
        "bc_node": n.bc_node,
        "resources": {
            "processing": r.processing,
            "storage": r.storage,
            "communication": r.communication,
            "spectrum": [{"band_id": b.band_id, "bandwidth_mhz": b.bandwidth_mhz} for b in r.spectrum],
        },
        "behavior": {"kind": n.behavior.kind.value, "delta": n.behavior.delta, "period": n.behavior.period},
        "system": n.system,
        "join_epoch": n.join_epoch,
        "leave_epoch": n.leave_epoch,
        "rejoin_epoch": n.rejoin_epoch,
    }


def _system_to_dict(s: SystemSpec) -> dict:
    c, t = s.config, s.config.task
    return {
        "name": s.name,
        "leader": s.leader,
        "target_capacity": c.target_capacity,
        "rate": c.rate,
        "settlement_period": c.settlement_period,
        "min_reputation": c.min_reputation,
        "min_expected_perf": c.min_expected_perf,
        "alpha": c.alpha,
        "task": {"ref_data": t.ref_data, "ref_time": t.ref_time, "req_p": t.req_p, "req_s": t.req_s, "req_c": t.req_c},
        "create_epoch": s.create_epoch,
        "break_epoch": s.break_epoch,
    }


# --- metrics --------------------------------------------------------------


@dataclass
class Metrics:
    payments: list[tuple] = field(default_factory=list)  # (epoch, system, payer, payee, f, g, z_micro)
    reputations: list[tuple] = field(default_factory=list)  # (epoch, node, reputation)
    rejections: list[tuple] = field(default_factory=list)  # (epoch, actor, action, reason)
    utilization: list[tuple] = field(default_factory=list)  # (epoch, system, sum_f, sum_g, ratio)
    spectrum: list[tuple] = field(default_factory=list)  # (epoch, offered_mhz, committed_mhz)
    earned: dict[bytes, int] = field(default_factory=dict)
    balances: dict[bytes, int] = field(default_factory=dict)
    labels: dict[bytes, str] = field(default_factory=dict)
    chain_ok: bool = True
    bad_index: int | None = None

    @property
    def rejection_counts(self) -> Counter:
        return Counter(r[3] for r in self.rejections)

    @property
    def insolvent(self) -> list[bytes]:
        return sorted(k for k, v in self.balances.items() if v < 0)

    def reputation_curve(self, node: bytes) -> list[tuple[int, float]]:
        return [(e, r) for e, n, r in self.reputations if n == node]


class MetricsCollector:
    """Accumulates metrics block by block from (block, state after block)."""

    def __init__(self) -> None:
        self.m = Metrics()

    def observe(self, block: Block, state: LedgerState) -> None:
        if block.index == 0:
            return
        m = self.m
        for tx in block.txs:
            if tx.kind is Kind.SETTLEMENT:
                for r in tx.payload.records:
                    m.payments.append((r.epoch_from, r.system, r.payer, r.payee, r.f_value, r.g_value, r.amount))
            elif tx.kind is Kind.REJECTED_ACTION:
                inner = tx.payload.inner
                m.rejections.append((block.index, inner.actor, inner.kind.name, tx.payload.reason.name))
        offered = []
        committed = []
        for nid in sorted(state.profiles):
            prof = state.profiles[nid]
            m.reputations.append((block.index, nid, prof.reputation))
            bw = prof.resources.bandwidth_mhz
            offered.append(bw)
            if state.memberships.get(nid) is not None:
                committed.append(bw)
        m.spectrum.append((block.index, math.fsum(offered), math.fsum(committed)))
        self._state = state

    def finish(self) -> Metrics:
        m = self.m
        state = getattr(self, "_state", None)
        sums: dict[tuple, list] = defaultdict(lambda: [[], []])
        earned: dict[bytes, int] = defaultdict(int)
        for epoch, sid, _payer, payee, f, g, z in m.payments:
            sums[(epoch, sid)][0].append(f)
            sums[(epoch, sid)][1].append(g)
            earned[payee] += z
        m.utilization = sorted(
            (e, sid, math.fsum(fs), math.fsum(gs), math.fsum(fs) / math.fsum(gs)) for (e, sid), (fs, gs) in sums.items()
        )
        m.earned = dict(sorted(earned.items()))
        if state is not None:
            m.balances = dict(sorted(state.balances.items()))
            m.labels = {k: state.profiles[k].payment_detail for k in sorted(state.profiles)}
        return m


def compute_metrics(blocks, params, term_length: int = DEFAULT_TERM_LENGTH) -> Metrics:
    """Metrics derived from the chain alone. Raises CorruptLedger if it does not verify."""
    from .errors import CorruptLedger

    blocks = list(blocks)
    verdict = verify_chain(blocks, params, term_length)
    if not verdict:
        raise CorruptLedger(f"chain fails verification at block {verdict.bad_index}: {verdict.detail}")
    col = MetricsCollector()
    replay(blocks, params, term_length, on_block=col.observe)
    return col.finish()


# --- simulation -----------------------------------------------------------


@dataclass
class RunResult:
    ledger: Ledger
    metrics: Metrics
    node_ids: dict[str, bytes]
    system_ids: dict[str, bytes]
    forgery_attempts: int = 0
    forgeries_accepted: int = 0

    @property
    def state(self) -> LedgerState:
        return self.ledger.state


class _Agent:
    def __init__(self, spec: NodeSpec, account: Account) -> None:
        self.spec = spec
        self.account = account
        self.queue: OfflineQueue | None = None
        self.believed_system: bytes | None = None  # local view while offline


def _schedule(spec: NodeSpec, epoch: int) -> str | None:
    """'join', 'leave' or None for this node at this epoch."""
    b = spec.behavior
    if spec.system is None or b.kind is Behavior.FORGER:
        return None
    if b.kind is Behavior.CHURNER:
        if epoch < spec.join_epoch:
            return None
        k, r = divmod(epoch - spec.join_epoch, b.period)
        if r:
            return None
        return "join" if k % 2 == 0 else "leave"
    if epoch == spec.join_epoch or epoch == spec.rejoin_epoch:
        return "join"
    if epoch == spec.leave_epoch:
        return "leave"
    return None


def _offline(sc: Scenario, name: str, epoch: int) -> bool:
    return any(a <= epoch < b for a, b in sc.offline_windows.get(name, ()))


def _reconnects(sc: Scenario, name: str, epoch: int) -> bool:
    return any(b == epoch for _a, b in sc.offline_windows.get(name, ()))


def _delivery(task: TaskSpec, g: float, delivery: float) -> tuple[float, float]:
    """(data processed, time taken) that scores f = delivery * g."""
    return delivery * g * task.ref_data, task.ref_time


def run_scenario(sc: Scenario, seed: int | None = None) -> RunResult:
    sc.validate()
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise InvalidScenario("seed must be a 64-bit unsigned integer")
        sc = Scenario(seed, sc.epochs, sc.nodes, sc.systems, sc.offline_windows, sc.security, sc.term_length)
    params = generate_params(sc.security)
    rng = Xoshiro256StarStar(sc.seed)

    # keys: distinct secrets so ids never collide, even in the toy group
    agents: dict[str, _Agent] = {}
    used = set()
    for spec in sc.nodes:
        while True:
            sk = 1 + rng.randbelow(params.q - 1)
            if sk not in used:
                used.add(sk)
                break
        agents[spec.name] = _Agent(spec, Account(params, KeyPair.from_secret(params, sk), rng))

    ledger = Ledger(params, sc.term_length)
    signers = {a.account.id: a.account for a in agents.values() if a.spec.bc_node}
    platform = Platform(ledger, signers)
    collector = MetricsCollector()
    system_ids: dict[str, bytes] = {}
    node_ids = {name: a.account.id for name, a in agents.items()}
    forgery_attempts = forgeries_accepted = 0

    # BC nodes subscribe first so the first one can bootstrap the chain
    order = sorted(sc.nodes, key=lambda n: not n.bc_node)

    for epoch in range(1, sc.epochs + 1):
        if epoch == 1:
            for spec in order:
                agent = agents[spec.name]
                acct = agent.account
                profile = NodeProfile(acct.id, acct.pk, spec.resources, f"credits:{spec.name}", bc_node=spec.bc_node)
                if spec.behavior.kind is Behavior.FORGER:
                    forgery_attempts += 1
                    if _forge_subscription(platform, acct, profile, rng):
                        forgeries_accepted += 1
                    continue
                platform.submit(acct.sign(Kind.SUBSCRIBE, profile))
        for s in sc.systems:
            if s.create_epoch == epoch:
                leader = agents[s.leader].account
                tx = lifecycle.create_system(platform.state, leader, s.config)
                platform.submit(tx)
                system_ids[s.name] = system_id(leader.id, tx.seq)

        for spec in sc.nodes:
            agent = agents[spec.name]
            if agent.queue is not None and _reconnects(sc, spec.name, epoch):
                flush(agent.queue, platform)
                agent.queue = None

        for spec in sc.nodes:
            agent = agents[spec.name]
            if agent.queue is None and _offline(sc, spec.name, epoch):
                agent.queue = OfflineQueue(agent.account.id, agent.account.seq)
                agent.believed_system = platform.state.memberships.get(agent.account.id)

        for spec in sc.nodes:
            action = _schedule(spec, epoch)
            if action is None:
                continue
            agent = agents[spec.name]
            sid = system_ids.get(spec.system)
            if sid is None:
                continue
            if _offline(sc, spec.name, epoch):
                _queue_action(agent, action, sid, epoch)
                continue
            _online_action(platform, agent, action, sid)

        for s in sc.systems:
            if s.break_epoch == epoch and s.name in system_ids:
                sid = system_ids[s.name]
                if platform.state.systems[sid].active:
                    platform.submit(agents[s.leader].account.sign(Kind.BREAK, SystemAction(sid)))

        _reports(sc, platform, agents, system_ids, epoch)
        platform.settle_due()
        block = platform.commit()
        collector.observe(block, ledger.state)

    verdict = ledger.verify()
    metrics = collector.finish()
    metrics.chain_ok = verdict.ok
    metrics.bad_index = verdict.bad_index
    return RunResult(ledger, metrics, node_ids, system_ids, forgery_attempts, forgeries_accepted)


def _forge_subscription(platform: Platform, acct: Account, profile: NodeProfile, rng) -> bool:
    """Subscribe with a proof made from the wrong secret. True if it was accepted."""
    params = acct.params
    wrong = KeyPair(1 + (acct.keypair.sk + 1 + rng.randbelow(params.q - 2)) % (params.q - 1), acct.pk)
    acct.seq += 1
    ctx = signing_bytes(Kind.SUBSCRIBE, acct.id, acct.seq, profile)
    proof = prove_knowledge(params, wrong, ctx, acct.nonce())
    try:
        platform.submit(Transaction(Kind.SUBSCRIBE, acct.id, acct.seq, profile, proof.t, proof.s))
    except AuthFailed:
        return False
    return True


def _online_action(platform: Platform, agent: _Agent, action: str, sid: bytes) -> None:
    acct = agent.account
    state = platform.state
    if action == "join":
        if state.memberships.get(acct.id) == sid:
            return
        res = lifecycle.join(state, acct, sid)
        platform.submit(res.tx if isinstance(res, lifecycle.Rejection) else res)
    elif state.memberships.get(acct.id) == sid:
        # the platform settles outstanding reports before the Leave
        platform.submit(acct.sign(Kind.LEAVE, SystemAction(sid)))


def _queue_action(agent: _Agent, action: str, sid: bytes, epoch: int) -> None:
    acct = agent.account
    if action == "join":
        if agent.believed_system is not None:
            return
        agent.queue.push(acct.sign(Kind.JOIN, SystemAction(sid)), epoch)
        agent.believed_system = sid
    elif agent.believed_system == sid:
        agent.queue.push(acct.sign(Kind.LEAVE, SystemAction(sid)), epoch)
        agent.believed_system = None


def _reports(sc: Scenario, platform: Platform, agents: dict, system_ids: dict, epoch: int) -> None:
    state = platform.state
    by_id = {a.account.id: a for a in agents.values()}
    for s in sc.systems:
        sid = system_ids.get(s.name)
        if sid is None:
            continue
        system = state.systems[sid]
        if not system.active:
            continue
        leader = agents[s.leader].account
        for nid in sorted(system.members):
            agent = by_id[nid]
            if _offline(sc, agent.spec.name, epoch):
                continue
            d, t = _delivery(system.config.task, system.members[nid].g_advertised, agent.spec.behavior.delivery)
            platform.submit(leader.sign(Kind.PERFORMANCE_REPORT, report_for(nid, sid, epoch, d, t)))
    # offline members record their own work locally
    for spec in sc.nodes:
        agent = agents[spec.name]
        if agent.queue is None or agent.believed_system is None:
            continue
        system = state.systems.get(agent.believed_system)
        if system is None:
            continue
        g = lifecycle.node_g(state, agent.account.id, system.config)
        d, t = _delivery(system.config.task, g, spec.behavior.delivery)
        report = report_for(agent.account.id, system.id, epoch, d, t)
        agent.queue.push(agent.account.sign(Kind.PERFORMANCE_REPORT, report), epoch)


# --- invariants -----------------------------------------------------------


def membership_exclusive(state: LedgerState) -> bool:
    """Every node belongs to at most one active system, and the two indexes agree."""
    seen = set()
    for system in state.systems.values():
        if system.members and not system.active:
            return False
        for m in system.members:
            if m in seen or state.memberships.get(m) != system.id:
                return False
            seen.add(m)
    return all(sid is None or m in seen for m, sid in state.memberships.items())


# --- random scenarios -----------------------------------------------------

_STD_TASK = TaskSpec(ref_data=100.0, ref_time=10.0, req_p=4.0, req_s=8.0, req_c=100.0)


def random_scenario(
    seed: int,
    max_nodes: int = 50,
    max_epochs: int = 200,
    security: Security = Security.STANDARD,
    work_budget: int = 1500,
) -> Scenario:
    """A varied but valid scenario drawn from ``seed``."""
    rng = Xoshiro256StarStar(seed ^ 0x5CE7A210)
    n_nodes = rng.randint(3, max_nodes)
    # cap nodes x epochs so a batch of scenarios stays quick to run
    epochs = rng.randint(1, max(1, min(max_epochs, work_budget // n_nodes)))
    n_systems = rng.randint(1, min(4, max(1, n_nodes // 3)))
    nodes = []
    leaders = list(range(n_systems))
    systems = []
    for i in range(n_systems):
        systems.append(
            SystemSpec(
                name=f"sys{i}",
                leader=f"n{leaders[i]}",
                config=EdgeSystemConfig(
                    target_capacity=rng.choice([0.5, 1.0, 2.0, 3.0, 5.0]),
                    rate=rng.choice([1.0, 2.5, 10.0, 33.3, 100.0]),
                    task=_STD_TASK,
                    settlement_period=rng.randint(1, 5),
                    alpha=rng.choice([0.1, 0.2, 0.5]),
                ),
                create_epoch=rng.randint(1, 3),
                break_epoch=rng.randint(2, epochs) if rng.random() < 0.2 and epochs >= 2 else None,
            )
        )
    n_bc = rng.randint(1, min(5, n_nodes))
    windows: dict[str, list[tuple[int, int]]] = {}
    for i in range(n_nodes):
        name = f"n{i}"
        res = Resources(
            rng.choice([0.5, 1.0, 2.0, 4.0, 8.0]),
            rng.choice([4.0, 8.0, 16.0]),
            rng.choice([50.0, 100.0, 200.0]),
            tuple(Band(b, rng.choice([5.0, 10.0, 20.0])) for b in range(rng.randint(0, 2))),
        )
        is_leader = i < n_systems
        roll = rng.random()
        if is_leader or roll < 0.45:
            policy = BehaviorPolicy()
        elif roll < 0.7:
            policy = BehaviorPolicy(Behavior.UNDER_DELIVERER, delta=rng.choice([0.0, 0.2, 0.5, 0.8]))
        elif roll < 0.9:
            policy = BehaviorPolicy(Behavior.CHURNER, period=rng.randint(1, 10))
        else:
            policy = BehaviorPolicy(Behavior.FORGER)
        forger = policy.kind is Behavior.FORGER
        join = rng.randint(1, max(1, epochs // 2))
        leave = rng.randint(join + 1, epochs + 1) if rng.random() < 0.3 else None
        rejoin = leave + rng.randint(1, 5) if leave is not None and rng.random() < 0.5 else None
        nodes.append(
            NodeSpec(
                name=name,
                resources=res,
                behavior=policy,
                bc_node=(i < n_bc) and not forger,
                system=None if is_leader else f"sys{rng.randbelow(n_systems)}",
                join_epoch=join,
                leave_epoch=leave,
                rejoin_epoch=rejoin,
            )
        )
        if not is_leader and not forger and i >= n_bc and epochs >= 3 and rng.random() < 0.1:
            a = rng.randint(1, epochs - 1)
            windows[name] = [(a, rng.randint(a + 1, min(epochs, a + 8)))]
    sc = Scenario(seed & (2**64 - 1), epochs, nodes, systems, windows, security)
    sc.validate()
    return sc
