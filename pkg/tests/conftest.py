from __future__ import annotations

import pytest

from oec.account import Account
from oec.identity import KeyPair, Security, generate_params
from oec.ledger import Ledger, Platform
from oec.records import (
    CreateSystem,
    EdgeSystemConfig,
    Kind,
    NodeProfile,
    PerformanceReport,
    Resources,
    SystemAction,
    TaskSpec,
    system_id,
)
from oec.rng import Xoshiro256StarStar

TASK = TaskSpec(ref_data=100.0, ref_time=10.0, req_p=4.0, req_s=8.0, req_c=100.0)
FULL = Resources(4.0, 8.0, 100.0)  # g = 1 against TASK
HALF = Resources(2.0, 8.0, 100.0)  # g = 0.5
WEAK = Resources(0.5, 8.0, 100.0)  # g = 0.125, below the default g_min


def config(**kw) -> EdgeSystemConfig:
    base = dict(target_capacity=2.0, rate=10.0, task=TASK, settlement_period=1)
    base.update(kw)
    return EdgeSystemConfig(**base)


class World:
    """A live platform plus named accounts, for driving scenarios by hand."""

    def __init__(self, security=Security.STANDARD, seed=1, term_length=16):
        self.params = generate_params(security)
        self.rng = Xoshiro256StarStar(seed)
        self.ledger = Ledger(self.params, term_length)
        self.accounts: dict[str, Account] = {}
        self.platform = Platform(self.ledger, {})
        self._sk = 0

    def account(self, name: str) -> Account:
        if name not in self.accounts:
            # toy secrets are handed out in order so ids never clash in an 11-element group
            self._sk += 1
            sk = self._sk if self.params.q < 1000 else 1 + self.rng.randbelow(self.params.q - 1)
            self.accounts[name] = Account(self.params, KeyPair.from_secret(self.params, sk), self.rng)
        return self.accounts[name]

    def id(self, name: str) -> bytes:
        return self.accounts[name].id

    def subscribe(self, name: str, resources=FULL, bc_node=False):
        acct = self.account(name)
        if bc_node:
            self.platform.signers[acct.id] = acct
        prof = NodeProfile(acct.id, acct.pk, resources, f"credits:{name}", bc_node=bc_node)
        return self.platform.submit(acct.sign(Kind.SUBSCRIBE, prof))

    def create(self, leader: str, cfg=None) -> bytes:
        acct = self.accounts[leader]
        tx = self.platform.submit(acct.sign(Kind.CREATE_SYSTEM, CreateSystem(cfg or config())))
        return system_id(acct.id, tx.seq)

    def join(self, name: str, sid: bytes):
        return self.platform.submit(self.accounts[name].sign(Kind.JOIN, SystemAction(sid)))

    def leave(self, name: str, sid: bytes):
        return self.platform.submit(self.accounts[name].sign(Kind.LEAVE, SystemAction(sid)))

    def report(self, leader: str, node: str, sid: bytes, d: float, t: float = 10.0, epoch: int | None = None):
        e = self.platform.epoch if epoch is None else epoch
        rep = PerformanceReport(self.id(node), sid, e, float(d), float(t))
        return self.platform.submit(self.accounts[leader].sign(Kind.PERFORMANCE_REPORT, rep))

    def commit(self):
        return self.platform.commit()

    @property
    def state(self):
        return self.platform.state


@pytest.fixture
def world():
    return World()


@pytest.fixture
def toy_world():
    return World(Security.TOY)


@pytest.fixture
def toy():
    return generate_params(Security.TOY)


@pytest.fixture
def std():
    return generate_params(Security.STANDARD)


# --- acceptance reporting -------------------------------------------------

ACCEPTANCE: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
