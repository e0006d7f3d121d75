"""Exception types shared across the platform."""

from __future__ import annotations

from enum import IntEnum


class Reason(IntEnum):
    """Why a transaction was refused. Tag values are part of the wire format."""

    AUTH_FAILED = 1
    DUPLICATE_IDENTITY = 2
    UNKNOWN_NODE = 3
    UNKNOWN_SYSTEM = 4
    INVALID_CONFIG = 5
    ALREADY_MEMBER = 6
    LOW_REPUTATION = 7
    LOW_CAPACITY = 8
    SYSTEM_FULL = 9
    NOT_MEMBER = 10
    LEADER_MUST_BREAK = 11
    NOT_LEADER = 12
    SYSTEM_DISSOLVED = 13
    INVALID_REPORT = 14
    DUPLICATE_REPORT = 15
    NOT_REPORTER = 16
    UNSETTLED_REPORTS = 17
    SETTLEMENT_MISMATCH = 18
    NOTHING_TO_SETTLE = 19
    REPUTATION_MISMATCH = 20
    SEQUENCE_REPLAY = 21
    NOT_MANAGER = 22
    MALFORMED = 23
    LEADER_CANNOT_JOIN = 24
    REJECTION_MISMATCH = 25


class OECError(Exception):
    """Base class for platform errors."""


class InvalidTransaction(OECError):
    def __init__(self, reason: Reason, tx=None, detail: str = "") -> None:
        self.reason = reason
        self.tx = tx
        self.detail = detail
        msg = reason.name
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class AuthFailed(InvalidTransaction):
    def __init__(self, tx=None, detail: str = "") -> None:
        super().__init__(Reason.AUTH_FAILED, tx, detail)


class DuplicateIdentity(InvalidTransaction):
    def __init__(self, tx=None, detail: str = "") -> None:
        super().__init__(Reason.DUPLICATE_IDENTITY, tx, detail)


class NotManager(OECError):
    pass


class NoPeers(OECError):
    pass


class CorruptLedger(OECError):
    pass


class DecodeError(CorruptLedger):
    pass


class BadNonce(OECError):
    pass


class MalformedProof(OECError):
    pass


class InvalidReport(OECError):
    pass


class DegenerateAdvertisement(OECError):
    pass


class NothingToSettle(OECError):
    pass


class SequenceGap(OECError):
    pass


class InvalidScenario(OECError):
    pass
