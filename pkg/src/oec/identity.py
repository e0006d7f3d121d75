"""Group parameters, key pairs and the Schnorr proof of secret-key knowledge.

The proof is made non-interactive with the Fiat-Shamir transform: the verifier's
challenge is a hash of the commitment, the public key and a caller-supplied
context. Binding the context is what turns the proof into a signature over a
transaction.

Two parameter sets are provided:

* ``TOY``: p=23, q=11, g=2. Small enough to check by hand.
* ``STANDARD``: the 2048-bit MODP group with a 256-bit prime-order subgroup from
  RFC 5114, section 2.3. That group is not a safe-prime group; a safe prime would
  give a 2047-bit subgroup order instead of the 256-bit one the proofs use.
"""

from __future__ import annotations

import hashlib
from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .codec import BIGINT, BYTES, HASH, U64, encode_fields
from .errors import BadNonce, MalformedProof, NoPeers

try:  # gmpy2 is much faster for 2048-bit arithmetic; plain ints work too
    import gmpy2
except ImportError:  # pragma: no cover
    gmpy2 = None


class Security(str, Enum):
    TOY = "toy"
    STANDARD = "standard"


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int

    def validate(self) -> None:
        if (self.p - 1) % self.q:
            raise ValueError("q does not divide p-1")
        if self.g in (0, 1) or not 1 < self.g < self.p:
            raise ValueError("generator out of range")
        if pow(self.g, self.q, self.p) != 1:
            raise ValueError("g does not generate the order-q subgroup")

    def is_element(self, x: int) -> bool:
        """Membership in the order-q subgroup (costs one exponentiation, then cached)."""
        return 1 <= x < self.p and _in_subgroup(self.p, self.q, x)

    @property
    def security(self) -> Security:
        return Security.TOY if self == TOY_PARAMS else Security.STANDARD


@lru_cache(maxsize=65536)
def _in_subgroup(p: int, q: int, x: int) -> bool:
    if gmpy2 is not None:
        return gmpy2.powmod(x, q, p) == 1
    return pow(x, q, p) == 1


TOY_PARAMS = GroupParams(p=23, q=11, g=2)

# RFC 5114 section 2.3 "2048-bit MODP Group with 256-bit Prime Order Subgroup"
_RFC5114_P = int(
    "87A8E61DB4B6663CFFBBD19C651959998CEEF608660DD0F25D2CEED4435E3B00"
    "E00DF8F1D61957D4FAF7DF4561B2AA3016C3D91134096FAA3BF4296D830E9A7C"
    "209E0C6497517ABD5A8A9D306BCF67ED91F9E6725B4758C022E0B1EF4275BF7B"
    "6C5BFC11D45F9088B941F54EB1E59BB8BC39A0BF12307F5C4FDB70C581B23F76"
    "B63ACAE1CAA6B7902D52526735488A0EF13C6D9A51BFA4AB3AD8347796524D8E"
    "F6A167B5A41825D967E144E5140564251CCACB83E6B486F6B3CA3F7971506026"
    "C0B857F689962856DED4010ABD0BE621C3A3960A54E710C375F26375D7014103"
    "A4B54330C198AF126116D2276E11715F693877FAD7EF09CADB094AE91E1A1597",
    16,
)
_RFC5114_G = int(
    "3FB32C9B73134D0B2E77506660EDBD484CA7B18F21EF205407F4793A1A0BA125"
    "10DBC15077BE463FFF4FED4AAC0BB555BE3A6C1B0C6B47B1BC3773BF7E8C6F62"
    "901228F8C28CBB18A55AE31341000A650196F931C77A57F2DDF463E5E9EC144B"
    "777DE62AAAB8A8628AC376D282D6ED3864E67982428EBC831D14348F6F2F9193"
    "B5045AF2767164E1DFC967C1FB3F2E55A4BD1BFFE83B9C80D052B985D182EA0A"
    "DB2A3B7313D3FE14C8484B1E052588B9B7D2BBD2DF016199ECD06E1557CD0915"
    "B3353BBB64E0EC377FD028370DF92B52C7891428CDC67EB6184B523D1DB246C3"
    "2F63078490F00EF8D647D148D47954515E2327CFEF98C582664B4C0F6CC41659",
    16,
)
_RFC5114_Q = int("8CF83642A709A097B447997640129DA299B1A47D1EB3750BA308B0FE64F5FBD3", 16)

STANDARD_PARAMS = GroupParams(p=_RFC5114_P, q=_RFC5114_Q, g=_RFC5114_G)


def generate_params(security: Security | str = Security.STANDARD) -> GroupParams:
    security = Security(security)
    return TOY_PARAMS if security is Security.TOY else STANDARD_PARAMS


# --- exponentiation -------------------------------------------------------
#
# Bases that are used repeatedly (g, a manager's or leader's pk) get a fixed-window
# table; each exponentiation is then ~32 modular multiplications instead of ~384.

_WINDOW = 8
_TABLE_AFTER_USES = 32
_MAX_TABLES = 256
_tables: OrderedDict[tuple[int, int], list] = OrderedDict()
_uses: dict[tuple[int, int], int] = {}


def _build_table(base: int, p: int, bits: int) -> list:
    mpz = gmpy2.mpz if gmpy2 is not None else int
    b = mpz(base)
    P = mpz(p)
    rows = []
    for _ in range((bits + _WINDOW - 1) // _WINDOW):
        row = [mpz(1)]
        acc = mpz(1)
        for _ in range((1 << _WINDOW) - 1):
            acc = acc * b % P
            row.append(acc)
        rows.append(row)
        b = acc * b % P
    return rows


def group_exp(params: GroupParams, base: int, e: int) -> int:
    """``base ** e mod p`` for ``0 <= e < q``."""
    p = params.p
    if p.bit_length() <= 64:
        return pow(base, e, p)
    key = (p, base)
    table = _tables.get(key)
    if table is None:
        n = _uses.get(key, 0) + 1
        _uses[key] = n
        if n < _TABLE_AFTER_USES:
            if gmpy2 is not None:
                return int(gmpy2.powmod(base, e, p))
            return pow(base, e, p)
        table = _build_table(base, p, params.q.bit_length())
        _tables[key] = table
        _uses.pop(key, None)
        if len(_tables) > _MAX_TABLES:
            _tables.popitem(last=False)
    else:
        _tables.move_to_end(key)
    acc = table[0][0]
    P = table[0][0].__class__(p)
    # one byte of the exponent per table row (the window is 8 bits)
    for row, d in zip(table, e.to_bytes(len(table), "little")):
        if d:
            acc = acc * row[d] % P
    return int(acc)


# --- keys and proofs ------------------------------------------------------


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: int

    @classmethod
    def from_secret(cls, params: GroupParams, sk: int) -> "KeyPair":
        if not 1 <= sk < params.q:
            raise ValueError("secret key must lie in [1, q-1]")
        return cls(sk, group_exp(params, params.g, sk))

    @classmethod
    def generate(cls, params: GroupParams, rng) -> "KeyPair":
        return cls.from_secret(params, 1 + rng.randbelow(params.q - 1))


@dataclass(frozen=True)
class ZkProof:
    t: int
    s: int
    context: bytes


def node_id(pk: int) -> bytes:
    """Self-certifying identifier: SHA-256 of the encoded public key."""
    return hashlib.sha256(encode_fields((BIGINT, pk))).digest()


def challenge(params: GroupParams, t: int, pk: int, context: bytes) -> int:
    digest = hashlib.sha256(encode_fields((BIGINT, t), (BIGINT, pk), (BYTES, context))).digest()
    return int.from_bytes(digest, "big") % params.q


def prove_knowledge(
    params: GroupParams,
    kp: KeyPair,
    context: bytes,
    nonce: int,
    *,
    challenge_override: int | None = None,
) -> ZkProof:
    """Schnorr proof that the prover knows ``kp.sk``.

    ``challenge_override`` replaces the hashed challenge; it exists only so that
    hand-computed vectors can be reproduced in tests.
    """
    if not 1 <= nonce < params.q:
        raise BadNonce(f"nonce must lie in [1, q-1], got {nonce}")
    t = group_exp(params, params.g, nonce)
    c = challenge(params, t, kp.pk, context) if challenge_override is None else challenge_override
    s = (nonce + c * kp.sk) % params.q
    return ZkProof(t, s, context)


_VERIFY_MEMO_MAX = 200_000
_verify_memo: OrderedDict[tuple, bool] = OrderedDict()


def _memo_key(params: GroupParams, pk: int, proof: ZkProof) -> tuple:
    return (params.p, params.g, pk, proof.t, proof.s, proof.context)


def verify_proof(
    params: GroupParams,
    pk: int,
    proof: ZkProof,
    *,
    challenge_override: int | None = None,
) -> bool:
    """Check ``g^s == t * pk^c (mod p)``.

    Raises MalformedProof when an element lies outside its range.
    """
    p, q = params.p, params.q
    if not (1 <= proof.t < p and 0 <= proof.s < q and 1 <= pk < p):
        raise MalformedProof("proof or key element out of range")
    if challenge_override is not None:
        c = challenge_override
        return pow(params.g, proof.s, p) == proof.t * pow(pk, c, p) % p
    # verification is a pure function of its inputs, so results are memoised
    key = _memo_key(params, pk, proof)
    hit = _verify_memo.get(key)
    if hit is not None:
        return hit
    c = challenge(params, proof.t, pk, proof.context)
    # g^s * pk^(q-c) == t  <=>  g^s == t * pk^c
    ok = group_exp(params, params.g, proof.s) * group_exp(params, pk, (q - c) % q) % p == proof.t
    _verify_memo[key] = ok
    if len(_verify_memo) > _VERIFY_MEMO_MAX:
        _verify_memo.popitem(last=False)
    return ok


# --- manager selection ----------------------------------------------------


def manager_index(term_index: int, anchor_hash: bytes, n_peers: int) -> int:
    """Position of the term's manager among the sorted BC peers."""
    if n_peers <= 0:
        raise NoPeers("no BC peers to select a manager from")
    digest = hashlib.sha256(encode_fields((U64, term_index), (HASH, anchor_hash))).digest()
    return int.from_bytes(digest[:8], "big") % n_peers


def select_manager(ledger, term_index: int) -> bytes:
    """Manager of ``term_index`` as determined by the ledger prefix up to the term's anchor."""
    return ledger.manager_for_term(term_index)
