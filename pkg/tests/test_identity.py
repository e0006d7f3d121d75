import hashlib

import pytest

from oec.codec import BIGINT, BYTES, HASH, U64, encode_fields
from oec.errors import AuthFailed, BadNonce, DuplicateIdentity, MalformedProof, NoPeers
from oec.identity import (
    STANDARD_PARAMS,
    KeyPair,
    Security,
    ZkProof,
    challenge,
    generate_params,
    manager_index,
    node_id,
    prove_knowledge,
    select_manager,
    verify_proof,
)
from oec.records import Kind, NodeProfile
from oec.rng import Xoshiro256StarStar

from conftest import FULL, World


def test_toy_group_by_hand(toy):
    assert (toy.p, toy.q, toy.g) == (23, 11, 2)
    assert 2**11 == 89 * 23 + 1
    toy.validate()


def test_standard_group(std):
    std.validate()
    assert std.p.bit_length() == 2048
    assert std.q.bit_length() == 256
    assert (std.p - 1) % std.q == 0
    assert generate_params("standard") == generate_params(Security.STANDARD) == STANDARD_PARAMS


def test_toy_vector_with_stub_challenge(toy):
    kp = KeyPair.from_secret(toy, 7)
    assert kp.pk == 13
    pr = prove_knowledge(toy, kp, b"", 3, challenge_override=5)
    assert (pr.t, pr.s) == (8, 5)
    assert pow(2, 5, 23) == 9 == 8 * pow(13, 5, 23) % 23
    assert pow(13, 5, 23) == 4
    assert verify_proof(toy, 13, pr, challenge_override=5)
    assert not verify_proof(toy, 13, ZkProof(8, 6, b""), challenge_override=5)


def test_challenge_is_hash_of_encoding(std):
    kp = KeyPair.from_secret(std, 12345)
    t = pow(std.g, 99, std.p)
    ctx = b"context"
    raw = encode_fields((BIGINT, t), (BIGINT, kp.pk), (BYTES, ctx))
    assert challenge(std, t, kp.pk, ctx) == int.from_bytes(hashlib.sha256(raw).digest(), "big") % std.q


@pytest.mark.parametrize("security", [Security.TOY, Security.STANDARD])
def test_completeness_and_binding(security):
    params = generate_params(security)
    rng = Xoshiro256StarStar(8)
    for i in range(50):
        kp = KeyPair.generate(params, rng)
        ctx = b"A%d" % i
        pr = prove_knowledge(params, kp, ctx, 1 + rng.randbelow(params.q - 1))
        assert verify_proof(params, kp.pk, pr)
        if security is Security.STANDARD:
            assert not verify_proof(params, kp.pk, ZkProof(pr.t, pr.s, b"B%d" % i))
            other = KeyPair.generate(params, rng)
            assert not verify_proof(params, other.pk, pr)
            assert not verify_proof(params, kp.pk, ZkProof(pr.t, (pr.s + 1) % params.q, ctx))


def test_nonce_and_range_errors(toy):
    kp = KeyPair.from_secret(toy, 7)
    for bad in (0, 11, -1):
        with pytest.raises(BadNonce):
            prove_knowledge(toy, kp, b"", bad)
    with pytest.raises(MalformedProof):
        verify_proof(toy, 13, ZkProof(0, 1, b""))
    with pytest.raises(MalformedProof):
        verify_proof(toy, 13, ZkProof(8, 11, b""))


def test_node_id_is_hash_of_pk():
    assert node_id(13) == hashlib.sha256(b"\x00\x00\x00\x01\x0d").digest()


def test_subscribe_flow(world):
    world.subscribe("a", bc_node=True)
    assert world.id("a") in world.state.profiles
    assert world.state.profiles[world.id("a")].reputation == 0.5
    assert world.state.balances[world.id("a")] == 0
    # resubscription
    acct = world.accounts["a"]
    prof = NodeProfile(acct.id, acct.pk, FULL, "again")
    with pytest.raises(DuplicateIdentity):
        world.platform.submit(acct.sign(Kind.SUBSCRIBE, prof))


def test_invalid_subscription_proof_changes_nothing(world):
    world.subscribe("a", bc_node=True)
    acct = world.account("m")
    prof = NodeProfile(acct.id, acct.pk, FULL, "")
    tx = acct.sign(Kind.SUBSCRIBE, prof)
    from dataclasses import replace

    forged = replace(tx, proof_s=(tx.proof_s + 1) % world.params.q)
    before = world.state.clone()
    with pytest.raises(AuthFailed):
        world.platform.submit(forged)
    assert world.state.profiles == before.profiles
    assert len(world.platform.pending) == 1


def test_manager_selection_formula_by_hand():
    anchor = b"\x42" * 32
    digest = hashlib.sha256(b"\x00\x00\x00\x00\x00\x00\x00\x03" + anchor).digest()
    assert manager_index(3, anchor, 3) == int.from_bytes(digest[:8], "big") % 3
    assert manager_index(9, anchor, 1) == 0
    with pytest.raises(NoPeers):
        manager_index(0, anchor, 0)


def test_manager_sequence_on_a_ledger():
    w = World(term_length=2)
    for n in ("a", "b", "c"):
        w.subscribe(n, bc_node=True)
    w.commit()
    for _ in range(7):
        w.commit()
    peers = sorted(w.id(n) for n in "abc")
    for term in range(1, 4):
        anchor = w.ledger.blocks[term * 2].hash
        digest = hashlib.sha256(encode_fields((U64, term), (HASH, anchor))).digest()
        expected = peers[int.from_bytes(digest[:8], "big") % 3]
        assert select_manager(w.ledger, term) == expected
        assert w.ledger.blocks[term * 2 + 1].manager == expected
    assert select_manager(w.ledger, 0) == w.id("a")  # bootstrap term
    again = type(w.ledger).from_blocks(w.ledger.blocks, w.params, 2)
    assert again.manager_sequence() == w.ledger.manager_sequence()


def test_single_peer_manages_every_term():
    w = World(term_length=1)
    w.subscribe("solo", bc_node=True)
    for _ in range(5):
        w.commit()
    assert {b.manager for b in w.ledger.blocks[1:]} == {w.id("solo")}
