"""Command-line entry point: ``oec run | verify | report | vectors``.

Every command ends with a machine-readable line on stdout::

    RESULT ok|fail <tip-hash-hex>
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

from .codec import BIGINT, encode, encode_fields
from .errors import CorruptLedger, InvalidScenario
from .identity import KeyPair, Security, challenge, generate_params, node_id, prove_knowledge, verify_proof
from .ledger import DEFAULT_TERM_LENGTH, parse_lines, verify_chain
from .records import Kind, genesis, system_id
from .report import write_csvs, write_figures
from .rng import Xoshiro256StarStar
from .sim import Scenario, compute_metrics, membership_exclusive, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2, 3


class InvariantViolation(Exception):
    pass


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _result(ok: bool, tip: bytes | None) -> None:
    print(f"RESULT {'ok' if ok else 'fail'} {tip.hex() if tip else '-'}")


def _check_run(result) -> None:
    ledger = result.ledger
    if not result.metrics.chain_ok:
        raise InvariantViolation(f"own chain fails verification at block {result.metrics.bad_index}")
    state = ledger.replay()
    if state.balances != ledger.state.balances or state.profiles != ledger.state.profiles:
        raise InvariantViolation("replayed state differs from live state")
    if not membership_exclusive(ledger.state):
        raise InvariantViolation("a node belongs to more than one system")
    if result.forgeries_accepted:
        raise InvariantViolation("a forged subscription was accepted")
    for block in ledger.blocks:
        for tx in block.txs:
            if tx.kind is Kind.SETTLEMENT and tx.payload.debit != sum(r.amount for r in tx.payload.records):
                raise InvariantViolation(f"settlement in block {block.index} does not balance")
    if sum(state.balances.values()) != 0:
        raise InvariantViolation("credits were created or destroyed")


def cmd_run(args) -> int:
    try:
        sc = Scenario.load(args.scenario)
        if args.security:
            sc.security = Security(args.security)
        result = run_scenario(sc, seed=args.seed)
    except InvalidScenario as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        _check_run(result)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        _result(False, result.ledger.tip.hash)
        return EXIT_INVARIANT
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ledger = result.ledger
    ledger.export(out / "ledger.l1")
    write_csvs(result.metrics, out, ledger.tip.hash, ledger.height)
    if not args.no_figures:
        write_figures(result.metrics, out)
    _say(args, f"{ledger.height} blocks, {sum(len(b.txs) for b in ledger.blocks)} transactions")
    _say(args, f"forged subscriptions refused: {result.forgery_attempts - result.forgeries_accepted}/{result.forgery_attempts}")
    for name, nid in result.node_ids.items():
        if nid in ledger.state.balances:
            _say(args, f"  {name:<16} balance {ledger.state.balances[nid] / 1e6:>14.6f}  reputation {ledger.state.profiles[nid].reputation:.6f}")
    _result(True, ledger.tip.hash)
    return EXIT_OK


def _load_blocks(path: str):
    text = Path(path).read_text()
    return parse_lines(text)


def cmd_verify(args) -> int:
    params = generate_params(args.security)
    try:
        blocks = _load_blocks(args.ledger)
    except (OSError, CorruptLedger, UnicodeDecodeError) as exc:
        print(f"error: cannot read ledger: {exc}", file=sys.stderr)
        return EXIT_INPUT
    verdict = verify_chain(blocks, params, args.term_length)
    tip = blocks[-1].hash if blocks else None
    if not verdict:
        print(f"bad block {verdict.bad_index}: {verdict.detail}")
        _result(False, tip)
        return EXIT_FAIL
    _say(args, f"{len(blocks) - 1} blocks verified")
    _result(True, tip)
    return EXIT_OK


def cmd_report(args) -> int:
    params = generate_params(args.security)
    try:
        blocks = _load_blocks(args.ledger)
    except (OSError, CorruptLedger, UnicodeDecodeError) as exc:
        print(f"error: cannot read ledger: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        metrics = compute_metrics(blocks, params, args.term_length)
    except CorruptLedger as exc:
        print(f"error: {exc}", file=sys.stderr)
        _result(False, blocks[-1].hash if blocks else None)
        return EXIT_FAIL
    out = Path(args.out)
    write_csvs(metrics, out, blocks[-1].hash, len(blocks) - 1)
    if not args.no_figures:
        write_figures(metrics, out)
    _result(True, blocks[-1].hash)
    return EXIT_OK


def nizk_vector_lines() -> list[str]:
    lines = ["# security p q g sk nonce context_hex t s c; integers in hex, c is the hash challenge unless marked stub"]
    toy = generate_params(Security.TOY)
    kp = KeyPair.from_secret(toy, 7)
    pr = prove_knowledge(toy, kp, b"", 3, challenge_override=5)
    assert verify_proof(toy, kp.pk, pr, challenge_override=5)
    lines.append(f"toy {toy.p:x} {toy.q:x} {toy.g:x} 7 3 - {pr.t:x} {pr.s:x} 5-stub")
    rng = Xoshiro256StarStar(2024)
    for security in (Security.TOY, Security.STANDARD):
        params = generate_params(security)
        for i in range(4):
            kp = KeyPair.generate(params, rng)
            nonce = 1 + rng.randbelow(params.q - 1)
            ctx = f"vector-{i}".encode()
            pr = prove_knowledge(params, kp, ctx, nonce)
            c = challenge(params, pr.t, kp.pk, ctx)
            lines.append(
                f"{security.value} {params.p:x} {params.q:x} {params.g:x} {kp.sk:x} {nonce:x} {ctx.hex()} {pr.t:x} {pr.s:x} {c:x}"
            )
    return lines


def hash_vector_lines() -> list[str]:
    lines = ["# label encoding_hex sha256_hex"]
    g = genesis()
    lines.append(f"genesis_block {encode(g).hex()} {g.hash.hex()}")
    for pk in (13, 2, 2**64 + 1):
        enc = encode_fields((BIGINT, pk))
        assert hashlib.sha256(enc).digest() == node_id(pk)
        lines.append(f"node_id_pk_{pk} {enc.hex()} {node_id(pk).hex()}")
    leader = node_id(13)
    lines.append(f"system_id_leader13_seq1 - {system_id(leader, 1).hex()}")
    return lines


def cmd_vectors(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "nizk_vectors.txt").write_text("\n".join(nizk_vector_lines()) + "\n")
    (out / "hash_vectors.txt").write_text("\n".join(hash_vector_lines()) + "\n")
    _say(args, f"wrote {out / 'nizk_vectors.txt'} and {out / 'hash_vectors.txt'}")
    _result(True, genesis().hash)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oec", description="Open edge computing ledger and simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, security_default):
        p.add_argument("--security", choices=[s.value for s in Security], default=security_default)
        p.add_argument("--quiet", action="store_true", help="only print the RESULT line")

    p = sub.add_parser("run", help="simulate a scenario and write its ledger and metrics")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--no-figures", action="store_true")
    common(p, None)
    p.set_defaults(func=cmd_run)

    for name, func, helptext in (
        ("verify", cmd_verify, "check a ledger file"),
        ("report", cmd_report, "recompute metrics from a ledger file"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("ledger")
        p.add_argument("--term-length", type=int, default=DEFAULT_TERM_LENGTH)
        if name == "report":
            p.add_argument("--out", required=True)
            p.add_argument("--no-figures", action="store_true")
        common(p, Security.STANDARD.value)
        p.set_defaults(func=func)

    p = sub.add_parser("vectors", help="write NIZK and hash conformance vectors")
    p.add_argument("--out", required=True)
    common(p, Security.STANDARD.value)
    p.set_defaults(func=cmd_vectors)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
