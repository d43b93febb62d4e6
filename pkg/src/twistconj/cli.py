"""Command line: keygen, prove/verify over pipes, simulate, attack, bench.

Exit codes: 0 success/accept, 1 reject (or no forgery when one was
expected), 2 usage, 3 I/O, 4 malformed data.

prove and verify speak the framed wire format on stdin/stdout, so two
processes must be cross-connected, e.g.::

    mkfifo p2v v2p
    twistconj prove --pub k.pub --priv k.priv < v2p > p2v &
    twistconj verify --pub k.pub --k 20 > v2p < p2v
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import random
import secrets
import signal
import statistics
import sys
import time
from typing import Optional, Sequence

from . import wire
from .attack import AttackConfig, GuessingForger, forge_check, planted_instance, tree_attack
from .f2poly import poly_add, poly_compose, poly_mul, poly_random
from .protocol import (
    Challenge,
    Commitment,
    Prover,
    PublicKey,
    Response,
    SessionConfig,
    Verdict,
    Verifier,
    keygen,
    run_session,
)

log = logging.getLogger("twistconj")

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MALFORMED = 4

DEFAULT_N = 300
DEFAULT_K = 20
DEFAULT_WIDTH_CAP = 16384


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _rng(seed: Optional[int]) -> random.Random:
    return random.SystemRandom() if seed is None else random.Random(seed)


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {v}")
    return v


def _n_list(text: str) -> list[int]:
    return [_positive(x) for x in text.split(",") if x]


def _read_key(path: str, tag: int):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO)
    try:
        got, payload = wire.decode_frame(data)
        if got != tag:
            raise wire.MalformedError(f"{path}: expected frame tag {tag:#04x}, got {got:#04x}")
        return wire.decode_payload(got, payload)
    except wire.MalformedError as exc:
        raise CliError(f"{path}: {exc}", EXIT_MALFORMED)


def _write(path: str, data: bytes, private: bool = False) -> None:
    try:
        if private:
            fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.chmod(path, 0o600)
        else:
            with open(path, "wb") as fh:
                fh.write(data)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO)


# --- keygen ------------------------------------------------------------------


def cmd_keygen(args) -> int:
    pub_path = args.pub or (args.out + ".pub" if args.out else None)
    priv_path = args.priv or (args.out + ".priv" if args.out else None)
    if not pub_path or not priv_path:
        raise CliError("keygen needs --out PREFIX or both --pub and --priv", EXIT_USAGE)
    pub, priv = keygen(args.n, _rng(args.seed), endo_n=args.endo_n, endo_mode=args.endo_mode)
    pub_bytes = wire.encode_message(pub)
    _write(pub_path, pub_bytes)
    _write(priv_path, wire.encode_message(priv), private=True)
    digest = hashlib.sha256(pub_bytes).hexdigest()
    print(f"n={pub.n} pub={pub_path} priv={priv_path} sha256={digest}")
    return EXIT_OK


def cmd_show(args) -> int:
    """Print a framed file as tag name plus lowercase hex payload."""
    try:
        with open(args.path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {args.path}: {exc}", EXIT_IO)
    names = {
        wire.TAG_COMMITMENT: "commitment",
        wire.TAG_CHALLENGE: "challenge",
        wire.TAG_RESPONSE: "response",
        wire.TAG_VERDICT: "verdict",
        wire.TAG_PUBLIC_KEY: "public_key",
        wire.TAG_PRIVATE_KEY: "private_key",
        wire.TAG_ATTACK_REPORT: "attack_report",
    }
    off = 0
    try:
        while off < len(data):
            tag, payload, off = wire._read_frame(data, off)
            wire.decode_payload(tag, payload)
            print(f"{names[tag]} {wire.to_hex(payload)}")
    except wire.MalformedError as exc:
        raise CliError(f"{args.path}: {exc}", EXIT_MALFORMED)
    return EXIT_OK


# --- prove / verify ------------------------------------------------------------


def _send(out, msg) -> None:
    out.write(wire.encode_message(msg))
    out.flush()


def _drain(inp) -> None:
    try:
        while inp.read(65536):
            pass
    except (OSError, ValueError):
        pass


def cmd_prove(args) -> int:
    pub = _read_key(args.pub, wire.TAG_PUBLIC_KEY)
    priv = _read_key(args.priv, wire.TAG_PRIVATE_KEY)
    if pub.n != priv.n:
        raise CliError("public and private key truncation orders differ", EXIT_MALFORMED)
    rng = _rng(args.seed)
    prover = Prover(pub, priv)
    inp, out = sys.stdin.buffer, sys.stdout.buffer
    try:
        while True:
            _send(out, prover.commit(rng))
            frame = wire.read_frame(inp)
            if frame is None:
                return EXIT_OK
            msg = wire.decode_payload(*frame)
            if isinstance(msg, Challenge):
                _send(out, prover.respond(msg))
            elif isinstance(msg, Verdict):
                log.info("verifier verdict: %s", msg.name.lower())
                return EXIT_OK if msg is Verdict.ACCEPT else EXIT_REJECT
            else:
                raise wire.MalformedError(f"unexpected {type(msg).__name__} frame")
    except wire.MalformedError as exc:
        log.error("malformed input: %s", exc)
        return EXIT_MALFORMED
    except BrokenPipeError:
        log.error("verifier closed the connection")
        return EXIT_IO


def _verify_rounds(pub: PublicKey, k: int, rng, inp, out) -> tuple[Verdict, int]:
    verifier = Verifier(pub)
    for i in range(k):
        frame = wire.read_frame(inp)
        if frame is None:
            log.error("premature end of stream before round %d", i + 1)
            return Verdict.REJECT, EXIT_REJECT
        msg = wire.decode_payload(*frame)
        if not isinstance(msg, Commitment):
            raise wire.MalformedError(f"expected commitment, got {type(msg).__name__}")
        verifier.receive(msg)
        _send(out, verifier.challenge(rng))
        frame = wire.read_frame(inp)
        if frame is None:
            log.error("premature end of stream in round %d", i + 1)
            return Verdict.REJECT, EXIT_REJECT
        msg = wire.decode_payload(*frame)
        if not isinstance(msg, Response):
            raise wire.MalformedError(f"expected response, got {type(msg).__name__}")
        verdict = verifier.check(msg)
        if verdict is Verdict.MALFORMED:
            log.error("round %d: response has the wrong dimensions", i + 1)
            return Verdict.REJECT, EXIT_MALFORMED
        if verdict is not Verdict.ACCEPT:
            log.info("round %d rejected", i + 1)
            return Verdict.REJECT, EXIT_REJECT
    return Verdict.ACCEPT, EXIT_OK


class _Stalled(Exception):
    pass


def _alarm(signum, frame):
    raise _Stalled()


def cmd_verify(args) -> int:
    pub = _read_key(args.pub, wire.TAG_PUBLIC_KEY)
    rng = _rng(args.seed)
    inp, out = sys.stdin.buffer, sys.stdout.buffer
    # a corrupted length field can leave both sides waiting on each other
    timed = args.timeout > 0 and hasattr(signal, "SIGALRM")
    if timed:
        signal.signal(signal.SIGALRM, _alarm)
        signal.alarm(args.timeout)
    stalled = False
    try:
        verdict, code = _verify_rounds(pub, args.k, rng, inp, out)
    except wire.MalformedError as exc:
        log.error("malformed frame: %s", exc)
        verdict, code = Verdict.REJECT, EXIT_MALFORMED
    except _Stalled:
        log.error("session exceeded %d s", args.timeout)
        verdict, code, stalled = Verdict.REJECT, EXIT_REJECT, True
    finally:
        if timed:
            signal.alarm(0)
    try:
        _send(out, verdict)
        out.close()
    except BrokenPipeError:
        pass
    if not stalled:
        _drain(inp)
    print(f"verdict={verdict.name.lower()} rounds={args.k}", file=sys.stderr)
    return code


# --- simulate ----------------------------------------------------------------


def simulate(n: int, k: int, trials: int, seed: Optional[int]) -> dict:
    rng = _rng(seed)
    pub, priv = keygen(n, rng)
    cfg = SessionConfig(k, n)
    honest = sum(bool(run_session(pub, priv, cfg, rng)[1]) for _ in range(trials))
    forger = GuessingForger(pub)
    one = SessionConfig(1, n)
    round_ok = sum(bool(run_session(pub, None, one, rng, prover=forger)[1]) for _ in range(trials))
    session_ok = sum(bool(run_session(pub, None, cfg, rng, prover=forger)[1]) for _ in range(trials))
    return {
        "n": n,
        "k": k,
        "trials": trials,
        "honest_rate": honest / trials,
        "forger_round_rate": round_ok / trials,
        "forger_session_rate": session_ok / trials,
    }


def cmd_simulate(args) -> int:
    stats = simulate(args.n, args.k, args.trials, args.seed)
    print(f"{'honest session acceptance':<30}{stats['honest_rate']:.4f}", file=sys.stderr)
    print(f"{'forger per-round acceptance':<30}{stats['forger_round_rate']:.4f}", file=sys.stderr)
    print(f"{'forger session acceptance':<30}{stats['forger_session_rate']:.4f}  (2^-k = {2.0 ** -args.k:.3g})", file=sys.stderr)
    print(" ".join(f"{k}={v}" for k, v in stats.items()))
    return EXIT_OK


# --- attack ------------------------------------------------------------------


def run_attacks(n, endo_n, endo_mode, width_cap, trials, seed):
    """Yield one AttackReport per planted instance; trial i uses seed + i."""
    endo_n = n if endo_n is None else endo_n
    for i in range(trials):
        trial_seed = seed + i
        inst = planted_instance(n, endo_n, random.Random(trial_seed), endo_mode)
        cfg = AttackConfig(n=n, endo_n=endo_n, width_cap=width_cap, endo_mode=endo_mode)
        out = tree_attack(inst.pub, cfg)
        forge_ok = None
        if out.forged:
            forge_ok = all(forge_check(inst.pub, s) for s in out.solutions)
        yield wire.AttackReport(
            trial=i,
            seed=trial_seed,
            n=n,
            endo_n=endo_n,
            endo_mode=endo_mode,
            width_cap=width_cap,
            outcome=out.kind.value,
            level=out.level or 0,
            width=out.width or 0,
            forge_ok=forge_ok,
            widths=out.widths,
            millis=round(out.millis),
        ), out


def cmd_attack(args) -> int:
    seed = args.seed if args.seed is not None else secrets.randbits(48)
    cap = None if args.width_cap == 0 else args.width_cap
    fh = None
    if args.report:
        try:
            fh = open(args.report, "a")
        except OSError as exc:
            raise CliError(f"cannot open {args.report}: {exc}", EXIT_IO)
    successes = 0
    bad_forgeries = 0
    max_widths = []
    try:
        for rec, _ in run_attacks(args.n, args.endo_n, args.endo_mode, cap, args.trials, seed):
            if rec.outcome == "forged":
                successes += 1
                bad_forgeries += not rec.forge_ok
            max_widths.append(max(rec.widths, default=0))
            if fh:
                fh.write(wire.format_report(rec) + "\n")
                fh.flush()
            print(f"trial {rec.trial:>4}  seed {rec.seed}  {rec.outcome:<15} level {rec.level:>4}  "
                  f"width {rec.width:>7}  {rec.millis} ms", file=sys.stderr)
    finally:
        if fh:
            fh.close()
    print(f"successes {successes}/{args.trials}  max width median "
          f"{statistics.median(max_widths) if max_widths else 0}", file=sys.stderr)
    print(f"successes={successes} trials={args.trials} seed={seed}")
    if bad_forgeries:
        log.error("%d forged keys failed the public relation", bad_forgeries)
        return EXIT_REJECT
    if args.expect_forgery and successes == 0:
        return EXIT_REJECT
    return EXIT_OK


# --- bench -------------------------------------------------------------------


def _time(fn, reps: int) -> float:
    best = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return statistics.median(best)


def bench(n_list: Sequence[int], reps: int, seed: int = 0) -> list[dict]:
    rng = random.Random(seed)
    rows = []
    for n in n_list:
        a, b = poly_random(n, None, rng), poly_random(n, None, rng)
        g = poly_random(n, 0, rng)
        pub, priv = keygen(n, rng)
        prover = Prover(pub, priv)

        def one_round():
            verifier = Verifier(pub)
            verifier.receive(prover.commit(rng))
            ch = verifier.challenge(rng)
            verifier.check(prover.respond(ch))

        one_round()  # fills the endomorphism power tables
        rows.append({
            "n": n,
            "add_us": _time(lambda: poly_add(a, b), reps) * 1e6,
            "mul_us": _time(lambda: poly_mul(a, b), reps) * 1e6,
            "compose_ms": _time(lambda: poly_compose(a, g), reps) * 1e3,
            "round_ms": _time(one_round, reps) * 1e3,
        })
    return rows


def cmd_bench(args) -> int:
    rows = bench(args.n, args.reps, args.seed or 0)
    print(f"{'n':>6} {'add us':>10} {'mul us':>10} {'compose ms':>12} {'round ms':>10}", file=sys.stderr)
    for r in rows:
        print(f"{r['n']:>6} {r['add_us']:>10.2f} {r['mul_us']:>10.2f} "
              f"{r['compose_ms']:>12.3f} {r['round_ms']:>10.3f}", file=sys.stderr)
    return EXIT_OK


# --- entry point -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twistconj", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    kg = sub.add_parser("keygen", help="generate a key pair")
    kg.add_argument("--n", type=_positive, default=DEFAULT_N)
    kg.add_argument("--endo-n", type=_positive)
    kg.add_argument("--endo-mode", choices=("reduce", "extend"), default="reduce")
    kg.add_argument("--seed", type=int)
    kg.add_argument("--out", help="path prefix; writes PREFIX.pub and PREFIX.priv")
    kg.add_argument("--pub")
    kg.add_argument("--priv")
    kg.set_defaults(func=cmd_keygen)

    sh = sub.add_parser("show", help="print a framed file as hex")
    sh.add_argument("path")
    sh.set_defaults(func=cmd_show)

    pr = sub.add_parser("prove", help="prover side, frames on stdin/stdout")
    pr.add_argument("--pub", required=True)
    pr.add_argument("--priv", required=True)
    pr.add_argument("--seed", type=int)
    pr.set_defaults(func=cmd_prove)

    ve = sub.add_parser("verify", help="verifier side, frames on stdin/stdout")
    ve.add_argument("--pub", required=True)
    ve.add_argument("--k", type=_positive, default=DEFAULT_K)
    ve.add_argument("--seed", type=int)
    ve.add_argument("--timeout", type=_nonneg, default=300, help="seconds for the whole session, 0 = none")
    ve.set_defaults(func=cmd_verify)

    si = sub.add_parser("simulate", help="honest and forger sessions in-process")
    si.add_argument("--n", type=_positive, default=64)
    si.add_argument("--k", type=_positive, default=DEFAULT_K)
    si.add_argument("--seed", type=int)
    si.add_argument("--trials", type=_positive, default=1000)
    si.set_defaults(func=cmd_simulate)

    at = sub.add_parser("attack", help="coefficient-tree attack on planted keys")
    at.add_argument("--n", type=_positive, default=100)
    at.add_argument("--endo-n", type=_positive)
    at.add_argument("--endo-mode", choices=("reduce", "extend"), default="reduce")
    at.add_argument("--width-cap", type=_nonneg, default=DEFAULT_WIDTH_CAP, help="0 = unbounded")
    at.add_argument("--trials", type=_positive, default=5)
    at.add_argument("--seed", type=int)
    at.add_argument("--report", help="append key=value records to this file")
    at.add_argument("--expect-forgery", action="store_true", help="exit 1 if nothing is forged")
    at.set_defaults(func=cmd_attack)

    be = sub.add_parser("bench", help="time ring operations and one protocol round")
    be.add_argument("--n", type=_n_list, default=[64, 128, 300])
    be.add_argument("--reps", type=_positive, default=5)
    be.add_argument("--seed", type=int)
    be.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
