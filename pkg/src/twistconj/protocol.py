"""Three-pass authentication on the twisted conjugacy relation.

The prover knows s with ``t = psi(s^T) w phi(s)``.  Each round:

    prover   -> verifier : u = psi(r^T) t phi(r)           (commitment)
    verifier -> prover   : c in {0, 1}                     (challenge)
    prover   -> verifier : v = r if c == 0 else s r        (response)

and the verifier accepts iff ``u == psi(v^T) t phi(v)`` for c = 0 or
``u == psi(v^T) w phi(v)`` for c = 1.  A prover without s survives a
round with probability 1/2, so k rounds bound forgery by 2^-k.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Optional, Protocol as _Protocol, Union

from .f2poly import Endo, TruncPoly, as_rng, poly_random
from .matsemi import Mat2, mat_random, mul_ints

__all__ = [
    "ProtocolError",
    "PublicKey",
    "PrivateKey",
    "Commitment",
    "Challenge",
    "Response",
    "ProverRoundState",
    "SessionConfig",
    "Verdict",
    "Transcript",
    "twist",
    "keygen",
    "prover_commit",
    "verifier_challenge",
    "prover_respond",
    "verifier_check",
    "Prover",
    "Verifier",
    "run_session",
]

ENDO_MODES = ("reduce", "extend")


class ProtocolError(RuntimeError):
    """Messages used out of order, or round state reused."""


@dataclass(frozen=True)
class PublicKey:
    phi: Endo
    psi: Endo
    w: Mat2
    t: Mat2

    def __post_init__(self):
        n = self.w.n
        if not (self.phi.n == self.psi.n == self.t.n == n):
            raise ValueError("public key components have different truncation orders")

    @property
    def n(self) -> int:
        return self.w.n


@dataclass(frozen=True)
class PrivateKey:
    s: Mat2

    @property
    def n(self) -> int:
        return self.s.n


@dataclass(frozen=True)
class Commitment:
    u: Mat2


@dataclass(frozen=True)
class Challenge:
    c: int

    def __post_init__(self):
        if self.c not in (0, 1):
            raise ValueError(f"challenge must be a bit, got {self.c!r}")


@dataclass(frozen=True)
class Response:
    v: Mat2


Message = Union[Commitment, Challenge, Response]


@dataclass
class ProverRoundState:
    r: Mat2
    consumed: bool = False


@dataclass(frozen=True)
class SessionConfig:
    k: int
    n: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("a session needs at least one round")


class Verdict(enum.IntEnum):
    REJECT = 0
    ACCEPT = 1
    MALFORMED = 2

    def __bool__(self):
        return self is Verdict.ACCEPT


@dataclass
class Transcript:
    messages: list = field(default_factory=list)
    verdict: Optional[Verdict] = None


def twist(phi: Endo, psi: Endo, middle: Mat2, x: Mat2) -> Mat2:
    """psi(x^T) * middle * phi(x)."""
    n = x.n
    mask = (1 << n) - 1
    a, b, c, d = x.ints()
    left = tuple(psi.apply_int(e) for e in (a, c, b, d))
    right = tuple(phi.apply_int(e) for e in (a, b, c, d))
    prod = mul_ints(mul_ints(left, middle.ints(), mask), right, mask)
    return Mat2.from_ints(n, *prod)


def _embed(m: Mat2, n: int) -> Mat2:
    return Mat2.from_ints(n, *m.ints())


def keygen(n: int, rng=None, endo_n: Optional[int] = None, endo_mode: str = "reduce"):
    """Sample a key pair with every entry of s and w having constant term 1.

    ``endo_n`` is the number of coefficient slots drawn for the endomorphism
    polynomials (default ``n``).  With ``endo_mode="reduce"`` they are cut
    down mod x^n; with ``"extend"`` the whole key lives in the ring of order
    ``max(n, endo_n)`` while s and w keep degree below n.
    """
    if n < 1:
        raise ValueError(f"truncation order must be positive, got {n}")
    if endo_mode not in ENDO_MODES:
        raise ValueError(f"endo_mode must be one of {ENDO_MODES}")
    endo_n = n if endo_n is None else endo_n
    if endo_n < 1:
        raise ValueError(f"endo_n must be positive, got {endo_n}")
    rng = as_rng(rng)
    ring = max(n, endo_n) if endo_mode == "extend" else n

    s = _embed(mat_random(n, 1, rng), ring)
    w = _embed(mat_random(n, 1, rng), ring)
    endos = []
    for _ in range(2):
        p = poly_random(endo_n, 0, rng).value & ((1 << ring) - 1)
        endos.append(Endo(TruncPoly(ring, p)))
    phi, psi = endos
    t = twist(phi, psi, w, s)
    return PublicKey(phi, psi, w, t), PrivateKey(s)


def prover_commit(pub: PublicKey, rng=None, r: Optional[Mat2] = None):
    """Commit to fresh randomness r (all coefficients free)."""
    if r is None:
        r = mat_random(pub.n, None, as_rng(rng))
    u = twist(pub.phi, pub.psi, pub.t, r)
    return Commitment(u), ProverRoundState(r)


def verifier_challenge(rng=None) -> Challenge:
    return Challenge(as_rng(rng).getrandbits(1))


def prover_respond(priv: PrivateKey, state: ProverRoundState, ch: Challenge) -> Response:
    if state.consumed:
        raise ProtocolError("round state already used")
    state.consumed = True
    if ch.c == 0:
        return Response(state.r)
    return Response(priv.s * state.r)


def verifier_check(pub: PublicKey, com: Commitment, ch: Challenge, resp: Response) -> Verdict:
    if com.u.n != pub.n or resp.v.n != pub.n:
        return Verdict.MALFORMED
    middle = pub.t if ch.c == 0 else pub.w
    ok = twist(pub.phi, pub.psi, middle, resp.v) == com.u
    return Verdict.ACCEPT if ok else Verdict.REJECT


class RoundProver(_Protocol):
    def commit(self, rng: random.Random) -> Commitment: ...

    def respond(self, ch: Challenge) -> Response: ...


class Prover:
    """Honest prover holding the private key."""

    def __init__(self, pub: PublicKey, priv: PrivateKey):
        if pub.n != priv.n:
            raise ValueError("key truncation orders differ")
        self.pub = pub
        self.priv = priv
        self._state: Optional[ProverRoundState] = None

    def commit(self, rng=None, r: Optional[Mat2] = None) -> Commitment:
        if self._state is not None and not self._state.consumed:
            raise ProtocolError("previous round still open")
        com, self._state = prover_commit(self.pub, rng, r)
        return com

    def respond(self, ch: Challenge) -> Response:
        if self._state is None:
            raise ProtocolError("respond called before commit")
        return prover_respond(self.priv, self._state, ch)


class Verifier:
    """Verifier side of one round at a time: receive -> challenge -> check."""

    def __init__(self, pub: PublicKey):
        self.pub = pub
        self._com: Optional[Commitment] = None
        self._ch: Optional[Challenge] = None

    def receive(self, com: Commitment) -> None:
        if self._com is not None:
            raise ProtocolError("commitment already received for this round")
        self._com = com

    def challenge(self, rng=None) -> Challenge:
        if self._com is None:
            raise ProtocolError("challenge requested before commitment")
        if self._ch is not None:
            raise ProtocolError("challenge already issued for this round")
        self._ch = verifier_challenge(rng)
        return self._ch

    def check(self, resp: Response) -> Verdict:
        if self._com is None or self._ch is None:
            raise ProtocolError("response received before challenge")
        verdict = verifier_check(self.pub, self._com, self._ch, resp)
        self._com = self._ch = None
        return verdict


def run_session(
    pub: PublicKey,
    priv: Optional[PrivateKey],
    cfg: SessionConfig,
    rng=None,
    *,
    verifier_rng=None,
    prover: Optional[RoundProver] = None,
):
    """Run ``cfg.k`` sequential rounds; stop at the first failed round.

    ``prover`` replaces the honest prover (e.g. with a forger); ``rng``
    drives the prover and ``verifier_rng`` (default: ``rng``) the
    challenges.  Returns ``(transcript, verdict)``.
    """
    if cfg.n != pub.n:
        raise ValueError("session truncation order does not match the public key")
    rng = as_rng(rng)
    vrng = rng if verifier_rng is None else as_rng(verifier_rng)
    if prover is None:
        prover = Prover(pub, priv)
    verifier = Verifier(pub)
    transcript = Transcript()
    verdict = Verdict.ACCEPT
    for _ in range(cfg.k):
        com = prover.commit(rng)
        verifier.receive(com)
        ch = verifier.challenge(vrng)
        resp = prover.respond(ch)
        transcript.messages += [com, ch, resp]
        round_verdict = verifier.check(resp)
        if round_verdict is not Verdict.ACCEPT:
            verdict = Verdict.REJECT
            break
    transcript.verdict = verdict
    return transcript, verdict
