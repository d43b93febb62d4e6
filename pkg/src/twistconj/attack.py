"""Coefficient-tree attack on ``t = psi(s^T) w phi(s)``.

Equating coefficients of x^0, x^1, ... on both sides gives four boolean
equations per degree.  Because phi and psi map x to polynomials without a
constant term, the coefficient of x^d on the right only involves the
coefficients of s up to degree d.  The attack therefore walks the degrees in
ascending order, extending every surviving partial assignment by the 16
possible choices of the four degree-d bits of s and keeping the extensions
that match t at x^d.  Survivors form a tree whose width is capped.

``brute_force_solve`` is an exhaustive numpy enumeration used as the
independent oracle for tiny n.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .f2poly import as_rng, clmul
from .matsemi import Mat2, mat_random, mul_ints
from .protocol import (
    Challenge,
    Commitment,
    PrivateKey,
    PublicKey,
    Response,
    keygen,
    twist,
)

__all__ = [
    "DEFAULT_WIDTH_CAP",
    "AttackInstance",
    "AttackConfig",
    "PartialSolution",
    "WidthExceeded",
    "OutcomeKind",
    "AttackOutcome",
    "planted_instance",
    "residual_coeffs",
    "extend_level",
    "tree_attack",
    "brute_force_solve",
    "forge_check",
    "GuessingForger",
    "NonlinearityWitness",
    "find_nonlinearity",
]

DEFAULT_WIDTH_CAP = 16384
BRUTE_FORCE_MAX_BITS = 24

# all 16 bit matrices X = [[x0, x1], [x2, x3]] at one degree
_XS = [((m >> 0) & 1, (m >> 1) & 1, (m >> 2) & 1, (m >> 3) & 1) for m in range(16)]


@dataclass(frozen=True)
class AttackInstance:
    pub: PublicKey
    # kept for evaluation only; nothing in the solver reads it
    planted: Optional[PrivateKey] = None


@dataclass(frozen=True)
class AttackConfig:
    """``width_cap=None`` means unbounded.

    ``n`` bounds the degree of the unknown entries of s, ``endo_n`` is the
    number of coefficient slots the endomorphisms were drawn with, and
    ``endo_mode`` says how those were fitted into the ring (see ``keygen``).
    """

    n: int
    endo_n: Optional[int] = None
    width_cap: Optional[int] = DEFAULT_WIDTH_CAP
    endo_mode: str = "reduce"

    def __post_init__(self):
        if self.width_cap is not None and self.width_cap < 1:
            raise ValueError("width_cap must be at least 1")

    @property
    def ring_n(self) -> int:
        endo_n = self.n if self.endo_n is None else self.endo_n
        return max(self.n, endo_n) if self.endo_mode == "extend" else self.n


@dataclass(frozen=True, order=True)
class PartialSolution:
    """Coefficients of degree < depth of the four entries of a candidate s."""

    depth: int
    a: int = 0
    b: int = 0
    c: int = 0
    d: int = 0

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if any(v < 0 or v >> self.depth for v in self.ints()):
            raise ValueError(f"assignment has bits at or above degree {self.depth}")

    def ints(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def to_mat(self, n: int) -> Mat2:
        return Mat2.from_ints(n, *self.ints())

    def xor(self, other: PartialSolution) -> PartialSolution:
        if self.depth != other.depth:
            raise ValueError("depths differ")
        return PartialSolution(self.depth, *(x ^ y for x, y in zip(self.ints(), other.ints())))


@dataclass(frozen=True)
class WidthExceeded:
    level: int
    width: int


class OutcomeKind(enum.Enum):
    FORGED = "forged"
    EXHAUSTED = "exhausted"
    WIDTH_EXCEEDED = "width_exceeded"


@dataclass
class AttackOutcome:
    kind: OutcomeKind
    widths: list[int] = field(default_factory=list)
    level: Optional[int] = None
    width: Optional[int] = None
    solution: Optional[Mat2] = None
    solutions: list[Mat2] = field(default_factory=list)
    millis: float = 0.0

    @property
    def forged(self) -> bool:
        return self.kind is OutcomeKind.FORGED


def planted_instance(n: int, endo_n: Optional[int] = None, rng=None, endo_mode: str = "reduce"):
    pub, priv = keygen(n, rng, endo_n=endo_n, endo_mode=endo_mode)
    return AttackInstance(pub, priv)


def residual_coeffs(pub: PublicKey, partial: PartialSolution) -> tuple[int, int, int, int]:
    """Coefficient of x^(depth-1) in ``psi(s^T) w phi(s) + t`` per entry.

    s is the partial assignment completed with zeros.  Computed by plain
    evaluation; higher coefficients of s cannot influence this degree.
    """
    d = partial.depth
    if d < 1 or d > pub.n:
        raise ValueError(f"depth {d} outside 1..{pub.n}")
    prod = twist(pub.phi, pub.psi, pub.w, partial.to_mat(pub.n))
    return tuple(((x ^ y) >> (d - 1)) & 1 for x, y in zip(prod.ints(), pub.t.ints()))


class _Node:
    """Partial solution plus the cached products it implies.

    With Ps = psi(s) and Fs = phi(s) entrywise:
    H = Ps^T w, G = w Fs, T = Ps^T w Fs, all mod x^n.
    """

    __slots__ = ("s", "H", "G", "T")

    def __init__(self, s, H, G, T):
        self.s = s
        self.H = H
        self.G = G
        self.T = T


def _node_from_partial(pub: PublicKey, p: PartialSolution) -> _Node:
    n = pub.n
    mask = (1 << n) - 1
    a, b, c, d = p.ints()
    ps_t = tuple(pub.psi.apply_int(e) for e in (a, c, b, d))
    fs = tuple(pub.phi.apply_int(e) for e in (a, b, c, d))
    w = pub.w.ints()
    H = mul_ints(ps_t, w, mask)
    G = mul_ints(w, fs, mask)
    T = mul_ints(H, fs, mask)
    return _Node(p.ints(), H, G, T)


def _x_update(T, hp, gp, x):
    """T + (hp) X + X^T (gp) for one bit matrix X (quadratic part excluded)."""
    x0, x1, x2, x3 = x
    n0, n1, n2, n3 = T
    if x0:
        n0 ^= hp[0] ^ gp[0]
        n1 ^= gp[1]
        n2 ^= hp[2]
    if x1:
        n1 ^= hp[0]
        n3 ^= hp[2]
        n2 ^= gp[0]
        n3 ^= gp[1]
    if x2:
        n0 ^= hp[1] ^ gp[2]
        n1 ^= gp[3]
        n2 ^= hp[3]
    if x3:
        n1 ^= hp[1]
        n3 ^= hp[3]
        n2 ^= gp[2]
        n3 ^= gp[3]
    return n0, n1, n2, n3


class _Extender:
    """Expands one tree level; shared by ``extend_level`` and ``tree_attack``.

    Child of a node at degree d with bit matrix X (Xd = X x^d):

        T' = T + (H p_phi^d) X + X^T (p_psi^d G) + X^T (w p_psi^d p_phi^d) X

    For d >= 1 the last term starts at x^(2d), and the x^d coefficient of the
    middle terms only sees the constant terms of H and G times the linear
    coefficients of p_phi, p_psi.  The check at x^d is therefore affine in X
    and is resolved by table lookup (``fast``); survivors get the full update.
    """

    def __init__(self, pub: PublicKey, key_n: int, fast: bool = True):
        self.n = pub.n
        self.mask = (1 << pub.n) - 1
        self.key_n = key_n
        self.fast = fast
        self.w = pub.w.ints()
        self.t = pub.t.ints()
        self.pphi = pub.phi.powers()
        self.ppsi = pub.psi.powers()
        self.lin_phi = (pub.phi.p.value >> 1) & 1
        self.lin_psi = (pub.psi.p.value >> 1) & 1
        self._tables: dict[int, list[list[int]]] = {}

    def _solutions(self, H, G):
        """Map residual nibble -> indices of X cancelling it, for d >= 1."""
        key = 0
        for i in range(4):
            key |= (H[i] & 1) << i
            key |= (G[i] & 1) << (i + 4)
        table = self._tables.get(key)
        if table is None:
            hp = [(H[i] & 1) & self.lin_phi for i in range(4)]
            gp = [(G[i] & 1) & self.lin_psi for i in range(4)]
            table = [[] for _ in range(16)]
            for xi, x in enumerate(_XS):
                n = _x_update((0, 0, 0, 0), hp, gp, x)
                table[n[0] | n[1] << 1 | n[2] << 2 | n[3] << 3].append(xi)
            self._tables[key] = table
        return table

    def extend(self, nodes: list[_Node], d: int, cap: Optional[int]):
        """Return (survivors, total_width); survivors are truncated past cap."""
        mask = self.mask
        t0, t1, t2, t3 = self.t
        out: list[_Node] = []
        seen = set()
        width = 0

        if d >= self.key_n:
            # s has no unknowns at this degree; only the zero extension
            for node in nodes:
                T = node.T
                if (((T[0] ^ t0) | (T[1] ^ t1) | (T[2] ^ t2) | (T[3] ^ t3)) >> d) & 1:
                    continue
                width += 1
                if cap is None or width <= cap:
                    out.append(node)
            return out, width

        pf = self.pphi[d]
        pp = self.ppsi[d]
        bit = 1 << d
        # w * p_psi^d and w * p_phi^d, entrywise
        wps = tuple(clmul(x, pp, mask) for x in self.w)
        wpf = tuple(clmul(x, pf, mask) for x in self.w)
        pq = clmul(pp, pf, mask)
        wpp = tuple(clmul(x, pq, mask) for x in self.w)
        # X^T (w p_psi^d p_phi^d) X for every bit matrix X
        quad = []
        for x0, x1, x2, x3 in _XS:
            # M = wpp X
            m0 = (wpp[0] if x0 else 0) ^ (wpp[1] if x2 else 0)
            m1 = (wpp[0] if x1 else 0) ^ (wpp[1] if x3 else 0)
            m2 = (wpp[2] if x0 else 0) ^ (wpp[3] if x2 else 0)
            m3 = (wpp[2] if x1 else 0) ^ (wpp[3] if x3 else 0)
            quad.append(
                (
                    (m0 if x0 else 0) ^ (m2 if x2 else 0),
                    (m1 if x0 else 0) ^ (m3 if x2 else 0),
                    (m0 if x1 else 0) ^ (m2 if x3 else 0),
                    (m1 if x1 else 0) ^ (m3 if x3 else 0),
                )
            )
        use_table = self.fast and d >= 1
        every = range(16)

        for node in nodes:
            H = node.H
            G = node.G
            T = node.T
            if use_table:
                r = (
                    ((T[0] ^ t0) >> d) & 1
                    | (((T[1] ^ t1) >> d) & 1) << 1
                    | (((T[2] ^ t2) >> d) & 1) << 2
                    | (((T[3] ^ t3) >> d) & 1) << 3
                )
                candidates = self._solutions(H, G)[r]
                if not candidates:
                    continue
                if cap is not None and width >= cap:
                    # children of distinct parents are distinct; just count
                    width += len(candidates)
                    continue
            else:
                candidates = every
            # (H p_phi^d) X  and  X^T (p_psi^d G)
            hp = [clmul(h, pf, mask) for h in H]
            gp = [clmul(g, pp, mask) for g in G]
            sa, sb, sc, sd = node.s
            for xi in candidates:
                x0, x1, x2, x3 = x = _XS[xi]
                q = quad[xi]
                n0, n1, n2, n3 = _x_update(T, hp, gp, x)
                n0 ^= q[0]
                n1 ^= q[1]
                n2 ^= q[2]
                n3 ^= q[3]
                if (((n0 ^ t0) | (n1 ^ t1) | (n2 ^ t2) | (n3 ^ t3)) >> d) & 1:
                    if use_table:
                        raise AssertionError("affine level check disagrees with full update")
                    continue
                s = (
                    sa | (bit if x0 else 0),
                    sb | (bit if x1 else 0),
                    sc | (bit if x2 else 0),
                    sd | (bit if x3 else 0),
                )
                if s in seen:
                    continue
                seen.add(s)
                width += 1
                if cap is not None and width > cap:
                    continue
                # H' = H + X^T wps ;  G' = G + wpf X
                h0, h1, h2, h3 = H
                g0, g1, g2, g3 = G
                if x0:
                    h0 ^= wps[0]
                    h1 ^= wps[1]
                    g0 ^= wpf[0]
                    g2 ^= wpf[2]
                if x1:
                    h2 ^= wps[0]
                    h3 ^= wps[1]
                    g1 ^= wpf[0]
                    g3 ^= wpf[2]
                if x2:
                    h0 ^= wps[2]
                    h1 ^= wps[3]
                    g0 ^= wpf[1]
                    g2 ^= wpf[3]
                if x3:
                    h2 ^= wps[2]
                    h3 ^= wps[3]
                    g1 ^= wpf[1]
                    g3 ^= wpf[3]
                out.append(_Node(s, (h0, h1, h2, h3), (g0, g1, g2, g3), (n0, n1, n2, n3)))
        return out, width


def extend_level(
    pub: PublicKey,
    live: Iterable[PartialSolution],
    cap: Optional[int] = DEFAULT_WIDTH_CAP,
    key_n: Optional[int] = None,
) -> Union[set[PartialSolution], WidthExceeded]:
    """Extend every partial solution at depth d to depth d + 1.

    Keeps the extensions whose product matches t at x^d.  ``key_n`` limits
    the degree of s (default: the ring order); above it only zero bits are
    tried.
    """
    live = sorted(set(live))
    if not live:
        return set()
    depths = {p.depth for p in live}
    if len(depths) != 1:
        raise ValueError("partial solutions have different depths")
    d = depths.pop()
    if d >= pub.n:
        raise ValueError(f"depth {d} already complete for n={pub.n}")
    ext = _Extender(pub, pub.n if key_n is None else key_n)
    nodes = [_node_from_partial(pub, p) for p in live]
    out, width = ext.extend(nodes, d, cap)
    if cap is not None and width > cap:
        return WidthExceeded(d + 1, width)
    return {PartialSolution(d + 1, *node.s) for node in out}


def tree_attack(pub: PublicKey, cfg: AttackConfig, fast: bool = True) -> AttackOutcome:
    """Walk all degrees 0..n-1 and report the first failure or the solutions.

    ``fast=False`` evaluates every one of the 16 children in full instead of
    resolving the affine level check by lookup; results are identical.
    """
    if cfg.ring_n != pub.n:
        raise ValueError(f"config expects ring order {cfg.ring_n}, public key has {pub.n}")
    start = time.perf_counter()
    n = pub.n
    zero = (0, 0, 0, 0)
    nodes = [_Node(zero, zero, zero, zero)]
    ext = _Extender(pub, cfg.n, fast)
    widths: list[int] = []
    for d in range(n):
        nodes, width = ext.extend(nodes, d, cfg.width_cap)
        widths.append(width)
        if cfg.width_cap is not None and width > cfg.width_cap:
            return AttackOutcome(
                OutcomeKind.WIDTH_EXCEEDED,
                widths,
                level=d + 1,
                width=width,
                millis=(time.perf_counter() - start) * 1e3,
            )
        if not nodes:
            return AttackOutcome(
                OutcomeKind.EXHAUSTED,
                widths,
                level=d + 1,
                width=0,
                millis=(time.perf_counter() - start) * 1e3,
            )
    sols = [Mat2.from_ints(n, *s) for s in sorted(node.s for node in nodes)]
    return AttackOutcome(
        OutcomeKind.FORGED,
        widths,
        level=n,
        width=len(sols),
        solution=sols[0],
        solutions=sols,
        millis=(time.perf_counter() - start) * 1e3,
    )


def forge_check(pub: PublicKey, s: Mat2) -> bool:
    if s.n != pub.n:
        raise ValueError("candidate has the wrong truncation order")
    return twist(pub.phi, pub.psi, pub.w, s) == pub.t


# --- exhaustive oracle -----------------------------------------------------


def _naive_mul(a: int, b: int, n: int) -> int:
    # schoolbook convolution on explicit coefficient lists
    ca = [(a >> i) & 1 for i in range(n)]
    cb = [(b >> i) & 1 for i in range(n)]
    out = 0
    for k in range(n):
        acc = 0
        for i in range(k + 1):
            acc ^= ca[i] & cb[k - i]
        out |= acc << k
    return out


def _naive_compose(q: int, p: int, n: int) -> int:
    out = 0
    power = 1
    for i in range(n):
        if (q >> i) & 1:
            out ^= power
        power = _naive_mul(power, p, n)
    return out


def _vmul(a, b, n: int):
    """Elementwise truncated carryless product of uint64 arrays."""
    r = np.zeros(np.broadcast(a, b).shape, dtype=np.uint64)
    for i in range(n):
        bit = (b >> np.uint64(i)) & np.uint64(1)
        r ^= (a << np.uint64(i)) * bit
    return r & np.uint64((1 << n) - 1)


def brute_force_solve(pub: PublicKey, key_n: Optional[int] = None) -> list[Mat2]:
    """All s with entries of degree < key_n satisfying the public relation.

    Enumerates 2^(4 key_n) candidates; refuses above 2^24.
    """
    n = pub.n
    key_n = n if key_n is None else key_n
    if 4 * key_n > BRUTE_FORCE_MAX_BITS:
        raise ValueError(f"brute force limited to 4*n <= {BRUTE_FORCE_MAX_BITS}, got n={key_n}")
    if n > 64:
        raise ValueError("brute force needs the ring to fit a machine word")
    size = 1 << key_n
    phi_tab = np.array([_naive_compose(q, pub.phi.p.value, n) for q in range(size)], dtype=np.uint64)
    psi_tab = np.array([_naive_compose(q, pub.psi.p.value, n) for q in range(size)], dtype=np.uint64)
    w = [np.uint64(v) for v in pub.w.ints()]
    t = pub.t.ints()

    idx = np.arange(1 << (4 * key_n), dtype=np.uint64)
    m = np.uint64(size - 1)
    k = np.uint64(key_n)
    a = idx & m
    b = (idx >> k) & m
    c = (idx >> (k + k)) & m
    d = (idx >> (k + k + k)) & m
    # psi(s^T) = [[psi a, psi c], [psi b, psi d]]
    la, lb, lc, ld = psi_tab[a], psi_tab[c], psi_tab[b], psi_tab[d]
    ra, rb, rc, rd = phi_tab[a], phi_tab[b], phi_tab[c], phi_tab[d]
    ha = _vmul(la, w[0], n) ^ _vmul(lb, w[2], n)
    hb = _vmul(la, w[1], n) ^ _vmul(lb, w[3], n)
    hc = _vmul(lc, w[0], n) ^ _vmul(ld, w[2], n)
    hd = _vmul(lc, w[1], n) ^ _vmul(ld, w[3], n)
    ok = (_vmul(ha, ra, n) ^ _vmul(hb, rc, n)) == np.uint64(t[0])
    ok &= (_vmul(ha, rb, n) ^ _vmul(hb, rd, n)) == np.uint64(t[1])
    ok &= (_vmul(hc, ra, n) ^ _vmul(hd, rc, n)) == np.uint64(t[2])
    ok &= (_vmul(hc, rb, n) ^ _vmul(hd, rd, n)) == np.uint64(t[3])
    hits = np.nonzero(ok)[0]
    return [Mat2.from_ints(n, int(a[i]), int(b[i]), int(c[i]), int(d[i])) for i in hits]


# --- forger and nonlinearity witness ---------------------------------------


class GuessingForger:
    """Prover without the key: guesses c and prepares only that branch.

    For a guess of 0 it commits to ``psi(r^T) t phi(r)``, for 1 to
    ``psi(r^T) w phi(r)``, and always answers with r.  A forged key from the
    attack can instead be used with the honest ``Prover``.
    """

    def __init__(self, pub: PublicKey):
        self.pub = pub
        self._r: Optional[Mat2] = None
        self.guess: Optional[int] = None

    def commit(self, rng=None) -> Commitment:
        rng = as_rng(rng)
        self.guess = rng.getrandbits(1)
        self._r = mat_random(self.pub.n, None, rng)
        middle = self.pub.t if self.guess == 0 else self.pub.w
        return Commitment(twist(self.pub.phi, self.pub.psi, middle, self._r))

    def respond(self, ch: Challenge) -> Response:
        return Response(self._r)


@dataclass(frozen=True)
class NonlinearityWitness:
    instance: AttackInstance
    p: PartialSolution
    q: PartialSolution
    residual_p: tuple
    residual_q: tuple
    residual_pq: tuple
    residual_zero: tuple


def find_nonlinearity(n: int, trials: int = 100, rng=None) -> Optional[NonlinearityWitness]:
    """Search for partial assignments where the residual map is not affine.

    An affine map satisfies r(p + q) = r(p) + r(q) + r(0); the first
    violation found is returned.
    """
    rng = as_rng(rng)
    for _ in range(trials):
        inst = planted_instance(n, rng=rng)
        depth = rng.randint(1, n)
        p, q = (PartialSolution(depth, *(rng.getrandbits(depth) for _ in range(4))) for _ in range(2))
        zero = PartialSolution(depth)
        rp, rq, rz = (residual_coeffs(inst.pub, x) for x in (p, q, zero))
        rpq = residual_coeffs(inst.pub, p.xor(q))
        if tuple(x ^ y ^ z for x, y, z in zip(rp, rq, rz)) != rpq:
            return NonlinearityWitness(inst, p, q, rp, rq, rpq, rz)
    return None
