import random

import pytest

from oracles import naive_twist
from twistconj.attack import (
    AttackConfig,
    OutcomeKind,
    PartialSolution,
    WidthExceeded,
    brute_force_solve,
    extend_level,
    find_nonlinearity,
    forge_check,
    planted_instance,
    residual_coeffs,
    tree_attack,
)
from twistconj.matsemi import Mat2, mat_random
from twistconj.protocol import Prover, PrivateKey, PublicKey, SessionConfig, keygen, run_session


def prefix(m: Mat2, depth: int) -> PartialSolution:
    low = (1 << depth) - 1
    return PartialSolution(depth, *(v & low for v in m.ints()))


def test_residual_planted_is_zero():
    rng = random.Random(0)
    for n in (1, 3, 8):
        inst = planted_instance(n, rng=rng)
        for depth in range(1, n + 1):
            assert residual_coeffs(inst.pub, prefix(inst.planted.s, depth)) == (0, 0, 0, 0)


def test_residual_n1_zero_assignment():
    pub, _ = keygen(1, random.Random(0))
    assert pub.t == Mat2.zero(1)
    assert residual_coeffs(pub, PartialSolution(1)) == (0, 0, 0, 0)
    # brute-force oracle at n = 1: s = 0 satisfies psi(s^T) w phi(s) = 0 = t
    assert Mat2.zero(1) in brute_force_solve(pub)


def test_residual_range():
    pub, _ = keygen(3, random.Random(0))
    with pytest.raises(ValueError):
        residual_coeffs(pub, PartialSolution(0))
    with pytest.raises(ValueError):
        residual_coeffs(pub, PartialSolution(4))


def test_residual_triangular():
    # flipping a bit at degree k leaves every residual below degree k alone
    rng = random.Random(1)
    for _ in range(50):
        n = rng.randint(2, 10)
        inst = planted_instance(n, rng=rng)
        full = PartialSolution(n, *inst.planted.s.ints())
        k = rng.randrange(n)
        ints = list(full.ints())
        ints[rng.randrange(4)] ^= 1 << k
        flipped = PartialSolution(n, *ints)
        low = (1 << k) - 1
        for depth in range(1, k + 1):
            a = PartialSolution(depth, *(v & ((1 << depth) - 1) for v in full.ints()))
            b = PartialSolution(depth, *(v & ((1 << depth) - 1) for v in flipped.ints()))
            assert a == b or low == 0
            assert residual_coeffs(inst.pub, a) == residual_coeffs(inst.pub, b)


def test_extend_level_empty_and_planted():
    rng = random.Random(2)
    inst = planted_instance(6, rng=rng)
    assert extend_level(inst.pub, []) == set()
    for depth in range(6):
        out = extend_level(inst.pub, [prefix(inst.planted.s, depth)], cap=None)
        assert prefix(inst.planted.s, depth + 1) in out


def test_extend_level_matches_residuals():
    rng = random.Random(3)
    for _ in range(20):
        n = rng.randint(2, 7)
        inst = planted_instance(n, rng=rng)
        depth = rng.randrange(n)
        live = {prefix(inst.planted.s, depth)}
        live |= {PartialSolution(depth, *(rng.getrandbits(depth) for _ in range(4))) for _ in range(3)}
        got = extend_level(inst.pub, live, cap=None)
        want = set()
        for p in live:
            for m in range(16):
                child = PartialSolution(
                    depth + 1, *(v | (((m >> i) & 1) << depth) for i, v in enumerate(p.ints()))
                )
                if residual_coeffs(inst.pub, child) == (0, 0, 0, 0):
                    want.add(child)
        assert got == want


def test_extend_level_width_exceeded():
    inst = planted_instance(6, rng=random.Random(4))
    out = extend_level(inst.pub, [PartialSolution(0)], cap=1)
    assert isinstance(out, WidthExceeded)
    assert out.level == 1 and out.width == 4


def test_extend_level_mixed_depths():
    inst = planted_instance(4, rng=random.Random(4))
    with pytest.raises(ValueError):
        extend_level(inst.pub, [PartialSolution(1), PartialSolution(2)])


def test_n4_unbounded_all_forge():
    rng = random.Random(5)
    for _ in range(10):
        inst = planted_instance(4, rng=rng)
        out = tree_attack(inst.pub, AttackConfig(n=4, width_cap=None))
        assert out.kind is OutcomeKind.FORGED
        assert all(forge_check(inst.pub, s) for s in out.solutions)
        assert inst.planted.s in out.solutions
        assert {s.ints() for s in out.solutions} == {s.ints() for s in brute_force_solve(inst.pub)}


def test_cap_one_n8_distribution():
    rng = random.Random(6)
    kinds = [tree_attack(planted_instance(8, rng=rng).pub, AttackConfig(n=8, width_cap=1)).kind for _ in range(30)]
    # level 0 alone admits four constant-term matrices, so cap 1 always trips
    assert all(k is OutcomeKind.WIDTH_EXCEEDED for k in kinds)


def test_fast_and_full_paths_agree():
    rng = random.Random(7)
    for n, endo_n, mode in [(5, None, "reduce"), (16, None, "reduce"), (12, 18, "extend"), (12, 18, "reduce")]:
        for _ in range(8):
            inst = planted_instance(n, endo_n, rng, mode)
            cfg = AttackConfig(n=n, endo_n=endo_n, width_cap=2048, endo_mode=mode)
            a = tree_attack(inst.pub, cfg)
            b = tree_attack(inst.pub, cfg, fast=False)
            assert (a.kind, a.widths, a.solutions) == (b.kind, b.widths, b.solutions)


def test_width_profile_sanity():
    rng = random.Random(8)
    for n in (3, 10, 30):
        out = tree_attack(planted_instance(n, rng=rng).pub, AttackConfig(n=n, width_cap=256))
        assert all(isinstance(w, int) and w >= 0 for w in out.widths)
        assert out.level <= n and len(out.widths) == out.level


def test_extend_mode_oracle():
    # ring of order 5, unknown entries of degree < 3
    rng = random.Random(9)
    for _ in range(10):
        inst = planted_instance(3, 5, rng, "extend")
        out = tree_attack(inst.pub, AttackConfig(n=3, endo_n=5, width_cap=None, endo_mode="extend"))
        bf = brute_force_solve(inst.pub, key_n=3)
        assert {s.ints() for s in out.solutions} == {s.ints() for s in bf}
        assert inst.planted.s in bf


def test_config_must_match_key():
    inst = planted_instance(4, rng=random.Random(0))
    with pytest.raises(ValueError):
        tree_attack(inst.pub, AttackConfig(n=5))
    with pytest.raises(ValueError):
        AttackConfig(n=4, width_cap=0)


def test_brute_force_refuses_large():
    pub, _ = keygen(7, random.Random(0))
    with pytest.raises(ValueError):
        brute_force_solve(pub)


def test_brute_force_matches_naive_relation():
    rng = random.Random(10)
    inst = planted_instance(3, rng=rng)
    pub = inst.pub
    sols = brute_force_solve(pub)
    t_lists = naive_twist(list(pub.phi.p.bits), list(pub.psi.p.bits), pub.w, inst.planted.s)
    for s in sols:
        assert naive_twist(list(pub.phi.p.bits), list(pub.psi.p.bits), pub.w, s) == t_lists
    count = sum(
        naive_twist(list(pub.phi.p.bits), list(pub.psi.p.bits), pub.w, Mat2.from_ints(3, a, b, c, d)) == t_lists
        for a in range(8) for b in range(8) for c in range(8) for d in range(8)
    )
    assert count == len(sols)


def test_perturbed_t_frequency():
    # flipping the constant of t[0][0]: 22 of these 40 instances lose every solution
    rng = random.Random(11)
    empty = 0
    for _ in range(40):
        inst = planted_instance(3, rng=rng)
        pub = inst.pub
        t = Mat2.from_ints(3, *((v ^ 1) if i == 0 else v for i, v in enumerate(pub.t.ints())))
        bad = PublicKey(pub.phi, pub.psi, pub.w, t)
        bf = brute_force_solve(bad)
        empty += not bf
        out = tree_attack(bad, AttackConfig(n=3, width_cap=None))
        assert {m.ints() for m in out.solutions} == {m.ints() for m in bf}
    assert empty == 22


def test_forge_check():
    rng = random.Random(12)
    inst = planted_instance(100, rng=rng)
    assert forge_check(inst.pub, inst.planted.s)
    assert sum(forge_check(inst.pub, mat_random(100, None, rng)) for _ in range(1000)) == 0


def test_forged_key_authenticates():
    rng = random.Random(13)
    inst = planted_instance(4, rng=rng)
    out = tree_attack(inst.pub, AttackConfig(n=4, width_cap=None))
    for s in out.solutions[:5]:
        _, verdict = run_session(inst.pub, PrivateKey(s), SessionConfig(20, 4), rng)
        assert verdict
    assert Prover(inst.pub, PrivateKey(out.solution))


def test_nonlinearity_witness():
    w = find_nonlinearity(6, trials=100, rng=random.Random(14))
    assert w is not None
    xor = tuple(a ^ b ^ c for a, b, c in zip(w.residual_p, w.residual_q, w.residual_zero))
    assert xor != w.residual_pq
