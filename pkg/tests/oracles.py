"""Independent reference computations on explicit coefficient lists."""

from twistconj.f2poly import TruncPoly


def coeffs(p: TruncPoly) -> list[int]:
    return list(p.bits)


def naive_mul(a: list[int], b: list[int]) -> list[int]:
    n = len(a)
    out = [0] * n
    for i in range(n):
        for j in range(n - i):
            out[i + j] ^= a[i] & b[j]
    return out


def naive_compose(f: list[int], g: list[int]) -> list[int]:
    n = len(f)
    out = [0] * n
    power = [1] + [0] * (n - 1)
    for i in range(n):
        if f[i]:
            out = [x ^ y for x, y in zip(out, power)]
        power = naive_mul(power, g)
    return out


def naive_matmul(A, B):
    """A, B are 2x2 nested lists of coefficient lists."""
    n = len(A[0][0])
    C = [[[0] * n for _ in range(2)] for _ in range(2)]
    for i in range(2):
        for j in range(2):
            for k in range(2):
                prod = naive_mul(A[i][k], B[k][j])
                C[i][j] = [x ^ y for x, y in zip(C[i][j], prod)]
    return C


def mat_lists(m):
    return [[coeffs(m.a), coeffs(m.b)], [coeffs(m.c), coeffs(m.d)]]


def naive_twist(phi_p, psi_p, w, x):
    """psi(x^T) w phi(x) on coefficient lists."""
    X = mat_lists(x)
    left = [[naive_compose(X[j][i], psi_p) for j in range(2)] for i in range(2)]
    right = [[naive_compose(X[i][j], phi_p) for j in range(2)] for i in range(2)]
    return naive_matmul(naive_matmul(left, mat_lists(w)), right)
