"""Independent reference values for the spectral checks.

Run: python3 oracles/spectral.py
"""
import math

import mpmath as mp
import numpy as np
import scipy.linalg as sl

mp.mp.dps = 30


def gap_constants(n):
    lam0 = max(n - 2, (n - 1) ** 2 / 4 - 2)
    lo = ((n + 1) // 2) / 2
    beta = 0.5 * (lo + math.sqrt(lam0))
    return lam0, beta


def smoothstep(x):
    x = min(max(x, 0), 1)
    return x * x * (3 - 2 * x)


def dsmoothstep(x):
    if x <= 0 or x >= 1:
        return 0
    return 6 * x * (1 - x)


def rayleigh(n, u, du, a, b, breaks):
    w = lambda r: mp.sinh(r) ** (n - 2) * mp.cosh(r)
    pts = [a] + breaks + [b]
    num = mp.quad(lambda r: w(r) * du(r) ** 2, pts)
    den = mp.quad(lambda r: w(r) * u(r) ** 2, pts)
    return num / den


def bump_36():
    u = lambda r: smoothstep((r - 3) / 1.5) * smoothstep((6 - r) / 1.5)
    du = lambda r: (dsmoothstep((r - 3) / 1.5) * smoothstep((6 - r) / 1.5)
                    - smoothstep((r - 3) / 1.5) * dsmoothstep((6 - r) / 1.5)) / 1.5
    return u, du


def tail(n, lo, hi, ramp):
    a = (n - 1) / 2

    def f(r):
        if r <= lo or r >= hi:
            return mp.mpf(0)
        if r < lo + ramp:
            return mp.sin(mp.pi * (r - lo) / (2 * ramp)) ** 2
        if r > hi - ramp:
            return mp.sin(mp.pi * (hi - r) / (2 * ramp)) ** 2
        return mp.mpf(1)

    def df(r):
        if r <= lo or r >= hi or lo + ramp <= r <= hi - ramp:
            return mp.mpf(0)
        if r < lo + ramp:
            s = mp.pi * (r - lo) / (2 * ramp)
            return mp.pi / ramp * mp.sin(s) * mp.cos(s)
        s = mp.pi * (hi - r) / (2 * ramp)
        return -mp.pi / ramp * mp.sin(s) * mp.cos(s)

    u = lambda r: mp.exp(-a * r) * f(r)
    du = lambda r: mp.exp(-a * r) * (df(r) - a * f(r))
    return u, du


def mode_block(n, r0, r1, nr, k):
    """Staggered quadratic form of 2L (energy, mass) for one Fourier symbol k,
    with p, q, w real and the frame cross term in quadrature."""
    d = n - 2
    r = np.linspace(r0, r1, nr)
    dr = r[1] - r[0]
    ri = r[1:-1]
    m = nr - 2
    wv = lambda x: np.sinh(x) ** d * np.cosh(x)
    E = np.zeros((4 * m, 4 * m))
    M = np.zeros((4 * m, 4 * m))
    sl_ = lambda c: slice(c * m, (c + 1) * m)
    D = np.zeros((m + 1, m))
    for j in range(m + 1):
        if j < m:
            D[j, j] += 1 / dr
        if j >= 1:
            D[j, j - 1] -= 1 / dr
    rm = 0.5 * (r[:-1] + r[1:])
    Wm = np.diag(wv(rm) * dr)
    mult = [1, d, 1, 2]
    for c in range(4):
        E[sl_(c), sl_(c)] += mult[c] * D.T @ Wm @ D
    W = np.diag(wv(ri) * dr)
    T, S, K = np.tanh(ri), 1 / np.cosh(ri), 1 / np.tanh(ri)
    one = np.ones(m)

    def lin(coefs):
        L = np.zeros((m, 4 * m))
        for c, v in coefs.items():
            L[:, sl_(c)] += np.diag(v)
        return L

    # components: 0 p, 1 q, 2 w, 3 c
    terms = [
        (1, lin({0: S * k, 3: -2 * T})),
        (2, lin({3: -S * k, 0: T, 2: -T})),
        (1, lin({2: S * k, 3: 2 * T})),
        (d, lin({1: S * k})),
        (2 * d, lin({0: K, 1: -K})),
        (2 * d, lin({3: K})),
        (-2, lin({0: one})), (-2 * d, lin({1: one})), (-2, lin({2: one})), (-4, lin({3: one})),
        (2, lin({0: one, 1: d * one, 2: one})),
    ]
    for mu, L in terms:
        E += mu * L.T @ W @ L
    for c in range(4):
        M[sl_(c), sl_(c)] += mult[c] * W
    return E, M


def conditioning(n, r0, r1, nr, t_len, nt):
    best = []
    for mm in range(nt // 2 + 1):
        k = 2 * math.pi * mm / t_len
        if nt % 2 == 0 and mm == nt // 2:
            k = 0.0
        E, M = mode_block(n, r0, r1, nr, k)
        best.append(sl.eigh(E, M, eigvals_only=True, subset_by_index=[0, 0])[0])
    return min(best), best


if __name__ == "__main__":
    for n in (4, 5, 13):
        lam0, beta = gap_constants(n)
        print(f"n={n} lambda0={lam0} beta={beta!r}")
    assert all(2 * math.sqrt(gap_constants(n)[0]) > (n + 1) // 2 for n in range(4, 65))
    u, du = bump_36()
    print("rayleigh smoothstep bump [3,6] n=4:", mp.nstr(rayleigh(4, u, du, 3, 6, [4.5]), 20))
    u, du = tail(4, 1.0, 25.0, 3.0)
    print("rayleigh tail n=4 on [1,25] ramp 3:", mp.nstr(rayleigh(4, u, du, 1, 25, [4, 22]), 20))
    for n in (4, 5):
        lam, per = conditioning(n, 0.5, 6.0, 177, 1.0, 8)
        print(f"conditioning n={n} [0.5,6] nr=177 t_len=1 nt=8: {lam!r} modes {per}")
