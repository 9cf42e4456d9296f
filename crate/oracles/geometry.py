"""Reference values for hyperboloid geometry and tube quantities (mpmath/scipy)."""
import mpmath as mp
import numpy as np
from scipy.optimize import linprog

mp.mp.dps = 40


def mink(x, y):
    return -x[0] * y[0] + sum(a * b for a, b in zip(x[1:], y[1:]))


def cyl(R, theta, t):
    R, t = mp.mpf(R), mp.mpf(t)
    return [mp.cosh(R) * mp.cosh(t), mp.cosh(R) * mp.sinh(t)] + [mp.sinh(R) * mp.mpf(c) for c in theta]


def dist(x, y):
    return mp.acosh(-mink(x, y))


print("== distances")
th1 = [mp.mpf(3) / 5, mp.mpf(4) / 5, 0]
th2 = [0, 0, 1]
x = cyl("0.7", th1, "-0.4")
y = cyl("1.9", th2, "1.1")
print("dist_a", mp.nstr(dist(x, y), 20))
x = cyl("2.5", th1, "0.0")
y = cyl("2.5", [mp.mpf(4) / 5, -mp.mpf(3) / 5, 0], "0.3")
print("dist_b", mp.nstr(dist(x, y), 20))

print("== pure translation inj")
for R, ell in [("1.3", "0.05"), ("0.2", "0.001"), ("4.0", "0.0001")]:
    R, ell = mp.mpf(R), mp.mpf(ell)
    v = mp.acosh(mp.cosh(R) ** 2 * mp.cosh(ell) - mp.sinh(R) ** 2) / 2
    print("inj_translation", R, ell, mp.nstr(v, 20))

print("== margulis radius rot=I ell=0.01 mu=0.1")
f = lambda R: mp.acosh(mp.cosh(R) ** 2 * mp.cosh(mp.mpf("0.01")) - mp.sinh(R) ** 2) - mp.mpf("0.2")
print("R_mu", mp.nstr(mp.findroot(f, 2.9), 20))

print("== radial comparison sup")
g = np.linspace(2, 20, 200001)
print("sup_grid", np.max(np.sinh(g) / np.sinh(2) * np.exp(2 - g)), "closed", 1 / (1 - np.exp(-4)))

print("== rotation by pi, tiny ell, large R")
R, ell = mp.mpf(6), mp.mpf("1e-4")
x = cyl(R, [1, 0, 0], 0)
for k in (1, 2):
    s = (-1) ** k
    y = cyl(R, [s, 0, 0], k * ell)
    print("disp_pi", k, mp.nstr(dist(x, y), 20))


def inner_radius(ell, mu, angles, kmax=20000):
    """Inner boundary radius via bisection on the matrix-game value (scipy linprog)."""
    angles = np.array(angles, dtype=float)
    target = np.sinh(mu) ** 2

    def value(R):
        ch2, sh2 = np.cosh(R) ** 2, np.sinh(R) ** 2
        k = np.arange(1, kmax + 1)
        c = ch2 * np.sinh(k * ell / 2) ** 2
        M = c[:, None] + sh2 * np.sin(np.outer(k, angles) / 2) ** 2
        ub_row = M.max(axis=1).argmin()
        keep = c < M.max(axis=1).min()
        keep[ub_row] = True
        M = M[keep]
        J = len(angles)
        # variables w_1..w_J, t; maximize t: minimize -t
        cobj = np.zeros(J + 1); cobj[-1] = -1
        A = np.hstack([-M, np.ones((M.shape[0], 1))])
        res = linprog(cobj, A_ub=A, b_ub=np.zeros(M.shape[0]), A_eq=[[1] * J + [0]], b_eq=[1],
                      bounds=[(0, 1)] * J + [(None, None)], method="highs")
        return -res.fun

    lo, hi = 0.0, np.arccosh(np.sinh(mu) / np.sinh(ell / 2))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if value(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


print("== inner radius, mu=0.1")
for ell, angles in [(0.01, [0.9, 2.3]), (0.001, [2.0, 0.0]), (0.02, [np.pi / 2, np.pi]), (0.005, [0.3, 1.1, 2.9])]:
    print("inner", ell, angles, repr(inner_radius(ell, 0.1, angles)))
