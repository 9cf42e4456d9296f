"""Check of the frame formulas for the connection Laplacian and the Bianchi
operator of the invariant tensor class on H^4 = dr^2 + sinh^2 r g_S2 +
cosh^2 r dt^2 against explicit coordinates. Christoffel symbols are symbolic
(sympy); the covariant derivatives of concrete test fields are evaluated with
high-precision numerical differentiation (mpmath). Prints residuals and the
frozen values used by the Rust tests."""
import mpmath as mp
import sympy as sp

mp.mp.dps = 40
rs, ts, as_, bs = sp.symbols('r t a b', real=True)
XS = [rs, ts, as_, bs]
gs = sp.diag(1, sp.cosh(rs)**2, sp.sinh(rs)**2, sp.sinh(rs)**2 * sp.sin(as_)**2)
gis = gs.inv()
N, d = 4, 2
GAM = [[[sp.lambdify(XS, sp.simplify(sum(gis[k, l] * (sp.diff(gs[l, i], XS[j]) + sp.diff(gs[l, j], XS[i]) - sp.diff(gs[i, j], XS[l]))
                                        for l in range(N)) / 2), 'mpmath') for j in range(N)] for i in range(N)] for k in range(N)]
GINV = [sp.lambdify(XS, gis[i, i], 'mpmath') for i in range(N)]


def h_tensor(fld, x):
    p, q, w, c = (f(x[0], x[1]) for f in fld)
    sh, ch = mp.sinh(x[0]), mp.cosh(x[0])
    h = mp.zeros(4, 4)
    h[0, 0] = p
    h[0, 1] = h[1, 0] = c
    h[1, 1] = w * ch**2
    h[2, 2] = q * sh**2
    h[3, 3] = q * sh**2 * mp.sin(x[2])**2
    return h


def partial(fun, x, a_):
    def f1(s):
        y = list(x)
        y[a_] = s
        return fun(y)
    return mp.diff(f1, x[a_])


def cov1(fld, x, a_, b_, c_):
    v = partial(lambda y: h_tensor(fld, y)[b_, c_], x, a_)
    h = h_tensor(fld, x)
    return v - sum(GAM[e][a_][b_](*x) * h[e, c_] + GAM[e][a_][c_](*x) * h[b_, e] for e in range(N))


def lap(fld, x, c_, d_):
    s = 0
    for a_ in range(N):
        v = partial(lambda y: cov1(fld, y, a_, c_, d_), x, a_)
        v -= sum(GAM[e][a_][a_](*x) * cov1(fld, x, e, c_, d_) + GAM[e][a_][c_](*x) * cov1(fld, x, a_, e, d_)
                 + GAM[e][a_][d_](*x) * cov1(fld, x, a_, c_, e) for e in range(N))
        s += GINV[a_](*x) * v
    return -s


def beta(fld, x, k_):
    def tr(y):
        h = h_tensor(fld, y)
        return sum(GINV[i](*y) * h[i, i] for i in range(N))
    return -sum(GINV[i](*x) * cov1(fld, x, i, i, k_) for i in range(N)) + partial(tr, x, k_) / 2


def frame(fld, x):
    r, t = x[0], x[1]
    T, K, sech = mp.tanh(r), 1 / mp.tanh(r), 1 / mp.cosh(r)
    p, q, w, c = fld
    ct = lambda r_, t_: c(r_, t_) / mp.cosh(r_)
    D = lambda f, n_r=0, n_t=0: mp.diff(f, (r, t), (n_r, n_t))
    At = sech * D(p, 0, 1) - 2 * T * ct(r, t)
    Bt = sech * D(ct, 0, 1) + T * (p(r, t) - w(r, t))
    Ct = sech * D(w, 0, 1) + 2 * T * ct(r, t)
    dAt = sech * D(p, 0, 2) - 2 * T * D(ct, 0, 1)
    dBt = sech * D(ct, 0, 2) + T * (D(p, 0, 1) - D(w, 0, 1))
    dCt = sech * D(w, 0, 2) + 2 * T * D(ct, 0, 1)
    rad = lambda f: D(f, 2, 0) + (d * K + T) * D(f, 1, 0)
    pq = p(r, t) - q(r, t)
    Lp = -rad(p) - sech * dAt + 2 * T * Bt + 2 * d * K**2 * pq
    Lc = -rad(ct) - T * At - sech * dBt + T * Ct + d * K**2 * ct(r, t)
    Lw = -rad(w) - 2 * T * Bt - sech * dCt
    Lq = -rad(q) - sech**2 * D(q, 0, 2) - 2 * K**2 * pq
    trf = lambda r_, t_: p(r_, t_) + w(r_, t_) + d * q(r_, t_)
    br = -D(p, 1, 0) - Bt - d * K * pq + D(trf, 1, 0) / 2
    bt = -D(ct, 1, 0) - Ct - d * K * ct(r, t) + sech * D(trf, 0, 1) / 2
    return [Lp, Lc, Lw, Lq], [br, bt]


E = mp.e
FIELD_F = (
    lambda r, t: mp.exp(-(r - 1)**2) * (1 + mp.mpf(3) / 10 * mp.sin(t)),
    lambda r, t: mp.exp(-(r - 1)**2) * (1 - mp.mpf(1) / 5 * mp.cos(t)) / 2,
    lambda r, t: -mp.exp(-2 * (r - 1)**2) * (1 + mp.sin(2 * t) / 4),
    lambda r, t: r * mp.exp(-(r - 1)**2) * mp.cos(t) / 3,
)
FIELD_G = (
    lambda r, t: mp.cos(r) * mp.sin(2 * t),
    lambda r, t: r**2 * mp.cos(t),
    lambda r, t: mp.exp(r) * mp.sin(t)**2,
    lambda r, t: mp.sin(3 * r + t),
)
PTS = [[mp.mpf(6) / 5, mp.mpf(7) / 10, mp.mpf(1), mp.mpf(0)],
       [mp.mpf(5) / 2, mp.mpf(-3) / 2, mp.mpf(1) / 3, mp.mpf(0)]]

for name, fld in [('F', FIELD_F), ('G', FIELD_G)]:
    for x in PTS:
        ch, sh = mp.cosh(x[0]), mp.sinh(x[0])
        coord = [lap(fld, x, 0, 0), lap(fld, x, 0, 1) / ch, lap(fld, x, 1, 1) / ch**2, lap(fld, x, 2, 2) / sh**2]
        lf, bf = frame(fld, x)
        res = max(abs(u - v) for u, v in zip(coord, lf))
        res = max(res, abs(lap(fld, x, 3, 3) / (sh**2 * mp.sin(x[2])**2) - lf[3]))
        res = max(res, max(abs(lap(fld, x, i, j)) for i, j in [(0, 2), (1, 3), (2, 3)]))
        bc = [beta(fld, x, k) for k in range(4)]
        bres = max(abs(bc[0] - bf[0]), abs(bc[1] / ch - bf[1]), abs(bc[2]), abs(bc[3]))
        print('field', name, 'laplacian residual', mp.nstr(res, 5), 'bianchi residual', mp.nstr(bres, 5))
        if name == 'F' and x is PTS[0]:
            for label, v in zip(['p', 'c_frame', 'w', 'q'], coord):
                print('frozen lap', label, mp.nstr(v, 20))
            print('frozen beta r', mp.nstr(bc[0], 20))
            print('frozen beta t_frame', mp.nstr(bc[1] / ch, 20))
