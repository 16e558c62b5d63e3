"""Independent reference values frozen into the C++ tests.

Run: python3 tools/oracles.py
Uses mpmath (50 digits) and numpy/scipy only; shares no code with the library.
"""
import numpy as np
import scipy.linalg as sla
from mpmath import mp, mpf, pi, sqrt, log, exp, ceil, lambertw, nsum, inf, findroot

mp.dps = 50


def lam(l):
    return 1 / (pi**2 * (l - mpf(1) / 2) ** 2)


def gap(l):
    if l == 1:
        return lam(1) - lam(2)
    return min(lam(l - 1) - lam(l), lam(l) - lam(l + 1))


def galerkin_1d(n, k):
    h = 1.0 / n
    x = np.linspace(0, 1, n + 1)
    sigma = np.minimum.outer(x, x)
    g = np.zeros((n + 1, n + 1))
    for e in range(n):
        g[e:e + 2, e:e + 2] += h / 6 * np.array([[2, 1], [1, 2]])
    s = g @ sigma @ g
    w = sla.eigh(s, g, eigvals_only=True)
    return sorted(w, reverse=True)[:k]


def e1(L):
    return sqrt(nsum(lambda l: lam(l) ** 2, [L + 1, inf]))


def h_of_l(L):
    return (min(gap(l) for l in range(1, L + 1)) / 48) ** 2


def g_of_l(L):
    return sqrt(sum((lam(l) / gap(l)) ** 2 for l in range(1, L + 1)))


def p0(Q, tau, M, L, rho1=1, lmax=1):
    d = min(gap(l) for l in range(1, L + 1))
    v = 1 - 2 * Q * mpf(5) ** tau * exp(-M * rho1 * (d / (48 * lmax)) ** 2)
    return max(mpf(0), min(mpf(1), v))


def m_bar(eps, L, alpha=1):
    p = 2 * alpha + 1
    c = h_of_l(L)
    K = log(L) / 2 - log(eps)
    f = lambda m: K + log(m) / p - c * m
    # decreasing for m > 1/(p c); root past the maximum
    root = findroot(f, (1 / (p * c), mpf(10) ** 15), solver="anderson")
    return int(ceil(root))


def m_prime(eps, L, alpha=1):
    p = 2 * alpha + 1
    c = h_of_l(L)
    K = log(L) / 2 - log(eps)
    f = lambda m: K - c * m + m ** (mpf(1) / p)
    root = findroot(f, (mpf(1), mpf(10) ** 15), solver="anderson")
    return int(ceil(root))


def lambert_m(eps, L, alpha=1):
    p = 2 * alpha + 1
    c = h_of_l(L)
    a = sqrt(L) / eps
    z = -p * c * a ** (-p)
    return -lambertw(z, -1).real / (p * c)


def e2_1d(n, L, q=2):
    """||R^L - R^(L;h)|| by the composite q-point Gauss rule, dense."""
    h = 1.0 / n
    x = np.linspace(0, 1, n + 1)
    g = np.zeros((n + 1, n + 1))
    for e in range(n):
        g[e:e + 2, e:e + 2] += h / 6 * np.array([[2, 1], [1, 2]])
    s = g @ np.minimum.outer(x, x) @ g
    w, v = sla.eigh(s, g)
    order = np.argsort(w)[::-1][:L]
    w, v = w[order], v[:, order]
    gx, gw = np.polynomial.legendre.leggauss(q)
    gx, gw = (gx + 1) / 2, gw / 2
    pts = np.concatenate([e * h + h * gx for e in range(n)])
    wts = np.concatenate([h * gw for _ in range(n)])
    theta = np.maximum(0, 1 - np.abs(pts[:, None] - x[None, :]) / h)
    phi_h = theta @ v
    phi = np.array([[np.sqrt(2) * np.sin((l - 0.5) * np.pi * t) for l in range(1, L + 1)] for t in pts])
    # align signs
    for l in range(L):
        if np.dot(wts * phi[:, l], phi_h[:, l]) < 0:
            phi_h[:, l] *= -1
    lam_ex = np.array([float(lam(l)) for l in range(1, L + 1)])
    k_ex = (phi * lam_ex) @ phi.T
    k_h = (phi_h * w) @ phi_h.T
    diff = k_ex - k_h
    return float(np.sqrt(wts @ (diff**2) @ wts))


def main():
    print("lambda_1 =", lam(1), " 4/pi^2 =", 4 / pi**2)
    print("lambda_2 =", lam(2))
    print("delta_1 =", gap(1), " lambda_1/delta_1 =", lam(1) / gap(1))
    print("delta_3 =", gap(3))
    for n in (8, 16, 128):
        print(f"galerkin n={n}:", [repr(v) for v in galerkin_1d(n, 3)])
    for L in (1, 2, 5, 32):
        print(f"e1({L}) =", e1(L))
    print("||R||^2 1D =", nsum(lambda l: lam(l) ** 2, [1, inf]))
    for L in (1, 3, 5):
        print(f"G({L}) =", g_of_l(L), f" H({L}) =", h_of_l(L))
    print("p0(Q=33,tau=4,M=3e5,L=1) =", p0(33, 4, 300000, 1))
    print("p0(Q=33,tau=4,M=2e5,L=1) =", p0(33, 4, 200000, 1))
    print("p0(Q=65,tau=6,M=1e6,L=3) =", p0(65, 6, 10**6, 3))
    for eps in (0.5, 0.1, 0.01):
        print(f"L_eps({eps}) =", int(ceil(mpf(eps) ** (mpf(-2) / 3))))
    for eps, L in ((0.1, 5), (0.2, 3)):
        print(f"M_bar(eps={eps}, L={L}) =", m_bar(eps, L))
        print(f"M_prime(eps={eps}, L={L}) =", m_prime(eps, L))
        print(f"lambert M(eps={eps}, L={L}) =", lambert_m(eps, L))
    print("W_-1(-0.1) =", lambertw(-0.1, -1))
    print("W_-1(-1e-6) =", lambertw(mpf("-1e-6"), -1))
    print("e2(n=8, L=2) =", repr(e2_1d(8, 2)))
    print("e2(n=16, L=3) =", repr(e2_1d(16, 3)))
    # 2D sheet: lambda = 16 / (pi^4 m^2), m odd product
    print("sheet lambda_1 =", 16 / pi**4, " lambda_2 =", 16 / (pi**4 * 9), " lambda_4 =", 16 / (pi**4 * 25))
    print("||R||^2 2D =", mpf(1) / 36)


if __name__ == "__main__":
    main()
