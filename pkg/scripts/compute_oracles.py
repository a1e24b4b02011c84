"""Recompute the frozen reference values used by the test suite.

Every value here comes from a route independent of the package code:
direct double integrals, convolution integrals, series or closed forms.
Run it to print the values; tests/oracle_values.py stores them.
"""

import math

import numpy as np
from scipy import integrate, stats


def pareto2_convolution_tail(x: float) -> float:
    """P[R1 + R2 > x] for iid Pareto(2, 1), x > 2."""
    sf = lambda z: 1.0 if z < 1 else z**-2.0  # noqa: E731
    pdf = lambda r: 2.0 * r**-3.0  # noqa: E731
    inner, _ = integrate.quad(lambda r: pdf(r) * sf(x - r), 1.0, x - 1.0, limit=400, epsabs=0, epsrel=1e-12)
    return sf(x - 1.0) + inner


def fgm_spearman(theta: float) -> float:
    val, _ = integrate.dblquad(lambda v, u: u * v * theta * (1 - u) * (1 - v), 0, 1, 0, 1)
    return 12.0 * val


def breiman_uniform_fgm(theta: float, alpha: float) -> float:
    val, _ = integrate.quad(lambda t: t**alpha * (1 + theta * (2 * t - 1)), 0, 1, epsabs=0, epsrel=1e-13)
    return val


def mixture_tail_double_integral(theta: float, x: float) -> float:
    """P[Theta R > x] with Theta ~ U(0,1), R ~ Pareto(2,1), FGM density over (u, v)."""
    def inner(v):
        t = v
        if t <= 0:
            return 0.0
        u0 = 1.0 - min(1.0, (x / t) ** -2.0)  # R > x / t iff U > u0
        f = lambda u: 1.0 + theta * (1 - 2 * u) * (1 - 2 * v)  # noqa: E731
        return integrate.quad(f, u0, 1.0, epsabs=0, epsrel=1e-13)[0]
    return integrate.quad(inner, 0.0, 1.0, limit=400, epsabs=0, epsrel=1e-12)[0]


def campbell_cr(lam: float, t: float, kappa: float) -> float:
    val, _ = integrate.quad(lambda s: lam * math.exp(-kappa * s), 0, t, epsabs=0, epsrel=1e-13)
    return val


def fgm_poisson_constant_series(lam, t, kappa, theta, n_max=60):
    """Same constant by conditioning on the first gap and iterating the renewal equation numerically."""
    h = lambda s: 1 + theta * (1 - 2 * math.exp(-lam * s))  # noqa: E731
    g = lambda v: integrate.quad(lambda s: h(s) * math.exp(-kappa * s) * lam * math.exp(-lam * s), 0, v,  # noqa: E731
                                 epsabs=0, epsrel=1e-13)[0]
    conv = integrate.quad(lambda u: lam * math.exp(-kappa * u) * g(t - u), 0, t, epsabs=0, epsrel=1e-12)[0]
    return g(t) + conv


if __name__ == "__main__":
    x4 = math.sqrt(1000.0)
    print("pareto2 conv ratio at sqrt(1000):", repr(pareto2_convolution_tail(x4) / (2 * x4**-2)))
    for x in (100.0, 316.0, 1000.0):
        print(f"pareto2 conv ratio at {x}:", repr(pareto2_convolution_tail(x) / (2 * x**-2)))
    print("fgm spearman 0.9:", repr(fgm_spearman(0.9)))
    print("breiman U(0,1) fgm 0.6 alpha 2:", repr(breiman_uniform_fgm(0.6, 2.0)))
    b = breiman_uniform_fgm(0.6, 2.0)
    print("mixture tail ratio x=50:", repr(mixture_tail_double_integral(0.6, 50.0) / (b * 50.0**-2)))
    print("campbell C_r(1,1,1):", repr(campbell_cr(1.0, 1.0, 1.0)))
    print("C0 fgm 0.5 lam 2 t 3:", repr(fgm_poisson_constant_series(2.0, 3.0, 0.0, 0.5)))
    print("C_r canonical (1, 2, 0.2, 0.5):", repr(fgm_poisson_constant_series(1.0, 2.0, 0.2, 0.5)))
    print("poisson sf(3, 2.0):", repr(float(stats.poisson.sf(3, 2.0))))
    lx = np.log(1e6)
    print("log-pareto j- proxy:", repr(-math.log((1 + lx) / (1 + lx + 20 * math.log(2))) / (20 * math.log(2))))
