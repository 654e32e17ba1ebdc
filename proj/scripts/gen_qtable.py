"""Regenerates the embedded Nemenyi q-table (studentized range at infinite df / sqrt(2))."""
import math
from scipy import integrate, optimize, stats


def range_cdf(q, k):
    # P(max - min of k iid N(0,1) <= q)
    f = lambda z: stats.norm.pdf(z) * (stats.norm.cdf(z + q) - stats.norm.cdf(z)) ** (k - 1)
    val, _ = integrate.quad(f, -12, 12, limit=400, epsabs=1e-14, epsrel=1e-13)
    return k * val


def q_alpha(k, alpha):
    q = optimize.brentq(lambda x: range_cdf(x, k) - (1 - alpha), 1e-6, 20, xtol=1e-14)
    return q / math.sqrt(2)


if __name__ == "__main__":
    for alpha in (0.05, 0.01):
        vals = [q_alpha(k, alpha) for k in range(2, 31)]
        print(alpha, ", ".join(f"{v:.10f}" for v in vals))
