"""Closed-form reference spectra and bounds for the square, disk, equilateral
triangle and angular sectors.

Square and triangle eigenvalues are elementary; the disk and sector spectra
are squares of Bessel-function zeros.  Nodal-domain counts of the low
eigenfunctions are tabulated statically and turn into upper bounds for the
lowest k-nodal eigenvalue.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

NU_MAX = 60.0
X_MAX = 200.0


@dataclass(frozen=True)
class ReferenceEigenvalue:
    value: float
    m: int
    n: int
    multiplicity: int


@dataclass(frozen=True)
class BoundsRecord:
    """Explicit lower/upper bounds for the optimal p-energy of a k-partition."""

    domain: str
    k: int
    p: float
    lower: float
    upper: float
    upper_source: str


# Nodal-domain counts mu(u_k) of the first ten Dirichlet eigenfunctions.
# Static data; the smallest eigenvalue whose count equals k is an upper bound
# for the lowest eigenvalue admitting a k-nodal eigenfunction.
MU_COUNTS = {
    "square":   (1, 2, 2, 4, 3, 3, 4, 4, 4, 4),
    "disk":     (1, 2, 2, 4, 4, 2, 6, 6, 4, 4),
    "triangle": (1, 2, 2, 4, 4, 3, 4, 4, 4, 4),
}


def bessel_j(nu: float, x: float) -> float:
    """Bessel function of the first kind J_nu(x), real order nu in [0, 60],
    x in [0, 200]."""
    if not 0.0 <= nu <= NU_MAX:
        raise ValueError(f"order {nu} outside supported range [0, {NU_MAX}]")
    if not 0.0 <= x <= X_MAX:
        raise ValueError(f"argument {x} outside supported range [0, {X_MAX}]")
    return float(jv(nu, x))


def _mcmahon(nu: float, n: int) -> float:
    """McMahon asymptotic estimate of the n-th positive zero of J_nu."""
    beta = (n + 0.5 * nu - 0.25) * math.pi
    mu = 4.0 * nu * nu
    return (beta - (mu - 1.0) / (8.0 * beta)
            - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * beta) ** 3))


@functools.lru_cache(maxsize=4096)
def bessel_zero(nu: float, n: int) -> float:
    """n-th positive zero of J_nu by sign-change bracketing plus Brent
    refinement; absolute accuracy ~1e-12 within the supported range."""
    if n < 1:
        raise ValueError("zero index must be >= 1")
    if not 0.0 <= nu <= NU_MAX:
        raise ValueError(f"order {nu} outside supported range [0, {NU_MAX}]")
    first_bound = nu + 2.0 * nu ** (1.0 / 3.0) + 2.0
    limit = min(X_MAX, max(_mcmahon(nu, n), first_bound) + 4.0 * math.pi)
    # J_nu > 0 on (0, j_{nu,1}); start the scan right of the turning point.
    x = max(1e-6, nu + 0.9 * 1.8557571 * nu ** (1.0 / 3.0)) if nu > 0 else 1e-6
    step = 0.5
    found = 0
    f_prev = jv(nu, x)
    while x < limit:
        x_next = x + step
        f_next = jv(nu, x_next)
        if f_prev == 0.0:
            found += 1
            if found == n:
                return x
        elif f_prev * f_next < 0.0:
            found += 1
            if found == n:
                root = brentq(lambda t: jv(nu, t), x, x_next,
                              xtol=1e-13, rtol=8.9e-16)
                return float(root)
        x, f_prev = x_next, f_next
    raise ValueError(
        f"zero {n} of J_{nu} not bracketed below x = {limit:.1f}")


def square_spectrum(count: int) -> list[ReferenceEigenvalue]:
    """First `count` Dirichlet eigenvalues of the unit square:
    pi^2 (m^2 + n^2), m, n >= 1, expanded with multiplicity."""
    if count < 1:
        raise ValueError("count must be >= 1")
    mmax = int(math.isqrt(2 * count)) + 3
    entries = []
    for m in range(1, mmax + 1):
        for n in range(m, mmax + 1):
            value = math.pi ** 2 * (m * m + n * n)
            mult = 1 if m == n else 2
            for _ in range(mult):
                entries.append(ReferenceEigenvalue(value, m, n, mult))
    entries.sort(key=lambda e: (e.value, e.m))
    return entries[:count]


def triangle_spectrum(count: int) -> list[ReferenceEigenvalue]:
    """First `count` Dirichlet eigenvalues of the unit equilateral triangle:
    (16/9) pi^2 (m^2 + mn + n^2), m, n >= 1, multiplicity 2 when m != n."""
    if count < 1:
        raise ValueError("count must be >= 1")
    mmax = int(math.isqrt(count)) + 4
    entries = []
    for m in range(1, mmax + 1):
        for n in range(m, mmax + 1):
            value = 16.0 / 9.0 * math.pi ** 2 * (m * m + m * n + n * n)
            mult = 1 if m == n else 2
            for _ in range(mult):
                entries.append(ReferenceEigenvalue(value, m, n, mult))
    entries.sort(key=lambda e: (e.value, e.m))
    return entries[:count]


def disk_spectrum(count: int) -> list[ReferenceEigenvalue]:
    """First `count` Dirichlet eigenvalues of the unit disk: squares of the
    Bessel zeros j_{m,n}, multiplicity 2 for m >= 1."""
    if count < 1:
        raise ValueError("count must be >= 1")
    entries: list[ReferenceEigenvalue] = []

    def cutoff() -> float:
        if len(entries) < count:
            return math.inf
        return sorted(e.value for e in entries)[count - 1]

    m = 0
    while m <= 2 * count:
        # zeros increase with the order, so once the first zero of an order
        # passes the running cutoff no later order can contribute
        if bessel_zero(float(m), 1) ** 2 > cutoff():
            break
        for n in range(1, count + 2):
            value = bessel_zero(float(m), n) ** 2
            if value > cutoff():
                break
            mult = 1 if m == 0 else 2
            for _ in range(mult):
                entries.append(ReferenceEigenvalue(value, m, n, mult))
        m += 1
    entries.sort(key=lambda e: (e.value, e.m))
    return entries[:count]


def spectrum(domain: str, count: int) -> list[ReferenceEigenvalue]:
    table = {"square": square_spectrum, "disk": disk_spectrum,
             "triangle": triangle_spectrum}
    if domain not in table:
        raise ValueError(f"no reference spectrum for domain {domain!r}")
    return table[domain](count)


def sector_lambda1(opening: float) -> float:
    """First Dirichlet eigenvalue of the unit-radius angular sector of the
    given opening: square of the first zero of J_{pi/opening}."""
    if not 0.0 < opening <= 2.0 * math.pi:
        raise ValueError("opening must lie in (0, 2*pi]")
    return bessel_zero(math.pi / opening, 1) ** 2


def nodal_upper_bound(domain: str, k: int) -> float:
    """Smallest tabulated eigenvalue with a k-nodal eigenfunction, +inf when
    the first ten eigenfunctions show no count equal to k."""
    mus = MU_COUNTS[domain]
    values = [e.value for e in spectrum(domain, len(mus))]
    candidates = [values[i] for i, mu in enumerate(mus) if mu == k]
    return min(candidates) if candidates else math.inf


def lower_bound(domain: str, k: int, p: float) -> float:
    """Power mean of the first k domain eigenvalues (max for p = inf)."""
    values = np.array([e.value for e in spectrum(domain, k)])
    if math.isinf(p):
        return float(values[-1])
    logs = p * np.log(values)
    return float(math.exp((np.logaddexp.reduce(logs) - math.log(k)) / p))


def bounds(domain: str, k: int, p: float) -> BoundsRecord:
    """Explicit lower and upper bounds for the optimal p-energy with k cells.

    Lower: power mean of the first k eigenvalues of the whole domain.
    Upper: best of the k-nodal bound, the rectangle-factorization bound
    (square) and the equal-sector bound (disk); the winner is recorded.
    """
    if domain not in MU_COUNTS:
        raise ValueError(f"no bounds for domain {domain!r}")
    if not 1 <= k <= 20:
        raise ValueError("k must lie in 1..20")
    if k > len(MU_COUNTS[domain]):
        nodal = math.inf
    else:
        nodal = nodal_upper_bound(domain, k)
    candidates = {"nodal": nodal}
    if domain == "square":
        divisors = [(m, k // m) for m in range(1, k + 1) if k % m == 0]
        candidates["factorization"] = min(
            math.pi ** 2 * (m * m + n * n) for m, n in divisors)
    if domain == "disk":
        candidates["sector"] = bessel_zero(k / 2.0, 1) ** 2
    source, upper = min(candidates.items(), key=lambda kv: kv[1])
    lower = lower_bound(domain, k, p)
    if lower > upper + 1e-9 * abs(upper):
        raise AssertionError(
            f"bounds inverted for {domain} k={k} p={p}: {lower} > {upper}")
    return BoundsRecord(domain, k, p, lower, upper, source)
