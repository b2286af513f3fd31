"""Exact partition functions by log-domain dynamic programming.

The quenched partition function sums, over renewal configurations ending at
N and over the two signs of every excursion, the weight K(gap) * 1/2 per
excursion times exp of the accumulated charge on excursions below the
interface.  The recursion over the last renewal point before N is evaluated
with a running-maximum log-sum-exp per target index, so charges of order
N*h never overflow.  A brute-force enumeration oracle over all renewal
subsets backs the DP for small N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .disorder import DisorderLaw, log_mgf, sample
from .kernel import RenewalKernel

__all__ = [
    "QuenchedInstance",
    "LogPartition",
    "Free",
    "RareStretch",
    "Trimmed",
    "make_instance",
    "rare_stretch_flags",
    "log_Z",
    "log_Z_windowed",
    "brute_force_log_Z",
    "log_Z_restricted",
    "log_annealed_Z",
    "fractional_moment_mc",
]

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class QuenchedInstance:
    """One disorder realization with its per-site charge prefix sums.

    charge_prefix[n] = sum_{i<=n} (beta*omega_i - lambda(beta) + h), with
    charge_prefix[0] = 0.  The difference of two prefix values is the charge
    collected by an excursion below the interface.
    """

    omega: np.ndarray
    beta: float
    h: float
    lambda_beta: float
    charge_prefix: np.ndarray

    @property
    def n(self) -> int:
        return len(self.omega)


def make_instance(
    law: DisorderLaw, beta: float, h: float, n: int = None, seed: int = None, omega=None
) -> QuenchedInstance:
    """Build an instance from a fresh sample (law, n, seed) or a given omega."""
    if omega is None:
        omega = sample(law, n, seed)
    omega = np.asarray(omega, dtype=float)
    lam = log_mgf(law, beta)
    prefix = np.zeros(len(omega) + 1)
    prefix[1:] = np.cumsum(beta * omega - lam + h)
    return QuenchedInstance(
        omega=omega, beta=beta, h=h, lambda_beta=lam, charge_prefix=prefix
    )


@dataclass(frozen=True)
class LogPartition:
    """Natural log of a partition function over n sites."""

    value: float
    n: int


@dataclass(frozen=True)
class Free:
    """No path restriction."""


@dataclass(frozen=True)
class RareStretch:
    """Single-trajectory family targeting flagged disorder blocks.

    The sites are cut into blocks of length ell; block i is flagged when its
    charge sum reaches q*ell.  The selected path goes below the interface
    exactly on flagged blocks, with one above-interface excursion bridging
    each gap and one final above excursion to N.  block_flags may be given
    explicitly; otherwise they are computed from the instance.
    """

    q: float
    ell: int
    block_flags: tuple = None


@dataclass(frozen=True)
class Trimmed:
    """Alternating long/short excursion ensemble.

    m repetitions of a long above-interface excursion with length in
    [M, M^2] followed by a short below-interface excursion with length in
    [1, k], then one final above excursion to N.
    """

    M: int
    k: int
    m: int


def rare_stretch_flags(omega: np.ndarray, q: float, ell: int) -> np.ndarray:
    """Boolean success flags of the full ell-blocks of omega."""
    nblocks = len(omega) // ell
    if nblocks == 0:
        return np.zeros(0, dtype=bool)
    sums = omega[: nblocks * ell].reshape(nblocks, ell).sum(axis=1)
    return sums >= q * ell


def _logsumexp(values: np.ndarray) -> float:
    m = values.max()
    if not math.isfinite(m):
        return float(m)
    return float(m + math.log(np.exp(values - m).sum()))


def log_Z(instance: QuenchedInstance, kernel: RenewalKernel) -> LogPartition:
    """Quenched log partition function, exact O(N^2) renewal decomposition."""
    n = instance.n
    if n < 1:
        raise ValueError("need at least one site")
    if n > kernel.support_cap:
        raise ValueError(f"kernel support {kernel.support_cap} < N = {n}")
    s = instance.charge_prefix
    log_k = kernel.log_masses
    lz = np.empty(n + 1)
    lz[0] = 0.0
    for m in range(1, n + 1):
        # gap lengths m-j for j = 0..m-1, i.e. log K(m), ..., log K(1)
        terms = (
            lz[:m]
            + log_k[1 : m + 1][::-1]
            + np.logaddexp(0.0, s[m] - s[:m])
            - _LOG2
        )
        lz[m] = _logsumexp(terms)
    return LogPartition(value=float(lz[n]), n=n)


def log_Z_windowed(
    instance: QuenchedInstance, kernel: RenewalKernel, window: int
) -> tuple[LogPartition, LogPartition]:
    """Windowed acceleration of log_Z: a certified (lower, upper) bracket.

    Excursions longer than the window are dropped from the lower bound and
    absorbed into the upper bound through running aggregates, using that the
    kernel masses decrease so K(gap) <= K(window+1) for every dropped gap.
    O(N * window) time instead of O(N^2).  The exact reference is log_Z;
    this path is an optional accelerator only.
    """
    n = instance.n
    if window < 1:
        raise ValueError("window must be >= 1")
    if n > kernel.support_cap:
        raise ValueError(f"kernel support {kernel.support_cap} < N = {n}")
    s = instance.charge_prefix
    log_k = kernel.log_masses
    log_k_beyond = float(log_k[min(window + 1, kernel.support_cap)])
    lo = np.empty(n + 1)
    hi = np.empty(n + 1)
    lo[0] = hi[0] = 0.0
    # running aggregates over dropped indices j: LSE(hi[j]) and LSE(hi[j]-s[j])
    agg_plain = -math.inf
    agg_tilted = -math.inf
    for m in range(1, n + 1):
        j0 = max(0, m - window)
        gaps = slice(1, m - j0 + 1)
        terms = (
            lo[j0:m]
            + log_k[gaps][::-1]
            + np.logaddexp(0.0, s[m] - s[j0:m])
            - _LOG2
        )
        lo[m] = _logsumexp(terms)
        terms_hi = (
            hi[j0:m]
            + log_k[gaps][::-1]
            + np.logaddexp(0.0, s[m] - s[j0:m])
            - _LOG2
        )
        if j0 > 0:
            dropped = np.logaddexp(agg_plain, s[m] + agg_tilted) + log_k_beyond - _LOG2
            hi[m] = np.logaddexp(_logsumexp(terms_hi), dropped)
        else:
            hi[m] = _logsumexp(terms_hi)
        if m - window >= 0:
            j_new = m - window  # index j leaves the window before target m+1
            agg_plain = np.logaddexp(agg_plain, hi[j_new])
            agg_tilted = np.logaddexp(agg_tilted, hi[j_new] - s[j_new])
    return (
        LogPartition(value=float(lo[n]), n=n),
        LogPartition(value=float(hi[n]), n=n),
    )


def brute_force_log_Z(instance: QuenchedInstance, kernel: RenewalKernel) -> LogPartition:
    """Exhaustive oracle: every renewal subset containing N, both excursion signs.

    Enumerates all 2^(N-1) subsets of interior renewal points; the two signs
    of each excursion contribute the exact factor (1 + e^charge)/2.  Weights
    are accumulated with exact float summation.  Refuses N > 20.
    """
    n = instance.n
    if n > 20:
        raise ValueError(f"brute force limited to N <= 20, got {n}")
    if n > kernel.support_cap:
        raise ValueError(f"kernel support {kernel.support_cap} < N = {n}")
    s = instance.charge_prefix
    k_mass = kernel.masses
    weights = []
    for mask in range(1 << (n - 1)):
        w = 1.0
        prev = 0
        bits = mask
        pos = 1
        while bits:
            if bits & 1:
                w *= k_mass[pos - prev] * 0.5 * (1.0 + math.exp(s[pos] - s[prev]))
                prev = pos
            bits >>= 1
            pos += 1
        w *= k_mass[n - prev] * 0.5 * (1.0 + math.exp(s[n] - s[prev]))
        weights.append(w)
    return LogPartition(value=math.log(math.fsum(weights)), n=n)


def log_Z_restricted(instance, kernel, constraint) -> LogPartition:
    """Log partition restricted to a path family; -inf if the family is empty."""
    if isinstance(constraint, Free):
        return log_Z(instance, kernel)
    if isinstance(constraint, RareStretch):
        return _rare_stretch_value(instance, kernel, constraint)
    if isinstance(constraint, Trimmed):
        value = _trimmed_log_partition(
            instance.charge_prefix, kernel, constraint, instance.n
        )
        return LogPartition(value=value, n=instance.n)
    raise TypeError(f"unknown constraint {constraint!r}")


def _rare_stretch_value(instance, kernel, constraint) -> LogPartition:
    n = instance.n
    ell = constraint.ell
    if ell < 1 or ell > n:
        raise ValueError(f"block length {ell} inconsistent with N = {n}")
    if constraint.block_flags is not None:
        flags = np.asarray(constraint.block_flags, dtype=bool)
        if len(flags) != n // ell:
            raise ValueError("block_flags length does not match the number of full blocks")
    else:
        flags = rare_stretch_flags(instance.omega, constraint.q, ell)
    s = instance.charge_prefix
    log_k = kernel.log_masses
    cap = kernel.support_cap

    total = 0.0
    prev_end = 0
    for i in np.flatnonzero(flags):
        start, end = int(i) * ell, (int(i) + 1) * ell
        gap = start - prev_end
        if gap > 0:
            if gap > cap:
                return LogPartition(value=-math.inf, n=n)
            total += log_k[gap] - _LOG2  # above-interface bridge
        total += log_k[ell] - _LOG2 + (s[end] - s[start])  # below on the block
        prev_end = end
    if prev_end < n:
        if n - prev_end > cap:
            return LogPartition(value=-math.inf, n=n)
        total += log_k[n - prev_end] - _LOG2  # final above excursion
    return LogPartition(value=float(total), n=n)


def _short_kernel(kernel, k: int, h: float = None):
    """Short-jump weights K(1..k), annealed variant weighted by e^{h n}."""
    w = kernel.masses[1 : k + 1].copy()
    if h is not None:
        w *= np.exp(h * np.arange(1, k + 1))
    return w


def _trimmed_log_partition(prefix, kernel, plan, n_sites: int) -> float:
    """Forward DP over the alternating long/short structure, quenched charges.

    Linear-domain convolutions with per-stage rescaling; only short
    excursions collect charges, so the per-stage dynamic range stays small.
    """
    return _trimmed_core(kernel, plan, n_sites, prefix=prefix, annealed_h=None)


def _trimmed_core(kernel, plan, n_sites, prefix=None, annealed_h=None) -> float:
    big_m, k, m = plan.M, plan.k, plan.m
    if big_m < 2 or k < 1 or m < 1:
        raise ValueError("need M >= 2, k >= 1, m >= 1")
    if big_m * big_m > kernel.support_cap or n_sites > kernel.support_cap:
        raise ValueError("plan exceeds the kernel support")
    reach = m * (big_m * big_m + k)  # farthest position after 2m excursions
    if reach + 1 > n_sites:
        reach = n_sites - 1
    if m * (big_m + 1) + 1 > n_sites:
        return -math.inf  # even the shortest path overshoots N
    if prefix is not None and len(prefix) < min(m * (big_m * big_m + k), n_sites - 1) + 1:
        raise ValueError("charge prefix too short for the plan")

    long_w = kernel.masses[big_m : big_m * big_m + 1]
    short_w = _short_kernel(kernel, k, h=annealed_h)
    size = reach + 1
    f = np.zeros(size)
    f[0] = 1.0
    offset = 0.0

    for _ in range(m):
        conv = np.convolve(f, long_w)  # conv[i] sits at position i + M
        shifted = np.zeros(size)
        upper = min(size, len(conv) + big_m)
        if upper > big_m:
            shifted[big_m:upper] = conv[: upper - big_m]
        f = shifted * 0.5
        top = f.max()
        if top <= 0.0:
            return -math.inf
        f /= top
        offset += math.log(top)

        if prefix is None:
            nxt = np.zeros(size)
            for ell in range(1, k + 1):
                nxt[ell:] += f[: size - ell] * short_w[ell - 1]
        else:
            s = prefix[:size]
            nxt = np.zeros(size)
            for ell in range(1, k + 1):
                charge = np.exp(s[ell:] - s[: size - ell])
                nxt[ell:] += f[: size - ell] * short_w[ell - 1] * charge
        f = nxt * 0.5
        top = f.max()
        if top <= 0.0:
            return -math.inf
        f /= top
        offset += math.log(top)

    # final above excursion to N: weight K(N - x) / 2 over reachable x >= 1
    x = np.arange(size)
    gaps = n_sites - x
    valid = (gaps >= 1) & (gaps <= kernel.support_cap) & (f > 0.0)
    if not valid.any():
        return -math.inf
    closing = np.zeros(size)
    closing[valid] = kernel.masses[gaps[valid]]
    total = float(np.dot(f, closing)) * 0.5
    if total <= 0.0:
        return -math.inf
    return math.log(total) + offset


def trimmed_log_mean(kernel, plan, n_sites: int, h: float) -> float:
    """Exact log of the disorder-averaged restricted partition function."""
    return _trimmed_core(kernel, plan, n_sites, prefix=None, annealed_h=h)


def log_annealed_Z(kernel: RenewalKernel, n: int, h: float) -> float:
    """Exact log of the disorder-averaged partition function.

    Disorder-free DP: each excursion of length l carries (1 + e^{h l})/2.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if n > kernel.support_cap:
        raise ValueError(f"kernel support {kernel.support_cap} < n = {n}")
    log_k = kernel.log_masses
    lengths = np.arange(0, n + 1, dtype=float)
    log_factor = np.logaddexp(0.0, h * lengths) - _LOG2
    la = np.empty(n + 1)
    la[0] = 0.0
    for m in range(1, n + 1):
        terms = la[:m] + log_k[1 : m + 1][::-1] + log_factor[1 : m + 1][::-1]
        la[m] = _logsumexp(terms)
    return float(la[n])


def fractional_moment_mc(
    instance_factory: Callable[[int], QuenchedInstance],
    kernel: RenewalKernel,
    theta: float,
    replicas: int,
) -> tuple[float, float]:
    """Monte Carlo mean and standard error of Z^theta over IID disorder.

    The factory maps a replica index to a quenched instance; seeds are the
    factory's responsibility (counter-based splits keep results independent
    of execution order).
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if replicas < 100:
        raise ValueError("need at least 100 replicas")
    vals = np.empty(replicas)
    for i in range(replicas):
        inst = instance_factory(i)
        vals[i] = math.exp(theta * log_Z(inst, kernel).value)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(replicas))
    return mean, stderr
