"""Charge distributions and their cumulant machinery.

Two built-in laws, both centered with unit variance: the standard Gaussian
and the symmetric +/-1 law.  Both have closed-form cumulant functions, which
makes every downstream quantity (tilted means, Legendre transforms, block
tail probabilities) exactly checkable.  The Legendre transform is still
solved numerically so that the solver itself can be validated against the
closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "LawKind",
    "DisorderLaw",
    "TiltParams",
    "RateFunctionEval",
    "GAUSSIAN",
    "BINARY",
    "log_mgf",
    "log_mgf_prime",
    "q1",
    "q2",
    "rate_function",
    "sample",
    "sample_tilted",
    "spawn_rng",
]


class LawKind(str, Enum):
    STANDARD_GAUSSIAN = "gaussian"
    SYMMETRIC_BINARY = "binary"


@dataclass(frozen=True)
class DisorderLaw:
    """A centered, unit-variance charge distribution.

    ``beta_bar`` is the supremum of the finite-cumulant domain.  Both
    built-in laws are entire (``beta_bar = inf``); a finite value can be
    injected to exercise the branches that guard against heavy tilts.
    """

    kind: LawKind
    beta_bar: float = math.inf

    @property
    def mean_limit(self) -> float:
        """Supremum of attainable tilted means, lim of the cumulant slope."""
        if self.kind is LawKind.STANDARD_GAUSSIAN:
            return self.beta_bar
        if math.isfinite(self.beta_bar):
            return math.tanh(self.beta_bar)
        return 1.0


GAUSSIAN = DisorderLaw(LawKind.STANDARD_GAUSSIAN)
BINARY = DisorderLaw(LawKind.SYMMETRIC_BINARY)


@dataclass(frozen=True)
class TiltParams:
    """Strength of an exponential tilt; must stay inside the finite domain."""

    beta: float


@dataclass(frozen=True)
class RateFunctionEval:
    """Value of the convex rate function at x with its conjugate optimizer."""

    x: float
    sigma: float
    argmax_y: float


def _check_beta(law: DisorderLaw, beta: float) -> None:
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if beta >= law.beta_bar:
        raise ValueError(
            f"beta={beta} is outside the finite-cumulant domain [0, {law.beta_bar})"
        )


def log_mgf(law: DisorderLaw, beta: float) -> float:
    """Cumulant generating function log E exp(beta * omega)."""
    _check_beta(law, beta)
    if law.kind is LawKind.STANDARD_GAUSSIAN:
        return 0.5 * beta * beta
    # log cosh, stable for large arguments
    a = abs(beta)
    return a + math.log1p(math.exp(-2.0 * a)) - math.log(2.0)


def log_mgf_prime(law: DisorderLaw, beta: float) -> float:
    """Derivative of the cumulant function, i.e. the tilted mean."""
    _check_beta(law, beta)
    if law.kind is LawKind.STANDARD_GAUSSIAN:
        return beta
    return math.tanh(beta)


def _log_mgf_second(law: DisorderLaw, beta: float) -> float:
    if law.kind is LawKind.STANDARD_GAUSSIAN:
        return 1.0
    t = math.tanh(beta)
    return 1.0 - t * t


def q1(law: DisorderLaw, beta: float) -> float:
    """beta * lambda'(beta) - lambda(beta); positive for beta > 0."""
    if beta == 0.0:
        return 0.0
    return beta * log_mgf_prime(law, beta) - log_mgf(law, beta)


def q2(law: DisorderLaw, beta: float) -> float:
    """lambda(2 beta) - 2 lambda(beta); +inf once 2 beta leaves the domain."""
    if beta == 0.0:
        return 0.0
    if 2.0 * beta >= law.beta_bar:
        return math.inf
    return log_mgf(law, 2.0 * beta) - 2.0 * log_mgf(law, beta)


def _golden_section_max(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Maximize a unimodal f on [lo, hi] to absolute tolerance tol on y."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def rate_function(law: DisorderLaw, x: float) -> RateFunctionEval:
    """Legendre transform sup_y [x*y - lambda(y)] of the cumulant function.

    The optimizer solves lambda'(y) = x, which has a unique root because
    lambda' is strictly increasing.  Solved by safeguarded Newton on the
    stationarity condition (tolerance 1e-12 on y) with a golden-section
    fallback; the domain is [0, C) with C the supremum of tilted means.
    """
    if x < 0:
        raise ValueError(f"rate function evaluated on x >= 0 only, got {x}")
    c_sup = law.mean_limit
    if x >= c_sup:
        raise ValueError(f"x={x} is at or beyond the attainable mean range [0, {c_sup})")
    if x == 0.0:
        return RateFunctionEval(x=0.0, sigma=0.0, argmax_y=0.0)

    # bracket the root of lambda'(y) = x
    hi = 1.0
    while log_mgf_prime(law, min(hi, law.beta_bar * (1 - 1e-12))) < x:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError(f"failed to bracket the conjugate optimizer for x={x}")
    hi = min(hi, law.beta_bar * (1 - 1e-12))
    lo = 0.0

    y = min(x, hi)  # exact for the Gaussian, a sane start otherwise
    converged = False
    for _ in range(200):
        g = log_mgf_prime(law, y) - x
        if g == 0.0:
            converged = True
            break
        if g > 0:
            hi = y
        else:
            lo = y
        gp = _log_mgf_second(law, y)
        step = g / gp if gp > 0 else math.inf
        y_new = y - step
        if not (lo < y_new < hi):
            y_new = 0.5 * (lo + hi)
        if abs(y_new - y) <= 1e-12 * max(1.0, abs(y_new)):
            y = y_new
            converged = True
            break
        y = y_new
    if not converged:
        y = _golden_section_max(lambda t: x * t - log_mgf(law, t), 0.0, hi)

    sigma = x * y - log_mgf(law, y)
    return RateFunctionEval(x=x, sigma=max(sigma, 0.0), argmax_y=y)


def spawn_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based split of a master seed; independent of draw order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample(law: DisorderLaw, n: int, seed: int) -> np.ndarray:
    """Draw n IID charges; deterministic given the seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return _draw(law, n, rng, beta=0.0)


def sample_tilted(law: DisorderLaw, tilt: TiltParams, n: int, seed: int) -> np.ndarray:
    """Draw n IID charges under the exponentially tilted marginal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_beta(law, tilt.beta)
    rng = np.random.default_rng(seed)
    return _draw(law, n, rng, beta=tilt.beta)


def _draw(law: DisorderLaw, n: int, rng: np.random.Generator, beta: float) -> np.ndarray:
    if law.kind is LawKind.STANDARD_GAUSSIAN:
        # tilting a unit Gaussian shifts the mean to beta
        return rng.standard_normal(n) + beta
    if beta == 0.0:
        return rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0
    p_plus = 1.0 / (1.0 + math.exp(-2.0 * beta))  # e^beta / (2 cosh beta)
    return np.where(rng.random(n) < p_plus, 1.0, -1.0)
