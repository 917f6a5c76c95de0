"""Closed-form results for the field-tilted PST chain.

Krawtchouk polynomials and their binomial weights diagonalise the chain with
couplings ``sqrt(p(1-p) n (N+1-n))`` and fields ``(1-2p) n + p N``; rescaling
that chain by ``sqrt(p(1-p))`` gives the tilted chain ``B_n = a n``. From
this follow the transition amplitude out of site 0, the packet momentum as a
function of time, the large-N Gaussian packet and the Gaussian-averaged
widget transmission.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln

from .errors import DomainError, NumericalError


def _wrap(phase):
    """Map angles into (-pi, pi]."""
    wrapped = np.mod(np.asarray(phase, dtype=float) + np.pi, 2 * np.pi) - np.pi
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2 * np.pi, wrapped)
    return wrapped if np.ndim(wrapped) else float(wrapped)


def log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


@dataclass(frozen=True)
class KrawtchoukContext:
    N: int
    p: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("Krawtchouk degree N must be >= 1")
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")


def krawtchouk(n: int, x: float, ctx: KrawtchoukContext) -> float:
    """K_n(x, p) by the forward three-term recurrence, K_0 = 1."""
    N, p = ctx.N, ctx.p
    if not 0 <= n <= N:
        raise IndexError(f"Krawtchouk index {n} outside 0..{N}")
    k_prev, k_cur = 0.0, 1.0
    for m in range(n):
        # p(N-m) K_{m+1} = [p(N-m) + m(1-p) - x] K_m - m(1-p) K_{m-1}
        k_next = ((p * (N - m) + m * (1 - p) - x) * k_cur - m * (1 - p) * k_prev) / (p * (N - m))
        k_prev, k_cur = k_cur, k_next
    return k_cur


def weight(n: int, ctx: KrawtchoukContext) -> float:
    """Binomial weight C(N,n) p^n (1-p)^(N-n), evaluated in log space."""
    N, p = ctx.N, ctx.p
    if not 0 <= n <= N:
        raise IndexError(f"weight index {n} outside 0..{N}")
    return float(np.exp(log_binom(N, n) + n * math.log(p) + (N - n) * math.log1p(-p)))


def orthonormal_polynomial(n: int, x: float, ctx: KrawtchoukContext) -> float:
    """chi_n(x) for the Krawtchouk chain, orthonormal under ``weight``."""
    N, p = ctx.N, ctx.p
    scale = 0.5 * log_binom(N, n) + 0.5 * n * (math.log(p) - math.log1p(-p))
    return (-1) ** n * math.exp(scale) * krawtchouk(n, x, ctx)


def p_of_a(a: float) -> float:
    """Invert a = (1-2p)/sqrt(p(1-p)); upper branch for a <= 0."""
    if not np.isfinite(a):
        raise ValueError("a must be finite")
    root = math.sqrt(a * a / (a * a + 4.0))
    return 0.5 * (1 + root) if a <= 0 else 0.5 * (1 - root)


def period_scale(a: float) -> float:
    """b = 1/sqrt(a^2 + 4); the walker returns to site 0 at t = 2 b pi."""
    return 1.0 / math.sqrt(a * a + 4.0)


def _check_period(t, a):
    b = period_scale(a)
    if not 0 < t < 2 * b * math.pi:
        raise DomainError(f"t={t} outside one period (0, {2 * b * math.pi}) for a={a}")
    return b


def momentum_theta(t: float, a: float) -> float:
    """Packet momentum theta(t, a), piecewise in t against b*pi."""
    b = _check_period(t, a)
    x = t / (2 * b)
    ab = a * b
    if x <= math.pi / 2:
        if x == math.pi / 2:
            inner = math.copysign(math.pi / 2, ab) if ab else 0.0
        else:
            inner = math.atan(ab * math.tan(x))
        theta = -inner - math.pi / 2
    else:
        theta = -math.atan(ab * math.tan(x)) + math.pi / 2
    return _wrap(theta)


def switch_time_for_momentum(target: float, a: float) -> float:
    """Earliest t in (0, 2 b pi) with theta(t, a) = target, found by bracketing."""
    b = period_scale(a)
    period = 2 * b * math.pi

    def residual(t):
        return _wrap(momentum_theta(t, a) - target)

    ts = np.linspace(period * 1e-6, period * (1 - 1e-6), 2001)
    vals = np.array([residual(t) for t in ts])
    for i in range(len(ts) - 1):
        lo, hi = vals[i], vals[i + 1]
        # skip the 2 pi wrap discontinuity
        if lo == 0.0:
            return float(ts[i])
        if lo * hi < 0 and abs(hi - lo) < np.pi:
            return float(optimize.brentq(residual, ts[i], ts[i + 1], xtol=1e-15, rtol=1e-15))
    raise DomainError(f"momentum {target} is not reached for a={a}")


@dataclass(frozen=True)
class AmplitudeResult:
    magnitude: float
    phase: float
    momentum_theta: float
    global_phase: float

    @property
    def value(self) -> complex:
        return self.magnitude * complex(math.cos(self.phase), math.sin(self.phase))


def _amplitude_parts(a, t, N):
    b = _check_period(t, a)
    p = p_of_a(a)
    tp = t / b
    u = -b * (1 - np.exp(-1j * tp))
    v = (1 - p) + p * np.exp(-1j * tp)
    theta = momentum_theta(t, a)
    # N arg(v) comes from the Krawtchouk generating function, p N t / b from
    # the constant diagonal separating the two chains
    global_phase = N * np.angle(v) + p * N * tp
    return u, v, theta, global_phase


def amplitude_profile(N: int, a: float, t: float) -> np.ndarray:
    """<r| exp(-i H_a t) |0> for r = 0..N as a complex array (N+1 sites)."""
    u, v, theta, global_phase = _amplitude_parts(a, t, N)
    r = np.arange(N + 1)
    with np.errstate(divide="ignore"):
        log_mag = 0.5 * log_binom(N, r) + r * np.log(abs(u)) + (N - r) * np.log(abs(v))
    return np.exp(log_mag) * np.exp(1j * (r * theta + global_phase))


def amplitude(r: int, a: float, t: float, N: int) -> AmplitudeResult:
    """Transition amplitude from site 0 to site r of the N+1 site tilted chain.

    The magnitude is sqrt(C(N,r)) q^(r/2) (1-q)^((N-r)/2) with
    q = 4 b^2 sin^2(t / 2b); the site-dependent phase is r * theta(t, a).
    """
    if not 0 <= r <= N:
        raise IndexError(f"site {r} outside 0..{N}")
    u, v, theta, global_phase = _amplitude_parts(a, t, N)
    with np.errstate(divide="ignore"):
        log_mag = 0.5 * log_binom(N, r) + r * np.log(abs(u)) + (N - r) * np.log(abs(v))
    magnitude = float(min(np.exp(log_mag), 1.0))
    return AmplitudeResult(
        magnitude=magnitude,
        phase=_wrap(r * theta + global_phase),
        momentum_theta=theta,
        global_phase=_wrap(global_phase),
    )


def transfer_fraction(a: float, t: float) -> float:
    """q = 4 b^2 sin^2(t / 2b): mean fraction of the chain the packet has crossed."""
    b = period_scale(a)
    return 4 * b * b * math.sin(t / (2 * b)) ** 2


@dataclass(frozen=True)
class GaussianPacket:
    center: float
    sigma: float
    momentum: float
    sigma_k: float
    in_regime: bool = True

    def profile(self, sites) -> np.ndarray:
        r = np.asarray(sites, dtype=float)
        env = (2 * np.pi * self.sigma ** 2) ** -0.25 * np.exp(-(r - self.center) ** 2 / (4 * self.sigma ** 2))
        return env * np.exp(1j * self.momentum * r)


def gaussian_packet(N: int, a: float, t: float) -> GaussianPacket:
    q = transfer_fraction(a, t)
    theta = momentum_theta(t, a)
    sigma = math.sqrt(N * q * (1 - q))
    if sigma <= 0:
        raise DomainError("packet has zero width at this time")
    in_regime = sigma >= 3
    if not in_regime:
        warnings.warn(f"sigma={sigma:.3g} < 3: outside the binomial-Gaussian regime", stacklevel=2)
    return GaussianPacket(center=N * q, sigma=sigma, momentum=theta,
                          sigma_k=1.0 / (2 * sigma), in_regime=in_regime)


def transmission_b(k, limits: bool = False):
    """Plane-wave transmission probability through the phase-gate widget.

    64 / (64 + cos^2(2k) csc^6(k) sec^2(k)), rewritten without poles as
    64 s^6 c^2 / (64 s^6 c^2 + cos^2 2k); this returns the limit 0 at
    k = -pi/2. The endpoints k = 0 and k = -pi raise unless ``limits``.
    """
    k_arr = np.asarray(k, dtype=float)
    at_edge = (k_arr >= 0) | (k_arr <= -np.pi)
    if np.any(at_edge) and not limits:
        raise DomainError("transmission_b is defined on k in (-pi, 0)")
    s6c2 = np.sin(k_arr) ** 6 * np.cos(k_arr) ** 2
    out = 64 * s6c2 / (64 * s6c2 + np.cos(2 * k_arr) ** 2)
    out = np.where(at_edge, 0.0, out)
    return out if np.ndim(out) else float(out)


def _resolve_transmission(widget) -> Callable:
    if callable(widget):
        return widget
    if widget == "b":
        return transmission_b
    if widget == "c":
        from .scatter import transmission_c
        return transmission_c
    raise ValueError(f"unknown widget {widget!r}; expected 'b', 'c' or a callable")


def gaussian_transmission(theta: float, sigma_k: float, widget="b", epsabs: float = 1e-10) -> float:
    """Expectation of the plane-wave transmission over a Gaussian momentum density.

    Integrates N(k; theta, sigma_k) T(k) over k in (-pi, 0) adaptively. The
    interval is split at theta and at theta +- 12 sigma_k so narrow packets
    are resolved.
    """
    if not sigma_k > 0:
        raise ValueError("sigma_k must be positive")
    if not -math.pi < theta < 0:
        raise DomainError("theta must lie in (-pi, 0)")
    trans = _resolve_transmission(widget)
    norm = 1.0 / (math.sqrt(2 * math.pi) * sigma_k)

    def integrand(k):
        return norm * math.exp(-0.5 * ((k - theta) / sigma_k) ** 2) * float(trans(k))

    cuts = sorted({-math.pi, 0.0, theta,
                   max(-math.pi, theta - 12 * sigma_k), min(0.0, theta + 12 * sigma_k)})
    total, total_err = 0.0, 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        val, err, *rest = integrate.quad(integrand, lo, hi, epsabs=epsabs, epsrel=1e-12,
                                         limit=500, full_output=1)
        if len(rest) > 1 and err > 100 * epsabs:
            raise NumericalError(f"quadrature did not converge on [{lo}, {hi}]", achieved_tolerance=err)
        total += val
        total_err += err
    return float(min(max(total, 0.0), 1.0))
