"""Leading-order matrix elements L, L_AB, M and the split M = M+ + M-.

All quantities are in units of the switching time T.  With Gaussian switching
exp(-t^2/T^2) and normalized Gaussian smearing of width sigma, the time and
space integrals reduce to one-dimensional momentum integrals:

    L    = lam^2 pi  int dk S(k) exp(-(Omega + k)^2 / 2)
    L_AB = lam^2 pi  exp(-i Omega t_D) int dk S_M(k) exp(-(Omega + k)^2 / 2) exp(-i k t_D)
    M    = C int dk S_M(k) I(k),   I(k) = int dt exp(-t^2/2) exp(-i k |t - t_D|)

where S and S_M are :func:`~udwharvest.kernels.spectral_density` without and
with the separation factor, and C = -sqrt(pi/2) lam^2 exp(i Omega t_+ - Omega^2/2).
I(k) is evaluated in closed form with the Faddeeva function; its real part
(anticommutator) gives M+ and its imaginary part (commutator) gives M-.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import Coupling, MatrixElements, PairConfig, validate
from .errors import PathDisagreement, WrongRegime
from .kernels import (
    GaussianProfile,
    faddeeva,
    spectral_density,
    w_minus,
    w_minus_dtdt,
)
from .quad import DAMPING_EXPONENT, QuadratureSpec, integrate, integrate_2d, uv_cutoff

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
# |t| beyond which exp(-t^2/2) < 1e-30
TIME_REACH = math.sqrt(2.0 * DAMPING_EXPONENT)

MPath = Literal["analytic", "brute2d"]
MMinusPath = Literal["realspace", "momentum"]

# exp(-t^2/2) as a profile in the relative time t_- (unnormalized)
RELATIVE_SWITCHING = GaussianProfile(0.0, 1.0, SQRT2PI)


@dataclass(frozen=True)
class EvaluationContext:
    config: PairConfig
    spec: QuadratureSpec = QuadratureSpec()

    def __post_init__(self):
        object.__setattr__(self, "config", validate(self.config))

    @property
    def prefactor(self) -> complex:
        c = self.config
        lam2 = c.coupling_strength ** 2
        return -math.sqrt(math.pi / 2) * lam2 * complex(
            math.cos(c.gap * c.time_offset), math.sin(c.gap * c.time_offset)
        ) * math.exp(-0.5 * c.gap ** 2)

    @property
    def k_min(self) -> float:
        return self.config.ir_cutoff or 0.0

    def period_hint(self) -> float:
        c = self.config
        return 2 * math.pi / max(c.separation, abs(c.delay), 1.0)


def relative_time_transform(k, delay: float):
    """I(k) = int dt exp(-t^2/2) exp(-i k |t - delay|), in closed form.

    Splitting at t = delay gives two half-line integrals
    J(a) = int_0^inf exp(-(u + a)^2/2 - i k u) du = sqrt(pi/2) exp(-a^2/2) w((-k + i a)/sqrt 2)
    with a = +delay and a = -delay; for a < 0 the reflection
    w(z) = 2 exp(-z^2) - w(-z) keeps everything finite.
    """
    k = np.asarray(k, dtype=float)

    def half_line(a: float):
        if a >= 0:
            return math.sqrt(math.pi / 2) * math.exp(-0.5 * a * a) * faddeeva((-k + 1j * a) / SQRT2)
        return math.sqrt(math.pi / 2) * (
            2.0 * np.exp(-0.5 * k * k + 1j * a * k)
            - math.exp(-0.5 * a * a) * faddeeva((k - 1j * a) / SQRT2))

    return half_line(delay) + half_line(-delay)


def local_noise(ctx: EvaluationContext) -> tuple[float, float]:
    """L = lam^2 pi int dk S(k) exp(-(Omega + k)^2/2), real and non-negative."""
    c = ctx.config
    if c.coupling_strength == 0:
        return 0.0, 0.0
    cutoff = uv_cutoff(c.smearing, c.gap, switching_shift=c.gap)
    bps = [10 * ctx.k_min] if ctx.k_min else []
    val, err = integrate(
        lambda k: spectral_density(c, k, "L") * np.exp(-0.5 * (c.gap + k) ** 2),
        ctx.k_min, cutoff, ctx.spec, breakpoints=bps)
    scale = c.coupling_strength ** 2 * math.pi
    L = val * scale
    assert abs(L.imag) <= 1e-10 * abs(L.real) + 1e-300
    return float(L.real), float(err * scale)


def cross_noise(ctx: EvaluationContext) -> tuple[complex, float]:
    """L_AB: the L integral with the separation factor and the delay phase."""
    c = ctx.config
    if c.coupling_strength == 0:
        return 0j, 0.0
    cutoff = uv_cutoff(c.smearing, c.gap, switching_shift=c.gap)
    bps = [10 * ctx.k_min] if ctx.k_min else []
    val, err = integrate(
        lambda k: spectral_density(c, k, "M") * np.exp(-0.5 * (c.gap + k) ** 2 - 1j * k * c.delay),
        ctx.k_min, cutoff, ctx.spec, breakpoints=bps, period=ctx.period_hint())
    scale = c.coupling_strength ** 2 * math.pi
    phase = complex(math.cos(c.gap * c.delay), -math.sin(c.gap * c.delay))
    return complex(val * scale * phase), float(err * scale)


def _m_cutoff(ctx: EvaluationContext) -> float:
    c = ctx.config
    if c.smearing == 0:
        raise WrongRegime("the momentum route for M and M- needs smearing > 0; "
                          "use the real-space route in the pointlike limit")
    return uv_cutoff(c.smearing, c.gap)


def _momentum(ctx: EvaluationContext, time_factor, cutoff: float, lower: float | None = None):
    c = ctx.config
    if c.coupling_strength == 0:
        return 0j, 0.0
    lo = ctx.k_min if lower is None else lower
    bps = [10 * lo] if lo else []
    val, err = integrate(lambda k: spectral_density(c, k, "M") * time_factor(k), lo, cutoff,
                         ctx.spec, breakpoints=bps, period=ctx.period_hint())
    C = ctx.prefactor
    return C * val, abs(C) * err


def correlation_M(ctx: EvaluationContext, path: MPath = "analytic") -> tuple[complex, float]:
    """The entangling term M.

    ``analytic`` integrates the closed-form relative-time transform over k;
    ``brute2d`` integrates over (k, t_-) directly, keeping |t_- - t_D| explicit.
    In the pointlike limit (smearing 0) the analytic route returns
    M+ (momentum) + M- (real space).
    """
    c = ctx.config
    if c.smearing == 0:
        if path != "analytic":
            raise WrongRegime("brute-force M needs smearing > 0")
        mp, ep = correlation_M_plus_momentum(ctx)
        mm, em = correlation_M_minus(ctx, "realspace")
        return mp + mm, ep + em
    cutoff = _m_cutoff(ctx)
    if path == "analytic":
        return _momentum(ctx, lambda k: relative_time_transform(k, c.delay), cutoff)
    if path != "brute2d":
        raise ValueError(f"unknown path {path!r}")
    if c.coupling_strength == 0:
        return 0j, 0.0
    t0, t1 = -TIME_REACH, TIME_REACH

    def f(k, t):
        return spectral_density(c, k, "M") * np.exp(-0.5 * t * t - 1j * k * np.abs(t - c.delay))

    lo = ctx.k_min
    val, err = integrate_2d(
        f, (lo, cutoff, t0, t1), ctx.spec,
        inner_breakpoints=lambda k: (c.delay,),
        inner_period=lambda k: 2 * math.pi / max(k, 1.0),
        outer_breakpoints=[10 * lo] if lo else (),
        outer_period=ctx.period_hint())
    C = ctx.prefactor
    return C * val, abs(C) * err


def correlation_M_plus_momentum(ctx: EvaluationContext) -> tuple[complex, float]:
    """Anticommutator part from the even time factor: Re I(k) = sqrt(2 pi) exp(-k^2/2) cos(k t_D)."""
    c = ctx.config
    cutoff = uv_cutoff(c.smearing, c.gap, switching_shift=0.0)
    return _momentum(ctx, lambda k: SQRT2PI * np.exp(-0.5 * k * k) * np.cos(k * c.delay), cutoff)


def _normal(x, width: float, dim: int):
    return np.exp(-0.5 * (x / width) ** 2) / (SQRT2PI * width) ** dim


def contact_term(ctx: EvaluationContext) -> complex:
    """Equal-time contribution of the derivative-coupling kernel at |t_- - t_D| = 0.

    The kink of |t_- - t_D| meets the canonical commutator [phi, d_t phi] at
    coincident points, giving -i C exp(-t_D^2/2) times the smeared overlap
    of the detector centres.  Zero for amplitude coupling.
    """
    c = ctx.config
    if c.coupling is not Coupling.DERIVATIVE or c.coupling_strength == 0:
        return 0j
    if c.smearing == 0:
        if c.separation == 0:
            raise WrongRegime("coincident pointlike detectors have a divergent contact term")
        return 0j
    overlap = _normal(c.separation, c.smearing, c.dim)
    return -1j * ctx.prefactor * math.exp(-0.5 * c.delay ** 2) * overlap


def _kernel(config: PairConfig, r):
    if config.coupling is Coupling.DERIVATIVE:
        return w_minus_dtdt(config.dim, 0.0, r)
    return w_minus(config.dim, 0.0, r)


def _relative_time_smear(config: PairConfig, r):
    """int dt_- exp(-t_-^2/2) W^-(|t_- - t_D|, r) for an array of distances r."""
    return _kernel(config, np.atleast_1d(r)).smear_abs(RELATIVE_SWITCHING, config.delay)


def _radial_density(r, y, sigma: float, dim: int):
    """Density of y = |x_- - x_D| when x_- is a centred normal of width sigma."""
    if dim == 1:
        return _normal(y - r, sigma, 1) + _normal(y + r, sigma, 1)
    if r == 0:
        return 4 * math.pi * y * y * _normal(y, sigma, 3)
    return y / (r * SQRT2PI * sigma) * (
        np.exp(-0.5 * ((y - r) / sigma) ** 2) - np.exp(-0.5 * ((y + r) / sigma) ** 2))


def correlation_M_minus(ctx: EvaluationContext, path: MMinusPath | None = None
                        ) -> tuple[complex, float]:
    """Communication-mediated part M- (commutator contribution).

    ``momentum`` keeps only i Im I(k) in the k integral.  ``realspace``
    smears the distributional commutator kernel: delta-derivative terms over
    the relative time analytically, then the spatial distance by quadrature.
    It adds the derivative-coupling contact term and, for the IR-regulated
    1+1D amplitude case, removes the modes below the cutoff so both routes
    describe the same regulated quantity.  Default: realspace for n in
    (1, 3), momentum for n = 2.
    """
    c = ctx.config
    if path is None:
        path = "momentum" if c.dim == 2 else "realspace"
    if path == "momentum":
        return _momentum(ctx, lambda k: 1j * relative_time_transform(k, c.delay).imag,
                         _m_cutoff(ctx))
    if path != "realspace":
        raise ValueError(f"unknown path {path!r}")
    if c.dim == 2:
        raise WrongRegime("no real-space route for n=2; use the momentum route")
    if c.coupling_strength == 0:
        return 0j, 0.0
    C = ctx.prefactor
    r, sigma = c.separation, c.smearing
    if sigma == 0:
        val, err = complex(_relative_time_smear(c, r)[0]), 0.0
    else:
        reach = TIME_REACH * sigma
        lo = max(0.0, r - reach)
        bps = [r] if lo < r else []

        def f(y):
            return _radial_density(r, y, sigma, c.dim) * _relative_time_smear(c, y)

        val, err = integrate(f, lo, r + reach, ctx.spec, breakpoints=bps)
    total = C * val + contact_term(ctx)
    err = abs(C) * err
    if c.ir_cutoff:
        sliver, e2 = _momentum(ctx, lambda k: 1j * relative_time_transform(k, c.delay).imag,
                               c.ir_cutoff, lower=0.0)
        total -= sliver
        err += e2
    return complex(total), float(err)


def correlation_M_plus(ctx: EvaluationContext, M: tuple[complex, float] | None = None,
                       M_minus: tuple[complex, float] | None = None) -> tuple[complex, float]:
    """M+ = M - M- (errors add)."""
    m, em = M if M is not None else correlation_M(ctx)
    mm, emm = M_minus if M_minus is not None else correlation_M_minus(ctx)
    return m - mm, em + emm


def pointlike_M_minus_1d(ctx: EvaluationContext) -> complex:
    """Pointlike, well-separated limit of M- for 1+1D derivative coupling.

    (i C / 4) d exp(-d^2/2) with d = |x_D| - |t_D|; vanishes on the light cone.
    """
    c = ctx.config
    if c.dim != 1 or c.coupling is not Coupling.DERIVATIVE:
        raise WrongRegime("pointlike_M_minus_1d applies to n=1 derivative coupling only")
    d = abs(c.separation) - abs(c.delay)
    return 0.25j * ctx.prefactor * d * math.exp(-0.5 * d * d)


def negativity(L: float, M: complex) -> float:
    if L < 0:
        raise ValueError(f"local noise must be non-negative, got {L}")
    return max(abs(M) - L, 0.0)


def check_path_agreement(a: tuple[complex, float], b: tuple[complex, float],
                         factor: float = 5.0, floor: float = 0.0) -> float:
    """Raise :class:`PathDisagreement` if two routes differ beyond factor x combined error."""
    diff = abs(a[0] - b[0])
    bound = factor * (a[1] + b[1]) + floor
    if diff > bound:
        raise PathDisagreement(f"routes differ by {diff:.3g} > {bound:.3g}")
    return diff


def compute_elements(config: PairConfig, spec: QuadratureSpec = QuadratureSpec(), *,
                     m_path: MPath = "analytic", m_minus_path: MMinusPath | None = None
                     ) -> MatrixElements:
    """All leading-order elements and the negativity at one configuration."""
    ctx = EvaluationContext(config, spec)
    L, eL = local_noise(ctx)
    LAB, eLAB = cross_noise(ctx)
    M = correlation_M(ctx, m_path)
    Mm = correlation_M_minus(ctx, m_minus_path)
    Mp = correlation_M_plus(ctx, M, Mm)
    return MatrixElements(
        local_noise=L,
        cross_noise=LAB,
        correlation=M[0],
        correlation_plus=Mp[0],
        correlation_minus=Mm[0],
        negativity=negativity(L, M[0]),
        error_estimates={"local_noise": eL, "cross_noise": eLAB, "correlation": M[1],
                         "correlation_plus": Mp[1], "correlation_minus": Mm[1]},
    )
