"""Adaptive Gauss-Kronrod integration for complex-valued integrands.

Integrands are called with a 1-D numpy array of abscissae and must return an
array of the same shape.  All panels of a refinement round are evaluated in a
single call, so vectorized integrands run at numpy speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NonConvergence

# 21-point Kronrod rule and its embedded 10-point Gauss rule (QUADPACK qk21).
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208980088600,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
for _i, _w in enumerate(_WG):
    GAUSS_WEIGHTS[2 * _i + 1] = _w
    GAUSS_WEIGHTS[19 - 2 * _i] = _w

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny

# e^{-x} = 1e-30 at x = 30 ln 10
DAMPING_EXPONENT = 30.0 * math.log(10.0)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation controls for every integration.

    ``uv_scale`` is the upper limit used by :func:`integrate_semi_infinite`
    when the caller does not supply one; see :func:`uv_cutoff`.
    ``max_subdivisions`` bounds the number of panel bisections per integral.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    uv_scale: float | None = None

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.uv_scale is not None and not self.uv_scale > 0:
            raise ValueError("uv_scale must be positive")

    def tolerance(self, value: complex) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


def uv_cutoff(smearing: float, gap: float, switching_shift: float | None = None) -> float:
    """Momentum beyond which the known Gaussian damping is below 1e-30.

    The damping factors are exp(-k^2 sigma^2 / 2) from smearing and, when
    ``switching_shift`` is given, exp(-(k + shift)^2 / 2) from the switching.
    The result never drops below ``gap + 40``.
    """
    reach = math.sqrt(2.0 * DAMPING_EXPONENT)
    candidates = []
    if smearing > 0:
        candidates.append(reach / smearing)
    if switching_shift is not None:
        candidates.append(reach - switching_shift)
    floor = abs(gap) + 40.0
    if not candidates:
        return floor
    return max(min(candidates), floor)


def _panel_rule(f, a: np.ndarray, b: np.ndarray, carries_error: bool = False):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center[:, None] + half[:, None] * NODES[None, :]
    out = f(x.ravel())
    if carries_error:
        out, node_err = out
        node_err = np.asarray(node_err, dtype=float).reshape(x.shape)
    fx = np.asarray(out, dtype=complex).reshape(x.shape)
    weighted = fx @ KRONROD_WEIGHTS
    kron = weighted * half
    gauss = (fx @ GAUSS_WEIGHTS) * half
    mean = 0.5 * weighted
    err = np.zeros(len(a))
    floor = np.zeros(len(a))
    for part in (np.real, np.imag):
        fr = part(fx)
        resabs = (np.abs(fr) @ KRONROD_WEIGHTS) * np.abs(half)
        resasc = (np.abs(fr - part(mean)[:, None]) @ KRONROD_WEIGHTS) * np.abs(half)
        e = np.abs(part(kron) - part(gauss))
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = resasc * np.minimum(1.0, (200.0 * e / resasc) ** 1.5)
        e = np.where(resasc > 0, scaled, e)
        big = resabs > _TINY / (50.0 * _EPS)
        e = np.where(big, np.maximum(50.0 * _EPS * resabs, e), e)
        err = np.hypot(err, e)
        floor = np.hypot(floor, 50.0 * _EPS * resabs)
    if carries_error:
        propagated = (node_err @ KRONROD_WEIGHTS) * np.abs(half)
        err = err + propagated
        floor = floor + propagated
    return kron, err, floor


def _partition(a: float, b: float, breakpoints: Sequence[float] = (), period: float | None = None):
    edges = [a, b] + [p for p in breakpoints if a < p < b]
    edges = sorted(set(edges))
    if period is not None and period > 0:
        step = 0.5 * period
        refined = [edges[0]]
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(1, int(math.ceil((hi - lo) / step)))
            refined.extend(np.linspace(lo, hi, n + 1)[1:].tolist())
        edges = refined
    edges = np.asarray(edges, dtype=float)
    return edges[:-1], edges[1:]


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              spec: QuadratureSpec = QuadratureSpec(), *,
              breakpoints: Sequence[float] = (), period: float | None = None,
              strict: bool = True, carries_error: bool = False) -> tuple[complex, float]:
    """Integrate ``f`` over [a, b] to ``spec`` tolerance.

    Parameters
    ----------
    f
        Vectorized integrand, real or complex valued.
    breakpoints
        Interior points where ``f`` is not smooth; panels never straddle them.
    period
        Local oscillation period hint. The interval is pre-partitioned so no
        panel spans more than half a period.
    strict
        Raise :class:`NonConvergence` when the tolerance is not met within
        ``spec.max_subdivisions`` bisections.  Otherwise return the best
        estimate.
    carries_error
        ``f`` returns ``(values, errors)``; the per-node errors are pushed
        through the Kronrod weights into each panel's error.

    Returns
    -------
    (value, error)
        Complex value and the engine's absolute error estimate.
    """
    if not a < b:
        if a == b:
            return 0j, 0.0
        raise ValueError(f"integration requires a < b, got [{a}, {b}]")
    lo, hi = _partition(float(a), float(b), breakpoints, period)
    vals, errs, floors = _panel_rule(f, lo, hi, carries_error)
    done_val = 0j
    done_err = 0.0
    done_floor = 0.0
    bisections = 0
    length = float(b) - float(a)
    while True:
        total = done_val + vals.sum()
        total_err = done_err + errs.sum()
        tol = spec.tolerance(total)
        # once the estimate is dominated by rounding, bisection cannot improve it
        floor = done_floor + floors.sum()
        if total_err <= max(tol, 2.0 * floor):
            return complex(total), float(total_err)
        split = errs > tol * (hi - lo) / length
        if not split.any():
            split = errs >= errs.max()
        # panels too narrow to bisect are retired with their error
        split &= (hi - lo) > 64 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        n_split = int(split.sum())
        if n_split == 0 or bisections + n_split > spec.max_subdivisions:
            if strict:
                raise NonConvergence(
                    f"tolerance {tol:.3g} not reached on [{a}, {b}] "
                    f"(error estimate {total_err:.3g})", complex(total), float(total_err))
            return complex(total), float(total_err)
        bisections += n_split
        done_val += vals[~split].sum()
        done_err += errs[~split].sum()
        done_floor += floors[~split].sum()
        mid = 0.5 * (lo[split] + hi[split])
        lo = np.concatenate([lo[split], mid])
        hi = np.concatenate([mid, hi[split]])
        vals, errs, floors = _panel_rule(f, lo, hi, carries_error)


def integrate_semi_infinite(f: Callable[[np.ndarray], np.ndarray], a: float,
                            spec: QuadratureSpec = QuadratureSpec(), *,
                            cutoff: float | None = None, period: float | None = None,
                            breakpoints: Sequence[float] = (), strict: bool = True
                            ) -> tuple[complex, float]:
    """Integrate a Gaussian-damped ``f`` over [a, inf) by truncation.

    The upper limit is ``cutoff`` if given, else ``spec.uv_scale``.
    """
    upper = cutoff if cutoff is not None else spec.uv_scale
    if upper is None:
        raise ValueError("semi-infinite integration needs a cutoff or spec.uv_scale")
    if upper <= a:
        return 0j, 0.0
    return integrate(f, a, upper, spec, breakpoints=breakpoints, period=period, strict=strict)


def integrate_2d(f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 rectangle: tuple[float, float, float, float],
                 spec: QuadratureSpec = QuadratureSpec(), *,
                 inner_breakpoints: Callable[[float], Sequence[float]] | None = None,
                 outer_breakpoints: Sequence[float] = (),
                 inner_period: Callable[[float], float | None] | None = None,
                 outer_period: float | None = None,
                 strict: bool = True) -> tuple[complex, float]:
    """Iterated adaptive integration of ``f(x, y)`` over [x0, x1] x [y0, y1].

    The outer integral runs over x.  For every outer abscissa the inner
    integral over y is computed adaptively; its error bound is propagated
    through the outer rule (|weights| * inner errors) and added to the outer
    estimate.
    """
    x0, x1, y0, y1 = rectangle
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"degenerate rectangle {rectangle}")
    inner_spec = QuadratureSpec(abs_tol=spec.abs_tol / max(x1 - x0, 1.0),
                                rel_tol=spec.rel_tol / 4,
                                max_subdivisions=spec.max_subdivisions)

    def outer(xs: np.ndarray):
        out = np.empty(len(xs), dtype=complex)
        errs = np.empty(len(xs))
        for i, x in enumerate(xs):
            bps = inner_breakpoints(x) if inner_breakpoints is not None else ()
            per = inner_period(x) if inner_period is not None else None
            out[i], errs[i] = integrate(lambda y: f(np.full_like(y, x), y), y0, y1, inner_spec,
                                        breakpoints=bps, period=per, strict=strict)
        return out, errs

    return integrate(outer, x0, x1, spec, breakpoints=outer_breakpoints,
                     period=outer_period, strict=strict, carries_error=True)
