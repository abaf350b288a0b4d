"""Exact tripartite evolution for the no-signaling structure of detector couplings.

Two qubits A and B couple to a small mediator C through

    H(t) = H_0 + lam chi_A(t) O_A (x) C_A + lam chi_B(t) O_B (x) C_B,

with O = sigma_x, H_0 = Omega sigma+ sigma- on each qubit and a mediator
Hamiltonian H_C.  Switching windows are piecewise constant on a time grid,
so each step is an exact matrix exponential.  The signal that reaches B is

    rho_B^signal = Tr_AC(U rho U^dag) - Tr_AC(U_B rho U_B^dag),

where U_B is the evolution with A decoupled; it is returned in the
interaction picture of H_0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy.linalg import expm

from ..errors import InvalidParameter, NonConvergence, StepNotConverged

Include = Literal["both", "only_b"]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
RAISE = np.array([[0, 0], [1, 0]], dtype=complex)  # sigma+ = |e><g|, basis (g, e)
GROUND = np.array([1, 0], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class Qubit:
    """Two-level mediator with H_C = (frequency/2) sigma_z."""

    frequency: float = 1.0

    @property
    def levels(self) -> int:
        return 2

    def hamiltonian(self) -> np.ndarray:
        return 0.5 * self.frequency * SIGMA_Z

    def quadrature(self) -> np.ndarray:
        return SIGMA_X.copy()

    def number(self) -> np.ndarray:
        return SIGMA_Z.copy()


@dataclass(frozen=True)
class TruncatedOscillator:
    """Harmonic oscillator truncated to ``levels`` Fock states, H_C = frequency a^dag a."""

    levels: int = 12
    frequency: float = 1.0

    def __post_init__(self):
        if self.levels < 2:
            raise InvalidParameter(f"oscillator needs at least 2 levels, got {self.levels}")

    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.levels)), 1).astype(complex)

    def hamiltonian(self) -> np.ndarray:
        return self.frequency * np.diag(np.arange(self.levels)).astype(complex)

    def quadrature(self) -> np.ndarray:
        a = self.annihilation()
        return (a + a.conj().T) / math.sqrt(2)

    def number(self) -> np.ndarray:
        return np.diag(np.arange(self.levels)).astype(complex)

    def with_levels(self, levels: int) -> "TruncatedOscillator":
        return replace(self, levels=levels)


Mediator = Qubit | TruncatedOscillator


@dataclass(frozen=True)
class Window:
    """Switching window: ``box`` (indicator of [start, stop]) or ``gaussian``.

    A Gaussian window is exp(-(t - centre)^2 / width^2) truncated to
    centre +- 3.5 width.
    """

    kind: Literal["box", "gaussian"]
    start: float
    stop: float

    @classmethod
    def box(cls, start: float, stop: float) -> "Window":
        return cls("box", start, stop)

    @classmethod
    def gaussian(cls, centre: float, width: float = 1.0) -> "Window":
        return cls("gaussian", centre - 3.5 * width, centre + 3.5 * width)

    def __post_init__(self):
        if not self.start < self.stop:
            raise InvalidParameter(f"window needs start < stop, got [{self.start}, {self.stop}]")
        if self.kind not in ("box", "gaussian"):
            raise InvalidParameter(f"unknown window kind {self.kind!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.start) & (t <= self.stop)
        if self.kind == "box":
            return inside.astype(float)
        centre = 0.5 * (self.start + self.stop)
        width = (self.stop - self.start) / 7.0
        return np.where(inside, np.exp(-((t - centre) / width) ** 2), 0.0)

    def step_values(self, edges: np.ndarray) -> np.ndarray:
        """Piecewise-constant value on each grid step.

        Box windows use the covered fraction of the step, so a grid aligned
        with the window is exact; Gaussian windows use the midpoint value.
        """
        lo, hi = edges[:-1], edges[1:]
        if self.kind == "box":
            covered = np.clip(np.minimum(hi, self.stop) - np.maximum(lo, self.start), 0, None)
            return covered / (hi - lo)
        return self(0.5 * (lo + hi))


@dataclass(frozen=True)
class SignalScenario:
    """Qubits A and B coupled to a mediator C through C_A and C_B.

    ``obs_A`` and ``obs_B`` are Schrodinger-picture mediator operators; the
    interaction-picture observables are C_nu(t) = exp(i H_C t) C_nu exp(-i H_C t).
    """

    mediator: Mediator
    obs_A: np.ndarray
    obs_B: np.ndarray
    window_A: Window
    window_B: Window
    coupling: float
    gap: float = 1.0
    dt: float = 0.05
    state_A: np.ndarray = field(default_factory=lambda: PLUS.copy())
    state_B: np.ndarray = field(default_factory=lambda: GROUND.copy())
    state_C: np.ndarray | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt}")
        d = self.mediator.levels
        for name in ("obs_A", "obs_B"):
            op = np.asarray(getattr(self, name), dtype=complex)
            if op.shape != (d, d) or not np.allclose(op, op.conj().T, atol=1e-14):
                raise InvalidParameter(f"{name} must be a Hermitian {d}x{d} matrix")
            object.__setattr__(self, name, op)
        c = self.state_C
        if c is None:
            c = np.zeros(d, dtype=complex)
            c[0] = 1.0
        for name, vec, n in (("state_A", self.state_A, 2), ("state_B", self.state_B, 2),
                             ("state_C", c, d)):
            v = np.asarray(vec, dtype=complex)
            if v.shape != (n,) or not math.isclose(np.vdot(v, v).real, 1.0, rel_tol=1e-12):
                raise InvalidParameter(f"{name} must be a normalized vector of length {n}")
            object.__setattr__(self, name, v)

    @property
    def span(self) -> tuple[float, float]:
        return (min(self.window_A.start, self.window_B.start),
                max(self.window_A.stop, self.window_B.stop))

    def replace(self, **changes) -> "SignalScenario":
        return replace(self, **changes)

    def with_mediator_levels(self, levels: int) -> "SignalScenario":
        """Same scenario on a larger oscillator, with the preset observables rebuilt."""
        med = self.mediator
        if not isinstance(med, TruncatedOscillator):
            raise InvalidParameter("only oscillator mediators can be re-truncated")
        bigger = med.with_levels(levels)

        def pad(op):
            out = np.zeros((levels, levels), dtype=complex)
            n = min(levels, med.levels)
            out[:n, :n] = op[:n, :n]
            return out

        def lift(op):
            # quadratures and number operators are rebuilt exactly on the new space
            for build in (med.quadrature, med.number):
                if np.allclose(op, build()):
                    return getattr(bigger, build.__name__)()
            return pad(op)

        c = np.zeros(levels, dtype=complex)
        c[:min(levels, med.levels)] = self.state_C[:levels]
        return replace(self, mediator=bigger, obs_A=lift(self.obs_A), obs_B=lift(self.obs_B),
                       state_C=c)

    # interaction-picture operators
    def detector_observable(self, t):
        t = np.asarray(t, dtype=float)
        e = np.exp(1j * self.gap * t)[..., None, None]
        return e * RAISE + np.conj(e) * RAISE.T

    def mediator_observable(self, which: str, t):
        op = self.obs_A if which == "A" else self.obs_B
        energies, vecs = np.linalg.eigh(self.mediator.hamiltonian())
        local = vecs.conj().T @ op @ vecs
        t = np.asarray(t, dtype=float)[..., None, None]
        phase = np.exp(1j * (energies[:, None] - energies[None, :]) * t)
        return vecs @ (phase * local) @ vecs.conj().T


def field_like(coupling: float, mediator: Mediator | None = None, *,
               window_A: Window = Window.box(0.0, 2.0), window_B: Window = Window.box(1.0, 3.0),
               gap: float = 1.0, dt: float = 0.05) -> SignalScenario:
    """Both detectors couple to the same quadrature, which fails to commute at unequal times."""
    med = mediator or TruncatedOscillator(12)
    x = med.quadrature()
    return SignalScenario(med, x, x, window_A, window_B, coupling, gap, dt)


def commuting(coupling: float, mediator: Mediator | None = None, *,
              window_A: Window = Window.box(0.0, 2.0), window_B: Window = Window.box(1.0, 3.0),
              gap: float = 1.0, dt: float = 0.05) -> SignalScenario:
    """Both detectors couple to a conserved mediator observable (number or sigma_z).

    The mediator starts in a superposition of two eigenstates, so A and B
    can still become correlated through it.
    """
    med = mediator or TruncatedOscillator(12)
    n = med.number()
    c = np.zeros(med.levels, dtype=complex)
    c[0] = c[1] = 1 / math.sqrt(2)
    return SignalScenario(med, n, n, window_A, window_B, coupling, gap, dt, state_C=c)


def _kron(*ops):
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def _grid(scenario: SignalScenario, dt: float) -> np.ndarray:
    t0, t1 = scenario.span
    n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    return np.linspace(t0, t1, n + 1)


def _operators(scenario: SignalScenario):
    d = scenario.mediator.levels
    i2, ic = np.eye(2), np.eye(d)
    h_q = scenario.gap * RAISE @ RAISE.T
    h0 = _kron(h_q, i2, ic) + _kron(i2, h_q, ic) + _kron(i2, i2, scenario.mediator.hamiltonian())
    v_a = _kron(SIGMA_X, i2, scenario.obs_A)
    v_b = _kron(i2, SIGMA_X, scenario.obs_B)
    return h0, v_a, v_b


def _free(h0: np.ndarray, t: float) -> np.ndarray:
    return np.diag(np.exp(-1j * np.diag(h0) * t)) if np.allclose(h0, np.diag(np.diag(h0))) \
        else expm(-1j * h0 * t)


def _evolve_on_grid(scenario: SignalScenario, include: Include, dt: float) -> np.ndarray:
    """Interaction-picture final state vector for a given step."""
    h0, v_a, v_b = _operators(scenario)
    edges = _grid(scenario, dt)
    lam = scenario.coupling
    chi_a = scenario.window_A.step_values(edges) * (lam if include == "both" else 0.0)
    chi_b = scenario.window_B.step_values(edges) * lam
    psi0 = _kron(scenario.state_A[:, None], scenario.state_B[:, None],
                 scenario.state_C[:, None]).ravel()
    t0, t1 = edges[0], edges[-1]
    psi = _free(h0, t0) @ psi0
    cache: dict = {}
    for k, step in enumerate(np.diff(edges)):
        key = (chi_a[k], chi_b[k], step)
        u = cache.get(key)
        if u is None:
            u = expm(-1j * step * (h0 + chi_a[k] * v_a + chi_b[k] * v_b))
            if len(cache) < 64:
                cache[key] = u
        psi = u @ psi
    return _free(h0, -t1) @ psi


def evolve(scenario: SignalScenario, include: Include = "both", *,
           tolerance: float = 1e-10, max_halvings: int = 12) -> np.ndarray:
    """Final joint state vector (interaction picture, ordering A (x) B (x) C).

    The step starts at ``scenario.dt`` and is halved until the final state
    changes by less than ``tolerance`` in 2-norm.
    """
    if include not in ("both", "only_b"):
        raise InvalidParameter(f"include must be 'both' or 'only_b', got {include!r}")
    dt = scenario.dt
    prev = _evolve_on_grid(scenario, include, dt)
    for _ in range(max_halvings):
        dt /= 2
        cur = _evolve_on_grid(scenario, include, dt)
        if np.linalg.norm(cur - prev) < tolerance:
            return cur
        prev = cur
    raise StepNotConverged(f"final state still changing after {max_halvings} halvings of dt")


def _reduce(psi: np.ndarray, d: int, keep: str) -> np.ndarray:
    t = psi.reshape(2, 2, d)
    if keep == "B":
        return np.einsum("abc,adc->bd", t, t.conj())
    if keep == "A":
        return np.einsum("abc,dbc->ad", t, t.conj())
    if keep == "AB":
        m = t.reshape(4, d)
        return m @ m.conj().T
    raise ValueError(keep)


def trace_norm(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (m + m.conj().T))).sum())


def rho_b_signal(scenario: SignalScenario, **kwargs) -> tuple[np.ndarray, float]:
    """B's reduced state with A present minus without A, and its trace norm."""
    d = scenario.mediator.levels
    both = _reduce(evolve(scenario, "both", **kwargs), d, "B")
    only_b = _reduce(evolve(scenario, "only_b", **kwargs), d, "B")
    signal = both - only_b
    return signal, trace_norm(signal)


def _entropy(rho: np.ndarray) -> float:
    p = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    p = p[p > 1e-15]
    return float(-(p * np.log(p)).sum())


def mutual_information(scenario: SignalScenario, **kwargs) -> float:
    """I(A:B) of the final joint detector state, in nats."""
    psi = evolve(scenario, "both", **kwargs)
    d = scenario.mediator.levels
    return (_entropy(_reduce(psi, d, "A")) + _entropy(_reduce(psi, d, "B"))
            - _entropy(_reduce(psi, d, "AB")))


def truncation_change(scenario: SignalScenario, levels: int = 16, **kwargs) -> float:
    """Trace-norm change of B's signal when the oscillator is enlarged to ``levels``."""
    small, _ = rho_b_signal(scenario, **kwargs)
    large, _ = rho_b_signal(scenario.with_mediator_levels(levels), **kwargs)
    return trace_norm(small - large)


def _sub_nodes(edges: np.ndarray, order: int, max_width: float):
    """Gauss-Legendre nodes on every step, each step split into panels of width <= max_width.

    Returns nodes, weights, the owning panel of each node and the panel
    lower edges.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    lows, highs = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, math.ceil((hi - lo) / max_width))
        e = np.linspace(lo, hi, n + 1)
        lows.append(e[:-1])
        highs.append(e[1:])
    lows, highs = np.concatenate(lows), np.concatenate(highs)
    half = 0.5 * (highs - lows)
    nodes = (lows + half)[:, None] + half[:, None] * x
    weights = half[:, None] * w
    panel = np.repeat(np.arange(len(lows)), order)
    return nodes.ravel(), weights.ravel(), panel, lows


def _leading_order(scenario: SignalScenario, order: int, max_width: float) -> np.ndarray:
    wa, wb = scenario.window_A, scenario.window_B
    edges = np.unique([wa.start, wa.stop, wb.start, wb.stop])
    x, w = np.polynomial.legendre.leggauss(order)
    t, wt, panel, panel_lo = _sub_nodes(edges, order, max_width)
    rho_a = np.outer(scenario.state_A, scenario.state_A.conj())
    rho_b = np.outer(scenario.state_B, scenario.state_B.conj())
    rho_c = np.outer(scenario.state_C, scenario.state_C.conj())

    def source(times, chi):
        # a(t) chi_A [rho_C, C_A(t)]^T flattened, so that source . C_B(t') = a chi <[C_A, C_B]>
        o_a = scenario.detector_observable(times)
        a = np.einsum("ij,tji->t", rho_a, o_a)
        c_a = scenario.mediator_observable("A", times)
        comm = rho_c @ c_a - c_a @ rho_c
        return (a * chi)[:, None] * np.swapaxes(comm, -1, -2).reshape(len(times), -1)

    g = source(t, wa(t)) * wt[:, None]
    c_b = scenario.mediator_observable("B", t).reshape(len(t), -1)
    o_b = scenario.detector_observable(t)
    target = (o_b @ rho_b - rho_b @ o_b) * (wb(t) * wt)[:, None, None]

    # t in an earlier panel: exclusive cumulative sum over panels
    panel_sum = np.zeros((len(panel_lo), g.shape[1]), dtype=complex)
    np.add.at(panel_sum, panel, g)
    earlier = (np.cumsum(panel_sum, axis=0) - panel_sum)[panel]

    # t in the same panel as t': Gauss rule on [panel start, t']
    a_start = panel_lo[panel]
    half = 0.5 * (t - a_start)
    inner_t = (a_start + half)[:, None] + half[:, None] * x
    flat = inner_t.ravel()
    inner = source(flat, wa(flat)).reshape(len(t), order, -1)
    within = np.einsum("qn,qnk->qk", half[:, None] * w, inner)

    amplitude = np.einsum("qk,qk->q", earlier + within, c_b)
    return scenario.coupling ** 2 * np.einsum("q,qij->ij", amplitude, target)


def leading_order_signal(scenario: SignalScenario, tolerance: float = 1e-12) -> np.ndarray:
    """Second-order signal lam^2 int dt int_{t' > t} dt' chi_A chi_B a(t) <[C_A(t), C_B(t')]> [O_B(t'), rho_B].

    a(t) = Tr(rho_A O_A(t)).  Evaluated with the continuous windows by
    panel-wise Gauss-Legendre rules, panels split at every window edge; the
    result is accepted when doubling the rule order changes it by less than
    ``tolerance`` relative to its norm.
    """
    coarse = _leading_order(scenario, 10, 0.25)
    fine = _leading_order(scenario, 20, 0.25)
    diff = trace_norm(fine - coarse)
    if diff > tolerance * max(trace_norm(fine), 1e-300) and diff > 1e-300:
        raise NonConvergence("leading-order signal quadrature did not settle", fine, diff)
    return fine
