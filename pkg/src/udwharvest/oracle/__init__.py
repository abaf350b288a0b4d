"""Independent checks: a box mode sum for L and M, and a finite-dimensional signaling simulator."""

from .modes import ModeBox, ModeSumResult, discrete_mode_elements
from .signaling import (
    Qubit,
    SignalScenario,
    TruncatedOscillator,
    Window,
    commuting,
    evolve,
    field_like,
    leading_order_signal,
    mutual_information,
    rho_b_signal,
    trace_norm,
    truncation_change,
)
