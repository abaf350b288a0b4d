from __future__ import annotations

import numpy as np
import pytest

from udwharvest import PairConfig

SCENARIOS = {
    "derivative_1d": dict(dim=1, coupling="derivative"),
    "derivative_3d": dict(dim=3, coupling="derivative"),
    "amplitude_1d": dict(dim=1, coupling="amplitude", ir_cutoff=0.02),
    "amplitude_3d": dict(dim=3, coupling="amplitude"),
}


def make_config(scenario: str = "derivative_1d", **overrides) -> PairConfig:
    data = dict(gap=4.0, smearing=0.05, delay=5.0, separation=5.0, **SCENARIOS[scenario])
    data.update(overrides)
    return PairConfig.from_dict(data)


def random_configs(count: int, seed: int, smearing=(0.1, 0.5), gap=(0.0, 4.0),
                   delay=(0.0, 8.0), separation=(0.0, 8.0)):
    """Configs cycling through the four scenarios with parameters drawn uniformly."""
    rng = np.random.default_rng(seed)
    names = list(SCENARIOS)
    out = []
    for i in range(count):
        out.append(make_config(
            names[i % len(names)],
            gap=float(rng.uniform(*gap)),
            smearing=float(rng.uniform(*smearing)),
            delay=float(rng.uniform(*delay)),
            separation=float(rng.uniform(*separation)),
            time_offset=float(rng.uniform(-3, 3)),
        ))
    return out


@pytest.fixture
def fig2a_peak():
    return make_config("derivative_1d")
