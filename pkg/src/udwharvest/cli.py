"""Command-line front end: single points, sweeps, figure presets and oracle checks.

Exit codes: 0 success, 1 a check ran but failed, 2 configuration error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .core import Coupling, MatrixElements, PairConfig, validate
from .elements import compute_elements
from .errors import ConfigError, HarvestError, InvalidParameter, NonConvergence
from .quad import QuadratureSpec

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NONCONVERGENCE = 0, 1, 2, 3

CSV_COLUMNS = ("axis_value", "L", "abs_LAB", "abs_M", "abs_M_plus", "abs_M_minus",
               "negativity", "err_M")
OUTPUT_NAMES = ("L", "L_AB", "M", "M_plus", "M_minus", "N")


class Axis(str, Enum):
    DELAY = "delay"
    SEPARATION = "separation"


@dataclass(frozen=True)
class SweepRequest:
    """A one-parameter sweep over ``axis`` with ``points`` equally spaced values."""

    base: PairConfig
    axis: Axis
    start: float
    stop: float
    points: int
    outputs: tuple[str, ...] = OUTPUT_NAMES

    def __post_init__(self):
        if not self.start < self.stop:
            raise InvalidParameter(f"sweep needs start < stop, got {self.start}, {self.stop}")
        if isinstance(self.points, bool) or int(self.points) != self.points or self.points < 2:
            raise InvalidParameter(f"sweep needs an integer points >= 2, got {self.points}")
        bad = sorted(set(self.outputs) - set(OUTPUT_NAMES))
        if bad:
            raise InvalidParameter(f"unknown outputs: {', '.join(bad)}")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, int(self.points))

    def configs(self) -> list[PairConfig]:
        field = self.axis.value
        return [self.base.replace(**{field: float(v)}) for v in self.values()]

    @classmethod
    def from_dict(cls, data: Mapping) -> "SweepRequest":
        allowed = {"base", "axis", "start", "stop", "points", "outputs"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise InvalidParameter(f"unknown sweep keys: {', '.join(unknown)}")
        missing = sorted(allowed - {"outputs"} - set(data))
        if missing:
            raise InvalidParameter(f"missing sweep keys: {', '.join(missing)}")
        try:
            axis = Axis(str(data["axis"]).lower())
        except ValueError:
            raise InvalidParameter(f"unknown sweep axis {data['axis']!r}") from None
        base = validate(PairConfig.from_dict(data["base"]))
        outputs = tuple(data.get("outputs", OUTPUT_NAMES))
        return cls(base, axis, float(data["start"]), float(data["stop"]), data["points"], outputs)


FIGURE_SCENARIOS = {
    "a": dict(dim=1, coupling="derivative"),
    "b": dict(dim=3, coupling="derivative"),
    "c": dict(dim=1, coupling="amplitude", ir_cutoff=0.02),
    "d": dict(dim=3, coupling="amplitude"),
}


def figure2_request(panel: str) -> SweepRequest:
    """Delay sweep t_D in [0, 10] (201 points) at Omega=4, |x_D|=5, sigma=0.05."""
    key = panel.lower().removeprefix("figure2")
    if key not in FIGURE_SCENARIOS:
        raise InvalidParameter(f"unknown figure2 panel {panel!r}; choose a, b, c or d")
    base = PairConfig.from_dict(dict(gap=4.0, separation=5.0, smearing=0.05, delay=0.0,
                                     **FIGURE_SCENARIOS[key]))
    return SweepRequest(validate(base), Axis.DELAY, 0.0, 10.0, 201)


def _number(x: float) -> str:
    return format(float(x), ".17g")


def elements_to_json(elements: MatrixElements, config: PairConfig) -> dict:
    e = elements
    return {
        "L": e.local_noise,
        "L_AB_re": e.cross_noise.real, "L_AB_im": e.cross_noise.imag,
        "M_re": e.correlation.real, "M_im": e.correlation.imag,
        "M_plus_re": e.correlation_plus.real, "M_plus_im": e.correlation_plus.imag,
        "M_minus_re": e.correlation_minus.real, "M_minus_im": e.correlation_minus.imag,
        "negativity": e.negativity,
        "errors": dict(e.error_estimates),
        "config": config.to_dict(),
    }


def csv_row(axis_value: float, e: MatrixElements) -> str:
    values = (axis_value, e.local_noise, abs(e.cross_noise), abs(e.correlation),
              abs(e.correlation_plus), abs(e.correlation_minus), e.negativity,
              e.error("correlation"))
    return ",".join(_number(v) for v in values)


def error_row(axis_value: float, err: HarvestError) -> str:
    """Row for a failed point: NaN values and the error code in the err_M column."""
    return ",".join([_number(axis_value)] + ["nan"] * 6 + [f"error={err.code}"])


def run_sweep(request: SweepRequest, out: TextIO, spec: QuadratureSpec = QuadratureSpec(),
              threads: int = 1) -> int:
    """Write the sweep CSV to ``out`` in ascending axis order; return the exit code."""
    configs = request.configs()
    values = request.values()

    def point(cfg):
        try:
            return compute_elements(cfg, spec)
        except NonConvergence as exc:
            return exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, configs))
    else:
        results = [point(c) for c in configs]

    out.write(",".join(CSV_COLUMNS) + "\n")
    failed = False
    for v, res in zip(values, results):
        if isinstance(res, HarvestError):
            failed = True
            out.write(error_row(v, res) + "\n")
        else:
            out.write(csv_row(v, res) + "\n")
    return EXIT_NONCONVERGENCE if failed else EXIT_OK


def read_sweep_csv(text: str) -> dict[str, np.ndarray]:
    lines = text.strip("\n").split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return {name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(header)}


def _load_json(path: str) -> Mapping:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidParameter(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidParameter("config must be a JSON object")
    return data


def _spec(args) -> QuadratureSpec:
    if args.rel_tol is None:
        return QuadratureSpec()
    if not args.rel_tol > 0:
        raise InvalidParameter(f"--rel-tol must be positive, got {args.rel_tol}")
    return QuadratureSpec(rel_tol=args.rel_tol)


def _open_out(path: str | None) -> TextIO:
    return open(path, "w", newline="") if path else sys.stdout


def _emit(doc: dict, path: str | None) -> None:
    out = _open_out(path)
    try:
        json.dump(doc, out, indent=2, sort_keys=False)
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_compute(args) -> int:
    if not args.config:
        raise InvalidParameter("compute needs --config")
    config = validate(PairConfig.from_dict(_load_json(args.config)))
    elements = compute_elements(config, _spec(args))
    _emit(elements_to_json(elements, config), args.out)
    return EXIT_OK


def _sweep(request: SweepRequest, args) -> int:
    out = _open_out(args.out)
    try:
        return run_sweep(request, out, _spec(args), max(1, args.threads))
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_sweep(args) -> int:
    if not args.config:
        raise InvalidParameter("sweep needs --config")
    return _sweep(SweepRequest.from_dict(_load_json(args.config)), args)


def cmd_figure2(args) -> int:
    return _sweep(figure2_request(args.panel), args)


def cmd_oracle_check(args) -> int:
    from .elements import EvaluationContext, local_noise, correlation_M
    from .oracle.modes import discrete_mode_elements

    if args.config:
        config = validate(PairConfig.from_dict(_load_json(args.config)))
    else:
        config = figure2_request("a").base.replace(delay=5.0)
    result = discrete_mode_elements(config)
    ctx = EvaluationContext(config, _spec(args))
    L, _ = local_noise(ctx)
    M, _ = correlation_M(ctx)
    dL = abs(result.elements.local_noise - L) / L
    dM = abs(abs(result.elements.correlation) - abs(M)) / abs(M)
    ok = dL < 0.02 and dM < 0.02
    _emit({"L_continuum": L, "L_modes": result.elements.local_noise,
           "abs_M_continuum": abs(M), "abs_M_modes": abs(result.elements.correlation),
           "rel_diff_L": dL, "rel_diff_abs_M": dM, "mode_sum_converged": result.converged,
           "box_length": result.box.box_length, "mode_cut": result.box.mode_cut,
           "passed": ok, "config": config.to_dict()}, args.out)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def signal_report(lambdas: Sequence[float] = (1e-2, 10 ** -2.5, 1e-3)) -> dict:
    from .oracle.signaling import (commuting, field_like, leading_order_signal,
                                   mutual_information, rho_b_signal, trace_norm,
                                   truncation_change)

    norms, residuals = [], []
    for lam in lambdas:
        sc = field_like(lam)
        signal, norm = rho_b_signal(sc)
        norms.append(norm)
        residuals.append(trace_norm(signal - leading_order_signal(sc)))
    logl = np.log(lambdas)
    slope = float(np.polyfit(logl, np.log(norms), 1)[0])
    residual_slope = float(np.polyfit(logl, np.log(residuals), 1)[0])
    comm = commuting(0.5)
    comm_norm = rho_b_signal(comm)[1]
    mi = mutual_information(comm)
    trunc = truncation_change(field_like(lambdas[0]))
    passed = (comm_norm <= 1e-12 and abs(slope - 2.0) <= 0.05 and residual_slope >= 2.5
              and mi >= 1e-6 and trunc < 1e-8)
    return {"lambdas": list(lambdas), "signal_norms": norms, "signal_slope": slope,
            "residual_norms": residuals, "residual_slope": residual_slope,
            "commuting_signal_norm": comm_norm, "commuting_mutual_information": mi,
            "truncation_change_16_levels": trunc, "passed": passed}


def cmd_signal_check(args) -> int:
    report = signal_report()
    _emit(report, args.out)
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="udwharvest",
                                     description="Leading-order detector entanglement harvesting.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--rel-tol", type=float, default=None, dest="rel_tol",
                        help="relative quadrature tolerance (default 1e-8)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("compute", parents=[common], help="all elements at one point (JSON)") \
        .set_defaults(func=cmd_compute)
    sub.add_parser("sweep", parents=[common], help="one-parameter sweep (CSV)") \
        .set_defaults(func=cmd_sweep)
    fig = sub.add_parser("figure2", parents=[common], help="delay sweep preset (CSV)")
    fig.add_argument("panel", choices=sorted(FIGURE_SCENARIOS))
    fig.set_defaults(func=cmd_figure2)
    sub.add_parser("oracle-check", parents=[common],
                   help="compare the mode-sum oracle with the continuum") \
        .set_defaults(func=cmd_oracle_check)
    sub.add_parser("signal-check", parents=[common],
                   help="run the tripartite signaling checks") \
        .set_defaults(func=cmd_signal_check)
    return parser


def main(argv: Iterable[str] | None = None) -> int:
    args = build_parser().parse_args(None if argv is None else list(argv))
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergence as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
