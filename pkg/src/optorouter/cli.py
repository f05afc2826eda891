"""Command-line entry point: ``optorouter <subcommand> --config FILE ...``.

Exit status: 0 success, 1 configuration or I/O error, 2 physics error
(singular response, no stable branch, no channels), 3 ``verify`` found a
closed-form/oracle mismatch.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _accel
from .config import ConfigWarning, Scenario, load_config
from .errors import ConfigError, OptoRouterError, PhysicsError
from .oracle import compare_modes
from .params import validate_regime
from .response import compute_spectrum
from .routing import find_channels, noise_budget, sweep_lambda
from .steady_state import operating_point, solve_branches

log = logging.getLogger("optorouter")

SCHEMA_VERSION = "1"
SPECTRUM_HEADER = "omega_rad_s,omega_over_omega1,R,T,Sv,S1T,S2T"
SWEEP_HEADER = "lambda_hz_m2,omega0_rad_s,T_center,R_lower,R_upper"
VERIFY_TOL = 1e-8
EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_VERIFY = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    params_file: Path
    out: Path | None = None
    format: str = "text"
    threads: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.out is not None and not self.out.parent.exists():
            raise ConfigError(f"output directory {self.out.parent} does not exist")


def _g(x) -> str:
    return "" if x is None else f"{x:.17g}"


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def spectrum_csv(spectrum) -> str:
    buf = io.StringIO()
    buf.write(SPECTRUM_HEADER + "\n")
    w1 = spectrum.omega1
    for w, r, t, v, a, b in zip(spectrum.grid, spectrum.R, spectrum.T, spectrum.Sv, spectrum.S1T, spectrum.S2T):
        buf.write(",".join(_g(float(x)) for x in (w, w / w1, r, t, v, a, b)) + "\n")
    return buf.getvalue()


def sweep_csv(rows) -> str:
    lines = [SWEEP_HEADER]
    for row in rows:
        lines.append(",".join(_g(x) for x in (row.coulomb_lambda, row.omega0, row.T_center, row.R_lower, row.R_upper)))
    return "\n".join(lines) + "\n"


def _json(payload: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=False) + "\n"


def _grid(scn: Scenario, opts: dict) -> np.ndarray:
    w1 = scn.params.omega1
    lo = opts.get("omega_min")
    hi = opts.get("omega_max")
    n = opts.get("points") or 4001
    lo = 0.9 * w1 if lo is None else lo
    hi = 1.1 * w1 if hi is None else hi
    if not hi > lo or n < 1:
        raise ConfigError(f"invalid grid: [{lo}, {hi}] with {n} points")
    return np.linspace(lo, hi, n)


def _steady(scn: Scenario):
    return operating_point(scn.params, scn.detuning_mode, scn.detuning_value)


def _cmd_steady_state(scn, cfg):
    ss = _steady(scn)
    branches = solve_branches(scn.params, ss.Delta_c)
    regime = validate_regime(scn.params, ss, scn.r0)
    if cfg.format == "json":
        text = _json(
            {
                "command": "steady-state",
                "Delta_c_rad_s": ss.Delta_c,
                "bistable": branches.bistable,
                "operating_branch": ss.branch_index,
                "branches": [
                    {
                        "index": b.branch_index, "Delta_rad_s": b.Delta, "n_cav": b.n_cav,
                        "q1s_m": b.q1s, "q2s_m": b.q2s, "c_s": [b.c_s.real, b.c_s.imag], "stable": b.stable,
                        "growth_rate_rad_s": b.growth_rate,
                    }
                    for b in branches
                ],
                "regime": {
                    "resolved_sideband": regime.resolved_sideband, "omega1_over_kappa": regime.sideband_ratio,
                    "red_detuned": regime.red_detuned, "detuning_offset": regime.detuning_offset,
                    "small_displacement": regime.small_displacement, "warnings": list(regime.warnings),
                },
            }
        )
    else:
        lines = [f"Delta_c = {ss.Delta_c:.12g} rad/s   branches = {len(branches)}", ""]
        lines.append(f"{'#':>2} {'Delta [rad/s]':>20} {'n_cav':>14} {'q1s [m]':>14} {'q2s [m]':>14}  stable")
        for b in branches:
            mark = "*" if b.branch_index == ss.branch_index else " "
            lines.append(
                f"{b.branch_index:>2} {b.Delta:>20.12g} {b.n_cav:>14.6e} {b.q1s:>14.6e} {b.q2s:>14.6e}  {b.stable!s:<5} {mark}"
            )
        lines.append("")
        lines.append(f"omega1/kappa = {regime.sideband_ratio:.6g} (resolved sideband: {regime.resolved_sideband})")
        lines += [f"warning: {w}" for w in regime.warnings]
        text = "\n".join(lines) + "\n"
    return text, ss, 0


def _cmd_spectrum(scn, cfg):
    ss = _steady(scn)
    grid = _grid(scn, cfg.options)
    spec = compute_spectrum(
        scn.params, ss, grid, temperature=cfg.options.get("temperature"), mode=cfg.options.get("mode", "oracle"),
        pulse=scn.pulse,
    )
    if cfg.format == "json":
        text = _json(
            {
                "command": "spectrum", "mode": spec.mode, "temperature_K": spec.temperature,
                "params_digest": spec.params_digest, "clamp_count": spec.clamp_count,
                "columns": SPECTRUM_HEADER.split(","),
                "data": [[float(x) for x in row] for row in zip(
                    spec.grid, spec.grid / spec.omega1, spec.R, spec.T, spec.Sv, spec.S1T, spec.S2T)],
            }
        )
    else:
        text = spectrum_csv(spec)
    if spec.clamp_count:
        log.warning("%d negative thermal values clamped to zero", spec.clamp_count)
    return text, ss, grid.size


def _cmd_verify(scn, cfg):
    ss = _steady(scn)
    grid = _grid(scn, {"points": cfg.options.get("points") or 4001})
    rep = compare_modes(scn.params, ss, grid)
    worst = rep.max_deviation("rederived", "oracle")
    ok = worst <= VERIFY_TOL
    if cfg.format == "json":
        text = _json({"command": "verify", "tolerance": VERIFY_TOL, "rederived_vs_oracle": worst, "ok": ok,
                      **rep.to_dict()})
    else:
        verdict = "PASS" if ok else "FAIL"
        text = rep.table() + f"\n\nrederived vs oracle: {worst:.3e} (tolerance {VERIFY_TOL:g}) {verdict}\n"
    return text, ss, grid.size, (EXIT_OK if ok else EXIT_VERIFY)


def _cmd_channels(scn, cfg):
    ss = _steady(scn)
    grid = _grid(scn, cfg.options)
    spec = compute_spectrum(scn.params, ss, grid, pulse=scn.pulse)
    rep = find_channels(spec, scn.params, ss, threshold=scn.detection_threshold)
    if cfg.format == "json":
        text = _json({"command": "channels", **rep.to_dict(), "midpoint_offset_rad_s": rep.midpoint_offset})
    else:
        lines = [f"lambda = {rep.coulomb_lambda:.6g} Hz/m^2   grid step = {rep.grid_step:.6g} rad/s", ""]
        lines.append(f"{'kind':<20} {'center [rad/s]':>20} {'center/omega1':>14} {'probability':>12} {'width [rad/s]':>14}")
        for c in rep.channels:
            lines.append(
                f"{c.kind:<20} {c.center_omega:>20.12g} {c.center_omega / rep.omega1:>14.8f} "
                f"{c.probability:>12.6f} {c.width:>14.6g}"
            )
        lines.append("")
        lines.append(f"omega0 = {_g(rep.omega0) or '-'} rad/s")
        if rep.midpoint_offset is not None:
            lines.append(f"reflect midpoint - omega1 = {rep.midpoint_offset:.6g} rad/s "
                         f"({rep.midpoint_offset / rep.grid_step:.2f} grid steps)")
        lines.append(f"noise floor = {rep.noise_floor:.6g}")
        lines += [f"warning: {w}" for w in rep.warnings]
        text = "\n".join(lines) + "\n"
    return text, ss, grid.size


def _cmd_sweep(scn, cfg):
    o = cfg.options
    if o.get("lambda_from") is None or o.get("lambda_to") is None:
        raise ConfigError("sweep needs --lambda-from and --lambda-to")
    values = np.linspace(o["lambda_from"], o["lambda_to"], o.get("steps") or 5)
    grid = _grid(scn, o)

    def solver(p):
        return operating_point(p, scn.detuning_mode, scn.detuning_value)

    rows = sweep_lambda(scn.params, values, grid, ss_solver=solver, threshold=scn.detection_threshold)
    for row in rows:
        if row.error:
            log.warning("lambda = %g: %s", row.coulomb_lambda, row.error)
    if cfg.format == "json":
        text = _json({"command": "sweep", "rows": [
            {"lambda_hz_m2": r.coulomb_lambda, "omega0_rad_s": r.omega0, "T_center": r.T_center,
             "R_lower": r.R_lower, "R_upper": r.R_upper, "error": r.error} for r in rows]})
    else:
        text = sweep_csv(rows)
    return text, None, grid.size


def _cmd_noise(scn, cfg):
    ss = _steady(scn)
    grid = _grid(scn, cfg.options)
    budget = noise_budget(scn.params, ss, grid, temperature=cfg.options.get("temperature"),
                          threshold=scn.detection_threshold)
    ok = budget.within(scn.noise_ceiling)
    if cfg.format == "json":
        text = _json({"command": "noise", "noise_ceiling": scn.noise_ceiling, "within_ceiling": ok,
                      **budget.to_dict()})
    else:
        lines = [f"T = {budget.temperature:g} K",
                 f"max Sv = {budget.max_Sv:.6g}   max S1T = {budget.max_S1T:.6g}   max S2T = {budget.max_S2T:.6g}", ""]
        lines.append(f"{'channel':<20} {'signal':>10} {'Sv':>12} {'S1T':>12} {'S2T':>12} {'noise/signal':>13}")
        for c in budget.channels:
            lines.append(f"{c.kind:<20} {c.signal:>10.6f} {c.Sv:>12.4e} {c.S1T:>12.4e} {c.S2T:>12.4e} {c.ratio:>13.4e}")
        lines.append("")
        lines.append(f"noise ceiling {scn.noise_ceiling:g}: {'met' if ok else 'exceeded'}")
        text = "\n".join(lines) + "\n"
    return text, ss, grid.size


COMMANDS = {
    "steady-state": _cmd_steady_state,
    "spectrum": _cmd_spectrum,
    "verify": _cmd_verify,
    "channels": _cmd_channels,
    "sweep": _cmd_sweep,
    "noise": _cmd_noise,
}


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    t0 = time.perf_counter()
    threads = cfg.threads or int(os.environ.get("OPTOROUTER_THREADS", "0") or 0)
    _accel.set_threads(threads)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConfigWarning)
            raw = load_config(cfg.params_file)
        for w in caught:
            log.warning("%s: %s", cfg.params_file, w.message)
        scn = Scenario.from_raw(raw)
        result = COMMANDS[cfg.command](scn, cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsError as exc:
        print(f"physics error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    text, ss, npts = result[:3]
    status = result[3] if len(result) > 3 else EXIT_OK
    try:
        if cfg.out is not None:
            write_atomic(cfg.out, text)
        else:
            stdout.write(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    delta = f"{ss.Delta:.10g} rad/s" if ss is not None else "per-row"
    print(
        f"{cfg.command}: Delta = {delta}, mode = {cfg.options.get('mode', 'oracle')}, grid = {npts}, "
        f"backend = {_accel.BACKEND}, wall = {time.perf_counter() - t0:.3f} s",
        file=sys.stderr,
    )
    return status


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="parameter file (key = value)")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json", "text"), help="output format")
    common.add_argument("--json", action="store_true", help="shorthand for --format json")
    common.add_argument("--threads", type=int, default=0, help="worker threads, 0 = auto (env OPTOROUTER_THREADS)")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--omega-min", type=float, help="lower grid bound in rad/s (default 0.9 omega1)")
    grid.add_argument("--omega-max", type=float, help="upper grid bound in rad/s (default 1.1 omega1)")
    grid.add_argument("--points", type=int, default=4001)

    parser = argparse.ArgumentParser(prog="optorouter", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("steady-state", parents=[common], help="mean-field branches")
    p = sub.add_parser("spectrum", parents=[common, grid], help="R, T and noise spectra as CSV")
    p.add_argument("--mode", choices=("oracle", "rederived", "paper"), default="oracle")
    p.add_argument("--temperature-k", dest="temperature", type=float)
    p = sub.add_parser("verify", parents=[common], help="closed form vs numeric solve")
    p.add_argument("--points", type=int, default=4001)
    sub.add_parser("channels", parents=[common, grid], help="detect routing channels")
    p = sub.add_parser("sweep", parents=[common, grid], help="sweep the Coulomb coupling")
    p.add_argument("--lambda-from", type=float, required=True)
    p.add_argument("--lambda-to", type=float, required=True)
    p.add_argument("--steps", type=int, default=5, help="number of coupling values (inclusive)")
    p = sub.add_parser("noise", parents=[common, grid], help="noise budget at the channel centers")
    p.add_argument("--temperature-k", dest="temperature", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    fmt = "json" if args.json else args.format
    if fmt is None:
        fmt = "csv" if args.command in ("spectrum", "sweep") else "text"
    opts = {k: v for k, v in vars(args).items()
            if k not in ("config", "out", "format", "json", "threads", "command", "verbose")}
    if opts.get("mode") == "paper":
        opts["mode"] = "paper_verbatim"
    try:
        cfg = RunConfig(args.command, args.config, args.out, fmt, args.threads, opts)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
