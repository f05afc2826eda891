"""Router semantics on top of spectra: channels, splitting, coupling sweeps and noise budgets."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridTooCoarse, NoChannels, OptoRouterError
from .params import SystemParams
from .response import Spectrum, compute_spectrum, default_grid
from .steady_state import SteadyState, operating_point

log = logging.getLogger(__name__)

DETECTION_THRESHOLD = 0.5
ROUTING_THRESHOLD = 0.95
NOISE_CEILING = 0.1
MIN_WIDTH_STEPS = 3
MIN_POINTS = 401

TRANSMIT = "transmit_right"
REFLECT_LOWER = "reflect_left_lower"
REFLECT_UPPER = "reflect_left_upper"
REFLECT_SINGLE = "reflect_left"  # router off: one reflection channel only


@dataclass(frozen=True)
class Channel:
    kind: str
    center_omega: float
    probability: float
    width: float


@dataclass(frozen=True)
class RoutingReport:
    coulomb_lambda: float
    channels: tuple[Channel, ...]
    omega0: float | None
    noise_floor: float
    clamp_count: int
    grid_step: float
    omega1: float
    warnings: tuple[str, ...] = ()

    def channel(self, kind: str) -> Channel | None:
        for ch in self.channels:
            if ch.kind == kind:
                return ch
        return None

    @property
    def midpoint_offset(self) -> float | None:
        """(center_upper + center_lower)/2 - omega1, when both reflect channels exist."""
        lo, hi = self.channel(REFLECT_LOWER), self.channel(REFLECT_UPPER)
        if lo is None or hi is None:
            return None
        return 0.5 * (lo.center_omega + hi.center_omega) - self.omega1

    def to_dict(self) -> dict:
        return {
            "coulomb_lambda": self.coulomb_lambda,
            "omega0_rad_s": self.omega0,
            "noise_floor": self.noise_floor,
            "clamp_count": self.clamp_count,
            "grid_step_rad_s": self.grid_step,
            "channels": [
                {"kind": c.kind, "center_rad_s": c.center_omega, "probability": c.probability, "width_rad_s": c.width}
                for c in self.channels
            ],
            "warnings": list(self.warnings),
        }


def _vertex(x: np.ndarray, y: np.ndarray, i: int) -> tuple[float, float]:
    """Vertex of the parabola through points i-1, i, i+1."""
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    curv = (d12 - d01) / (x2 - x0)
    if curv == 0.0:
        return float(x1), float(y1)
    xv = 0.5 * (x0 + x1) - d01 / (2.0 * curv)
    xv = min(max(xv, x0), x2)
    yv = y0 + d01 * (xv - x0) + curv * (xv - x0) * (xv - x1)
    return float(xv), float(yv)


def _local_maxima(y: np.ndarray, threshold: float) -> np.ndarray:
    if y.size < 3:
        return np.zeros(0, dtype=int)
    mid = y[1:-1]
    idx = np.nonzero((mid >= y[:-2]) & (mid > y[2:]) & (mid >= threshold))[0] + 1
    return idx


def _half_width(x: np.ndarray, y: np.ndarray, i: int, peak: float) -> float:
    level = 0.5 * peak

    def crossing(direction: int) -> float:
        j = i
        while 0 <= j + direction < y.size:
            k = j + direction
            if y[k] < level:
                frac = (y[j] - level) / (y[j] - y[k])
                return x[j] + frac * (x[k] - x[j])
            j = k
        return x[j]

    return float(crossing(+1) - crossing(-1))


def _peak(kind: str, x: np.ndarray, y: np.ndarray, i: int) -> Channel:
    center, value = _vertex(x, y, i)
    return Channel(kind=kind, center_omega=center, probability=value, width=_half_width(x, y, i, value))


def find_channels(
    spectrum: Spectrum,
    params: SystemParams,
    ss: SteadyState | None = None,
    threshold: float = DETECTION_THRESHOLD,
) -> RoutingReport:
    """Detect the output channels of ``spectrum``.

    A transmission maximum flanked by reflection maxima on both sides gives
    the three-channel (router on) picture; otherwise the reflection maximum
    closest to omega1 is the single channel, and with no reflection maximum
    at all the strongest transmission maximum is.
    """
    x, R, T = spectrum.grid, spectrum.R, spectrum.T
    if x.size < MIN_POINTS:
        raise GridTooCoarse(f"need at least {MIN_POINTS} grid points, got {x.size}")
    step = spectrum.step
    w1 = params.omega1
    notes = []
    reach = 20.0 * max(params.kappa, params.coupling_splitting_estimate())
    if x[0] > w1 - reach or x[-1] < w1 + reach:
        notes.append(f"grid does not cover omega1 +/- {reach:.4g} rad/s; channels outside it are not seen")

    t_idx = _local_maxima(T, threshold)
    r_idx = _local_maxima(R, threshold)
    r_centers = x[r_idx]

    best = None
    for i in t_idx:
        lower = r_idx[r_centers < x[i]]
        upper = r_idx[r_centers > x[i]]
        if lower.size and upper.size:
            cand = (abs(x[i] - w1), i, lower[-1], upper[0])
            if best is None or cand < best:
                best = cand

    if best is not None:
        _, i, lo, hi = best
        channels = [_peak(REFLECT_LOWER, x, R, lo), _peak(TRANSMIT, x, T, i), _peak(REFLECT_UPPER, x, R, hi)]
        omega0 = 0.5 * (channels[2].center_omega - channels[0].center_omega)
    elif r_idx.size:
        i = r_idx[np.argmin(np.abs(r_centers - w1))]
        channels = [_peak(REFLECT_SINGLE, x, R, i)]
        omega0 = None
    elif t_idx.size:
        i = t_idx[np.argmax(T[t_idx])]
        channels = [_peak(TRANSMIT, x, T, i)]
        omega0 = None
    else:
        raise NoChannels(f"no reflection or transmission maximum above {threshold}")

    for ch in channels:
        if ch.width < MIN_WIDTH_STEPS * step:
            raise GridTooCoarse(
                f"{ch.kind} channel at {ch.center_omega:.10g} rad/s is {ch.width / step:.2f} grid steps wide"
            )
        if ch.probability > 1.0 + 1e-6:
            notes.append(
                f"{ch.kind} probability {ch.probability:.6f} exceeds 1 (parametric gain from the conjugate input)"
            )
    return RoutingReport(
        coulomb_lambda=params.coulomb_lambda,
        channels=tuple(channels),
        omega0=omega0,
        noise_floor=float(np.max(spectrum.noise)),
        clamp_count=spectrum.clamp_count,
        grid_step=step,
        omega1=w1,
        warnings=tuple(notes),
    )


@dataclass(frozen=True)
class SweepRow:
    coulomb_lambda: float
    omega0: float | None
    T_center: float | None
    R_lower: float | None
    R_upper: float | None
    report: RoutingReport | None = None
    error: str | None = None


def _sweep_row(params, lam, grid, ss_solver, mode, threshold) -> SweepRow:
    lam = float(lam)
    if lam < 0 or not math.isfinite(lam):
        return SweepRow(lam, None, None, None, None, error=f"invalid coupling {lam!r}")
    try:
        p = params.updated(coulomb_lambda=lam)
        ss = ss_solver(p)
        g = default_grid(p) if grid is None else grid
        rep = find_channels(compute_spectrum(p, ss, g, mode=mode), p, ss, threshold=threshold)
    except OptoRouterError as exc:
        log.warning("sweep row lambda=%g failed: %s", lam, exc)
        return SweepRow(lam, None, None, None, None, error=f"{type(exc).__name__}: {exc}")
    t = rep.channel(TRANSMIT)
    lo, hi = rep.channel(REFLECT_LOWER), rep.channel(REFLECT_UPPER)
    return SweepRow(
        lam,
        rep.omega0,
        t.probability if t else None,
        lo.probability if lo else None,
        hi.probability if hi else None,
        report=rep,
    )


def sweep_lambda(
    params: SystemParams,
    lambda_values: Sequence[float],
    grid=None,
    ss_solver: Callable[[SystemParams], SteadyState] = operating_point,
    mode: str = "oracle",
    threshold: float = DETECTION_THRESHOLD,
    workers: int | None = None,
) -> list[SweepRow]:
    """One routing report per coupling value, re-solving the steady state each time.

    Rows are computed concurrently on ``workers`` threads (default: one per
    row, capped at the CPU count) and always come back in the order of
    ``lambda_values``. Row failures are recorded in ``SweepRow.error``; the
    sweep continues.
    """
    if len(lambda_values) == 0:
        raise ValueError("lambda_values must be nonempty")
    if workers is None:
        workers = min(len(lambda_values), os.cpu_count() or 1)

    def row(lam):
        return _sweep_row(params, lam, grid, ss_solver, mode, threshold)

    if workers <= 1:
        return [row(lam) for lam in lambda_values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(row, lambda_values))


@dataclass(frozen=True)
class ChannelNoise:
    kind: str
    center_omega: float
    signal: float
    Sv: float
    S1T: float
    S2T: float

    @property
    def ratio(self) -> float:
        return (self.Sv + self.S1T + self.S2T) / self.signal


@dataclass(frozen=True)
class NoiseBudget:
    temperature: float
    max_Sv: float
    max_S1T: float
    max_S2T: float
    channels: tuple[ChannelNoise, ...] = field(default_factory=tuple)

    def within(self, ceiling: float = NOISE_CEILING) -> bool:
        return all(ch.ratio <= ceiling for ch in self.channels)

    def to_dict(self) -> dict:
        return {
            "temperature_K": self.temperature,
            "max_Sv": self.max_Sv,
            "max_S1T": self.max_S1T,
            "max_S2T": self.max_S2T,
            "channels": [
                {
                    "kind": c.kind, "center_rad_s": c.center_omega, "signal": c.signal,
                    "Sv": c.Sv, "S1T": c.S1T, "S2T": c.S2T, "ratio": c.ratio,
                }
                for c in self.channels
            ],
        }


def noise_budget(
    params: SystemParams,
    ss: SteadyState,
    grid=None,
    temperature: float | None = None,
    mode: str = "oracle",
    threshold: float = DETECTION_THRESHOLD,
) -> NoiseBudget:
    """Noise maxima over the grid and noise-to-signal ratios at each channel center.

    Channel-center values are evaluated exactly at the interpolated centers.
    """
    spectrum = compute_spectrum(params, ss, grid, temperature=temperature, mode=mode)
    channels = []
    try:
        report = find_channels(spectrum, params, ss, threshold=threshold)
    except (NoChannels, GridTooCoarse) as exc:
        log.warning("noise budget without channel ratios: %s", exc)
        report = None
    if report is not None:
        centers = np.array([c.center_omega for c in report.channels])
        at = compute_spectrum(params, ss, np.sort(centers), temperature=spectrum.temperature, mode=mode)
        order = np.argsort(centers)
        for pos, ch in zip(np.argsort(order), report.channels):
            signal = max(at.R[pos], at.T[pos])
            channels.append(ChannelNoise(ch.kind, ch.center_omega, float(signal),
                                         float(at.Sv[pos]), float(at.S1T[pos]), float(at.S2T[pos])))
    return NoiseBudget(
        temperature=spectrum.temperature,
        max_Sv=float(spectrum.Sv.max()),
        max_S1T=float(spectrum.S1T.max()),
        max_S2T=float(spectrum.S2T.max()),
        channels=tuple(channels),
    )
