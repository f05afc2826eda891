"""Transfer functions and output spectra.

Three evaluation modes share one :class:`ResponseSet` shape:

``oracle``
    numeric 4x4 solve (:mod:`optorouter.oracle`), the default;
``rederived``
    hand-eliminated closed form of the same linear system;
``paper_verbatim``
    the published closed-form expressions transcribed symbol for symbol,
    kept for comparison only (their discrepancy is reported, never patched).

All spectra are per unit input spectral density, so ``R`` and ``T`` read
directly as routing probabilities.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import NegativeTemperature, SingularDenominator
from .params import SystemParams
from .steady_state import SteadyState
from .units import Scaled

log = logging.getLogger(__name__)

MODES = ("paper_verbatim", "rederived", "oracle")
MODE_ALIASES = {"paper": "paper_verbatim", "verbatim": "paper_verbatim"}
SINGULAR_TOL = 1e-30
COTH_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class ResponseSet:
    """E, F, V1, V2 in SI units and the denominator ``d`` in scaled units.

    Fields are complex scalars or arrays matching ``omega``.
    """

    E: complex | np.ndarray
    F: complex | np.ndarray
    V1: complex | np.ndarray
    V2: complex | np.ndarray
    d: complex | np.ndarray
    omega: float | np.ndarray
    source: str


def _normalize_mode(mode: str) -> str:
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES + tuple(MODE_ALIASES)}, got {mode!r}")
    return mode


def _check_denominator(d, omega):
    d = np.atleast_1d(d)
    bad = ~(np.abs(d) >= SINGULAR_TOL)
    if bad.any():
        i = int(np.argmax(bad))
        raise SingularDenominator(float(np.atleast_1d(omega)[i]), float(abs(d[i])))


def _rederived(params: SystemParams, ss: SteadyState, omega: np.ndarray, backend=None):
    s = Scaled.build(params, ss)
    E, F, V1, V2, d = _accel.closed_form(
        omega / s.w_unit, s.kappa, s.delta, s.w2, s.mu2, s.gamma1, s.gamma2, s.G, s.Lam, backend=backend
    )
    return E * s.field_unit, F * s.field_unit, V1 / s.force_unit, V2 / s.force_unit, d


def _paper_verbatim(params: SystemParams, ss: SteadyState, w: np.ndarray):
    # Published closed form, transcribed symbol for symbol (signs and grouping kept).
    k = params.kappa
    D = ss.Delta
    g = params.g
    hb = params.constants.hbar
    lam = params.coulomb_lambda
    n = ss.n_cav
    P1 = params.m1 * (w**2 + 1j * w * params.gamma1 - params.omega1**2)
    P2 = params.m2 * (w**2 + 1j * w * params.gamma2 - params.omega2**2)
    r = np.sqrt(2.0 * k)
    d = (2 * k * 1j + D - w) * (
        -(hb**2) * lam**2 * (D**2 + (2 * k * 1j + w) ** 2)
        + P2 * (2 * n * g**2 * hb * D + (D - 2 * k * 1j - w) * (D + 2 * k * 1j + w) * P1)
    )
    E = r * (1.0 / (2 * k + 1j * (D - w)) + 1j * g**2 * hb * n * (2 * k * 1j + D + w) * P2 / d)
    F = 1j * r * g**2 * hb * n * (2 * k * 1j - D + w) * P2 / d
    V1 = g * n * ((2 * k * 1j + w) ** 2 - D**2) * P2 / d
    V2 = g * hb * lam * n * ((2 * k * 1j + w) ** 2 - D**2) / d
    scale = params.m1 * params.m2 * params.omega1**7
    return E, F, V1, V2, d / scale


def transfer_functions(
    params: SystemParams, ss: SteadyState, omega, mode: str = "oracle", backend: str | None = None
) -> ResponseSet:
    """E, F, V1, V2 and d at ``omega`` (scalar or array, rad/s)."""
    mode = _normalize_mode(mode)
    if mode == "oracle":
        from .oracle import solve_response

        return solve_response(params, ss, omega, backend=backend)
    scalar = np.ndim(omega) == 0
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if mode == "rederived":
        out = _rederived(params, ss, w, backend=backend)
    else:
        out = _paper_verbatim(params, ss, w)
    _check_denominator(out[4], w)
    if scalar:
        out = tuple(x[0] for x in out)
        return ResponseSet(*out, omega=float(w[0]), source=mode)
    return ResponseSet(*out, omega=w, source=mode)


def reflection_transmission(rs: ResponseSet, kappa: float):
    """R = |sqrt(2 kappa) E - 1|^2 and T = |sqrt(2 kappa) E|^2."""
    t = np.sqrt(2.0 * kappa) * rs.E
    return np.abs(t - 1.0) ** 2, np.abs(t) ** 2


def coth_factor(omega, temperature: float, hbar: float = 1.054571817e-34, k_B: float = 1.380649e-23):
    """Bath factor 1 + coth(hbar w / (2 k_B T)).

    At T = 0 this is 2, 0 or 1 for w > 0, w < 0, w = 0. At w = 0 and T > 0
    it is also 1 (symmetric value); use :func:`thermal_weight` where the
    finite limit of w * factor is needed.
    """
    if temperature < 0:
        raise NegativeTemperature(temperature)
    w = np.asarray(omega, dtype=float)
    if temperature == 0:
        out = 1.0 + np.sign(w)
    else:
        x = hbar * w / (2.0 * k_B * temperature)
        small = np.abs(x) < COTH_SERIES_CUTOFF
        with np.errstate(divide="ignore", invalid="ignore"):
            exact = 1.0 + 1.0 / np.tanh(x)
            series = 1.0 + 1.0 / x + x / 3.0
        out = np.where(small, series, exact)
        out = np.where(w == 0, 1.0, out)
    return out if out.ndim else float(out)


def thermal_weight(omega, temperature: float, hbar: float = 1.054571817e-34, k_B: float = 1.380649e-23):
    """(-w) [1 + coth(-hbar w / (2 k_B T))] with its finite w -> 0 limit 2 k_B T / hbar."""
    if temperature < 0:
        raise NegativeTemperature(temperature)
    w = np.asarray(omega, dtype=float)
    if temperature == 0:
        out = np.where(w < 0, -2.0 * w, 0.0)
    else:
        x = -hbar * w / (2.0 * k_B * temperature)
        small = np.abs(x) < COTH_SERIES_CUTOFF
        # (-w)(1 + 1/x + x/3) with (-w)/x = 2 k_B T / hbar exactly
        series = -w + 2.0 * k_B * temperature / hbar - w * x / 3.0
        exact = -w * coth_factor(-w, temperature, hbar, k_B)
        out = np.where(small, series, exact)
    return out if out.ndim else float(out)


def _thermal_raw(params: SystemParams, rs: ResponseSet, omega, temperature: float):
    c = params.constants
    weight = thermal_weight(omega, temperature, c.hbar, c.k_B)
    common = 2.0 * params.kappa * c.hbar * weight
    s1 = common * np.abs(rs.V1) ** 2 * params.gamma1 * params.m1
    s2 = common * np.abs(rs.V2) ** 2 * params.gamma2 * params.m2
    return np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)


def _clamp(x: np.ndarray) -> tuple[np.ndarray, int]:
    neg = x < 0
    count = int(np.count_nonzero(neg))
    if count:
        x = np.where(neg, 0.0, x)
    return x, count


def thermal_spectra(params: SystemParams, ss: SteadyState, rs: ResponseSet, omega, temperature: float):
    """Thermal contributions (S1T, S2T) of the NMM and NMR baths.

    Negative values can only arise from the sign convention of the bath
    correlator; they are clamped to zero and logged.
    """
    s1, s2 = _thermal_raw(params, rs, omega, temperature)
    s1, n1 = _clamp(s1)
    s2, n2 = _clamp(s2)
    if n1 + n2:
        log.warning("clamped %d negative thermal spectrum values", n1 + n2)
    if s1.ndim == 0:
        return float(s1), float(s2)
    return s1, s2


def vacuum_spectrum(rs: ResponseSet, kappa: float):
    """Vacuum-noise contribution 4 kappa |F|^2."""
    return 4.0 * kappa * np.abs(rs.F) ** 2


@dataclass(frozen=True)
class SpectrumPoint:
    omega: float
    R: float
    T: float
    Sv: float
    S1T: float
    S2T: float


@dataclass(frozen=True)
class Spectrum:
    """Per-frequency channel quantities on a strictly increasing grid."""

    grid: np.ndarray
    R: np.ndarray
    T: np.ndarray
    Sv: np.ndarray
    S1T: np.ndarray
    S2T: np.ndarray
    mode: str
    temperature: float
    omega1: float
    params_digest: str
    clamp_count: int = 0
    pulse: tuple[float, float] | None = None
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.grid.size

    @property
    def points(self) -> list[SpectrumPoint]:
        return [
            SpectrumPoint(float(w), float(r), float(t), float(v), float(a), float(b))
            for w, r, t, v, a, b in zip(self.grid, self.R, self.T, self.Sv, self.S1T, self.S2T)
        ]

    @property
    def noise(self) -> np.ndarray:
        return self.Sv + self.S1T + self.S2T

    @property
    def S_cout(self) -> np.ndarray:
        return self.R + self.noise

    @property
    def S_dout(self) -> np.ndarray:
        return self.T + self.noise

    @property
    def step(self) -> float:
        return float(np.median(np.diff(self.grid))) if self.grid.size > 1 else 0.0


def params_digest(params: SystemParams, ss: SteadyState) -> str:
    text = repr(params) + "|" + repr((ss.Delta, ss.Delta_c, ss.branch_index))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def lorentzian_pulse(omega, center: float, width: float) -> np.ndarray:
    """Peak-normalized Lorentzian input profile with full width ``width``."""
    hw = 0.5 * width
    return hw * hw / ((np.asarray(omega, dtype=float) - center) ** 2 + hw * hw)


def default_grid(params: SystemParams, points: int = 4001, lo: float = 0.9, hi: float = 1.1) -> np.ndarray:
    return np.linspace(lo * params.omega1, hi * params.omega1, points)


def compute_spectrum(
    params: SystemParams,
    ss: SteadyState,
    grid=None,
    temperature: float | None = None,
    mode: str = "oracle",
    pulse: tuple[float, float] | None = None,
    backend: str | None = None,
) -> Spectrum:
    """Reflection, transmission and noise spectra on ``grid`` (rad/s).

    ``temperature`` defaults to ``params.temperature``. ``pulse`` is an
    optional ``(center, full_width)`` Lorentzian that multiplies R and T.
    """
    mode = _normalize_mode(mode)
    grid = default_grid(params) if grid is None else np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    if temperature is None:
        temperature = params.temperature
    rs = transfer_functions(params, ss, grid, mode=mode, backend=backend)
    R, T = reflection_transmission(rs, params.kappa)
    if pulse is not None:
        profile = lorentzian_pulse(grid, *pulse)
        R = R * profile
        T = T * profile
    Sv = vacuum_spectrum(rs, params.kappa)
    s1, s2 = _thermal_raw(params, rs, grid, temperature)
    s1, n1 = _clamp(s1)
    s2, n2 = _clamp(s2)
    if n1 + n2:
        log.warning("clamped %d negative thermal spectrum values", n1 + n2)
    return Spectrum(
        grid=grid, R=R, T=T, Sv=Sv, S1T=s1, S2T=s2, mode=mode, temperature=float(temperature),
        omega1=params.omega1, params_digest=params_digest(params, ss), clamp_count=n1 + n2, pulse=pulse,
    )
