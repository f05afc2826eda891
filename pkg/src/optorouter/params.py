"""Physical constants, device parameters and regime diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Mapping

from .errors import MissingKey, NonFinite, NonPositive, NonPositiveDistance

if TYPE_CHECKING:
    from .steady_state import SteadyState


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values in SI units."""

    hbar: float = 1.054571817e-34
    k_B: float = 1.380649e-23
    eps0: float = 8.8541878128e-12
    c_light: float = 299792458.0

    def __post_init__(self):
        for name in ("hbar", "k_B", "eps0", "c_light"):
            if not getattr(self, name) > 0:
                raise NonPositive(name, getattr(self, name))


CODATA = PhysicalConstants()

EPSILON_CONVENTIONS = ("with_hbar", "paper_verbatim")


@dataclass(frozen=True)
class SystemParams:
    """All device parameters in SI units, plus the quantities derived from them.

    Build instances with :func:`derive_parameters` or :meth:`from_base`.
    Use :meth:`updated` to change base parameters (derived fields are
    recomputed). ``dataclasses.replace`` on a derived field such as ``g``
    deliberately overrides it, which is how limiting cases (``g = 0``,
    ``eps_l = 0``) are set up.
    """

    lambda_pump: float
    L: float
    omega1: float
    omega2: float
    m1: float
    m2: float
    Q1: float
    Q2: float
    kappa: float
    power: float
    temperature: float
    coulomb_lambda: float
    epsilon_convention: str
    # derived
    omega_c: float
    omega_l: float
    g: float
    gamma1: float
    gamma2: float
    eps_l: float
    constants: PhysicalConstants = field(default=CODATA)

    @classmethod
    def from_base(
        cls,
        *,
        lambda_pump: float,
        L: float,
        omega1: float,
        omega2: float,
        m1: float,
        m2: float,
        Q1: float,
        Q2: float,
        kappa: float,
        power: float,
        temperature: float,
        coulomb_lambda: float,
        epsilon_convention: str = "with_hbar",
        constants: PhysicalConstants = CODATA,
    ) -> "SystemParams":
        values = dict(
            lambda_pump=lambda_pump, L=L, omega1=omega1, omega2=omega2, m1=m1, m2=m2,
            Q1=Q1, Q2=Q2, kappa=kappa, power=power, temperature=temperature,
            coulomb_lambda=coulomb_lambda,
        )
        for name, value in values.items():
            value = float(value)
            if math.isnan(value) or (math.isinf(value) and name not in ("Q1", "Q2")):
                raise NonFinite(name, value)
            values[name] = value
        for name in ("lambda_pump", "L", "omega1", "omega2", "m1", "m2", "Q1", "Q2", "kappa"):
            if not values[name] > 0:
                raise NonPositive(name, values[name])
        for name in ("power", "temperature", "coulomb_lambda"):
            if values[name] < 0:
                raise NonPositive(name, values[name])
        if epsilon_convention not in EPSILON_CONVENTIONS:
            raise ValueError(f"epsilon_convention must be one of {EPSILON_CONVENTIONS}, got {epsilon_convention!r}")

        omega_c = 2.0 * math.pi * constants.c_light / values["lambda_pump"]
        # The pump sits within ~w1 of the cavity: the difference is 1e-9 relative.
        omega_l = omega_c
        flux = 2.0 * values["kappa"] * values["power"] / omega_l
        if epsilon_convention == "with_hbar":
            flux /= constants.hbar
        return cls(
            **values,
            epsilon_convention=epsilon_convention,
            omega_c=omega_c,
            omega_l=omega_l,
            g=omega_c / values["L"],
            gamma1=values["omega1"] / values["Q1"],
            gamma2=values["omega2"] / values["Q2"],
            eps_l=math.sqrt(flux),
            constants=constants,
        )

    def base(self) -> dict[str, Any]:
        return dict(
            lambda_pump=self.lambda_pump, L=self.L, omega1=self.omega1, omega2=self.omega2,
            m1=self.m1, m2=self.m2, Q1=self.Q1, Q2=self.Q2, kappa=self.kappa, power=self.power,
            temperature=self.temperature, coulomb_lambda=self.coulomb_lambda,
            epsilon_convention=self.epsilon_convention, constants=self.constants,
        )

    def updated(self, **changes: Any) -> "SystemParams":
        """Return a copy with base parameters changed and derived ones recomputed."""
        base = self.base()
        unknown = set(changes) - set(base)
        if unknown:
            raise TypeError(f"not a base parameter: {sorted(unknown)}")
        base.update(changes)
        return SystemParams.from_base(**base)

    @property
    def stiffness(self) -> float:
        """Effective static spring constant of the NMM, m1 w1^2 - (hbar lam)^2 / (m2 w2^2)."""
        hl = self.constants.hbar * self.coulomb_lambda
        return self.m1 * self.omega1**2 - hl * hl / (self.m2 * self.omega2**2)

    @property
    def x_zpf_scale(self) -> float:
        """Characteristic length sqrt(hbar / (m1 w1)) used for internal rescaling."""
        return math.sqrt(self.constants.hbar / (self.m1 * self.omega1))

    def coupling_splitting_estimate(self) -> float:
        """First-order normal-mode half-splitting hbar*lam / (2 m2 w2) in rad/s."""
        return self.constants.hbar * self.coulomb_lambda / (2.0 * self.m2 * self.omega2)

    def with_limit(self, **overrides: float) -> "SystemParams":
        """Shorthand for ``dataclasses.replace`` used to set derived fields directly."""
        return replace(self, **overrides)


def coulomb_strength(charge1: float, charge2: float, r0: float, constants: PhysicalConstants = CODATA) -> float:
    """Coulomb coupling lam = q1 q2 / (2 pi hbar eps0 r0^3) in Hz/m^2.

    ``charge1``/``charge2`` are the products C*V of the two gates. The sign
    follows the product of the charges.
    """
    if not r0 > 0:
        raise NonPositiveDistance(r0)
    return charge1 * charge2 / (2.0 * math.pi * constants.hbar * constants.eps0 * r0**3)


def _number(raw: Mapping[str, Any], key: str, *, allow_inf: bool = False) -> float:
    value = raw[key]
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise NonFinite(key, value) from None
    if math.isnan(x) or (math.isinf(x) and not allow_inf):
        raise NonFinite(key, value)
    return x


def _first(raw: Mapping[str, Any], *keys: str) -> str:
    for key in keys:
        if key in raw:
            return key
    raise MissingKey(keys[0] if len(keys) == 1 else " or ".join(keys))


def _angular(raw: Mapping[str, Any], rad_key: str, hz_key: str) -> float:
    key = _first(raw, hz_key, rad_key)
    if key in raw and rad_key in raw and hz_key in raw:
        raise ValueError(f"give either {rad_key!r} or {hz_key!r}, not both")
    x = _number(raw, key)
    return 2.0 * math.pi * x if key == hz_key else x


def derive_parameters(raw: Mapping[str, Any], constants: PhysicalConstants = CODATA) -> SystemParams:
    """Build :class:`SystemParams` from a flat key/value mapping in SI units.

    Frequencies are accepted either as angular (``*_rad_s``) or ordinary
    (``*_hz``) values. The Coulomb coupling is read from ``coulomb_lambda``
    or computed from ``charge1_C``, ``charge2_C`` and ``r0_m``; when both are
    present the direct value is used and a warning is emitted.
    """
    for key in ("lambda_pump_m", "L_m"):
        if key not in raw:
            raise MissingKey(key)
    lambda_pump = _number(raw, "lambda_pump_m")
    L = _number(raw, "L_m")
    omega1 = _angular(raw, "omega1_rad_s", "f1_hz")
    omega2 = _angular(raw, "omega2_rad_s", "f2_hz")
    for key in ("m1_kg", "m2_kg", "Q1", "Q2"):
        if key not in raw:
            raise MissingKey(key)
    m1 = _number(raw, "m1_kg")
    m2 = _number(raw, "m2_kg")
    Q1 = _number(raw, "Q1", allow_inf=True)
    Q2 = _number(raw, "Q2", allow_inf=True)
    key = _first(raw, "kappa_rad_s", "kappa_over_omega1")
    kappa = _number(raw, key) * (omega1 if key == "kappa_over_omega1" else 1.0)
    for key in ("power_W", "temperature_K"):
        if key not in raw:
            raise MissingKey(key)
    power = _number(raw, "power_W")
    temperature = _number(raw, "temperature_K")

    charge_keys = ("charge1_C", "charge2_C", "r0_m")
    has_charges = all(k in raw for k in charge_keys)
    if "coulomb_lambda" in raw:
        coulomb_lambda = _number(raw, "coulomb_lambda")
        if has_charges:
            warnings.warn("both coulomb_lambda and charges given; using coulomb_lambda", stacklevel=2)
    elif has_charges:
        coulomb_lambda = coulomb_strength(
            _number(raw, "charge1_C"), _number(raw, "charge2_C"), _number(raw, "r0_m"), constants
        )
    else:
        raise MissingKey("coulomb_lambda")

    return SystemParams.from_base(
        lambda_pump=lambda_pump, L=L, omega1=omega1, omega2=omega2, m1=m1, m2=m2,
        Q1=Q1, Q2=Q2, kappa=kappa, power=power, temperature=temperature,
        coulomb_lambda=coulomb_lambda,
        epsilon_convention=str(raw.get("epsilon_convention", "with_hbar")).strip(),
        constants=constants,
    )


RESOLVED_SIDEBAND_RATIO = 10.0
RED_DETUNING_TOLERANCE = 0.1
SMALL_DISPLACEMENT_TOLERANCE = 1e-2


@dataclass(frozen=True)
class RegimeReport:
    resolved_sideband: bool
    sideband_ratio: float
    red_detuned: bool
    detuning_offset: float
    small_displacement: bool | None
    displacement_ratio: float | None
    warnings: tuple[str, ...] = ()


def validate_regime(params: SystemParams, steady: "SteadyState", r0: float | None = None) -> RegimeReport:
    """Diagnose the operating regime; never raises."""
    ratio = params.omega1 / params.kappa
    # one part in 1e12 of slack so that kappa = w1/10 reads as exactly 10
    resolved = ratio >= RESOLVED_SIDEBAND_RATIO * (1.0 - 1e-12)
    offset = abs(steady.Delta - params.omega1) / params.omega1
    red = offset <= RED_DETUNING_TOLERANCE
    notes = []
    if not resolved:
        notes.append(f"not sideband resolved: omega1/kappa = {ratio:.4g} < {RESOLVED_SIDEBAND_RATIO:g}")
    if not red:
        notes.append(f"effective detuning {steady.Delta:.6g} rad/s is not close to omega1 (offset {offset:.3g})")
    small = disp = None
    if r0 is not None and r0 > 0:
        disp = max(abs(steady.q1s), abs(steady.q2s)) / r0
        small = disp <= SMALL_DISPLACEMENT_TOLERANCE
        if not small:
            notes.append(f"displacement/r0 = {disp:.3g}: second-order Coulomb expansion is questionable")
    if not steady.stable:
        notes.append("operating branch is dynamically unstable")
    return RegimeReport(resolved, ratio, red, offset, small, disp, tuple(notes))
