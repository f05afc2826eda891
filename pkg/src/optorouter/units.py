"""Internal rescaling.

Frequencies are measured in units of ``omega1``, lengths in units of
``sqrt(hbar / (m1 omega1))`` and masses in units of ``m1``. Forces are then
measured in ``m1 omega1^2 x0``. Every matrix entry of the linearized problem
becomes O(1e-6 .. 1) instead of spanning ~50 decades in SI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .params import SystemParams
    from .steady_state import SteadyState


@dataclass(frozen=True)
class Scaled:
    """Dimensionless coefficients of the linearized Langevin equations at one branch."""

    w_unit: float  # omega1 (rad/s)
    x_unit: float  # sqrt(hbar / (m1 omega1)) (m)
    force_unit: float  # m1 omega1^2 x0 (N)
    kappa: float
    delta: float
    w2: float
    mu2: float  # m2 / m1
    gamma1: float
    gamma2: float
    G: complex  # g x0 c_s / omega1
    Lam: float  # hbar lam / (m1 omega1^2)

    @classmethod
    def build(cls, params: "SystemParams", ss: "SteadyState") -> "Scaled":
        w = params.omega1
        x0 = params.x_zpf_scale
        return cls(
            w_unit=w,
            x_unit=x0,
            force_unit=params.m1 * w * w * x0,
            kappa=params.kappa / w,
            delta=ss.Delta / w,
            w2=params.omega2 / w,
            mu2=params.m2 / params.m1,
            gamma1=params.gamma1 / w,
            gamma2=params.gamma2 / w,
            G=complex(params.g * x0 * ss.c_s / w),
            Lam=params.constants.hbar * params.coulomb_lambda / (params.m1 * w * w),
        )

    @property
    def field_unit(self) -> float:
        """Conversion of a scaled cavity response per input field back to SI (s^1/2)."""
        return 1.0 / math.sqrt(self.w_unit)
