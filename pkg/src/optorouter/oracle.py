"""Numeric ground truth: the linearized Langevin equations as a 4x4 complex solve.

Unknowns per frequency are ``[dc(w), dc^+(-w), dq1(w), dq2(w)]`` with the
momenta eliminated through the mechanical susceptibilities. Rows, in order:
cavity, conjugate cavity, NMM, NMR. Everything is assembled in the scaled
units of :mod:`optorouter.units`. No closed-form response expression is used
here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import SingularMatrix
from .params import SystemParams
from .response import MODES, SINGULAR_TOL, ResponseSet, transfer_functions
from .steady_state import SteadyState
from .units import Scaled

CHANNELS = ("c_in", "c_in_dag", "d_in", "d_in_dag", "xi1", "xi2")


@dataclass(frozen=True)
class LinearSystem:
    """Scaled system ``matrix @ x = sum(input_columns[ch] * ch)`` on a frequency grid.

    ``matrix`` has shape ``(N, 4, 4)`` and each forcing vector shape ``(4,)``.
    Omega is in rad/s.
    """

    matrix: np.ndarray
    input_columns: dict[str, np.ndarray]
    omega: np.ndarray
    scaled: Scaled

    def forcing(self) -> np.ndarray:
        """All forcing vectors as a ``(4, 6)`` matrix, columns in :data:`CHANNELS` order."""
        return np.stack([self.input_columns[ch] for ch in CHANNELS], axis=1)


def assemble(params: SystemParams, ss: SteadyState, omega) -> LinearSystem:
    s = Scaled.build(params, ss)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    w = omega / s.w_unit
    N = w.size
    M = np.zeros((N, 4, 4), dtype=np.complex128)
    M[:, 0, 0] = -1j * w + 2.0 * s.kappa + 1j * s.delta
    M[:, 0, 2] = -1j * s.G
    M[:, 1, 1] = -1j * w + 2.0 * s.kappa - 1j * s.delta
    M[:, 1, 2] = 1j * np.conj(s.G)
    M[:, 2, 0] = -np.conj(s.G)
    M[:, 2, 1] = -s.G
    M[:, 2, 2] = 1.0 - w * w - 1j * s.gamma1 * w
    M[:, 2, 3] = s.Lam
    M[:, 3, 2] = s.Lam
    M[:, 3, 3] = s.mu2 * (s.w2 * s.w2 - w * w - 1j * s.gamma2 * w)
    r = np.sqrt(2.0 * s.kappa)
    e = np.eye(4, dtype=np.complex128)
    cols = {
        "c_in": r * e[0],
        "c_in_dag": r * e[1],
        "d_in": r * e[0],
        "d_in_dag": r * e[1],
        "xi1": e[2],
        "xi2": e[3],
    }
    return LinearSystem(matrix=M, input_columns=cols, omega=omega, scaled=s)


def solve_system(system: LinearSystem, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Full scaled solution ``(X, det)``: ``X[i, :, j]`` is the response to channel ``j``."""
    B = np.broadcast_to(system.forcing(), (system.omega.size, 4, len(CHANNELS)))
    return _accel.solve_batched(system.matrix, B, backend=backend)


def solve_response(params: SystemParams, ss: SteadyState, omega, backend: str | None = None) -> ResponseSet:
    """Transfer functions from the numeric solve; shapes follow ``omega``."""
    scalar = np.ndim(omega) == 0
    system = assemble(params, ss, omega)
    X, det = solve_system(system, backend=backend)
    bad = ~(np.abs(det) >= SINGULAR_TOL)
    if bad.any():
        i = int(np.argmax(bad))
        raise SingularMatrix(float(system.omega[i]), float(abs(det[i])))
    s = system.scaled
    dc = X[:, 0, :]
    E = dc[:, 0] * s.field_unit
    F = dc[:, 1] * s.field_unit
    V1 = dc[:, 4] / s.force_unit
    V2 = dc[:, 5] / s.force_unit
    out = (E, F, V1, V2, det, system.omega)
    if scalar:
        out = tuple(x[0] for x in out)
    return ResponseSet(*out, source="oracle")


def _relative(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.abs(x), np.abs(y))
    diff = np.abs(x - y)
    return np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)


@dataclass(frozen=True)
class Deviation:
    max_relative: float
    omega_worst: float


@dataclass(frozen=True)
class DiscrepancyReport:
    """Per-coefficient maximum relative deviation for each pair of modes."""

    pairs: dict[tuple[str, str], dict[str, Deviation]] = field(default_factory=dict)
    points: int = 0

    def max_deviation(self, a: str, b: str) -> float:
        key = (a, b) if (a, b) in self.pairs else (b, a)
        return max(dev.max_relative for dev in self.pairs[key].values())

    def table(self) -> str:
        lines = [f"{'pair':<28}{'coef':<6}{'max rel dev':>14}   {'omega_worst [rad/s]':>22}"]
        for (a, b), devs in self.pairs.items():
            for coef, dev in devs.items():
                lines.append(f"{a + ' vs ' + b:<28}{coef:<6}{dev.max_relative:>14.3e}   {dev.omega_worst:>22.10g}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "pairs": [
                {
                    "a": a,
                    "b": b,
                    "coefficients": {
                        coef: {"max_relative": dev.max_relative, "omega_worst": dev.omega_worst}
                        for coef, dev in devs.items()
                    },
                }
                for (a, b), devs in self.pairs.items()
            ],
        }


def compare_modes(
    params: SystemParams, ss: SteadyState, grid, modes: tuple[str, ...] = MODES
) -> DiscrepancyReport:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    results = {m: transfer_functions(params, ss, grid, mode=m) for m in modes}
    pairs = {}
    for a, b in itertools.combinations(modes, 2):
        devs = {}
        for coef in ("E", "F", "V1", "V2"):
            rel = _relative(np.asarray(getattr(results[a], coef)), np.asarray(getattr(results[b], coef)))
            i = int(np.argmax(rel))
            devs[coef] = Deviation(float(rel[i]), float(grid[i]))
        pairs[(a, b)] = devs
    return DiscrepancyReport(pairs=pairs, points=grid.size)
