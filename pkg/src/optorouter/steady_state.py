"""Mean-field steady states of the driven cavity + two coupled oscillators.

Eliminating ``q1s`` from the mean-value equations gives a real cubic for the
effective detuning ``Delta = Delta_c - g q1s``::

    (Delta_c - Delta) (4 kappa^2 + Delta^2) K = hbar g^2 eps_l^2,
    K = m1 w1^2 - (hbar lam)^2 / (m2 w2^2).

It is solved in units of ``omega1`` by the closed-form cubic formula, and
each root is polished with Newton steps on the factored residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStiffness, NoStableBranch, SolverFailure
from .params import SystemParams

STABILITY_TOL = 1e-12  # on max Re(eigenvalue) in units of omega1; admits lossless oscillators
_ROOT_MERGE = 1e-9


@dataclass(frozen=True)
class SteadyState:
    c_s: complex
    n_cav: float
    q1s: float
    q2s: float
    Delta: float
    Delta_c: float
    branch_index: int = 0
    stable: bool = True
    growth_rate: float = float("nan")  # max Re(eigenvalue) of the drift matrix, rad/s
    p1s: float = 0.0
    p2s: float = 0.0


@dataclass(frozen=True)
class BranchSet:
    branches: tuple[SteadyState, ...]
    Delta_c: float

    @property
    def bistable(self) -> bool:
        return len(self.branches) > 1

    def __len__(self) -> int:
        return len(self.branches)

    def __iter__(self):
        return iter(self.branches)

    def __getitem__(self, i: int) -> SteadyState:
        return self.branches[i]


def _check_stiffness(params: SystemParams) -> float:
    K = params.stiffness
    if not K > 0:
        raise DegenerateStiffness(K)
    return K


def _beta(params: SystemParams, K: float) -> float:
    """Right-hand side of the cubic, hbar g^2 eps^2 / (K w1^3), dimensionless."""
    w = params.omega1
    return params.constants.hbar * params.g**2 * params.eps_l**2 / (K * w**3)


def _cubic_roots(delta_c: float, k: float, beta: float) -> list[float]:
    """Real roots of (delta_c - x)(4k^2 + x^2) = beta, ascending."""
    a2, a1, a0 = -delta_c, 4.0 * k * k, beta - 4.0 * k * k * delta_c
    shift = a2 / 3.0
    p = a1 - a2 * a2 / 3.0
    q = 2.0 * a2**3 / 27.0 - a2 * a1 / 3.0 + a0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        s = math.sqrt(disc)
        u = np.cbrt(-q / 2.0 - math.copysign(s, q))
        t = u - p / (3.0 * u) if u != 0.0 else 0.0
        roots = [t - shift]
    else:
        if p == 0.0:
            roots = [-shift]
        else:
            r = 2.0 * math.sqrt(-p / 3.0)
            arg = 3.0 * q / (p * r)
            phi = math.acos(max(-1.0, min(1.0, arg))) / 3.0
            roots = [r * math.cos(phi - 2.0 * math.pi * j / 3.0) - shift for j in range(3)]

    def h(x):
        return (delta_c - x) * (a1 + x * x) - beta

    def dh(x):
        return -(a1 + x * x) + 2.0 * x * (delta_c - x)

    polished = []
    for x in roots:
        for _ in range(4):
            slope = dh(x)
            if slope == 0.0:
                break
            step = h(x) / slope
            x -= step
            if abs(step) <= 4e-16 * max(1.0, abs(x)):
                break
        polished.append(x)
    polished.sort()
    merged: list[float] = []
    for x in polished:
        if merged and abs(x - merged[-1]) <= _ROOT_MERGE * max(1.0, abs(x)):
            continue
        merged.append(x)
    scale = max(abs(beta), a1 * max(1.0, abs(delta_c)), 1e-300)
    for x in merged:
        res = abs(h(x))
        if res > 1e-9 * scale:
            raise SolverFailure("cubic steady-state root did not converge", res)
    return merged


def drift_matrix(params: SystemParams, ss: SteadyState) -> np.ndarray:
    """Real 6x6 drift matrix of the linearized dynamics, in units of omega1.

    Variable order: dq1, dp1, dq2, dp2, Re dc, Im dc, with positions in
    units of sqrt(hbar/(m1 w1)) and momenta in units of m1 w1 x0.
    """
    w = params.omega1
    x0 = params.x_zpf_scale
    G = params.g * x0 * complex(ss.c_s) / w
    Gr, Gi = G.real, G.imag
    k = params.kappa / w
    d = ss.Delta / w
    mu2 = params.m2 / params.m1
    w2 = params.omega2 / w
    Lam = params.constants.hbar * params.coulomb_lambda / (params.m1 * w * w)
    g1 = params.gamma1 / w
    g2 = params.gamma2 / w
    A = np.zeros((6, 6))
    A[0, 1] = 1.0
    A[1, 0] = -1.0
    A[1, 1] = -g1
    A[1, 2] = -Lam
    A[1, 4] = 2.0 * Gr
    A[1, 5] = 2.0 * Gi
    A[2, 3] = 1.0 / mu2
    A[3, 2] = -mu2 * w2 * w2
    A[3, 0] = -Lam
    A[3, 3] = -g2
    A[4, 0] = -Gi
    A[4, 4] = -2.0 * k
    A[4, 5] = d
    A[5, 0] = Gr
    A[5, 4] = -d
    A[5, 5] = -2.0 * k
    return A


def growth_rate(params: SystemParams, ss: SteadyState) -> float:
    """Largest real part of the drift eigenvalues, in rad/s."""
    ev = np.linalg.eigvals(drift_matrix(params, ss))
    return float(np.max(ev.real)) * params.omega1


def _branch(params: SystemParams, K: float, Delta: float, Delta_c: float, index: int) -> SteadyState:
    eps = params.eps_l
    denom = complex(2.0 * params.kappa, Delta)
    c_s = complex(eps / denom)
    n = eps * eps / (4.0 * params.kappa**2 + Delta * Delta)
    hbar = params.constants.hbar
    q1s = hbar * params.g * n / K
    q2s = -hbar * params.coulomb_lambda * q1s / (params.m2 * params.omega2**2)
    n, q1s, q2s, Delta = float(n), float(q1s), float(q2s), float(Delta)
    ss = SteadyState(c_s=c_s, n_cav=n, q1s=q1s, q2s=q2s, Delta=Delta, Delta_c=Delta_c, branch_index=index)
    rate = growth_rate(params, ss)
    stable = rate / params.omega1 < STABILITY_TOL
    return SteadyState(
        c_s=c_s, n_cav=n, q1s=q1s, q2s=q2s, Delta=Delta, Delta_c=Delta_c,
        branch_index=index, stable=stable, growth_rate=rate,
    )


def solve_branches(params: SystemParams, Delta_c: float) -> BranchSet:
    """All mean-field branches at bare detuning ``Delta_c`` (rad/s), ordered by Delta."""
    K = _check_stiffness(params)
    w = params.omega1
    roots = _cubic_roots(Delta_c / w, params.kappa / w, _beta(params, K))
    branches = tuple(_branch(params, K, x * w, Delta_c, i) for i, x in enumerate(roots))
    return BranchSet(branches=branches, Delta_c=Delta_c)


def detuning_for_target(params: SystemParams, Delta_target: float) -> float:
    """Bare detuning Delta_c that puts a branch at effective detuning ``Delta_target``."""
    K = _check_stiffness(params)
    n = params.eps_l**2 / (4.0 * params.kappa**2 + Delta_target**2)
    q1s = params.constants.hbar * params.g * n / K
    return Delta_target + params.g * q1s


def select_operating_branch(branches: BranchSet, Delta_target: float) -> SteadyState:
    """Stable branch closest to ``Delta_target``; ties go to the smaller |Delta|."""
    stable = [b for b in branches if b.stable]
    if not stable:
        raise NoStableBranch(f"all {len(branches)} branches at Delta_c = {branches.Delta_c:.6g} are unstable")
    return min(stable, key=lambda b: (abs(b.Delta - Delta_target), abs(b.Delta)))


DETUNING_MODES = ("fix_effective", "fix_bare")


def operating_point(
    params: SystemParams, detuning_mode: str = "fix_effective", detuning_value: float | None = None
) -> SteadyState:
    """Steady state for a run.

    ``fix_effective``: ``detuning_value`` is the effective detuning Delta
    (default ``omega1``); the bare detuning is derived from it.
    ``fix_bare``: ``detuning_value`` is Delta_c and the branch closest to
    ``omega1`` is taken.
    """
    if detuning_mode == "fix_effective":
        target = params.omega1 if detuning_value is None else float(detuning_value)
        Delta_c = detuning_for_target(params, target)
    elif detuning_mode == "fix_bare":
        if detuning_value is None:
            raise ValueError("detuning_mode = fix_bare requires detuning_value_rad_s")
        Delta_c = float(detuning_value)
        target = params.omega1
    else:
        raise ValueError(f"detuning_mode must be one of {DETUNING_MODES}, got {detuning_mode!r}")
    return select_operating_branch(solve_branches(params, Delta_c), target)
