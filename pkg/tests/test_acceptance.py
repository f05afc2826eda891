"""Acceptance criteria, one test and one PASS/FAIL line each.

Run under pytest (lines are collected into the terminal summary) or
directly with ``python3 tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from optorouter.config import Scenario, shipped_config
from optorouter.oracle import compare_modes
from optorouter.response import compute_spectrum, default_grid, transfer_functions
from optorouter.routing import REFLECT_LOWER, REFLECT_UPPER, find_channels, noise_budget, sweep_lambda
from optorouter.steady_state import operating_point, solve_branches

from conftest import ACCEPTANCE_LINES

HBAR = 1.054571817e-34
FIG2 = shipped_config("fig2.conf")


def fig2():
    return Scenario.from_file(FIG2).params


def report(number, title, checks):
    """Print and record one line; ``checks`` maps a label to (ok, detail)."""
    ok = all(c[0] for c in checks.values())
    detail = "; ".join(f"{k}={v[1]}" + ("" if v[0] else " (X)") for k, v in checks.items())
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def at_omega1(p, ss):
    s = compute_spectrum(p, ss, [p.omega1])
    return float(s.R[0]), float(s.T[0])


def test_criterion_1_router_off():
    p = fig2().updated(coulomb_lambda=0.0)
    R, T = at_omega1(p, operating_point(p))
    report(1, "router off", {"R(w1)>=0.95": (R >= 0.95, f"{R:.4f}"), "T(w1)<=0.05": (T <= 0.05, f"{T:.4f}")})


def test_criterion_2_router_on():
    p = fig2()
    ss = operating_point(p)
    R, T = at_omega1(p, ss)
    rep = find_channels(compute_spectrum(p, ss, default_grid(p, 4001)), p, ss)
    lo, hi = rep.channel(REFLECT_LOWER), rep.channel(REFLECT_UPPER)
    both = lo is not None and hi is not None
    r_ok = both and lo.probability >= 0.95 and hi.probability >= 0.95
    steps = abs(rep.midpoint_offset) / rep.grid_step if both else math.inf
    report(2, "router on", {
        "T(w1)>=0.95": (T >= 0.95, f"{T:.4f}"),
        "R(w1)<=0.05": (R <= 0.05, f"{R:.4f}"),
        "reflect R>=0.95": (r_ok, f"{lo.probability:.4f},{hi.probability:.4f}" if both else "missing"),
        "symmetry<=2 steps": (steps <= 2, f"{steps:.1f} steps"),
    })


def test_criterion_3_tunability():
    p = fig2()
    rows = sweep_lambda(p, [k * 1e33 for k in (1, 2, 3, 4, 5)])
    w0 = [r.omega0 for r in rows]
    mono = all(w is not None for w in w0) and all(b > a for a, b in zip(w0, w0[1:]))
    est = HBAR * 3e33 / (2 * p.m2 * p.omega2)
    dev = abs(w0[2] - est) / est if w0[2] else math.inf
    report(3, "tunability", {
        "strictly increasing": (mono, "[" + ",".join(f"{w:.0f}" if w else "-" for w in w0) + "]"),
        "w0(3e33) within 15%": (dev <= 0.15, f"{w0[2]:.0f} vs {est:.0f} ({100 * dev:.1f}%)"),
    })


def test_criterion_4_vacuum_noise():
    p = fig2()
    m = float(np.max(compute_spectrum(p, operating_point(p)).Sv))
    report(4, "vacuum noise", {"max Sv in [0.01,0.05]": (0.01 <= m <= 0.05, f"{m:.4f}")})


def test_criterion_5_thermal():
    scn = Scenario.from_file(FIG2)
    p = scn.params
    nb = noise_budget(p, operating_point(p), temperature=0.02)
    checks = {
        f"{c.kind} ratio<={scn.noise_ceiling}": (c.ratio <= scn.noise_ceiling, f"{c.ratio:.3f}")
        for c in nb.channels
    }
    checks["channels"] = (len(nb.channels) == 3, str(len(nb.channels)))
    report(5, "thermal insignificance at 20 mK", checks)


def test_criterion_6_oracle_equivalence():
    p = fig2()
    rep = compare_modes(p, operating_point(p), default_grid(p, 4001), modes=("rederived", "oracle"))
    dev = rep.max_deviation("rederived", "oracle")
    proc = subprocess.run(
        [sys.executable, "-m", "optorouter", "verify", "--config", str(FIG2), "--points", "4001"],
        capture_output=True, text=True,
    )
    report(6, "oracle equivalence", {
        "max rel dev<1e-8": (dev < 1e-8, f"{dev:.2e}"),
        "verify exit 0": (proc.returncode == 0, str(proc.returncode)),
    })


def test_criterion_7_limits():
    p = fig2()
    w = default_grid(p, 4001)

    bare = p.with_limit(g=0.0)
    ss = operating_point(bare)
    s = compute_spectrum(bare, ss, w)
    rt = float(np.max(np.abs(s.R + s.T - 1)))
    t_delta = float(compute_spectrum(bare, ss, [ss.Delta]).T[0])

    off = p.updated(coulomb_lambda=0.0)
    ss_off = operating_point(off)
    v2 = float(np.max(np.abs(transfer_functions(off, ss_off, w).V2)))
    moved = off.updated(m2=7e-12, omega2=1.3 * p.omega2, Q2=5e3)
    a, b = compute_spectrum(off, ss_off, w), compute_spectrum(moved, operating_point(moved), w)
    indep = max(float(np.max(np.abs(getattr(a, k) - getattr(b, k)) / np.maximum(np.abs(getattr(a, k)), 1e-300)))
                for k in ("R", "T", "Sv", "S1T"))

    dark = p.with_limit(eps_l=0.0)
    z = solve_branches(dark, p.omega1)[0]
    zero = z.c_s == 0 and z.q1s == 0 and z.q2s == 0

    cold = compute_spectrum(p, operating_point(p), w, temperature=0.0)
    th = float(max(cold.S1T.max(), cold.S2T.max()))

    report(7, "limit suite", {
        "g=0 |R+T-1|": (rt <= 1e-12, f"{rt:.1e}"),
        "g=0 T(Delta)": (abs(t_delta - 1) <= 1e-12, f"{t_delta:.15f}"),
        "lambda=0 V2": (v2 == 0, f"{v2:.1e}"),
        "lambda=0 NMR independence": (indep <= 1e-12, f"{indep:.1e}"),
        "eps=0 zero state": (zero, str(zero)),
        "T=0 thermal": (th == 0, f"{th:.1e}"),
    })


def _identity_residual(p, b):
    K = p.stiffness
    n = abs(b.c_s) ** 2
    res = [
        abs(b.q1s * K - HBAR * p.g * n) / (HBAR * p.g * n),
        abs(b.q2s + HBAR * p.coulomb_lambda * b.q1s / (p.m2 * p.omega2**2)) / max(abs(b.q2s), 1e-300),
        abs(n * (4 * p.kappa**2 + b.Delta**2) - p.eps_l**2) / p.eps_l**2,
        abs(b.Delta_c - p.g * b.q1s - b.Delta) / abs(b.Delta),
        float(b.p1s != 0 or b.p2s != 0),
    ]
    if p.coulomb_lambda == 0:
        res[1] = abs(b.q2s)
    return max(res)


def _fixed_point(p, Dc):
    K = p.stiffness
    D = Dc
    for _ in range(20000):
        new = Dc - p.g * HBAR * p.g * p.eps_l**2 / (4 * p.kappa**2 + D**2) / K
        if abs(new - D) < 1e-13 * p.omega1:
            return new
        D = new
    return None


def test_criterion_8_steady_state():
    cases = []
    base = fig2()
    for power in (1e-6, 2e-6, 5e-6, 20e-6):
        for lam in (0.0, 3e33):
            p = base.updated(power=power, coulomb_lambda=lam)
            for dc in (0.5, 1.0, 1.5):
                cases.append((p, dc * p.omega1))
    worst = 0.0
    fp_worst = 0.0
    fp_count = 0
    branches = 0
    for p, Dc in cases:
        bs = solve_branches(p, Dc)
        for b in bs:
            branches += 1
            worst = max(worst, _identity_residual(p, b))
        D = _fixed_point(p, Dc)
        if D is not None:
            fp_count += 1
            fp_worst = max(fp_worst, min(abs(b.Delta - D) / abs(D) for b in bs))
    report(8, "steady-state residuals", {
        "identities<=1e-12": (worst <= 1e-12, f"{worst:.1e} over {branches} branches"),
        "cubic vs fixed point<=1e-10": (fp_worst <= 1e-10, f"{fp_worst:.1e} over {fp_count} cases"),
    })


def test_criterion_9_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for name in ("a.csv", "b.csv"):
            out = Path(tmp) / name
            subprocess.run(
                [sys.executable, "-m", "optorouter", "spectrum", "--config", str(FIG2), "--out", str(out)],
                check=True, capture_output=True,
            )
            outs.append(out.read_bytes())
    same = outs[0] == outs[1]
    p = fig2()
    ss = operating_point(p)
    coarse = find_channels(compute_spectrum(p, ss, default_grid(p, 4001)), p, ss)
    fine = find_channels(compute_spectrum(p, ss, default_grid(p, 8001)), p, ss)
    kinds = [c.kind for c in coarse.channels] == [c.kind for c in fine.channels]
    shift = max(abs(a.center_omega - b.center_omega) for a, b in zip(coarse.channels, fine.channels))
    steps = shift / coarse.grid_step
    report(9, "determinism", {
        "byte-identical CSV": (same, str(same)),
        "refinement shift<=1 step": (kinds and steps <= 1, f"{steps:.3f} steps"),
    })


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
