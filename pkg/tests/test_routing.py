import numpy as np
import pytest

from optorouter.errors import GridTooCoarse, NoChannels
from optorouter.response import compute_spectrum, default_grid
from optorouter.routing import (
    REFLECT_LOWER,
    REFLECT_SINGLE,
    REFLECT_UPPER,
    TRANSMIT,
    find_channels,
    noise_budget,
    sweep_lambda,
)
from optorouter.steady_state import operating_point

from conftest import W1, fig2_params

HBAR = 1.054571817e-34
L0 = 1e33


@pytest.fixture(scope="module")
def on_report(fig2, fig2_ss):
    return find_channels(compute_spectrum(fig2, fig2_ss), fig2, fig2_ss)


def test_router_off_single_reflection(off, off_ss):
    rep = find_channels(compute_spectrum(off, off_ss), off, off_ss)
    assert [c.kind for c in rep.channels] == [REFLECT_SINGLE]
    ch = rep.channels[0]
    assert ch.probability >= 0.95
    assert abs(ch.center_omega - W1) < 0.005 * W1
    assert rep.omega0 is None and rep.midpoint_offset is None


def test_router_on_three_channels(on_report):
    kinds = [c.kind for c in on_report.channels]
    assert kinds == [REFLECT_LOWER, TRANSMIT, REFLECT_UPPER]
    t = on_report.channel(TRANSMIT)
    assert t.probability >= 0.95
    assert abs(t.center_omega - W1) < 0.005 * W1
    lo, hi = on_report.channel(REFLECT_LOWER), on_report.channel(REFLECT_UPPER)
    assert lo.center_omega < t.center_omega < hi.center_omega
    assert lo.probability >= 0.95 and hi.probability >= 0.95
    assert on_report.omega0 == pytest.approx(0.5 * (hi.center_omega - lo.center_omega))
    for c in on_report.channels:
        assert 0 <= c.probability
        assert c.width >= 3 * on_report.grid_step
    d = on_report.to_dict()
    assert len(d["channels"]) == 3 and d["omega0_rad_s"] == on_report.omega0


def test_gain_above_one_is_a_warning_not_an_error(on_report):
    # R slightly above 1 comes from the conjugate input; it is reported, not rejected
    over = [c for c in on_report.channels if c.probability > 1 + 1e-6]
    assert len(over) == len([w for w in on_report.warnings if "exceeds 1" in w])


def test_bare_cavity_single_transmission():
    p = fig2_params().with_limit(g=0.0)
    ss = operating_point(p)
    rep = find_channels(compute_spectrum(p, ss), p, ss)
    assert [c.kind for c in rep.channels] == [TRANSMIT]
    assert rep.channels[0].center_omega == pytest.approx(ss.Delta, abs=1e-6 * W1)
    assert rep.channels[0].probability == pytest.approx(1.0, abs=1e-9)


def test_omega0_near_perturbative_estimate(fig2, on_report):
    est = fig2.coupling_splitting_estimate()
    assert est == pytest.approx(HBAR * 3e33 / (2 * 40e-12 * W1))
    assert est == pytest.approx(4.7e3, rel=0.01)
    # band tightened from the first oracle run, which lands within 2 percent
    assert on_report.omega0 == pytest.approx(est, rel=0.03)


def test_grid_refinement_invariance(fig2, fig2_ss, on_report):
    fine = find_channels(compute_spectrum(fig2, fig2_ss, default_grid(fig2, 8001)), fig2, fig2_ss)
    assert [c.kind for c in fine.channels] == [c.kind for c in on_report.channels]
    for a, b in zip(on_report.channels, fine.channels):
        assert abs(a.center_omega - b.center_omega) <= on_report.grid_step


def test_grid_guards(fig2, fig2_ss):
    with pytest.raises(GridTooCoarse):
        find_channels(compute_spectrum(fig2, fig2_ss, default_grid(fig2, 400)), fig2, fig2_ss)
    # 401 points over a wide window leaves the 2.6e3 rad/s transmit peak under 3 steps
    wide = np.linspace(0.5 * W1, 1.5 * W1, 401)
    with pytest.raises(GridTooCoarse):
        find_channels(compute_spectrum(fig2, fig2_ss, wide), fig2, fig2_ss)
    with pytest.raises(NoChannels):
        find_channels(compute_spectrum(fig2, fig2_ss), fig2, fig2_ss, threshold=2.0)


def test_coverage_warning(fig2, fig2_ss, on_report):
    assert any("does not cover" in w for w in on_report.warnings)
    wide = np.linspace(-1.0 * W1, 3.0 * W1, 40001)
    rep = find_channels(compute_spectrum(fig2, fig2_ss, wide[wide != 0]), fig2, fig2_ss)
    assert not any("does not cover" in w for w in rep.warnings)


@pytest.fixture(scope="module")
def sweep(fig2):
    return sweep_lambda(fig2, [k * L0 for k in (1, 2, 3, 4, 5)])


def test_sweep_monotone(sweep):
    assert [r.coulomb_lambda for r in sweep] == [k * L0 for k in (1, 2, 3, 4, 5)]
    assert all(r.error is None for r in sweep)
    w0 = [r.omega0 for r in sweep]
    assert all(b > a for a, b in zip(w0, w0[1:]))


def test_sweep_doubling_roughly_doubles(sweep):
    assert sweep[1].omega0 / sweep[0].omega0 == pytest.approx(2.0, rel=0.2)


def test_sweep_rows_and_errors(fig2):
    rows = sweep_lambda(fig2, [0.0, -1.0, 3 * L0, float("nan")], workers=2)
    assert rows[0].omega0 is None and rows[0].error is None
    assert rows[0].report.channels[0].kind == REFLECT_SINGLE
    assert rows[1].error is not None and rows[3].error is not None
    assert rows[2].omega0 > 0 and rows[2].T_center >= 0.95
    with pytest.raises(ValueError):
        sweep_lambda(fig2, [])


def test_sweep_concurrent_matches_sequential(fig2):
    lams = [k * L0 for k in (5, 1, 3)]
    seq = sweep_lambda(fig2, lams, workers=1)
    par = sweep_lambda(fig2, lams, workers=3)
    assert [(r.coulomb_lambda, r.omega0, r.R_lower) for r in seq] == [
        (r.coulomb_lambda, r.omega0, r.R_lower) for r in par
    ]


def test_sweep_row_physics_error_recorded(fig2):
    # a coupling that makes the effective stiffness vanish
    lam_bad = 1.01 * 40e-12 * W1**2 / HBAR
    rows = sweep_lambda(fig2, [lam_bad, L0])
    assert rows[0].error.startswith("DegenerateStiffness")
    assert rows[1].error is None


def test_noise_budget_vacuum_max(fig2, fig2_ss):
    nb = noise_budget(fig2, fig2_ss, temperature=0.02)
    assert 0.01 <= nb.max_Sv <= 0.05
    assert [c.kind for c in nb.channels] == [REFLECT_LOWER, TRANSMIT, REFLECT_UPPER]
    for c in nb.channels:
        assert c.signal > 0.9
        assert c.ratio == pytest.approx((c.Sv + c.S1T + c.S2T) / c.signal)
    assert nb.to_dict()["temperature_K"] == 0.02


def test_noise_budget_zero_temperature(fig2, fig2_ss):
    nb = noise_budget(fig2, fig2_ss, temperature=0.0)
    assert nb.max_S1T == 0 and nb.max_S2T == 0
    assert all(c.S1T == 0 and c.S2T == 0 for c in nb.channels)
    assert nb.within(0.1)


def test_noise_budget_router_off(off, off_ss):
    nb = noise_budget(off, off_ss)
    assert nb.max_S2T == 0
    assert len(nb.channels) == 1


def test_noise_budget_without_channels(fig2, fig2_ss):
    nb = noise_budget(fig2, fig2_ss, default_grid(fig2, 50))
    assert nb.channels == () and nb.max_Sv > 0
