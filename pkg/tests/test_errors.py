import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridcv.circuit import Reset
from hybridcv.errors import (NoiseParams, ResourceParams, antipadding_error, breakeven_csv,
                             breakeven_grid, breakeven_ratio, cat_correction_circuit, cat_state,
                             correct_cat_qubit, photon_loss_report, photon_profile,
                             suppress_displacement_error, theorem_bounds)
from hybridcv.gates import number_operator
from hybridcv.transfer import GaussianLatticeSpec

SPEC3 = GaussianLatticeSpec(3.0, 0.15, 4)


def shifted_overlap(delta_err, sigma):
    """Fidelity of a packet with itself shifted by delta_err."""
    return math.exp(-(delta_err**2) / (4 * sigma**2))


@pytest.mark.parametrize("frac", [0.0, 0.1, 0.2, 0.3, 0.4])
def test_suppression_inside_window(frac):
    res = suppress_displacement_error(2, SPEC3, frac * 3.0)
    assert res.in_guarantee
    assert res.fidelity_before == pytest.approx(shifted_overlap(frac * 3.0, 0.15), abs=1e-6)
    assert not res.notes
    if frac <= 0.3:
        assert res.fidelity_after > 0.9999
    else:
        # 0.4 delta leaves 2 sigma to the decoding boundary; the tail beyond is misread
        assert res.fidelity_after == pytest.approx(0.98845, abs=5e-5)
        assert res.kept_weight == pytest.approx(res.fidelity_after, abs=1e-4)


def test_suppression_is_flat_across_window():
    spec = GaussianLatticeSpec(3.0, 0.09, 4)
    after = [suppress_displacement_error(2, spec, f * 3.0).fidelity_after
             for f in (0.1, 0.2, 0.3, 0.4)]
    assert max(after) - min(after) < 0.005


def test_suppression_fails_outside_window():
    res = suppress_displacement_error(2, SPEC3, 0.6 * 3.0)
    assert not res.in_guarantee
    assert res.fidelity_after < 0.9
    assert "outside the window" in res.notes[0]


def test_suppression_custom_amplitudes():
    res = suppress_displacement_error(2, SPEC3, -0.9, amplitudes=[1, 1j, -1, 0.5])
    assert res.fidelity_after > 0.999


def test_cat_state_parity():
    n = 80
    parity = np.diag((-1.0) ** np.arange(n))
    even = cat_state(2.0, 1, 0, n).amplitudes
    odd = cat_state(2.0, 0, 1, n).amplitudes
    assert np.vdot(even, parity @ even).real == pytest.approx(1.0)
    assert np.vdot(odd, parity @ odd).real == pytest.approx(-1.0)
    # mean photon number of the even cat: alpha_c^2 tanh(alpha_c^2), alpha_c = x/sqrt(2)
    ac2 = 2.0**2 / 2
    assert np.vdot(even, number_operator(n) @ even).real == pytest.approx(ac2 * math.tanh(ac2),
                                                                          rel=1e-8)


def test_cat_circuit_schedule():
    c = cat_correction_circuit(2.5, 60)
    assert [op.describe().split()[0] for op in c.ops] == ["D", "R", "CD", "RESET", "CD", "R_DG", "D"]
    assert isinstance(c.ops[3], Reset)


@pytest.mark.parametrize("delta_err,c0,c1", [(0.0, 1, 0), (0.5, 1, 0), (0.3, 0.6, 0.8j),
                                             (-0.5, 1, 1)])
def test_cat_correction_recovers(delta_err, c0, c1):
    res = correct_cat_qubit(2.5, delta_err, c0, c1)
    assert res.fidelity_after > 0.99
    assert res.fidelity_after > res.fidelity_before or delta_err == 0
    assert res.in_guarantee


def test_cat_correction_frozen_values():
    assert correct_cat_qubit(2.5, 0.0).fidelity_after == pytest.approx(0.999414, abs=2e-6)
    res = correct_cat_qubit(2.5, 0.5)
    assert res.fidelity_after == pytest.approx(0.998307, abs=2e-6)
    assert res.fidelity_before < 0.9
    assert not correct_cat_qubit(2.5, -2.6, cutoff=200).in_guarantee


# photon loss


def test_rate_ratio_closed_form():
    r = photon_loss_report(8, 4, 1e-3, 1.0, 1e-3)
    assert r.rate_ratio == 4 * 2.0**-12
    with pytest.raises(ValueError):
        NoiseParams(-1.0)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(4, 1), (4, 2), (6, 3), (8, 4), (8, 2)]), st.floats(1e-5, 1e-1),
       st.floats(0.5, 3.0), st.floats(1e-6, 1e-1))
def test_loss_ratios_agree_with_mpmath(nm, gamma, delta, eps):
    n, m = nm
    r = photon_loss_report(n, m, gamma, delta, eps)
    mp.mp.dps = 40
    t = mp.mpf(delta) + mp.log(1 / mp.mpf(eps), 2)
    rate = m * mp.mpf(2) ** (2 * n * (mp.mpf(1) / m - 1))
    denom = 1 - mp.exp(-gamma * 2**n * t)
    total = m / denom
    pre = m * (1 - mp.exp(-gamma * 2 ** (n // m) * t)) / denom
    assert r.rate_ratio == pytest.approx(float(rate), rel=1e-12)
    assert r.total_ratio == pytest.approx(float(total), rel=1e-12)
    assert r.total_ratio_precollapse == pytest.approx(float(pre), rel=1e-12)


def test_total_ratio_tends_to_m():
    for n, m in [(16, 4), (20, 4), (16, 8)]:
        assert photon_loss_report(n, m, 1e-3, 1.0, 1e-3).total_ratio == pytest.approx(m, rel=0.01)


def test_photon_profile_final_step():
    rows = photon_profile(4, 2, 1.0)
    assert len(rows) == 4
    assert rows[-1]["sequential"] == pytest.approx(15**2 / 2)
    assert rows[-1]["parallel"] == pytest.approx(2 * 3**2 / 2)


# bound shapes


def test_erfc_anchors():
    # argument 2 sqrt(2) pi r (2^(a'-1) - 1) equals 1 for a' = 2 and r = 1/(2 sqrt(2) pi)
    r = 1 / (2 * math.sqrt(2) * math.pi)
    assert antipadding_error(2, r) == pytest.approx(0.3146, abs=1e-3)
    assert antipadding_error(2, 6 * r) < 1e-15
    assert antipadding_error(6, 0.05) == pytest.approx(float(2 * mp.erfc(2 * mp.sqrt(2) * mp.pi
                                                                        * 0.05 * 31)), rel=1e-10)


def test_bound_shapes():
    b = theorem_bounds(ResourceParams(8, 2))
    assert b["label"].startswith("bound shape")
    ratio = b["transfer"]["runtime"] / theorem_bounds(ResourceParams(8, 4))["transfer"]["runtime"]
    assert ratio == pytest.approx(2**4 / 2**2)
    pads = [theorem_bounds(ResourceParams(4, 2, a=a))["qft"]["infidelity_padding"] for a in (1, 2, 3)]
    assert pads == [1.0, 0.5, 0.25]
    q = b["qft"]
    assert q["infidelity"] == pytest.approx(q["infidelity_padding"] + q["infidelity_width"]
                                            + q["infidelity_qsp"] + q["infidelity_antipadding"])
    with pytest.raises(ValueError):
        ResourceParams(3, 2)


# break-even


def test_breakeven_constant_and_worked_value():
    const = 1.0 + math.log2(1e3)
    assert const == pytest.approx(11, abs=0.05)
    assert breakeven_ratio(4, 1e-2, 1.0, 1e-3) == pytest.approx(2 * 400 * const / 4)
    assert breakeven_ratio(4, 1e-2, 1.0, 1e-3) == pytest.approx(2200, rel=0.01)
    assert breakeven_ratio(4, 1e-3, 1.0, 1e-3) == pytest.approx(10 * breakeven_ratio(4, 1e-2, 1.0,
                                                                                     1e-3))
    with pytest.raises(ValueError):
        breakeven_ratio(1, 1e-2, 1.0, 1e-3)


def test_breakeven_grid_monotone():
    d = [16, 32, 64, 128, 256, 1024]
    eps = [1e-1, 1e-2, 1e-3, 1e-4]
    g = breakeven_grid(d, eps)
    assert np.all(np.diff(g, axis=0) > 0)
    assert np.all(np.diff(g, axis=1) > 0)  # eps decreasing along the row


def test_breakeven_csv_layout():
    text = breakeven_csv([2, 4], [0.1])
    lines = text.splitlines()
    assert lines[0] == "d,epsilon,required_ratio"
    assert len(lines) == 3
    assert float(lines[2].split(",")[2]) == breakeven_ratio(4, 0.1, 1.0, 1e-3)
