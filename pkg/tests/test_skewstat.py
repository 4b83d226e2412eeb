import dataclasses
import math

import numpy as np
import pytest
from scipy import integrate

from sichannel.schemas import SchemaViolation
from sichannel.skewstat import (
    Contributor,
    SkewBudget,
    WeaveModel,
    budget,
    budget_from_dict,
    budget_report,
    default_weave,
    fws_ensemble,
    fws_sample,
    line_delay,
    three_sigma_from_range,
    ui,
    weave_from_dict,
    weave_to_dict,
)
from sichannel.units import C_MM_PER_PS


def test_ui_and_budget():
    assert ui(56e9) == pytest.approx(17.857, abs=5e-4)
    assert budget(56e9) == pytest.approx(3.571, abs=5e-4)
    assert budget(28e9, 0.2) == pytest.approx(7.143, abs=5e-4)
    with pytest.raises(ValueError):
        ui(0)


# -- weave model -------------------------------------------------------------------


def test_line_delay_matches_numerical_integral():
    m = WeaveModel(pitch=1.3, dk_high=3.6, dk_low=3.0, duty=0.4, rotation=7.0, line_length=30.0)
    x0 = 0.77
    th = math.radians(m.rotation)

    def sqrt_dk(s):
        x = (x0 + s * math.sin(th)) % m.pitch
        return math.sqrt(m.dk_high if x < m.duty * m.pitch else m.dk_low)

    # break points where the path crosses region edges
    edges = []
    span = m.line_length * math.sin(th)
    for k in range(-2, int(span / m.pitch) + 3):
        for e in (k * m.pitch, k * m.pitch + m.duty * m.pitch):
            s = (e - x0) / math.sin(th)
            if 0 < s < m.line_length:
                edges.append(s)
    val = integrate.quad(sqrt_dk, 0, m.line_length, points=sorted(edges), limit=500)[0]
    assert float(line_delay(m, x0)) == pytest.approx(val / C_MM_PER_PS, rel=1e-9)


def test_zero_rotation_region_delay():
    m = WeaveModel(pitch=1.0, dk_high=4.0, dk_low=1.0, line_length=10.0)
    assert float(line_delay(m, 0.2)) == pytest.approx(20 / C_MM_PER_PS)
    assert float(line_delay(m, 0.7)) == pytest.approx(10 / C_MM_PER_PS)


def test_zero_rotation_same_phase_zero_skew():
    m = WeaveModel(pitch=1.0, dk_high=3.4, dk_low=3.0, pair_pitch=1.0)
    assert fws_sample(m, seed=4) == 0.0


def test_homogeneous_dielectric_zero_skew():
    m = WeaveModel(pitch=1.0, dk_high=3.2, dk_low=3.2, rotation=3.0)
    for seed in range(5):
        ens = fws_ensemble(m, 50, seed)
        assert np.all(ens.samples == 0)


def test_sample_matches_ensemble_index():
    m = default_weave(10)
    ens = fws_ensemble(m, 20, seed=3)
    assert fws_sample(m, 3, index=13) == ens.samples[13]


def test_ensemble_deterministic():
    m = default_weave()
    a = fws_ensemble(m, 100, 5)
    b = fws_ensemble(m, 100, 5)
    assert np.array_equal(a.samples, b.samples)


def test_ensemble_sigma_is_sample_std():
    ens = fws_ensemble(default_weave(10), 200, 1)
    assert ens.sigma == pytest.approx(np.std(ens.samples, ddof=1), rel=1e-12)
    with pytest.raises(ValueError):
        fws_ensemble(default_weave(), 1, 0)


def test_rotation_benefit_per_seed():
    m0, m10 = default_weave(0), default_weave(10)
    for seed in range(10):
        assert fws_ensemble(m10, 1000, seed).sigma < fws_ensemble(m0, 1000, seed).sigma


def test_calibrated_windows():
    m0, m10 = default_weave(0), default_weave(10)
    for seed in range(10):
        assert 0.64 <= fws_ensemble(m0, 1000, seed).sigma <= 2.33
        assert 0.19 <= fws_ensemble(m10, 1000, seed).sigma <= 0.49


def test_physical_pitch_cannot_match_both_windows():
    # at a real bundle pitch 10 degrees averages the weave almost completely,
    # far below the ratio implied by the measured windows (>= 0.19 / 2.33)
    m = dataclasses.replace(default_weave(), pitch=0.5)
    ratio = fws_ensemble(m.with_rotation(10), 1000, 0).sigma / fws_ensemble(m, 1000, 0).sigma
    assert ratio < 0.04 < 0.19 / 2.33


@pytest.mark.parametrize(
    "kw",
    [dict(pitch=0), dict(dk_high=2.9), dict(duty=1.5), dict(rotation=90), dict(line_length=0), dict(pair_pitch=-1)],
)
def test_weave_validation(kw):
    base = dict(pitch=1.0, dk_high=3.2, dk_low=3.0)
    base.update(kw)
    with pytest.raises(ValueError):
        WeaveModel(**base)


def test_weave_json_round_trip():
    m = WeaveModel(2.0, 3.3, 3.1, 0.45, 12.0, 50.0, 0.2)
    assert weave_from_dict(weave_to_dict(m)) == m


def test_weave_json_units_and_defaults():
    m = weave_from_dict({"rotation_deg": 5, "line_length_inch": 2, "pair_pitch_mil": 10})
    d = default_weave()
    assert m.rotation == 5 and m.pitch == d.pitch
    assert m.line_length == pytest.approx(50.8)
    assert m.pair_pitch == pytest.approx(0.254)
    with pytest.raises(SchemaViolation):
        weave_from_dict({"rotation_deg": "x"})


# -- budget ---------------------------------------------------------------------------


def test_three_sigma_from_range():
    assert three_sigma_from_range(0.64, 2.33) == pytest.approx(4.455)
    assert three_sigma_from_range(0.19, 0.49) == pytest.approx(1.02)
    assert three_sigma_from_range(0.7, 0.7) == pytest.approx(2.1)
    with pytest.raises(ValueError):
        three_sigma_from_range(2, 1)


def test_breakouts_consume_over_half():
    rep = budget_report(SkewBudget(56e9, 0.2, [Contributor("breakout_L", 1.0), Contributor("breakout_R", 1.0)]))
    assert rep["total_ps"] == 2.0
    assert rep["fraction_used"] == pytest.approx(0.56, abs=0.001)
    assert rep["pass"]


def test_rotated_fws_plus_breakouts_pass():
    rep = budget_report(SkewBudget(56e9, 0.2, [Contributor("fws_3sigma", 1.0), Contributor("breakouts", 2.0)]))
    assert rep["total_ps"] == 3.0
    assert rep["margin_ps"] == pytest.approx(0.571, abs=5e-4)
    assert rep["pass"]


def test_unrotated_fws_fails():
    rep = budget_report(SkewBudget(56e9, 0.2, [Contributor("fws_3sigma", 4.5)]))
    assert not rep["pass"] and rep["margin_ps"] < 0


def test_rss_combination():
    rep = budget_report(
        SkewBudget(
            56e9,
            0.2,
            [Contributor("a", 3.0, "rss"), Contributor("b", 4.0, "rss"), Contributor("c", 1.0)],
        )
    )
    assert rep["rss_ps"] == pytest.approx(5.0)
    assert rep["total_ps"] == pytest.approx(6.0)


def test_budget_validation_and_json():
    with pytest.raises(ValueError):
        Contributor("x", -1)
    with pytest.raises(ValueError):
        Contributor("x", 1, "max")
    with pytest.raises(ValueError):
        SkewBudget(56e9, 0.0)
    b = budget_from_dict({"bitrate_bps": 28e9, "contributors": [{"name": "a", "ps": 1, "combination": "rss"}]})
    assert b.bitrate == 28e9 and b.contributors[0].combination == "rss"
    with pytest.raises(SchemaViolation):
        budget_from_dict({"contributors": [{"name": "a"}]})
