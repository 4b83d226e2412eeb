import json
import math
import random

import pytest

from sichannel.schemas import SchemaViolation
from sichannel.stackup import (
    CombStructure,
    Dielectric,
    Drill,
    Layer,
    Stackup,
    bundled_registration,
    bundled_stackup,
    comb_decode,
    delay_per_length,
    layer_depth,
    load_stackup,
    registration_offset,
    stackup_from_dict,
    stripline_z0_estimate,
    total_thickness,
    via_span,
    via_stub_matrix,
)


@pytest.fixture(scope="module")
def board():
    return bundled_stackup()


def simple_core():
    return Stackup(
        [
            Layer(1, "traces", 0.6, Dielectric("core", 4.0, 3.0)),
            Layer(2, "plane", 0.6),
        ],
        {"thru": Drill("thru", 1, 2)},
    )


def test_fixture_total(board):
    assert total_thickness(board) == pytest.approx(122.6, abs=2.0)


def test_fixture_layer_count(board):
    copper = [ly for ly in board.layers if ly.index is not None]
    assert [ly.index for ly in copper] == list(range(1, 27))


def test_empty_and_simple_totals():
    assert total_thickness(Stackup([])) == 0
    assert total_thickness(simple_core()) == pytest.approx(5.2)


def test_total_is_permutation_independent(board):
    layers = list(board.layers)
    random.Random(3).shuffle(layers)
    assert total_thickness(Stackup(layers)) == pytest.approx(total_thickness(board), abs=1e-12)


def test_l1_l12_exit_l10_stub(board):
    span = via_span(board, "L1-L12 mechanical", 10)
    assert span.stub == pytest.approx(10.0, abs=2.0)


def test_exit_at_stop_has_no_stub(board):
    assert via_span(board, "L1-L12 mechanical", 12).stub == 0


def test_partition_identity_everywhere(board):
    for name, exit_layer, barrel, stub in via_stub_matrix(board):
        d = board.drills[name]
        full = abs(layer_depth(board, d.stop) - layer_depth(board, d.start))
        assert barrel + stub == pytest.approx(full, abs=1e-12)


def test_bottom_side_drill_measured_upward(board):
    span = via_span(board, "L26-L24 laser", 24)
    assert span.stub == 0 and span.barrel > 0


def test_via_span_errors(board):
    with pytest.raises(ValueError):
        via_span(board, "L1-L12 mechanical", 20)
    with pytest.raises(KeyError):
        via_span(board, "no such drill", 2)


def test_stub_matrix_only_signal_layers(board):
    for _, exit_layer, _, _ in via_stub_matrix(board):
        assert board.layer(exit_layer).usage == "traces"


def test_layer_depth_simple():
    s = simple_core()
    assert layer_depth(s, 1) == pytest.approx(0.3)
    assert layer_depth(s, 2) == pytest.approx(0.6 + 4.0 + 0.3)
    with pytest.raises(KeyError):
        layer_depth(s, 3)


@pytest.mark.parametrize(
    "dk,expect,tol",
    [(3.13, 5.90, 0.02), (1.0, 3.336, 5e-4)],
)
def test_delay_per_length(dk, expect, tol):
    assert delay_per_length(dk) == pytest.approx(expect, abs=tol)


def test_delay_sqrt_scaling():
    assert delay_per_length(4.0) == pytest.approx(2 * delay_per_length(1.0), rel=1e-15)
    with pytest.raises(ValueError):
        delay_per_length(0.5)


def test_stripline_estimate_near_50():
    assert stripline_z0_estimate(5, 4, 5, 0.6, 3.0) == pytest.approx(50, abs=5)


def test_stripline_wider_is_lower():
    assert stripline_z0_estimate(10, 4, 5, 0.6, 3.0) < stripline_z0_estimate(5, 4, 5, 0.6, 3.0)


@pytest.mark.parametrize("k", [0.5, 2.0, 7.0])
def test_stripline_scale_invariance(k):
    base = stripline_z0_estimate(5, 4, 5, 0.6, 3.0)
    assert stripline_z0_estimate(5 * k, 4 * k, 5 * k, 0.6 * k, 3.0) == pytest.approx(base, rel=1e-12)


@pytest.mark.parametrize("w", [2.0, 5.0, 10.0])
def test_stripline_thin_strip_matches_exact_conformal_map(w):
    from scipy.special import ellipk

    # centred zero-thickness strip: Z = 30 pi / sqrt(er) * K(k) / K(k'), k = sech(pi w / 2b)
    h, dk = 5.0, 3.0
    b = 2 * h
    k = 1 / math.cosh(math.pi * w / (2 * b))
    exact = 30 * math.pi / math.sqrt(dk) * ellipk(k**2) / ellipk(1 - k**2)
    assert stripline_z0_estimate(w, h, h, 1e-4, dk) == pytest.approx(exact, rel=0.01)


def test_stripline_dk_scaling():
    assert stripline_z0_estimate(5, 5, 5, 0.6, 1.0) == pytest.approx(
        2 * stripline_z0_estimate(5, 5, 5, 0.6, 4.0), rel=1e-12
    )


def test_stripline_validity_limit():
    with pytest.raises(ValueError, match="width/h"):
        stripline_z0_estimate(25, 4, 5, 0.6, 3.0)
    with pytest.raises(ValueError):
        stripline_z0_estimate(5, 0, 5, 0.6, 3.0)


# -- registration ---------------------------------------------------------------


@pytest.mark.parametrize("x,y,expect", [(-1, -1, 1.4), (0, -2, 2.0), (0, 0, 0.0), (-0.5, 1, 1.1)])
def test_registration_offset(x, y, expect):
    assert registration_offset(x, y) == expect


def test_table_recomputes():
    table = bundled_registration()
    worst = 0.0
    for row in table["rows"]:
        for site in table["sites"]:
            cell = row[site]
            assert registration_offset(cell["x"], cell["y"]) == pytest.approx(cell["abs"], abs=0.05)
            worst = max(worst, cell["abs"])
    assert worst == 2.0


def test_comb_decode():
    comb = CombStructure(increment=0.5, strip_count=9)
    assert comb_decode(comb, 4, 4) == 0
    assert comb_decode(comb, 6, 4) == 1.0
    assert comb_decode(comb, 0, 4) == -2.0
    with pytest.raises(IndexError):
        comb_decode(comb, 9, 4)


def test_comb_validation():
    with pytest.raises(ValueError):
        CombStructure(0.0, 9)
    with pytest.raises(ValueError):
        CombStructure(0.5, 2)


# -- model validation and JSON ------------------------------------------------------


def test_stackup_rejects_bad_drill():
    with pytest.raises(ValueError):
        Stackup([Layer(1, "traces")], {"d": Drill("d", 1, 5)})
    with pytest.raises(ValueError):
        Stackup([Layer(1, "traces"), Layer(1, "plane")])


def test_layer_validation():
    with pytest.raises(ValueError):
        Layer(1, "signal")
    with pytest.raises(ValueError):
        Dielectric("x", -1.0)


def test_user_stackup_json(tmp_path):
    doc = {
        "name": "four-layer",
        "layers": [
            {"index": 1, "usage": "traces", "copper_thickness_mil": 1.2,
             "dielectric_below": {"material": "pp", "thickness_mil": 5, "dk": 3.5}},
            {"index": 2, "usage": "plane", "copper_thickness_mil": 1.2,
             "dielectric_below": {"material": "core", "thickness_mil": 40}},
            {"index": 3, "usage": "plane", "copper_thickness_mil": 1.2,
             "dielectric_below": {"material": "pp", "thickness_mil": 5}},
            {"index": 4, "usage": "traces", "copper_thickness_mil": 1.2},
        ],
        "drills": [{"name": "thru", "start": 1, "stop": 4}],
    }
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    s = load_stackup(p)
    assert total_thickness(s) == pytest.approx(54.8)
    # midplanes at 0.6 and 54.2 mil
    assert via_span(s, "thru", 1).stub == pytest.approx(53.6)


def test_stackup_schema_path():
    with pytest.raises(SchemaViolation) as exc:
        stackup_from_dict({"layers": [{"index": 1, "usage": "traces", "copper_thickness_mil": -1}]})
    assert exc.value.path == "$.layers[0].copper_thickness_mil"
