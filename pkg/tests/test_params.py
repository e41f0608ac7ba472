import math

import pytest

from posaid.errors import ConfigurationError, ContractError, HistoryUnderflow
from posaid.params import (GroupLayout, SystemParams, anchor_block_index, block_length, blocks_per_column_lag,
                           group_layout, load_config, max_group_size, parse_config_text, safe_floor)


def test_reference_block_length_and_group_size(params):
    assert params.T0 == 375
    assert max_group_size(params) == 7


def test_block_length_unfloored(params):
    assert block_length(params, floored=False) == pytest.approx(375.0)


def test_block_length_too_fast():
    with pytest.raises(ConfigurationError, match="v0"):
        SystemParams(v0=1e5).T0


def test_safe_floor_handles_representation_error():
    assert safe_floor(2 * 100 * 5e-3 / 0.15 + 1) == 7
    assert safe_floor(0.1 * 3 / 0.3) == 1
    assert safe_floor(6.9) == 6


def test_group_layout_pads_last_group(params):
    lay = group_layout(16, params)
    assert (lay.Me, lay.Mg, lay.padded_columns, lay.M) == (7, 3, 5, 16)


def test_conventional_layout():
    lay = GroupLayout.conventional(8)
    assert (lay.Me, lay.Mg, lay.M) == (1, 8, 8)


def test_anchor_spacing_is_a_fraction_of_wavelength(params):
    assert params.anchor_spacing / params.lambda0 == pytest.approx(1 / 40)
    assert blocks_per_column_lag(params) == pytest.approx(20.0)


def test_anchor_block_index(params):
    assert anchor_block_index(100, 2, params) == 80
    assert anchor_block_index(200, 7, params) == 80
    with pytest.raises(HistoryUnderflow):
        anchor_block_index(10, 2, params)
    with pytest.raises(ContractError):
        anchor_block_index(10, 1, params)


def test_column_lies_between_bracketing_anchors():
    p = SystemParams(v0=37.0)
    d = p.anchor_spacing
    for k in range(200, 260):
        for j in range(2, max_group_size(p) + 1):
            k0 = anchor_block_index(k, j, p)
            z = (k - 1) * d - (j - 1) * p.lambda0 / 2
            assert (k0 - 1) * d - 1e-12 <= z < k0 * d + 1e-12
            nearest = min(abs(z - (k0 - 1) * d), abs(z - k0 * d))
            assert nearest <= d / 2 + 1e-12


@pytest.mark.parametrize("field, value", [("xi0", 1.0), ("M", 0), ("L0", 0), ("v0", -1.0), ("B0", math.nan)])
def test_invalid_params_rejected(field, value):
    with pytest.raises(ConfigurationError):
        SystemParams(**{field: value})


def test_small_xi0_warns():
    with pytest.warns(UserWarning):
        SystemParams(xi0=5)


def test_l0_above_xi0_rejected():
    with pytest.raises(ConfigurationError):
        SystemParams(L0=30)


def test_digest_stable_and_sensitive(params):
    assert params.digest() == SystemParams().digest()
    assert params.digest() != params.replace(v0=101.0).digest()


def test_config_roundtrip(tmp_path):
    f = tmp_path / "a.conf"
    f.write_text("# comment\nv0 = 50   # m/s\nM = 8\nseed = 3\n")
    p, run = load_config(f)
    assert p.v0 == 50.0 and p.M == 8
    assert run == {"seed": 3}


def test_config_unknown_key_named():
    with pytest.raises(ConfigurationError, match="speed"):
        parse_config_text("speed = 3")


def test_config_bad_line():
    with pytest.raises(ConfigurationError, match="key = value"):
        parse_config_text("v0 50")


def test_geometry_examples():
    p50 = SystemParams(v0=50.0)
    assert p50.T0 == 750 and max_group_size(p50) == 4
    assert max_group_size(SystemParams(v0=1e-3)) == 1


@pytest.mark.parametrize("M, Mg, padded", [(200, 29, 3), (14, 2, 0), (1, 1, 6)])
def test_layout_examples(params, M, Mg, padded):
    lay = group_layout(M, params)
    assert (lay.Mg, lay.padded_columns) == (Mg, padded)


def test_anchor_index_third_column(params):
    assert anchor_block_index(100, 3, params) == 60
