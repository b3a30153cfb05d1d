import math

import pytest
import yaml
from hypothesis import given, strategies as st

from kcsnav.ship import (
    CoefficientFileError, load_ship_model, prime_scale, prime_unscale, ship_from_dict,
)


def _doc():
    from importlib import resources
    return yaml.safe_load(resources.files("kcsnav.data").joinpath("kcs.yaml").read_text())


def test_bundled_model_loads(ship):
    assert ship.Lpp == pytest.approx(3.0464)
    assert ship.delta_max == pytest.approx(math.radians(35.0))
    assert ship.D == pytest.approx(0.105 / 3.0464)


def test_model_length_is_one_ship_length(ship):
    assert prime_scale(3.0464, "length", ship) == pytest.approx(1.0, abs=1e-15)


def test_moment_over_force_divisor_is_length(ship):
    ratio = prime_unscale(1.0, "moment", ship) / prime_unscale(1.0, "force", ship)
    assert ratio == pytest.approx(ship.Lpp, rel=1e-14)


@given(st.floats(-1e6, 1e6, allow_nan=False),
       st.sampled_from(["force", "moment", "length", "velocity", "time", "yaw_rate"]))
def test_scale_unscale_identity(ship, value, kind):
    back = prime_unscale(prime_scale(value, kind, ship), kind, ship)
    assert back == pytest.approx(value, rel=1e-12, abs=1e-300)


def test_unknown_kind_rejected(ship):
    with pytest.raises(ValueError):
        prime_scale(1.0, "pressure", ship)


def test_time_scale_and_rudder_rate(ship):
    # 1 nondimensional time unit = L/U seconds at model scale and
    # sqrt(scale) times longer at full scale (Froude similarity)
    assert ship.time_scale == pytest.approx(3.0464 / 1.1)
    assert ship.full_scale_time_scale == pytest.approx(3.0464 / 1.1 * math.sqrt(75.5))
    assert ship.rudder_rate_max == pytest.approx(math.radians(5.0) * ship.full_scale_time_scale)


def test_missing_schema_version_rejected():
    doc = _doc()
    del doc["schema_version"]
    with pytest.raises(CoefficientFileError, match="schema_version"):
        ship_from_dict(doc)


def test_wrong_schema_version_rejected():
    doc = _doc()
    doc["schema_version"] = 99
    with pytest.raises(CoefficientFileError):
        ship_from_dict(doc)


def test_unknown_and_missing_keys_rejected():
    doc = _doc()
    doc["hull"]["Y_vv_typo"] = 1.0
    with pytest.raises(CoefficientFileError, match="unknown"):
        ship_from_dict(doc)
    doc = _doc()
    del doc["rudder"]["T_E"]
    with pytest.raises(CoefficientFileError, match="missing"):
        ship_from_dict(doc)


def test_non_numeric_and_nonpositive_rejected():
    doc = _doc()
    doc["hull"]["R0"] = "abc"
    with pytest.raises(CoefficientFileError):
        ship_from_dict(doc)
    doc = _doc()
    doc["masses"]["m"] = -1.0
    with pytest.raises(CoefficientFileError):
        ship_from_dict(doc)


def test_load_from_path(tmp_path):
    p = tmp_path / "ship.yaml"
    p.write_text(yaml.safe_dump(_doc()))
    m = load_ship_model(p)
    assert m.name.startswith("KCS")
