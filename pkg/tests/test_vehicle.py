"""Config model: derivation, validation, serialization, patching."""

import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from meco_sim.vehicle import (
    BallastItem,
    ConfigError,
    FRESHWATER_DENSITY,
    RigidBodyParams,
    SEAWATER_DENSITY,
    apply_patch,
    config_from_document,
    config_to_document,
    derive_cog,
    load_config,
    load_reference_config,
    neutral_mass,
    reference_config_text,
    serialize_config,
)


# -- independent oracles -------------------------------------------------------

def cog_oracle(masses, positions):
    """Weighted mean by explicit summation, no shortcuts."""
    total = sum(masses)
    return tuple(
        sum(m * p[i] for m, p in zip(masses, positions)) / total for i in range(3)
    )


def make_body(**overrides):
    base = dict(
        dry_mass=20.9,
        hull_cog=(0.0, 0.0, 0.0),
        hull_size=(0.8, 0.6, 0.17),
        ballast=(),
        cob=(0.0, 0.0, -0.005),
        buoyant_volume=0.0236,
        inertia=((1.0, 0, 0), (0, 1.0, 0), (0, 0, 1.0)),
        added_mass=(0.0,) * 6,
        linear_drag=(0.0,) * 6,
        quadratic_drag=(0.0,) * 6,
    )
    base.update(overrides)
    return RigidBodyParams(**base)


# -- neutral mass ----------------------------------------------------------------

def test_neutral_mass_freshwater():
    got = neutral_mass(0.0236, FRESHWATER_DENSITY)
    # product of the two floats; one ulp below the decimal literal
    assert got == pytest.approx(23.6, abs=1e-12)
    assert abs(got - 23.6) <= math.ulp(23.6)


def test_neutral_mass_saltwater():
    got = neutral_mass(0.0236, SEAWATER_DENSITY)
    assert got == pytest.approx(24.19, abs=1e-12)
    assert abs(got - 24.2) < 0.05


def test_neutral_mass_rejects_nonpositive():
    with pytest.raises(ValueError):
        neutral_mass(0.0236, 0.0)
    with pytest.raises(ValueError):
        neutral_mass(-1.0, 1000.0)


@given(
    volume=st.floats(1e-6, 10.0, allow_nan=False),
    density=st.floats(1.0, 2000.0, allow_nan=False),
)
def test_neutral_mass_scales_linearly(volume, density):
    assert neutral_mass(volume, density) == pytest.approx(volume * density)


# -- center of gravity ------------------------------------------------------------

def test_cog_single_point_mass():
    body = make_body(dry_mass=10.0, hull_cog=(1.0, 0.0, 0.0))
    assert derive_cog(body) == (1.0, 0.0, 0.0)


def test_cog_symmetric_ballast_cancels():
    body = make_body(
        ballast=(BallastItem(1.0, (0.2, 0.0, 0.0)), BallastItem(1.0, (-0.2, 0.0, 0.0)))
    )
    assert derive_cog(body) == pytest.approx((0.0, 0.0, 0.0), abs=1e-15)


def test_cog_hull_plus_trim_weight():
    body = make_body(ballast=(BallastItem(2.7, (0.0, 0.0, -0.05)),))
    got = derive_cog(body)
    want = cog_oracle([20.9, 2.7], [(0, 0, 0), (0, 0, -0.05)])
    assert got == pytest.approx(want, abs=1e-15)
    assert got[2] == pytest.approx(-0.00572, abs=5e-6)


@given(
    st.lists(
        st.tuples(
            st.floats(0.1, 50.0),
            st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
        ),
        min_size=0,
        max_size=6,
    )
)
def test_cog_matches_summation_oracle(items):
    body = make_body(ballast=tuple(BallastItem(m, p) for m, p in items))
    masses = [20.9] + [m for m, _ in items]
    positions = [(0.0, 0.0, 0.0)] + [p for _, p in items]
    assert derive_cog(body) == pytest.approx(cog_oracle(masses, positions), abs=1e-12)


# -- reference config ---------------------------------------------------------------

def test_reference_config_headline_numbers():
    cfg = load_reference_config()
    assert cfg.body.buoyant_volume == 0.0236
    assert cfg.body.dry_mass == 20.9
    assert len(cfg.thrusters) == 5
    assert cfg.body.total_mass == pytest.approx(23.6, abs=1e-12)
    assert cfg.body.cog == pytest.approx((0.0, 0.0, 0.0), abs=1e-15)


def test_reference_thruster_directions_unit():
    cfg = load_reference_config()
    for t in cfg.thrusters:
        n = math.sqrt(sum(c * c for c in t.direction))
        assert n == pytest.approx(1.0, abs=1e-9)


# -- validation ------------------------------------------------------------------

def doc():
    return json.loads(reference_config_text())


def test_zero_thrusters_rejected():
    d = doc()
    d["thrusters"] = []
    with pytest.raises(ConfigError) as ei:
        config_from_document(d)
    assert "thrusters" in ei.value.path


def test_non_unit_direction_rejected_with_path():
    d = doc()
    d["thrusters"][0]["direction"] = [2.0, 0.0, 0.0]
    with pytest.raises(ConfigError) as ei:
        config_from_document(d)
    assert ei.value.path == "thrusters[0].direction"


def test_negative_mass_rejected():
    d = doc()
    d["body"]["dry_mass"] = -3.0
    with pytest.raises(ConfigError) as ei:
        config_from_document(d)
    assert "dry_mass" in ei.value.path


def test_unknown_gain_loop_rejected():
    d = doc()
    d["control"]["gains"]["warp"] = {"kp": 1.0}
    with pytest.raises(ConfigError):
        config_from_document(d)


def test_bad_json_raises_parse_error():
    from meco_sim.vehicle import ConfigParseError

    with pytest.raises(ConfigParseError):
        load_config("{not json")


# -- serialization round trip -------------------------------------------------------

def test_round_trip_is_stable():
    cfg = load_reference_config()
    text1 = serialize_config(cfg)
    cfg2 = load_config(text1)
    text2 = serialize_config(cfg2)
    assert text1 == text2
    assert cfg2 == cfg


def test_document_omits_derived_fields():
    d = config_to_document(load_reference_config())
    assert "cog" not in d["body"]
    assert "total_mass" not in d["body"]


# -- patching ---------------------------------------------------------------------

def test_empty_patch_is_identity():
    cfg = load_reference_config()
    assert apply_patch(cfg, {}) == cfg


def test_patch_removes_thruster():
    cfg = load_reference_config()
    out = apply_patch(cfg, {"thrusters": {"remove": ["heave"]}})
    assert len(out.thrusters) == 4
    assert all(t.id != "heave" for t in out.thrusters)


def test_patch_moving_ballast_recomputes_cog():
    cfg = load_reference_config()
    patch = {
        "body": {
            "ballast": [
                {"mass": 1.35, "position": [0.15, 0.0, 0.0]},
                {"mass": 1.35, "position": [-0.05, 0.0, 0.0]},
            ]
        }
    }
    out = apply_patch(cfg, patch)
    want = cog_oracle(
        [20.9, 1.35, 1.35], [(0, 0, 0), (0.15, 0, 0), (-0.05, 0, 0)]
    )
    assert out.body.cog == pytest.approx(want, abs=1e-15)
    assert out.body.cog[0] > 0.0


def test_patch_unknown_path_rejected():
    cfg = load_reference_config()
    with pytest.raises(ConfigError) as ei:
        apply_patch(cfg, {"body": {"wingspan": 2.0}})
    assert "wingspan" in ei.value.path


def test_patch_invalid_value_rejected_leaving_original_untouched():
    cfg = load_reference_config()
    with pytest.raises(ConfigError):
        apply_patch(cfg, {"body": {"dry_mass": -1.0}})
    assert cfg.body.dry_mass == 20.9


def test_patch_then_inverse_restores_config():
    cfg = load_reference_config()
    fwd = apply_patch(cfg, {"body": {"dry_mass": 22.0}})
    back = apply_patch(fwd, {"body": {"dry_mass": 20.9}})
    assert back == cfg


@settings(max_examples=30)
@given(mass=st.floats(1.0, 100.0), z=st.floats(-0.2, 0.2))
def test_patched_ballast_always_matches_cog_oracle(mass, z):
    cfg = load_reference_config()
    out = apply_patch(
        cfg, {"body": {"ballast": [{"mass": mass, "position": [0.0, 0.0, z]}]}}
    )
    want = cog_oracle([20.9, mass], [(0, 0, 0), (0.0, 0.0, z)])
    assert out.body.cog == pytest.approx(want, abs=1e-12)
    assert out.body.total_mass == pytest.approx(20.9 + mass, abs=1e-12)
