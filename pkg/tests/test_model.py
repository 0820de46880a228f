import json
import math

import pytest

from qbm_objectivity.model import (
    ConfigError, EmptyEnvironment, NonPositiveParameter, PhiOutOfRange,
    ensemble_from_dict, ensemble_to_dict, load_config, make_ensemble, parse_real,
)


def test_make_ensemble_defaults():
    ens = make_ensemble(7.0, [5.0])
    assert ens.central.omega_big == 7.0
    assert ens.omegas == (5.0,)
    assert ens.trajectory.delta_y == 1.0
    assert ens.bath.lambda_k(5.0) == 5.0


@pytest.mark.parametrize("field,kwargs", [
    ("beta", dict(beta=0.0)),
    ("mass_m", dict(m=-1.0)),
    ("mass_M", dict(mass_M=0.0)),
])
def test_non_positive_parameters(field, kwargs):
    with pytest.raises(NonPositiveParameter) as exc:
        make_ensemble(7.0, [5.0], **kwargs)
    assert exc.value.field == field


def test_non_positive_frequency():
    with pytest.raises(NonPositiveParameter):
        make_ensemble(7.0, [0.0])
    with pytest.raises(NonPositiveParameter):
        make_ensemble(-1.0, [1.0])


def test_empty_environment():
    with pytest.raises(EmptyEnvironment):
        make_ensemble(7.0, [])


@pytest.mark.parametrize("phi", [-0.1, math.pi / 2 + 1e-9])
def test_phi_range(phi):
    with pytest.raises(PhiOutOfRange):
        make_ensemble(7.0, [5.0], phi=phi)


def test_phi_endpoints_allowed():
    make_ensemble(7.0, [5.0], phi=0.0)
    make_ensemble(7.0, [5.0], phi=math.pi / 2)


def test_parse_real_sqrt():
    assert parse_real({"sqrt": 26}) == math.sqrt(26)
    assert parse_real(3) == 3.0
    for bad in (True, "1", {"sqrt": -1}, {"root": 2}, None):
        with pytest.raises(ConfigError):
            parse_real(bad)


def test_fraction_frequency():
    doc = {"central": {"omega_big": 7}, "oscillators": [{"omega": {"fraction": [5, 7]}}]}
    ens = ensemble_from_dict(doc)
    assert ens.omegas == (5.0,)


@pytest.mark.parametrize("frac", [[5], [5.0, 7], [0, 7], "5/7", [True, 1]])
def test_malformed_fraction(frac):
    doc = {"central": {"omega_big": 7}, "oscillators": [{"omega": {"fraction": frac}}]}
    with pytest.raises(ConfigError):
        ensemble_from_dict(doc)


def test_round_trip_dict():
    ens = make_ensemble(math.sqrt(50), [math.sqrt(26), 2.0], g=0.3, beta=2.0, y=0.5,
                        y_prime=-0.25, phi=0.4)
    assert ensemble_from_dict(ensemble_to_dict(ens)) == ens


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"oscillators": [{"omega": 2}]}))
    assert ensemble_from_dict(load_config(good)).omegas == (2.0,)


def test_with_trajectory_revalidates():
    ens = make_ensemble(7.0, [5.0])
    assert ens.with_trajectory(y_prime=1.0).trajectory.delta_y == 0.0
    with pytest.raises(PhiOutOfRange):
        ens.with_trajectory(phi=3.0)
