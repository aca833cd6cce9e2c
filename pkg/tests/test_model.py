import json

import numpy as np
import pytest
from scipy import stats

from bfctl import ArrivalSpec, ConfigError, ModelConfig, load_config, validate_config
from bfctl.jet import Jet
from bfctl.model import (Pmf, arrival_pgf, arrival_pmf, blocked_arrival_pmf,
                         blocked_arrival_transform)


@pytest.mark.parametrize("spec", [ArrivalSpec.poisson(0.39), ArrivalSpec.poisson(3.0),
                                  ArrivalSpec.geometric(0.8), ArrivalSpec.deterministic(2),
                                  ArrivalSpec.explicit([0.2, 0.5, 0.3])])
def test_pmf_and_transform_agree(spec):
    pmf = arrival_pmf(spec)
    tf = arrival_pgf(spec)
    rng = np.random.default_rng(1)
    z = np.sqrt(rng.uniform(0, 1, 16)) * np.exp(2j * np.pi * rng.uniform(0, 1, 16))
    np.testing.assert_allclose(tf(z), pmf.evaluate(z), atol=1e-11)
    assert pmf.mean == pytest.approx(spec.mean, abs=1e-10)


def test_poisson_truncation_respects_eps():
    pmf = arrival_pmf(ArrivalSpec.poisson(2.0), eps=1e-12)
    assert pmf.tail_eps <= 1e-12
    assert stats.poisson.sf(len(pmf.weights) - 2, 2.0) > 1e-12


@pytest.mark.parametrize("kind,mean", [("poisson", 0.39), ("poisson", 2.5), ("geometric", 1.2)])
@pytest.mark.parametrize("p", [0.1, 0.6, 0.95])
def test_blocked_pmf_matches_blocked_transform(kind, mean, p):
    spec = ArrivalSpec(kind, mean)
    pmf = blocked_arrival_pmf(spec, p)
    tf = blocked_arrival_transform(spec, p)
    rng = np.random.default_rng(7)
    z = np.sqrt(rng.uniform(0, 1, 16)) * np.exp(2j * np.pi * rng.uniform(0, 1, 16))
    np.testing.assert_allclose(tf(z), pmf.evaluate(z), atol=1e-10)
    assert pmf.total == pytest.approx(1.0, abs=1e-11)


def test_blocked_pmf_by_enumeration():
    # Y uniform on {0,1,2}; vehicles turn independently with probability p
    p, w = 0.3, 0.7
    spec = ArrivalSpec.explicit([1 / 3, 1 / 3, 1 / 3])
    pmf = blocked_arrival_pmf(spec, p)
    # from the first turning vehicle on: Y=1 -> 1 w.p. p; Y=2 -> 2 w.p. p, 1 w.p. w p
    expect = np.array([1 / 3 + w / 3 + w * w / 3, p / 3 + w * p / 3, p / 3])
    np.testing.assert_allclose(pmf.weights, expect, atol=1e-15)


def test_blocked_transform_continuous_near_singularity():
    tf = blocked_arrival_transform(ArrivalSpec.poisson(1.3), 0.4)
    w = 0.6
    for d in [1e-3, 1e-4 * 1.01, 1e-4 * 0.99, 1e-6, 1e-9, 0.0]:
        for sign in (1, -1, 1j):
            z = w + sign * d
            exact = blocked_arrival_pmf(ArrivalSpec.poisson(1.3), 0.4).evaluate(z)
            assert abs(tf(z) - exact) < 1e-11


def test_blocked_transform_derivatives_near_singularity():
    tf = blocked_arrival_transform(ArrivalSpec.poisson(1.3), 0.4)
    pmf = blocked_arrival_pmf(ArrivalSpec.poisson(1.3), 0.4)
    for z0 in [0.6, 0.6 + 5e-5, 0.6 + 2e-4]:
        j = tf.jet(Jet.variable(z0, 2))
        k = np.arange(len(pmf.weights))
        d1 = np.sum(pmf.weights * k * z0 ** np.clip(k - 1, 0, None))
        assert j.derivative(1).real == pytest.approx(d1, abs=1e-9)


def test_build_broadcasts_scalars():
    cfg = ModelConfig.build(3, 2, 1, p=0.2, q=0.5, arrivals=0.1)
    assert cfg.p == (0.2, 0.2, 0.2)
    assert cfg.q == (0.5, 0.5, 0.5)
    assert len(cfg.arrivals) == 6


def test_validation_collects_every_violation():
    raw = ModelConfig(g1=2, g2=0, r=-1, m=0, p=(0.5, 1.5), q=(1.0,), arrivals=())
    with pytest.raises(ConfigError) as err:
        validate_config(raw)
    codes = set(err.value.codes)
    assert {"G2Zero", "NegativeDuration", "BadLaneCount", "ProbabilityRange",
            "LengthMismatch"} <= codes


def test_explicit_pmf_must_sum_to_one():
    with pytest.raises(ConfigError) as err:
        validate_config(ModelConfig.build(1, 1, 1, arrivals=ArrivalSpec.explicit([0.5, 0.4])))
    assert "MalformedPmf" in err.value.codes


def test_mixed_batch_requires_override():
    with pytest.raises(ConfigError) as err:
        validate_config(ModelConfig.build(2, 2, 2, m=2, p=0.5, arrivals=0.1))
    assert err.value.codes == ["MixedBatchUnsupported"]
    ok = ModelConfig.build(2, 2, 2, m=2, p=0.5, arrivals=0.1,
                           blocked_arrivals=[[0.9, 0.1], [0.9, 0.1]])
    validate_config(ok)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"g1": 1, "g2": 1, "r": 1, "colour": "red"}))
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert err.value.codes == ["UnknownKey"]


def test_config_json_round_trip():
    cfg = ModelConfig.build(2, 3, 1, m=1, p=[0.1, 0.7], q=[1.0, 0.4],
                            arrivals=[ArrivalSpec.poisson(0.2), ArrivalSpec.geometric(0.3),
                                      ArrivalSpec.deterministic(0),
                                      ArrivalSpec.explicit([0.5, 0.5]),
                                      ArrivalSpec.poisson(0.1), ArrivalSpec.poisson(0.0)])
    back = ModelConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back == cfg


def test_pmf_equality_and_mean():
    a = Pmf([0.25, 0.5, 0.25])
    assert a == Pmf([0.25, 0.5, 0.25])
    assert a.mean == pytest.approx(1.0)


def test_validated_model_load():
    model = validate_config(ModelConfig.build(2, 4, 4, arrivals=0.39))
    assert model.load == pytest.approx(3.9)
    assert model.c == 10
