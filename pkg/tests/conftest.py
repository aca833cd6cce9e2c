import numpy as np
import pytest

from bfctl import ModelConfig, validate_config


def build(g1, g2, r, **kw):
    return validate_config(ModelConfig.build(g1, g2, r, **kw))


@pytest.fixture
def small_p0():
    return build(2, 4, 4, p=0.0, q=1.0, arrivals=0.39)


@pytest.fixture
def small_p06():
    return build(2, 4, 4, p=0.6, q=1.0, arrivals=0.39)


def random_stable_suite(n=50, seed=12345):
    """Random stable configurations: g1<=4, g2<=6, r<=6, m<=3."""
    from bfctl import reward_recursion

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        g1 = int(rng.integers(0, 5))
        g2 = int(rng.integers(1, 7))
        r = int(rng.integers(0, 7))
        m = int(rng.integers(1, 4))
        if m > 1:
            p = rng.choice([0.0, 1.0], size=g1)
        else:
            p = rng.uniform(0, 1, size=g1).round(3)
        q = rng.uniform(0, 1, size=g1).round(3)
        probe = build(g1, g2, r, m=m, p=p, q=q, arrivals=1.0)
        cap = reward_recursion(probe).r0
        rho = rng.uniform(0.2, 0.9)
        mean = rho * cap / probe.c
        out.append(build(g1, g2, r, m=m, p=p, q=q, arrivals=mean))
    return out
