import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from gsqg.estimators import BesovExponent, LowPass, Mollify, ShellNorms
from gsqg.littlewood_paley import low_pass, shell_profile
from gsqg.mollify import mollify
from gsqg.spectral import Grid, to_physical, to_spectral
from gsqg.synthetic import SyntheticSpec, synthesize_besov_field

from conftest import random_rough


def batch(n=64, m=3):
    g = Grid(n)
    return g, np.stack([to_physical(random_rough(g, seed=s)).values.ravel() for s in range(m)])


def test_low_pass_matches_function():
    g, X = batch()
    out = LowPass(N=3).fit_transform(X)
    expect = to_physical(low_pass(to_spectral(to_physical(random_rough(g, seed=1))), 3)).values.ravel()
    assert out.shape == X.shape
    assert np.max(np.abs(out[1] - expect)) < 1e-14


def test_mollify_matches_function():
    g, X = batch()
    out = Mollify(eps=0.4).fit(X).transform(X)
    expect = mollify(to_physical(random_rough(g, seed=2)), 0.4).values.ravel()
    assert np.max(np.abs(out[2] - expect)) < 1e-14


def test_shell_norms_features():
    g, X = batch()
    t = ShellNorms(p=3.0, alpha=0.5).fit(X)
    F = t.transform(X)
    assert F.shape == (3, len(t.shells_))
    assert list(t.get_feature_names_out()) == [f"shell_{j}" for j in t.shells_]
    expect = shell_profile(random_rough(g, seed=0), 0.5, 3.0).weighted
    assert np.allclose(F[0], expect, rtol=1e-12, atol=0)


def test_pipeline_and_clone():
    _, X = batch()
    pipe = make_pipeline(LowPass(N=1), ShellNorms(p=2.0))
    F = pipe.fit_transform(X)
    # shells beyond the cut-off carry nothing
    assert np.all(F[:, -1] < 1e-14 * F[:, 0].max())
    c = clone(LowPass(N=2))
    assert c.get_params() == {"N": 2}
    assert c.set_params(N=1).N == 1


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_besov_exponent_recovers_alpha(alpha):
    g = Grid(256)
    X = np.stack([synthesize_besov_field(SyntheticSpec(alpha, 2.0, seed=s), g).values.ravel()
                  for s in range(2)])
    est = BesovExponent(p=2.0).fit(X)
    assert np.all(np.abs(est.predict(X) - alpha) < 0.05)


def test_validation_errors():
    _, X = batch()
    with pytest.raises(ValueError, match="square"):
        LowPass().fit(X[:, :-1])
    with pytest.raises(ValueError, match="N="):
        LowPass(N=20).fit(X)
    with pytest.raises(ValueError, match="shells"):
        BesovExponent(shells=[1]).fit(X)
    t = LowPass().fit(X)
    with pytest.raises(ValueError):
        t.transform(np.zeros((1, 32 * 32)))
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        t.transform(bad)


def test_unfitted():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        ShellNorms().transform(np.zeros((1, 64)))
