import io

import numpy as np
import pytest

from fuzzyirtree import FitResult, ModelSpec, ParamVector, entropy_weight, linear_tree
from fuzzyirtree.data import Dataset
from fuzzyirtree.effects import marginal_effects, reference_values
from fuzzyirtree.fuzzymix import lower_share
from fuzzyirtree.irtree import category_probs


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    I = 69
    return Dataset(np.full(I, 2), np.zeros(I, int), np.zeros(I, int), 4,
                   {"sex": np.where(rng.random(I) < 0.5, "F", "M"), "das": rng.uniform(0.1, 1.4, I)})


def make_fit(alpha, beta, sigma, formula="sex+das"):
    spec = ModelSpec.build("linear", 4, formula)
    return FitResult(theta=ParamVector.make(alpha, beta, sigma), loglik=0.0, n_obs=69, spec=spec,
                     levels={"sex": ["F", "M"]})


def test_zero_beta_gives_constant_effects(data):
    grid = marginal_effects(make_fit([-1.2], [0.0, 0.0], 0.5), data)
    assert np.ptp(grid.pi_y, axis=0).max() == 0.0
    assert np.ptp(grid.xi) == 0.0
    assert np.ptp(grid.pi_s, axis=0).max() == 0.0


def test_das_by_sex_grid_has_eight_points(data):
    grid = marginal_effects(make_fit([-1.248], [0.408, 1.284], 0.005), data,
                            {"das": ["0", "min", "mean", "max"], "sex": ["M", "F"]})
    assert grid.pi_y.shape == (8, 4) and grid.xi.shape == (8,)
    labels = {(p["das"][0], p["sex"][0]) for p in grid.points}
    assert len(labels) == 8
    np.testing.assert_allclose(grid.pi_y.sum(axis=1), 1.0, atol=1e-12)
    assert np.all((grid.xi >= 0) & (grid.xi <= 1))


def test_plugin_matches_direct_evaluation(data):
    fit = make_fit([-1.248], [0.408, 1.284], 0.005)
    grid = marginal_effects(fit, data, {"das": [0.7], "sex": ["M"]})
    eta = 0.408 + 1.284 * 0.7
    pi = category_probs(linear_tree(4), eta, [-1.248] * 3)
    np.testing.assert_allclose(grid.pi_y[0], pi, atol=1e-14)
    assert grid.xi[0] == pytest.approx(entropy_weight(pi), abs=1e-14)
    for c in range(1, 5):
        assert grid.pi_s[0, c - 1] == pytest.approx(lower_share(pi, c), abs=1e-14)
    assert grid.eta[0] == pytest.approx(eta)


def test_xi_increases_with_das(data):
    # alpha = -1.5 skews pi_y to the low end; larger das pushes it toward uniform
    fit = make_fit([-1.5], [0.0, 1.0], 0.3)
    das = np.linspace(0.0, 1.4, 30)
    grid = marginal_effects(fit, data, {"das": list(das), "sex": ["F"]})
    direct = [entropy_weight(category_probs(linear_tree(4), d, [-1.5] * 3)) for d in das]
    np.testing.assert_allclose(grid.xi, direct, atol=1e-14)
    assert np.all(np.diff(grid.xi) > 0)


def test_integrated_mode_averages_over_ability(data):
    fit = make_fit([-1.0], [0.4, 1.0], 1e-9)
    plug = marginal_effects(fit, data, {"das": ["mean"], "sex": ["F"]})
    integ = marginal_effects(fit, data, {"das": ["mean"], "sex": ["F"]}, mode="integrated")
    np.testing.assert_allclose(integ.pi_y, plug.pi_y, atol=1e-10)
    wide = marginal_effects(make_fit([-1.0], [0.4, 1.0], 2.0), data, {"das": ["mean"], "sex": ["F"]},
                            mode="integrated")
    np.testing.assert_allclose(wide.pi_y.sum(axis=1), 1.0, atol=1e-12)
    assert not np.allclose(wide.pi_y, plug.pi_y, atol=1e-3)
    with pytest.raises(ValueError):
        marginal_effects(fit, data, mode="bogus")


def test_unknown_names_raise(data):
    fit = make_fit([-1.0], [0.4, 1.0], 0.5)
    with pytest.raises(KeyError):
        marginal_effects(fit, data, {"age": [1.0]})
    with pytest.raises(KeyError):
        marginal_effects(fit, data, {"sex": ["X"]})
    with pytest.raises(KeyError):
        marginal_effects(make_fit([-1.0], [0.4], 0.5, "sex"), data, {"das": [1.0]})


def test_defaults_and_reference_values(data):
    grid = marginal_effects(make_fit([-1.0], [0.4, 1.0], 0.5), data)
    assert len(grid.points) == 2 * 4
    refs = dict(reference_values(data.covariates["das"]))
    assert refs["0"] == 0.0 and refs["max"] == data.covariates["das"].max()
    none = marginal_effects(make_fit([-1.0], [], 0.5, ""), data)
    assert none.pi_y.shape == (1, 4)


def test_long_table_and_determinism(data):
    fit = make_fit([-1.0], [0.4, 1.0], 0.5)
    g1 = marginal_effects(fit, data, {"das": ["0", "max"], "sex": ["F", "M"]})
    g2 = marginal_effects(fit, data, {"das": ["0", "max"], "sex": ["F", "M"]})
    rows = g1.to_long()
    assert len(rows) == 4 * (4 + 4 + 1)
    assert {r["quantity"] for r in rows} == {"pi_y", "pi_s", "xi"}
    a, b = io.StringIO(), io.StringIO()
    g1.write_csv(a)
    g2.write_csv(b)
    assert a.getvalue() == b.getvalue()
    assert a.getvalue().splitlines()[0] == "sex,sex_ref,das,das_ref,eta,quantity,category,value"
