import numpy as np
import pytest

from netspill import (DGPSpec, Graph, dilated_baseline, dilated_outcomes, generate_outcomes,
                      generate_small_world, map_exposures, realize_observed)
from netspill.errors import ParameterError
from netspill.outcomes import (NEGATIVE_MULTIPLIERS, POSITIVE_MULTIPLIERS, hierarchical_outcomes,
                               load_observed, load_potential_outcomes, regime_estimand,
                               save_potential_outcomes, true_estimand)


@pytest.fixture
def g():
    return generate_small_world(200, 4, 0.1, seed=3)


def test_baseline_nonnegative(g):
    for s in range(5):
        assert np.all(dilated_baseline(g, 0.1, seed=s) >= 0)


def test_kappa_zero_decouples_degree(g):
    b = dilated_baseline(g, 0.0, seed=1)
    r = np.corrcoef(b, g.degrees + g.second_degrees)[0, 1]
    assert abs(r) < 3 / np.sqrt(g.n)


def test_large_kappa_tracks_degree(g):
    b = dilated_baseline(g, 1e4, seed=1)
    assert np.corrcoef(b, g.degrees + g.second_degrees)[0, 1] > 0.999


def test_hop1_ratio_identities(g):
    t = generate_outcomes(g, DGPSpec("hop1", seed=5))
    top = true_estimand(t, "d11", "d00")
    assert top == pytest.approx(t.mean("d00"), rel=1e-12)
    assert true_estimand(t, "d10", "d00") / top == pytest.approx(0.5, rel=1e-12)
    assert true_estimand(t, "d01", "d00") / top == pytest.approx(0.25, rel=1e-12)


def test_hop2_top_ratio(g):
    base = dilated_baseline(g, 0.1, seed=5)
    t1 = dilated_outcomes(base, "hop1", POSITIVE_MULTIPLIERS["hop1"])
    t2 = dilated_outcomes(base, "hop2", POSITIVE_MULTIPLIERS["hop2"])
    ratio = true_estimand(t2, "d111", "d000") / true_estimand(t1, "d11", "d00")
    assert ratio == pytest.approx(1.25, rel=1e-12)


def test_negative_preset_ordering():
    m11, m10, m01, m00 = NEGATIVE_MULTIPLIERS["hop1"]
    assert m11 < m10 and m01 < m00 == 1.0


def test_unit_multipliers_give_zero_effects(g):
    t = dilated_outcomes(dilated_baseline(g, seed=1), "hop1", (1, 1, 1, 1))
    assert true_estimand(t, "d11", "d00") == 0.0


def test_multiplier_validation():
    with pytest.raises(ParameterError):
        dilated_outcomes(np.ones(3), "hop1", (2, 1.5, 1.25, 1.1))
    with pytest.raises(ParameterError):
        dilated_outcomes(np.ones(3), "hop1", (2, 1.5))
    t = dilated_outcomes(np.ones(3), "hop1", (2, 1.5, 1.25))
    assert t.values[:, 0].tolist() == [2, 1.5, 1.25, 1]


def test_realize_selects_column(toy_graph):
    t = dilated_outcomes(np.arange(1.0, 11.0), "hop1")
    z = np.zeros(10, dtype=np.uint8)
    z[[5, 8]] = 1
    e = map_exposures(toy_graph, z, "hop1")
    y = realize_observed(e, t)
    # units 6,9 isolated direct (1.5x); 1,2 untouched; the rest indirect (1.25x)
    expected = np.arange(1.0, 11.0) * np.array([1, 1, 1.25, 1.25, 1.25, 1.5, 1.25, 1.25, 1.5, 1.25])
    assert np.allclose(y, expected)
    assert np.allclose(realize_observed(e.matrix, t), expected)


def test_true_estimand_hand():
    t = dilated_outcomes(np.array([1.0, 2.0, 3.0]), "none", (1.5, 1.0))
    assert true_estimand(t, "d1", "d0") == pytest.approx(1.0)
    assert true_estimand(t, "d1", "d1") == 0.0


def test_regime_estimand_uses_true_mapping(toy_graph):
    base = dilated_baseline(toy_graph, 0.1, seed=0)
    t = dilated_outcomes(base, "hop1")
    # every unit has a peer, so all-ones is d11 for everyone
    assert regime_estimand(t, toy_graph) == pytest.approx(base.mean())
    lonely = Graph.from_edges(2, [])
    t2 = dilated_outcomes(np.array([1.0, 1.0]), "hop1")
    assert regime_estimand(t2, lonely) == pytest.approx(0.5)


def test_hierarchical_group_multipliers():
    group_of = np.repeat(np.arange(2), 3)
    o = hierarchical_outcomes(group_of, 2 / 3, 1 / 3, seed=1)
    arm = np.array([1, 1, 1, 0, 0, 0])
    z = np.array([1, 0, 1, 1, 0, 0])
    y = o.realize(z, arm)
    assert np.allclose(y / o.baseline, [2, 1.25, 2, 1.5, 1, 1])


def test_hierarchical_tract_level_differs():
    group_of = np.repeat(np.arange(4), 3)
    tract_of = group_of // 2
    o = hierarchical_outcomes(group_of, 2 / 3, 1 / 3, level="tract", tract_of=tract_of, seed=1)
    z = np.zeros(12, dtype=np.uint8)
    z[0] = 1
    both_psi = o.realize(z, np.array([1] * 6 + [0] * 6))
    mixed = o.realize(z, np.array([1] * 3 + [0] * 3 + [1] * 3 + [0] * 3))
    assert both_psi[0] != mixed[0]
    assert both_psi[0] / o.baseline[0] == 2.0
    assert mixed[0] / o.baseline[0] == pytest.approx(1.75)


def test_hierarchical_estimands_group_level():
    o = hierarchical_outcomes(np.repeat(np.arange(6), 3), 2 / 3, 1 / 3, seed=2)
    est = o.estimands()
    yb = o.baseline.mean()
    assert est["direct_psi"] == pytest.approx(0.75 * yb)
    assert est["total"] == pytest.approx(est["direct_psi"] + est["indirect"])


def test_potential_outcome_file_round_trip(tmp_path, toy_graph):
    t = dilated_outcomes(dilated_baseline(toy_graph, seed=3), "hop2", POSITIVE_MULTIPLIERS["hop2"])
    save_potential_outcomes(t, tmp_path / "po.csv")
    back = load_potential_outcomes(tmp_path / "po.csv")
    assert back.mapping == t.mapping
    assert np.array_equal(back.values, t.values)


def test_observed_file(tmp_path):
    p = tmp_path / "y.csv"
    p.write_text("unit,y\n1,2.5\n0,1.0\n")
    assert load_observed(p).tolist() == [1.0, 2.5]
