import numpy as np
import pytest

from netspill import (Graph, ExposureMapping, complete_randomization, enumerate_support,
                      exposure_probabilities, map_exposures, misspecify)
from netspill.design import AssignmentSet
from netspill.errors import ParameterError
from netspill.exposure import load_probabilities, save_probabilities


def test_toy_exposure_table(toy_graph):
    z = np.zeros(10, dtype=np.uint8)
    z[[5, 8]] = 1
    e = map_exposures(toy_graph, z, "hop1")
    labels = e.labels()
    assert [labels[i] for i in (5, 8)] == ["isol_dir", "isol_dir"]
    assert [labels[i] for i in (2, 3, 4, 6, 7, 9)] == ["ind1"] * 6
    assert [labels[i] for i in (0, 1)] == ["no", "no"]
    assert not e.indicator("dir_ind1").any()


def test_empty_graph_reduces_to_own_assignment():
    g = Graph.from_edges(4, [])
    z = np.array([1, 0, 1, 0], dtype=np.uint8)
    e = map_exposures(g, z, "hop1")
    assert e.codes() == ["d10", "d00", "d10", "d00"]


def test_none_mapping_is_z(toy_graph):
    z = np.array([1, 0, 0, 1, 0, 0, 1, 0, 0, 0], dtype=np.uint8)
    e = map_exposures(toy_graph, z, "none")
    assert np.array_equal(e.indicator("d1"), z.astype(bool))


def test_hop2_uses_distance_exactly_two():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    z = np.array([1, 0, 0], dtype=np.uint8)
    assert map_exposures(g, z, "hop2").codes() == ["d100", "d010", "d001"]


def test_full_mapping():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    z = np.array([1, 1, 1, 0], dtype=np.uint8)
    assert map_exposures(g, z, "full").labels() == ["all_treated", "all_treated", "mixed", "mixed"]
    assert map_exposures(g, np.zeros(4, np.uint8), "full").codes() == ["d0full"] * 4


def test_mapping_lookup():
    m = ExposureMapping.parse("1")
    assert m.codes == ("d11", "d10", "d01", "d00")
    assert m.index("isol_dir") == 1 == m.index("d10")
    with pytest.raises(ParameterError):
        m.index("d111")
    with pytest.raises(ParameterError):
        ExposureMapping("hop3")


def test_one_hot_rows(toy_graph):
    z = np.zeros(10, dtype=np.uint8)
    z[3] = 1
    m = map_exposures(toy_graph, z, "hop2").matrix
    assert np.all(m.sum(axis=1) == 1)


def test_path_probabilities(path3):
    probs = exposure_probabilities(path3, enumerate_support(3, 1 / 3), "hop1")
    third = 1 / 3
    assert np.allclose(probs.individual[:, 0], [0, third, third, third], atol=1e-15)
    assert np.allclose(probs.individual[:, 1], [0, third, 2 * third, 0], atol=1e-15)
    assert np.array_equal(probs.individual[:, 2], probs.individual[:, 0])
    assert probs.exact


def test_probabilities_sum_to_one(toy_graph):
    probs = exposure_probabilities(toy_graph, enumerate_support(10, 0.2), "hop2")
    assert np.allclose(probs.individual.sum(axis=0), 1.0, atol=1e-12)


def test_joint_structure(toy_graph):
    probs = exposure_probabilities(toy_graph, enumerate_support(10, 0.2), "hop1")
    K = probs.mapping.K
    for k in range(K):
        assert np.allclose(np.diag(probs.joint[k, k]), probs.individual[k])
        for l in range(K):
            assert np.allclose(probs.joint[k, l], probs.joint[l, k].T)
            if k != l:
                assert np.all(np.diag(probs.joint[k, l]) == 0)
    # marginalizing the joint over j's conditions recovers pi_i
    assert np.allclose(probs.joint.sum(axis=1)[:, :, 0], probs.individual)


def test_chunking_does_not_change_counts(toy_graph):
    a = complete_randomization(10, 0.3, 100, seed=2)
    p1 = exposure_probabilities(toy_graph, a, "hop2", chunk=7)
    p2 = exposure_probabilities(toy_graph, a, "hop2", chunk=4096)
    assert np.array_equal(p1.individual, p2.individual)
    assert np.array_equal(p1.joint, p2.joint)


def test_monte_carlo_at_support_size_equals_enumeration(toy_graph):
    exact = exposure_probabilities(toy_graph, enumerate_support(10, 0.2), "hop1")
    mc = exposure_probabilities(
        toy_graph, complete_randomization(10, 0.2, 45, seed=8, allow_repetitions=False), "hop1")
    assert np.array_equal(exact.individual, mc.individual)
    assert np.array_equal(exact.joint, mc.joint)
    assert not mc.exact


def test_keep_draws(toy_graph):
    a = enumerate_support(10, 0.2)
    probs = exposure_probabilities(toy_graph, a, "hop1", want_joint=False, keep_draws=True)
    assert probs.draws.shape == (45, 10)
    with pytest.raises(ParameterError):
        probs.pij("d11", "d11")


def test_assignment_length_mismatch(toy_graph):
    a = AssignmentSet(np.zeros((1, 9), dtype=np.uint8), "complete", 0.0)
    with pytest.raises(ParameterError):
        exposure_probabilities(toy_graph, a, "hop1")


def test_misspecify():
    assert misspecify("hop1", "none")["d10"] == ["d1"]
    m = misspecify("hop2", "hop1")
    assert m["d110"] == ["d11"] and m["d111"] == ["d11"]
    assert misspecify("hop1", "hop1") == {c: [c] for c in ("d11", "d10", "d01", "d00")}
    assert misspecify("none", "hop1")["d1"] == ["d11", "d10"]
    with pytest.raises(ParameterError):
        misspecify("full", "hop1")


def test_probability_file_round_trip(tmp_path, toy_graph):
    probs = exposure_probabilities(toy_graph, enumerate_support(10, 0.2), "hop1")
    save_probabilities(probs, tmp_path / "p.csv")
    back = load_probabilities(tmp_path / "p.csv")
    assert np.array_equal(back.individual, probs.individual)
    assert np.array_equal(back.joint, probs.joint)
    assert back.exact and back.replicates == 45
