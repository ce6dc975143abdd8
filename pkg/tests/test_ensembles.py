import numpy as np
import pytest

from mrfcd.ensembles import (
    ChangeEnsemble,
    gaussian_single_edge_ensemble,
    ising_clique_ensemble,
    ising_single_edge_ensemble,
    verify_structural_difference,
)
from mrfcd.errors import ValidationError
from mrfcd.gaussian import gamma_of
from mrfcd.ising import IsingModel, class_membership


def one_based(pair):
    return tuple(v + 1 for v in pair)


class TestIsingSingleEdge:
    def test_p3(self):
        e = ising_single_edge_ensemble(3, 0.5)
        assert [one_based(pr) for pr in e.params["pairs"]] == [(1, 2), (1, 3), (2, 3)]
        assert [q.edge_set for q in e.alternatives] == [{(0, 1)}, {(0, 2)}, {(1, 2)}]
        assert e.null_model.edge_set == frozenset()

    def test_class_membership(self):
        e = ising_single_edge_ensemble(2, 0.4)
        assert all(class_membership(m, 2, 1, 0.4, 0.8) for m in (e.null_model, *e.alternatives))

    def test_count(self):
        assert len(ising_single_edge_ensemble(100, 0.3)) == 4950

    def test_rejects(self):
        with pytest.raises(ValidationError):
            ising_single_edge_ensemble(1, 0.5)
        with pytest.raises(ValidationError):
            ising_single_edge_ensemble(4, 0.0)


class TestIsingClique:
    def test_layout(self):
        e = ising_clique_ensemble(10, 4, 0.9)
        assert e.params["r"] == 2
        assert [one_based(pr) for pr in e.params["clipped_pairs"]] == [(1, 2), (6, 7)]
        for q, pr in zip(e.alternatives, e.params["clipped_pairs"]):
            assert e.null_model.edge_set - q.edge_set == {pr}
            assert q.edge_set < e.null_model.edge_set

    def test_isolated_leftovers(self):
        e = ising_clique_ensemble(12, 4, 0.9)
        assert e.params["r"] == 2
        deg = e.null_model.degrees()
        assert deg[10] == 0 and deg[11] == 0 and e.p == 12

    def test_single_block(self):
        e = ising_clique_ensemble(5, 4, 0.7)
        assert len(e) == 1
        assert e.null_model == IsingModel.complete(5, 0.7)

    def test_class_membership(self):
        e = ising_clique_ensemble(11, 4, 0.9)
        assert all(class_membership(m, 11, 4, 0.9, 0.9) for m in (e.null_model, *e.alternatives))

    def test_rejects_small_p(self):
        with pytest.raises(ValidationError):
            ising_clique_ensemble(4, 4, 0.5)


class TestGaussianSingleEdge:
    def test_gamma(self):
        e = gaussian_single_edge_ensemble(3, 0.2)
        assert len(e) == 3
        assert all(gamma_of(q) == pytest.approx(0.2) for q in e.alternatives)
        assert np.array_equal(e.null_model.precision, np.eye(3))

    def test_negative_lambda(self):
        e = gaussian_single_edge_ensemble(4, -0.3)
        assert all(gamma_of(q) == pytest.approx(0.3) for q in e.alternatives)

    def test_gate(self):
        with pytest.raises(ValidationError):
            gaussian_single_edge_ensemble(3, 0.5)
        gaussian_single_edge_ensemble(2, 0.39)


class TestStructuralDifference:
    @pytest.mark.parametrize("e", [
        ising_single_edge_ensemble(4, 0.3),
        ising_clique_ensemble(10, 4, 0.9),
        ising_clique_ensemble(7, 2, -0.4),
        gaussian_single_edge_ensemble(5, 0.1),
    ])
    def test_constructors_pass(self, e):
        assert verify_structural_difference(e)

    def test_hand_built_degenerate(self):
        m = IsingModel.complete(3, 0.5)
        assert not verify_structural_difference(ChangeEnsemble("custom", m, (m,)))

    def test_mixed_family_rejected(self):
        g = gaussian_single_edge_ensemble(3, 0.1)
        with pytest.raises(ValidationError):
            ChangeEnsemble("custom", IsingModel(3), g.alternatives)


@pytest.mark.parametrize("e", [
    ising_single_edge_ensemble(4, 0.3),
    ising_clique_ensemble(7, 2, 0.8),
    gaussian_single_edge_ensemble(3, 0.25),
])
def test_json_round_trip(e):
    back = ChangeEnsemble.from_json(e.to_json())
    assert back.kind == e.kind and back.params == e.params
    assert back.to_dict() == e.to_dict()
