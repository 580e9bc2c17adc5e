"""
Tests pour les types du domaine
Indexation lexicographique, centrage, matrice de Gram, paramètres et graphes colorés
"""

import numpy as np
import pytest
from pydantic import ValidationError

from colored_ggm.errors import InputError
from colored_ggm.estimation.models import (
    ActiveSets,
    ColoredGraph,
    DataMatrix,
    PrecisionParams,
    center_columns,
    gram,
    pair_from_index,
    pair_index,
)
from colored_ggm.models import Family, Hyperparams, SimSpec, TuneGrid


class TestPairIndex:
    """Tests de l'ordre lexicographique des paires"""

    @pytest.mark.core
    def test_first_and_last_pair(self):
        """Test (1,2) -> 1 et (2,3) -> 3 pour p = 3 (indices 0-based ici)"""
        assert pair_index(0, 1, 3) == 0
        assert pair_index(1, 2, 3) == 2

    @pytest.mark.core
    @pytest.mark.parametrize("p", [2, 3, 10, 50])
    def test_round_trip(self, p):
        """Test bijection pair_index / pair_from_index"""
        m = p * (p - 1) // 2
        assert [pair_index(*pair_from_index(j, p), p) for j in range(m)] == list(range(m))

    @pytest.mark.core
    def test_matches_triu_order(self):
        """Test accord avec l'ordre de np.triu_indices"""
        rows, cols = np.triu_indices(6, 1)
        assert [pair_index(q, l, 6) for q, l in zip(rows, cols)] == list(range(15))

    @pytest.mark.core
    @pytest.mark.parametrize("q,l", [(1, 1), (2, 1), (0, 3), (-1, 1)])
    def test_invalid_pairs(self, q, l):
        """Test rejet des paires invalides"""
        with pytest.raises(InputError):
            pair_index(q, l, 3)

    @pytest.mark.core
    def test_index_out_of_range(self):
        """Test rejet d'un indice hors plage"""
        with pytest.raises(InputError):
            pair_from_index(3, 3)


class TestDataMatrix:
    """Tests du centrage et de la matrice de Gram"""

    @pytest.mark.core
    def test_center_columns(self):
        """Test soustraction de la moyenne et colonne constante"""
        data = DataMatrix(values=[[1.0, 5.0], [3.0, 5.0]])
        centered = center_columns(data)

        assert centered.centered
        np.testing.assert_array_equal(centered.values, [[-1.0, 0.0], [1.0, 0.0]])
        np.testing.assert_array_equal(data.values, [[1.0, 5.0], [3.0, 5.0]])

    @pytest.mark.core
    def test_center_is_idempotent(self):
        """Test colonne déjà centrée inchangée"""
        data = DataMatrix(values=[[-2.0, 1.0], [2.0, -1.0]])
        np.testing.assert_array_equal(center_columns(data).values, data.values)

    @pytest.mark.core
    def test_column_means_zero(self, make_data):
        """Test moyennes nulles à 1e-12 près"""
        data = make_data(30, 5, seed=3)
        assert np.all(np.abs(data.values.mean(axis=0)) < 1e-12)

    @pytest.mark.core
    def test_rejects_too_few_rows(self):
        """Test rejet de n < 2"""
        with pytest.raises(InputError):
            DataMatrix(values=[[1.0, 2.0]])

    @pytest.mark.core
    def test_default_variable_names(self):
        """Test noms x1..xp par défaut"""
        assert DataMatrix(values=np.zeros((3, 3))).variables == ("x1", "x2", "x3")

    @pytest.mark.core
    def test_gram_identity(self):
        """Test X = I (centrée par construction) -> S = X^T X"""
        values = np.array([[1.0, -1.0], [-1.0, 1.0]])
        g = gram(DataMatrix(values=values, centered=True))
        np.testing.assert_array_equal(g.S, values.T @ values)
        assert g.n == 2

    @pytest.mark.core
    def test_gram_brute_force(self):
        """Test S contre la double boucle explicite"""
        rng = np.random.default_rng(5)
        data = center_columns(DataMatrix(values=rng.standard_normal((5, 3))))
        x = data.values
        expected = np.array([[sum(x[k, i] * x[k, j] for k in range(5)) for j in range(3)] for i in range(3)])
        g = gram(data)

        np.testing.assert_allclose(g.S, expected, rtol=1e-10, atol=1e-12)
        np.testing.assert_array_equal(g.S, g.S.T)

    @pytest.mark.core
    def test_gram_requires_centered(self):
        """Test rejet de données non centrées"""
        with pytest.raises(InputError):
            gram(DataMatrix(values=[[1.0, 2.0], [3.0, 5.0]]))


class TestPrecisionParams:
    """Tests du stockage (diag, beta)"""

    @pytest.mark.core
    def test_matrix_round_trip(self, make_params):
        """Test matrice pleine symétrique et retour exact"""
        params = make_params(5, seed=2)
        theta = params.to_matrix()

        np.testing.assert_array_equal(theta, theta.T)
        np.testing.assert_array_equal(np.diag(theta), params.diag)
        assert theta[1, 3] == params.beta[pair_index(1, 3, 5)]
        back = PrecisionParams.from_matrix(theta)
        np.testing.assert_array_equal(back.diag, params.diag)
        np.testing.assert_array_equal(back.beta, params.beta)

    @pytest.mark.core
    def test_rejects_nonpositive_diagonal(self):
        """Test rejet d'une diagonale non positive"""
        with pytest.raises(InputError):
            PrecisionParams(diag=[1.0, 0.0], beta=[0.1])

    @pytest.mark.core
    def test_rejects_wrong_beta_length(self):
        """Test rejet d'un beta de mauvaise longueur"""
        with pytest.raises(InputError):
            PrecisionParams(diag=[1.0, 1.0, 1.0], beta=[0.1])

    @pytest.mark.core
    def test_arrays_are_read_only(self, make_params):
        """Test immutabilité des tableaux"""
        params = make_params(3, seed=0)
        with pytest.raises(ValueError):
            params.diag[0] = 5.0

    @pytest.mark.core
    def test_initial_point(self, small_gram):
        """Test départ theta_jj = n / S_jj, beta = 0"""
        start = PrecisionParams.initial(small_gram)
        np.testing.assert_allclose(start.diag, small_gram.n / np.diag(small_gram.S))
        assert not start.beta.any()

    @pytest.mark.core
    def test_initial_zero_variance(self):
        """Test colonne de variance nulle"""
        data = center_columns(DataMatrix(values=[[1.0, 5.0], [2.0, 5.0], [4.0, 5.0]]))
        with pytest.raises(InputError, match="column 2 has zero variance"):
            PrecisionParams.initial(gram(data))


class TestColoredGraph:
    """Tests des partitions de couleurs"""

    @pytest.mark.core
    def test_valid_graph(self):
        """Test graphe valide et support"""
        graph = ColoredGraph(p=3, vertex_classes=((0, 1), (2,)), edge_classes=(((0, 2), (1, 2)),))
        assert graph.edge_set == {(0, 2), (1, 2)}
        np.testing.assert_array_equal(graph.support(), [False, True, True])

    @pytest.mark.core
    def test_pairs_are_normalized(self):
        """Test paires réordonnées q < l"""
        graph = ColoredGraph(p=3, vertex_classes=((0, 1, 2),), edge_classes=(((2, 0),),))
        assert graph.edge_classes == (((0, 2),),)

    @pytest.mark.core
    def test_vertex_classes_must_cover(self):
        """Test partition incomplète rejetée"""
        with pytest.raises(InputError):
            ColoredGraph(p=3, vertex_classes=((0, 1),))

    @pytest.mark.core
    def test_edge_classes_disjoint(self):
        """Test classes d'arêtes chevauchantes rejetées"""
        with pytest.raises(InputError):
            ColoredGraph(p=3, vertex_classes=((0, 1, 2),), edge_classes=(((0, 1),), ((0, 1), (1, 2))))

    @pytest.mark.core
    def test_active_sets_comparison(self):
        """Test comparaison d'ensembles actifs"""
        sets = ActiveSets(diag_pairs=[[0, 1]], zero_betas=[0], beta_pairs=np.zeros((0, 2)), p=2, tau=0.1)
        same = ActiveSets(diag_pairs=[[0, 1]], zero_betas=[0], beta_pairs=np.zeros((0, 2)), p=2, tau=0.1)

        assert sets.same_as(same)
        assert not sets.same_as(None)
        assert sets.has_constraints


class TestSchemas:
    """Tests des modèles pydantic"""

    @pytest.mark.core
    def test_hyperparams_constraints(self):
        """Test rho > 1, tau > 0, lambdas >= 0"""
        with pytest.raises(ValidationError):
            Hyperparams(rho=1.0)
        with pytest.raises(ValidationError):
            Hyperparams(tau=0.0)
        with pytest.raises(ValidationError):
            Hyperparams(lambda2=-0.1)

    @pytest.mark.core
    def test_with_tuning_keeps_controls(self):
        """Test copie avec nouvelles valeurs de réglage"""
        base = Hyperparams(max_cd=42)
        tuned = base.with_tuning(1, 2, 3, 0.5)
        assert tuned.tuning == (1.0, 2.0, 3.0, 0.5)
        assert tuned.max_cd == 42

    @pytest.mark.core
    def test_grid_side_from_p(self):
        """Test grille : p carré parfait -> q"""
        spec = SimSpec(family="grid", p=16, n=100)
        assert spec.family == Family.GRID
        assert spec.q == 4
        assert spec.dimension == 16

    @pytest.mark.core
    def test_grid_rejects_non_square(self):
        """Test grille : p non carré rejeté"""
        with pytest.raises(ValidationError):
            SimSpec(family="grid", p=15, n=100)

    @pytest.mark.core
    def test_star_requires_p(self):
        """Test étoile : p >= 3"""
        with pytest.raises(ValidationError):
            SimSpec(family="star", p=2, n=100)

    @pytest.mark.core
    def test_replicate_seed(self):
        """Test graine de réplication base + r"""
        assert SimSpec(family="cycle", p=5, n=10, seed=100).for_replicate(3).seed == 103

    @pytest.mark.core
    def test_grid_anchors_default_to_minimum(self):
        """Test ancres par défaut : plus petite valeur"""
        grid = TuneGrid(lambda1=[0.1], lambda2=[0.3, 0.2], lambda3=[0.5, 0.4], tau=[1.0, 0.5], mode="sequential")
        assert grid.anchors == (0.2, 0.4, 0.5)

    @pytest.mark.core
    def test_grid_lists_nonempty(self):
        """Test listes de candidats non vides"""
        with pytest.raises(ValidationError):
            TuneGrid(lambda1=[], lambda2=[0.1], lambda3=[0.1], tau=[0.1])
