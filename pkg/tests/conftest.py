"""
Configuration pytest pour les tests
"""

import numpy as np
import pytest

from colored_ggm.estimation.models import (
    ActiveSets,
    AugmentedState,
    DataMatrix,
    PrecisionParams,
    center_columns,
    gram,
)
from colored_ggm.models import Hyperparams


def pytest_configure(config):
    """Configuration des markers personnalisés"""
    config.addinivalue_line("markers", "core: Tests des types du domaine")
    config.addinivalue_line("markers", "likelihood: Tests de la vraisemblance composite")
    config.addinivalue_line("markers", "optimizer: Tests du solveur DC / ALM / CD")
    config.addinivalue_line("markers", "selection: Tests du choix des hyperparamètres par BIC")
    config.addinivalue_line("markers", "simulate: Tests des modèles de simulation")
    config.addinivalue_line("markers", "metrics: Tests des mesures d'évaluation")
    config.addinivalue_line("markers", "replicate: Tests des études répétées et du rapport PDF")
    config.addinivalue_line("markers", "cli: Tests de la ligne de commande")
    config.addinivalue_line("markers", "api: Tests du service HTTP")
    config.addinivalue_line("markers", "slow: Tests lents (> 10 secondes)")


def random_data(n: int, p: int, seed: int) -> DataMatrix:
    """Données centrées, colonnes légèrement corrélées"""
    rng = np.random.default_rng(seed)
    mixing = np.eye(p) + 0.3 * rng.standard_normal((p, p))
    return center_columns(DataMatrix(values=rng.standard_normal((n, p)) @ mixing))


def random_params(p: int, seed: int) -> PrecisionParams:
    """Paramètres aléatoires loin des points non dérivables"""
    rng = np.random.default_rng(seed)
    m = p * (p - 1) // 2
    signs = rng.choice([-1.0, 1.0], size=m)
    return PrecisionParams(diag=rng.uniform(0.8, 2.0, size=p), beta=signs * rng.uniform(0.1, 0.3, size=m))


def random_state(params: PrecisionParams, seed: int) -> AugmentedState:
    """État augmenté aléatoire sur des ensembles actifs fixés (p = 4)"""
    rng = np.random.default_rng(seed)
    sets = ActiveSets(
        diag_pairs=[[0, 1], [1, 3], [0, 2]],
        zero_betas=[0, 2, 5],
        beta_pairs=[[0, 1], [2, 4], [1, 5], [3, 4]],
        p=params.p,
        tau=0.5,
    )
    signs_k = rng.choice([-1.0, 1.0], size=3)
    signs_s = rng.choice([-1.0, 1.0], size=4)
    return AugmentedState(
        sets=sets,
        k=signs_k * rng.uniform(0.1, 0.4, size=3),
        a=rng.uniform(-0.5, 0.5, size=3),
        b=rng.uniform(0.5, 3.0, size=3),
        s=signs_s * rng.uniform(0.1, 0.4, size=4),
        c=rng.uniform(-0.5, 0.5, size=4),
        d=rng.uniform(0.5, 3.0, size=4),
        rho=2.0,
    )


@pytest.fixture
def small_data():
    """Jeu de données p = 4, n = 20"""
    return random_data(20, 4, seed=11)


@pytest.fixture
def small_gram(small_data):
    """Matrice de Gram du petit jeu de données"""
    return gram(small_data)


@pytest.fixture
def orthogonal_data():
    """Plan orthogonal : S = 4 I"""
    values = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    return center_columns(DataMatrix(values=values))


@pytest.fixture
def penalized_hyper():
    """Hyperparamètres avec les trois pénalités actives"""
    return Hyperparams(lambda1=0.3, lambda2=0.2, lambda3=0.1, tau=0.5)


@pytest.fixture
def fast_hyper():
    """Contrôles du solveur allégés pour les tests de recherche"""
    return Hyperparams(max_dc=5, max_alm=30, max_cd=200)


@pytest.fixture
def make_data():
    """Fabrique de jeux de données aléatoires"""
    return random_data


@pytest.fixture
def make_params():
    """Fabrique de paramètres aléatoires"""
    return random_params


@pytest.fixture
def make_state():
    """Fabrique d'états augmentés aléatoires"""
    return random_state
