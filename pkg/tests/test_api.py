"""
Tests pour le service HTTP
Endpoints de simulation, d'estimation et d'évaluation
"""

import httpx
import pytest
import pytest_asyncio

from colored_ggm.main import app


@pytest_asyncio.fixture
async def client():
    """Client HTTP branché directement sur l'application"""
    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport, base_url="http://test", timeout=120.0) as client:
        yield client


@pytest.fixture
def simulate_payload():
    """Plan de simulation : étoile p = 4, n = 60"""
    return {"spec": {"family": "star", "p": 4, "n": 60, "seed": 5}}


FAST_HYPER = {"lambda2": 0.1, "tau": 0.1, "max_dc": 5, "max_alm": 30, "max_cd": 200}


class TestHealth:
    """Tests de l'endpoint de santé"""

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_health(self, client):
        """Test statut du service"""
        response = await client.get("/health")

        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "healthy"
        assert "version" in data


class TestSimulateEndpoint:
    """Tests de l'endpoint de simulation"""

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_simulate(self, client, simulate_payload):
        """Test vérité et lignes de données"""
        response = await client.post("/api/simulate", json=simulate_payload)

        assert response.status_code == 200
        data = response.json()
        assert data["truth"]["p"] == 4
        assert data["truth"]["vertex_classes"] == [[1, 2, 3], [4]]
        assert len(data["rows"]) == 60
        assert all(len(row) == 4 for row in data["rows"])

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_simulate_invalid_design(self, client):
        """Test étoile p = 2 -> 422"""
        response = await client.post("/api/simulate", json={"spec": {"family": "star", "p": 2, "n": 10}})
        assert response.status_code == 422


class TestFitEndpoint:
    """Tests de l'endpoint d'estimation"""

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_fit(self, client, simulate_payload):
        """Test estimation sur des données simulées"""
        simulated = (await client.post("/api/simulate", json=simulate_payload)).json()
        response = await client.post("/api/fit", json={"rows": simulated["rows"], "hyper": FAST_HYPER})

        assert response.status_code == 200
        estimate = response.json()
        assert estimate["p"] == 4
        assert estimate["n"] == 60
        assert len(estimate["beta"]) == 6
        assert estimate["df"] >= 1
        assert isinstance(estimate["converged"], bool)

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_zero_variance_column(self, client):
        """Test colonne constante -> 400"""
        rows = [[1.0, 5.0], [2.0, 5.0], [4.0, 5.0]]
        response = await client.post("/api/fit", json={"rows": rows})

        assert response.status_code == 400
        assert "zero variance" in response.json()["detail"]

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_single_row(self, client):
        """Test une seule observation -> 422"""
        response = await client.post("/api/fit", json={"rows": [[1.0, 2.0]]})
        assert response.status_code == 422

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_ragged_rows(self, client):
        """Test lignes de longueurs différentes -> 400"""
        response = await client.post("/api/fit", json={"rows": [[1.0, 2.0], [3.0]]})
        assert response.status_code == 400


class TestTuneEndpoint:
    """Tests de l'endpoint de choix par BIC"""

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_tune(self, client, simulate_payload):
        """Test grille à deux points -> trace de deux lignes, une retenue"""
        simulated = (await client.post("/api/simulate", json=simulate_payload)).json()
        payload = {
            "rows": simulated["rows"],
            "grid": {"lambda1": [0.0], "lambda2": [0.05, 0.2], "lambda3": [0.0], "tau": [0.1]},
            "hyper": {"max_dc": 5, "max_alm": 30, "max_cd": 200},
        }
        response = await client.post("/api/tune", json=payload)

        assert response.status_code == 200
        data = response.json()
        assert len(data["trace"]) == 2
        assert sum(record["selected"] for record in data["trace"]) == 1
        assert data["estimate"]["hyper"]["lambda2"] in (0.05, 0.2)


class TestEvaluateEndpoint:
    """Tests de l'endpoint d'évaluation"""

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_evaluate(self, client, simulate_payload):
        """Test cycle complet : simulation -> estimation -> évaluation"""
        simulated = (await client.post("/api/simulate", json=simulate_payload)).json()
        estimate = (await client.post("/api/fit", json={"rows": simulated["rows"], "hyper": FAST_HYPER})).json()
        response = await client.post("/api/evaluate", json={"estimate": estimate, "truth": simulated["truth"]})

        assert response.status_code == 200
        metrics = response.json()
        assert 0.0 <= metrics["f1"] <= 1.0
        assert 0.0 <= metrics["acc_all"] <= 1.0
        assert len(metrics["d_vertex"]) == 2
        assert len(metrics["d_edge"]) == 1

    @pytest.mark.asyncio
    @pytest.mark.api
    async def test_evaluate_dimension_mismatch(self, client, simulate_payload):
        """Test estimation p = 4 contre vérité p = 5 -> 400"""
        simulated = (await client.post("/api/simulate", json=simulate_payload)).json()
        larger = (await client.post("/api/simulate", json={"spec": {"family": "star", "p": 5, "n": 20}})).json()
        estimate = (await client.post("/api/fit", json={"rows": simulated["rows"], "hyper": FAST_HYPER})).json()
        response = await client.post("/api/evaluate", json={"estimate": estimate, "truth": larger["truth"]})

        assert response.status_code == 400
