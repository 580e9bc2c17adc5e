"""
Tests pour la ligne de commande
Sous-commandes, fichiers produits et codes de sortie
"""

import json

import pandas as pd
import pytest

from colored_ggm.cli import EXIT_INPUT, EXIT_OK, EXIT_NONCONVERGENCE, main
from colored_ggm.errors import InputError
from colored_ggm.io import parse_rows

FAST_HYPER = '[hyper]\nmax_dc = 5\nmax_alm = 30\nmax_cd = 200\n'


def simulate_into(out, family="star", p=5, n=40, seed=3):
    code = main(["simulate", "--family", family, "--p", str(p), "--n", str(n), "--seed", str(seed), "--out", str(out)])
    assert code == EXIT_OK
    return out / "data.csv", out / "truth.json"


@pytest.fixture
def simulated(tmp_path):
    """Données et vérité simulées (étoile p = 5, n = 40)"""
    return simulate_into(tmp_path / "sim")


@pytest.fixture
def fast_config(tmp_path):
    """Fichier de configuration TOML avec une grille à un point"""
    path = tmp_path / "run.toml"
    path.write_text(
        FAST_HYPER
        + '\n[grid]\nlambda1 = [0.05]\nlambda2 = [0.05]\nlambda3 = [0.05]\ntau = [0.1]\n',
        encoding="utf-8",
    )
    return path


class TestSimulateCommand:
    """Tests de la sous-commande simulate"""

    @pytest.mark.cli
    def test_outputs(self, simulated):
        """Test data.csv avec en-tête x1..xp et truth.json cohérent"""
        data_path, truth_path = simulated
        frame = pd.read_csv(data_path)
        assert list(frame.columns) == ["x1", "x2", "x3", "x4", "x5"]
        assert frame.shape == (40, 5)

        truth = json.loads(truth_path.read_text())
        assert truth["p"] == 5
        assert truth["schema_version"] == 1
        assert truth["vertex_classes"] == [[1, 2, 3, 4], [5]]
        assert truth["edge_classes"] == [[[1, 5], [2, 5], [3, 5], [4, 5]]]

    @pytest.mark.cli
    def test_byte_deterministic(self, tmp_path):
        """Test même graine -> fichiers identiques octet par octet"""
        first, _ = simulate_into(tmp_path / "a", family="cycle", p=6, seed=9)
        second, _ = simulate_into(tmp_path / "b", family="cycle", p=6, seed=9)
        assert first.read_bytes() == second.read_bytes()

    @pytest.mark.cli
    def test_grid_from_p(self, tmp_path):
        """Test grille demandée par p carré parfait"""
        data_path, truth_path = simulate_into(tmp_path, family="grid", p=9, n=20)
        assert pd.read_csv(data_path).shape == (20, 9)
        assert json.loads(truth_path.read_text())["q"] == 3

    @pytest.mark.cli
    def test_missing_design(self, tmp_path):
        """Test plan de simulation absent -> code 2"""
        assert main(["simulate", "--out", str(tmp_path)]) == EXIT_INPUT

    @pytest.mark.cli
    def test_invalid_grid_size(self, tmp_path):
        """Test p non carré pour une grille -> code 2"""
        assert main(["simulate", "--family", "grid", "--p", "15", "--n", "10", "--out", str(tmp_path)]) == EXIT_INPUT


class TestDataInput:
    """Tests de lecture des fichiers de données"""

    @pytest.mark.cli
    def test_non_numeric_cell_position(self):
        """Test diagnostic 'row 3, column 2'"""
        with pytest.raises(InputError, match="row 3, column 2"):
            parse_rows([["x1", "x2"], ["1.0", "2.0"], ["3.0", "abc"]])

    @pytest.mark.cli
    @pytest.mark.parametrize("line, column, cell, position", [
        (1, 1, "nan", "row 2, column 2"),
        (2, 0, "-inf", "row 3, column 1"),
    ])
    def test_non_finite_cell_position(self, line, column, cell, position):
        """Test valeur non finie signalée avec sa position"""
        rows = [["x1", "x2"], ["1.0", "2.0"], ["3.0", "4.0"]]
        rows[line][column] = cell
        with pytest.raises(InputError, match=position):
            parse_rows(rows)

    @pytest.mark.cli
    def test_ragged_row(self):
        """Test ligne de longueur incorrecte"""
        with pytest.raises(InputError, match="row 2"):
            parse_rows([["1.0", "2.0"], ["3.0"]])

    @pytest.mark.cli
    def test_headerless(self):
        """Test fichier sans en-tête"""
        data = parse_rows([["1.0", "2.0"], ["3.0", "4.5"]])
        assert data.values.tolist() == [[1.0, 2.0], [3.0, 4.5]]
        assert data.variables == ()

    @pytest.mark.cli
    def test_fit_bad_file_exit_code(self, tmp_path):
        """Test fichier invalide -> code 2"""
        path = tmp_path / "bad.csv"
        path.write_text("x1,x2\n1.0,2.0\n3.0,abc\n", encoding="utf-8")
        assert main(["fit", "--data", str(path), "--out", str(tmp_path)]) == EXIT_INPUT

    @pytest.mark.cli
    def test_missing_data_flag(self, tmp_path):
        """Test --data absent -> code 2"""
        assert main(["fit", "--out", str(tmp_path)]) == EXIT_INPUT

    @pytest.mark.cli
    def test_zero_variance_column(self, tmp_path):
        """Test colonne constante -> code 2"""
        path = tmp_path / "flat.csv"
        path.write_text("x1,x2\n1.0,5.0\n2.0,5.0\n4.0,5.0\n", encoding="utf-8")
        assert main(["fit", "--data", str(path), "--out", str(tmp_path)]) == EXIT_INPUT


class TestFitAndTuneCommands:
    """Tests des sous-commandes fit et tune"""

    @pytest.mark.cli
    def test_fit_writes_estimate(self, simulated, tmp_path):
        """Test estimate.json écrit avec df et BIC"""
        data_path, _ = simulated
        out = tmp_path / "fit"
        code = main(["fit", "--data", str(data_path), "--lambda2", "0.1", "--tau", "0.1", "--out", str(out)])

        assert code in (EXIT_OK, EXIT_NONCONVERGENCE)
        estimate = json.loads((out / "estimate.json").read_text())
        assert estimate["p"] == 5
        assert estimate["variables"] == ["x1", "x2", "x3", "x4", "x5"]
        assert estimate["df"] >= 1
        assert estimate["converged"] == (code == EXIT_OK)
        assert estimate["hyper"]["lambda2"] == 0.1

    @pytest.mark.cli
    def test_fit_iteration_cap(self, simulated, tmp_path):
        """Test max_dc = 1 -> code 3, estimation tout de même écrite"""
        data_path, _ = simulated
        config = tmp_path / "cap.json"
        config.write_text(json.dumps({"hyper": {"max_dc": 1, "lambda1": 0.1, "lambda3": 0.1}}), encoding="utf-8")
        out = tmp_path / "fit"
        code = main(["fit", "--config", str(config), "--data", str(data_path), "--out", str(out)])

        assert code == EXIT_NONCONVERGENCE
        assert json.loads((out / "estimate.json").read_text())["converged"] is False

    @pytest.mark.cli
    def test_tune_singleton_trace(self, simulated, fast_config, tmp_path):
        """Test grille à un point -> trace d'une ligne, retenue"""
        data_path, _ = simulated
        out = tmp_path / "tune"
        code = main(["tune", "--config", str(fast_config), "--data", str(data_path), "--out", str(out)])

        assert code in (EXIT_OK, EXIT_NONCONVERGENCE)
        trace = pd.read_csv(out / "trace.csv")
        assert len(trace) == 1
        assert list(trace.columns[:4]) == ["lambda1", "lambda2", "lambda3", "tau"]
        assert bool(trace.loc[0, "selected"])
        assert (out / "estimate.json").exists()

    @pytest.mark.cli
    def test_mode_without_grid(self, simulated, tmp_path):
        """Test --mode sans grille -> code 2"""
        data_path, _ = simulated
        assert main(["tune", "--mode", "sequential", "--data", str(data_path), "--out", str(tmp_path)]) == EXIT_INPUT


class TestEvalAndExportCommands:
    """Tests des sous-commandes eval et export-dot"""

    @pytest.mark.cli
    def test_eval_writes_metrics(self, simulated, tmp_path):
        """Test metrics.json avec toutes les mesures"""
        data_path, truth_path = simulated
        main(["fit", "--data", str(data_path), "--lambda2", "0.1", "--out", str(tmp_path)])
        code = main(["eval", "--estimate", str(tmp_path / "estimate.json"), "--truth", str(truth_path),
                     "--out", str(tmp_path)])

        assert code == EXIT_OK
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert set(metrics) == {"mse", "tp", "fp", "fn", "f1", "d0", "d_vertex", "d_edge", "acc_all"}
        assert len(metrics["d_vertex"]) == 2
        assert len(metrics["d_edge"]) == 1
        assert 0.0 <= metrics["acc_all"] <= 1.0

    @pytest.mark.cli
    def test_eval_dimension_mismatch(self, tmp_path):
        """Test estimation et vérité de tailles différentes -> code 2"""
        data_path, _ = simulate_into(tmp_path / "small", p=4)
        _, truth_path = simulate_into(tmp_path / "large", p=6)
        main(["fit", "--data", str(data_path), "--out", str(tmp_path)])
        code = main(["eval", "--estimate", str(tmp_path / "estimate.json"), "--truth", str(truth_path),
                     "--out", str(tmp_path)])
        assert code == EXIT_INPUT

    @pytest.mark.cli
    def test_export_truth_dot(self, simulated, tmp_path):
        """Test DOT de la vérité : centre singleton en gamboge, rayons"""
        _, truth_path = simulated
        assert main(["export-dot", "--truth", str(truth_path), "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(["export-dot", "--truth", str(truth_path), "--out", str(tmp_path / "b")]) == EXIT_OK

        text = (tmp_path / "a" / "graph.dot").read_text()
        assert text == (tmp_path / "b" / "graph.dot").read_text()
        assert text.startswith("graph ")
        assert "#E49B0F" in text
        assert "v1 -- v5" in text
        assert "v1 -- v2" not in text

    @pytest.mark.cli
    def test_export_to_stdout(self, simulated, capsys):
        """Test sortie standard sans --out"""
        _, truth_path = simulated
        assert main(["export-dot", "--truth", str(truth_path)]) == EXIT_OK
        assert "v4 -- v5" in capsys.readouterr().out

    @pytest.mark.cli
    def test_export_missing_input(self):
        """Test ni estimation ni vérité -> code 2"""
        assert main(["export-dot"]) == EXIT_INPUT


class TestConfiguration:
    """Tests des fichiers de configuration"""

    @pytest.mark.cli
    def test_json_config_with_override(self, tmp_path):
        """Test fichier JSON, valeur écrasée par la ligne de commande"""
        config = tmp_path / "sim.json"
        config.write_text(json.dumps({"simulation": {"family": "cycle", "p": 5, "n": 20, "seed": 1}}), encoding="utf-8")
        assert main(["simulate", "--config", str(config), "--n", "25", "--out", str(tmp_path)]) == EXIT_OK
        assert pd.read_csv(tmp_path / "data.csv").shape == (25, 5)

    @pytest.mark.cli
    def test_toml_config(self, tmp_path):
        """Test fichier TOML"""
        config = tmp_path / "sim.toml"
        config.write_text('[simulation]\nfamily = "star"\np = 4\nn = 12\nseed = 2\n', encoding="utf-8")
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == EXIT_OK
        assert pd.read_csv(tmp_path / "data.csv").shape == (12, 4)

    @pytest.mark.cli
    def test_unreadable_config(self, tmp_path):
        """Test fichier de configuration invalide -> code 2"""
        config = tmp_path / "broken.toml"
        config.write_text("[simulation\n", encoding="utf-8")
        assert main(["simulate", "--config", str(config)]) == EXIT_INPUT

    @pytest.mark.cli
    def test_unknown_command(self):
        """Test sous-commande inconnue -> code 2"""
        assert main(["frobnicate"]) == EXIT_INPUT


class TestReplicateCommand:
    """Tests de la sous-commande replicate"""

    @pytest.mark.cli
    @pytest.mark.replicate
    def test_outputs(self, fast_config, tmp_path):
        """Test replicates.csv, summary.csv et summary.pdf"""
        code = main(["replicate", "--config", str(fast_config), "--family", "star", "--p", "4", "--n", "60",
                     "--reps", "2", "--pdf", "--out", str(tmp_path)])

        assert code == EXIT_OK
        replicates = pd.read_csv(tmp_path / "replicates.csv")
        assert replicates["replicate"].tolist() == [1, 2]
        summary = pd.read_csv(tmp_path / "summary.csv")
        assert summary.loc[0, "failed"] == 0
        assert (tmp_path / "summary.pdf").read_bytes().startswith(b"%PDF")
