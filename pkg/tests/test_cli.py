from simt.cli import main
from simt.harness.report import read_results

TINY_CONFIG = """\
sbm_classes = 3
sbm_nodes_per_class = 30
sbm_p_in = 0.3
sbm_p_out = 0.02
sbm_feature_dim = 4
sbm_signal = 2.0
owner_count = 3
subgraph_size = 20
budgets = 5, 10
mechanisms = simt, greedy
epochs = 10
hidden_size = 8
cluster_restarts = 2
"""


def test_run_writes_results_and_figures(tmp_path, capsys):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY_CONFIG)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--seed", "3", "--quiet"]) == 0
    for name in ("results.tsv", "table.txt", "accuracy_vs_budget.png", "class_edges.png", "config.txt"):
        assert (out / name).exists()
    assert "seed = 3" in (out / "config.txt").read_text()
    table = read_results(out / "results.tsv")
    assert table.mechanisms == ["simt", "greedy"]
    assert "contrib" in capsys.readouterr().out

    again = tmp_path / "again"
    assert main(["report", str(out / "results.tsv"), "--out", str(again)]) == 0
    assert read_results(again / "results.tsv") == table


def test_unknown_config_key_fails(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("owners = 3\n")
    assert main(["run", str(cfg)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_verify_exit_codes(tmp_path):
    assert main(["verify", "--instances", "50", "--seed", "1"]) == 0
    cex = tmp_path / "cex.txt"
    assert main(["verify", "--instances", "200", "--owners", "grouped", "--out", str(cex)]) == 2
    assert "'kind': 'IC'" in cex.read_text()


def test_cluster_and_score(tmp_path, capsys):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY_CONFIG)
    part = tmp_path / "part.txt"
    assert main(["cluster", "--config", str(cfg), "--out", str(part)]) == 0
    assert len(part.read_text().splitlines()) == 90
    scores = tmp_path / "scores.txt"
    assert main(["score", "--config", str(cfg), "--budget", "10", "--partition", str(part),
                 "--out", str(scores)]) == 0
    assert len(scores.read_text().splitlines()[0].split("\t")) == 4
    assert "alpha=" in capsys.readouterr().out
