import json
import subprocess
import sys

import numpy as np
import pytest

from dssd import scenario as scn
from dssd.cli import main
from dssd.graph import Graph, write_edgelist

SMALL = """
name = "small"
engine = "sync"
seed = 1
s = 10
eps = 0.01
steps = 40

[graph]
kind = "static"
file = "g.edgelist"

[failures]
nodes = [[3, 20]]

[report]
plot_nodes = [1, 4]
"""


@pytest.fixture
def small_config(tmp_path):
    write_edgelist(Graph(4, [(1, 2), (2, 3), (3, 4)]), tmp_path / "g.edgelist")
    cfg = tmp_path / "small.toml"
    cfg.write_text(SMALL)
    return cfg


def write_cfg(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    return p


class TestValidation:
    def test_bundled_names(self):
        names = scn.bundled_scenarios()
        assert {"static-200-cut", "mobile-two-groups", "markov-two-graphs"} <= set(names)
        for name in names:
            scn.load_scenario(name)

    def test_missing_field(self, tmp_path):
        with pytest.raises(scn.ScenarioError, match="'s'"):
            scn.load_scenario(write_cfg(tmp_path, 'engine = "sync"\nsteps = 3\n[graph]\nkind = "geometric"\n'))

    def test_bad_engine(self, tmp_path):
        with pytest.raises(scn.ScenarioError, match="engine"):
            scn.load_scenario(write_cfg(tmp_path, 'engine = "warp"\ns = 1\n[graph]\nkind = "static"\n'))

    def test_bad_kind(self, tmp_path):
        with pytest.raises(scn.ScenarioError, match="graph.kind"):
            scn.load_scenario(write_cfg(tmp_path, 'engine = "sync"\ns = 1\nsteps = 2\n[graph]\nkind = "torus"\n'))

    def test_analysis_needs_markov(self, tmp_path):
        with pytest.raises(scn.ScenarioError, match="markov-analysis"):
            scn.load_scenario(write_cfg(tmp_path, 'engine = "markov-analysis"\ns = 1\n[graph]\nkind = "geometric"\n'))

    def test_nonpositive_eps(self, tmp_path):
        with pytest.raises(scn.ScenarioError, match="eps"):
            scn.load_scenario(write_cfg(tmp_path, 'engine = "sync"\ns = 1\neps = 0\nsteps = 2\n'
                                                  '[graph]\nkind = "geometric"\n'))

    def test_missing_static_file(self, tmp_path):
        with pytest.raises(scn.ScenarioError, match="missing file"):
            scn.load_scenario(write_cfg(tmp_path, 'engine = "sync"\ns = 1\nsteps = 2\n'
                                                  '[graph]\nkind = "static"\nfile = "nope"\n'))

    def test_unknown_async_field(self, tmp_path, small_config):
        sc = scn.load_scenario(small_config)
        sc.async_ = {"frobnicate": 1}
        with pytest.raises(scn.ScenarioError, match="async"):
            scn.build_async(sc)

    def test_bad_transition_matrix(self, tmp_path):
        cfg = write_cfg(tmp_path, 'engine = "markov-analysis"\ns = 1\n[graph]\nkind = "markov"\nn = 2\n'
                                  'graphs = [[[1, 2]], []]\nP = [[0.5, 0.6], [0.5, 0.5]]\n')
        with pytest.raises(scn.ScenarioError, match="graph.P"):
            scn.analyze_scenario(scn.load_scenario(cfg))

    def test_unknown_config(self):
        with pytest.raises(scn.ScenarioError, match="no config"):
            scn.resolve_config("does-not-exist")


class TestRun:
    def test_outputs(self, tmp_path, small_config):
        res = scn.run_scenario(small_config, out=tmp_path / "out")
        names = {p.name for p in (tmp_path / "out").iterdir()}
        assert names == {"trace.csv", "truth.csv", "events.json", "graph0.edgelist", "plot_data.csv", "summary.json"}
        summ = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summ["failed_nodes"] == [3]
        assert summ["separated_at_end"] == [4]
        assert res.trace.states.shape == (41, 4)

    def test_byte_identical_reruns(self, tmp_path):
        for tag in "ab":
            scn.run_scenario("markov-two-graphs-sim", out=tmp_path / tag)
        for f in ("trace.csv", "truth.csv", "events.json", "summary.json", "plot_data.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_async_byte_identical(self, tmp_path):
        for tag in "ab":
            scn.run_scenario("mobile-8-episodes", out=tmp_path / tag)
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()

    def test_seed_override_changes_output(self, tmp_path):
        scn.run_scenario("markov-two-graphs-sim", out=tmp_path / "a")
        scn.run_scenario("markov-two-graphs-sim", seed=6, out=tmp_path / "b")
        assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "b" / "trace.csv").read_bytes()

    def test_output_root_env(self, tmp_path, monkeypatch, small_config):
        monkeypatch.setenv(scn.OUTPUT_ROOT_ENV, str(tmp_path / "root"))
        res = scn.run_scenario(small_config)
        assert res.out_dir == tmp_path / "root" / "small"

    def test_analysis_run(self, tmp_path):
        res = scn.run_scenario("markov-two-graphs", out=tmp_path)
        rep = json.loads((tmp_path / "analysis.json").read_text())
        assert res.trace is None
        assert rep["mu"] == pytest.approx([11 / 15, 0.2, 0.2, 1 / 15])
        assert rep["reachability_match"]

    def test_layout_pins_source(self):
        sc = scn.load_scenario("static-200-cut")
        _, pts = scn.build_process(sc, np.random.default_rng(sc.seed))
        assert pts[0].tolist() == [0.5, 0.5]


class TestCli:
    def test_list(self, capsys):
        assert main(["list"]) == 0
        assert "static-200-cut" in capsys.readouterr().out

    def test_run(self, tmp_path, small_config, capsys):
        assert main(["run", str(small_config), "--out", str(tmp_path / "o")]) == 0
        assert "artifacts in" in capsys.readouterr().out

    def test_analyze(self, tmp_path):
        assert main(["analyze", "link-failure-ring", "--out", str(tmp_path / "a.json")]) == 0
        assert json.loads((tmp_path / "a.json").read_text())["N"] == 32

    def test_analyze_stdout(self, capsys):
        assert main(["analyze", "markov-two-graphs"]) == 0
        assert json.loads(capsys.readouterr().out)["rho_C"] == pytest.approx(1 / np.sqrt(6))

    def test_events_and_plot_data(self, tmp_path, small_config, capsys):
        main(["run", str(small_config), "--out", str(tmp_path)])
        capsys.readouterr()
        assert main(["events", str(tmp_path / "trace.csv"), str(tmp_path / "truth.csv")]) == 0
        out = capsys.readouterr().out
        assert "separation_detected" in out
        assert main(["events", str(tmp_path / "trace.csv"), str(tmp_path / "truth.csv"),
                     "--out", str(tmp_path / "ev.json")]) == 0
        # the run's own file covers alive nodes only; node 3 fails in this config
        cli_events = [e for e in json.loads((tmp_path / "ev.json").read_text()) if e["node"] != 3]
        assert cli_events == json.loads((tmp_path / "events.json").read_text())
        assert main(["plot-data", str(tmp_path / "trace.csv"), "--nodes", "2,3",
                     "--out", str(tmp_path / "p.csv")]) == 0
        header = (tmp_path / "p.csv").read_text().splitlines()[0]
        assert header == "k,epsilon,x_2,x_3"

    def test_plot_data_empty_nodes(self, tmp_path, small_config):
        main(["run", str(small_config), "--out", str(tmp_path)])
        assert main(["plot-data", str(tmp_path / "trace.csv"), "--nodes", "", "--out", str(tmp_path / "p.csv")]) == 0
        assert (tmp_path / "p.csv").read_text() == "k,epsilon\n"

    def test_errors_exit_2(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "missing.toml")]) == 2
        assert "dssd: error" in capsys.readouterr().err
        main(["run", "markov-two-graphs-sim", "--out", str(tmp_path)])
        assert main(["plot-data", str(tmp_path / "trace.csv"), "--nodes", "9",
                     "--out", str(tmp_path / "p.csv")]) == 2

    def test_console_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "dssd.cli", "list"], capture_output=True, text=True, check=True)
        assert "mobile-two-groups" in out.stdout
