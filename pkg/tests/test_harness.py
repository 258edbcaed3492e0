import json
import socket
import subprocess
import sys

import pytest

from propleak import harness as H
from propleak import models as M
from propleak.cli import main

TINY = """
family = multi-party
seed = 3
repetitions = 4
data.scenario = X_|_A,Y~A
data.n_numeric = 4
data.adv_size = 60
data.honest_size = 60
data.aux_size = 400
data.attack_size = 20
target.epochs = 3
attack.n_shadow = 8
"""

TINY_GRAPH = """
family = ablation-queries
repetitions = 2
data.source = graph
data.n_nodes = 300
data.aux_size = 100
data.attack_size = 20
data.attack_pool = 40
data.adv_size = 20
data.honest_size = 30
target.epochs = 3
attack.n_shadow = 4
"""


def tiny(extra="", base=TINY):
    return H.ExperimentConfig.from_text(base + extra)


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def test_config_defaults_and_digest_stability():
    a = tiny()
    b = H.ExperimentConfig.from_text(TINY.replace("seed = 3", "seed=3  # same"))
    assert a.digest == b.digest and len(a.digest) == 16
    assert a["attack.meta"] == "binary-lr"
    assert a["attack.shadow_size"] == 60
    assert a.with_value("seed", 4).digest != a.digest
    assert H.ExperimentConfig.from_text(a.to_text()).to_text() == a.to_text()


def test_config_errors_are_all_listed():
    with pytest.raises(H.ConfigError) as info:
        tiny("target.epochs2 = 1\nbogus.key = 1\n")
    assert len(info.value.errors) >= 2
    with pytest.raises(H.ConfigError) as info:
        H.ExperimentConfig.from_text(TINY.replace("repetitions = 4", "repetitions = 0") + "target.arch = gcn\n")
    assert len(info.value.errors) >= 2


def test_config_syntax_errors():
    with pytest.raises(H.ConfigError, match="line 1"):
        H.parse_config_text("no equals sign")
    with pytest.raises(H.ConfigError, match="duplicate"):
        H.parse_config_text("a = 1\na = 2")


def test_parse_ratio_forms():
    assert H.parse_ratio("30:70") == pytest.approx(0.3)
    assert H.parse_ratio("33%") == pytest.approx(0.33)
    assert H.parse_ratio("0.4") == pytest.approx(0.4)
    with pytest.raises(ValueError):
        H.parse_ratio("1.5")


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def test_single_repetition_gives_one_prediction():
    r = H.run_experiment(tiny("").with_value("repetitions", 1))
    assert len(r.predictions) == 1 and r.repetitions == 1


def test_run_is_deterministic_and_balanced():
    cfg = tiny()
    a, b = H.run_experiment(cfg), H.run_experiment(cfg)
    assert a.predictions == b.predictions
    assert sorted(a.truths) == [0.33, 0.33, 0.67, 0.67]


def test_target_hook_sees_every_target():
    seen = []
    H.run_experiment(tiny(), on_target=lambda i, m, t: seen.append((i, t)))
    assert [i for i, _ in seen] == [0, 1, 2, 3]


@pytest.mark.parametrize("family, extra", [
    ("single-party", ""),
    ("fine-grained", "attack.n_shadow = 10\n"),
    ("white-box", "attack.meta = binary-lr\n"),
    ("model-update", "attack.n_shadow = 10\nupdate.honest1 = 0.3\nupdate.honest2 = 0.3,0.7\nrepetitions = 2\n"),
])
def test_other_families_run(family, extra):
    text = TINY.replace("family = multi-party", f"family = {family}").replace("attack.n_shadow = 8", "") + extra
    if "repetitions = 2" in extra:
        text = text.replace("repetitions = 4", "")
    r = H.run_experiment(H.ExperimentConfig.from_text(text))
    assert r.failed == 0
    if family == "model-update":
        assert r.repetitions == 4
        assert set(r.truths) == {"same", "flipped"}


def test_single_value_sweep_matches_run():
    cfg = tiny()
    (swept,) = H.run_sweep(cfg, "k", ["20"])
    assert swept.predictions == H.run_experiment(cfg).predictions


def test_sweep_offsets_seed_and_rejects_unknown_axis():
    cfgs = H.sweep_configs(tiny(), "split", ["0.1", "0.2"])
    assert [c.seed for c in cfgs] == [3, 4]
    with pytest.raises(H.ConfigError):
        H.sweep_configs(tiny(), "depth", ["1"])


def test_graph_sweep_runs():
    base = H.ExperimentConfig.from_text(TINY_GRAPH)
    results = H.run_sweep(base, "k", ["10", "40"])
    assert [r.value for r in results] == ["10", "40"]
    assert all(r.failed == 0 for r in results)


# ---------------------------------------------------------------------------
# results and reports
# ---------------------------------------------------------------------------


def fake_result(acc_hits, n=100, seed=0):
    cfg = tiny().with_value("seed", seed).with_value("repetitions", n)
    truths = [0.33 if i % 2 else 0.67 for i in range(n)]
    preds = [t if i < acc_hits else (0.67 if t == 0.33 else 0.33) for i, t in enumerate(truths)]
    return H.ExperimentResult(cfg, preds, truths, [None] * n, wall_time=1.5)


def test_binomial_ci_half_width():
    lo, hi = fake_result(73).ci
    assert (hi - lo) / 2 == pytest.approx(0.087, abs=5e-4)


def test_report_rows_and_byte_identical_emit(tmp_path):
    results = [fake_result(60 + i, seed=i) for i in range(4)]
    csv_text = H.report_csv(results)
    assert len(csv_text.strip().splitlines()) == 5
    assert "wall_time" not in csv_text
    a = [p.read_bytes() for p in H.emit_report(results, tmp_path / "a")]
    b = [p.read_bytes() for p in H.emit_report(results, tmp_path / "b")]
    assert a == b


def test_result_json_round_trip(tmp_path):
    r = fake_result(50)
    r.save(tmp_path / "r.json")
    back = H.ExperimentResult.load(tmp_path / "r.json")
    assert back.predictions == r.predictions and back.digest == r.digest
    assert "wall_time" not in json.loads((tmp_path / "r.json").read_text())


def test_failure_rate_gate():
    r = fake_result(50)
    r.predictions[:10] = [None] * 10
    with pytest.raises(H.RunFailure):
        H.check_failures(r)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------


def test_cli_run_and_report(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(TINY)
    assert main(["run", str(cfg), "--out", str(tmp_path / "out"), "--save-target", str(tmp_path / "t.model")]) == 0
    out = tmp_path / "out"
    assert (out / "report.csv").exists() and (out / "report.txt").exists()
    first = (out / "report.csv").read_bytes()
    result_file = next(out.glob("result-*.json"))
    assert main(["report", str(result_file), "--out", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "report.csv").read_bytes() == first
    assert M.load_model(tmp_path / "t.model").arch == "lr"


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(TINY + "target.arch = gcn\nattack.meta = nope\n")
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == H.EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.count("config error") >= 2


def test_cli_missing_config_is_a_config_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.cfg")]) == H.EXIT_CONFIG


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_cli_serve_and_attack_remote(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(TINY)
    assert main(["run", str(cfg), "--out", str(tmp_path / "out"), "--save-target", str(tmp_path / "t.model")]) == 0
    port = free_port()
    proc = subprocess.Popen([sys.executable, "-m", "propleak", "serve", "--model", str(tmp_path / "t.model"),
                             "--listen", f"127.0.0.1:{port}"], stdout=subprocess.PIPE, text=True)
    try:
        assert proc.stdout.readline().startswith("listening on")
        done = subprocess.run([sys.executable, "-m", "propleak", "attack-remote", str(cfg), "--endpoint", f"127.0.0.1:{port}"],
                              capture_output=True, text=True, timeout=120)
        assert done.returncode == 0, done.stderr
        assert "prediction = " in done.stdout
    finally:
        proc.terminate()
        proc.wait(timeout=10)
