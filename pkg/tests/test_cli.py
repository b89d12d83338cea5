import json
import math

import pytest

from nsi.cli import RunConfig, main

EVEN = "even(0).\neven(s(s(X))) :- even(X).\n"
PROP = "p :- q.\nq.\nr :- p, not s.\n"


@pytest.fixture()
def even_file(tmp_path):
    path = tmp_path / "even.lp"
    path.write_text(EVEN, encoding="utf-8")
    return str(path)


@pytest.fixture()
def prop_file(tmp_path):
    path = tmp_path / "prop.lp"
    path.write_text(PROP, encoding="utf-8")
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_roundtrip(capsys, even_file):
    code, out, _ = run_cli(capsys, "parse", even_file)
    assert code == 0
    assert out.strip().splitlines() == [
        "even(0).",
        "even(s(s(X))) :- even(X).",
    ]


def test_parse_syntax_error_is_domain_error(capsys, tmp_path):
    bad = tmp_path / "bad.lp"
    bad.write_text("p(X) :- q(X,).", encoding="utf-8")
    code, _, err = run_cli(capsys, "parse", str(bad))
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "syntax_error"
    assert payload["line"] == 1


def test_usage_error_exit_1(capsys):
    code, _, err = run_cli(capsys, "bogus")
    assert code == 1
    assert "usage" in err.lower()


def test_levels_csv(capsys, even_file):
    code, out, _ = run_cli(capsys, "levels", even_file, "-n", "3")
    assert code == 0
    assert out.splitlines() == [
        "level,atom",
        "1,even(0)",
        "2,even(s(0))",
        "3,even(s(s(0)))",
    ]


def test_ground_output(capsys, even_file):
    code, out, _ = run_cli(capsys, "ground", even_file, "--depth", "5")
    assert code == 0
    assert out.splitlines() == [
        "even(0).",
        "even(s(s(0))) :- even(0).",
        "even(s(s(s(0)))) :- even(s(0)).",
        "even(s(s(s(s(0))))) :- even(s(s(0))).",
    ]


def test_tp_trace_matches_module(capsys, even_file):
    code, out, _ = run_cli(capsys, "tp", even_file, "--steps", "4", "--m", "8")
    assert code == 0
    trace = json.loads(out)
    assert trace[0] == {"step": 0, "true_atoms": [], "changed": []}
    assert trace[1]["true_atoms"] == ["even(0)"]
    assert trace[2]["true_atoms"] == ["even(0)", "even(s(s(0)))"]
    assert len(trace) == 5


def test_sample_insufficient_depth(capsys, even_file):
    code, out, err = run_cli(capsys, "sample", even_file, "--level", "3", "--depth", "2")
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "insufficient_depth"
    assert payload["needed"] == 5


def test_sample_csv_format(capsys, even_file):
    code, out, _ = run_cli(capsys, "sample", even_file, "--level", "1", "--depth", "5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,y,y_radius"
    x, y, rad = (float(part) for part in lines[1].split(","))
    assert (x, y, rad) == (0.0, pytest.approx(2 / 3), 0.0)
    assert "." in lines[1] and ";" not in out


def test_embed_output(capsys, even_file):
    code, out, _ = run_cli(capsys, "embed", even_file, "--digits", "2020")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "0.2020₃"
    assert lines[1] == "exact: 20/27"
    assert lines[2].startswith("decimal: 0.740740740740740")


def test_lipschitz_json(capsys, even_file):
    code, out, _ = run_cli(
        capsys, "lipschitz", even_file, "--pairs", "50", "--m", "8", "--depth", "10"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["l_hat"] <= 1 / 3
    assert payload["flip_ratios"][0]["ratio"] == pytest.approx(1 / 9, abs=1e-15)
    assert "lower bound" in payload["note"]


def test_ifs_attractor_eval_pipeline(capsys, even_file, tmp_path):
    code, out, _ = run_cli(capsys, "ifs", even_file, "--level", "2", "--depth", "8")
    assert code == 0
    ifs_path = tmp_path / "ifs.json"
    ifs_path.write_text(out, encoding="utf-8")
    data = json.loads(out)
    assert set(data) == {"base_frame", "maps", "nodes", "d_max"}
    assert set(data["maps"][0]) == {"a", "e", "c", "d", "f"}

    code, out, _ = run_cli(
        capsys, "attractor", "--ifs", str(ifs_path), "--iters", "50", "--seed", "5"
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,y" and len(lines) == 51

    code, out, _ = run_cli(capsys, "eval-fif", "--ifs", str(ifs_path), "--x", "0.5")
    assert code == 0
    val = json.loads(out)
    assert 0.0 <= val["y"] <= 1.0 and val["bound"] == 0.0


def test_converge_csv(capsys, even_file):
    code, out, _ = run_cli(
        capsys, "converge", even_file, "--levels", "2,3", "--ref-level", "5",
        "--m", "8", "--depth", "10", "--canonical",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "level,epsilon,runtime_ms"
    assert lines[1].endswith(",0") and lines[1].startswith("2,")
    assert out.endswith("\n") and "\r" not in out


def test_train_writes_artifacts(capsys, even_file, tmp_path):
    out_dir = tmp_path / "train_out"
    code, out, _ = run_cli(
        capsys, "train", even_file, "--level", "4", "--epochs", "200",
        "--hidden", "3", "--out", str(out_dir),
    )
    assert code == 0
    report = json.loads(out)
    assert report["epochs"] == 200 and report["hidden"] == 3
    net = json.loads((out_dir / "net.json").read_text())
    assert net["arch"] == {"inputs": 1, "hidden": 3, "outputs": 1}
    assert net["activation"] == "logistic"
    assert len(net["weights"]["hidden"]) == 3


def test_core_trace(capsys, prop_file):
    code, out, _ = run_cli(capsys, "core", prop_file)
    assert code == 0
    payload = json.loads(out)
    assert payload["trace"][-1] == ["p", "q", "r"]
    assert payload["fixpoint_reached"] is True
    assert payload["unit_count"] == 11


def test_core_not_propositional(capsys, even_file):
    code, _, err = run_cli(capsys, "core", even_file)
    assert code == 2
    assert json.loads(err)["error"] == "not_propositional"


def test_tp_with_starting_interpretation(capsys, prop_file):
    code, out, _ = run_cli(
        capsys, "tp", prop_file, "--true", "p;q", "--steps", "3", "--m", "4",
        "--depth", "1",
    )
    assert code == 0
    trace = json.loads(out)
    assert trace[0]["true_atoms"] == ["p", "q"]
    assert trace[1]["true_atoms"] == ["p", "q", "r"]


def test_embed_true_atoms(capsys, even_file):
    code, out, _ = run_cli(
        capsys, "embed", even_file, "--true", "even(0);even(s(s(0)))", "-k", "3"
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "0.202₃"
    assert lines[1] == "exact: 20/27"


def test_attractor_deterministic_mode(capsys, even_file, tmp_path):
    code, out, _ = run_cli(capsys, "ifs", even_file, "--level", "2", "--depth", "8")
    ifs_path = tmp_path / "ifs.json"
    ifs_path.write_text(out, encoding="utf-8")
    code, out, _ = run_cli(
        capsys, "attractor", "--ifs", str(ifs_path), "--mode", "deterministic",
        "--iters", "3",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "x,y"
    assert len(lines) == 1 + 5 * 4**3  # (4 samples + augment) through 4 maps, 3 rounds


def test_config_roundtrip(tmp_path):
    cfg = RunConfig(program="x.lp", depth=9, lr=0.25, canonical=True, levels="2,4,6")
    path = tmp_path / "run.cfg"
    path.write_text(cfg.to_text(), encoding="utf-8")
    back = RunConfig.from_file(str(path))
    assert back == cfg


def test_report_flags_override_config(capsys, even_file, tmp_path):
    cfg = RunConfig(program=even_file, epochs=50, level=3, ref_level=5, levels="2,3",
                    pairs=20, m=8, depth=10, out=str(tmp_path / "o1"))
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(cfg.to_text(), encoding="utf-8")
    code, out, _ = run_cli(
        capsys, "report", "--config", str(cfg_path), "--epochs", "60", "--canonical"
    )
    assert code == 0
    report = json.loads(out)
    assert report["config"]["epochs"] == 60  # flag wins over file
    assert report["training"]["epochs"] == 60


def test_report_artifacts_exist_and_validate(capsys, even_file, tmp_path):
    out_dir = tmp_path / "rep"
    code, out, _ = run_cli(
        capsys, "report", even_file, "--out", str(out_dir), "--canonical",
        "--epochs", "50", "--level", "3", "--ref-level", "5", "--levels", "2,3",
        "--pairs", "20", "--m", "8", "--depth", "10",
    )
    assert code == 0
    report = json.loads(out)
    for name, rel in report["artifacts"].items():
        path = out_dir / rel
        assert path.exists(), name
        if rel.endswith(".json"):
            json.loads(path.read_text())
        else:
            header = path.read_text().splitlines()[0]
            assert "," in header
    assert "stage_wall_clock_ms" not in report
    assert report["acyclic"] is True
    assert math.isfinite(report["l_hat"])
    levels_csv = (out_dir / "levels.csv").read_text()
    assert levels_csv.startswith("level,atom\n")


def test_report_empty_program_degrades_gracefully(capsys, tmp_path):
    path = tmp_path / "empty.lp"
    path.write_text("% nothing here\n", encoding="utf-8")
    code, out, _ = run_cli(
        capsys, "report", str(path), "--out", str(tmp_path / "o"), "--canonical"
    )
    assert code == 0
    report = json.loads(out)
    assert report["constant_function"] is True
    assert report["l_hat"] == 0.0
    assert report["acyclic"] is True
    assert set(report["skipped_stages"]) == {"sample", "converge", "train"}


def test_report_non_acyclic_warns_and_continues(capsys, tmp_path):
    path = tmp_path / "loop.lp"
    path.write_text("p(0). p(s(X)) :- p(s(X)).\n", encoding="utf-8")
    code, out, _ = run_cli(
        capsys, "report", str(path), "--out", str(tmp_path / "o2"), "--canonical",
        "--epochs", "40", "--level", "3", "--ref-level", "5", "--levels", "2,3",
        "--pairs", "10", "--m", "8", "--depth", "9",
    )
    assert code == 0
    report = json.loads(out)
    assert report["acyclic"] is False
    assert report["acyclic_witness"] == "p(s(0)) :- p(s(0))."
    assert "warning" in report
    assert "training" in report  # pipeline still ran to the end


def test_report_byte_identical_under_canonical(capsys, even_file, tmp_path):
    args = [
        "report", even_file, "--canonical", "--epochs", "40", "--level", "3",
        "--ref-level", "5", "--levels", "2,3", "--pairs", "10", "--m", "8",
        "--depth", "10", "--out", str(tmp_path / "same"),
    ]
    code1, out1, _ = run_cli(capsys, *args)
    first_files = {
        p.name: p.read_bytes() for p in (tmp_path / "same").iterdir()
    }
    code2, out2, _ = run_cli(capsys, *args)
    second_files = {
        p.name: p.read_bytes() for p in (tmp_path / "same").iterdir()
    }
    assert code1 == code2 == 0
    assert out1 == out2
    assert first_files == second_files
