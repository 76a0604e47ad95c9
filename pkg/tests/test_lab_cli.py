import csv
import json
from pathlib import Path

import pytest

from simplexlab import __version__
from simplexlab.lab_cli import SCHEMA, SUITES, build_parser, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def header_and_rows(path):
    lines = path.read_text().splitlines()
    head = [ln for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("# ")]
    return head, list(csv.DictReader(body))


def test_parser_subcommands():
    p = build_parser()
    args = p.parse_args(["verify", "binomial", "--threads", "2", "--budget", "100"])
    assert (args.command, args.suite, args.threads, args.budget) == ("verify", "binomial", 2, 100)
    for cmd in ("cancellation", "tree-pipeline", "single-tree", "encode-modulated"):
        assert p.parse_args([cmd]).command == cmd
    with pytest.raises(SystemExit):
        p.parse_args(["verify", "no-such-suite"])


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert __version__ in capsys.readouterr().out


@pytest.mark.parametrize("suite", ["partition-of-unity", "kernel-bounds", "psi-l1", "binomial",
                                   "selection", "small-tiles", "corollary"])
def test_fast_suites_pass(tmp_path, suite):
    code, out = run(tmp_path, "verify", suite)
    assert code == 0
    head, rows = header_and_rows(out)
    assert head[0] == f"# schema: {SCHEMA} experiment=verify:{suite}"
    assert head[-1] == "# status: pass"
    assert rows and all(r["passed"] == "true" for r in rows)
    assert set(rows[0]) == {"suite", "check", "instance", "value", "tolerance", "passed"}


def test_all_suites_registered():
    assert set(SUITES) == {"partition-of-unity", "kernel-bounds", "psi-l1", "tile-decomposition", "binomial",
                           "change-of-variables", "duality", "separation", "regularity", "selection",
                           "small-tiles", "corollary", "encoding"}


def test_config_echo_in_report(tmp_path):
    code, out = run(tmp_path, "cancellation", "--config", str(CONFIGS / "cancellation_m1.ini"))
    assert code == 0
    head, rows = header_and_rows(out)
    echo = json.loads(head[1].removeprefix("# config: "))
    assert echo["ladder"] == [8, 16, 32, 64] and "threads" not in echo
    assert head[2].startswith("# env: simplexlab=")
    assert any("not a proof" in h for h in head)
    assert {r["family"] for r in rows} >= {"configured", "random-sign[0]"}


def test_threads_do_not_change_output(tmp_path):
    cfg = str(CONFIGS / "tree_pipeline_m2.ini")
    _, one = run(tmp_path, "tree-pipeline", "--config", cfg, "--threads", "1", name="one.csv")
    _, three = run(tmp_path, "tree-pipeline", "--config", cfg, "--threads", "3", name="three.csv")
    assert one.read_bytes() == three.read_bytes()
    sel1, sel3 = one.with_suffix(".selection.csv"), three.with_suffix(".selection.csv")
    assert sel1.exists() and sel1.read_bytes() == sel3.read_bytes()


def test_tree_pipeline_records(tmp_path):
    code, out = run(tmp_path, "tree-pipeline", "--config", str(CONFIGS / "tree_pipeline_m2.ini"))
    assert code == 0
    _, rows = header_and_rows(out)
    records = {r["record"] for r in rows}
    assert {"field", "selection", "small-tiles", "loomis-whitney", "coverage"} <= records


def test_stdout_when_no_out(capsys):
    assert main(["verify", "binomial"]) == 0
    assert capsys.readouterr().out.startswith(f"# schema: {SCHEMA}")


def test_tolerance_failure_exit_1(tmp_path):
    text = (CONFIGS / "cancellation_m1.ini").read_text().replace("max_decay = 0.5", "max_decay = 0.01")
    cfg = tmp_path / "strict.ini"
    cfg.write_text(text)
    code, out = run(tmp_path, "cancellation", "--config", str(cfg))
    assert code == 1
    assert "# status: fail" in out.read_text()


@pytest.mark.parametrize("body", [
    "[experiment]\nbogus = 1\n",
    "[experiment]\nm = 1\nladder = 8, 16\nf0 = bump\nf1 = bump\n",
    "[experiment]\nm = 1\nladder = 8, 16, 32\nf0 = zero\nf1 = bump\n",
])
def test_input_errors_exit_2(tmp_path, body, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(body)
    code, out = run(tmp_path, "cancellation", "--config", str(cfg))
    assert code == 2 and not out.exists()
    assert "simplexlab: error" in capsys.readouterr().err


def test_budget_exceeded_exit_2(tmp_path):
    code, _ = run(tmp_path, "cancellation", "--config", str(CONFIGS / "cancellation_m1.ini"), "--budget", "10")
    assert code == 2


def test_bad_kernel_and_threads(tmp_path):
    assert run(tmp_path, "verify", "binomial", "--kernel", "nope")[0] == 2
    assert run(tmp_path, "verify", "binomial", "--threads", "0")[0] == 2


def test_single_tree_report(tmp_path):
    code, out = run(tmp_path, "single-tree", "--config", str(CONFIGS / "single_tree_m2.ini"))
    assert code == 0
    _, rows = header_and_rows(out)
    assert len(rows) >= 1
