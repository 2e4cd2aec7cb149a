import json

import pytest

from hypernibble.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out.strip()
    return code, (json.loads(out.splitlines()[-1]) if out else None)


def test_stats_on_fano(capsys):
    code, s = run(capsys, "stats", "--fixture", "fano")
    assert code == 0
    assert (s["n"], s["m"], s["max_degree"], s["simple"]) == (7, 7, 3, True)
    assert s["chromatic_number"] == 3 and s["girth"] == 3


def test_gen_is_reproducible(tmp_path, capsys):
    args = ["gen", "--k", "3", "--n", "150", "--max-degree", "6", "--triangle-free", "--seed", "2"]
    assert run(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
    assert run(capsys, *args, "--out", str(tmp_path / "b"))[0] == 0
    for name in ("config.json", "instance.txt", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_color_then_verify(tmp_path, capsys):
    code, s = run(capsys, "color", "--fixture", "fano", "--out", str(tmp_path / "r"))
    assert code == 0 and s["proper"]
    code, v = run(capsys, "verify", "--coloring", str(tmp_path / "r"))
    assert code == 0 and v["proper"]


def test_verify_detects_bad_colouring(tmp_path, capsys):
    (tmp_path / "c.jsonl").write_text("".join(json.dumps({"v": v, "color": 0}) + "\n" for v in range(7)))
    code, v = run(capsys, "verify", "--fixture", "fano", "--coloring", str(tmp_path / "c.jsonl"))
    assert code == 1 and not v["proper"] and len(v["monochromatic_edges"]) == 7


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fixture": "loose_cycle(4,3)", "seed": 3, "mode": "full"}))
    code, s = run(capsys, "color", "--config", str(cfg), "--mode", "direct")
    assert code == 0 and s["mode"] == "direct"


def test_exit_codes(tmp_path, capsys):
    assert run(capsys, "color", "--instance", str(tmp_path / "missing.txt"))[0] == 2
    assert run(capsys, "color", "--fixture", "fano", "--mode", "direct")[0] == 1
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "verify", "--fixture", "fano")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run(capsys, "stats", "--config", str(bad))[0] == 2
    (tmp_path / "inst.txt").write_text("3 4 2\n0 1 2\n")
    assert run(capsys, "stats", "--instance", str(tmp_path / "inst.txt"))[0] == 2
    assert run(capsys, "stats", "--fixture", "petersen")[0] == 2


def test_resample_cap_is_a_contract_failure(capsys):
    code, s = run(capsys, "color", "--fixture", "fano", "--cap", "7")
    assert code in (0, 1)
    if code == 1:
        assert "ResampleCapExceeded" in s["error"]


def test_probe_and_sweep(tmp_path, capsys):
    code, s = run(capsys, "probe", "--fixture", "fano", "--m", "2", "--trials", "4000",
                  "--out", str(tmp_path / "p"))
    assert code == 0 and s["covered_pairs"] == 12 and s["expectation"] == "3/8"
    assert (tmp_path / "p" / "tail.csv").exists()
    code, s = run(capsys, "sweep", "--grid", "8,12", "--seeds", "2", "--n", "60", "--out", str(tmp_path / "s"))
    assert code == 0 and s["runs"] == 4
    lines = (tmp_path / "s" / "sweep.csv").read_text().splitlines()
    assert len(lines) == 5 and lines[0].startswith("delta,seed,n,m,max_degree,colors")
