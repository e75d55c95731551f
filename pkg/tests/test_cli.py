import json

import numpy as np
import pytest

from conftest import tiny_instance
from edgecast.cli import main
from edgecast.instance import save_instance
from edgecast.sampling import draw_samples, load_samples


@pytest.fixture
def inst_file(tmp_path):
    path = tmp_path / "inst.ini"
    save_instance(tiny_instance(2), path)
    return path


def test_validate_ok_and_bad(inst_file, tmp_path, capsys):
    assert main(["validate", str(inst_file)]) == 0
    assert capsys.readouterr().out.strip() == "ok"
    bad = tmp_path / "bad.ini"
    bad.write_text(inst_file.read_text().replace("tau = 0.004", "tau = 0.0001"))
    assert main(["validate", str(bad)]) == 1
    assert "deadline infeasible" in capsys.readouterr().out


def test_solve_outputs(inst_file, tmp_path, capsys):
    rc = main([
        "solve", str(inst_file), "--samples", "16", "--seed", "2", "--output", str(tmp_path / "p.csv"),
        "--diagnostics", str(tmp_path / "d.csv"), "--manifest", str(tmp_path / "m.json"),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "policy " in out and "feasible True" in out and "exact_bandwidth_hz" in out
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "device_id,task_id,route"
    m = json.loads((tmp_path / "m.json").read_text())
    assert m["seed"] == 2 and len(m["outputs"]) == 2


def test_solve_greedy_explain(inst_file, tmp_path):
    assert main(["solve", str(inst_file), "--solver", "greedy_cache_compute", "--explain", str(tmp_path / "t.csv")]) == 0
    assert (tmp_path / "t.csv").read_text().startswith("device,task,route")


def test_config_wins_over_flag(inst_file, capsys):
    assert main(["solve", str(inst_file), "--solver", "mec", "--tau", "0.5", "--samples", "4"]) == 0
    assert "--tau ignored" in capsys.readouterr().err


def test_flag_fills_missing_key(tmp_path, capsys):
    path = tmp_path / "i.ini"
    path.write_text(
        "[system]\nmu = 1e-27\n[tasks]\nalpha = 3\ninput_bits = 1e7, 1.2e7\n"
        "[devices]\ncount = 1\ncache_bits = 0\navg_energy = 0\ncpu_freq = 1.1e11\ninv_spectral_eff = 0.2\n"
    )
    assert main(["solve", str(path), "--solver", "mec", "--tau", "0.01", "--samples", "4"]) == 0
    assert "ignored" not in capsys.readouterr().err


def test_compare_and_sweep(inst_file, tmp_path, capsys):
    assert main(["compare", str(inst_file), "--solvers", "oracle,greedy_cache,mec", "--samples", "8",
                 "--output", str(tmp_path / "c.csv")]) == 0
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].startswith("# edgecast-sweep/") and len(lines) == 5
    plan = tmp_path / "plan.ini"
    plan.write_text(f"[plan]\ninstance = {inst_file.name}\nsolvers = greedy_cache, mec\nsweep = f1\n"
                    "values = 1.1e11, 2e11\nsamples = 8\n")
    assert main(["sweep", str(plan), "--output", str(tmp_path / "s.csv"), "--workers", "2",
                 "--plot-script", str(tmp_path / "plot.py"), "--manifest", str(tmp_path / "m.json")]) == 0
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 6
    assert (tmp_path / "plot.py").exists()
    assert main(["validate", str(plan)]) == 0


def test_symmetric_command(tmp_path, capsys):
    cfg = tmp_path / "s.ini"
    cfg.write_text("[symmetric]\nF = 10\nK = 4\nbeta_c = 0.1, 0.2\nbeta_e = 0.3\n")
    assert main(["symmetric", "--config", str(cfg), "--F", "20"]) == 0
    cap = capsys.readouterr()
    assert "--F ignored" in cap.err
    assert len(cap.out.strip().splitlines()) == 4
    assert main(["validate", str(cfg)]) == 0
    assert main(["symmetric", "--beta-c", "0.2", "--K", "1,2", "--output", str(tmp_path / "o.csv")]) == 0


def test_dump_samples(inst_file, tmp_path):
    out = tmp_path / "a.csv"
    assert main(["dump-samples", str(inst_file), "--samples", "30", "--seed", "5", "--output", str(out)]) == 0
    assert np.array_equal(load_samples(out), draw_samples(tiny_instance(2), 30, 5))


def test_bad_input_exit_code(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.ini")]) == 2
    assert "error" in capsys.readouterr().err
