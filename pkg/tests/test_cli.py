import io
import json
import subprocess
import sys
from contextlib import redirect_stdout

import numpy as np
import pytest

from cip.cli import main
from cip.encoder import read_cipt
from cip.tiler import save_png


def run_cli(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


@pytest.fixture()
def sample_image(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (896, 1344, 3), dtype=np.uint8)
    path = tmp_path / "scene.png"
    save_png(img, path)
    return path


# ------------------------------------------------------------------ plan


def test_plan_dims_emits_three_levels():
    code, out = run_cli(["plan", "--dims", "1344x896", "--budget", "24"])
    assert code == 0
    doc = json.loads(out)
    assert [lv["name"] for lv in doc["levels"]] == ["detailed", "adaptive", "global"]
    assert doc["levels"][0]["grid"] == {"rows": 3, "cols": 5}


def test_plan_fixed_strategy_single_level():
    code, out = run_cli(["plan", "--strategy", "fixed", "--dims", "10x10"])
    assert code == 0
    doc = json.loads(out)
    assert len(doc["levels"]) == 1
    assert doc["levels"][0]["grid"] == {"rows": 3, "cols": 3}


def test_plan_budget_too_small_exits_2(capsys):
    code = main(["plan", "--dims", "100x100", "--budget", "13"])
    assert code == 2
    assert "budget too small for detailed group" in capsys.readouterr().err


def test_plan_bad_dims_exits_2(capsys):
    code = main(["plan", "--dims", "axb"])
    assert code == 2


def test_plan_without_input_exits_2(capsys):
    assert main(["plan"]) == 2


def test_plan_unreadable_image_exits_3(tmp_path, capsys):
    code = main(["plan", "--image", str(tmp_path / "missing.png")])
    assert code == 3


def test_plan_out_file(tmp_path):
    out = tmp_path / "plan.json"
    code, _ = run_cli(["plan", "--dims", "896x896", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["input"] == {"w": 896, "h": 896}


# ------------------------------------------------------------------ env


def test_env_budget_used_when_flag_absent(monkeypatch):
    monkeypatch.setenv("CIP_BUDGET", "18")
    _, out = run_cli(["plan", "--dims", "896x896"])
    assert json.loads(out)["budget"] == 18


def test_flag_beats_env(monkeypatch):
    monkeypatch.setenv("CIP_BUDGET", "18")
    _, out = run_cli(["plan", "--dims", "896x896", "--budget", "32"])
    assert json.loads(out)["budget"] == 32


def test_bad_env_value_exits_2(monkeypatch, capsys):
    monkeypatch.setenv("CIP_BUDGET", "lots")
    assert main(["plan", "--dims", "896x896"]) == 2


# ------------------------------------------------------------------ tile


def test_tile_writes_expected_files(sample_image, tmp_path):
    out_dir = tmp_path / "tiles"
    code, out = run_cli(
        ["tile", "--image", str(sample_image), "--out-dir", str(out_dir), "--json"]
    )
    assert code == 0
    summary = json.loads(out)
    pngs = list(out_dir.glob("*.png"))
    assert len(pngs) == summary["tiles"]
    assert (out_dir / "plan.json").exists()


def test_tile_rerun_and_threads_byte_identical(sample_image, tmp_path):
    dirs = [tmp_path / name for name in ("a", "b", "c")]
    for out_dir, threads in zip(dirs, ("1", "1", "8")):
        code, _ = run_cli(
            ["tile", "--image", str(sample_image), "--out-dir", str(out_dir), "--threads", threads]
        )
        assert code == 0
    names = sorted(p.name for p in dirs[0].iterdir())
    for other in dirs[1:]:
        assert sorted(p.name for p in other.iterdir()) == names
        for name in names:
            assert (dirs[0] / name).read_bytes() == (other / name).read_bytes()


# ---------------------------------------------------------------- encode


def test_encode_writes_cipt_tensors(sample_image, tmp_path):
    out_dir = tmp_path / "enc"
    code, out = run_cli(
        [
            "encode", "--image", str(sample_image), "--prompt", "what is this",
            "--out-dir", str(out_dir), "--channels", "16", "--seed", "3", "--json",
        ]
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["text"] == 3
    for level in ("detailed", "adaptive", "global", "text"):
        tm = read_cipt(out_dir / f"{level}.cipt")
        assert tm.level == level
        assert tm.length == summary[level]
    plan = json.loads((out_dir / "plan.json").read_text())
    assert summary["detailed"] == plan["levels"][0]["grid"]["rows"] * plan["levels"][0]["grid"]["cols"] * 256


# -------------------------------------------------------------- compress


def test_compress_end_to_end_halves_detailed(sample_image, tmp_path):
    out_dir = tmp_path / "cmp"
    code, out = run_cli(
        [
            "compress", "--image", str(sample_image), "--prompt", "read the sign",
            "--out-dir", str(out_dir), "--drop-ratio", "0.5",
            "--channels", "16", "--seed", "3", "--json",
        ]
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["K"] == round(0.5 * summary["L1"])
    sidecar = json.loads((out_dir / "kept.json").read_text())
    assert sidecar["K"] == summary["K"]
    assert sidecar["kept_indices"] == sorted(sidecar["kept_indices"])
    compressed = read_cipt(out_dir / "compressed.cipt")
    assert compressed.length == summary["K"]
    assembled = read_cipt(out_dir / "llm_input.cipt")
    assert assembled.length == summary["llm_input_length"]


def test_compress_drop_zero_identity(sample_image, tmp_path):
    out_dir = tmp_path / "cmp0"
    code, out = run_cli(
        [
            "compress", "--image", str(sample_image), "--prompt", "hi there",
            "--out-dir", str(out_dir), "--drop-ratio", "0",
            "--channels", "16", "--seed", "3", "--json",
        ]
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["K"] == summary["L1"]


def test_compress_from_tensor_dir(sample_image, tmp_path):
    enc_dir = tmp_path / "enc"
    run_cli(
        [
            "encode", "--image", str(sample_image), "--prompt", "what is this",
            "--out-dir", str(enc_dir), "--channels", "16", "--seed", "3",
        ]
    )
    out_dir = tmp_path / "cmp"
    code, out = run_cli(
        [
            "compress", "--tensors-dir", str(enc_dir), "--out-dir", str(out_dir),
            "--drop-ratio", "0.9", "--json",
        ]
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["K"] == max(1, round(0.1 * summary["L1"]))
    tail = sum(read_cipt(enc_dir / f"{lv}.cipt").length for lv in ("adaptive", "global", "text"))
    assert summary["llm_input_length"] == summary["K"] + tail


def test_compress_missing_inputs_exits_2(tmp_path, capsys):
    assert main(["compress", "--out-dir", str(tmp_path)]) == 2


def test_compress_malformed_cipt_exits_2(tmp_path, capsys):
    bad = tmp_path / "tensors"
    bad.mkdir()
    for level in ("detailed", "adaptive", "global", "text"):
        (bad / f"{level}.cipt").write_bytes(b"JUNKJUNKJUNKJUNKJUNK")
    assert main(["compress", "--tensors-dir", str(bad), "--out-dir", str(tmp_path / "o")]) == 2


def test_compress_deterministic_across_runs(sample_image, tmp_path):
    outs = []
    for name in ("r1", "r2"):
        out_dir = tmp_path / name
        code, out = run_cli(
            [
                "compress", "--image", str(sample_image), "--prompt", "same run",
                "--out-dir", str(out_dir), "--channels", "16", "--seed", "9", "--json",
            ]
        )
        assert code == 0
        outs.append((out, (out_dir / "compressed.cipt").read_bytes(), (out_dir / "kept.json").read_bytes()))
    assert outs[0] == outs[1]


# --------------------------------------------------------------- analyze


def test_analyze_reports_and_reproducibility(tmp_path):
    args = [
        "analyze", "--canvas", "4480x4480", "--objects", "50", "--size-range", "20:60",
        "--seed", "11", "--strategies", "cip,dynamic", "--json",
    ]
    runs = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        code, out = run_cli(args + ["--out-dir", str(out_dir)])
        assert code == 0
        runs.append((out, (out_dir / "report.json").read_bytes(), (out_dir / "report.csv").read_bytes()))
    assert runs[0] == runs[1]
    doc = json.loads(runs[0][0])
    cip_stats = [s for s in doc["strategies"] if s["strategy"] == "cip"][0]
    dyn = [s for s in doc["strategies"] if s["strategy"] == "dynamic"][0]
    assert cip_stats["cut_rate"]["value"] <= dyn["cut_rate"]["value"]


def test_analyze_threads_identical(tmp_path):
    outs = []
    for threads in ("1", "8"):
        out_dir = tmp_path / f"t{threads}"
        code, out = run_cli(
            [
                "analyze", "--canvas", "3000x2000", "--objects", "40",
                "--size-range", "10:80", "--seed", "2", "--strategies",
                "cip,overlapping", "--threads", threads, "--out-dir", str(out_dir), "--json",
            ]
        )
        assert code == 0
        outs.append((out, (out_dir / "report.json").read_bytes()))
    assert outs[0] == outs[1]


# ---------------------------------------------------------------- report


def test_report_budget_curves(tmp_path):
    out_dir = tmp_path / "curves"
    code, out = run_cli(
        [
            "report", "--canvas", "4480x4480", "--objects", "30", "--seed", "4",
            "--budgets", "18,24", "--strategies", "cip,dynamic",
            "--out-dir", str(out_dir), "--json",
        ]
    )
    assert code == 0
    rows = json.loads(out)
    assert len(rows) == 4
    assert (out_dir / "curves.dat").exists()
    assert (out_dir / "curves.json").exists()


# ------------------------------------------------------------ subprocess


def test_console_entry_two_processes_identical():
    cmd = [sys.executable, "-m", "cip.cli", "plan", "--dims", "1931x1217", "--budget", "24"]
    a = subprocess.run(cmd, capture_output=True, timeout=300)
    b = subprocess.run(cmd, capture_output=True, timeout=300)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout
    assert json.loads(a.stdout)["strategy"] == "cip"
