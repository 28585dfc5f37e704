"""Exit-code partition, byte-level determinism and export coverage."""

import json
import os

import pytest

from tritopos.cli import main

SPECS = os.path.join(os.path.dirname(__file__), os.pardir, "modelspecs")

M3_ALG = """\
elements: 0 a b c 1
leq: 0 a
leq: 0 b
leq: 0 c
leq: a 1
leq: b 1
leq: c 1
bottom: 0
top: 1
"""


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_verify_passes_on_builtin(capsys):
    code, out, err = run(capsys, "verify", "--model", "builtin:chain2")
    assert code == 0
    assert "all checks passed" in out
    assert err == ""


def test_verify_refuses_over_budget(capsys):
    code, out, err = run(capsys, "verify", "--max-size", "4", "--budget", "10")
    assert code == 3
    assert "budget exceeded" in err


def test_bad_flags_are_input_errors(capsys, tmp_path):
    for argv in (
        ["pipeline", "--stages", "c,x"],
        ["pipeline", "--stages", "q"],
        ["pipeline", "--stages", "c,topos"],
        ["verify", "--max-size", "0"],
        ["verify", "--model", "builtin:nosuch"],
    ):
        code, out, err = run(capsys, *argv, "--out", str(tmp_path / "o"))
        assert code == 2, argv
        assert "input error" in err


def test_corrupt_algebra_document(capsys, tmp_path):
    # three incomparable middles have no meet, so no implication either
    (tmp_path / "m3.alg").write_text(M3_ALG)
    (tmp_path / "m3.json").write_text(
        json.dumps({"name": "m3", "kind": "h-valued", "algebra": {"path": "m3.alg"}})
    )
    code, out, err = run(capsys, "verify", "--model", str(tmp_path / "m3.json"))
    assert code == 2
    assert "not residuated" in err


def test_pre_collapse_pipeline_fails_readiness(capsys, tmp_path):
    out_dir = tmp_path / "o"
    code, out, err = run(
        capsys, "pipeline", "--model", "builtin:chain2", "--stages", "c,q",
        "--out", str(out_dir),
    )
    assert code == 1
    assert "CHECKS FAILED" in out
    assert (out_dir / "trace.json").exists()


def test_export_needs_a_trace(capsys, tmp_path):
    code, out, err = run(capsys, "export", "--out", str(tmp_path / "empty"))
    assert code == 2
    assert "pipeline command first" in err


def test_structured_pipeline_report(capsys, tmp_path):
    code, out, err = run(
        capsys, "pipeline", "--model", "builtin:chain2", "--stages", "c",
        "--max-size", "1", "--out", str(tmp_path / "o"), "--format", "structured",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["command"] == "pipeline"
    assert doc["reports"] and all(r["ok"] for r in doc["reports"])


def test_pinned_document_seeds(capsys, tmp_path):
    spec = os.path.join(SPECS, "diamond.json")
    code, out, err = run(
        capsys, "verify", "--model", spec, "--out", str(tmp_path / "o")
    )
    assert code == 0
    assert "model: diamond" in out
    # the size filter applies to pinned seeds too
    code, out, err = run(
        capsys, "verify", "--model", spec, "--max-size", "1",
        "--out", str(tmp_path / "o"),
    )
    assert code == 0
    assert "objects: 1" in out


def test_full_run_is_byte_deterministic(capsys, tmp_path):
    texts = {}
    for tag in ("one", "two"):
        out_dir = tmp_path / tag
        code, _, _ = run(
            capsys, "pipeline", "--model", "builtin:chain2",
            "--out", str(out_dir),
        )
        assert code == 0
        code, _, _ = run(capsys, "export", "--out", str(out_dir))
        assert code == 0
        for name in ("trace.json", "census.csv", "homs.csv", "fragment.dot",
                     "report.json"):
            texts.setdefault(name, []).append((out_dir / name).read_bytes())
        for name in ("census.png", "hom_growth.png"):
            assert (out_dir / name).stat().st_size > 0
    for name, pair in texts.items():
        assert pair[0] == pair[1], name


def test_exported_census_matches_trace(capsys, tmp_path):
    out_dir = tmp_path / "o"
    code, _, _ = run(
        capsys, "pipeline", "--model", "builtin:chain2", "--out", str(out_dir)
    )
    assert code == 0
    code, _, _ = run(capsys, "export", "--out", str(out_dir))
    assert code == 0
    trace = json.loads((out_dir / "trace.json").read_text())
    assert trace["topos"]["assembled"] is True
    lines = (out_dir / "census.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + len(trace["census"]["objects"])
    assert lines[0].startswith("object,index,fiber_size,global_points")
    dot = (out_dir / "fragment.dot").read_text()
    assert dot.startswith("digraph fragment {")
    # the boolean 2-point model keeps its hom counts through every stage
    rows = [
        ln.split(",") for ln in (out_dir / "homs.csv").read_text().splitlines()[1:]
    ]
    by_stage = {}
    for st, src, tgt, cnt in rows:
        by_stage.setdefault(st, []).append(int(cnt))
    for kind in ("model", "c", "q", "e", "l"):
        assert sorted(by_stage[kind]) == [1, 1, 2, 4]
