import json

import numpy as np
import pytest

from evosq.cli import SCENARIOS, main
from evosq.io import read_matrix

SMALL = ["--override", "N=16", "--override", "M=16"]


def _run(tmp_path, scenario, *extra, sub="out"):
    out = tmp_path / sub
    code = main([scenario, "--out", str(out), *extra])
    summary = None
    if (out / "summary.json").exists():
        summary = json.loads((out / "summary.json").read_text())
    return code, out, summary


def test_scenario_list_is_stable():
    assert SCENARIOS == (
        "dn-compute",
        "riccati-check",
        "evolve-check",
        "kernel-check",
        "bvp-headline",
        "layer-strip",
        "null-test",
        "oducp-probe",
        "conformal-check",
        "exhaustion",
        "global-march",
        "convergence-study",
    )


def test_dn_compute_pass_and_artifacts(tmp_path):
    code, out, summary = _run(tmp_path, "dn-compute", *SMALL)
    assert code == 0
    assert summary["passed"] is True
    assert set(summary) == {"scenario", "config", "results", "passed"}
    assert summary["scenario"] == "dn-compute"
    for tag in ("boundary", "collar"):
        arr, side = read_matrix(out / f"lam_{tag}.evsq")
        assert arr.shape == (16, 16)
        assert side["geometry_hash"] == summary["results"]["geometry_hash"]
        assert side["kind"] == "slice-map"


def test_summary_is_deterministic(tmp_path):
    code1, out1, _ = _run(tmp_path, "bvp-headline", *SMALL, sub="a")
    code2, out2, _ = _run(tmp_path, "bvp-headline", *SMALL, sub="b")
    assert code1 == code2 == 0
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
    assert (out1 / "recovered_difference.evsq").read_bytes() == (
        out2 / "recovered_difference.evsq"
    ).read_bytes()


def test_config_file_and_override_layering(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 16, "M": 16, "tol": 1e-2}))
    code, out, summary = _run(
        tmp_path, "riccati-check", "--config", str(cfg), "--override", "tol=0.5"
    )
    assert code == 0
    assert summary["config"]["tol"] == 0.5
    assert summary["config"]["N"] == 16


def test_dotted_override_reaches_nested_values(tmp_path):
    code, out, summary = _run(
        tmp_path,
        "bvp-headline",
        *SMALL,
        "--override",
        "q1.amplitude=1.0",
        "--override",
        "q1.kind=bump",
    )
    assert code == 0
    assert summary["config"]["q1"]["amplitude"] == 1.0


def test_failing_check_exits_one(tmp_path):
    code, out, summary = _run(tmp_path, "riccati-check", *SMALL, "--override", "tol=1e-30")
    assert code == 1
    assert summary["passed"] is False


def test_unknown_key_exits_two(tmp_path):
    code, out, summary = _run(tmp_path, "dn-compute", "--override", "wibble=3")
    assert code == 2
    assert summary is None


def test_bad_config_file_exits_two(tmp_path):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    assert main(["dn-compute", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert main(["dn-compute", "--config", str(tmp_path / "missing.json")]) == 2


def test_invalid_geometry_exits_two(tmp_path):
    code, _, _ = _run(tmp_path, "dn-compute", "--override", "N=7")
    assert code == 2
    code, _, _ = _run(tmp_path, "dn-compute", "--override", "geometry=torus")
    assert code == 2


def test_malformed_potential_exits_two(tmp_path):
    # an unquoted override value falls back to a raw string
    code, _, _ = _run(tmp_path, "dn-compute", "--override", "q1=constant")
    assert code == 2


def test_numerical_failure_exits_three(tmp_path):
    # resonant constant potential: the elimination pivot goes singular
    T, eps, M, N = 0.8, 0.4, 32, 16
    h = eps / M
    K = M + 1 + round((T - eps) / h)
    q_res = -(2.0 / h**2) * (1.0 - np.cos(np.pi / (K - 1)))
    code, out, summary = _run(
        tmp_path,
        "dn-compute",
        "--override",
        "geometry=flat-cylinder",
        "--override",
        f"T={T}",
        "--override",
        f"eps={eps}",
        "--override",
        f"M={M}",
        "--override",
        f"N={N}",
        "--override",
        f'q1={{"kind": "constant", "value": {q_res}}}',
    )
    assert code == 3
    assert summary is None


def test_null_scenario(tmp_path):
    code, out, summary = _run(tmp_path, "null-test", *SMALL)
    assert code == 0
    assert summary["results"]["max_abs"] == 0.0


def test_probe_scenario_writes_shells(tmp_path):
    code, out, summary = _run(tmp_path, "oducp-probe", *SMALL, "--override", "N=32")
    assert code == 0
    assert summary["results"]["flag"] is True
    lines = (out / "shells.csv").read_text().strip().splitlines()
    assert lines[0] == "shell_lo,shell_hi,mass"
    assert len(lines) == 1 + 3  # N=32 resolves three shells


def test_kernel_scenario(tmp_path):
    code, out, summary = _run(
        tmp_path, "kernel-check", *SMALL, "--override", "M=32", "--override", "tol=0.05"
    )
    assert code == 0
    res = summary["results"]["residuals"]
    assert res["expanded-single"] > res["factorized"]


def test_layer_strip_scenario(tmp_path):
    code, out, summary = _run(tmp_path, "layer-strip", *SMALL, "--override", "M=32")
    assert code == 0
    assert summary["results"]["rel_gap"] <= summary["results"]["tol"]


def test_conformal_scenario(tmp_path):
    code, out, summary = _run(
        tmp_path,
        "conformal-check",
        *SMALL,
        "--override",
        "geometry=flat-cylinder",
        "--override",
        "T=0.9",
        "--override",
        "M=64",
        "--override",
        'gamma={"kind": "exp", "rate": 2.0}',
    )
    assert code == 0
    assert summary["results"]["max_rel_error"] <= summary["results"]["tol"]


def test_exhaustion_scenario(tmp_path):
    code, out, summary = _run(
        tmp_path,
        "exhaustion",
        "--override",
        "mesh_kind=annulus",
        "--override",
        "mesh_params=[6, 24]",
    )
    assert code == 0
    assert summary["results"]["collisions"] == 0
    assert summary["results"]["triangles"] == 2 * 6 * 24


def test_exhaustion_rejects_closed_mesh(tmp_path):
    code, out, summary = _run(
        tmp_path, "exhaustion", "--override", "mesh_kind=sphere", "--override", "mesh_params=[1]"
    )
    assert code == 3


def test_exhaustion_reads_off_file(tmp_path):
    from evosq.meshes import save_off, strip_mesh

    p = tmp_path / "strip.off"
    save_off(p, strip_mesh(4, 3))
    code, out, summary = _run(tmp_path, "exhaustion", "--override", f"mesh={p}")
    assert code == 0
    assert summary["results"]["triangles"] == 24


def test_global_march_reaches_cap(tmp_path):
    code, out, summary = _run(
        tmp_path,
        "global-march",
        *SMALL,
        "--override",
        "geometry=flat-cylinder",
        "--override",
        "T=1.0",
    )
    assert code == 0
    res = summary["results"]
    assert res["cap_reached"] is True
    assert len(res["windows"]) >= 2
    assert all(w["passed"] for w in res["windows"])
    # windows tile the depth without gaps
    for w, nxt in zip(res["windows"], res["windows"][1:]):
        assert nxt["start"] == pytest.approx(w["end"])


def test_convergence_study_writes_rates(tmp_path):
    code, out, summary = _run(
        tmp_path,
        "convergence-study",
        "--override",
        "levels=[[16, 16], [16, 32], [16, 64]]",
        "--override",
        "quantity=evolve",
    )
    assert code == 0
    assert summary["results"]["rate"] >= summary["results"]["rate_min"]
    lines = (out / "rates.csv").read_text().strip().splitlines()
    assert lines[0] == "level,N,M,error"
    assert len(lines) == 4
