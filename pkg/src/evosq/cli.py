"""Command line driver: ``evosq <scenario> --config <path> [--out <dir>] [--override k=v]...``

Scenarios bundle the library's checks into reproducible runs. Every run
writes a canonical ``summary.json`` (sorted keys, no timestamps; repeat runs
are byte-identical) plus scenario-specific artifacts under the output
directory.

Exit codes: 0 all checks passed; 1 a check failed; 2 configuration error
(unknown key, bad value, malformed config file); 3 numerical failure
(singular pivot, escaped integration, non-convergent implicit step, bad
input data files).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io as evsq_io
from .errors import (
    ConfigError,
    DNComputationError,
    FormatError,
    GeometryError,
    MeshError,
    RiccatiEscapeError,
    StepFailureError,
)
from .geometry import build_warped_geometry, make_profile
from .potentials import make_potential
from .rng import SplitMix64

SCENARIOS = (
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

_COMMON_KEYS = {"geometry", "rho", "T", "N", "M", "eps", "dim"}
_ALLOWED = {
    "dn-compute": _COMMON_KEYS | {"q1", "save_family", "sym_tol"},
    "riccati-check": _COMMON_KEYS | {"q1", "tol"},
    "evolve-check": _COMMON_KEYS | {"q1", "boundary_data", "tol"},
    "kernel-check": _COMMON_KEYS | {"q1", "q2", "boundary_data", "boundary_data2", "tol", "single_floor"},
    "bvp-headline": _COMMON_KEYS | {"q1", "q2", "tol"},
    "layer-strip": _COMMON_KEYS | {"q1", "q2", "boundary_data", "boundary_data2", "tol"},
    "null-test": _COMMON_KEYS | {"q1", "tol_factor"},
    "oducp-probe": _COMMON_KEYS | {"q1", "q2", "threshold", "ambient_dim", "expect_flag"},
    "conformal-check": _COMMON_KEYS | {"gamma", "n_ambient", "modes_max", "tol"},
    "exhaustion": {"mesh", "mesh_kind", "mesh_params", "samples_per_cell", "time_budget"},
    "global-march": _COMMON_KEYS | {"q1", "q2", "tol", "max_windows"},
    "convergence-study": _COMMON_KEYS | {"q1", "q2", "quantity", "levels", "rate_min"},
}

_DEFAULT_Q1 = {"kind": "bump", "amplitude": 3.0, "theta0": 1.0, "t0": 0.1, "width": 0.4}
_DEFAULT_Q2 = {"kind": "bump", "amplitude": -2.0, "theta0": 4.0, "t0": 0.15, "width": 0.35}


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _apply_override(cfg, spec):
    if "=" not in spec:
        raise ConfigError(f"override {spec!r} is not of the form key=value")
    key, raw = spec.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {key!r} crosses a non-object value")
    node[parts[-1]] = value


def _check_keys(scenario, cfg):
    allowed = _ALLOWED[scenario]
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown config keys for {scenario}: {', '.join(unknown)} "
            f"(allowed: {', '.join(sorted(allowed))})"
        )


def _build_geometry(cfg):
    name = cfg.get("geometry", "annulus")
    if name == "annulus":
        profile = make_profile("annulus", rho=cfg.get("rho", 0.25))
    elif name == "disk":
        profile = make_profile("disk")
    elif name == "flat-cylinder":
        profile = make_profile("flat-cylinder", T=cfg.get("T", 1.0))
    else:
        raise ConfigError(f"unknown geometry {name!r}")
    return build_warped_geometry(
        profile,
        N=int(cfg.get("N", 32)),
        M=int(cfg.get("M", 64)),
        eps=float(cfg.get("eps", 0.3)),
        dim=int(cfg.get("dim", 1)),
    )


def _boundary_data(geometry, spec):
    spec = spec or {"kind": "mode", "k": 1, "offset": 0.3}
    kind = spec.get("kind", "mode")
    if kind == "mode":
        k = int(spec.get("k", 1))
        return np.cos(k * geometry.theta + float(spec.get("phase", 0.0))) + float(
            spec.get("offset", 0.0)
        )
    if kind == "random":
        rng = SplitMix64(int(spec.get("seed", 0)))
        return np.asarray(rng.normals(geometry.N))
    raise ConfigError(f"unknown boundary data kind {kind!r}")


def _gamma_callable(spec):
    spec = spec or {"kind": "exp", "rate": 1.0}
    kind = spec.get("kind", "exp")
    if kind == "exp":
        rate = float(spec.get("rate", 1.0))
        return lambda t: np.exp(rate * np.asarray(t, dtype=float))
    if kind == "poly":
        coeffs = list(spec.get("coeffs", [1.0, 0.5]))
        return lambda t: np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), coeffs)
    raise ConfigError(f"unknown conformal factor kind {kind!r}")


def _to_py(obj):
    if isinstance(obj, dict):
        return {str(k): _to_py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_py(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


# ---------------------------------------------------------------------------
# scenario runners (each returns (results, passed))
# ---------------------------------------------------------------------------


def _run_dn_compute(cfg, out):
    from .dnmap import compute_dn_family

    g = _build_geometry(cfg)
    fam = compute_dn_family(g, cfg.get("q1", _DEFAULT_Q1))
    sym_tol = float(cfg.get("sym_tol", 1e-8))
    defect = max(
        float(np.linalg.norm(L - L.T) / max(np.linalg.norm(L), 1e-30)) for L in fam.lams
    )
    eig0 = np.linalg.eigvalsh(fam.lams[0])
    if cfg.get("save_family", True):
        for tag, j in (("boundary", 0), ("collar", g.M)):
            evsq_io.write_matrix(
                os.path.join(out, f"lam_{tag}.evsq"),
                fam.lams[j],
                {
                    "kind": "slice-map",
                    "t": float(g.collar_ts[j]),
                    "N": g.N,
                    "M": g.M,
                    "geometry_hash": g.hash(),
                    "provenance": "evosq-cli/dn-compute",
                },
            )
    results = {
        "geometry_hash": g.hash(),
        "depths": int(g.M + 1),
        "symmetry_defect": defect,
        "eig_min": float(eig0.min()),
        "eig_max": float(eig0.max()),
    }
    return results, defect <= sym_tol


def _run_riccati(cfg, out):
    from .dnmap import compute_dn_family, riccati_integrate, riccati_residual

    g = _build_geometry(cfg)
    fam = compute_dn_family(g, cfg.get("q1", _DEFAULT_Q1))
    road = riccati_integrate(g, fam.potential, fam.lams[g.M])
    err = float(
        np.linalg.norm(road[0] - fam.lams[0]) / max(np.linalg.norm(fam.lams[0]), 1e-30)
    )
    tol = float(cfg.get("tol", 1e-2))
    results = {
        "cross_error": err,
        "residual": float(riccati_residual(fam)),
        "tol": tol,
    }
    return results, err <= tol


def _run_evolve(cfg, out):
    from .dnmap import compute_dn_family, solve_interior
    from .evolution import evolve_trace

    g = _build_geometry(cfg)
    fam = compute_dn_family(g, cfg.get("q1", _DEFAULT_Q1), keep_chain=True)
    f = _boundary_data(g, cfg.get("boundary_data"))
    u_flow = evolve_trace(fam, f)
    u_int = solve_interior(g, fam.potential, f, chain=fam._chain).values[: g.M + 1]
    err = float(np.max(np.abs(u_flow - u_int)) / max(np.max(np.abs(u_int)), 1e-30))
    tol = float(cfg.get("tol", 1e-2))
    return {"sup_error": err, "tol": tol}, err <= tol


def _run_kernel(cfg, out):
    from .dnmap import compute_dn_family
    from .evolution import PairOperator, evolved_rank_one
    from .squared import kernel_residual

    g = _build_geometry(cfg)
    fam1 = compute_dn_family(g, cfg.get("q1", _DEFAULT_Q1))
    fam2 = compute_dn_family(g, cfg.get("q2", _DEFAULT_Q2))
    f1 = _boundary_data(g, cfg.get("boundary_data"))
    f2 = _boundary_data(g, cfg.get("boundary_data2", {"kind": "mode", "k": 2, "offset": 0.1}))
    W = evolved_rank_one(fam1, fam2, f1, f2)
    pair = PairOperator(fam1, fam2)
    tol = float(cfg.get("tol", 1e-3))
    floor = float(cfg.get("single_floor", 0.05))
    res = {v: kernel_residual(pair, W, v)["max_rel"] for v in
           ("factorized", "expanded-double", "expanded-single")}
    passed = (
        res["factorized"] <= tol
        and res["expanded-double"] <= tol
        and res["expanded-single"] >= floor
    )
    results = {"residuals": res, "tol": tol, "single_floor": floor}
    return results, passed


def _run_headline(cfg, out):
    from .dnmap import compute_dn_family
    from .source_bvp import dn_recovery_check

    g = _build_geometry(cfg)
    fam1 = compute_dn_family(g, cfg.get("q1", _DEFAULT_Q1))
    fam2 = compute_dn_family(g, cfg.get("q2", _DEFAULT_Q2))
    check = dn_recovery_check(fam1, fam2)
    tol = float(cfg.get("tol", 5e-2))
    evsq_io.write_matrix(
        os.path.join(out, "recovered_difference.evsq"),
        check["recovered"],
        {
            "kind": "recovered-difference",
            "t": 0.0,
            "N": g.N,
            "M": g.M,
            "geometry_hash": g.hash(),
            "provenance": "evosq-cli/bvp-headline",
        },
    )
    results = {
        "rel_error": check["rel_error"],
        "sign": check["sign"],
        "tol": tol,
    }
    return results, check["rel_error"] <= tol and check["sign"] == 1


def _run_layer_strip(cfg, out):
    from .dnmap import compute_dn_family
    from .source_bvp import layer_strip_check

    g = _build_geometry(cfg)
    fam1 = compute_dn_family(g, cfg.get("q1", _DEFAULT_Q1))
    fam2 = compute_dn_family(g, cfg.get("q2", _DEFAULT_Q2))
    f1 = _boundary_data(g, cfg.get("boundary_data"))
    f2 = _boundary_data(g, cfg.get("boundary_data2", {"kind": "mode", "k": 2, "offset": 0.1}))
    check = layer_strip_check(fam1, fam2, f1, f2)
    tol = float(cfg.get("tol", 1e-3))
    results = {k: check[k] for k in ("lhs", "rhs", "volume_term", "deep_term", "rel_gap")}
    results["tol"] = tol
    return results, check["rel_gap"] <= tol


def _run_null(cfg, out):
    from .dnmap import compute_dn_family
    from .probes import null_test

    g = _build_geometry(cfg)
    q1 = cfg.get("q1", _DEFAULT_Q1)
    fam1 = compute_dn_family(g, q1)
    fam2 = compute_dn_family(g, q1)
    res = null_test(fam1, fam2)
    return {k: res[k] for k in ("max_abs", "scale", "passed")}, bool(res["passed"])


def _run_probe(cfg, out):
    from .dnmap import compute_dn_family
    from .probes import gradient_blowup_probe, offdiagonal_flag, shell_decomposition, zeta_pairing
    from .source_bvp import dn_recovery_check

    g = _build_geometry(cfg)
    fam1 = compute_dn_family(g, cfg.get("q1", _DEFAULT_Q1))
    fam2 = compute_dn_family(g, cfg.get("q2", _DEFAULT_Q2))
    check = dn_recovery_check(fam1, fam2)
    kernel = check["recovered"] / g.node_weight(0.0)
    flag = offdiagonal_flag(g, kernel, threshold=float(cfg.get("threshold", 1e-6)))
    prof = flag["profile"]
    _write_csv(
        os.path.join(out, "shells.csv"),
        ("shell_lo", "shell_hi", "mass"),
        [(lo, hi, m) for (lo, hi), m in zip(prof["edges"], prof["masses"].tolist())],
    )
    results = {
        "flag": bool(flag["flag"]),
        "far_mass": flag["far_mass"],
        "total_mass": flag["total"],
        "partition_defect": prof["partition_defect"],
        "headline_error": check["rel_error"],
        "zeta": zeta_pairing(g, kernel),
        "p_critical": float(cfg.get("ambient_dim", 3)) / (float(cfg.get("ambient_dim", 3)) - 1.0),
    }
    if g.N >= 64:
        grad = gradient_blowup_probe(
            g, check["stages"]["phi"], ambient_dim=int(cfg.get("ambient_dim", 3))
        )
        results["gradient_slope"] = grad["slope"]
    else:
        results["gradient_slope"] = None
    expect = bool(cfg.get("expect_flag", True))
    return results, bool(flag["flag"]) == expect


def _run_conformal(cfg, out):
    from .dnmap import conformal_identity_check

    g = _build_geometry(cfg)
    gamma = _gamma_callable(cfg.get("gamma"))
    n_amb = int(cfg.get("n_ambient", 3))
    kmax = int(cfg.get("modes_max", 8))
    if g.dim == 1:
        modes = list(range(kmax + 1))
    else:
        modes = [
            (k1, k2)
            for k1 in range(kmax + 1)
            for k2 in range(k1, kmax + 1)
            if k1 * k1 + k2 * k2 <= kmax * kmax
        ]
    res = conformal_identity_check(g, gamma, n_amb, modes)
    tol = float(cfg.get("tol", 1e-3))
    results = {
        "max_rel_error": res["max_rel_error"],
        "modes_checked": len(modes),
        "tol": tol,
    }
    return results, res["max_rel_error"] <= tol


def _run_exhaustion(cfg, out):
    import time

    from .exhaustion import collar_map_samples, exhaustion_order, load_mesh, verify_order
    from . import meshes

    if "mesh" in cfg:
        mesh = load_mesh(cfg["mesh"])
    else:
        kind = cfg.get("mesh_kind", "annulus")
        params = cfg.get("mesh_params", [50, 100])
        maker = {
            "annulus": meshes.annulus_mesh,
            "disk": meshes.disk_mesh,
            "strip": meshes.strip_mesh,
            "sphere": meshes.sphere_mesh,
        }.get(kind)
        if maker is None:
            raise ConfigError(f"unknown mesh kind {kind!r}")
        mesh = maker(*params)
    budget = float(cfg.get("time_budget", 5.0))
    t0 = time.perf_counter()
    order, certs = exhaustion_order(mesh)
    verify_order(mesh, order, certs)
    elapsed = time.perf_counter() - t0
    stats = collar_map_samples(mesh, order, certs, samples_per_cell=int(cfg.get("samples_per_cell", 4)))
    results = {
        "triangles": mesh.n_triangles,
        "order_seconds": elapsed,
        "collisions": stats["collisions"],
        "min_new_samples": stats["min_new_samples"],
        "growth_steps": stats["growth_steps"],
    }
    passed = elapsed <= budget and stats["collisions"] == 0
    return results, passed


def _run_march(cfg, out):
    from .dnmap import compute_dn_family
    from .probes import null_test
    from .source_bvp import dn_recovery_check

    base_cfg = dict(cfg)
    name = base_cfg.get("geometry", "annulus")
    if name == "annulus":
        profile = make_profile("annulus", rho=base_cfg.get("rho", 0.25))
    elif name == "disk":
        profile = make_profile("disk")
    elif name == "flat-cylinder":
        profile = make_profile("flat-cylinder", T=base_cfg.get("T", 1.0))
    else:
        raise ConfigError(f"unknown geometry {name!r}")
    N = int(cfg.get("N", 32))
    M = int(cfg.get("M", 64))
    eps = float(cfg.get("eps", 0.3))
    q1 = make_potential(cfg.get("q1", {"kind": "constant", "value": 1.5}))
    q2 = make_potential(cfg.get("q2", {"kind": "zero"}))
    tol = float(cfg.get("tol", 5e-2))
    max_windows = int(cfg.get("max_windows", 16))

    windows = []
    depth = 0.0
    passed = True
    h = eps / M
    while len(windows) < max_windows and profile.T - depth - eps > 2.0 * h:
        prof_w = profile.shifted(depth) if depth else profile
        g = build_warped_geometry(prof_w, N=N, M=M, eps=eps, dim=int(cfg.get("dim", 1)))
        fam1 = compute_dn_family(g, q1.shifted(depth) if depth else q1)
        fam2 = compute_dn_family(g, q2.shifted(depth) if depth else q2)
        check = dn_recovery_check(fam1, fam2)
        nul = null_test(fam1, compute_dn_family(g, q1.shifted(depth) if depth else q1))
        ok = check["rel_error"] <= tol and check["sign"] == 1 and nul["passed"]
        windows.append(
            {
                "start": depth,
                "end": depth + eps,
                "rel_error": check["rel_error"],
                "sign": check["sign"],
                "null_ok": bool(nul["passed"]),
                "passed": bool(ok),
            }
        )
        if not ok:
            passed = False
            break
        depth += eps

    last = windows[-1]["end"] if windows and windows[-1]["passed"] else (
        windows[-2]["end"] if len(windows) > 1 else 0.0
    )
    cap_reached = profile.T - last <= eps + 1e-12
    results = {
        "windows": windows,
        "last_verified_depth": last,
        "cap_depth": profile.T,
        "cap_reached": bool(cap_reached),
    }
    return results, passed and bool(windows)


def _run_convergence(cfg, out):
    from .dnmap import compute_dn_family, riccati_integrate, solve_interior
    from .evolution import evolve_trace
    from .source_bvp import dn_recovery_check

    quantity = cfg.get("quantity", "headline")
    levels = cfg.get("levels", [[32, 32], [32, 64], [32, 128]])
    rate_min = float(cfg.get("rate_min", 1.5))
    q1 = cfg.get("q1", _DEFAULT_Q1)
    q2 = cfg.get("q2", _DEFAULT_Q2)
    errors = []
    for N, M in levels:
        lvl_cfg = dict(cfg)
        lvl_cfg["N"], lvl_cfg["M"] = int(N), int(M)
        g = _build_geometry(lvl_cfg)
        if quantity == "headline":
            fam1 = compute_dn_family(g, q1)
            fam2 = compute_dn_family(g, q2)
            err = dn_recovery_check(fam1, fam2)["rel_error"]
        elif quantity == "riccati":
            fam = compute_dn_family(g, q1)
            road = riccati_integrate(g, fam.potential, fam.lams[g.M])
            err = float(
                np.linalg.norm(road[0] - fam.lams[0]) / max(np.linalg.norm(fam.lams[0]), 1e-30)
            )
        elif quantity == "evolve":
            fam = compute_dn_family(g, q1, keep_chain=True)
            f = _boundary_data(g, cfg.get("boundary_data") if "boundary_data" in cfg else None)
            u_flow = evolve_trace(fam, f)
            u_int = solve_interior(g, fam.potential, f, chain=fam._chain).values[: g.M + 1]
            err = float(np.max(np.abs(u_flow - u_int)) / max(np.max(np.abs(u_int)), 1e-30))
        else:
            raise ConfigError(f"unknown convergence quantity {quantity!r}")
        errors.append(err)

    idx = np.arange(len(errors), dtype=float)
    logs = np.log2(np.maximum(errors, 1e-300))
    slope = float(np.polyfit(idx, logs, 1)[0]) if len(errors) > 1 else 0.0
    rate = -slope
    _write_csv(
        os.path.join(out, "rates.csv"),
        ("level", "N", "M", "error"),
        [(i, int(l[0]), int(l[1]), e) for i, (l, e) in enumerate(zip(levels, errors))],
    )
    results = {
        "quantity": quantity,
        "errors": errors,
        "rate": rate,
        "rate_min": rate_min,
        "levels": [[int(a), int(b)] for a, b in levels],
    }
    return results, rate >= rate_min


_RUNNERS = {
    "dn-compute": _run_dn_compute,
    "riccati-check": _run_riccati,
    "evolve-check": _run_evolve,
    "kernel-check": _run_kernel,
    "bvp-headline": _run_headline,
    "layer-strip": _run_layer_strip,
    "null-test": _run_null,
    "oducp-probe": _run_probe,
    "conformal-check": _run_conformal,
    "exhaustion": _run_exhaustion,
    "global-march": _run_march,
    "convergence-study": _run_convergence,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="evosq",
        description="Depth-indexed boundary map laboratory on warped collars.",
    )
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default="evosq-out", help="output directory")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry (value parsed as JSON, dotted paths allowed)",
    )
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.config)
        for spec in args.override:
            _apply_override(cfg, spec)
        _check_keys(args.scenario, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    try:
        results, passed = _RUNNERS[args.scenario](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DNComputationError, RiccatiEscapeError, StepFailureError, MeshError, FormatError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    summary = {
        "scenario": args.scenario,
        "config": _to_py(cfg),
        "results": _to_py(results),
        "passed": bool(passed),
    }
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        fh.write(evsq_io.dump_json(summary))
    status = "PASS" if passed else "FAIL"
    print(f"{args.scenario}: {status}")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
