"""Command-line front end.

Every subcommand writes its artifacts into the output directory together with
a ``summary.json`` holding the computed scalars and pass/fail flags.  Floats
are written with 17 significant digits so identical configurations give
byte-identical files.  The thread count for per-node work comes from the
``YAMABE_THREADS`` environment variable.

    yamabe-conc constants --N 7 --output out/constants
    yamabe-conc scaling --geometry circle_constant --version v1
    yamabe-conc construct --config run.json
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .bubble import BubbleFamily, compute_eigenpair, eigenpair_grid, tail_slope
from .config import COMMANDS, ConfigError, RunConfig, config_from_dict, resolve_geometry
from .constants import compute_constants, verify_second_derivative_identity, verify_T1_orthogonality
from .errors import DegeneracyError, PreconditionError, SolverFailure, SpectralFailure
from .manifold import (
    _field_from_spec,
    jacobi_nondegeneracy,
    jacobi_potential,
    load_geometry,
)
from .radial import RadialGrid, radial_integral
from .singular import (
    ATTRACTIVE,
    REPULSIVE,
    SingularProblem,
    integral_identity,
    repulsive_feasibility,
    solve_attractive,
    solve_repulsive,
    spectral_window,
)

SLOPE_WINDOW = (0.85, 1.15)


# ---------------------------------------------------------------------------
# deterministic output


def fmt(x) -> str:
    x = float(x) + 0.0  # no "-0" in the output
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def _json_text(obj, indent=0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_text(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _json_text(v, indent + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> None:
    path.write_text(_json_text(obj) + "\n")


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer)) and not isinstance(v, bool) else fmt(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands; each returns (summary dict, exit status)


def run_constants(cfg: RunConfig, out: Path):
    t0 = time.perf_counter()
    c = compute_constants(cfg.N)
    err = c.relative_errors()
    t1 = verify_T1_orthogonality(cfg.N)
    d2 = verify_second_derivative_identity(cfg.N)
    checks = {
        "ratio_a": abs(err["a"]) <= 1e-6,
        "ratio_b": abs(err["b"]) <= 1e-6,
        "ratio_c2": abs(err["c2"]) <= 1e-6,
        "T1_orthogonality": abs(t1) <= 1e-8 * c.c1,
        "second_derivative_identity": abs(d2 / (-c.C0 / 2) - 1) <= 1e-6,
    }
    header = ["N", "c1", "c2", "c3", "c4", "C0", "ratio_a", "a_N", "ratio_b", "b_N", "ratio_c2", "three_over_N_plus_2",
              "pass_a", "pass_b", "pass_c2"]
    write_csv(out / "constants.csv", header, [[
        cfg.N, c.c1, c.c2, c.c3, c.c4, c.C0, c.ratio_a, c.a_N, c.ratio_b, c.b_N, c.ratio_c2, 3.0 / (cfg.N + 2),
        str(checks["ratio_a"]).lower(), str(checks["ratio_b"]).lower(), str(checks["ratio_c2"]).lower(),
    ]])
    summary = {
        "compute_constants": {"c1": c.c1, "c2": c.c2, "c3": c.c3, "c4": c.c4, "C0": c.C0,
                              "relative_errors": err},
        "verify_T1_orthogonality": t1,
        "verify_second_derivative_identity": d2,
        "checks": checks,
        "elapsed_s": time.perf_counter() - t0,
    }
    return summary, 0


def run_profile(cfg: RunConfig, out: Path):
    b = BubbleFamily(cfg.N)
    grid = RadialGrid(R_out=50.0, M=cfg.M, grading=cfg.grading)
    r = grid.nodes
    w0 = b.w0(r)
    write_csv(out / "profile.csv", ["r", "w0", "dw0", "z0"],
              zip(r, w0, b.dw0(r), b.z0(r)))
    mass = radial_integral(grid, w0 ** (b.p + 1), cfg.N)
    return {"profile": {"alpha_N": b.alpha, "p": b.p, "int_w0_p_plus_1": mass, "R_out": grid.R_out}}, 0


def run_eigenpair(cfg: RunConfig, out: Path):
    t0 = time.perf_counter()
    M = max(cfg.M, 8192)
    lam, Z = compute_eigenpair(eigenpair_grid(cfg.N, M), cfg.N)
    lam2, _ = compute_eigenpair(eigenpair_grid(cfg.N, 2 * M), cfg.N)
    rel = abs(lam2 - lam) / abs(lam2)
    slope = tail_slope(Z, cfg.N)
    norm = radial_integral(Z.grid, Z.values**2, cfg.N)
    write_csv(out / "eigenfunction.csv", ["r", "Z"], zip(Z.grid.nodes, Z.values))
    checks = {
        "positive": lam > 0,
        "normalized": abs(norm - 1) <= 1e-10,
        "two_resolution": rel <= 1e-6,
        "tail_slope": abs(slope / -math.sqrt(lam) - 1) <= 0.05,
    }
    summary = {
        "compute_eigenpair": {"lambda0": lam, "lambda0_2M": lam2, "richardson": lam2 + (lam2 - lam) / 3,
                              "relative_change": rel, "norm": norm, "tail_slope": slope,
                              "minus_sqrt_lambda0": -math.sqrt(lam), "M": M},
        "checks": checks,
        "elapsed_s": time.perf_counter() - t0,
    }
    return summary, 0


def _model(cfg: RunConfig):
    return load_geometry(resolve_geometry(cfg.geometry), N=cfg.N, n=cfg.nodes)


def _coefficient(model, spec, name):
    if spec is None:
        raise ConfigError(f"{name}: required for this command")
    return _field_from_spec(spec, model.coordinates(), model.size, (), name)


def _solution_csv(out, model, u):
    y = model.coordinates()
    header = [f"y{i + 1}" for i in range(model.k)] + ["u"]
    write_csv(out / "solution.csv", header, [list(y[j]) + [u[j]] for j in range(model.size)])


def run_attractive(cfg: RunConfig, out: Path):
    model = _model(cfg)
    prob = SingularProblem(model, _coefficient(model, cfg.alpha, "alpha"), _coefficient(model, cfg.beta, "beta"),
                           ATTRACTIVE)
    sol = solve_attractive(prob, tol=cfg.tol)
    _solution_csv(out, model, sol.u)
    lam_min = float(sol.linearized_eigs[0])
    summary = {
        "solve_attractive": {"residual_norm": sol.residual_norm, "iterations": sol.iterations,
                             "monotone": sol.monotone, "nondegenerate": sol.nondegenerate,
                             "smallest_linearized_eig": lam_min, "min_alpha": float(np.min(prob.alpha)),
                             "u_min": float(np.min(sol.u)), "u_max": float(np.max(sol.u))},
        "integral_identity": integral_identity(prob, sol.u),
        "checks": {"nondegeneracy_bound": lam_min >= float(np.min(prob.alpha)) - 1e-8,
                   "monotone": sol.monotone},
    }
    return summary, 0


def run_repulsive(cfg: RunConfig, out: Path):
    model = _model(cfg)
    prob = SingularProblem(model, _coefficient(model, cfg.alpha, "alpha"), _coefficient(model, cfg.beta, "beta"),
                           REPULSIVE)
    feasible, diag = repulsive_feasibility(prob)
    if not feasible:
        return {"repulsive_feasibility": diag, "status": "failed", "reason": diag["reason"]}, 1
    sol = solve_repulsive(prob, tol=cfg.tol)
    _solution_csv(out, model, sol.u)
    summary = {
        "repulsive_feasibility": diag,
        "solve_repulsive": {"residual_norm": sol.residual_norm, "nondegenerate": sol.nondegenerate,
                            "linearized_eigs": sol.linearized_eigs, "iterations": sol.iterations,
                            "u_min": float(np.min(sol.u)), "u_max": float(np.max(sol.u))},
        "integral_identity": integral_identity(prob, sol.u),
    }
    if prob.is_constant():
        inside, kappa = spectral_window(model, float(prob.alpha[0]))
        summary["spectral_window"] = {"inside": inside, "kappa": kappa}
        summary["checks"] = {"window_agrees": inside == sol.nondegenerate}
    return summary, 0


def run_jacobi(cfg: RunConfig, out: Path):
    model = _model(cfg)
    if cfg.jacobi_potential == "geometry":
        J = None
    elif cfg.jacobi_potential == "identity":
        J = np.broadcast_to(np.eye(model.N), (model.size, model.N, model.N))
    else:
        J = np.zeros((model.size, model.N, model.N))
    smin, degenerate = jacobi_nondegeneracy(model, J)
    Jused = jacobi_potential(model) if J is None else J
    write_csv(out / "jacobi_potential.csv", ["node"] + [f"J{i}{j}" for i in range(model.N) for j in range(model.N)],
              [[j] + list(np.asarray(Jused[j]).ravel()) for j in range(model.size)])
    return {"jacobi_nondegeneracy": {"smallest_singular_value": smin, "degenerate": degenerate,
                                     "potential": cfg.jacobi_potential}}, 0


def _construct_common(cfg: RunConfig):
    from .construction.reduced import solve_mu0

    model = _model(cfg)
    const = compute_constants(cfg.N)
    mu0, sol = solve_mu0(model, cfg.sign, const, cfg.omega_sign, tol=cfg.tol)
    return model, const, mu0, sol


def run_scaling(cfg: RunConfig, out: Path):
    from .construction.residual import scaling_study

    t0 = time.perf_counter()
    model = _model(cfg)
    const = compute_constants(cfg.N)
    res = scaling_study(model, cfg.version, cfg.eps, cfg.sign, const, cfg.omega_sign, cfg.eta, cfg.M, cfg.grading)
    write_csv(out / "residuals.csv", ["eps", "norm", "norm_over_eps"],
              zip(res["eps"], res["norms"], res["constants"]))
    ok = SLOPE_WINDOW[0] <= res["slope"] <= SLOPE_WINDOW[1]
    summary = {"scaling_study": res, "checks": {"slope_in_window": ok},
               "slope_window": list(SLOPE_WINDOW), "elapsed_s": time.perf_counter() - t0}
    write_json(out / "slope.json", {"version": cfg.version, "slope": res["slope"], "pass": ok})
    return summary, 0


def run_construct(cfg: RunConfig, out: Path):
    from .construction.reduced import solve_mu1, solve_phi1
    from .construction.residual import build_state, fit_slope, residual

    t0 = time.perf_counter()
    model, const, mu0, sol = _construct_common(cfg)
    mu1 = solve_mu1(model, mu0, cfg.sign, const, cfg.omega_sign)
    try:
        phi1 = solve_phi1(model, np.zeros((model.size, model.N)))
        phi_note = "G = 0 (second-stage source not assembled)"
    except PreconditionError as exc:
        phi1 = np.zeros((model.size, model.N))
        phi_note = f"Jacobi operator degenerate: {exc}"
    y = model.coordinates()
    write_csv(out / "fields.csv",
              [f"y{i + 1}" for i in range(model.k)] + ["mu0", "mu1"] + [f"Phi1_{m}" for m in range(model.N)],
              [list(y[j]) + [mu0[j], mu1[j]] + list(phi1[j]) for j in range(model.size)])
    rows, norms = [], {"v0": [], "v1": []}
    w1_last = None
    for eps in sorted(cfg.eps, reverse=True):
        for version in ("v0", "v1"):
            st = build_state(model, eps, cfg.sign, version, mu0=mu0, constants=const,
                             omega_sign=cfg.omega_sign, eta=cfg.eta, M=cfg.M, grading=cfg.grading)
            rr = residual(st, model, version)
            norms[version].append(rr.norm)
            rows.append([eps, version, rr.norm, rr.norm / eps])
            if version == "v1":
                w1_last = st
    write_csv(out / "residuals.csv", ["eps", "version", "norm", "norm_over_eps"], rows)
    eps_sorted = sorted(cfg.eps, reverse=True)
    slopes = {v: (fit_slope(eps_sorted, n) if len(n) >= 2 else None) for v, n in norms.items()}
    write_json(out / "slope.json", slopes)
    # w1 profiles of the smallest eps: node, mode, radius, value
    lines = ["# node mode radius value  (mode 0: radial part; mode 2_P: profile of tensor P)"]
    w1 = w1_last.w1
    r = w1.grid.nodes
    for j in range(w1.n_nodes):
        for i in range(len(r)):
            lines.append(f"{j} 0 {fmt(r[i])} {fmt(w1.mode0[j, i])}")
        if w1.mode2 is not None:
            for P in range(w1.mode2.shape[1]):
                for i in range(len(r)):
                    lines.append(f"{j} 2_{P} {fmt(r[i])} {fmt(w1.mode2[j, P, i])}")
    (out / "w1_profiles.txt").write_text("\n".join(lines) + "\n")
    summary = {
        "solve_mu0": {"min": float(np.min(mu0)), "max": float(np.max(mu0)), "nondegenerate": sol.nondegenerate},
        "solve_mu1": {"min": float(np.min(mu1)), "max": float(np.max(mu1))},
        "solve_phi1": {"max_abs": float(np.max(np.abs(phi1))), "note": phi_note},
        "residual": {"v0": norms["v0"], "v1": norms["v1"]},
        "scaling_study": slopes,
        "checks": {"v1_below_v0": all(a < b for a, b in zip(norms["v1"], norms["v0"]))},
        "elapsed_s": time.perf_counter() - t0,
    }
    return summary, 0


RUNNERS = {
    "constants": run_constants,
    "profile": run_profile,
    "eigenpair": run_eigenpair,
    "attractive-solve": run_attractive,
    "repulsive-solve": run_repulsive,
    "jacobi": run_jacobi,
    "construct": run_construct,
    "scaling": run_scaling,
}


def run(cfg: RunConfig) -> int:
    """Execute one validated configuration; returns the exit status."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        summary, status = RUNNERS[cfg.command](cfg, out)
    except ConfigError as exc:
        summary, status = {"status": "failed", "error": "ConfigError", "reason": str(exc)}, 2
    except (SolverFailure, SpectralFailure, DegeneracyError, PreconditionError) as exc:
        summary, status = {"status": "failed", "error": type(exc).__name__, "reason": str(exc)}, 1
    summary = {"command": cfg.command, "config": cfg.to_dict(), **summary}
    summary.pop("elapsed_s", None)  # timing would break byte-identical reruns
    summary.setdefault("status", "ok" if status == 0 else "failed")
    write_json(out / "summary.json", summary)
    return status


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="yamabe-conc", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration; flags below override it")
    ap.add_argument("--N", type=int)
    ap.add_argument("--geometry", help="geometry JSON path or bundled name")
    ap.add_argument("--eps", type=float, nargs="+")
    ap.add_argument("--M", type=int)
    ap.add_argument("--grading", type=float)
    ap.add_argument("--eta", type=float)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--omega-sign", dest="omega_sign", type=int, choices=(1, -1))
    ap.add_argument("--sign", choices=("sub", "super"))
    ap.add_argument("--version", choices=("v0", "v1"))
    ap.add_argument("--alpha", type=_parse_value, help="number or JSON field spec")
    ap.add_argument("--beta", type=_parse_value, help="number or JSON field spec")
    ap.add_argument("--jacobi-potential", dest="jacobi_potential", choices=("geometry", "identity", "flat"))
    ap.add_argument("--nodes", type=int, help="override nodes per dimension of the geometry")
    ap.add_argument("--output", "-o")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            ap.error(f"config: cannot read {args.config}: {exc}")
    data["command"] = args.command
    for key, val in vars(args).items():
        if key not in ("command", "config") and val is not None:
            data[key] = val
    if "output" not in data:
        data["output"] = str(Path("out") / args.command)
    try:
        cfg = config_from_dict(data)
        if cfg.geometry is not None:
            resolve_geometry(cfg.geometry)
    except (ConfigError, TypeError) as exc:
        ap.error(str(exc))
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
