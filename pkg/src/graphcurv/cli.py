"""Command-line front end: ``curvature``, ``solve``, ``validate``, ``sweep``.

One JSON config per run; ``--seed`` and ``--out`` are the only flag overrides
(reproducibility beats convenience).  Every library error class maps to one
documented exit code, listed in EXIT_CODES.  All floating-point output is
written with 17 significant digits, so files round-trip bitwise.

The random generator used anywhere in a run (right-hand-side perturbations,
randomized initial iterates in tests) is numpy's PCG64 via
``numpy.random.default_rng(seed)``; the seed is recorded in the run summary.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import config as cfgmod
from .assembly import assemble_curvature
from .diagnostics import make_barrier_pair, pogorelov_monitor, validate_sandwich
from .errors import (
    ConfigError,
    DegenerateMetric,
    DomainMismatch,
    GraphCurvError,
    NoConvergence,
    NonAdmissible,
    OutOfChart,
    OutOfRange,
    SingularLinearSystem,
    SingularShapeOperator,
    StepsizeUnderflow,
    TransversalityFailure,
)
from .grids import export_csv, load_grid, refine_domain, restrict_values, save_grid
from .linearize import stability_check
from .shape_oracle import curvature_oracle
from .solver import (
    ContinuationOptions,
    NewtonOptions,
    SolveTarget,
    continuation_solve,
    newton_solve,
    perturb_rhs,
    start_state,
)

__all__ = ["main", "EXIT_CODES", "exit_code_for"]

EXIT_CODES = {
    "ok": 0,
    "unexpected": 1,
    "ConfigError": 2,
    "IOError": 3,
    "OutOfChart": 4,
    "DomainMismatch": 5,
    "DegenerateMetric": 6,
    "NonAdmissible": 7,
    "SingularShapeOperator": 8,
    "SingularLinearSystem": 9,
    "NoConvergence": 10,
    "StepsizeUnderflow": 11,
    "TransversalityFailure": 12,
    "OutOfRange": 13,
    "validation_failed": 14,
}

_ERROR_ORDER = (
    (ConfigError, "ConfigError"),
    (OutOfChart, "OutOfChart"),
    (DomainMismatch, "DomainMismatch"),
    (DegenerateMetric, "DegenerateMetric"),
    (NonAdmissible, "NonAdmissible"),  # covers NonAdmissibleInit
    (SingularShapeOperator, "SingularShapeOperator"),
    (SingularLinearSystem, "SingularLinearSystem"),
    (NoConvergence, "NoConvergence"),
    (StepsizeUnderflow, "StepsizeUnderflow"),
    (TransversalityFailure, "TransversalityFailure"),
    (OutOfRange, "OutOfRange"),
)


def exit_code_for(exc):
    for cls, name in _ERROR_ORDER:
        if isinstance(exc, cls):
            return EXIT_CODES[name]
    if isinstance(exc, OSError):
        return EXIT_CODES["IOError"]
    return EXIT_CODES["unexpected"]


def _out_path(cfg, key):
    return os.path.join(cfg["output"]["dir"], cfg["output"][key])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _write_summary(cfg, obj):
    path = _out_path(cfg, "summary")
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_history(cfg, rows):
    path = _out_path(cfg, "iterations")
    with open(path, "w") as fh:
        fh.write("iter,tau,residual,margin,step\n")
        for row in rows:
            fh.write(
                "%d,%.17g,%.17g,%.17g,%.17g\n"
                % (row["iter"], row.get("tau", 1.0), row["residual"],
                   row["margin"], row["step"])
            )
    return path


def _load_solution(path, chart):
    try:
        domain, values, cid = load_grid(path)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: malformed grid header: {exc.msg}")
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed grid data: {exc}")
    if chart is not None and cid != chart.chart_id():
        raise DomainMismatch(
            f"file {path} was written for chart {cid}, config says {chart.chart_id()}"
        )
    return domain, values


def _build_barrier(cfg, chart, domain, k_ceiling):
    """BarrierPair per problem.barrier, or None for kind 'none'."""
    spec = cfg["problem"]["barrier"]
    kind = spec["kind"]
    if kind == "none":
        return None
    if kind == "cap":
        kb = spec["k"]
        if kb == "auto":
            if k_ceiling is None:
                raise ConfigError("barrier.k 'auto' needs problem.k")
            kb = max(1.05 * k_ceiling, k_ceiling + 0.05)
        return make_barrier_pair(chart, domain, kind="cap", k=float(kb))
    if kind == "offset":
        return make_barrier_pair(chart, domain, kind="offset", depth=float(spec["depth"]))
    if kind == "user":
        if not spec["path"]:
            raise ConfigError("barrier.kind 'user' needs barrier.path")
        dom2, fhat = _load_solution(spec["path"], chart)
        dom2.check_compatible(domain)
        return make_barrier_pair(chart, domain, kind="user", lower=fhat)
    raise ConfigError(f"problem.barrier.kind must be cap|offset|user|none, got {kind!r}")


def _initial_iterate(cfg, chart, domain, barrier):
    """Initial f for Newton mode / seeded continuation; None = default path."""
    spec = cfg["solver"]["init"]
    kind = spec["kind"]
    if kind == "auto":
        if abs(chart.base_hypersurface().a0) > 1e-12:
            return None  # base slice is admissible; the solver starts itself
        if barrier is not None and barrier.tag == "cap":
            kind = "scaled_barrier"
        else:
            kind = "paraboloid"
    if kind == "zeros":
        return np.zeros(domain.num_nodes)
    if kind == "paraboloid":
        a = float(spec["scale"])
        if domain.layout == "polar":
            s = domain.coords[:, 0]
            return a * (s**2 - domain.extent[0][1] ** 2)
        if domain.layout == "interval":
            x = domain.coords[:, 0]
            lo, hi = domain.extent[0]
            return -a * (x - lo) * (hi - x)
        raise ConfigError("paraboloid init needs a polar or interval domain")
    if kind == "scaled_barrier":
        if barrier is None:
            raise ConfigError("scaled_barrier init needs a barrier")
        return float(spec["scale"]) * barrier.lower
    if kind == "file":
        if not spec["path"]:
            raise ConfigError("init.kind 'file' needs init.path")
        dom2, f0 = _load_solution(spec["path"], chart)
        dom2.check_compatible(domain)
        return f0
    raise ConfigError(
        f"init.kind must be auto|zeros|paraboloid|scaled_barrier|file, got {kind!r}"
    )


def _target_bounds(kval, domain):
    """(min, max) of the target at f = 0 over the interior."""
    f0 = np.zeros(domain.num_nodes)
    if callable(kval):
        vals = np.asarray(kval(domain.coords, f0), dtype=float)
        vals = np.broadcast_to(vals, f0.shape)[domain.interior]
        return float(np.min(vals)), float(np.max(vals))
    return float(kval), float(kval)


# ---- commands ------------------------------------------------------------------


def cmd_curvature(cfg):
    t0 = time.perf_counter()
    src = cfg["input"]["values"]
    if not src:
        raise ConfigError("missing required key input.values")
    chart = cfgmod.build_chart(cfg)
    domain, f = _load_solution(src, chart)
    asm = assemble_curvature(chart, domain, f)
    data = curvature_oracle(chart, domain, f)
    interior = domain.interior
    gap = float(np.max(np.abs(asm.K[interior] - data.K[interior])))
    export_csv(
        _out_path(cfg, "kfield"),
        domain,
        {"f": f, "K": asm.K, "K_oracle": data.K, "norm_A": data.norm_A},
    )
    summary = {
        "command": "curvature",
        "status": "ok",
        "chart": chart.chart_id(),
        "domain": f"{domain.kind}{list(domain.shape)}",
        "input": src,
        "margin": asm.margin,
        "admissible": bool(asm.admissible),
        "K_interior_min": float(np.min(asm.K[interior])),
        "K_interior_max": float(np.max(asm.K[interior])),
        "oracle_gap": gap,
        "elapsed_s": time.perf_counter() - t0,
    }
    _write_summary(cfg, summary)
    print(
        "curvature: K in [%.17g, %.17g], margin %.17g, oracle gap %.17g"
        % (summary["K_interior_min"], summary["K_interior_max"], asm.margin, gap)
    )
    return EXIT_CODES["ok"]


def _run_solve(cfg):
    """Shared solve core; returns (f, domain, meta, history)."""
    chart = cfgmod.build_chart(cfg)
    domain = cfgmod.build_domain(cfg)
    kval = cfgmod.build_target_k(cfg, domain)
    kmin, kmax = _target_bounds(kval, domain)
    phi0 = chart.base_hypersurface().phi0
    if kmin <= phi0:
        # diagnose the target placement itself, before a barrier construction
        # can fail on the same root cause with a less useful message
        raise OutOfRange(
            f"target curvature {kmin:.6g} does not exceed the base curvature "
            f"{phi0:.6g}; no admissible graph with zero boundary data solves it"
        )
    barrier = _build_barrier(cfg, chart, domain, kmax)
    eps_gap = float(cfg["problem"]["eps_gap"])
    if barrier is not None and eps_gap > 0 and barrier.phi_hat < kmax + eps_gap:
        raise OutOfRange(
            f"barrier floor {barrier.phi_hat:.6g} clears the target {kmax:.6g} "
            f"by less than eps_gap {eps_gap:g}"
        )
    target = SolveTarget(
        chart=chart,
        domain=domain,
        k=kval,
        lower=None if barrier is None else barrier.lower,
        upper=None if barrier is None else barrier.upper,
        phi_hat=None if barrier is None else barrier.phi_hat,
    )
    sol = cfg["solver"]
    nopts = NewtonOptions(
        tol=float(sol["tol"]),
        max_iter=int(sol["max_iter"]),
        max_halvings=int(sol["max_halvings"]),
        margin_fraction=float(sol["margin_fraction"]),
    )
    f_init = _initial_iterate(cfg, chart, domain, barrier)
    meta = {
        "chart": chart.chart_id(),
        "domain": f"{domain.kind}{list(domain.shape)}",
        "mode": sol["mode"],
        "k_min": kmin,
        "k_max": kmax,
        "phi0": phi0,
        "phi_hat": None if barrier is None else barrier.phi_hat,
        "barrier": "none" if barrier is None else barrier.tag,
        "seed": int(sol["seed"]),
        "perturb_magnitude": float(sol["perturb"]["magnitude"]),
    }
    if sol["mode"] == "newton":
        if f_init is None:
            f_init = np.zeros(domain.num_nodes)
        res = newton_solve(f_init, target, nopts)
        meta.update(
            tau=1.0,
            newton_total=res.iterations,
            residual_norm=res.residual_norm,
            margin=res.margin,
        )
        return res.f, domain, meta, res.history
    if sol["mode"] != "continuation":
        raise ConfigError(f"solver.mode must be continuation|newton, got {sol['mode']!r}")
    copts = ContinuationOptions(
        dtau_init=float(sol["dtau_init"]),
        dtau_min=float(sol["dtau_min"]),
        dtau_max=float(sol["dtau_max"]),
        easy_iterations=int(sol["easy_iterations"]),
        newton=nopts,
    )
    delta0 = sol["delta0"]
    state = start_state(
        target,
        copts,
        delta0=None if delta0 is None else float(delta0),
        f_init=f_init,
    )
    mag = float(sol["perturb"]["magnitude"])
    if mag != 0.0:
        pseed = sol["perturb"]["seed"]
        pseed = int(sol["seed"]) if pseed is None else int(pseed)
        perturb_rhs(state, mag, pseed)
        meta["perturb_seed"] = pseed
    f = continuation_solve(state, copts)
    meta.update(
        tau=state.tau,
        newton_total=state.newton_total,
        residual_norm=state.residual_norm,
        margin=assemble_curvature(chart, domain, f).margin,
    )
    return f, domain, meta, state.history


def cmd_solve(cfg):
    t0 = time.perf_counter()
    try:
        f, domain, meta, history = _run_solve(cfg)
    except GraphCurvError as exc:
        summary = {
            "command": "solve",
            "status": type(exc).__name__,
            "error": str(exc),
            "elapsed_s": time.perf_counter() - t0,
        }
        _write_summary(cfg, summary)
        raise
    save_grid(_out_path(cfg, "solution"), domain, f, meta["chart"])
    _write_history(cfg, history)
    summary = {"command": "solve", "status": "converged", **meta,
               "elapsed_s": time.perf_counter() - t0,
               "solution": _out_path(cfg, "solution")}
    _write_summary(cfg, summary)
    print(
        "solve: converged, tau %.3g, %d Newton iterations, residual %.3e, margin %.6g"
        % (meta["tau"], meta["newton_total"], meta["residual_norm"], meta["margin"])
    )
    return EXIT_CODES["ok"]


def cmd_validate(cfg):
    t0 = time.perf_counter()
    src = cfg["input"]["solution"]
    if not src:
        raise ConfigError("missing required key input.solution")
    chart = cfgmod.build_chart(cfg)
    domain, f = _load_solution(src, chart)
    asm = assemble_curvature(chart, domain, f)
    data = curvature_oracle(chart, domain, f)
    interior = domain.interior

    kval = None
    if cfgmod.provided(cfg, "problem", "k") is not None:
        kval = cfgmod.build_target_k(cfg, domain)
    checks = {}
    details = {}

    checks["admissible"] = bool(asm.admissible)
    details["margin"] = asm.margin

    if cfg["input"]["barrier"]:
        dom2, fhat = _load_solution(cfg["input"]["barrier"], chart)
        dom2.check_compatible(domain)
        barrier = make_barrier_pair(chart, domain, kind="user", lower=fhat)
    else:
        _, kmax = (None, None) if kval is None else _target_bounds(kval, domain)
        if kmax is None:
            kmax = float(np.max(asm.K[interior]))
        barrier = _build_barrier(cfg, chart, domain, kmax)
    if barrier is not None:
        target_vals = None
        if kval is not None:
            target_vals = (
                kval(domain.coords, f) if callable(kval)
                else np.full(domain.num_nodes, float(kval))
            )
        rep = validate_sandwich(f, barrier, target=target_vals)
        checks["sandwich"] = bool(rep["passed"])
        details["sandwich"] = {
            k: v for k, v in rep.items() if k not in ("above_upper", "below_lower")
        }
        details["sandwich"]["violations"] = (
            len(rep["above_upper"]) + len(rep["below_lower"])
        )

    gap = float(np.max(np.abs(asm.K[interior] - data.K[interior])))
    ds = domain.spacing[0]
    gap_tol = 50.0 * ds**2 * (1.0 + float(np.max(np.abs(data.K[interior]))))
    checks["assembly_vs_oracle"] = bool(gap <= gap_tol)
    details["oracle_gap"] = gap
    details["oracle_gap_tol"] = gap_tol

    if kval is not None:
        kv = kval(domain.coords, f) if callable(kval) else float(kval)
        resid = float(np.max(np.abs(np.where(interior, asm.K - kv, 0.0))))
        checks["residual"] = bool(resid <= 1e-6)
        details["residual_norm"] = resid

    # the remaining probes need library calls that can refuse bad input;
    # a refusal is a failed check here, never an abort
    try:
        stab = stability_check(chart, domain, f)
        checks["stable"] = bool(stab["stable"])
    except GraphCurvError as exc:
        checks["stable"] = False
        details["stability_error"] = str(exc)

    mon = cfg["monitor"]
    try:
        po = pogorelov_monitor(
            chart, domain, f, alpha=float(mon["alpha"]), eps_x=float(mon["eps_x"])
        )
        checks["transversal"] = True
        details["pogorelov_sup"] = po["sup"]
        details["pogorelov_node"] = po["node"]
        details["x_min"] = po["x_min"]
    except GraphCurvError as exc:
        checks["transversal"] = False
        details["pogorelov_error"] = str(exc)

    passed = all(checks.values())
    summary = {
        "command": "validate",
        "status": "passed" if passed else "failed",
        "chart": chart.chart_id(),
        "domain": f"{domain.kind}{list(domain.shape)}",
        "input": src,
        "checks": checks,
        "details": details,
        "elapsed_s": time.perf_counter() - t0,
    }
    _write_summary(cfg, summary)
    for name in sorted(checks):
        print(f"validate: {name}: {'pass' if checks[name] else 'FAIL'}")
    return EXIT_CODES["ok"] if passed else EXIT_CODES["validation_failed"]


def _sweep_worker(raw_cfg, level):
    """Solve one refinement level; used by cmd_sweep (possibly in a subprocess)."""
    cfg = cfgmod.parse_config(raw_cfg)
    base = cfgmod.build_domain(cfg)
    domain = refine_domain(base, 2**level)
    if domain.kind in ("ball", "annulus"):
        cfg["domain"]["nr"] = domain.shape[0] - 1
        cfg["domain"]["nphi"] = domain.shape[1]
    elif domain.kind == "interval":
        cfg["domain"]["cells"] = domain.shape[0] - 1
    else:
        cfg["domain"]["shape"] = list(domain.shape)
    f, _, meta, _ = _run_solve(cfg)
    return level, f, meta


def cmd_sweep(cfg, raw_cfg, jobs):
    t0 = time.perf_counter()
    levels = int(cfg["sweep"]["levels"])
    if levels < 1:
        raise ConfigError("sweep.levels must be >= 1")
    base = cfgmod.build_domain(cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, [raw_cfg] * levels, range(levels)))
    else:
        results = [_sweep_worker(raw_cfg, lvl) for lvl in range(levels)]
    results.sort(key=lambda t: t[0])
    domains = [refine_domain(base, 2**lvl) for lvl in range(levels)]
    diffs = []
    for lvl in range(levels - 1):
        restricted = restrict_values(domains[lvl + 1], domains[lvl], results[lvl + 1][1])
        d = np.abs(results[lvl][1] - restricted)[domains[lvl].interior]
        diffs.append(float(np.max(d)))
    orders = [
        float(np.log2(diffs[i] / diffs[i + 1])) for i in range(len(diffs) - 1)
    ]
    table_path = _out_path(cfg, "table")
    with open(table_path, "w") as fh:
        fh.write("level,shape,h,residual,margin,newton_total,diff_to_next,order\n")
        for lvl, (_, f, meta) in enumerate(results):
            dom = domains[lvl]
            cells = [
                str(lvl),
                '"%s"' % "x".join(str(m) for m in dom.shape),
                "%.17g" % dom.spacing[0],
                "%.17g" % meta["residual_norm"],
                "%.17g" % meta["margin"],
                str(meta["newton_total"]),
                "%.17g" % diffs[lvl] if lvl < len(diffs) else "",
                "%.17g" % orders[lvl] if lvl < len(orders) else "",
            ]
            fh.write(",".join(cells) + "\n")
    summary = {
        "command": "sweep",
        "status": "ok",
        "levels": levels,
        "jobs": jobs,
        "diffs": diffs,
        "orders": orders,
        "table": table_path,
        "per_level": [meta for _, _, meta in results],
        "elapsed_s": time.perf_counter() - t0,
    }
    _write_summary(cfg, summary)
    for i, o in enumerate(orders):
        print("sweep: order between levels %d-%d-%d: %.3f" % (i, i + 1, i + 2, o))
    if not orders:
        print("sweep: %d level(s), no order estimate" % levels)
    return EXIT_CODES["ok"]


# ---- entry point ---------------------------------------------------------------


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="graphcurv",
        description="Prescribed-curvature graphs over model hypersurfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("curvature", "assemble K(f) for a stored graph and compare to the oracle"),
        ("solve", "solve K(f) = k by damped Newton or curvature continuation"),
        ("validate", "run the diagnostics battery on a stored solution"),
        ("sweep", "grid-refinement convergence study"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override solver.seed")
        p.add_argument("--out", default=None, help="override output.dir")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers (sweep only)")
    args = parser.parse_args(argv)
    try:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}:{exc.lineno}: {exc.msg}")
        if not isinstance(raw_cfg, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        if args.seed is not None:
            raw_cfg.setdefault("solver", {})["seed"] = args.seed
        if args.out is not None:
            raw_cfg.setdefault("output", {})["dir"] = args.out
        cfg = cfgmod.parse_config(raw_cfg)
        os.makedirs(cfg["output"]["dir"], exist_ok=True)
        if args.command == "curvature":
            return cmd_curvature(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "validate":
            return cmd_validate(cfg)
        return cmd_sweep(cfg, raw_cfg, max(1, args.jobs))
    except GraphCurvError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"IO error: {exc}", file=sys.stderr)
        return EXIT_CODES["IOError"]
    except Exception as exc:  # pragma: no cover - last resort
        print(f"unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES["unexpected"]


if __name__ == "__main__":
    sys.exit(main())
