"""Command line entry point.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for
configuration or usage errors.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import reports
from .basin import SamplingSpec, basin_scan, random_interleaved, sample_points
from .bunching import delta, easy_inequality, epsilon, stable_base
from .config import (BasinConfig, ConfigError, PipelineConfig, SolveConfig, config_hash, derive_seed,
                     load_config, to_dict)
from .jets import Jet2, SolverConfig, SolverError, growth_check, solve_2jet
from .nilpotency import build_word, verify_word_matrices, verify_word_relation
from .pipeline import JetSequence, run_pipeline
from .polyspace import HomQuadMap, PinchedSequence, decomposition_bounds
from .poset import poset_summary

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _out_dir(args) -> Path | None:
    d = args.out_dir or os.environ.get("JETCONJ_OUT_DIR")
    return Path(d) if d else None


def _emit(args, text: str, name: str) -> None:
    out = _out_dir(args)
    if out is None:
        sys.stdout.write(text)
    else:
        path = reports.write_text(text, out / name)
        print(f"wrote {path}", file=sys.stderr)


def _status(label: str, ok: bool, detail: str = "") -> None:
    print(f"{'PASS' if ok else 'FAIL'} {label}{': ' + detail if detail else ''}", file=sys.stderr)


def cmd_poset(args) -> int:
    if args.d < 1:
        raise ConfigError("--d must be >= 1")
    _emit(args, reports.json_text(poset_summary(args.d)), f"poset_d{args.d}.json")
    return EXIT_OK


def cmd_verify_nilpotency(args) -> int:
    if args.d < 1:
        raise ConfigError("--d must be >= 1")
    seed = 0 if args.seed is None else args.seed
    rel = verify_word_relation(args.d)
    _status(f"relation word d={args.d}", rel.ok, "" if rel.ok else f"witness {rel.witness}")
    data = {"d": args.d, "word": list(build_word(args.d).lengths), "relation_empty": rel.ok,
            "witness": None if rel.witness is None else [w.to_json() for w in rel.witness]}
    ok = rel.ok
    if args.d >= 2:
        mat = verify_word_matrices(args.d, args.trials, seed)
        _status(f"matrix word d={args.d} trials={args.trials}", mat.ok, f"max entry {mat.max_entry:.3e}")
        data.update(matrix_ok=mat.ok, matrix_max_entry=mat.max_entry, trials=args.trials, seed=seed)
        ok = ok and mat.ok
    _emit(args, reports.json_text(data), f"nilpotency_d{args.d}.json")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_decomp_bounds(args) -> int:
    seed = 0 if args.seed is None else args.seed
    try:
        seq = PinchedSequence(args.d, args.lam, args.m, seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    b = decomposition_bounds(seq, args.horizon)
    if args.emit == "csv":
        _emit(args, reports.csv_text(b.rows(), ["n", "norm_m0", "norm_m1"]), "decomp_bounds.csv")
    elif args.emit == "svg":
        import math
        series = {"log|m0|": [(n, math.log(v)) for n, v in zip(b.ns, b.norm0) if v > 0],
                  "log|m1|": [(n, math.log(v)) for n, v in zip(b.ns, b.norm1) if v > 0]}
        _emit(args, reports.line_svg(series, "split norms"), "decomp_bounds.svg")
    else:
        _emit(args, reports.json_text({"rows": b.rows(), "slope_m0": b.slope0, "slope_m1": b.slope1,
                                       "d": args.d, "lambda": args.lam, "M": args.m, "seed": seed}),
              "decomp_bounds.json")
    print(f"slope m0 {b.slope0:.4f}  slope m1 {b.slope1:.4f}", file=sys.stderr)
    return EXIT_OK


def _explicit_jets(cfg: SolveConfig) -> list[Jet2]:
    d, nq = cfg.d, cfg.d * cfg.d * (cfg.d + 1) // 2
    out = []
    for k, js in enumerate(cfg.jets):
        parts = [(js.linear_re, d * d), (js.linear_im, d * d), (js.quad_re, nq), (js.quad_im, nq)]
        try:
            arr = [np.zeros(n) if v is None else np.asarray(v, dtype=float) for v, n in parts]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"jets[{k}]: coefficients must be numbers") from exc
        if any(a.shape != (n,) for a, (_, n) in zip(arr, parts)):
            raise ConfigError(f"jets[{k}]: expected {d * d} linear and {nq} quadratic coefficients")
        out.append(Jet2((arr[0] + 1j * arr[1]).reshape(d, d), HomQuadMap(d, arr[2] + 1j * arr[3])))
    return out


def cmd_solve_jets(args) -> int:
    cfg = load_config(args.config, SolveConfig)
    if args.seed is not None:
        cfg.seed = args.seed
    if cfg.jets:
        listed = _explicit_jets(cfg)
        f = lambda n: listed[n % len(listed)]  # noqa: E731  periodic extension
    else:
        try:
            f = JetSequence(cfg.d, cfg.lam, cfg.M, cfg.seed, cfg.mu, quad_scale=cfg.quad_scale,
                            general=cfg.general, profile=cfg.profile)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        out = solve_2jet(f, SolverConfig(horizon=cfg.horizon, tol=cfg.tol, max_tail=cfg.max_tail,
                                         use_schedule=cfg.use_schedule))
    except SolverError as exc:
        _status("solve", False, str(exc))
        return EXIT_FAIL
    theta = cfg.theta if cfg.theta is not None else 1.05 * cfg.lam ** 2 * cfg.M
    gr = growth_check(out, theta)
    leak = out.triangular_leak()
    checks = {"residual": out.max_residual <= 1e-8, "triangular_support": leak <= 1e-14,
              "unitary": out.unitarity_defect() <= 1e-10, "growth": gr.ok}
    for k, v in checks.items():
        _status(k, v)
    rows = [{"n": n, "h_norm": out.h[n].norm(), "residual": out.residuals[n] if n < len(out.residuals) else ""}
            for n in range(cfg.horizon + 1)]
    if args.emit == "csv":
        _emit(args, reports.csv_text(rows, ["n", "h_norm", "residual"]), "solve_jets.csv")
    else:
        data = {"config": to_dict(cfg), "config_hash": config_hash(cfg), "checks": checks,
                "max_residual": out.max_residual, "triangular_leak": leak, "series_end": out.n_end,
                "growth": {"slope": gr.slope, "bound": gr.bound, "theta": gr.theta}, "rows": rows}
        _emit(args, reports.json_text(data), "solve_jets.json")
    return EXIT_OK if all(checks.values()) else EXIT_FAIL


def basin_sequence(cfg: BasinConfig):
    if cfg.schedule not in ("nilpotency-word", "none"):
        raise ConfigError(f"schedule must be 'nilpotency-word' or 'none', got {cfg.schedule!r}")
    return random_interleaved(cfg.d, cfg.seed, (cfg.lam_min, cfg.lam_max), cfg.coeff_radius,
                              cfg.epochs if cfg.schedule != "none" else 0)


def cmd_basin(args) -> int:
    cfg = load_config(args.config, BasinConfig)
    if args.seed is not None:
        cfg.seed = args.seed
    seq = basin_sequence(cfg)
    s = cfg.sampling
    if args.emit == "svg":
        # real slice through (Re z1, Re z2), remaining coordinates zero
        k = cfg.slice_per_axis
        axis = np.linspace(-s.radius, s.radius, k)
        pts = np.zeros((k * k, cfg.d), dtype=complex)
        pts[:, 0] = np.tile(axis, k)
        pts[:, min(1, cfg.d - 1)] = np.repeat(axis, k) if cfg.d > 1 else pts[:, 0]
    else:
        pts = sample_points(cfg.d, SamplingSpec(s.radius, s.per_axis, s.n_grid, s.n_far, s.far_radius,
                                                derive_seed(cfg.seed, "sampling")))
    rep = basin_scan(seq, pts, cfg.eps_conv, cfg.max_iter, cfg.log_cap)
    ok = rep.converged_fraction == 1.0
    _status(f"basin d={cfg.d}", ok, f"{rep.count('converged')}/{rep.n_points} converged")
    if args.emit == "svg":
        vals = [int(it) if v == "converged" else -1 for it, v in zip(rep.iterations, rep.verdicts)]
        _emit(args, reports.heatmap_svg(vals, k, k, f"iterations to converge, d={cfg.d}", missing=-1), "basin.svg")
    elif args.emit == "csv":
        header = [f"{p}_z{j}" for j in range(1, cfg.d + 1) for p in ("re", "im")] + ["verdict", "iterations", "final_norm"]
        _emit(args, reports.csv_text(rep.rows(), header), "basin.csv")
    else:
        data = {"config": to_dict(cfg), "config_hash": config_hash(cfg), "points": rep.n_points,
                "converged": rep.count("converged"), "diverged": rep.count("diverged"),
                "undecided": rep.count("undecided"), "max_iterations": int(rep.iterations.max()),
                "peak_log_norm": float(rep.peak_log_norms.max()), "growth": seq.growth_diagnostics()}
        _emit(args, reports.json_text(data), "basin.json")
    return EXIT_OK if ok else EXIT_FAIL


def epsilon_rows(dmax: int) -> list[dict]:
    rows = []
    for d in range(2, dmax + 1):
        rows.append({"d": d, "epsilon": str(epsilon(d)), "epsilon_float": float(epsilon(d)),
                     "delta": str(delta(d)), "D": stable_base(d), "K": stable_base(d),
                     "easy_inequality": easy_inequality(d)})
    return rows


def cmd_epsilon_table(args) -> int:
    if args.dmax < 2:
        raise ConfigError("--dmax must be >= 2")
    rows = epsilon_rows(args.dmax)
    if args.emit == "csv":
        _emit(args, reports.csv_text(rows, ["d", "epsilon", "epsilon_float", "delta", "D", "K", "easy_inequality"]),
              "epsilon_table.csv")
    else:
        _emit(args, reports.json_text(rows), "epsilon_table.json")
    ok = all(r["easy_inequality"] for r in rows)
    _status("rescaling inequality", ok)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_pipeline(args) -> int:
    cfg = load_config(args.config, PipelineConfig) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    try:
        rep = run_pipeline(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for st in rep.stages:
        _status(st.name, st.passed, st.message or "")
    if args.emit == "svg":
        _emit(args, reports.line_svg(rep.series, "log |h_n|"), "pipeline.svg")
    else:
        _emit(args, reports.json_text(rep.to_dict()), "pipeline.json")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _global_flags(parser: argparse.ArgumentParser, top: bool) -> None:
    # subcommands suppress their defaults so flags given before the command survive
    none = None if top else argparse.SUPPRESS
    parser.add_argument("--seed", type=int, default=none, help="master seed (overrides config)")
    parser.add_argument("--out-dir", default=none,
                        help="write artifacts here instead of stdout (env JETCONJ_OUT_DIR also works)")
    parser.add_argument("--emit", choices=["json", "csv", "svg"], default="json" if top else argparse.SUPPRESS,
                        help="output format")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, top=False)

    p = argparse.ArgumentParser(prog="jetconj", description="2-jet conjugacy and basin toolkit")
    _global_flags(p, top=True)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("poset", parents=[common], help="dump the index set, order and special sets")
    s.add_argument("--d", type=int, required=True)
    s.set_defaults(func=cmd_poset)

    s = sub.add_parser("verify-nilpotency", parents=[common], help="check the permutation word kills the chain relation")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--trials", type=int, default=100)
    s.set_defaults(func=cmd_verify_nilpotency)

    s = sub.add_parser("decomp-bounds", parents=[common], help="norms of the split conjugacy operator along a pinched sequence")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--m", type=float, required=True)
    s.add_argument("--horizon", type=int, default=40)
    s.set_defaults(func=cmd_decomp_bounds)

    s = sub.add_parser("solve-jets", parents=[common], help="solve the 2-jet conjugacy equation from a TOML config")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_solve_jets)

    s = sub.add_parser("basin", parents=[common], help="basin scan of an interleaved triangular sequence")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_basin)

    s = sub.add_parser("epsilon-table", parents=[common], help="table of bunching constants")
    s.add_argument("--dmax", type=int, default=6)
    s.set_defaults(func=cmd_epsilon_table)

    s = sub.add_parser("pipeline", parents=[common], help="end-to-end desk-scale run")
    s.add_argument("--config", default=None)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
