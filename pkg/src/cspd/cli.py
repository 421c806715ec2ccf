"""Command-line harness: seeded experiment sweeps, CSV/JSON output, and the
acceptance checks.

Configs are YAML files; every key can also be overridden on the command line
with --set dotted.key=value.  Output files are written deterministically
(rows sorted, floats at 17 significant digits) so repeated runs are
byte-comparable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import metrics, problems, solver
from .core import ConfigurationError, NumericalDivergenceError, ProblemInstance
from .schedule import StepSchedule

CSV_HEADER = ("run_id,solver,problem,seed,n,obj_gap,abs_obj_gap,feas_x,feas_y,"
              "duality_gap,max_gamma_norm,max_lambda_norm,wall_ms")

BASIC_SOLVER = "basic"
ADAPTIVE_SOLVER = "adaptive"

_OUT_ENV = "CSPD_OUT_DIR"


def _fmt(v: Optional[float]) -> str:
    """17-significant-digit float field; None prints empty."""
    if v is None:
        return ""
    return "%.17g" % float(v)


@dataclass
class ExperimentConfig:
    problem: Dict = field(default_factory=dict)
    solvers: List[str] = field(default_factory=lambda: [BASIC_SOLVER, ADAPTIVE_SOLVER])
    n_list: List[int] = field(default_factory=list)
    seeds: List[int] = field(default_factory=list)
    multipliers: Optional[Dict[str, float]] = None  # {dual, primal}; None = preset
    reference: Dict = field(default_factory=lambda: {"target_tol": 1e-4})
    output: Dict = field(default_factory=dict)

    def validate(self):
        kind = self.problem.get("kind")
        if kind not in ("qcqp", "pricing", "toy"):
            raise ConfigurationError(f"problem.kind must be qcqp/pricing/toy, got {kind!r}")
        for s in self.solvers:
            if s not in (BASIC_SOLVER, ADAPTIVE_SOLVER):
                raise ConfigurationError(f"solvers entries must be basic/adaptive, got {s!r}")
        if not self.solvers:
            raise ConfigurationError("solvers must be nonempty")
        if not self.n_list:
            raise ConfigurationError("n_list must be nonempty")
        if sorted(self.n_list) != list(self.n_list) or min(self.n_list) < 1:
            raise ConfigurationError("n_list must be ascending with entries >= 1")
        if not self.seeds:
            raise ConfigurationError("seeds must be nonempty")
        tol = self.reference.get("target_tol", 1e-4)
        if not (isinstance(tol, (int, float)) and tol > 0):
            raise ConfigurationError(f"reference.target_tol must be positive, got {tol!r}")
        if self.multipliers is not None:
            for k in ("dual", "primal"):
                if self.multipliers.get(k, 1.0) <= 0:
                    raise ConfigurationError(f"multipliers.{k} must be positive")


def _normalize_seeds(raw) -> List[int]:
    if isinstance(raw, dict):
        base = int(raw.get("base", 0))
        count = int(raw.get("count", 1))
        return [base + i for i in range(count)]
    if isinstance(raw, (list, tuple)):
        return [int(s) for s in raw]
    if isinstance(raw, int):
        return [raw]
    raise ConfigurationError(f"seeds must be a list, an int, or {{base, count}}, got {raw!r}")


def load_config(path: str, overrides: Sequence[str] = (),
                seed: Optional[int] = None, out: Optional[str] = None) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a mapping")
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        node = raw
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"--set path {key!r} crosses a non-mapping node")
        node[parts[-1]] = yaml.safe_load(value)
    cfg = ExperimentConfig(
        problem=dict(raw.get("problem", {})),
        solvers=list(raw.get("solvers", [BASIC_SOLVER, ADAPTIVE_SOLVER])),
        n_list=[int(n) for n in raw.get("n_list", [])],
        seeds=_normalize_seeds(raw.get("seeds", [])) if "seeds" in raw else [],
        multipliers=raw.get("multipliers"),
        reference=dict(raw.get("reference", {"target_tol": 1e-4})),
        output=dict(raw.get("output", {})),
    )
    if seed is not None:
        cfg.seeds = [int(seed)]
    if out is not None:
        cfg.output["dir"] = out
    cfg.validate()
    return cfg


def build_problem(cfg: ExperimentConfig) -> ProblemInstance:
    p = cfg.problem
    kind = p["kind"]
    if kind == "qcqp":
        spec = problems.QcqpSaddleSpec(
            d=int(p.get("d", 50)), m=int(p.get("m", 15)),
            seed=int(p.get("seed", 0)),
            theta_mode=p.get("theta_mode", problems.INTERIOR),
        )
        return problems.generate_qcqp(spec)
    if kind == "pricing":
        spec = problems.PricingSpec(
            d=int(p.get("d", 100)), m=int(p.get("m", 5000)),
            seed=int(p.get("seed", 0)),
            p_min=float(p.get("p_min", 0.0)), p_max=float(p.get("p_max", 30.0)),
        )
        return problems.generate_pricing(spec)
    return problems.generate_zero_sum_toy()


def _schedules(cfg: ExperimentConfig, problem: ProblemInstance):
    """(dual, primal) leading coefficients for this experiment."""
    if cfg.multipliers is not None:
        return float(cfg.multipliers.get("dual", 1.0)), float(cfg.multipliers.get("primal", 1.0))
    return problems.PRESET_COEFFS[cfg.problem["kind"]]


def _one_task(problem, ref, solver_name, n_iters, checkpoints, seed, dual_c, primal_c):
    """Execute one seeded run and evaluate its checkpoints; returns row dicts."""
    if solver_name == BASIC_SOLVER:
        sch = StepSchedule.basic_preset(n_iters, problem.constants, dual_c, primal_c)
        trace = solver.run_basic_cspd(problem, solver.RunConfig(
            n_iters=n_iters, schedule=sch, seed=seed, checkpoints=checkpoints))
    else:
        sch = StepSchedule.adaptive_preset(problem.constants, dual_c, primal_c)
        trace = solver.run_adp_cspd(problem, solver.RunConfig(
            n_iters=n_iters, schedule=sch, seed=seed, checkpoints=checkpoints))
    rows = []
    for rec in trace.records:
        rep = metrics.evaluate((rec.x_bar, rec.y_bar), problem, ref)
        rows.append({
            "run_id": f"{solver_name}-{problem.name}-s{seed}-n{rec.t}",
            "solver": solver_name,
            "problem": problem.name,
            "seed": seed,
            "n": rec.t,
            "obj_gap": rep.obj_gap,
            "abs_obj_gap": abs(rep.obj_gap),
            "feas_x": rep.feas_x,
            "feas_y": rep.feas_y,
            "duality_gap": rep.duality_gap,
            "max_gamma_norm": rec.gamma_norm_max,
            "max_lambda_norm": rec.lambda_norm_max,
            "wall_ms": rec.wall_ms,
            "lower_bound": rep.lower_bound,  # not a CSV column; summary diagnostics
        })
    return rows


def run_sweep(cfg: ExperimentConfig, problem: ProblemInstance,
              ref, jobs: int = 1) -> List[dict]:
    """All (solver, N, seed) rows of the configured sweep, sorted."""
    dual_c, primal_c = _schedules(cfg, problem)
    n_max = max(cfg.n_list)
    tasks = []
    for name in cfg.solvers:
        for seed in cfg.seeds:
            if name == BASIC_SOLVER:
                # A fixed-step run is tied to its horizon: one run per N.
                for n in cfg.n_list:
                    tasks.append((name, n, [n], seed))
            else:
                # The adaptive solver is horizon-free: one run, all checkpoints.
                tasks.append((name, n_max, list(cfg.n_list), seed))

    def work(t):
        name, n_iters, cps, seed = t
        return _one_task(problem, ref, name, n_iters, cps, seed, dual_c, primal_c)

    rows: List[dict] = []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for chunk in pool.map(work, tasks):
                rows.extend(chunk)
    else:
        for t in tasks:
            rows.extend(work(t))
    rows.sort(key=lambda r: (r["solver"], r["problem"], r["seed"], r["n"]))
    return rows


def write_csv(rows: List[dict], path: str):
    cols = CSV_HEADER.split(",")
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fields = []
            for c in cols:
                v = r[c]
                fields.append(str(v) if isinstance(v, (int, str)) else _fmt(v))
            fh.write(",".join(fields) + "\n")


def summarize(cfg: ExperimentConfig, rows: List[dict], ref,
              incomplete: bool = False) -> dict:
    summary = {
        "problem": cfg.problem,
        "reference": {
            "f_star": ref.f_star,
            "gamma_star_norm": float(np.linalg.norm(ref.gamma_star)) if ref.gamma_star.size else 0.0,
            "lambda_star_norm": float(np.linalg.norm(ref.lambda_star)) if ref.lambda_star.size else 0.0,
            "tolerance": ref.tolerance,
        },
        "incomplete": incomplete,
        "solvers": {},
    }
    for name in cfg.solvers:
        mine = [r for r in rows if r["solver"] == name]
        per_n = {}
        for n in cfg.n_list:
            vals = [r for r in mine if r["n"] == n]
            if not vals:
                continue
            gaps = np.array([r["abs_obj_gap"] for r in vals])
            per_n[n] = {
                "mean_abs_obj_gap": float(gaps.mean()),
                "stderr_abs_obj_gap": float(gaps.std(ddof=1) / np.sqrt(len(gaps))) if len(gaps) > 1 else 0.0,
                "mean_feas_x": float(np.mean([r["feas_x"] for r in vals])),
                "mean_feas_y": float(np.mean([r["feas_y"] for r in vals])),
                "max_gamma_norm": float(max(r["max_gamma_norm"] for r in vals)),
                "max_lambda_norm": float(max(r["max_lambda_norm"] for r in vals)),
            }
        entry = {
            "n": sorted(per_n),
            "mean_abs_obj_gap": [per_n[n]["mean_abs_obj_gap"] for n in sorted(per_n)],
            "stderr_abs_obj_gap": [per_n[n]["stderr_abs_obj_gap"] for n in sorted(per_n)],
            "mean_feas_x": [per_n[n]["mean_feas_x"] for n in sorted(per_n)],
            "mean_feas_y": [per_n[n]["mean_feas_y"] for n in sorted(per_n)],
            "max_gamma_norm": [per_n[n]["max_gamma_norm"] for n in sorted(per_n)],
            "max_lambda_norm": [per_n[n]["max_lambda_norm"] for n in sorted(per_n)],
        }
        # Slope fits against the -1/2 benchmark (3+ positive points needed).
        for key in ("mean_abs_obj_gap", "mean_feas_x"):
            pts = list(zip(entry["n"], entry[key]))
            try:
                fit = metrics.slope_fit(pts)
                entry[f"slope_{key}"] = {"slope": fit.slope, "intercept": fit.intercept,
                                         "r2": fit.r2, "n_excluded": fit.n_excluded,
                                         "benchmark": -0.5}
            except ConfigurationError:
                entry[f"slope_{key}"] = None
        # Lemma-1 lower bound: worst signed slack across all checkpoints.
        slacks = [r["obj_gap"] - r["lower_bound"] for r in mine]
        entry["min_lower_bound_slack"] = float(min(slacks)) if slacks else None
        summary["solvers"][name] = entry
    return summary


def _out_paths(cfg: ExperimentConfig) -> Tuple[str, str]:
    out_dir = cfg.output.get("dir") or os.environ.get(_OUT_ENV, ".")
    os.makedirs(out_dir, exist_ok=True)
    csv_name = cfg.output.get("csv_name", "results.csv")
    summary_name = cfg.output.get("summary_name", "summary.json")
    return os.path.join(out_dir, csv_name), os.path.join(out_dir, summary_name)


def cmd_run(cfg: ExperimentConfig, jobs: int = 1) -> int:
    problem = build_problem(cfg)
    ref = problem.reference or metrics.solve_reference(
        problem, cfg.reference.get("target_tol", 1e-4),
        schedule=problem.reference_schedule)
    csv_path, summary_path = _out_paths(cfg)
    try:
        rows = run_sweep(cfg, problem, ref, jobs=jobs)
    except NumericalDivergenceError as exc:
        # Flush whatever finished; mark the summary incomplete.
        write_csv([], csv_path)
        with open(summary_path, "w") as fh:
            json.dump({"incomplete": True, "error": str(exc)}, fh, indent=2)
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 1
    write_csv(rows, csv_path)
    with open(summary_path, "w") as fh:
        json.dump(summarize(cfg, rows, ref), fh, indent=2)
        fh.write("\n")
    print(f"wrote {csv_path} ({len(rows)} rows) and {summary_path}")
    return 0


def cmd_reference(cfg: ExperimentConfig) -> int:
    problem = build_problem(cfg)
    ref = metrics.solve_reference(problem, cfg.reference.get("target_tol", 1e-4),
                                  schedule=problem.reference_schedule)
    print(json.dumps({
        "problem": problem.name,
        "x_star": ref.x_star.tolist(),
        "y_star": ref.y_star.tolist(),
        "gamma_star": ref.gamma_star.tolist(),
        "lambda_star": ref.lambda_star.tolist(),
        "f_star": ref.f_star,
        "tolerance": ref.tolerance,
    }, indent=2))
    return 0


def cmd_check(criteria: Optional[Sequence[int]] = None, jobs: int = 1) -> int:
    from . import checks  # heavy import kept out of `run` startup
    results = checks.run_all(criteria=criteria, jobs=jobs)
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] criterion {res.cid}: {res.name} -- {res.detail}")
        ok = ok and res.passed
    return 0 if ok else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="cspd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("config", help="YAML experiment config")
            p.add_argument("--set", dest="overrides", action="append", default=[],
                           metavar="KEY=VALUE", help="override a config key (dotted path)")
            p.add_argument("--seed", type=int, default=None,
                           help="replace the config's seed list with this single seed")
            p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="concurrent runs")

    add_common(sub.add_parser("run", help="execute the configured sweep"))
    add_common(sub.add_parser("reference", help="print the reference solution as JSON"))
    check_p = sub.add_parser("check", help="run the acceptance checks")
    check_p.add_argument("--only", type=int, action="append", default=None,
                         metavar="K", help="run only criterion K (repeatable)")
    add_common(check_p, needs_config=False)

    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(criteria=args.only, jobs=args.jobs)
        cfg = load_config(args.config, overrides=args.overrides,
                          seed=args.seed, out=args.out)
        if args.command == "run":
            return cmd_run(cfg, jobs=args.jobs)
        return cmd_reference(cfg)
    except (ConfigurationError, OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
