"""Command-line front end.

Exit codes: 0 success, 1 gating validation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .desirability import maximize_desirability
from .glm import DEFAULT_REGISTRY, MODEL_NAMES, PARAM_NAMES, WC_CO_CR_SPACE, normalize
from .nsga2 import run as run_nsga2
from .pareto import SolutionSet, direction_signs, pareto_mask
from .problems import BUILTIN_NAMES, ProblemSpec, builtin, validate_published
from .svg import scatter_svg
from .weighted_sum import weighted_sum_sweep

METHODS = ("weighted-sum", "desirability", "nsga2")
SEED_ENV = "SPRAYOPT_SEED"


class UsageError(Exception):
    pass


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


# -- predict -----------------------------------------------------------------------

def cmd_predict(args) -> int:
    names = list(MODEL_NAMES) if args.all else (args.model or [])
    if not names:
        raise UsageError("choose models with --model NAME or --all")
    for n in names:
        if n not in DEFAULT_REGISTRY:
            raise UsageError(f"unknown model {n!r}; available: {', '.join(MODEL_NAMES)}")
    x = np.array([args.pfr, args.sod, args.lam, args.cv, args.tgf], dtype=float)
    if not np.all(np.isfinite(x)):
        raise UsageError("parameter values must be finite")
    if not WC_CO_CR_SPACE.contains(x):
        print("warning: parameters lie outside the WC-10Co-4Cr bounds; predictions extrapolate", file=sys.stderr)
    z = normalize(x)
    preds = {n: DEFAULT_REGISTRY[n].predict(z) for n in names}
    if args.json:
        sys.stdout.write(_dump({"parameters": dict(zip(PARAM_NAMES, x.tolist())), "predictions": preds}))
    else:
        for n, v in preds.items():
            print(f"{n:<12} {v:12.6g} {DEFAULT_REGISTRY[n].unit}")
    return 0


# -- optimize ----------------------------------------------------------------------

def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _load_problem(args) -> ProblemSpec:
    if args.config:
        try:
            problem = ProblemSpec.from_json(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"invalid config {args.config}: {exc}") from None
    else:
        problem = builtin(args.problem)
    try:
        changes = {}
        if args.pop is not None or args.gens is not None:
            nsga = {"population": args.pop, "generations": args.gens}
            changes["nsga2"] = replace(problem.nsga2, **{k: v for k, v in nsga.items() if v is not None})
        if args.step is not None:
            changes["weight_step"] = args.step
        if args.multistart is not None:
            changes["sqp"] = replace(problem.sqp, multistart=args.multistart)
        if args.restarts is not None:
            changes["direct_search"] = replace(problem.direct_search, restarts=args.restarts)
        return problem.with_overrides(**changes) if changes else problem
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _write_svgs(solutions: SolutionSet, stem: Path, title: str) -> list[str]:
    raw, labels = solutions.raw, solutions.labels
    paths = []
    if raw.shape[1] == 2:
        pairs = [(0, 1)]
    elif raw.shape[1] == 3:
        pairs = [(0, 1), (0, 2), (1, 2)]
    else:
        return paths
    for i, j in pairs:
        p = stem.with_name(f"{stem.name}.svg") if len(pairs) == 1 else stem.with_name(f"{stem.name}_{labels[i]}-{labels[j]}.svg")
        write_atomic(p, scatter_svg(raw[:, [i, j]], labels[i], labels[j], title, polyline=len(pairs) == 1))
        paths.append(str(p))
    return paths


def cmd_optimize(args) -> int:
    if not args.problem and not args.config:
        raise UsageError("give --problem or --config")
    seed = args.seed if args.seed is not None else _default_seed()
    problem = _load_problem(args)
    if args.method == "nsga2":
        problem = problem.with_overrides(nsga2=replace(problem.nsga2, seed=seed))
    if args.progress and args.method != "nsga2":
        raise UsageError("--progress is only available for --method nsga2")
    if args.method == "desirability" and problem.desirability is None:
        raise UsageError("problem has no desirability targets")

    out = Path(args.out or f"problem-{problem.name}-{args.method}.csv")
    stem = out.with_suffix("")
    summary_path = Path(args.summary) if args.summary else stem.with_name(stem.name + ".json")
    manifest_path = stem.with_name(stem.name + ".manifest.json")
    t0 = time.perf_counter()
    warnings_seen: list[str] = []

    if args.method == "weighted-sum":
        import warnings

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sweep = weighted_sum_sweep(problem, seed=seed)
        warnings_seen = [str(w.message) for w in caught]
        solutions = sweep.solutions
        summary = sweep.summary()
        hyper = {"weight_step": problem.weight_step, "sqp": vars_of(problem.sqp)}
    elif args.method == "desirability":
        res = maximize_desirability(problem, seed=seed)
        solutions = SolutionSet(res.decision, res.raw, problem.labels, problem.directions,
                                rank=[1], crowding=[np.inf])
        summary = res.to_dict()
        hyper = {"targets": problem.desirability.to_list(), "direct_search": vars_of(problem.direct_search)}
    else:
        progress_fh = open(args.progress, "w", encoding="utf-8") if args.progress else None
        try:
            def progress(rec):
                if progress_fh is not None:
                    progress_fh.write(json.dumps(rec, sort_keys=True) + "\n")

            solutions = run_nsga2(problem, progress=progress)
        finally:
            if progress_fh is not None:
                progress_fh.close()
        history = solutions.provenance["history"]
        summary = {"method": "nsga2", "front_size": len(solutions),
                   "final_generation": history[-1], "hv_reference": solutions.provenance["hv_reference"]}
        hyper = vars_of(problem.nsga2)

    summary.update(problem=problem.name, seed=seed, labels=list(problem.labels),
                   directions=list(problem.directions), warnings=warnings_seen)
    elapsed = time.perf_counter() - t0
    if args.record_timing:
        summary["wall_time_s"] = elapsed

    write_atomic(out, solutions.to_csv())
    write_atomic(summary_path, _dump(summary))
    outputs = [str(out), str(summary_path)]
    if args.svg:
        outputs += _write_svgs(solutions, stem, f"Problem {problem.name}: {args.method}")
    if args.progress:
        outputs.append(str(args.progress))
    manifest = {
        "command": "optimize",
        "argv": list(args.argv),
        "problem": problem.name if not args.config else str(args.config),
        "problem_config": problem.to_config(),
        "method": args.method,
        "hyperparameters": hyper,
        "seed": seed,
        "version": __version__,
        "outputs": outputs,
    }
    if args.record_timing:
        manifest["wall_time_s"] = elapsed
    write_atomic(manifest_path, _dump(manifest))
    for w in warnings_seen:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {len(solutions)} solution(s) to {out}")
    return 0


def vars_of(obj) -> dict:
    return asdict(obj)


# -- pareto ------------------------------------------------------------------------

def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_pareto(args) -> int:
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(str(exc)) from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise UsageError("empty CSV")
    header, body = rows[0], rows[1:]
    columns = _split_list(args.objectives)
    directions = [{"min": "minimize", "max": "maximize"}.get(d, d) for d in _split_list(args.directions)]
    if len(columns) != len(directions):
        raise UsageError("--objectives and --directions must have the same length")
    try:
        signs = direction_signs(directions)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    missing = [c for c in columns if c not in header]
    if missing:
        raise UsageError(f"columns not found in header: {missing}")
    cols = [header.index(c) for c in columns]

    values, kept_rows, bad = [], [], []
    for lineno, row in enumerate(body, start=2):
        if not row:
            continue
        try:
            if len(row) != len(header):
                raise ValueError
            vals = [float(row[c]) for c in cols]
            if not all(np.isfinite(vals)):
                raise ValueError
        except ValueError:
            bad.append(lineno)
            continue
        values.append(vals)
        kept_rows.append(row)
    if bad:
        raise UsageError(f"malformed rows at line(s): {', '.join(map(str, bad))}")
    if not kept_rows:
        raise UsageError("no data rows")
    mask = pareto_mask(np.array(values) * signs)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(r for r, keep in zip(kept_rows, mask) if keep)
    if args.out:
        write_atomic(Path(args.out), buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


# -- validate ----------------------------------------------------------------------

def cmd_validate(args) -> int:
    if args.strict is not None and not args.strict > 0:
        raise UsageError("--strict must be positive")
    report = validate_published(strict=args.strict)
    if args.json:
        sys.stdout.write(_dump(report.to_dict()))
    else:
        print(report.format())
    return 0 if report.passed else 1


# -- export ------------------------------------------------------------------------

def cmd_export(args) -> int:
    if args.what == "models":
        text = DEFAULT_REGISTRY.to_json() + "\n"
    else:
        text = builtin(args.name).to_json() + "\n"
    if args.out:
        write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sprayopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="predict coating properties at a parameter setting")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true", help="all eight models")
    g.add_argument("--model", action="append", help="model name (repeatable)")
    p.add_argument("--pfr", type=float, required=True, help="powder feed rate, g/min")
    p.add_argument("--sod", type=float, required=True, help="stand-off distance, mm")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="fuel-to-oxygen ratio")
    p.add_argument("--cv", type=float, required=True, help="coating velocity, m/min")
    p.add_argument("--tgf", type=float, required=True, help="total gas flow, nl/m")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("optimize", help="run one optimization method on a problem")
    p.add_argument("--problem", choices=BUILTIN_NAMES)
    p.add_argument("--config", help="problem config JSON (overrides --problem)")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--seed", type=int, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--pop", type=int, help="NSGA-II population size")
    p.add_argument("--gens", type=int, help="NSGA-II generations")
    p.add_argument("--step", type=float, help="weight lattice step")
    p.add_argument("--multistart", type=int, help="SQP starts per weight vector")
    p.add_argument("--restarts", type=int, help="desirability direct-search restarts")
    p.add_argument("--out", help="solution CSV path")
    p.add_argument("--summary", help="run summary JSON path (default: next to --out)")
    p.add_argument("--svg", action="store_true", help="also write objective-space SVG plots")
    p.add_argument("--progress", help="write per-generation NSGA-II records (JSON lines) here")
    p.add_argument("--record-timing", action="store_true",
                   help="store wall time in summary and manifest (breaks byte-identical reruns)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("pareto", help="keep the non-dominated rows of a CSV file")
    p.add_argument("input")
    p.add_argument("--objectives", required=True, help="comma-separated objective columns")
    p.add_argument("--directions", required=True, help="comma-separated min/max per objective")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("validate", help="compare model predictions with published values")
    p.add_argument("--strict", type=float, help="override every tolerance (relative, e.g. 0.001)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export", help="export the model registry or a built-in problem config as JSON")
    p.add_argument("what", choices=("models", "problem"))
    p.add_argument("name", nargs="?", default="I", choices=BUILTIN_NAMES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
