"""Command-line entry point: ``obliq <subcommand> ...``.

Every subcommand prints a short summary and, with ``--out``, writes a JSON
report of the form ``{"manifest": ..., "result": ..., "metadata": ...}``.
Only ``metadata`` (wall time, timestamp) varies between identical runs.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int | None
    workers: int
    version: str = field(default_factory=tool_version)
    inputs: dict[str, str] = field(default_factory=dict)  # path -> sha256


def write_report(path, manifest: RunManifest, result: dict, wall_time: float) -> None:
    doc = {
        "manifest": asdict(manifest),
        "result": result,
        "metadata": {"wall_time": wall_time,
                     "finished": _dt.datetime.now(_dt.timezone.utc).isoformat()},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


# --- subcommands ---------------------------------------------------------------------

def cmd_verify(args) -> tuple[dict, int]:
    from .bound import verify_ratio
    from .stepfn import check_budget, load_gh
    gh = load_gh(args.gh)
    chk = check_budget(gh)
    if not chk.ok:
        print(f"budget violated by {chk.max_violation:.3g} at {chk.witness}", file=sys.stderr)
        return {"budget_ok": False, "max_violation": chk.max_violation, "witness": list(chk.witness)}, EXIT_CHECK_FAILED
    rep = verify_ratio(gh, args.workers, prune=not args.no_prune)
    out = rep.to_dict()
    out["wall_time"] = rep.wall_time  # moved to metadata by the caller
    print(f"n={gh.n} ratio {rep.ratio:.6f}  theta={list(rep.argmin_theta.levels)} "
          f"beta={list(rep.argmin_beta.levels)}  evaluated {rep.pairs_evaluated} pruned {rep.pairs_pruned}")
    return out, EXIT_OK


def cmd_optimize(args) -> tuple[dict, int]:
    from .opt import constraint_generation, export_qcqp, initial_model
    from .stepfn import load_gh
    start = load_gh(args.gh) if args.gh else None
    model = initial_model(args.n)
    res = constraint_generation(args.n, max_rounds=args.rounds, start=start, workers=args.workers, model=model)
    if args.export:
        export_qcqp(model, args.export)
    if args.gh_out:
        Path(args.gh_out).write_text(res.gh.to_json() + "\n")
    print(f"n={args.n} certified {res.ratio:.6f} after {res.rounds} rounds "
          f"({'converged' if res.converged else 'not converged'}), {res.active_pairs} active pairs")
    out = {"n": args.n, "ratio": res.ratio, "rounds": res.rounds, "converged": res.converged,
           "active_pairs": res.active_pairs, "G": list(res.gh.G), "H": list(res.gh.H),
           "history": [list(h) for h in res.history]}
    return out, EXIT_OK


def cmd_export(args) -> tuple[dict, int]:
    from .opt import export_qcqp, full_model, initial_model
    model = full_model(args.n) if args.full else initial_model(args.n)
    target = args.export
    if not target:
        raise UsageError("export-qcqp needs --export <file>")
    export_qcqp(model, target)
    print(f"wrote {len(model.active_pairs)} ratio constraints for n={args.n} to {target}")
    return {"n": args.n, "ratio_constraints": len(model.active_pairs), "file": str(target)}, EXIT_OK


def cmd_simulate(args) -> tuple[dict, int]:
    from .ranking import Instance, instance_report
    from .stepfn import load_gh
    inst = Instance.from_json(Path(args.instance).read_text())
    gh = load_gh(args.gh)
    rep = instance_report(inst, gh, args.samples, args.seed)
    for e in rep["edges"]:
        print(f"edge ({e['u']},{e['v']}): mean {e['mean']:.5f} +- {e['stderr']:.5f}")
    ok = rep["checks"]["dual_accounting"]
    print("dual accounting", "ok" if ok else "FAILED")
    return rep, EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_hardness(args) -> tuple[dict, int]:
    from .hardness import HardFamily, optimal_adaptive_value, ranking_exact_value
    fam = HardFamily.parse(args.family)
    res = optimal_adaptive_value(fam, canonical=not args.no_canon)
    print(f"{_frac(res.expected_matched)} (ratio {_frac(res.ratio)})  = {float(res.ratio):.6f}")
    print(f"states {res.stats.states}, memo hits {res.stats.memo_hits}, embeddings {res.stats.embeddings}")
    out = {"family": args.family, "expected_matched": _frac(res.expected_matched),
           "ratio": _frac(res.ratio), "ratio_decimal": float(res.ratio),
           "states": res.stats.states, "memo_hits": res.stats.memo_hits,
           "embeddings": res.stats.embeddings}
    if args.ranking:
        rk = ranking_exact_value(fam)
        same = rk.expected_matched == res.expected_matched
        print(f"ranking {_frac(rk.expected_matched)} (ratio {_frac(rk.ratio)}) "
              f"{'matches' if same else 'differs from'} the adaptive optimum")
        out["ranking"] = {"expected_matched": _frac(rk.expected_matched), "ratio": _frac(rk.ratio),
                          "matches_optimum": same}
    return out, EXIT_OK


def cmd_analytic(args) -> tuple[dict, int]:
    from .analytic import AnalyticParams, reference_checks
    params = AnalyticParams(args.a, args.b, args.c)
    checks = reference_checks(params, args.grid)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.name}: {c.value:.6f} ({c.relation} {c.reference})")
    rows = [{"name": c.name, "value": float(c.value), "reference": c.reference,
             "relation": c.relation, "tol": c.tol, "pass": bool(c.ok)} for c in checks]
    ok = all(c.ok for c in checks)
    return {"params": asdict(params), "checks": rows, "all_pass": ok}, EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_selftest(args) -> tuple[dict, int]:
    from .selftest import run_selftest
    results = run_selftest()
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    failed = [n for n, ok in results if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} passed")
    return {"results": [{"name": n, "pass": ok} for n, ok in results]}, EXIT_CHECK_FAILED if failed else EXIT_OK


COMMANDS = {
    "verify": cmd_verify, "optimize": cmd_optimize, "simulate": cmd_simulate,
    "hardness": cmd_hardness, "analytic": cmd_analytic, "export-qcqp": cmd_export,
    "selftest": cmd_selftest,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def build_parser() -> argparse.ArgumentParser:
    from .bound import default_workers
    p = _Parser(prog="obliq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=tool_version())
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(sp, seed=False):
        sp.add_argument("--out", help="write the JSON report here")
        sp.add_argument("--workers", type=int, default=default_workers(),
                        help="threads for the exhaustive search (default: $OBLIQ_WORKERS or 1)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("verify", help="certify the ratio of a step-function pair")
    sp.add_argument("--gh", required=True, help="gh JSON or CSV file")
    sp.add_argument("--no-prune", action="store_true", help="evaluate redundant pairs too")
    common(sp)

    sp = sub.add_parser("optimize", help="constraint generation for n segments")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--rounds", type=int, default=50)
    sp.add_argument("--gh", help="start from this pair instead of the default start")
    sp.add_argument("--export", help="write the final active model as QCQP text")
    sp.add_argument("--gh-out", help="write the best pair as gh JSON")
    common(sp)

    sp = sub.add_parser("export-qcqp", help="write the initial (or full) model as QCQP text")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--export", help="output model file")
    sp.add_argument("--full", action="store_true", help="include every pair of S_n x S_n")
    common(sp)

    sp = sub.add_parser("simulate", help="Monte-Carlo dual estimates on an instance")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--gh", required=True)
    sp.add_argument("--samples", type=int, default=10_000)
    common(sp, seed=True)

    sp = sub.add_parser("hardness", help="exact adaptive optimum on a hard family")
    sp.add_argument("--family", required=True,
                    help="warmup, h<n> (bipartite) or hhat<n> (general), e.g. h3, hhat2")
    sp.add_argument("--no-canon", action="store_true", help="memoize on raw outcomes")
    sp.add_argument("--ranking", action="store_true", help="also compute Ranking's exact value")
    common(sp)

    sp = sub.add_parser("analytic", help="numeric checks for the closed-form pair")
    sp.add_argument("--a", type=float, default=1.171)
    sp.add_argument("--b", type=float, default=0.339)
    sp.add_argument("--c", type=float, default=0.652)
    sp.add_argument("--grid", type=float, default=1e-3)
    common(sp)

    sp = sub.add_parser("selftest", help="run the built-in worked examples")
    common(sp)
    return p


def _resolved_config(args) -> dict:
    skip = {"command", "out", "workers", "seed"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    inputs = {str(getattr(args, k)): file_digest(getattr(args, k))
              for k in ("gh", "instance") if getattr(args, k, None)
              and Path(getattr(args, k)).is_file()}
    for k in ("gh", "instance"):
        v = getattr(args, k, None)
        if v and str(v) not in inputs:
            print(f"obliq: no such file: {v}", file=sys.stderr)
            return EXIT_USAGE
    manifest = RunManifest(args.command, _resolved_config(args), getattr(args, "seed", None), args.workers,
                           inputs=inputs)
    t0 = time.perf_counter()
    try:
        result, code = COMMANDS[args.command](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as e:
        print(f"obliq {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    wall = result.pop("wall_time", None)
    wall = time.perf_counter() - t0 if wall is None else wall
    if args.out:
        write_report(args.out, manifest, result, wall)
    return code


if __name__ == "__main__":
    sys.exit(main())
