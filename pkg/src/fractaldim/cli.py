"""Command-line front end: ``fractaldim {gen,dim,qlim,check}``.

Data goes to stdout (or ``--out``) as CSV or strict JSON; human-readable
summaries go to stderr. Exit codes: 0 ok, 1 identity violated, 2 bad input,
3 no usable fit window.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .digit_fractal import (
    DigitSchedule,
    Partition,
    cantor,
    dumps_schedule,
    loads_schedule,
    make_floor_power,
    make_ngrowth,
    make_rational_dim,
    product_schedule,
    sample_points,
    schedule_hash,
)
from .dimension import (
    DimensionReport,
    analytic_limsup,
    classical_dims,
    content_dimension_check,
    default_depth,
    oracle_for,
    parse_scales,
    product_summability_check,
    qdim,
    ratio_sequence,
)
from .dyadic_cover import (
    random_cloud,
    read_csv,
    sandwich_check,
    write_csv,
)
from .errors import FitWindowError, FractalDimError
from .estimator import estimate_dimension
from .ultrafilter import DEFAULT_TOL, axiom_audit, make_oracle, qlim, random_queries, random_sequences


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config_hash(args: argparse.Namespace, inputs: dict[str, str]) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "func")}
    cfg["inputs"] = {k: hashlib.sha256(v.encode()).hexdigest() for k, v in sorted(inputs.items())}
    cfg["version"] = __version__
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def _dump_json(obj: dict, args: argparse.Namespace, inputs: dict[str, str]) -> None:
    obj = dict(obj)
    obj["config_hash"] = _config_hash(args, inputs)
    _emit(json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n", args.out)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read_source(spec: str) -> str:
    """Inline JSON, or a path to a file."""
    if spec.lstrip().startswith("{"):
        return spec
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"no such file: {spec}")
    return path.read_text()


def _parse_seeds(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--seeds expects 'a,b', got {text!r}") from None
    return a, b


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _falconer_pair(args) -> tuple[Partition, Partition]:
    part = make_ngrowth(*_parse_seeds(args.seeds))
    return Partition(part, "A"), Partition(part, "B")


# -- gen -------------------------------------------------------------------------

def _gen_schedule(args) -> tuple[DigitSchedule, list[str]]:
    kind = args.kind
    if kind == "cantor":
        return cantor(), ["cantor: base 3, digits {0,2}"]
    if kind == "blocks":
        _require(args, "base", "r", "s")
        return make_rational_dim(args.base, args.r, args.s), [f"rational dimension {args.r}/{args.s} in base {args.base}"]
    if kind == "floorpow":
        _require(args, "base", "r", "s")
        fp = make_floor_power(args.base, args.r, args.s)
        return fp.schedule, [f"floor power F={fp.schedule.f}: dimension {fp.dimension!r}, "
                             f"target {fp.target}, gap {fp.gap!r}, bound {fp.bound!r}"]
    if kind == "ngrowth":
        part = make_ngrowth(*_parse_seeds(args.seeds))
        role = args.role or "A"
        sched = Partition(part, role, base=args.base or 2, preview_blocks=args.blocks)
        return sched, [f"ngrowth seeds {args.seeds}, role {role}"]
    raise UsageError(f"unknown generator {kind!r}")


def cmd_gen(args) -> int:
    sched, notes = _gen_schedule(args)
    if args.depth is None:
        for n in notes:
            _say(n)
        _emit(dumps_schedule(sched), args.out)
        return 0
    cloud = sample_points(sched, args.depth)
    header = [f"fractaldim {__version__} gen {args.kind}", f"schedule_sha256 {schedule_hash(sched)}",
              f"depth {args.depth}", *notes]
    _emit(write_csv(cloud, header), args.out)
    _say(f"{len(cloud)} points")
    return 0


# -- dim ----------------------------------------------------------------------------

def _load_schedule(args) -> tuple[DigitSchedule, dict[str, str]]:
    if args.falconer:
        a, _ = _falconer_pair(args)
        sched = Partition(a.partition, args.role or "A")
        return sched, {}
    if args.schedule is None:
        raise UsageError("provide --schedule (JSON text or path)")
    text = _read_source(args.schedule)
    return loads_schedule(text), {"schedule": text}


def _scales_for(args, sched: DigitSchedule):
    parts = {p for p, _ in sched.partitions()}
    return parse_scales(args.scales, sched.base, next(iter(parts)) if len(parts) == 1 else None)


def cmd_dim(args) -> int:
    method = args.method
    if method == "boxcount":
        if args.points is not None:
            text = _read_source(args.points)
            cloud, inputs = read_csv(text), {"points": text}
        else:
            sched, inputs = _load_schedule(args)
            _require(args, "depth")
            cloud = sample_points(sched, args.depth)
        table, fit = estimate_dimension(cloud)
        report = DimensionReport(fit.slope, fit.slope, "undetermined", table.levels[-1], "boxcount-regression",
                                 provenance={"fit": fit.to_json(), "n_points": len(cloud)})
        _say(f"box-count slope {fit.slope:.6f} over levels {fit.levels_used[0]}..{fit.levels_used[1]}")
        _dump_json(report.to_json(), args, inputs)
        return 0

    sched, inputs = _load_schedule(args)
    depth = args.depth or default_depth(sched)
    if method == "exact":
        report = classical_dims(sched, depth)
    elif method == "qlim":
        scales = _scales_for(args, sched)
        oracle = oracle_for(args.oracle, sched, scales)
        report = classical_dims(sched, depth)
        report.method = "qlim"
        report.qdim = qdim(sched, scales, oracle, args.tol)
        report.oracle = args.oracle
        report.tol = args.tol
        report.provenance.update(scales=scales.describe(), horizon=oracle.horizon, commits=len(oracle.ledger))
    elif method == "content":
        k = sched.ambient_dim
        grid = [i / 100 for i in range(0, 100 * k + 1)]
        content = content_dimension_check(sched, grid, min(depth, 10**4))
        report = classical_dims(sched, min(depth, 10**4))
        report.method = "content"
        report.provenance.update(bracket=list(content.bracket), contains_limsup=content.contains_limsup,
                                 monotone=content.monotone)
    else:
        raise UsageError(f"unknown method {method!r}")
    _say(f"limsup {report.limsup_est:.6f}  liminf {report.liminf_est:.6f}  exists {report.classical_exists}"
         + (f"  qdim {report.qdim:.9f}" if report.qdim is not None else ""))
    _dump_json(report.to_json(), args, inputs)
    return 0


# -- qlim -----------------------------------------------------------------------------

def cmd_qlim(args) -> int:
    sched, inputs = _load_schedule(args)
    scales = _scales_for(args, sched)
    oracle = oracle_for(args.oracle, sched, scales)
    seq = ratio_sequence(sched, scales)
    value = qlim(seq, oracle, args.tol)
    out = {"qlim": value, "tol": args.tol, "oracle": args.oracle, "scales": scales.describe(),
           "horizon": oracle.horizon, "ledger": oracle.ledger_json()}
    _say(f"qlim {value:.12f} ({len(oracle.ledger)} commits)")
    _dump_json(out, args, inputs)
    return 0


# -- check -----------------------------------------------------------------------------

def _check_product(args) -> tuple[dict, bool, dict]:
    inputs: dict[str, str] = {}
    if args.falconer:
        a, b = _falconer_pair(args)
    else:
        _require(args, "a", "b")
        ta, tb = _read_source(args.a), _read_source(args.b)
        a, b = loads_schedule(ta), loads_schedule(tb)
        inputs = {"a": ta, "b": tb}
    ab = product_schedule(a, b)
    scales = _scales_for(args, ab)
    oracle = oracle_for(args.oracle, ab, scales)
    rep = product_summability_check(a, b, scales, oracle, args.tol, args.depth)
    out = rep.to_json()
    ok = rep.passed
    if rep.classical_discrepancy is not None:
        out["classical_identity_passed"] = rep.classical_discrepancy <= 1e-9
        ok = ok and out["classical_identity_passed"]
    if args.falconer:
        # the product ratio is exactly one because f_A(m) + f_B(m) = m
        part = a.partition
        probe = sorted(set(range(1, 1001)) | set(part.ends_upto(part.block_end(15))))
        exact = all(a.f(m) + b.f(m) == m for m in probe)
        out["product_ratio_identity"] = exact
        out["limsup_sum_analytic"] = analytic_limsup(a) + analytic_limsup(b)
        out["limsup_product_analytic"] = 1.0 if exact else None
        ok = ok and exact
    _say(f"|qdim(AxB) - qdim(A) - qdim(B)| = {rep.discrepancy:.3e} (2 tol = {2 * args.tol:.3e})")
    return out, ok, inputs


def _check_sandwich(args) -> tuple[dict, bool, dict]:
    max_level = args.depth if args.depth is not None else 12
    inputs: dict[str, str] = {}
    if args.points is not None:
        text = _read_source(args.points)
        clouds = [read_csv(text)]
        inputs["points"] = text
    else:
        rng = np.random.default_rng(args.seed)
        clouds = [random_cloud(rng, int(rng.integers(1, 201))) for _ in range(args.clouds)]
    failures = []
    checks = 0
    for ci, cloud in enumerate(clouds):
        for level in range(0, max_level + 1):
            r = sandwich_check(cloud, Fraction(1, 2**level))
            checks += 1
            if not r.passed:
                failures.append({"cloud": ci, "level": level, "cube_count": r.cube_count, "dyadic": r.dyadic})
    _say(f"{checks} sandwich checks, {len(failures)} failures")
    return {"checks": checks, "failures": failures[:50], "passed": not failures}, not failures, inputs


def _check_oracle(args) -> tuple[dict, bool, dict]:
    spec = args.spec or args.oracle
    blockends = None
    if spec.startswith("tail:blockends"):
        a, _ = _falconer_pair(args)
        from .dimension import ScaleSequence
        blockends = ScaleSequence("every-m").blockend_sets(a.partition)
    oracle = make_oracle(spec, blockends=blockends)
    rng = np.random.default_rng(args.seed)
    seqs = random_sequences(rng, 8, oracle.horizon)
    random_queries(oracle, seqs, args.queries, rng)
    report = axiom_audit(oracle, seed=args.seed)
    _say(f"{report.checks} axiom checks, {len(report.violations)} violations, {len(oracle.ledger)} commits")
    out = {"spec": spec, "queries": args.queries, "checks": report.checks,
           "violations": report.violations, "commits": len(oracle.ledger), "clean": report.clean}
    return out, report.clean, {}


def _check_content(args) -> tuple[dict, bool, dict]:
    sched, inputs = _load_schedule(args)
    k = sched.ambient_dim
    grid = [i / 100 for i in range(0, 100 * k + 1)]
    rep = content_dimension_check(sched, grid, args.depth or 1000)
    exact = sched.analytic_dimension()
    ok = rep.contains_limsup and rep.monotone and (exact is None or rep.contains(exact))
    out = {"bracket": list(rep.bracket), "limsup_est": rep.limsup_est, "contains_limsup": rep.contains_limsup,
           "dimension": exact, "monotone": rep.monotone, "depth": rep.depth, "passed": ok}
    _say(f"M^s transition bracket [{rep.bracket[0]:.2f}, {rep.bracket[1]:.2f}]")
    return out, ok, inputs


def cmd_check(args) -> int:
    handlers = {"product": _check_product, "sandwich": _check_sandwich,
                "oracle": _check_oracle, "content": _check_content}
    out, ok, inputs = handlers[args.what](args)
    out["verdict"] = "pass" if ok else "fail"
    _dump_json(out, args, inputs)
    return 0 if ok else 1


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fractaldim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the primary output here instead of stdout")
        sp.add_argument("--depth", type=int)
        sp.add_argument("--base", type=int)
        sp.add_argument("--seeds", default="1,1", help="ngrowth seeds a,b")
        sp.add_argument("--role", choices=["A", "B"])
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized commands")

    def analysis(sp):
        sp.add_argument("--schedule", help="schedule JSON text or path")
        sp.add_argument("--falconer", action="store_true", help="use the ngrowth pair built from --seeds")
        sp.add_argument("--oracle", default="lazy")
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        sp.add_argument("--scales", default="every-m")

    g = sub.add_parser("gen", help="generate a schedule JSON or a sampled point cloud")
    g.add_argument("kind", choices=["cantor", "blocks", "floorpow", "ngrowth"])
    common(g)
    g.add_argument("--r", type=int)
    g.add_argument("--s", type=int)
    g.add_argument("--blocks", type=int, help="ngrowth: number of block pairs to list")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("dim", help="dimension report")
    common(d)
    analysis(d)
    d.add_argument("--method", choices=["exact", "qlim", "boxcount", "content"], default="exact")
    d.add_argument("--points", help="point-cloud CSV (boxcount)")
    d.set_defaults(func=cmd_dim)

    q = sub.add_parser("qlim", help="Q-limit of a schedule's ratio sequence")
    common(q)
    analysis(q)
    q.set_defaults(func=cmd_qlim)

    c = sub.add_parser("check", help="identity checks; exit 1 on violation")
    c.add_argument("what", choices=["product", "sandwich", "oracle", "content"])
    common(c)
    analysis(c)
    c.add_argument("--a", help="first factor schedule (JSON text or path)")
    c.add_argument("--b", help="second factor schedule (JSON text or path)")
    c.add_argument("--points", help="1-D point-cloud CSV (sandwich)")
    c.add_argument("--clouds", type=int, default=100, help="random clouds (sandwich)")
    c.add_argument("--spec", help="oracle spec (oracle); same as --oracle")
    c.add_argument("--queries", type=int, default=500)
    c.set_defaults(func=cmd_check)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "gen" and getattr(args, "tol", 1.0) is not None and not args.tol > 0:
        _say("error: --tol must be positive")
        return 2
    try:
        return args.func(args)
    except FitWindowError as exc:
        _say(f"error: {exc}")
        return 3
    except (FractalDimError, UsageError, ValueError, json.JSONDecodeError, OSError) as exc:
        _say(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
