"""Command-line front end.

Every command writes one report (JSON by default, or a flat CSV projection) to
``--out`` or standard output.  JSON reports start with a ``meta`` object echoing the
run configuration and the schema tag ``tfconc-report-v1``; floats are written with
17 significant digits so identical runs give byte-identical files.

Exit codes: 0 success, 1 a verify check failed, 2 bad input or unmet hypothesis,
3 numeric failure, 4 construction failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import compactness, frames, separation
from .errors import ConstructionFailure, InvalidArgument
from .grid import Grid, corrupted_phase, make_grid, read_csv, write_csv
from .moments import concentration_report
from .systems import (
    SystemSpec,
    build_perturbed_exact,
    build_system,
    enumerate_exact_G0,
    enumerate_gabor,
    envelopes,
    gabor_atom,
    reconstruct_e,
)
from .verify import run_checks, tolerance_scale

SCHEMA = "tfconc-report-v1"
COMMANDS = ("analyze", "construct-exact", "separate", "compactness", "frame-bounds", "tail-sum", "verify")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC, EXIT_CONSTRUCTION = 0, 1, 2, 3, 4


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    grid_extent: float = 32.0
    grid_points: int = 4096
    p: float = 2.0
    q: float = 2.0
    output_path: str | None = None
    format: str = "json"
    seed: int = 0
    options: dict[str, Any] = field(default_factory=dict)

    def grid(self) -> Grid:
        return make_grid(self.grid_extent, self.grid_points)

    def to_dict(self) -> dict:
        return asdict(self)


# --- serialization --------------------------------------------------------------------------


def _float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = f"{x:.17g}"
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _plain(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON: insertion-ordered keys, 17-digit floats, two-space indent."""
    obj = _plain(obj)
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(v), (int, float, bool, str)) or v is None for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_float(v) if isinstance(v, float) else ("" if v is None else v) for v in (_plain(r[c]) for c in cols)])
    return buf.getvalue()


def _emit(cfg: RunConfig, payload: dict, rows: list[dict]) -> None:
    if cfg.format == "csv":
        text = _csv_text(rows)
    else:
        text = dumps({"meta": {"schema": SCHEMA, "config": cfg.to_dict()}, **payload}) + "\n"
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)


# --- system loading ---------------------------------------------------------------------------


def _load_system(path: str, grid: Grid, count: int | None):
    """Elements from a SystemSpec JSON (or a report embedding one) or a directory of sample CSVs."""
    src = Path(path)
    if src.is_dir():
        files = sorted(src.glob("*.csv"))
        if not files:
            raise InvalidArgument(f"no .csv files in {src}")
        elements = [read_csv(f) for f in files]
        if count is not None:
            elements = elements[:count]
        for f in elements:
            if f.grid != grid:
                raise InvalidArgument(f"samples live on {f.grid}, expected {grid}")
        return None, elements
    try:
        data = json.loads(src.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{src}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise InvalidArgument(f"{src}: expected a JSON object")
    data = data.get("system", data)
    if count is not None:
        data = {**data, "count": count}
    spec = SystemSpec.from_dict(data)
    if spec.kind == "gabor_exact_G0" and len(spec.indices) < spec.count:
        spec = enumerate_exact_G0(spec.count)
    elif spec.kind == "gabor_full" and len(spec.indices) < spec.count:
        spec = SystemSpec("gabor_full", spec.count, indices=enumerate_gabor(spec.count))
    elif spec.kind == "explicit":
        raise InvalidArgument("explicit systems are read from a directory of sample CSVs")
    return spec, build_system(grid, spec)


def _labels(spec: SystemSpec | None, n: int) -> list[list[int] | None]:
    if spec is not None and spec.kind in ("gabor_full", "gabor_exact_G0"):
        return [[i.m, i.n] for i in spec.indices[:n]]
    return [None] * n


# --- commands -----------------------------------------------------------------------------------


def cmd_analyze(cfg: RunConfig, args) -> int:
    spec, elements = _load_system(args.system, cfg.grid(), args.count)
    labels = _labels(spec, len(elements))
    reports = [concentration_report(f, cfg.p, cfg.q) for f in elements]
    out, rows = [], []
    for k, (lab, r) in enumerate(zip(labels, reports), start=1):
        entry = {"index": k}
        if lab is not None:
            entry["gabor_index"] = lab
        entry["report"] = r.to_dict()
        out.append(entry)
        rows.append({"index": k, "m": lab[0] if lab else None, "n": lab[1] if lab else None, **r.to_dict()})
    growth = separation.growth_certificate([r.freq_mean for r in reports])
    _emit(cfg, {"elements": out, "growth_certificate": growth}, rows)
    return EXIT_OK


def cmd_construct_exact(cfg: RunConfig, args) -> int:
    grid = cfg.grid()
    try:
        spec, elements = build_perturbed_exact(grid, args.count, args.epsilon, cfg.p, cfg.q)
    except ConstructionFailure as exc:
        raise CommandError(f"construction failed ({exc.condition} bound): {exc}", EXIT_CONSTRUCTION) from exc
    eps = args.epsilon
    ref = concentration_report(gabor_atom(grid, spec.indices[0]), cfg.p, cfg.q)
    out, rows, all_ok = [], [], True
    for k, (a, f) in enumerate(zip(spec.alphas, elements), start=1):
        r = concentration_report(f, cfg.p, cfg.q)
        bounds = {
            "time_mean": (abs(r.time_mean), eps),
            "freq_mean": (abs(r.freq_mean), eps),
            "time_dispersion": (r.time_dispersion, ref.time_dispersion + eps),
            "freq_dispersion": (r.freq_dispersion, ref.freq_dispersion + eps),
        }
        flags = {name: v < lim for name, (v, lim) in bounds.items()}
        alpha_ok = 0 < a < 2.0**-k
        all_ok = all_ok and all(flags.values()) and alpha_ok
        out.append(
            {
                "index": k,
                "alpha": a,
                "alpha_ok": alpha_ok,
                "report": r.to_dict(),
                "bounds": {n: {"value": v, "limit": lim, "ok": flags[n]} for n, (v, lim) in bounds.items()},
            }
        )
        rows.append({"index": k, "alpha": a, **r.to_dict(), **{f"{n}_ok": ok for n, ok in flags.items()}})
    pair = envelopes(elements)
    recon = max(
        (reconstruct_e((spec, elements), n) - gabor_atom(grid, spec.indices[n])).norm
        for n in range(1, spec.count + 1)
    )
    if args.dump_samples:
        d = Path(args.dump_samples)
        d.mkdir(parents=True, exist_ok=True)
        width = len(str(spec.count))
        for k, f in enumerate(elements, start=1):
            write_csv(f, d / f"f_{k:0{width}d}.csv")
    payload = {
        "system": spec.to_dict(),
        "elements": out,
        "envelopes": {"time_norm": pair.time_envelope_norm, "freq_norm": pair.freq_envelope_norm},
        "reconstruction_max_error": recon,
        "all_bounds_ok": all_ok,
    }
    _emit(cfg, payload, rows)
    if not all_ok:
        failed = next(n for e in out for n, b in e["bounds"].items() if not b["ok"])
        raise CommandError(f"bound {failed} violated", EXIT_CONSTRUCTION)
    return EXIT_OK


def cmd_separate(cfg: RunConfig, args) -> int:
    if bool(args.system) == bool(args.gram):
        raise InvalidArgument("give exactly one of --system and --gram")
    elements = None
    if args.gram:
        G = separation.read_gram_csv(args.gram)
    else:
        _, elements = _load_system(args.system, cfg.grid(), args.count)
        G = frames.gram_matrix(elements)
    if args.write_gram:
        separation.write_gram_csv(G, args.write_gram)
    counts = separation.coherence_counts(G)
    D = args.D if args.D is not None else float(counts.max() + 1)
    res = separation.greedy_separated_subset(G, D)
    payload = {
        "k": int(G.shape[0]),
        "coherence_counts": [int(c) for c in counts],
        "result": res.to_dict(),
    }
    if G.shape[0] <= 16:
        payload["max_separated_size"] = len(separation.max_separated_subset(G))
    if elements is not None:
        M = len(separation.greedy_half_net(elements))
        payload["covering"] = {"half_net_size": M, "bound": separation.covering_number_bound(M, D)}
    sel = set(res.selected)
    rows = [{"index": i + 1, "coherence_count": int(c), "selected": i in sel} for i, c in enumerate(counts)]
    _emit(cfg, payload, rows)
    return EXIT_OK


def cmd_compactness(cfg: RunConfig, args) -> int:
    grid = cfg.grid()
    _, elements = _load_system(args.system, grid, args.count)
    shifts = [k * grid.spacing for k in args.shift_steps]
    prof = compactness.duality_check(elements, shifts, args.radii)
    members = [compactness.kaq_membership(concentration_report(f, cfg.p, cfg.q), args.A) for f in elements]
    payload = {**prof.to_dict(), "A": args.A, "kaq_members": members}
    rows = [
        {"a": h.a, "R": h.R, "omega": h.omega, "dual_rho": h.dual_rho, "heuristic_bound": h.bound}
        for h in prof.heuristic
    ]
    _emit(cfg, payload, rows)
    return EXIT_OK


def cmd_frame_bounds(cfg: RunConfig, args) -> int:
    _, elements = _load_system(args.system, cfg.grid(), args.count)
    diag = frames.frame_diagnostics(elements)
    n = len(elements)
    sizes = args.sections or sorted({min(n, 2**j) for j in range(n.bit_length() + 1)} | {n})
    prof = frames.section_profile(elements, sizes)
    tests = frames.default_test_functions(elements, n_random=args.n_random, seed=cfg.seed)
    rs = frames.rs_check(elements, tests, args.r, args.s)
    payload = {
        "diagnostics": diag.to_dict(),
        "sections": [s.to_dict() for s in prof["sections"]],
        "lower_nonincreasing": prof["lower_nonincreasing"],
        "upper_nondecreasing": prof["upper_nondecreasing"],
        "rs_check": rs.to_dict(),
    }
    if args.A is not None:
        payload["obstruction"] = frames.obstruction_report(
            elements, cfg.p, cfg.q, args.r, args.s, args.A, test_functions=tests
        ).to_dict()
    _emit(cfg, payload, [s.to_dict() for s in prof["sections"]])
    return EXIT_OK


def cmd_tail_sum(cfg: RunConfig, args) -> int:
    rows = []
    for N in args.N:
        t = frames.tail_sum_detail(N, args.A, args.c, cfg.p, cfg.q, args.r, args.n_max)
        rows.append({"N": t.N, "partial": t.partial, "remainder": t.remainder, "total": t.total})
    _emit(cfg, {"rows": rows}, rows)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    grid = cfg.grid()
    if args.corrupt_fft_phase:
        with corrupted_phase(args.corrupt_fft_phase):
            results = run_checks(grid, cfg.seed)
    else:
        results = run_checks(grid, cfg.seed)
    rows = [r.to_dict() for r in results]
    counts = {s: sum(r.status == s for r in results) for s in ("PASS", "FAIL", "SKIP")}
    payload = {"tolerance_scale": tolerance_scale(grid.n_points), "summary": counts, "checks": rows}
    _emit(cfg, payload, rows)
    print(
        f"{len(results)} checks: {counts['PASS']} passed, {counts['FAIL']} failed, {counts['SKIP']} skipped",
        file=sys.stderr,
    )
    failed = [r for r in results if r.status == "FAIL"]
    if failed:
        f = failed[0]
        raise CommandError(f"check {f.name} failed (value {f.value}, tolerance {f.tolerance}) {f.detail}".rstrip(), EXIT_CHECK)
    return EXIT_OK


HANDLERS = {
    "analyze": cmd_analyze,
    "construct-exact": cmd_construct_exact,
    "separate": cmd_separate,
    "compactness": cmd_compactness,
    "frame-bounds": cmd_frame_bounds,
    "tail-sum": cmd_tail_sum,
    "verify": cmd_verify,
}


# --- argument parsing -----------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    def d(v):
        return argparse.SUPPRESS if suppress else v

    p.add_argument("--grid-extent", type=float, default=d(32.0), help="window length T (default 32)")
    p.add_argument("--grid-points", type=int, default=d(4096), help="number of samples, a power of two (default 4096)")
    p.add_argument("--p", type=float, default=d(2.0), help="time exponent, > 1 (default 2)")
    p.add_argument("--q", type=float, default=d(2.0), help="frequency exponent, > 1 (default 2)")
    p.add_argument("--out", default=d(None), help="output file (default: standard output)")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))
    p.add_argument("--seed", type=int, default=d(0), help="seed for randomized parts (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfconc", description=__doc__.split("\n\n")[0])
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p, suppress=True)
        return p

    p = add("analyze", "concentration report of every element")
    p.add_argument("--system", required=True, help="SystemSpec JSON or directory of sample CSVs")
    p.add_argument("--count", type=int)

    p = add("construct-exact", "build the perturbed exact system with concentration bounds")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--dump-samples", metavar="DIR", help="also write element samples as CSV files")

    p = add("separate", "coherence counts and a greedy well-separated subset")
    p.add_argument("--system")
    p.add_argument("--gram", help="Gram matrix CSV")
    p.add_argument("--count", type=int)
    p.add_argument("--D", type=float, help="coherence bound (default: largest count + 1)")
    p.add_argument("--write-gram", metavar="PATH")

    p = add("compactness", "shift and decay moduli and compact-set membership")
    p.add_argument("--system", required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--shift-steps", type=int, nargs="+", default=[0, 1, 2, 4, 8, 16, 32, 64],
                   help="shifts as multiples of the grid spacing")
    p.add_argument("--radii", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0])
    p.add_argument("--A", type=float, default=1.0)

    p = add("frame-bounds", "finite-section frame bounds and (l^r, l^s) constants")
    p.add_argument("--system", required=True)
    p.add_argument("--count", type=int)
    p.add_argument("--sections", type=int, nargs="+")
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--A", type=float, help="also report the cap premises with this bound")
    p.add_argument("--n-random", type=int, default=10)

    p = add("tail-sum", "certified upper estimate of the coefficient tail series")
    p.add_argument("--N", type=float, nargs="+", required=True)
    p.add_argument("--A", type=float, default=0.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--n-max", type=int, default=10**6)

    p = add("verify", "run the invariant suite")
    p.add_argument("--corrupt-fft-phase", type=float, nargs="?", const=1e-3, default=0.0, help=argparse.SUPPRESS)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    opts = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "grid_extent", "grid_points", "p", "q", "out", "format", "seed", "corrupt_fft_phase")
    }
    cfg = RunConfig(
        command=args.command,
        grid_extent=args.grid_extent,
        grid_points=args.grid_points,
        p=args.p,
        q=args.q,
        output_path=args.out,
        format=args.format,
        seed=args.seed,
        options=opts,
    )
    try:
        if not (cfg.p > 1 and cfg.q > 1):
            raise InvalidArgument(f"p and q must exceed 1 (got p = {cfg.p}, q = {cfg.q})")
        return HANDLERS[args.command](cfg, args)
    except CommandError as exc:
        print(f"tfconc {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except ConstructionFailure as exc:
        print(f"tfconc {args.command}: construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except (InvalidArgument, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"tfconc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArithmeticError as exc:
        print(f"tfconc {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
