"""Command-line interface: spine, temper, cohomology, hecke, verify.

Every command writes one deterministic JSON document (sorted keys, exact
rationals as ``"p/q"`` strings, a ``schema_version`` field) and prints a short
table.  Errors go to stderr as JSON with a nonzero exit code:
2 validation, 3 bad prime, 4 stage failure, 5 budget exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BAD_PRIME = 3
EXIT_STAGE = 4
EXIT_BUDGET = 5

log = logging.getLogger("tempered_spine")


class CLIError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra


# --- argument parsing ------------------------------------------------------------


def parse_matrix(text: str, n: int):
    """'1,2' -> diag(1,2); '1,0;0,2' -> full matrix given by rows."""
    try:
        if ";" in text:
            rows = [[int(x) for x in r.split(",")] for r in text.split(";")]
        else:
            diag = [int(x) for x in text.split(",")]
            if len(diag) != n:
                raise ValueError
            rows = [[diag[i] if i == j else 0 for j in range(n)] for i in range(n)]
    except ValueError:
        raise CLIError(EXIT_VALIDATION, "validation", f"cannot parse matrix {text!r} for n={n}")
    if len(rows) != n or any(len(r) != n for r in rows):
        raise CLIError(EXIT_VALIDATION, "validation", f"matrix {text!r} is not {n}x{n}")
    return tuple(tuple(r) for r in rows)


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tempered-spine", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--n", type=int, default=2, help="rank (2 or 3)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--cache", default=None, help="cache directory (env TEMPERED_SPINE_CACHE overrides)")
        sp.add_argument("--jobs", type=_positive, default=1, help="parallel slice builds (accepted; builds run serially)")
        sp.add_argument("--budget-waves", type=_positive, default=200, help="breadth-first wave budget per context")
        sp.add_argument("--budget-events", type=_positive, default=64, help="maximum number of critical parameters")

    sp = sub.add_parser("spine", help="build the chunk and orbit tables")
    common(sp)
    sp.add_argument("--contexts", default="gamma", help="comma list of gamma, borel, parabolic, hecke")
    sp.add_argument("--a", default=None, help="Hecke element for the hecke context")

    sp = sub.add_parser("temper", help="critical temperaments for a Hecke element")
    common(sp)
    sp.add_argument("--a", required=True, help="diagonal '1,2' or rows '1,0;0,2'")

    sp = sub.add_parser("cohomology", help="interior and boundary cohomology")
    common(sp)
    sp.add_argument("--coeff", default="trivial", help="trivial or sym:k[,e]")
    sp.add_argument("--field", default="Q", help="Q or Fp:p")
    sp.add_argument("--target", choices=["interior", "boundary", "both"], default="interior")

    sp = sub.add_parser("hecke", help="Hecke operator across the temperament ladder")
    common(sp)
    sp.add_argument("--a", required=True, help="diagonal '1,2' or rows '1,0;0,2'")
    sp.add_argument("--coeff", default="trivial")
    sp.add_argument("--field", default="Q")
    sp.add_argument("--target", choices=["interior", "boundary", "both"], default="interior")
    sp.add_argument("--verify-cubes", action="store_true", help="check every cube face (needs the boundary)")

    sp = sub.add_parser("verify", help="run the structural self-checks")
    common(sp)
    sp.add_argument("--coeff", default="trivial")
    sp.add_argument("--field", default="Q")
    return p


# --- output helpers ----------------------------------------------------------------


def _jsonable(obj):
    from gmpy2 import mpq

    from tempered_spine.linalg import rat_str

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, type(mpq(1))):
        return rat_str(obj)
    try:
        return rat_str(obj)
    except (TypeError, ValueError):
        return str(obj)


def dumps(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def _cache_dir(args):
    env = os.environ.get("TEMPERED_SPINE_CACHE")
    path = env or args.cache
    return Path(path) if path else None


def _config_key(args) -> dict:
    skip = {"out", "cache", "jobs", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _run_cached(args, compute):
    cache = _cache_dir(args)
    key = hashlib.sha256(json.dumps(_config_key(args), sort_keys=True).encode()).hexdigest()[:24]
    if cache is not None:
        f = cache / f"{args.command}-{key}.json"
        if f.exists():
            return f.read_text()
    text = dumps({"schema_version": SCHEMA_VERSION, "command": args.command, "config": _config_key(args), **compute()})
    if cache is not None:
        cache.mkdir(parents=True, exist_ok=True)
        (cache / f"{args.command}-{key}.json").write_text(text)
    return text


def _write(args, name: str, text: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _check_n(n: int):
    from tempered_spine.spine import SUPPORTED_N

    if n not in SUPPORTED_N:
        raise CLIError(EXIT_VALIDATION, "validation", f"unsupported n={n}; supported: {list(SUPPORTED_N)}")


def _coefficients(args):
    from tempered_spine.equivariant import CoefficientModule
    from tempered_spine.linalg import parse_field

    try:
        K = parse_field(args.field)
        return CoefficientModule.parse(args.coeff, args.n, K)
    except ValueError as exc:
        raise CLIError(EXIT_VALIDATION, "validation", str(exc))


# --- commands -------------------------------------------------------------------------


def cmd_spine(args) -> int:
    from tempered_spine.lattice import TemperedWeight, WeightSystem
    from tempered_spine.spine import build_chunk, orbit_table, standard_contexts

    _check_n(args.n)
    names = [c.strip() for c in args.contexts.split(",") if c.strip()]
    if "gamma" not in names:
        names = ["gamma"] + names
    a = parse_matrix(args.a, args.n) if args.a else None
    if "hecke" in names and a is None:
        raise CLIError(EXIT_VALIDATION, "validation", "the hecke context needs --a")

    def compute():
        try:
            ctxs = standard_contexts(args.n, names, a)
        except ValueError as exc:
            raise CLIError(EXIT_VALIDATION, "validation", str(exc))
        chunk = build_chunk(args.n, TemperedWeight(WeightSystem(args.n)), ctxs, wave_budget=args.budget_waves)
        tables = [orbit_table(chunk, c) for c in ctxs]
        return {
            "chunk": chunk.to_json(tables),
            "summary": [
                {"context": t.context.name, "orbits": t.counts(), "stabilizer_orders": t.stabilizer_orders()}
                for t in tables
            ],
        }

    text = _run_cached(args, compute)
    path = _write(args, f"spine_n{args.n}.json", text)
    doc = json.loads(text)
    for row in doc["summary"]:
        print(f"{row['context']:<40} orbits {row['orbits']}  stabilizers {row['stabilizer_orders']}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_temper(args) -> int:
    from tempered_spine.tempered import critical_temperaments, ladder_top

    _check_n(args.n)
    a = parse_matrix(args.a, args.n)

    def compute():
        try:
            ladder = critical_temperaments(
                args.n, a, budget_events=args.budget_events, wave_budget=args.budget_waves
            )
        except ValueError as exc:
            raise CLIError(EXIT_VALIDATION, "validation", str(exc))
        s0, bij = ladder_top(ladder)
        slices = []
        for s in ladder.s_values + ladder.sample_points:
            sl = ladder.slice(s)
            slices.append(
                {"s": s, "orbits": {c.name: t.counts() for c, t in sorted(sl.tables.items(), key=lambda kv: kv[0].name)}}
            )
        return {"ladder": ladder.to_json(), "slices": sorted(slices, key=lambda r: r["s"]), "top": bij.to_json()}

    text = _run_cached(args, compute)
    path = _write(args, f"ladder_n{args.n}.json", text)
    doc = json.loads(text)
    print("critical parameters:", ", ".join(doc["ladder"]["s_events"]))
    print("samples:           ", ", ".join(doc["ladder"]["samples"]))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_cohomology(args) -> int:
    from tempered_spine.boundary import e1_page, e2_page
    from tempered_spine.hecke import base_complex, base_psi

    _check_n(args.n)
    rho = _coefficients(args)
    targets = ["interior", "boundary"] if args.target == "both" else [args.target]

    def compute():
        doc = {"coefficients": rho.to_json()}
        for t in targets:
            cx = base_complex(args.n, rho, t)
            doc[t] = {"dims": cx.betti(), "cochain_dims": cx.dims}
            if t == "boundary":
                page = e1_page(cx)
                doc[t]["E1"] = {f"{p},{q}": d for (p, q), d in sorted(page.terms.items())}
                doc[t]["E2"] = {f"{p},{q}": d for (p, q), d in sorted(e2_page(page).terms.items())}
        if len(targets) == 2:
            doc["psi_ranks"] = [M.rank() for M in base_psi(args.n, rho).induced()]
        return doc

    text = _run_cached(args, compute)
    path = _write(args, f"cohomology_n{args.n}.json", text)
    doc = json.loads(text)
    for t in targets:
        dims = doc[t]["dims"]
        print(f"{t:<9} " + "  ".join(f"H^{m}={d}" for m, d in enumerate(dims)))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_hecke(args) -> int:
    from tempered_spine.hecke import (
        cubes_ok,
        e1_operator,
        hecke_pair,
        restriction_compatibility,
        run_hecke,
        verify_cubes,
    )
    from tempered_spine.tempered import critical_temperaments

    _check_n(args.n)
    a = parse_matrix(args.a, args.n)
    rho = _coefficients(args)
    targets = ["interior", "boundary"] if args.target == "both" or args.verify_cubes else [args.target]

    def compute():
        try:
            pair = hecke_pair(args.n, a)
            ladder = critical_temperaments(
                args.n,
                a,
                boundary="boundary" in targets,
                budget_events=args.budget_events,
                wave_budget=args.budget_waves,
            )
        except ValueError as exc:
            raise CLIError(EXIT_VALIDATION, "validation", str(exc))
        run = run_hecke(pair, ladder, rho, targets)
        doc = run.to_json()
        if "boundary" in targets:
            doc["E1"] = {f"{p},{q}": M for (p, q), M in sorted(e1_operator(run).items())}
            doc["E1"] = {k: [[x for x in r] for r in M.to_list()] for k, M in doc["E1"].items()}
        if args.verify_cubes:
            report = verify_cubes(run)
            doc["cubes"] = report
            doc["restriction_residual"] = restriction_compatibility(run)
            if not cubes_ok(report) or doc["restriction_residual"]:
                bad = next((c for c in report if any(c["faces"].values())), None)
                stage = bad["stage"] if bad else "restriction"
                raise CLIError(EXIT_STAGE, "stage", f"cube face does not commute at stage {stage}", stage=stage)
        return doc

    text = _run_cached(args, compute)
    path = _write(args, f"hecke_n{args.n}.json", text)
    doc = json.loads(text)
    for t, polys in doc["charpoly"].items():
        for m, poly in enumerate(polys):
            print(f"{t:<9} H^{m}: charpoly {poly}")
    if "cubes" in doc:
        print(f"cubes: {len(doc['cubes'])} checked, all faces commute")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from tempered_spine.boundary import e1_page, e2_page, abutment_dims
    from tempered_spine.hecke import _base_slice, base_complex, base_psi
    from tempered_spine.spine import check_table_consistency

    _check_n(args.n)
    rho = _coefficients(args)

    def compute():
        checks = {}
        sl = _base_slice(args.n)
        try:
            for t in sl.tables.values():
                check_table_consistency(t)
            checks["table_consistency"] = True
        except AssertionError:
            checks["table_consistency"] = False
        checks["chunk_closed"] = sl.chunk.check_closed()
        interior = base_complex(args.n, rho, "interior")
        grid = base_complex(args.n, rho, "boundary")
        checks["interior_d2"] = interior.check_d2()
        res = grid.algebra_residuals()
        checks["grid_dv2"] = res["dv2"] == 0
        checks["grid_dh2"] = res["dh2"] == 0
        checks["grid_anticommute"] = res["anti"] == 0
        checks["psi_chain_map"] = base_psi(args.n, rho).is_chain_map()
        page = e2_page(e1_page(grid))
        checks["abutment"] = (grid.P > 2) or abutment_dims(page, len(grid.dims)) == grid.betti()
        return {"checks": checks, "ok": all(checks.values())}

    text = _run_cached(args, compute)
    path = _write(args, f"verify_n{args.n}.json", text)
    doc = json.loads(text)
    for k, v in sorted(doc["checks"].items()):
        print(f"{'PASS' if v else 'FAIL'}  {k}")
    print(f"wrote {path}")
    if not doc["ok"]:
        raise CLIError(EXIT_STAGE, "stage", "self-check failed", failed=[k for k, v in doc["checks"].items() if not v])
    return EXIT_OK


COMMANDS = {
    "spine": cmd_spine,
    "temper": cmd_temper,
    "cohomology": cmd_cohomology,
    "hecke": cmd_hecke,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    from tempered_spine.equivariant import BadPrimeError, ChainMapError
    from tempered_spine.hecke import StageError
    from tempered_spine.spine import BudgetExceeded
    from tempered_spine.tempered import LadderError

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except CLIError as exc:
        err = {"error": exc.kind, "message": str(exc), "exit_code": exc.code, **exc.extra}
    except BadPrimeError as exc:
        err = {"error": "bad_prime", "message": str(exc), "p": exc.p, "orders": list(exc.orders), "exit_code": EXIT_BAD_PRIME}
    except BudgetExceeded as exc:
        err = {"error": "budget", "message": str(exc), "exit_code": EXIT_BUDGET}
    except StageError as exc:
        err = {"error": "stage", "stage": exc.stage, "message": str(exc), "exit_code": EXIT_STAGE}
    except (ChainMapError, LadderError) as exc:
        err = {"error": "stage", "message": str(exc), "exit_code": EXIT_STAGE}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return err["exit_code"]


if __name__ == "__main__":
    raise SystemExit(main())
