"""delta-lab command line: reproducible verification runs with JSON reports."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .arith import DirichletCharacter, PrimeModulus, characters, is_prime
from .coeffs import CoefficientError, bundled_level_file, eta_product_backend, file_backend

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
THREADS_ENV = "DELTA_LAB_THREADS"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def prime_q(text: str) -> int:
    try:
        q = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("q must be prime > 3") from None
    if q <= 3 or not is_prime(q):
        raise argparse.ArgumentTypeError("q must be prime > 3")
    return q


def int_list(text: str) -> list[int]:
    if not text:
        return []
    if " " in text:
        raise argparse.ArgumentTypeError("lists are comma-separated without spaces")
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def str_list(text: str) -> list[str]:
    return [x for x in text.split(",") if x]


def read_config_file(path) -> dict:
    """key=value lines; '#' starts a comment."""
    p = Path(path)
    if not p.exists():
        raise UsageError(f"file not found: {p}")
    out = {}
    for i, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{p}:{i}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def threads_from(args) -> int:
    if args.threads is not None:
        return max(1, int(args.threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    return os.cpu_count() or 1


def resolved(args) -> dict:
    skip = {"func", "config", "pretty", "out"}
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        cfg[k] = str(v) if isinstance(v, Path) else v
    return cfg


def envelope(args, result: dict) -> dict:
    return {"version": __version__, "command": args.command, "config": resolved(args), "seed": getattr(args, "seed", 0), **result}


def emit(args, payload: dict, text: str | None = None) -> None:
    data = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    if args.out:
        Path(args.out).write_text(data, encoding="utf-8")
    if args.pretty:
        sys.stdout.write((text if text is not None else json.dumps(payload, indent=2)) + "\n")
    elif not args.out:
        sys.stdout.write(data)


def load_form(args, q: int | None = None, nmax: int = 10**6, exact_11: bool = False):
    explicit = getattr(args, "eta11", False) or getattr(args, "level_file", None)
    if getattr(args, "eta11", False) or (exact_11 and q == 11 and not explicit):
        f = eta_product_backend(nmax)
    elif getattr(args, "level_file", None):
        f = file_backend(args.level_file)
    elif q is not None and bundled_level_file(q).exists():
        f = file_backend(bundled_level_file(q))
    else:
        raise UsageError("no coefficient source: pass --eta11 or --level-file")
    if q is not None and f.level != q:
        raise UsageError(f"level of f ({f.level}) must equal q ({q})")
    return f


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify_charsum(args) -> int:
    from .expsums import cancellation_census, exhaustive_closed_form_check

    mod = PrimeModulus(args.q)
    tol = 1e-8 * args.q
    checks, census = [], []
    ok = True
    first = None
    for chi in characters(mod):
        if args.exhaustive:
            rep = exhaustive_closed_form_check(chi)
            rep["passed"] = rep["max_abs_diff"] < tol
            if not rep["passed"] and first is None:
                first = {"chi_index": chi.index, "tuple": rep["worst_tuple"]}
            ok &= rep["passed"]
            checks.append(rep)
        else:
            census.append(cancellation_census(chi, sample_count=args.samples, seed=args.seed))
    result = {"passed": bool(ok), "tolerance": tol, "closed_form": checks, "census": census}
    if first is not None:
        result["first_failure"] = first
    emit(args, envelope(args, result))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_delta(args) -> int:
    from .arith import primes_in
    from .expsums import trivial_delta_table

    worst = 0.0
    rows = []
    for q in primes_in(max(5, args.q_min), args.q_max):
        n = np.arange(-(q - 1), q)
        vals = trivial_delta_table(q, n)
        err = float(np.max(np.abs(vals - (n == 0))))
        worst = max(worst, err)
        rows.append({"q": q, "max_abs_error": err})
    ok = worst < 1e-9
    emit(args, envelope(args, {"passed": ok, "max_abs_error": worst, "per_q": rows}))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_poisson(args) -> int:
    from .transforms import poisson_sweep

    reps = poisson_sweep(args.cases, args.seed)
    ok = all(r.passed for r in reps)
    worst = max((r.abs_diff / r.scale for r in reps), default=0.0)
    emit(args, envelope(args, {"passed": ok, "worst_relative_to_scale": worst, "cases": [r.to_json() for r in reps]}))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_voronoi(args) -> int:
    from .transforms import voronoi_verify

    f = load_form(args, args.q, nmax=args.horizon)
    reps = []
    ok = True
    for c in args.c:
        X = args.X if args.X else 20.0 * c
        r = voronoi_verify(f, 1, c, X)
        passed = r.rel_diff < 1e-5 and abs(abs(r.fitted_eta) - 1) < 1e-3 and r.tail_mass < 1e-6
        ok &= passed
        reps.append({**r.to_json(), "passed": passed})
    emit(args, envelope(args, {"passed": ok, "cases": reps}))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_pipeline(args) -> int:
    from .pipeline import ConfigError, make_config, parameter_planner, run_pipeline

    q = args.q
    if args.L:
        for ell in args.L:
            if ell % q == 0:
                raise UsageError(f"amplifier prime divides level: {ell}")
    plan = parameter_planner(q, beta=args.beta, amp=args.amp, N=args.N, L_set=args.L or None, P_set=args.P or None)
    # the dual checks reach far past the bundled files; level 11 has an exact generator
    f = load_form(args, q, exact_11=True)
    try:
        cfg = make_config(
            f,
            plan.N,
            plan.L_set,
            amp=args.amp,
            P_set=args.P or None,
            chi_index=args.chi,
            beta=args.beta,
            mode=plan.mode,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    cfg.notes.extend(plan.reasons)
    t = run_pipeline(cfg, seed=args.seed)
    payload = envelope(args, {"plan": plan.to_json(), "transcript": t.to_json()})
    emit(args, payload, t.render_text())
    return EXIT_OK if t.passed else EXIT_FAIL


def cmd_census(args) -> int:
    from .congruence import FAMILIES, CensusConfig, congruence_census, family_name

    try:
        fams = [family_name(x) for x in args.family] if args.family else list(FAMILIES)
        cfg = CensusConfig(args.q, args.N, tuple(args.L), tuple(args.P), eps=args.eps, N0=args.N0, R=args.R, M=args.M)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    reps = [congruence_census(cfg, f) for f in fams]
    # inside a window a counterexample is a failure; outside one it is the expected finding
    ok = all(r["passed"] or not r["in_window"] for r in reps)
    lines = [
        f"{r['family']}: in_window={r['in_window']} solutions={r['solutions']} counterexamples={r['counterexample_count']}"
        for r in reps
    ]
    emit(args, envelope(args, {"passed": ok, "families": reps}), "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compute_l(args) -> int:
    from .lvalue import lvalue_central

    f = load_form(args, args.q, nmax=10**5)
    mod = PrimeModulus(args.q)
    if args.chi is not None:
        chis = [DirichletCharacter(mod, args.chi)]
        if not chis[0].is_primitive:
            raise UsageError("character not primitive")
    else:
        chis = characters(mod)
    res = [lvalue_central(f, chi) for chi in chis]
    ok = all(r.accepted for r in res)
    lines = [f"chi={r.chi_index:>3} L={r.value.real:+.10f}{r.value.imag:+.10f}i gap={r.stability_gap:.2e} {'ok' if r.accepted else 'UNSTABLE'}" for r in res]
    emit(args, envelope(args, {"passed": ok, "values": [r.to_json() for r in res]}), "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lstudy(args) -> int:
    from .lvalue import exponent_study, format_csv

    res = exponent_study(args.levels, args.out)
    if not args.out:
        sys.stdout.write(format_csv(res["rows"]))
    for fl in res["failures"]:
        sys.stderr.write(f"{fl['path']}: {fl['error']}\n")
    for fl in res["flags"]:
        sys.stderr.write(f"flag: {json.dumps(fl)}\n")
    if args.levels and not res["summaries"]:
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _coefficient_source(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eta11", action="store_true", help="level-11 coefficients from the eta product")
    g.add_argument("--level-file", type=Path, help="coefficient file (LEVEL=.. WEIGHT=.. LABEL=.. NMAX=..)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value file; flags override it")
    common.add_argument("--out", type=Path, help="write the JSON report (CSV for lstudy) here")
    common.add_argument("--pretty", action="store_true", help="human-readable rendering on stdout")
    common.add_argument("--threads", type=int, help=f"worker cap (env {THREADS_ENV})")
    common.add_argument("--seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="delta-lab", description=__doc__)
    ap.add_argument("--version", action="version", version=f"delta-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-charsum", parents=[common], help="closed forms of the complete character sums")
    p.add_argument("--q", type=prime_q, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exhaustive", action="store_true")
    g.add_argument("--samples", type=int, default=100000)
    p.set_defaults(func=cmd_verify_charsum)

    p = sub.add_parser("verify-delta", parents=[common], help="additive-character delta identity")
    p.add_argument("--q-min", type=int, default=5)
    p.add_argument("--q-max", type=int, default=997)
    p.set_defaults(func=cmd_verify_delta)

    p = sub.add_parser("verify-poisson", parents=[common], help="twisted Poisson summation sweep")
    p.add_argument("--cases", type=int, default=50)
    p.set_defaults(func=cmd_verify_poisson)

    p = sub.add_parser("verify-voronoi", parents=[common], help="Voronoi summation checks")
    p.add_argument("--q", type=prime_q, default=11)
    _coefficient_source(p)
    p.add_argument("--c", type=int_list, default=[1, 2, 3, 7])
    p.add_argument("--X", type=float, default=None, help="default 20c")
    p.add_argument("--horizon", type=int, default=200000)
    p.set_defaults(func=cmd_verify_voronoi)

    p = sub.add_parser("verify-pipeline", parents=[common], help="end-to-end transcript")
    p.add_argument("--q", type=prime_q, required=True)
    _coefficient_source(p)
    p.add_argument("--beta", type=float, default=5.0 / 6.0)
    p.add_argument("--amp", type=int, choices=(1, 2), default=2)
    p.add_argument("--N", type=float, default=None)
    p.add_argument("--L", type=int_list, default=None)
    p.add_argument("--P", type=int_list, default=None)
    p.add_argument("--chi", type=int, default=1)
    p.set_defaults(func=cmd_verify_pipeline)

    p = sub.add_parser("census", parents=[common], help="congruence-structure census")
    p.add_argument("--q", type=prime_q, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--L", type=int_list, required=True)
    p.add_argument("--P", type=int_list, required=True)
    p.add_argument("--family", type=str_list, default=None, help="S10,S11,S20,S21,D10,D11,D20,D21")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--N0", type=float, default=None)
    p.add_argument("--R", type=int, default=None)
    p.add_argument("--M", type=int, default=None)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("compute-l", parents=[common], help="central values L(1/2, f x chi)")
    p.add_argument("--q", type=prime_q, required=True)
    _coefficient_source(p)
    p.add_argument("--chi", type=int, default=None)
    p.set_defaults(func=cmd_compute_l)

    p = sub.add_parser("lstudy", parents=[common], help="exponent study over coefficient files")
    p.add_argument("--levels", type=str_list, default=[])
    p.set_defaults(func=cmd_lstudy)
    return ap


def _prescan(argv: list[str], commands) -> tuple[str | None, str | None]:
    cmd = next((a for a in argv if a in commands), None)
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    return cmd, path


def _apply_config_file(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    subs = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction)).choices
    cmd, path = _prescan(argv, subs)
    if cmd is None or path is None:
        return ap.parse_args(argv)
    sub = subs[cmd]
    values = read_config_file(path)
    defaults = {}
    for act in sub._actions:
        if act.dest not in values:
            continue
        raw = values.pop(act.dest)
        if isinstance(act, argparse._StoreTrueAction):
            defaults[act.dest] = raw.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                defaults[act.dest] = act.type(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                sub.error(f"{path}: {act.dest}: {exc}")
        else:
            defaults[act.dest] = raw
        # the file supplies it; flags still override
        act.required = False
    if values:
        sub.error(f"{path}: unknown keys: {', '.join(sorted(values))}")
    sub.set_defaults(**defaults)
    return ap.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = _apply_config_file(ap, argv)
    except UsageError as exc:
        ap.error(str(exc))
    try:
        from threadpoolctl import threadpool_limits

        args.threads = threads_from(args)
        with threadpool_limits(limits=args.threads):
            return int(args.func(args))
    except UsageError as exc:
        sys.stderr.write(f"delta-lab {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except (FileNotFoundError, CoefficientError) as exc:
        sys.stderr.write(f"delta-lab {args.command}: error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
