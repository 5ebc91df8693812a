"""Operator entry point: pipelines, verifiers and bound evaluation.

All randomness flows from one 64-bit seed through numpy SeedSequence
children spawned in a fixed documented order, so a report is a pure
function of its configuration.  Exit codes: 0 all verdicts pass,
1 verdict failure, 2 configuration error, 3 cap exceeded, 4 budget or
certification failure, 5 trial cap exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .dlog import dlog_pipeline
from .group import BudgetError
from .infra import BackendError, backend_from_config
from .period import MaxTrialsError, circumference_pipeline
from .quadfield import pell_solution, _log_quad_abs
from .sampler import MemoryCapError
from .scaled import ScaledReal, sr

SCHEMA = "infrasim-report/v1"
SEED_SCHEME = ("numpy SeedSequence(seed); one Generator per pipeline, "
               "consumed strictly sequentially")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_BUDGET = 4
EXIT_TRIALS = 5


@dataclass
class RunConfig:
    command: str
    options: dict
    seed: int = 0

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))


def _parse_rational(text: str) -> ScaledReal:
    """Exact rational from "p/q", decimal, or scientific notation."""
    text = text.strip().lower()
    if "e" in text:
        mant, _, exp = text.partition("e")
        base = sr(mant if mant else "1")
        e = int(exp)
        scale = ScaledReal(10**e) if e >= 0 else ScaledReal(1, 10**-e)
        return base * scale
    return sr(text)


def _emit(report: dict, path: str | None):
    text = json.dumps(report, indent=2, default=str)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _verdict_exit(report: dict) -> int:
    return EXIT_OK if report.get("pass") else EXIT_FAIL


def cmd_circumference(args) -> int:
    infra = backend_from_config(args.backend)
    delta = _parse_rational(args.delta)
    cfg = RunConfig("circumference", {"backend": args.backend, "delta": args.delta,
                                      "trials_cap": args.trials_cap, "q": args.q},
                    seed=args.seed)
    result = circumference_pipeline(
        infra, delta, cfg.rng(), q_override=args.q,
        trials_cap=args.trials_cap,
    )
    report = {
        "schema": SCHEMA, "command": "circumference", "seed": args.seed,
        "seed_scheme": SEED_SCHEME, "config": cfg.options,
        "results": {
            "R_hat": str(result.R_hat),
            "R_hat_decimal": result.R_hat.to_decimal(12),
            "delta": str(result.delta),
            "trials_used": result.trials_used,
            "batches": result.batches,
            "accepted_candidate": result.accepted_candidate,
            "witness": result.witness,
            "N": result.N, "q": result.q, "shift": result.shift,
        },
        "pass": True,
    }
    _emit(report, args.report)
    return _verdict_exit(report)


def cmd_dlog(args) -> int:
    infra = backend_from_config(args.backend)
    x = infra.origin
    for _ in range(args.target):
        x = infra.bs(x)
    cfg = RunConfig("dlog", {"backend": args.backend, "target": args.target,
                             "q_factor": args.q_factor, "delta": args.delta},
                    seed=args.seed)
    result = dlog_pipeline(
        infra, x, cfg.rng(), delta=_parse_rational(args.delta),
        q_factor=args.q_factor, trials_cap=args.trials_cap,
    )
    report = {
        "schema": SCHEMA, "command": "dlog", "seed": args.seed,
        "seed_scheme": SEED_SCHEME, "config": cfg.options,
        "results": {
            "d_hat": str(result.d_hat),
            "d_refined": str(result.d_refined),
            "d_refined_decimal": result.d_refined.to_decimal(12),
            "trials_used": result.trials_used,
            "batches": result.batches,
            "samples": [list(s.outcome) for s in result.samples],
            "euclid": {"s": result.s, "t": result.t, "r": str(result.r)},
            "grid": {"M": result.params.M, "N": result.params.N,
                     "B": result.params.B, "A": result.params.A,
                     "q_factor": result.params.q_factor,
                     "kappa": result.params.kappa},
        },
        "pass": True,
    }
    _emit(report, args.report)
    return _verdict_exit(report)


def cmd_pell(args) -> int:
    infra = backend_from_config({"type": "quadratic", "D": args.D})
    delta = _parse_rational(args.delta)
    cfg = RunConfig("pell", {"D": args.D, "delta": args.delta}, seed=args.seed)
    result = circumference_pipeline(infra, delta, cfg.rng(),
                                    trials_cap=args.trials_cap)
    x, y, norm = pell_solution(args.D, result.R_hat, norm=args.norm,
                               tolerance=2 * delta + ScaledReal(1, 1000))
    check = x * x - args.D * y * y
    report = {
        "schema": SCHEMA, "command": "pell", "seed": args.seed,
        "seed_scheme": SEED_SCHEME, "config": cfg.options,
        "results": {
            "D": args.D,
            "regulator": result.R_hat.to_decimal(10),
            "pell_x": x, "pell_y": y, "norm": norm,
            "identity_check": check,
            "trials_used": result.trials_used,
        },
        "pass": check == norm,
    }
    _emit(report, args.report)
    return _verdict_exit(report)


def cmd_verify(args) -> int:
    cfg = RunConfig(f"verify-{args.what}", {"trials": args.trials}, seed=args.seed)
    rng = cfg.rng()
    if args.what == "geomsum":
        trials = int(args.trials)
        violations = 0
        worst = float("inf")
        for i in range(trials):
            inst = bounds.random_geomsum_instance(rng, prefix=bool(i % 2))
            margin = bounds.geomsum_lhs(inst) - bounds.geomsum_rhs(inst)
            worst = min(worst, margin)
            if margin < -1e-9:
                violations += 1
        results = {"instances": trials, "violations": violations,
                   "worst_margin": worst}
        ok = violations == 0
    elif args.what == "coprime":
        rep = bounds.coprime_experiment(args.n_range, int(args.trials), rng)
        results = rep.as_dict()
        ok = rep.verdict
    else:
        raise BackendError(f"unknown verifier {args.what!r}")
    report = {"schema": SCHEMA, "command": f"verify {args.what}",
              "seed": args.seed, "seed_scheme": SEED_SCHEME,
              "config": cfg.options, "results": results, "pass": ok}
    _emit(report, args.report)
    return _verdict_exit(report)


def cmd_bounds(args) -> int:
    formula = args.formula
    if formula == "psuccess":
        value = bounds.success_circ_lower(args.S, args.q)
        inputs = {"S": args.S, "q": args.q}
    elif formula == "psuccess-limit":
        value = bounds.success_circ_limit()
        inputs = {}
    elif formula == "periodic":
        value = bounds.periodic_lower(args.N, args.R, args.gap_min, args.q)
        inputs = {"N": args.N, "R": args.R, "gap_min": args.gap_min, "q": args.q}
    elif formula == "dlog":
        value = bounds.success_dlog_lower(args.q_factor, args.B, args.p_g)
        inputs = {"q_factor": args.q_factor, "B": args.B, "p_g": args.p_g}
    elif formula == "dlog-simplified":
        value = bounds.success_dlog_simplified(args.p_g)
        inputs = {"p_g": args.p_g}
    else:
        raise BackendError(f"unknown formula {formula!r}")
    report = {"schema": SCHEMA, "command": "bounds", "config": inputs,
              "results": {"formula": formula, "value": value}, "pass": True}
    _emit(report, args.report)
    return _verdict_exit(report)


def cmd_regulator_check(args) -> int:
    """Direct regulator evaluation (no sampling); handy for cross-checks."""
    x, y, norm = pell_solution(args.D, None, norm=None)
    reg = _log_quad_abs(x, y, 1, args.D, 60)
    report = {"schema": SCHEMA, "command": "regulator", "config": {"D": args.D},
              "results": {"regulator": reg.to_decimal(12), "pell": [x, y, norm]},
              "pass": True}
    _emit(report, args.report)
    return _verdict_exit(report)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infrasim")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--report", type=str, default=None)

    p = sub.add_parser("circumference", help="estimate a circumference")
    p.add_argument("--backend", required=True)
    p.add_argument("--delta", default="1e-3")
    p.add_argument("--trials-cap", type=int, default=None)
    p.add_argument("--q", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_circumference)

    p = sub.add_parser("dlog", help="recover a generalized discrete logarithm")
    p.add_argument("--backend", required=True)
    p.add_argument("--target", type=int, default=1,
                   help="element reached by this many neighbour steps from the origin")
    p.add_argument("--delta", default="1e-3")
    p.add_argument("--q-factor", type=int, default=None)
    p.add_argument("--trials-cap", type=int, default=512)
    common(p)
    p.set_defaults(func=cmd_dlog)

    p = sub.add_parser("pell", help="solve x^2 - D y^2 = +-1 via the pipeline")
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--delta", default="1e-3")
    p.add_argument("--norm", type=int, default=None, choices=(1, -1))
    p.add_argument("--trials-cap", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_pell)

    p = sub.add_parser("verify", help="run a standalone verifier")
    p.add_argument("what", choices=("geomsum", "coprime"))
    p.add_argument("--trials", type=float, default=1e5)
    p.add_argument("--n-range", type=int, default=10**6)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="evaluate an analytic bound")
    p.add_argument("--formula", required=True)
    p.add_argument("--S", type=float, default=256.0)
    p.add_argument("--q", type=float, default=2**16)
    p.add_argument("--N", type=float, default=4)
    p.add_argument("--R", type=float, default=64)
    p.add_argument("--gap-min", type=float, default=0.5)
    p.add_argument("--q-factor", type=int, default=8)
    p.add_argument("--B", type=float, default=4096)
    p.add_argument("--p-g", type=float, default=0.75)
    p.add_argument("--report", type=str, default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("regulator", help="exact regulator via the unit (no sampling)")
    p.add_argument("--D", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_regulator_check)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BackendError, ValueError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MemoryCapError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except BudgetError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except MaxTrialsError as exc:
        print(f"trial cap exhausted: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_TRIALS


if __name__ == "__main__":
    sys.exit(main())
