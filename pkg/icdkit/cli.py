#!/usr/bin/env python3
"""
icdkit command line.

Every subcommand loads its JSON inputs, runs one family of checks and emits a
report with sorted keys:

    command        the argument vector as given
    inputs_digest  SHA-256 of the canonical JSON of all inputs and arguments
    verdicts       boolean (or status string) answers
    residuals      the numbers the verdicts were decided on
    details        subcommand-specific payload
    seed           master seed in effect
    wall_time      seconds spent; the only field that changes between runs

Exit code 0 whenever a verdict was computed, 2 on any input error.
"""

import argparse
import hashlib
import json
import logging
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from icdkit.algebra import is_commutative
from icdkit.config import Settings, configure_logging, load_settings, validate
from icdkit.definetti import (
    extremality_identity_residual, moment_matrix, moment_psd_certificate, reconstruct_report, verify_measure,
)
from icdkit.diagram import check_axioms, evaluate, parse, terms_equal, to_source, type_of
from icdkit.errors import IcdKitError, MomentSequenceError, SerializationError
from icdkit.morphism import classify, is_deterministic
from icdkit.nullspace import MODES, as_equal_direct_residual, as_equal_residual, nullspace
from icdkit.power import family_check, permutation_morphism
from icdkit.serialization import (
    canonical_json, decode_algebra, decode_family, decode_measure, decode_morphism, decode_signature,
    encode_morphism, encode_nullspace, load_json,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2

Outcome = Tuple[Dict[str, Any], Dict[str, Any], Dict[str, Any]]


class _Inputs:
    """Loaded JSON documents, remembered for the report digest, and extra tables for `--format table`."""

    def __init__(self):
        self.docs: Dict[str, Any] = {}
        self.frames: List[pd.DataFrame] = []

    def load(self, name: str, arg: str) -> Any:
        doc = load_json(arg)
        self.docs[name] = doc
        return doc


def _plain(obj: Any) -> Any:
    """numpy scalars and tuples to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_axioms(args, settings: Settings, inputs: _Inputs) -> Outcome:
    a = decode_algebra(inputs.load("algebra", args.algebra), "$algebra")
    b = decode_algebra(inputs.load("other", args.other), "$other") if args.other else None
    report = check_axioms(a, settings.tol, b)
    verdicts = {"ok": report.ok, "classical": report.classical, "commutative": is_commutative(a)}
    residuals = {k: v for k, v in report.residuals.items() if v is not None}
    residuals["classicality"] = report.classicality_residual
    return verdicts, residuals, {}


def cmd_classify(args, settings: Settings, inputs: _Inputs) -> Outcome:
    phi = decode_morphism(inputs.load("morphism", args.morphism), "$morphism")
    result = classify(phi, settings)
    return result["verdicts"], result["residuals"], {}


def cmd_as_equal(args, settings: Settings, inputs: _Inputs) -> Outcome:
    omega = decode_morphism(inputs.load("omega", args.omega), "$omega")
    phi = decode_morphism(inputs.load("phi", args.phi), "$phi")
    psi = decode_morphism(inputs.load("psi", args.psi), "$psi")
    modes = MODES if args.mode == "all" else (args.mode,)
    verdicts, residuals = {}, {}
    for mode in modes:
        if args.direct:
            res = as_equal_direct_residual(phi, psi, omega, mode)
        else:
            res = as_equal_residual(phi, psi, omega, mode, settings.nullspace_tol)
        verdicts[mode] = res <= settings.tol
        residuals[mode] = res
    return verdicts, residuals, {"method": "direct" if args.direct else "nullspace"}


def cmd_nullspace(args, settings: Settings, inputs: _Inputs) -> Outcome:
    omega = decode_morphism(inputs.load("omega", args.omega), "$omega")
    ns = nullspace(omega, args.kind, settings.nullspace_tol)
    verdicts = {
        "left_ideal": ns.is_left_ideal(),
        "right_ideal": ns.is_right_ideal(),
        "star_closed": ns.is_star_closed(),
    }
    return verdicts, {"dim": ns.dim}, encode_nullspace(ns)


def cmd_diagram(args, settings: Settings, inputs: _Inputs) -> Outcome:
    sig = decode_signature(inputs.load("sig", args.sig), "$sig")
    if args.diagram_command == "eval":
        term = parse(args.term, sig)
        dom, cod = type_of(term, sig)
        phi = evaluate(term, sig)
        details = {"term": to_source(term), "dom": list(dom), "cod": list(cod), "morphism": encode_morphism(phi)}
        return {"well_typed": True}, {}, details
    a, b = parse(args.term_a, sig), parse(args.term_b, sig)
    equal, residual = terms_equal(a, b, sig, settings.tol)
    return {"equal": equal}, {"equal": residual}, {"term_a": to_source(a), "term_b": to_source(b)}


def cmd_definetti(args, settings: Settings, inputs: _Inputs) -> Outcome:
    fam = decode_family(inputs.load("family", args.family), "$family")
    d = args.degree
    check = family_check(fam, settings.tol)
    inputs.frames.append(check.to_frame())
    verdicts: Dict[str, Any] = {"exchangeable": check.exchangeable, "consistent": check.consistent}
    residuals: Dict[str, Any] = {
        "exchangeability": check.max_exchangeability_residual,
        "consistency": check.max_consistency_residual,
    }
    details: Dict[str, Any] = {}
    if 2 * d <= fam.max_degree:
        value, _ = moment_psd_certificate(moment_matrix(fam, d))
        verdicts["moment_psd"] = value >= -settings.tol
        residuals["moment_min_eigenvalue"] = value
    if fam.max_degree >= 1:
        residuals["extremality"] = extremality_identity_residual(fam, fam.max_degree - 1)
        verdicts["extremal"] = residuals["extremality"] <= settings.tol
    if is_commutative(fam.base) and fam.side.dim == 1 and 1 <= 2 * d - 1 <= fam.max_degree:
        try:
            details["reconstruction"] = reconstruct_report(fam, d, settings).to_dict()
            residuals["reconstruction_moment_error"] = details["reconstruction"]["moment_error"]
        except MomentSequenceError as e:
            details["reconstruction"] = {"error": str(e)}
    if args.measure:
        mu = decode_measure(inputs.load("measure", args.measure), "$measure")
        residuals["measure"] = verify_measure(fam, mu)
        verdicts["measure_reproduces_family"] = residuals["measure"] <= settings.tol
    return verdicts, residuals, details


def cmd_power(args, settings: Settings, inputs: _Inputs) -> Outcome:
    if args.power_command == "check":
        fam = decode_family(inputs.load("family", args.family), "$family")
        report = family_check(fam, settings.tol)
        inputs.frames.append(report.to_frame())
        verdicts = {"exchangeable": report.exchangeable, "consistent": report.consistent}
        residuals = {"exchangeability": report.max_exchangeability_residual,
                     "consistency": report.max_consistency_residual}
        return verdicts, residuals, {"degrees": report.rows}
    a = decode_algebra(inputs.load("algebra", args.algebra), "$algebra")
    side = decode_algebra(inputs.load("side", args.side), "$side") if args.side else None
    try:
        sigma = [int(s) - 1 for s in args.sigma.split(",")]
    except ValueError:
        raise SerializationError(f"--sigma: expected comma-separated integers, got {args.sigma!r}")
    phi = permutation_morphism(a, args.degree, sigma, side)
    return {"deterministic": is_deterministic(phi, settings.tol)}, {}, {"morphism": encode_morphism(phi)}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--tol', type=float, default=argparse.SUPPRESS, help='Tolerance for verdicts')
    common.add_argument('--seed', type=int, default=argparse.SUPPRESS, help='Master seed')
    common.add_argument('--out', default=argparse.SUPPRESS, help='Write the report to this file')
    common.add_argument('--format', choices=['json', 'table'], default=argparse.SUPPRESS, help='Report format')
    common.add_argument('--log-level', default=argparse.SUPPRESS, help='Logging level (DEBUG, INFO, ...)')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog='icdkit', parents=[common],
                                     description='Checks for involutive Markov categories of finite-dimensional C*-algebras.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('axioms', parents=[common], help='Comonoid, involution and monoidal laws')
    p.add_argument('--algebra', required=True, help='Algebra JSON')
    p.add_argument('--other', help='Second algebra for the monoidal law (default: the first)')
    p.set_defaults(handler=cmd_axioms)

    p = sub.add_parser('classify', parents=[common], help='All predicates of one morphism')
    p.add_argument('--morphism', required=True, help='Morphism JSON')
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser('as-equal', parents=[common], help='Almost-sure equality with respect to omega')
    p.add_argument('--omega', required=True)
    p.add_argument('--phi', required=True)
    p.add_argument('--psi', required=True)
    p.add_argument('--mode', choices=list(MODES) + ['all'], default='all')
    p.add_argument('--direct', action='store_true', help='Decide on composite morphisms instead of nullspaces')
    p.set_defaults(handler=cmd_as_equal)

    p = sub.add_parser('nullspace', parents=[common], help='Nullspace of a CPU map')
    p.add_argument('--omega', required=True)
    p.add_argument('--kind', choices=['left', 'right', 'symmetric'], default='symmetric')
    p.set_defaults(handler=cmd_nullspace)

    p = sub.add_parser('diagram', parents=[common], help='String diagram terms')
    dsub = p.add_subparsers(dest='diagram_command', required=True)
    q = dsub.add_parser('eval', parents=[common])
    q.add_argument('--sig', required=True)
    q.add_argument('--term', required=True)
    q = dsub.add_parser('equal', parents=[common])
    q.add_argument('--sig', required=True)
    q.add_argument('--term-a', required=True)
    q.add_argument('--term-b', required=True)
    p.set_defaults(handler=cmd_diagram)

    p = sub.add_parser('definetti', parents=[common], help='Exchangeable families')
    dsub = p.add_subparsers(dest='definetti_command', required=True)
    q = dsub.add_parser('verify', parents=[common])
    q.add_argument('--family', required=True)
    q.add_argument('--degree', type=int, required=True, help='Moment degree and number of atoms')
    q.add_argument('--measure', help='Candidate mixing measure to verify')
    p.set_defaults(handler=cmd_definetti)

    p = sub.add_parser('power', parents=[common], help='Finite tensor powers')
    dsub = p.add_subparsers(dest='power_command', required=True)
    q = dsub.add_parser('check', parents=[common])
    q.add_argument('--family', required=True)
    q = dsub.add_parser('permutation', parents=[common])
    q.add_argument('--algebra', required=True)
    q.add_argument('--degree', type=int, required=True)
    q.add_argument('--sigma', required=True, help='1-based permutation, e.g. 2,1,3')
    q.add_argument('--side', help='Side algebra JSON')
    p.set_defaults(handler=cmd_power)
    return parser


def _settings(args, base: Settings) -> Settings:
    return base.replace(tol=getattr(args, 'tol', None), seed=getattr(args, 'seed', None),
                        log_level=getattr(args, 'log_level', None))


def _digest(args, inputs: _Inputs) -> str:
    skip = {"handler", "out", "format", "log_level"} | set(inputs.docs)
    arguments = {k: v for k, v in vars(args).items() if k not in skip}
    payload = canonical_json({"arguments": arguments, "inputs": inputs.docs})
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def render_table(report: Dict[str, Any], frames: Sequence[pd.DataFrame] = ()) -> str:
    """Verdicts and residuals as one frame, followed by any per-degree frames."""
    rows = [{"kind": "verdict", "name": k, "value": v} for k, v in sorted(report["verdicts"].items())]
    rows += [{"kind": "residual", "name": k, "value": v} for k, v in sorted(report["residuals"].items())]
    if not rows:
        return "(no verdicts)"
    parts = [pd.DataFrame(rows).set_index(["kind", "name"]).to_string()]
    parts += [frame.to_string() for frame in frames]
    return "\n\n".join(parts)


def execute(argv: Sequence[str], settings: Optional[Settings] = None) -> Tuple[int, Optional[Dict[str, Any]]]:
    """Run one command; returns the exit code and the report (None on input errors)."""
    argv = list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return (e.code if isinstance(e.code, int) else EXIT_INPUT_ERROR), None
    try:
        settings = validate(_settings(args, settings or load_settings()))
    except IcdKitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR, None
    configure_logging(settings.log_level)
    inputs = _Inputs()
    start = time.perf_counter()
    try:
        verdicts, residuals, details = args.handler(args, settings, inputs)
    except IcdKitError as e:
        logger.debug(f"Input error in {args.command}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR, None
    report = _plain({
        "command": argv,
        "inputs_digest": _digest(args, inputs),
        "verdicts": verdicts,
        "residuals": residuals,
        "details": details,
        "seed": settings.seed,
        "wall_time": time.perf_counter() - start,
    })
    fmt = getattr(args, 'format', 'json')
    text = render_table(report, inputs.frames) if fmt == 'table' else json.dumps(report, sort_keys=True, indent=2)
    out = getattr(args, 'out', None)
    if out:
        try:
            with open(out, 'w', encoding='utf-8') as f:
                f.write(text + "\n")
        except OSError as e:
            print(f"error: cannot write {out}: {e.strerror or e}", file=sys.stderr)
            return EXIT_INPUT_ERROR, None
    else:
        print(text)
    return EXIT_OK, report


def run(argv: Optional[Sequence[str]] = None) -> int:
    code, _ = execute(sys.argv[1:] if argv is None else argv)
    return code


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
