"""
Command line interface.

    python -m app jm check --stdlib pauli_xz --param eta=0.7
    python -m app steer robustness --input assemblage.json
    python -m app bridge threshold --d 3
    python -m app ft eval --x1 0.6,0,0 --x2 0,0.6,0 --x3 0,0,0.6
    python -m app lhv scan --s-grid 0.71,0.75,0.8 --jobs 4 --csv curve.csv
    python -m app stdlib mub --param d=3 --param count=2

The JSON payload goes to standard output and diagnostics to standard error.
Exit codes: 0 success or positive verdict, 1 negative verdict, 2 input error,
3 numerical failure.
"""
import argparse
import json
import sys
from typing import Any, Dict, List, Optional, Sequence, TextIO

import numpy as np

from app.core.config import settings
from app.core.errors import JmSteerError, SchemaError
from app.core.log import configure_logging, logger
from app.models.assemblage import Assemblage, AssemblagePayload
from app.models.measurement import MeasurementSet, MeasurementSetPayload
from app.models.operators import StatePayload, parse_payload
from app.models.results import FtInstance
from app.services import bridge, lhv, reports
from app.services.hermitian import random_density
from app.services.measurements import depolarize, standard_names, standard_set
from app.services.steering import depolarize_assemblage

EXIT_OK, EXIT_NEGATIVE = 0, 1


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _vector(text: str) -> List[float]:
    values = _floats(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three components, got {text!r}")
    return values


def _param(text: str) -> tuple:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, help="feasibility tolerance")
    parser.add_argument("--max-iter", type=int, help="solver iteration limit")
    parser.add_argument("--seed", type=int, default=0, help="seed for every randomized path")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")


def _source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", help="JSON file ('-' for stdin)")
    parser.add_argument("--stdlib", choices=standard_names(), help="named measurement set")
    parser.add_argument("--param", type=_param, action="append", default=[], help="key=value for --stdlib")
    parser.add_argument("--eta", type=float, help="white-noise parameter applied to the input")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m app", description=__doc__.split("\n\n")[0].strip())
    commands = parser.add_subparsers(dest="command", required=True)

    jm = commands.add_parser("jm", help="joint measurability").add_subparsers(dest="action", required=True)
    check = jm.add_parser("check", help="decide joint measurability")
    check.add_argument("--dump", help="write the SDP as JSON triplets to this file")
    robustness = jm.add_parser("robustness", help="white-noise robustness")
    robustness.add_argument("--mode", choices=("direct", "bisection"), default="direct")
    robustness.add_argument("--oracle", choices=("sdp", "projection"), default="sdp")
    parent = jm.add_parser("parent", help="parent POVM")
    parent.add_argument("--lam", type=float, default=1.0)
    for sub in (check, robustness, parent):
        _source(sub)
        _common(sub)

    steer = commands.add_parser("steer", help="steering of assemblages").add_subparsers(dest="action", required=True)
    steer_check = steer.add_parser("check", help="decide steerability")
    steer_robustness = steer.add_parser("robustness", help="white-noise steering robustness")
    steer_robustness.add_argument("--mode", choices=("direct", "bisection"), default="direct")
    for sub in (steer_check, steer_robustness):
        _source(sub)
        _common(sub)

    bridge_cmd = commands.add_parser("bridge", help="measurements <-> assemblages").add_subparsers(
        dest="action", required=True
    )
    to_asm = bridge_cmd.add_parser("to-assemblage")
    to_ms = bridge_cmd.add_parser("to-measurements")
    duality = bridge_cmd.add_parser("duality-check")
    duality.add_argument("--state", help="StatePayload JSON; a seeded random state when omitted")
    duality.add_argument("--lam", type=float, required=True)
    for sub in (to_asm, to_ms, duality):
        _source(sub)
        _common(sub)
    thresh = bridge_cmd.add_parser("threshold")
    thresh.add_argument("--d", type=int, required=True)
    _common(thresh)
    povm_noise = bridge_cmd.add_parser("povm-noise", help="random POVM robustness against the PVM threshold")
    povm_noise.add_argument("--d", type=int, required=True)
    povm_noise.add_argument("--measurements", type=int, default=2)
    povm_noise.add_argument("--outcomes", type=int, default=2)
    povm_noise.add_argument("--samples", type=int, default=20)
    _common(povm_noise)

    ft = commands.add_parser("ft", help="Fermat-Torricelli criterion").add_subparsers(dest="action", required=True)
    ft_eval = ft.add_parser("eval")
    for name in ("--x1", "--x2", "--x3"):
        ft_eval.add_argument(name, type=_vector)
    _source(ft_eval)
    _common(ft_eval)

    lhv_cmd = commands.add_parser("lhv", help="LHV decompositions").add_subparsers(dest="action", required=True)
    decompose = lhv_cmd.add_parser("decompose")
    decompose.add_argument("--s", type=float, required=True)
    decompose.add_argument("--angles", type=_vector, default=[0.0, 0.0, 0.0])
    decompose.add_argument("--lam", type=float, default=1.0)
    decompose.add_argument("--robust", action="store_true", help="maximize lambda instead of testing --lam")
    scan = lhv_cmd.add_parser("scan")
    scan.add_argument("--s-grid", type=_floats, required=True)
    scan.add_argument("--ua-grid", type=int)
    scan.add_argument("--ua-random", type=int)
    scan.add_argument("--method", choices=("direct", "bisection"), default="direct")
    scan.add_argument("--jobs", type=int, help="worker processes (default: machine parallelism)")
    scan.add_argument("--csv", help="also write the curve as CSV to this file ('-' for stdout only)")
    for sub in (decompose, scan):
        sub.add_argument("--classes", default=",".join(lhv.DEFAULT_CLASSES))
        sub.add_argument("--n-bob", type=int)
        sub.add_argument("--symmetry", choices=("permutation", "bose"))
        sub.add_argument("--ppt", action="store_true", default=None)
        _common(sub)

    stdlib = commands.add_parser("stdlib", help="print a named measurement set")
    stdlib.add_argument("name", choices=standard_names())
    stdlib.add_argument("--param", type=_param, action="append", default=[])
    _common(stdlib)
    return parser


def _read_json(path: str) -> Any:
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})", pointer="")
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}", pointer="")


def _params(args: argparse.Namespace) -> Dict[str, Any]:
    return dict(args.param)


def _measurements(args: argparse.Namespace) -> MeasurementSet:
    if args.input:
        measurements = parse_payload(MeasurementSetPayload, _read_json(args.input)).to_domain()
    elif args.stdlib:
        measurements = standard_set(args.stdlib, **_params(args))
    else:
        raise SchemaError("give --input or --stdlib", pointer="")
    return measurements if args.eta is None else depolarize(measurements, args.eta)


def _assemblage(args: argparse.Namespace) -> Assemblage:
    if args.input:
        asm = parse_payload(AssemblagePayload, _read_json(args.input)).to_domain()
    elif args.stdlib:
        asm = bridge.assemblage_of(standard_set(args.stdlib, **_params(args)))
    else:
        raise SchemaError("give --input or --stdlib", pointer="")
    return asm if args.eta is None else depolarize_assemblage(asm, args.eta)


def _classes(args: argparse.Namespace) -> List[str]:
    return [c.strip() for c in args.classes.split(",") if c.strip()]


def _dispatch(args: argparse.Namespace, out: TextIO) -> reports.Report:
    command = (args.command, getattr(args, "action", None))
    if command == ("jm", "check"):
        measurements = _measurements(args)
        if args.dump:
            with open(args.dump, "w") as handle:
                json.dump(reports.jm_problem_dump(measurements), handle)
        return reports.jm_check(measurements)
    if command == ("jm", "robustness"):
        return reports.jm_robustness(_measurements(args), mode=args.mode, oracle=args.oracle)
    if command == ("jm", "parent"):
        return reports.jm_parent(_measurements(args), lam=args.lam)
    if command == ("steer", "check"):
        return reports.steer_check(_assemblage(args))
    if command == ("steer", "robustness"):
        return reports.steer_robustness(_assemblage(args), mode=args.mode)
    if command == ("bridge", "to-assemblage"):
        return reports.to_assemblage(_measurements(args))
    if command == ("bridge", "to-measurements"):
        return reports.to_measurements(_assemblage(args))
    if command == ("bridge", "duality-check"):
        measurements = _measurements(args)
        if args.state:
            state = parse_payload(StatePayload, _read_json(args.state)).to_domain()
        else:
            state = random_density(measurements.dim ** 2, np.random.default_rng(args.seed))
        return reports.duality_check(state, measurements, args.lam)
    if command == ("bridge", "threshold"):
        return reports.threshold(args.d)
    if command == ("bridge", "povm-noise"):
        return reports.povm_noise(args.d, args.measurements, args.outcomes, args.samples, seed=args.seed)
    if command == ("ft", "eval"):
        vectors = (args.x1, args.x2, args.x3)
        if all(v is not None for v in vectors):
            return reports.ft_eval(FtInstance(x1=args.x1, x2=args.x2, x3=args.x3))
        if any(v is not None for v in vectors):
            raise SchemaError("give all of --x1, --x2, --x3", pointer="")
        return reports.ft_eval_assemblage(_assemblage(args))
    if command == ("lhv", "decompose"):
        point = lhv.state_family(args.s, args.angles, args.lam)
        return reports.lhv_decompose(
            point, _classes(args), args.n_bob, robust=args.robust, symmetry=args.symmetry, ppt=args.ppt
        )
    if command == ("lhv", "scan"):
        samples = lhv.ua_samples(args.ua_grid, args.ua_random, seed=args.seed)
        table = lhv.scan_lambda_max(
            args.s_grid,
            samples,
            _classes(args),
            args.n_bob,
            method=args.method,
            jobs=args.jobs,
            seed=args.seed,
            symmetry=args.symmetry,
            ppt=args.ppt,
        )
        table.metadata.update(
            {
                "ua_grid": settings.ua_grid if args.ua_grid is None else args.ua_grid,
                "ua_random": settings.ua_random if args.ua_random is None else args.ua_random,
            }
        )
        if args.csv == "-":
            lhv.write_csv(table, out)
            return reports.Report({})
        if args.csv:
            with open(args.csv, "w", newline="") as handle:
                lhv.write_csv(table, handle)
        return reports.Report(table.model_dump())
    if args.command == "stdlib":
        return reports.stdlib(args.name, **_params(args))
    raise SchemaError(f"unknown command {' '.join(c for c in command if c)}", pointer="")


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    changes: Dict[str, Any] = {}
    if args.tol is not None:
        changes["feasibility_tol"] = args.tol
    if args.max_iter is not None:
        changes.update(solver_max_iter=args.max_iter, ft_max_iter=args.max_iter)
    return changes


def _emit(payload: dict, out: TextIO) -> None:
    out.write(json.dumps(reports.round_sig(payload), sort_keys=True, indent=2))
    out.write("\n")


def run(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    """Run one command; returns the exit code."""
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.verbose else None)
    changes = _overrides(args)
    previous = {name: getattr(settings, name) for name in changes}
    for name, value in changes.items():
        setattr(settings, name, value)
    try:
        report = _dispatch(args, out)
    except JmSteerError as exc:
        logger.error("{}: {}", type(exc).__name__, exc.message)
        _emit(exc.to_payload(), out)
        return exc.exit_code
    finally:
        for name, value in previous.items():
            setattr(settings, name, value)
    if report.payload or not (args.command == "lhv" and args.action == "scan"):
        _emit(report.payload, out)
    return EXIT_OK if report.positive else EXIT_NEGATIVE


def main() -> None:
    sys.exit(run())
