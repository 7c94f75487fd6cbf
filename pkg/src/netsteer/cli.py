"""``netsteer`` command line: bounds, decompositions, simulation, certification, noise tables."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, harness, protocol, schemas
from .certify import CertificationResult, noise_comparison
from .errors import IncompleteDataError, InvalidArgumentError, ResourceLimitError

OUTPUT_DIR_ENV = "NETSTEER_OUTPUT_DIR"
SIG_DIGITS = 9

EXIT_INVALID = 2
EXIT_RESOURCE = 3
EXIT_INCOMPLETE = 4

log = logging.getLogger("netsteer")


def sig(x):
    """Round every float in a JSON-like structure to the output precision."""
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, float):
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(x, dict):
        return {k: sig(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [sig(v) for v in x]
    return x


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg["output_dir"] = os.environ.get(OUTPUT_DIR_ENV)
    return cfg


def _destination(args, default_name: str) -> Path | None:
    if args.output:
        return Path(args.output)
    outdir = os.environ.get(OUTPUT_DIR_ENV)
    if outdir:
        return Path(outdir) / default_name
    return None


def _emit(args, text: str, default_name: str) -> None:
    dest = _destination(args, default_name)
    if dest is None:
        sys.stdout.write(text)
        return
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(text)
    log.info("wrote %s", dest)


def _emit_json(args, doc: dict, schema: str | None, stem: str) -> None:
    doc = sig({**doc, "config": _config(args)})
    if schema:
        schemas.validate(doc, schema)
    _emit(args, json.dumps(doc, indent=1) + "\n", f"{stem}.json")


def _emit_csv(args, header: list[str], rows, stem: str) -> None:
    buf = io.StringIO()
    for key, value in _config(args).items():
        buf.write(f"# {key}={json.dumps(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.{SIG_DIGITS}g}" if isinstance(v, float) else v for v in row])
    _emit(args, buf.getvalue(), f"{stem}.csv")


# -- subcommands ------------------------------------------------------------


def cmd_bound(args) -> None:
    if args.table:
        table = {"s1": bounds.small_grid, "s2": bounds.large_n_rows}[args.table]
        results = table(args.method)
    elif args.n is None:
        raise InvalidArgumentError("bound needs --n or --table")
    elif args.nc is not None:
        results = [bounds.max_classical_fidelity(args.n, args.nc, args.method, args.protocol,
                                                 witness=args.witness)]
    else:
        results = [bounds.classical_bound(args.n, args.method, args.protocol, witness=args.witness)]
    if args.format == "csv":
        rows = [(r.n, r.n_c, r.method, r.protocol, r.bound) for r in results]
        _emit_csv(args, ["n", "n_c", "method", "protocol", "bound"], rows, "bound")
    else:
        _emit_json(args, {"results": [r.to_dict() for r in results]}, "bound", "bound")


def cmd_decompose(args) -> None:
    d = protocol.decomposition(args.n, args.protocol)
    count = protocol.setting_count(d)
    if args.format == "csv":
        rows = [(c, " ".join(map(str, s))) for c, s in d.terms]
        _emit_csv(args, ["coeff", "setting"], rows, "decomposition")
    else:
        _emit_json(args, {**d.to_dict(), "setting_count": count}, "decomposition", "decomposition")


def _load_density(path: str) -> np.ndarray:
    doc = json.loads(Path(path).read_text())
    try:
        return np.array([[complex(re, im) for re, im in row] for row in doc], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{path}: expected a matrix of [re, im] pairs") from exc


def _emit_certification(args, result: CertificationResult) -> None:
    if args.format == "csv":
        fields = list(result.to_dict())
        _emit_csv(args, fields, [list(result.to_dict().values())], "certification")
    else:
        _emit_json(args, result.to_dict(), "certification", "certification")


def cmd_simulate(args) -> None:
    scenario = harness.Scenario(
        name=args.scenario if args.case is None else f"{args.scenario}-{args.case}",
        source=args.scenario,
        n=args.n,
        protocol=args.protocol,
        shots=args.shots,
        seed=args.seed,
        p=args.p,
        case=args.case,
        density=None if args.density is None else _load_density(args.density),
    )
    records, result = harness.run_scenario(scenario)
    n = result.n
    dest = args.records
    if dest is None and os.environ.get(OUTPUT_DIR_ENV):
        dest = str(Path(os.environ[OUTPUT_DIR_ENV]) / "records.json")
    if dest is not None:
        Path(dest).parent.mkdir(parents=True, exist_ok=True)
        harness.write_records(dest, records, n, args.protocol, {"config": _config(args)})
        log.info("wrote %s", dest)
    else:
        log.info("records not written; pass --records or set %s", OUTPUT_DIR_ENV)
    _emit_certification(args, result)


def cmd_certify(args) -> None:
    doc = json.loads(Path(args.records).read_text())
    n, proto, records = harness.records_from_dict(doc)
    if args.protocol is not None and args.protocol != proto:
        raise InvalidArgumentError(f"records were taken with protocol {proto!r}, not {args.protocol!r}")
    _emit_certification(args, harness.certify_records(records, n, proto))


def cmd_noise(args) -> None:
    rows = noise_comparison(args.n_max, args.n_min)
    if args.format == "json":
        doc = {"rows": [{"n": n, "p_xy": a, "p_pauli": b} for n, a, b in rows]}
        _emit_json(args, doc, None, "noise")
    else:
        _emit_csv(args, ["n", "p_xy", "p_pauli"], rows, "noise")


# -- parser -----------------------------------------------------------------


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help=f"output file (default: ${OUTPUT_DIR_ENV}/<command>.<ext>, else stdout)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--verbose", "-v", action="count", default=0)

    parser = argparse.ArgumentParser(prog="netsteer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="classical fidelity bounds")
    p.add_argument("--n", type=int)
    p.add_argument("--nc", type=int)
    p.add_argument("--method", choices=bounds.METHODS, default="reduced")
    p.add_argument("--protocol", choices=protocol.PROTOCOLS, default="ghz-xy")
    p.add_argument("--table", choices=("s1", "s2"), help="full grid: s1 is n=2..6, s2 is n=7..12 with one classical node")
    p.add_argument("--no-witness", dest="witness", action="store_false")
    p.set_defaults(func=cmd_bound, default_format="json")

    p = sub.add_parser("decompose", parents=[common], help="projector decomposition")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--protocol", choices=protocol.PROTOCOLS, default="ghz-xy")
    p.set_defaults(func=cmd_decompose, default_format="json")

    p = sub.add_parser("simulate", parents=[common], help="sample a scenario and certify it")
    p.add_argument("--scenario", choices=harness.SOURCES, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, help="white-noise fraction for the noise scenario")
    p.add_argument("--case", choices=tuple(bounds.EXTREMAL_CASES), help="extremal hybrid for the hybrid scenario")
    p.add_argument("--density", help="JSON file with a density matrix of [re, im] pairs")
    p.add_argument("--protocol", choices=protocol.PROTOCOLS, default="ghz-xy")
    p.add_argument("--shots", type=_positive, default=100_000)
    p.add_argument("--records", help="where to write the records file")
    p.set_defaults(func=cmd_simulate, default_format="json")

    p = sub.add_parser("certify", parents=[common], help="certify a records file")
    p.add_argument("--records", required=True)
    p.add_argument("--protocol", choices=protocol.PROTOCOLS)
    p.set_defaults(func=cmd_certify, default_format="json")

    p = sub.add_parser("noise", parents=[common], help="white-noise tolerance table")
    p.add_argument("--n-max", type=int, default=14)
    p.add_argument("--n-min", type=int, default=2)
    p.set_defaults(func=cmd_noise, default_format="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    del args.default_format
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except IncompleteDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except ResourceLimitError as exc:
        print(f"error: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
