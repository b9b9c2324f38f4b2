"""Command-line front end: ``pfaffcubic represent|verify|canon``.

Exit codes: 0 success, 1 bad input (syntax, schema, unreadable file),
2 construction or verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import mpmath

from . import numerics
from .cubic_io import cubic_from_json, parse_cubic, read_request
from .errors import InputError, RepresentationFailed, SchemaError
from .pipeline import Options, canon_report, represent, verify_file

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FAILED = 2

PRECISION_ENV = "PFAFF_PRECISION_BITS"
MIN_BITS, MAX_BITS = 64, 4096


@dataclass(frozen=True)
class Config:
    precision_bits: int = numerics.DEFAULT_PRECISION
    cert_eps: str | None = None
    seed: int = 0
    format: str = "json"
    d11_branch: str = "plus"
    max_rotations: int = 20
    timings: bool = False

    def __post_init__(self):
        if not MIN_BITS <= self.precision_bits <= MAX_BITS:
            raise InputError(f"precision_bits must lie in [{MIN_BITS}, {MAX_BITS}]")
        if self.max_rotations < 1:
            raise InputError("max_rotations must be at least 1")

    def options(self, seed: int | None = None, precision_bits: int | None = None) -> Options:
        return Options(
            precision_bits=precision_bits or self.precision_bits,
            cert_eps=self.cert_eps,
            seed=self.seed if seed is None else seed,
            d11_branch=self.d11_branch,
            max_rotations=self.max_rotations,
        )


def _default_bits() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return numerics.DEFAULT_PRECISION
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{PRECISION_ENV} must be an integer, got {raw!r}") from None


def _add_common(p: argparse.ArgumentParser, cubic_required: bool = False):
    src = p.add_mutually_exclusive_group(required=cubic_required)
    src.add_argument("--cubic", help="cubic as an expression in x, y, z, t")
    src.add_argument("--theta-file", help='JSON file {"cubic": ...} or {"theta": [[re, im] x 20]}')
    p.add_argument("--precision-bits", type=int, default=None,
                   help=f"working precision (default 256 or ${PRECISION_ENV})")
    p.add_argument("--cert-eps", default=None, help="certification tolerance override")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "text"), default="json")


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors: exit 1 rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pfaffcubic",
        description="Pfaffian representations of complex cubic surfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rep = sub.add_parser("represent", help="build and certify six-by-six skew matrices")
    _add_common(rep)
    rep.add_argument("--batch", help="file with one JSON request per line")
    rep.add_argument("--jobs", type=int, default=None, help="worker processes for --batch")
    rep.add_argument("--d11-branch", choices=("plus", "minus"), default="plus")
    rep.add_argument("--max-rotations", type=int, default=20)
    rep.add_argument("--timings", action="store_true",
                     help="include per-stage timings (makes output non-deterministic)")

    ver = sub.add_parser("verify", help="check matrices against a cubic")
    _add_common(ver, cubic_required=True)
    ver.add_argument("--matrices", required=True, help="JSON file as written by represent")

    can = sub.add_parser("canon", help="analyse the y = 0 plane section only")
    _add_common(can, cubic_required=True)
    return parser


def _config(args) -> Config:
    bits = args.precision_bits if args.precision_bits is not None else _default_bits()
    return Config(
        precision_bits=bits,
        cert_eps=args.cert_eps,
        seed=args.seed,
        format=args.format,
        d11_branch=getattr(args, "d11_branch", "plus"),
        max_rotations=getattr(args, "max_rotations", 20),
        timings=getattr(args, "timings", False),
    )


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _request_from_args(args) -> dict:
    if args.cubic is not None:
        return {"cubic": args.cubic}
    data = _load_json(args.theta_file)
    if isinstance(data, dict) and "cubic" not in data and "theta" in data:
        data = {"cubic": data}
    return read_request(data)


def _emit(obj, fmt: str, text_fn, out=None):
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(obj, indent=2) + "\n")
    else:
        out.write(text_fn(obj) + "\n")


def _fmt_pair(pair, digits: int = 12) -> str:
    c = mpmath.mpc(mpmath.mpf(pair[0]), mpmath.mpf(pair[1]))
    return mpmath.nstr(c, digits)


def _represent_text(obj: dict) -> str:
    cert = obj["certificate"]
    lines = [
        f"cubic: {obj['cubic']}",
        f"branch: {obj['branch']}",
        f"certificate: {'pass' if cert['pass'] else 'FAIL'} "
        f"(pf residual {cert['pf_residual']:.3e}, det residual {cert['det_residual']:.3e}, "
        f"sample residual {cert['sample_residual']:.3e})",
    ]
    label = obj["classification"].get("slice")
    if label:
        lines.append(f"y=0 section: {label['family']}{label['index']} {label['form']}")
    if obj["classification"].get("surface_reducible"):
        lines.append("surface is reducible (hyperplane factor)")
    if obj.get("deviation"):
        lines.append(f"note: {obj['deviation']}")
    names = "xyzt"
    for k, m in enumerate(obj["matrices"]):
        lines.append(f"A{k} ({names[k]}):")
        for row in m:
            lines.append("  " + "  ".join(f"{_fmt_pair(v, 8):>24}" for v in row))
    if "timings_ms" in obj:
        lines.append("timings (ms): " + ", ".join(f"{k}={v}" for k, v in obj["timings_ms"].items()))
    return "\n".join(lines)


def _represent_one(request: dict, config: Config, seed: int) -> dict:
    bits = request.get("precision_bits", config.precision_bits)
    if not MIN_BITS <= bits <= MAX_BITS:
        raise InputError(f"precision_bits must lie in [{MIN_BITS}, {MAX_BITS}]")
    options = config.options(seed=request.get("seed", seed), precision_bits=bits)
    with numerics.working_precision(bits, options.cert_eps):
        c = cubic_from_json(request["cubic"])
    return represent(c, options).to_json(timings=config.timings)


def _batch_worker(job) -> tuple[str, dict]:
    index, line, config = job
    try:
        request = read_request(json.loads(line))
        return "ok", {"index": index, **_represent_one(request, config, config.seed + index)}
    except json.JSONDecodeError as exc:
        return "input_error", {"index": index, "error": "SchemaError", "message": exc.msg}
    except InputError as exc:
        return "input_error", {"index": index, "error": type(exc).__name__, "message": str(exc)}
    except RepresentationFailed as exc:
        return "failed", {"index": index, "error": "RepresentationFailed", "stage": exc.stage,
                          "message": str(exc)}


def _run_batch(args, config: Config) -> int:
    try:
        with open(args.batch, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read {args.batch}: {exc.strerror}") from None
    jobs = [(i, ln, config) for i, ln in enumerate(lines)]
    workers = args.jobs or os.cpu_count() or 1
    if workers <= 1 or len(jobs) <= 1:
        results = [_batch_worker(j) for j in jobs]
    else:
        # separate processes: mpmath precision is global per interpreter
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_batch_worker, jobs))
    counts = {"ok": 0, "failed": 0, "input_error": 0}
    for status, record in results:
        counts[status] += 1
        if config.format == "json":
            sys.stdout.write(json.dumps({"status": status, **record}) + "\n")
        elif status == "ok":
            sys.stdout.write(f"[{record['index']}] {record['branch']} "
                             f"pass={record['certificate']['pass']} {record['cubic']}\n")
        else:
            sys.stdout.write(f"[{record['index']}] {status}: {record['message']}\n")
    summary = {"total": len(results), **counts}
    if config.format == "json":
        sys.stdout.write(json.dumps({"summary": summary}) + "\n")
    else:
        sys.stdout.write(f"summary: {summary['total']} total, {counts['ok']} ok, "
                         f"{counts['failed']} failed, {counts['input_error']} input errors\n")
    if counts["failed"]:
        return EXIT_FAILED
    if counts["input_error"]:
        return EXIT_INPUT
    return EXIT_OK


def cmd_represent(args) -> int:
    config = _config(args)
    if args.batch:
        if args.cubic is not None or args.theta_file is not None:
            raise InputError("--batch cannot be combined with --cubic or --theta-file")
        return _run_batch(args, config)
    if args.cubic is None and args.theta_file is None:
        raise InputError("one of --cubic, --theta-file or --batch is required")
    obj = _represent_one(_request_from_args(args), config, config.seed)
    _emit(obj, config.format, _represent_text)
    return EXIT_OK


def _verify_text(obj: dict) -> str:
    return "\n".join([
        f"{'pass' if obj['pass'] else 'FAIL'}",
        f"pf residual: {obj['pf_residual']:.3e}",
        f"det residual: {obj['det_residual']:.3e}",
        f"sample residual: {obj['sample_residual']:.3e}",
        f"tolerance: {obj['cert_eps']:.3e} x scale {obj['scale']:.3e}",
    ])


def cmd_verify(args) -> int:
    config = _config(args)
    request = _request_from_args(args)
    data = _load_json(args.matrices)
    bits = request.get("precision_bits", config.precision_bits)
    if isinstance(data, dict) and isinstance(data.get("precision_bits"), int):
        bits = max(bits, data["precision_bits"])
    with numerics.working_precision(bits, config.cert_eps):
        c = cubic_from_json(request["cubic"])
        cert = verify_file(data, c, seed=config.seed)
        obj = cert.to_json()
    _emit(obj, config.format, _verify_text)
    return EXIT_OK if cert.passed else EXIT_FAILED


def _canon_text(obj: dict) -> str:
    lines = [f"section y=0: {obj['slice']}"]
    label = obj.get("label")
    if label is None:
        lines.append("section is identically zero")
        return "\n".join(lines)
    lines.append(f"label: {label['family']}{label['index']} {label['form']}"
                 + (" (ambiguous)" if label["ambiguous"] else ""))
    if "alpha" in label:
        lines.append(f"alpha: {_fmt_pair(label['alpha'])}")
    if "lambda" in obj:
        for k in ("3", "7", "8"):
            lines.append(f"lambda{k}: {_fmt_pair(obj['lambda'][k])}")
        lines.append("transform:")
        for row in obj["transform"]:
            lines.append("  " + "  ".join(f"{_fmt_pair(v, 10):>26}" for v in row))
    for ln in obj["lines"]:
        a, b, c = (_fmt_pair(v) for v in ln)
        lines.append(f"line: ({a})*x + ({b})*z + ({c})*t")
    return "\n".join(lines)


def cmd_canon(args) -> int:
    config = _config(args)
    request = _request_from_args(args)
    bits = request.get("precision_bits", config.precision_bits)
    with numerics.working_precision(bits, config.cert_eps):
        c = cubic_from_json(request["cubic"])
        obj = canon_report(c)
    _emit(obj, config.format, _canon_text)
    return EXIT_OK


COMMANDS = {"represent": cmd_represent, "verify": cmd_verify, "canon": cmd_canon}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:  # e.g. tolerance below the precision floor
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RepresentationFailed as exc:
        print(f"error: RepresentationFailed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
