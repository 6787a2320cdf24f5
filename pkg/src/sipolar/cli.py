"""Command-line interface.

Exit status is 0 on success, 2 for invalid configuration or input and 3 when
a computation would exceed its resource budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, codec, construct, gaussquant, keygen, layered, sim
from .construct import CodeSpec
from .errors import BudgetExceededError, ConfigError, SipolarError

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError("arguments", message)


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < sim.U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _global_flags(p, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=_u64, default=d(None), help="64-bit seed (required for stochastic tasks)")
    p.add_argument("--out", default=d(None), help="write the result here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=d("json"))


def _source_flags(p, kinds=("file", "bsc", "erasure")):
    g = p.add_mutually_exclusive_group()
    if "file" in kinds:
        g.add_argument("--source-file", help="source in its textual format")
    if "bsc" in kinds:
        g.add_argument("--bsc", type=float, metavar="P", help="uniform X, Y = X through a BSC(P)")
    if "erasure" in kinds:
        g.add_argument("--erasure", type=float, metavar="EPS", help="uniform X, Y erased with probability EPS")
    if "qary" in kinds:
        g.add_argument("--qary", nargs=2, type=float, metavar=("M", "P"),
                       help="X uniform on 2^M symbols, Y = X with probability 1-P")
    if "chain" in kinds:
        g.add_argument("--chain", nargs=2, type=float, metavar=("P", "Q"),
                       help="Markov chain of user bits (flip P), Y = last user through BSC(Q)")
    if "gaussian" in kinds:
        g.add_argument("--rho", type=float, help="standard Gaussian pair with correlation RHO")


def _code_flags(p, rate_default=None):
    p.add_argument("--n", type=int, default=10, help="blocklength exponent, N = 2^n")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--k", type=int, default=None, help="bins per most likely symbol (default: capped gap-driven value)")
    g.add_argument("--exact", action="store_true", help="exact construction (small n only)")
    s = p.add_mutually_exclusive_group()
    s.add_argument("--rate", type=float, default=rate_default)
    s.add_argument("--z-threshold", type=float)
    s.add_argument("--count", type=int)
    p.add_argument("--eps", type=float, default=0.05, help="rate slack over the mean entropy when no selection is given")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sipolar", description="Polar codes for sources with side information.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", parents=[common], help="build a code and write it as JSON")
    _source_flags(p)
    _code_flags(p)
    p.add_argument("--h-threshold", type=float)

    p = sub.add_parser("encode", parents=[common], help="compress a block of bits")
    p.add_argument("--code-file", required=True)
    p.add_argument("--input", required=True, help="text file of 0/1 characters (whitespace ignored)")

    p = sub.add_parser("decode", parents=[common], help="decompress a block given side information")
    p.add_argument("--code-file", required=True)
    p.add_argument("--block", required=True, help="compressed block in wire format")
    p.add_argument("--side", required=True, help="text file of whitespace-separated side symbols")
    _source_flags(p)

    for name, kinds, hlp in (
        ("simulate", ("file", "bsc", "erasure"), "Monte Carlo block error of a binary code"),
        ("layered", ("file", "bsc", "qary"), "onion-peeling code for a 2^m-ary source"),
        ("keygen", ("file", "bsc", "gaussian"), "secret-key agreement"),
        ("sw", ("file", "chain"), "distributed compression of m users"),
    ):
        p = sub.add_parser(name, parents=[common], help=hlp)
        _source_flags(p, kinds)
        _code_flags(p)
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--batch", type=int, default=256)
        if name in ("layered", "keygen"):
            p.add_argument("--m", type=int, help="number of bit layers")
        if name == "keygen":
            p.add_argument("--k-y", type=int, default=64, help="Y cells used to construct Gaussian codes")
        if name == "sw":
            p.add_argument("--users", type=int, help="number of users")
            p.add_argument("--order", type=int, nargs="+", help="decoding order of the users")
            p.add_argument("--genie", action="store_true", help="report errors with true earlier users")

    p = sub.add_parser("gauss", parents=[common], help="Gaussian quantizer report")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--k", type=int, default=256, help="quantizer cells")
    p.add_argument("--check-lemma7", action="store_true", help="also scan k = 2..1024 against the rate-loss bound")
    p.add_argument("--C", type=float, default=gaussquant.DEFAULT_C, help=argparse.SUPPRESS)

    p = sub.add_parser("scaling", parents=[common], help="smallest rate per blocklength at a target error")
    _source_flags(p)
    p.add_argument("--ns", type=int, nargs="+", default=[10, 12, 14])
    p.add_argument("--k", type=int, default=construct.MAX_DEFAULT_BINS)
    p.add_argument("--target", type=float, default=1e-2)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--batch", type=int, default=256)
    return parser


def _source_dict(args) -> dict:
    if getattr(args, "source_file", None):
        return {"kind": "file", "path": args.source_file}
    if getattr(args, "erasure", None) is not None:
        return {"kind": "erasure", "eps": args.erasure}
    if getattr(args, "qary", None) is not None:
        m, p = args.qary
        if m != int(m):
            raise ConfigError("qary", "M must be an integer")
        return {"kind": "qary", "m": int(m), "p": p}
    if getattr(args, "chain", None) is not None:
        if not args.users:
            raise ConfigError("users", "--chain needs --users")
        return {"kind": "chain", "users": args.users, "p": args.chain[0], "q": args.chain[1]}
    if getattr(args, "rho", None) is not None:
        return {"kind": "gaussian", "rho": args.rho}
    if getattr(args, "bsc", None) is not None:
        return {"kind": "bsc", "p": args.bsc}
    raise ConfigError("source", "give a source (--source-file or a built-in family)")


def _bins(args) -> int | None:
    if getattr(args, "exact", False):
        return None
    if args.k is not None:
        return args.k
    return construct.default_bins(args.n, args.eps)


def _emit(args, text: str | bytes):
    out = getattr(args, "out", None)
    if out is None:
        if isinstance(text, bytes):
            sys.stdout.write(text.hex() + "\n")
        else:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(out)
    if isinstance(text, bytes):
        path.write_bytes(text)
    else:
        path.write_text(text if text.endswith("\n") else text + "\n")


def _read(path: str, binary: bool = False):
    try:
        return Path(path).read_bytes() if binary else Path(path).read_text()
    except OSError as exc:
        raise ConfigError(path, exc.strerror or "cannot read") from None


def _load_code(path: str) -> CodeSpec:
    try:
        return CodeSpec.from_json(_read(path))
    except (ValueError, SipolarError) as exc:
        raise ConfigError("code-file", str(exc)) from None


def cmd_construct(args):
    s = sim.binary_source(_source_dict(args))
    k = _bins(args)
    spec = construct.build(s, args.n, k)
    if args.rate is not None:
        spec = construct.select_indices(spec, rate=args.rate)
    elif args.z_threshold is not None:
        spec = construct.select_indices(spec, z_threshold=args.z_threshold)
    elif args.count is not None:
        spec = construct.select_indices(spec, count=args.count)
    elif args.h_threshold is not None:
        spec = construct.select_indices(spec, h_threshold=args.h_threshold)
    else:
        spec = construct.select_indices(spec, rate=min(1.0, spec.mean_h + args.eps))
    if args.format == "csv":
        mask = spec.mask
        lines = ["index,h,z,selected"] + [f"{i},{spec.h[i]!r},{spec.z[i]!r},{int(mask[i])}" for i in range(spec.N)]
        _emit(args, "\n".join(lines))
    else:
        _emit(args, spec.to_json())


def cmd_encode(args):
    code = _load_code(args.code_file)
    text = "".join(_read(args.input).split())
    if set(text) - {"0", "1"}:
        raise ConfigError("input", "expected only 0 and 1 characters")
    x = np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")
    if x.size != code.N:
        raise ConfigError("input", f"expected {code.N} bits, got {x.size}")
    _emit(args, codec.compress(x, code).to_bytes())


def cmd_decode(args):
    code = _load_code(args.code_file)
    s = sim.binary_source(_source_dict(args))
    block = codec.CompressedBlock.from_bytes(_read(args.block, binary=True), code)
    try:
        y = np.array([int(v) for v in _read(args.side).split()], dtype=np.int64)
    except ValueError as exc:
        raise ConfigError("side", str(exc)) from None
    if y.size != code.N:
        raise ConfigError("side", f"expected {code.N} side symbols, got {y.size}")
    try:
        llr = codec.llr_from_side_info(s, y)
    except KeyError as exc:
        raise ConfigError("side", str(exc)) from None
    x = codec.decompress(block, llr)
    _emit(args, "".join(map(str, x.tolist())))


def _config(args, task: str) -> sim.ExperimentConfig:
    cfg = sim.ExperimentConfig(
        task=task, source=_source_dict(args), n=args.n, k=_bins(args), rate=args.rate,
        z_threshold=args.z_threshold, count=args.count, eps=args.eps, trials=args.trials,
        seed=args.seed, batch=args.batch,
    )
    cfg.m = getattr(args, "m", None) or getattr(args, "users", None)
    cfg.genie = bool(getattr(args, "genie", False))
    cfg.order = tuple(args.order) if getattr(args, "order", None) else None
    if task == "keygen":
        cfg.k_y = args.k_y
    return cfg


def _report(args, report: sim.SimReport):
    _emit(args, report.to_csv() if args.format == "csv" else report.to_json())


def cmd_sim(task):
    def run(args):
        cfg = _config(args, task)
        report = sim.run_simulation(cfg)
        if task == "keygen":
            _attach_example_key(cfg, report)
        _report(args, report)
    return run


def _attach_example_key(cfg: sim.ExperimentConfig, report: sim.SimReport):
    """Hex W and K of the first trial's block, as a worked example of the protocol."""
    src = cfg.source
    if src["kind"] == "gaussian":
        ls = keygen.gaussian_key_source(float(src["rho"]), cfg.m or 1, cfg.k_y)
    else:
        ls = sim.layered_source(src, cfg.m)
    base = keygen.keygen_construct(ls, cfg.n, cfg.k, z_threshold=cfg.z_threshold, eps=cfg.eps)
    if cfg.rate is not None or cfg.count is not None:
        spec = layered.LayeredSpec(tuple(sim.select(cfg, s) for s in base.specs), base.layer_entropies)
    else:
        spec = base
    if src["kind"] == "gaussian":
        xr, _ = sim.sample_gaussian_pairs(float(src["rho"]), cfg.seed, range(1), spec.N)
        x = gaussquant.quantize(gaussquant.build_quantizer(1 << spec.m), xr)[0][0] - 1
    else:
        x, _ = sim.sample_layered(ls, cfg.seed, range(1), spec.N)
        x = x[0]
    km = keygen.derive_at_a(spec, x)
    report.results["W_hex"] = np.packbits(km.public_bits()).tobytes().hex()
    report.results["K_hex"] = np.packbits(km.key_bits()).tobytes().hex()
    if "audit" in report.results:
        a = report.results["audit"]
        report.results["audit"] = {"H_K": a["key_entropy_bits"], "I_KW": a["mi_key_public_bits"], **a}


def cmd_gauss(args):
    if args.k < 2:
        raise ConfigError("k", "quantizer needs at least 2 cells")
    try:
        q = gaussquant.build_quantizer(args.k)
        res = {
            "rho": args.rho,
            "k": args.k,
            "rho_tilde": gaussquant.induced_correlation(q, args.rho),
            "mi_exact": gaussquant.mi_gaussian(args.rho),
            "mi_quantized": gaussquant.mi_quantized(q, args.rho),
            "lemma7_rhs": gaussquant.lemma7_bound(args.rho, args.k, args.C),
            "mi_lower_bound": gaussquant.mi_lower_bound(q, args.rho),
        }
    except SipolarError as exc:
        raise ConfigError("rho", str(exc)) from None
    if args.check_lemma7:
        scan = gaussquant.lemma7_threshold_scan(args.rho, C=args.C)
        res["lemma7_holds"] = res["mi_quantized"] >= res["lemma7_rhs"] - 1e-5
        res["lemma7_scan"] = scan
    if args.format == "csv":
        cols = ["rho", "k", "rho_tilde", "mi_exact", "mi_quantized", "lemma7_rhs"]
        _emit(args, ",".join(cols) + "\n" + ",".join(repr(res[c]) for c in cols))
    else:
        _emit(args, json.dumps(res, indent=1))


def cmd_scaling(args):
    cfg = sim.ExperimentConfig(task="scaling", source=_source_dict(args), k=args.k, target=args.target,
                               trials=args.trials, seed=args.seed, batch=args.batch, ns=tuple(args.ns))
    _report(args, sim.run_simulation(cfg))


COMMANDS = {
    "construct": cmd_construct,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "simulate": cmd_sim("simulate"),
    "layered": cmd_sim("layered"),
    "keygen": cmd_sim("keygen"),
    "sw": cmd_sim("sw"),
    "gauss": cmd_gauss,
    "scaling": cmd_scaling,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except BudgetExceededError as exc:
        print(f"sipolar: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except MemoryError:
        print("sipolar: out of memory", file=sys.stderr)
        return EXIT_BUDGET
    except SipolarError as exc:
        print(f"sipolar: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
