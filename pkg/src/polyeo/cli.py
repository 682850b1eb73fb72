"""Command-line entry point.

Every subcommand writes CSV (header row, fixed column order) to ``--out`` or
stdout. Exit codes: 0 success, 2 bad input, 3 infeasible or over capacity,
1 any other model error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from polyeo import __version__, ceona, device, dfrc, link_budget, pbau
from polyeo.errors import CapacityError, InfeasibleError, InputError, PolyEOError
from polyeo.unary import Gate, OperandPrecision

DEFAULT_SEED = 1234

EXIT_OK = 0
EXIT_MODEL = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", newline="") as fh:
        yield fh


def _check_out(path: str | None) -> None:
    if path and path != "-":
        parent = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(parent):
            raise InputError(f"output directory does not exist: {parent}")


def _check_in(path: str | None, what: str) -> None:
    if path is not None and not os.path.isfile(path):
        raise InputError(f"{what} not found: {path}")


# --- subcommands ----------------------------------------------------------------

def cmd_gate(args) -> int:
    g = Gate.parse(args.gate)
    cfg = device.program_gate(g, device.MrrGateConfig(fwhm=args.fwhm, shift_nm=args.shift))
    with _output(args.out) as fh:
        if args.sweep:
            device.write_spectral_csv(device.spectral_sweep(cfg, points=args.points), fh)
            return EXIT_OK
        if args.x is None or args.w is None:
            raise InputError("--x and --w are required without --sweep")
        for name, v in (("x", args.x), ("w", args.w)):
            if v not in (0, 1):
                raise InputError(f"--{name} must be 0 or 1")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gate", "port", "x", "w", "out"])
        writer.writerow([g.value, cfg.port.value, args.x, args.w, device.gate_eval(cfg, g, args.x, args.w)])
    return EXIT_OK


def cmd_pbau(args) -> int:
    modes = [pbau.PbauMode.parse(m) for m in args.op]
    for m in modes:
        if m not in pbau.ARITH_GATE:
            raise InputError(f"--op must be add, sub or mul, got {m.value}")
    unit = pbau.Pbau()
    with _output(args.out) as fh:
        if args.exhaustive:
            results = [pbau.mae_sweep(m, OperandPrecision(b), unit) for m in modes for b in args.bits]
            pbau.write_sweep_csv(results, fh)
            return EXIT_OK
        if args.x is None or args.w is None:
            raise InputError("--x and --w are required without --exhaustive")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["op", "B", "x", "w", "result", "latency_ns", "energy_pJ"])
        for m in modes:
            for b in args.bits:
                rep = unit.execute(m, args.x, args.w, OperandPrecision(b))
                writer.writerow([m.value, b, args.x, args.w, rep.result, f"{rep.latency_ns:.4g}",
                                 f"{rep.energy_pJ:.4g}"])
    return EXIT_OK


def cmd_scalability(args) -> int:
    _check_in(args.params, "parameter file")
    params = link_budget.load_params(args.params)
    archs = [link_budget.Arch.parse(a) for a in args.archs]
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        points = link_budget.sweep(params, archs, args.bits, args.sr, executor=pool)
    with _output(args.out) as fh:
        link_budget.write_sweep_csv(points, fh)
    return EXIT_OK


def cmd_ceona(args) -> int:
    _check_in(args.model, "network file")
    _check_in(args.params, "parameter file")
    network = ceona.load_network(args.model)
    params = link_budget.load_params(args.params).for_arch(link_budget.Arch.CEONA_I)
    cfg = ceona.CopuConfig(n=args.n, m=args.m, sr_gsps=args.sr, mode=args.mode, bits=args.bits,
                           gamma=args.gamma)
    report = ceona.estimate_performance(network, cfg, params)
    with _output(args.out) as fh:
        ceona.write_report_csv(report, fh)
    return EXIT_OK


def cmd_dfrc(args) -> int:
    seed = args.seed
    if args.task == "santafe":
        if args.data is None:
            raise InputError("--data is required for the santafe task")
        _check_in(args.data, "Santa Fe data file")
        series = dfrc.santafe_load(args.data)
        results = [dfrc.run_santafe(series, args.nv, args.train, args.test, seed)]
    elif args.task == "narma10":
        results = [dfrc.run_narma10(args.nv, args.train, args.test, seed)]
    else:
        def run(snr):
            return dfrc.run_chaneq(snr, args.nv, args.train, args.test, seed)
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, args.snr))
    with _output(args.out) as fh:
        dfrc.write_results_csv(results, fh, timing=args.timing)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyeo", description="Polymorphic electro-optic computing simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--jobs", type=int, default=4, help="worker threads for sweeps")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output CSV path (default stdout)")

    g = sub.add_parser("gate", help="evaluate the MRR logic gate or export its spectra")
    g.add_argument("--gate", required=True, choices=[x.value for x in Gate])
    g.add_argument("--x", type=int)
    g.add_argument("--w", type=int)
    g.add_argument("--sweep", action="store_true", help="write transmission spectra per (x, w)")
    g.add_argument("--points", type=int, default=241)
    g.add_argument("--fwhm", type=float, default=0.05, help="resonance FWHM, nm")
    g.add_argument("--shift", type=float, default=0.4, help="resonance shift per input, nm")
    common(g)
    g.set_defaults(func=cmd_gate)

    b = sub.add_parser("pbau", help="run PBAU arithmetic or exhaustive error sweeps")
    b.add_argument("--op", type=_str_list, required=True, help="add, sub, mul (comma list)")
    b.add_argument("--bits", type=_int_list, default=[8], help="operand width(s) B")
    b.add_argument("--x", type=int)
    b.add_argument("--w", type=int)
    b.add_argument("--exhaustive", action="store_true")
    common(b)
    b.set_defaults(func=cmd_pbau)

    s = sub.add_parser("scalability", help="max supported N over an (arch, B, SR) grid")
    s.add_argument("--archs", type=_str_list, default=["ceona_i", "amw", "maw"])
    s.add_argument("--bits", type=_int_list, default=[2, 4, 6, 8, 10])
    s.add_argument("--sr", type=_float_list, default=[0.5, 1, 3, 5], help="symbol rates, GS/s")
    s.add_argument("--params", help=f"parameter file (default: ${link_budget.PARAMS_ENV} or bundled)")
    common(s)
    s.set_defaults(func=cmd_scalability)

    c = sub.add_parser("ceona", help="CEONA performance estimate for a network file")
    c.add_argument("--mode", choices=["bnn", "int"], default="bnn")
    c.add_argument("--bits", type=int, default=8, help="integer precision for --mode int")
    c.add_argument("--model", required=True, help="network description file")
    c.add_argument("--n", type=int, default=64)
    c.add_argument("--m", type=int, default=64)
    c.add_argument("--sr", type=float, default=50.0, help="symbol rate, GS/s")
    c.add_argument("--gamma", type=int, help="override PCA capacity")
    c.add_argument("--params")
    common(c)
    c.set_defaults(func=cmd_ceona)

    d = sub.add_parser("dfrc", help="delay-feedback reservoir benchmark tasks")
    d.add_argument("--task", choices=["narma10", "chaneq", "santafe"], required=True)
    d.add_argument("--nv", type=int, default=400)
    d.add_argument("--train", type=int, default=4000)
    d.add_argument("--test", type=int, default=1000)
    d.add_argument("--snr", type=_float_list, default=[12, 16, 20, 24, 28, 32], help="chaneq SNRs, dB")
    d.add_argument("--data", help="Santa Fe series, one value per line")
    d.add_argument("--timing", action="store_true", help="fill wall_time_ms (breaks byte-identical reruns)")
    common(d)
    d.set_defaults(func=cmd_dfrc)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_out(getattr(args, "out", None))
        return args.func(args)
    except InputError as exc:
        print(f"polyeo: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InfeasibleError, CapacityError) as exc:
        print(f"polyeo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except PolyEOError as exc:
        print(f"polyeo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
