"""Command-line front end.

Subcommands write a CSV (to ``--out`` or stdout) and, with ``--out``, a JSON
envelope next to it that embeds the kernel's admissibility report. Exit
codes: 0 success, 1 invalid input or refused kernel, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import acceptance
from . import diffusion as df
from . import kernels as kc
from . import relaxation as rl
from . import renewal as rn
from . import sonine as so
from .sampled import SampledFunction, log_grid, uniform_grid

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("genfrac")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


def _parse_kernel(text: str) -> kc.KernelSpec:
    if text.startswith("@"):
        text = Path(text[1:]).read_text(encoding="utf-8")
    try:
        return kc.parse_kernel(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"kernel: {exc}") from exc


def _kernel_arg(text: str) -> kc.KernelSpec:
    try:
        return _parse_kernel(text)
    except (ConfigError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _jsonable(obj):
    """Replace non-finite floats (limit probes can be infinite) by strings."""
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dumps(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_csv(columns: dict[str, np.ndarray], out: Path | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    writer.writerow(names)
    for row in zip(*(np.asarray(columns[n], dtype=float) for n in names)):
        writer.writerow([repr(float(v)) for v in row])
    if out is None:
        sys.stdout.write(buf.getvalue())
    else:
        out.write_text(buf.getvalue(), encoding="utf-8")


def _write_envelope(payload: dict, out: Path | None) -> None:
    if out is not None:
        out.with_suffix(".json").write_text(_dumps(payload), encoding="utf-8")


def _envelope(command: str, spec: kc.KernelSpec | None, params: dict, **extra) -> dict:
    env = {"command": command, "version": __version__, "parameters": params}
    if spec is not None:
        env["kernel"] = spec.to_dict()
        env["condition_report"] = kc.check_condition_star(spec).to_dict()
    env.update(extra)
    return env


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ConfigError(f"{name}: must be positive, got {value}")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_kernel_check(args) -> int:
    spec = args.kernel
    payload = _envelope("kernel-check", spec, {})
    sys.stdout.write(_dumps(payload["condition_report"]))
    _write_envelope(payload, args.out)
    return EXIT_OK


def cmd_sonine(args) -> int:
    spec = args.kernel
    _positive("tmin", args.tmin)
    if not args.tmax > args.tmin:
        raise ConfigError("tmax: must exceed tmin")
    if args.points < 2:
        raise ConfigError("points: need at least 2")
    kc.require_condition_star(spec)
    t = log_grid(args.tmin, args.tmax, args.points)
    kappa = so.SonineKernel(spec)(t)
    res = np.array([so.sonine_residual(spec, v) for v in t])
    _write_csv({"t": t, "kappa": kappa, "residual": res}, args.out)
    params = {"tmin": args.tmin, "tmax": args.tmax, "points": args.points}
    _write_envelope(_envelope("sonine", spec, params, max_abs_residual=float(np.max(np.abs(res)))), args.out)
    return EXIT_OK


def cmd_relax(args) -> int:
    spec = args.kernel
    if not args.lam >= 0:
        raise ConfigError(f"lambda: must be nonnegative, got {args.lam}")
    _positive("tmax", args.tmax)
    _positive("step", args.step)
    grid = uniform_grid(args.tmax, args.step)
    sol = rl.solve_relaxation(spec, args.lam, grid)
    _write_csv({"t": grid, "u": sol.samples.values}, args.out)
    params = {"lambda": args.lam, "tmax": args.tmax, "step": args.step}
    _write_envelope(_envelope("relax", spec, params, violations=sol.violations), args.out)
    return EXIT_OK


def _initial_datum(name: str, x: np.ndarray) -> SampledFunction:
    if name == "gaussian":
        return SampledFunction(x, np.exp(-(x**2)))
    if name == "step":
        return SampledFunction(x, 0.5 * (1.0 + np.tanh(x / 0.1)))
    if name == "one":
        return SampledFunction(x, np.ones_like(x))
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"w0: expected gaussian, step, one or a CSV path, got {name!r}")
    return SampledFunction.from_csv(path)


def cmd_heat(args) -> int:
    spec = args.kernel
    _positive("t", args.t)
    _positive("xmax", args.xmax)
    _positive("dx", args.dx)
    if args.n not in (1, 2, 3):
        raise ConfigError(f"n: must be 1, 2 or 3, got {args.n}")
    params = {"t": args.t, "n": args.n, "xmax": args.xmax, "dx": args.dx, "w0": args.w0, "method": args.method}
    if args.w0 is None:
        start = -args.xmax if args.n == 1 else args.dx
        x = uniform_grid(args.xmax, args.dx, start=start)
        sol = df.Z_profile(spec, args.t, x, args.n, method=args.method)
        _write_csv({"x": x, "Z": sol.Z_values}, args.out)
    else:
        if args.n != 1:
            raise ConfigError("n: initial data are supported for n = 1 only")
        w0 = _initial_datum(args.w0, uniform_grid(args.xmax, args.dx, start=-args.xmax))
        sol = df.solve_heat(spec, w0, args.t)
        _write_csv({"x": w0.grid, "w0": w0.values, "w": sol.w_values}, args.out)
    _write_envelope(_envelope("heat", spec, params, diagnostics=sol.to_dict()), args.out)
    return EXIT_OK


def cmd_renew(args) -> int:
    if (args.alpha is None) == (args.kernel is None):
        raise ConfigError("alpha/kernel: give exactly one of --alpha or --kernel")
    _positive("lambda", args.lam)
    _positive("step", args.step)
    if args.paths < 1:
        raise ConfigError("paths: must be positive")
    if args.jumps < 1:
        raise ConfigError("jumps: must be positive")
    if not 0 <= args.seed < 2**64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    if args.alpha is not None:
        if not 0 < args.alpha < 1:
            raise ConfigError(f"alpha: must lie in (0, 1), got {args.alpha}")
        sub = rn.Stable(args.alpha)
    else:
        sub = rn.FromKernel(args.kernel)
    sample = rn.simulate_waiting_times(sub, args.lam, args.jumps, args.paths, args.seed, step=args.step)
    _write_csv({"waiting_time": sample.waiting_times}, args.out)
    t_curve = log_grid(args.tmin, args.tmax, 40)
    oracle = rl.relaxation_values(sub.kernel, args.lam, t_curve)
    distance = None
    if sample.waiting_times.size >= 10_000:
        distance = rn.survival_distance(sample, t_window=(args.tmin, args.tmax))
    params = {
        "alpha": args.alpha, "lambda": args.lam, "paths": args.paths, "jumps": args.jumps,
        "step": args.step, "seed": args.seed, "window": [args.tmin, args.tmax],
    }
    extra = {
        "summary": sample.to_dict(),
        "survival_distance": distance,
        "oracle_curve": {"t": t_curve.tolist(), "u": oracle.tolist(), "empirical": sample.survival(t_curve).tolist()},
    }
    _write_envelope(_envelope("renew", sub.kernel, params, **extra), args.out)
    return EXIT_OK


def cmd_verify_all(args) -> int:
    results = acceptance.run_all()
    for r in results:
        print(r.line())
    n_ok = sum(r.passed for r in results)
    print(f"{n_ok}/{len(results)} criteria passed")
    _write_envelope({"command": "verify-all", "results": [r.to_dict() for r in results]}, args.out)
    return EXIT_OK if n_ok == len(results) else EXIT_INVALID


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genfrac", description="General fractional calculus toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, kernel_required=True):
        p.add_argument("--config", type=Path, help="JSON file with option values")
        p.add_argument("--out", type=Path, help="CSV output path; the JSON envelope goes next to it")
        p.add_argument(
            "--kernel", type=_kernel_arg, required=False, default=None,
            help="caputo:A, log:B, dist:A@W,..., box, inline JSON or @file",
        )
        p.set_defaults(kernel_required=kernel_required)

    p = sub.add_parser("kernel-check", help="probe the admissibility conditions")
    common(p)
    p.set_defaults(func=cmd_kernel_check)

    p = sub.add_parser("sonine", help="conjugate kernel and Sonine residual on a log grid")
    common(p)
    p.add_argument("--tmin", type=float, default=0.01)
    p.add_argument("--tmax", type=float, default=100.0)
    p.add_argument("--points", type=int, default=20)
    p.set_defaults(func=cmd_sonine)

    p = sub.add_parser("relax", help="relaxation function u_lambda on a uniform grid")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--step", type=float, default=0.01)
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("heat", help="fundamental solution or Cauchy problem at time t")
    common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--dx", type=float, default=0.01)
    p.add_argument("--method", choices=("subordination", "laplace"), default="subordination")
    p.add_argument("--w0", default=None, help="gaussian, step, one or a CSV path (n = 1)")
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("renew", help="Monte Carlo waiting times of the renewal process")
    common(p, kernel_required=False)
    p.add_argument("--alpha", type=float, default=None, help="stable subordinator index")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=20_000)
    p.add_argument("--jumps", type=int, default=1)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tmin", type=float, default=0.05)
    p.add_argument("--tmax", type=float, default=5.0)
    p.set_defaults(func=cmd_renew)

    p = sub.add_parser("verify-all", help="run the acceptance suite")
    p.add_argument("--out", type=Path, help="JSON report path")
    p.set_defaults(func=cmd_verify_all, kernel_required=False)
    return parser


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace, argv: list[str]) -> None:
    path = getattr(args, "config", None)
    if path is None:
        return
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    allowed = {k for k in vars(args) if k not in ("func", "command", "config", "kernel_required", "verbose")}
    aliases = {"lambda": "lam"}
    explicit = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in data.items():
        dest = aliases.get(key, key)
        if dest not in allowed:
            raise ConfigError(f"{key}: unknown field for {args.command}")
        if dest in explicit or (key == "lambda" and "lambda" in explicit):
            continue
        if dest == "kernel":
            value = _parse_kernel(json.dumps(value) if isinstance(value, dict) else str(value))
        elif dest == "out":
            value = Path(value)
        else:
            current = getattr(args, dest)
            if current is not None and not isinstance(value, type(current)) and not (
                isinstance(current, float) and isinstance(value, int)
            ):
                raise ConfigError(f"{key}: expected {type(current).__name__}")
        setattr(args, dest, value)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _apply_config(parser, args, argv)
        if args.kernel_required and getattr(args, "kernel", None) is None:
            raise ConfigError("kernel: required")
        return args.func(args)
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
