"""Command-line front end.

Exit status: 0 when every check passes, 1 on a tolerance violation, 2 on a
usage or input error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import csvio
from .params import RunParameters, load_config

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _override(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = (s.strip() for s in text.split("=", 1))
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"value for {key!r} is not a number") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="parameter file with 'name = value' lines")
    common.add_argument("--set", dest="overrides", action="append", type=_override, default=[],
                        metavar="KEY=VALUE", help=f"override one parameter ({', '.join(RunParameters.keys())})")
    common.add_argument("--out", type=Path, help="write CSV here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, help="tolerance for the pass/fail decision")

    p = argparse.ArgumentParser(prog="wignerfluid", description="Quantum fluid moments and transverse dispersion.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scan-dispersion", parents=[common], help="dispersion table over a k grid")
    s.add_argument("--method", choices=["fluid", "approx", "kinetic", "kinetic-series"], default="fluid")
    s.add_argument("--kmin", type=float, default=0.0)
    s.add_argument("--kmax", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--order", type=int, default=4, help="series order for kinetic-series")

    s = sub.add_parser("diffusion-profile", parents=[common], help="L applied to a unit-peak Gaussian")
    s.add_argument("--H", dest="H_values", type=_float_list, default=[0.0, 1.0, 2.0])
    s.add_argument("--vmax", type=float, default=5.0, help="half range in units of v0")
    s.add_argument("--points", type=int, default=201)

    s = sub.add_parser("gauge-check", parents=[common], help="gauge invariance suite")
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--grid", type=int, default=256)
    s.add_argument("--shift-tol", type=float, default=1e-6)

    s = sub.add_parser("closure-verify", parents=[common], help="closure recipe vs closed form")
    s.add_argument("--count", type=int, default=50)

    s = sub.add_parser("eigen-check", parents=[common], help="linear-system eigenvalues vs fluid cubic")
    s.add_argument("--kmin", type=float, default=0.0)
    s.add_argument("--kmax", type=float, default=2.0)
    s.add_argument("--steps", type=int, default=50)

    s = sub.add_parser("rhs-check", parents=[common], help="finite-difference linearization consistency")
    s.add_argument("--eps", type=_float_list, default=[1e-3, 5e-4, 2.5e-4])
    s.add_argument("--directions", type=int, default=20)
    s.add_argument("--min-ratio", type=float, default=1.8,
                   help="smallest accepted error ratio between successive eps values")
    return p


def _params(args) -> RunParameters:
    if args.config is not None:
        if not args.config.is_file():
            raise UsageError(f"config file not found: {args.config}")
        try:
            params = load_config(args.config)
        except (ValueError, KeyError) as exc:
            raise UsageError(f"{args.config}: {exc}") from None
    else:
        params = RunParameters()
    try:
        params.update(dict(args.overrides))
        params.setup()
        params.pressure()
    except (ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    return params


def _emit(text: str, out, stream):
    if out is None:
        stream.write(text)
    else:
        Path(out).write_text(text)


class _Checks:
    def __init__(self):
        self.rows = []

    def add(self, name: str, value: float, tol: float, ok: bool | None = None) -> bool:
        ok = (value <= tol) if ok is None else ok
        ok = bool(ok and math.isfinite(value))
        self.rows.append((name, value, tol, "PASS" if ok else "FAIL"))
        return ok

    @property
    def passed(self) -> bool:
        return all(r[3] == "PASS" for r in self.rows)

    def report(self, out, stream):
        for name, value, tol, status in self.rows:
            stream.write(f"{status} {name}: {value:.3e} (tol {tol:.1e})\n")
        if out is not None:
            csvio.write(out, ["check", "value", "tol", "status"], self.rows)


# ---------------------------------------------------------------------------
# subcommands

def _scan(args, params, stream) -> int:
    from .dispersion import dispersion_scan, write_scan_csv

    tol = 1e-10 if args.tol is None else args.tol
    if args.kmax != args.kmin and args.steps < 2:
        raise UsageError("--steps must be at least 2")
    try:
        results = dispersion_scan(args.kmin, args.kmax, args.steps, args.method, params.setup(),
                                  params.pressure(), v0=params.v0, order=args.order)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except ArithmeticError as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_FAIL
    _emit(write_scan_csv(results), args.out, stream)
    if args.method == "approx":
        return EXIT_OK
    worst = max(r.residual for r in results)
    if worst > tol:
        sys.stderr.write(f"FAIL max residual {worst:.3e} exceeds {tol:.1e}\n")
        return EXIT_FAIL
    return EXIT_OK


def _profile(args, params, stream) -> int:
    from scipy import special

    from .dispersion import figure_profile, write_figure_csv

    tol = 1e-10 if args.tol is None else args.tol
    if args.points < 2 or args.vmax <= 0:
        raise UsageError("need --points >= 2 and --vmax > 0")
    text = write_figure_csv(H_values=tuple(args.H_values), v_max=args.vmax, points=args.points, v0=params.v0)
    _emit(text, args.out, stream)
    worst = 0.0
    for H in args.H_values:
        expect = 1.0 if H == 0 else math.sqrt(math.pi / 2) / H * special.erf(H / math.sqrt(2))
        worst = max(worst, abs(float(figure_profile(H, [0.0], params.v0)[0]) - expect))
    if worst > tol:
        sys.stderr.write(f"FAIL centre value off by {worst:.3e}\n")
        return EXIT_FAIL
    return EXIT_OK


def _gauge(args, params, stream) -> int:
    from .wigner_gauge import gauge_suite

    tol = 1e-8 if args.tol is None else args.tol
    if args.grid < 16 or args.grid & (args.grid - 1):
        raise UsageError("--grid must be a power of two >= 16")
    w = gauge_suite(args.seed, args.count, args.grid, params.setup())
    checks = _Checks()
    for key in ("giwf_n_rel", "giwf_nu_rel", "giwf_P_rel", "giwf_Q_rel", "giwf_pointwise_rel"):
        checks.add(key, w[key], tol)
    checks.add("gd_shift_rel", w["gd_shift_rel"], args.shift_tol)
    checks.add("mass_rel", w["mass_rel"], 1e-10)
    checks.add("gd_mass_rel", w["gd_mass_rel"], 1e-10)
    checks.report(args.out, stream)
    return EXIT_OK if checks.passed else EXIT_FAIL


def _closure(args, params, stream) -> int:
    from .closure import closure_sweep

    tol = 1e-12 if args.tol is None else args.tol
    res = closure_sweep(args.seed, args.count, params.setup())
    checks = _Checks()
    checks.add(f"closure_max_rel ({args.count} cases)", max(res), tol)
    checks.report(args.out, stream)
    return EXIT_OK if checks.passed else EXIT_FAIL


def _eigen(args, params, stream) -> int:
    from .hierarchy import eigen_consistency

    tol = 1e-10 if args.tol is None else args.tol
    if args.kmin < 0 or args.kmax < args.kmin or args.steps < 1:
        raise UsageError("need 0 <= kmin <= kmax and steps >= 1")
    ks = np.linspace(args.kmin, args.kmax, args.steps)
    checks = _Checks()
    for closure in (True, False):
        res, em = eigen_consistency(ks, params.setup(), params.pressure(), closure)
        label = "closure" if closure else "no_closure"
        checks.add(f"cubic_residual_{label}", res, tol)
        checks.add(f"em_branch_gap_{label}", em, tol)
    checks.report(args.out, stream)
    return EXIT_OK if checks.passed else EXIT_FAIL


def _rhs(args, params, stream) -> int:
    from .hierarchy import linearization_errors

    eps = sorted(args.eps, reverse=True)
    if len(eps) < 2 or eps[-1] <= 0:
        raise UsageError("--eps needs at least two positive values")
    tol = 1e-2 if args.tol is None else args.tol
    errs = linearization_errors(params.setup(), params.pressure(), tuple(eps), args.directions, args.seed)
    checks = _Checks()
    for e, val in zip(eps, errs):
        checks.add(f"linear_error_eps={e:g}", val, tol)
    for (e1, a), (e2, b) in zip(zip(eps, errs), zip(eps[1:], errs[1:])):
        ratio = a / b if b > 0 else math.inf
        expected = args.min_ratio * (e1 / e2) / 2.0
        checks.add(f"error_ratio_{e1:g}/{e2:g}", ratio, expected, ok=ratio >= expected)
    checks.report(args.out, stream)
    return EXIT_OK if checks.passed else EXIT_FAIL


HANDLERS = {
    "scan-dispersion": _scan,
    "diffusion-profile": _profile,
    "gauge-check": _gauge,
    "closure-verify": _closure,
    "eigen-check": _eigen,
    "rhs-check": _rhs,
}


def main(argv=None, stream=None) -> int:
    stream = stream or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        params = _params(args)
        return HANDLERS[args.command](args, params, stream)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
