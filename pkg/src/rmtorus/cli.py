"""Command-line front end with reproducible JSON output.

Each subcommand is a thin wrapper over one module entry point.  Output field
order is fixed, floats print in their shortest round-trip form, and exact
rationals and quadratic surds are rendered as integer structures, so repeated
runs with the same arguments produce byte-identical JSON.  Module errors exit
nonzero with a single ``ErrorName: message`` diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import geometry, groebner, modsym, presentation
from .core import QuadraticSurd, RMData, canonical_g, validate
from .errors import RMTorusError
from .precision import PRECISION_ENV
from .theta import RationalChar, theta

__all__ = ["main"]


def _surd_json(s: QuadraticSurd) -> dict:
    return {"p": s.p, "q": s.q, "r": s.r, "D": s.D}


def _fraction_json(x: Fraction) -> list[int]:
    x = Fraction(x)
    return [x.numerator, x.denominator]


def _complex_json(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _tau_json(tau: complex) -> dict:
    return {"re": tau.real, "im": tau.imag}


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out is None:
        print(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _add_g_flags(sub: argparse.ArgumentParser, allow_trace: bool = True) -> None:
    if allow_trace:
        group = sub.add_mutually_exclusive_group(required=True)
        group.add_argument(
            "--g", nargs=4, type=int, metavar=("A", "B", "C", "D"),
            help="matrix entries a b c d",
        )
        group.add_argument(
            "--trace", type=int, metavar="T",
            help="use the canonical matrix of this trace",
        )
    else:
        sub.add_argument(
            "--g", nargs=4, type=int, required=True, metavar=("A", "B", "C", "D"),
            help="matrix entries a b c d",
        )


def _add_tau_flag(sub: argparse.ArgumentParser, required: bool = True) -> None:
    sub.add_argument(
        "--tau", nargs=2, type=float, required=required, metavar=("RE", "IM"),
        help="point of the upper half-plane",
    )


def _add_out_flag(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", metavar="FILE", help="write JSON here instead of stdout")


def _resolve_rm(parser: argparse.ArgumentParser, args) -> RMData:
    if getattr(args, "g", None) is not None:
        return validate(tuple(args.g))
    return validate(canonical_g(args.trace))


def _resolve_tau(parser: argparse.ArgumentParser, args) -> complex:
    re, im = args.tau
    if not im > 0:
        parser.error("--tau must have positive imaginary part")
    return complex(re, im)


def _rm_json(rm: RMData) -> dict:
    return {
        "g": list(rm.g),
        "theta": _surd_json(rm.theta),
        "theta_conjugate": _surd_json(rm.theta_conj),
        "lambda_plus": _surd_json(rm.lam_plus),
        "lambda_minus": _surd_json(rm.lam_minus),
        "l": rm.level,
        "w": rm.weight,
    }


def _cmd_validate(parser, args) -> int:
    rm = _resolve_rm(parser, args)
    _emit(_rm_json(rm), args.out)
    return 0


_NORMALIZERS = {
    "raw": lambda p: p,
    "rational": presentation.normalize_rational,
    "modular": presentation.normalize_modular,
    "monic": presentation.monic_ordered,
}


def _cmd_present(parser, args) -> int:
    rm = _resolve_rm(parser, args)
    tau = _resolve_tau(parser, args)
    pres = presentation.relations(rm, tau)
    pres = _NORMALIZERS[args.normalize](pres)
    _emit(presentation.presentation_json(pres), args.out)
    return 0


def _cmd_basis(parser, args) -> int:
    rm = _resolve_rm(parser, args)
    tau = _resolve_tau(parser, args)
    state = groebner.state_for(rm, tau, truncation_degree=max(args.degree, 2))
    words = groebner.linear_basis(state, args.degree)
    payload = {
        "g": list(rm.g),
        "tau": _tau_json(tau),
        "degree": args.degree,
        "count": len(words),
        "words": [list(w) for w in words],
    }
    _emit(payload, args.out)
    return 0


def _cmd_hilbert(parser, args) -> int:
    rm = _resolve_rm(parser, args)
    data = presentation.hilbert_coeffs(rm, args.n)
    payload = {
        "g": list(rm.g),
        "n": args.n,
        "coefficients": list(data.coefficients),
    }
    _emit(payload, args.out)
    return 0


def _cmd_theta(parser, args) -> int:
    tau = _resolve_tau(parser, args)
    try:
        r, s = Fraction(args.r), Fraction(args.s)
    except ValueError:
        parser.error("--r/--s must be rational, e.g. 1/24 or 0.5")
    value = theta(RationalChar(r, s), 0.0, tau)
    payload = {
        "r": _fraction_json(r),
        "s": _fraction_json(s),
        "tau": _tau_json(tau),
        "value": _complex_json(value),
    }
    _emit(payload, args.out)
    return 0


def _cmd_average(parser, args) -> int:
    rm = _resolve_rm(parser, args)
    quad = modsym.QuadratureControl(rel_tol=args.tol)
    av = modsym.averaged_relations(rm, quad=quad)
    _emit(modsym.averaged_json(av), args.out)
    return 0


def _cmd_geom(parser, args) -> int:
    rm = _resolve_rm(parser, args)
    tau = _resolve_tau(parser, args)
    pres = presentation.relations(rm, tau)
    matrix = geometry.omega_matrix(pres)
    minors = geometry.minor_equations(matrix, cap=args.cap)
    payload = {
        "g": list(rm.g),
        "tau": _tau_json(tau),
        "cap": args.cap,
        "count": len(minors),
        "minors": geometry.minors_json(minors),
    }
    _emit(payload, args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmtorus",
        description=(
            "Homogeneous coordinate rings of real-multiplication "
            "noncommutative tori: presentations, bases, averaged relations, "
            "and determinantal equations, as reproducible JSON."
        ),
        epilog=f"Set {PRECISION_ENV} to a decimal-digit count for "
        "high-precision evaluation.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="check a matrix and print its invariants")
    _add_g_flags(p)
    _add_out_flag(p)
    p.set_defaults(func=_cmd_validate)

    p = subs.add_parser("present", help="quadratic relations at a point")
    _add_g_flags(p)
    _add_tau_flag(p)
    p.add_argument(
        "--normalize", choices=("raw", "rational", "modular", "monic"),
        default="raw", help="coefficient normalization (default raw)",
    )
    _add_out_flag(p)
    p.set_defaults(func=_cmd_present)

    p = subs.add_parser("basis", help="monomial basis of one graded degree")
    _add_g_flags(p)
    _add_tau_flag(p)
    p.add_argument("--degree", type=int, required=True, help="graded degree")
    _add_out_flag(p)
    p.set_defaults(func=_cmd_basis)

    p = subs.add_parser("hilbert", help="dimension sequence h_0..h_n")
    _add_g_flags(p)
    p.add_argument("--n", type=int, required=True, help="largest degree")
    _add_out_flag(p)
    p.set_defaults(func=_cmd_hilbert)

    p = subs.add_parser("theta", help="theta constant with rational characteristics")
    p.add_argument("--r", default="0", help="first characteristic (rational)")
    p.add_argument("--s", default="0", help="second characteristic (rational)")
    _add_tau_flag(p)
    _add_out_flag(p)
    p.set_defaults(func=_cmd_theta)

    p = subs.add_parser("average", help="tau-independent averaged relations")
    _add_g_flags(p)
    p.add_argument(
        "--tol", type=float, default=1e-8,
        help="quadrature relative tolerance (default 1e-8)",
    )
    _add_out_flag(p)
    p.set_defaults(func=_cmd_average)

    p = subs.add_parser("geom", help="determinantal minor equations")
    _add_g_flags(p)
    _add_tau_flag(p)
    p.add_argument(
        "--cap", type=int, default=5000,
        help="maximum number of minors (default 5000)",
    )
    _add_out_flag(p)
    p.set_defaults(func=_cmd_geom)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except RMTorusError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
