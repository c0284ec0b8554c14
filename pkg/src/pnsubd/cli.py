"""Batch command line: subdivide meshes/polylines, run the analysis
reports, and launch the session service.

Exit codes: 0 success, 2 input problems, 3 scheme/arity problems,
4 numerical degeneracies, 5 service port in use.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .analysis import decay_rate, discrete_curvature, primitive_residual
from .curves import decay_norms, load_polyline, save_polyline, subdivide_curve
from .errors import InputError, NumericError, PNSubdError, SchemeError
from .meshes import load_obj, save_obj, validate
from .refine import estimate_normals, subdivide_surface
from .spectra import assemble_local_matrix, spectrum, tune
from .symbols import (
    bspline_mask,
    certify_smoothness,
    contractivity_factor,
    curve_mask,
    divide_smoothing_factor,
)

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO,
              "debug": logging.DEBUG}


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _exit_code(exc: PNSubdError) -> int:
    if isinstance(exc, InputError):
        return 2
    if isinstance(exc, SchemeError):
        return 3
    if isinstance(exc, NumericError):
        return 4
    return 1


def _banner(args):
    if not args.quiet:
        print(f"pnsubd {__version__}")


def cmd_subdivide(args) -> int:
    _banner(args)
    if args.curve:
        poly = load_polyline(args.input)
        out = subdivide_curve(poly, args.scheme, args.levels, args.variant,
                              normal_scheme=args.normal_mask)
        save_polyline(out, args.output)
        print(f"vertices={len(out)}")
        return 0
    mesh = load_obj(args.input)
    if args.estimate_normals:
        mesh = estimate_normals(mesh)
    out = subdivide_surface(mesh, args.scheme, args.levels, args.variant,
                            kappa=args.kappa)
    save_obj(out, args.output)
    print(f"vertices={out.vertex_count} faces={out.face_count}")
    return 0


def cmd_analyze_mask(args) -> int:
    _banner(args)
    if args.bspline is not None:
        mask = bspline_mask(args.bspline)
    elif args.dd is not None:
        from .symbols import dd_interpolatory_mask

        mask = dd_interpolatory_mask(args.dd)
    else:
        mask = curve_mask(args.name)
    print(f"name={mask.name}")
    coeffs = ",".join(_fmt(c) for c in mask.symbol.coefficients)
    print(f"coefficients={coeffs}")
    print(f"offset={mask.symbol.offset}")
    print(f"even_sum={_fmt(mask.even_sum)}")
    print(f"odd_sum={_fmt(mask.odd_sum)}")
    order = certify_smoothness(mask, max_order=args.max_order,
                               max_L=args.max_l)
    print(f"smoothness_at_least={order}")
    q = divide_smoothing_factor(mask.symbol, 1).scaled(0.5)
    for L in range(1, 4):
        print(f"contractivity_L{L}={_fmt(contractivity_factor(q, L))}")
    return 0


def _parse_valences(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def cmd_analyze_spectrum(args) -> int:
    _banner(args)
    for n in _parse_valences(args.valence):
        S = assemble_local_matrix(args.scheme, n)
        sp = spectrum(S)
        lam = sp.values[1].real
        mu = float(np.max(np.abs(sp.values[3:]))) if sp.values.size > 3 \
            else 0.0
        tuned = spectrum(tune(S, kappa=args.kappa))
        print(" ".join([
            args.scheme, str(n), _fmt(lam), _fmt(mu),
            _fmt(sp.condition_ratio), _fmt(tuned.condition_ratio),
        ]))
    return 0


def _fit_parameters(args) -> dict | None:
    supplied = {}
    if args.center:
        supplied["center"] = [float(x) for x in args.center.split(",")]
    if args.axis:
        supplied["axis"] = [float(x) for x in args.axis.split(",")]
    if args.radius is not None:
        supplied["radius"] = args.radius
    if args.major_radius is not None:
        supplied["major_radius"] = args.major_radius
    if args.minor_radius is not None:
        supplied["minor_radius"] = args.minor_radius
    return supplied or None


def cmd_analyze_fit(args) -> int:
    _banner(args)
    if args.curve:
        points = load_polyline(args.input).positions
    else:
        points = load_obj(args.input).positions
    fit = primitive_residual(points, args.kind, _fit_parameters(args))
    print(f"kind={fit.kind}")
    print(f"fitted={'true' if fit.fitted else 'false'}")
    print(f"max_residual={_fmt(fit.max_residual)}")
    print(f"rms_residual={_fmt(fit.rms_residual)}")
    for key in sorted(fit.parameters):
        value = fit.parameters[key]
        if np.ndim(value):
            print(f"{key}={','.join(_fmt(v) for v in value)}")
        else:
            print(f"{key}={_fmt(value)}")
    return 0


def cmd_analyze_curvature(args) -> int:
    _banner(args)
    mesh = load_obj(args.input)
    field = discrete_curvature(mesh)
    K = field.finite_gaussian()
    H = field.mean[field.interior]
    print(f"interior_vertices={int(field.interior.sum())}")
    if K.size:
        print(f"gaussian_min={_fmt(K.min())}")
        print(f"gaussian_max={_fmt(K.max())}")
        print(f"gaussian_mean={_fmt(K.mean())}")
        print(f"mean_min={_fmt(H.min())}")
        print(f"mean_max={_fmt(H.max())}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as f:
            f.write("vertex_id,gaussian,mean\n")
            for v in range(mesh.vertex_count):
                g = field.gaussian[v]
                h = field.mean[v]
                f.write(f"{v},{_fmt(g) if np.isfinite(g) else 'nan'},"
                        f"{_fmt(h) if np.isfinite(h) else 'nan'}\n")
    return 0


def cmd_analyze_decay(args) -> int:
    _banner(args)
    poly = load_polyline(args.input)
    norms = decay_norms(poly, args.scheme, args.order, args.levels,
                        args.variant)
    for level, value in enumerate(norms, start=1):
        print(f"norm_level_{level}={_fmt(value)}")
    print(f"decay_rate={_fmt(decay_rate(norms))}")
    return 0


def cmd_validate(args) -> int:
    _banner(args)
    rep = validate(load_obj(args.input))
    for key, value in rep.as_dict().items():
        if isinstance(value, dict):
            inner = ",".join(f"{k}:{v}" for k, v in value.items())
            print(f"{key}={inner}")
        elif isinstance(value, list):
            print(f"{key}={','.join(str(v) for v in value)}")
        elif isinstance(value, bool):
            print(f"{key}={'true' if value else 'false'}")
        else:
            print(f"{key}={value}")
    return 0


def cmd_serve(args) -> int:
    import socket

    import uvicorn

    from .service import create_app

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((args.bind, args.port))
    except OSError:
        print(f"port {args.port} on {args.bind} is already in use",
              file=sys.stderr)
        return 5
    finally:
        probe.close()
    app = create_app(max_level=args.max_level)
    level = os.environ.get("PNSUBD_LOG", "info").lower()
    uvicorn.run(app, host=args.bind, port=args.port,
                log_level=level if level in LOG_LEVELS else "info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pnsubd",
        description="Point-normal subdivision for curves and surfaces",
    )
    p.add_argument("--quiet", action="store_true",
                   help="suppress the version banner")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("subdivide", help="refine a mesh or polyline")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", dest="output", required=True)
    s.add_argument("--scheme", required=True,
                   help="cc|ds|loop|kobbelt|butterfly or a curve mask name")
    s.add_argument("--levels", type=int, required=True)
    s.add_argument("--variant", default="pn",
                   choices=["linear", "pn", "modified", "pn-modified"])
    s.add_argument("--estimate-normals", action="store_true")
    s.add_argument("--normal-mask", default=None,
                   help="curve mode: refine normals with this mask")
    s.add_argument("--curve", action="store_true",
                   help="treat input/output as polyline files")
    s.add_argument("--kappa", type=float, default=0.95)
    s.set_defaults(func=cmd_subdivide)

    a = sub.add_parser("analyze", help="numerical reports")
    asub = a.add_subparsers(dest="subcommand", required=True)

    am = asub.add_parser("mask", help="mask coefficients and smoothness")
    g = am.add_mutually_exclusive_group(required=True)
    g.add_argument("--bspline", type=int)
    g.add_argument("--dd", type=int)
    g.add_argument("--name")
    am.add_argument("--max-order", type=int, default=6)
    am.add_argument("--max-L", dest="max_l", type=int, default=8)
    am.set_defaults(func=cmd_analyze_mask)

    asp = asub.add_parser("spectrum", help="local eigenvalues per valence")
    asp.add_argument("--scheme", default="cc")
    asp.add_argument("--valence", default="3..8",
                     help="range like 3..8 or comma list")
    asp.add_argument("--kappa", type=float, default=0.95)
    asp.set_defaults(func=cmd_analyze_spectrum)

    af = asub.add_parser("fit", help="residuals against a primitive")
    af.add_argument("--in", dest="input", required=True)
    af.add_argument("--kind", required=True,
                    choices=["plane", "circle", "sphere", "cylinder",
                             "torus"])
    af.add_argument("--curve", action="store_true")
    af.add_argument("--center")
    af.add_argument("--axis")
    af.add_argument("--radius", type=float)
    af.add_argument("--major-radius", type=float)
    af.add_argument("--minor-radius", type=float)
    af.set_defaults(func=cmd_analyze_fit)

    ac = asub.add_parser("curvature", help="discrete curvature summary")
    ac.add_argument("--in", dest="input", required=True)
    ac.add_argument("--csv", help="write a per-vertex CSV dump here")
    ac.set_defaults(func=cmd_analyze_curvature)

    ad = asub.add_parser("decay", help="difference-norm decay of a curve")
    ad.add_argument("--in", dest="input", required=True)
    ad.add_argument("--scheme", default="bspline3")
    ad.add_argument("--variant", default="pn", choices=["linear", "pn"])
    ad.add_argument("--order", type=int, default=1)
    ad.add_argument("--levels", type=int, default=8)
    ad.set_defaults(func=cmd_analyze_decay)

    v = sub.add_parser("validate", help="mesh connectivity report")
    v.add_argument("--in", dest="input", required=True)
    v.set_defaults(func=cmd_validate)

    srv = sub.add_parser("serve", help="run the HTTP session service")
    srv.add_argument("--port", type=int, default=8642)
    srv.add_argument("--bind", default="127.0.0.1")
    srv.add_argument("--max-level", type=int, default=8)
    srv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    level = os.environ.get("PNSUBD_LOG", "error").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.ERROR))
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PNSubdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
