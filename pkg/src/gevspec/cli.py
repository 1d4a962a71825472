"""Command-line entry points for quantization, spectra, and sweeps.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments, fbi, geometry, quantize, spectral, svgout
from .symbols import model_from_tag

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _parse_complex(text: str) -> complex:
    if "," in text:
        re_s, im_s = text.split(",", 1)
        return complex(float(re_s), float(im_s))
    return complex(text)


def _grid_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--L", type=float, default=4.0,
                        help="half width of the real grid")
    parser.add_argument("--N", type=int, default=0,
                        help="grid points (0 = smallest power of two "
                             "satisfying the Nyquist rule)")


def _make_grid(args) -> quantize.RealGrid:
    n = args.N
    if n == 0:
        n = max(quantize.required_n_points(args.L, args.h, 4.0), 32)
    return quantize.RealGrid(args.L, n)


def _cmd_quantize(args) -> int:
    model = model_from_tag(args.model)
    grid = _make_grid(args)
    P = quantize.assemble_weyl(model.symbol, grid, args.h)
    quantize.save_weyl(args.out, P)
    print(f"wrote {args.out}: N = {P.n}, h = {P.h}")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    model = model_from_tag(args.model)
    grid = _make_grid(args)
    P = quantize.assemble_weyl(model.symbol, grid, args.h)
    spec = spectral.eigenvalues(P)
    lines = spectral.spectrum_csv_lines(spec)
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {args.out}: {len(lines) - 1} eigenvalues")
    else:
        print("\n".join(lines))
    return EXIT_OK


def _cmd_pseudospectrum(args) -> int:
    model = model_from_tag(args.model)
    grid = _make_grid(args)
    P = quantize.assemble_weyl(model.symbol, grid, args.h)
    window = spectral.ZGrid(_parse_complex(args.center), args.span, args.span,
                            args.res, args.res)
    field = spectral.pseudospectrum(P, window)
    spec = spectral.eigenvalues(P) if P.n <= 2048 else None
    stem = args.out or f"pseudospectrum_{args.model.replace(':', '_')}"
    csv_path = f"{stem}.csv"
    Path(csv_path).write_text(
        "\n".join(spectral.pseudospectrum_csv_lines(field)) + "\n",
        encoding="utf-8")
    svg_path = f"{stem}.svg"
    c = window.center
    extent = (c.real - window.re_span, c.real + window.re_span,
              c.imag - window.im_span, c.imag + window.im_span)
    svgout.heatmap_svg(field.sigma_min.T, extent, svg_path, log10=True,
                       points=None if spec is None else spec.eigenvalues,
                       title=f"log10 sigma_min, {args.model}, h={args.h}")
    print(f"wrote {csv_path} and {svg_path}")
    return EXIT_OK


def _cmd_scaling(args) -> int:
    cfg = experiments.parse_config(args.config)
    records = experiments.run_sweep(cfg)
    if not records:
        print("no records produced")
        experiments.emit_outputs(cfg, records, {})
        return EXIT_OK
    model = model_from_tag(cfg.model_tag)
    fits: dict = {"radius": experiments.radius_scaling_summary(records, model)}
    try:
        fits["resolvent"] = experiments.resolvent_growth_check(
            records, model.symbol.order_s)
    except experiments.FitError as exc:
        fits["resolvent"] = {"error": str(exc)}
    paths = experiments.emit_outputs(cfg, records, fits)
    print(f"{len(records)} records; outputs: {', '.join(paths)}")
    return EXIT_OK


def _cmd_toeplitz(args) -> int:
    cfg = experiments.parse_config(args.config)
    model = model_from_tag(cfg.model_tag)
    esc = None
    try:
        esc = geometry.build_escape(model, T=cfg.escape_T)
    except (geometry.EscapeConstructionError, geometry.GeometryConfigError):
        pass
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = ["h,res_t0,res_deformed"]
    expo = experiments.exponent_for(model)
    records = []
    for h in cfg.h_list:
        r0 = experiments.toeplitz_probe(model, esc, h, 0.0)
        t = -cfg.epsilon_deform * h ** expo
        rt = experiments.toeplitz_probe(model, esc, h, t) if esc else float("nan")
        rows.append(f"{h:.17g},{r0:.17g},{rt:.17g}")
        records.append((h, r0, rt))
        print(rows[-1])
    (out_dir / "toeplitz.csv").write_text("\n".join(rows) + "\n",
                                          encoding="utf-8")
    if len(records) >= 4:
        hs = np.array([r[0] for r in records])
        slope0 = np.polyfit(np.log(hs), np.log([r[1] for r in records]), 1)[0]
        print(f"slope(t=0) = {slope0:.3f}")
        if slope0 < 0.9:
            print("warning: residual slope below 0.9")
            return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_escape(args) -> int:
    model = model_from_tag(args.model)
    try:
        esc = geometry.build_escape(model, T=args.T)
    except geometry.EscapeConstructionError as exc:
        print(f"escape construction failed: {exc}")
        return EXIT_NUMERICAL
    print(f"margin_c = {esc.margin_c:.6g}, sup|G| = {esc.sup_G:.6g}, "
          f"cutoff radius = {esc.cutoff_radius:.4g}")
    if args.out:
        Path(args.out).write_text(
            "\n".join(geometry.escape_csv_lines(esc)) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_deform_check(args) -> int:
    model = model_from_tag(args.model)
    try:
        esc = geometry.build_escape(model)
    except geometry.EscapeConstructionError as exc:
        print(f"escape construction failed: {exc}")
        return EXIT_NUMERICAL
    expo = experiments.exponent_for(model)
    t = -args.epsilon * args.h ** expo
    check = geometry.check_deformed_ellipticity(model, esc, t)
    print(f"t = {t:.6g}, gamma_measured = {check.gamma_measured:.6g} "
          f"at {check.worst_point}")
    if check.gamma_measured <= 0:
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gevspec",
        description="Spectra, pseudospectra, and phase-space deformations "
                    "of quantized 1-D symbols")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantize", help="assemble and save a matrix")
    p.add_argument("--model", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--out", required=True)
    _grid_args(p)
    p.set_defaults(func=_cmd_quantize)

    p = sub.add_parser("spectrum", help="eigenvalues with boundary-mass flags")
    p.add_argument("--model", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--out", default="")
    _grid_args(p)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("pseudospectrum", help="sigma_min field over a z window")
    p.add_argument("--model", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--center", required=True, help="complex center, RE,IM")
    p.add_argument("--span", type=float, required=True)
    p.add_argument("--res", type=int, required=True)
    p.add_argument("--out", default="")
    _grid_args(p)
    p.set_defaults(func=_cmd_pseudospectrum)

    p = sub.add_parser("scaling", help="free-radius and resolvent h-sweep")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_scaling)

    p = sub.add_parser("toeplitz", help="Toeplitz-identity residual sweep")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_toeplitz)

    p = sub.add_parser("escape", help="build and certify an escape function")
    p.add_argument("--model", required=True)
    p.add_argument("--T", type=float, default=4.0)
    p.add_argument("--out", default="")
    p.set_defaults(func=_cmd_escape)

    p = sub.add_parser("deform-check", help="deformed-symbol ellipticity")
    p.add_argument("--model", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=_cmd_deform_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (experiments.ConfigError, quantize.GridError,
            quantize.ResolutionError, spectral.BudgetError,
            geometry.GeometryConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (experiments.NumericalFailure, spectral.SolverError,
            geometry.EscapeConstructionError, geometry.CoverageError,
            fbi.GridExtentError, fbi.EllipticityError,
            experiments.FitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
