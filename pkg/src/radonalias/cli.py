"""Command-line entry point.

Every subcommand parses its arguments, calls one library operation and
writes the result; no numerics live here.

Exit codes: 0 success, 2 bad arguments or config, 3 I/O or file format,
4 numerical contract violation (support outside B(0, R), rejected fit, ...).
Errors are reported as one line on stderr::

    radonalias: error code=<n> kind=<ExceptionName> msg=<text>
"""
import argparse
import logging
import os
import sys
from importlib import resources

import numpy as np

from . import __version__, _accel, aliasing, conormal, experiments, filtering, grids, phantoms, radon, reconstruction

EXIT_ARGS, EXIT_IO, EXIT_NUMERIC = 2, 3, 4

log = logging.getLogger("radonalias")


class UsageError(ValueError):
    pass


def _pair(text):
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def _window(text):
    parts = text.replace(",", " ").split()
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("window is xmin,xmax,ymin,ymax")
    return tuple(float(p) for p in parts)


# ---------------------------------------------------------------------------
# phantom arguments (shared by phantom, sinogram --analytic, predict, verify)
# ---------------------------------------------------------------------------

def _add_phantom_args(p):
    g = p.add_argument_group("phantom")
    g.add_argument("--spec", help="phantom block file (key = value)")
    g.add_argument("--kind", choices=phantoms.KINDS)
    g.add_argument("--center", "--x0", type=_pair)
    g.add_argument("--xi0", type=_pair)
    g.add_argument("--h", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--a", type=float)
    g.add_argument("--angle", type=float)
    g.add_argument("--rloc", type=float)
    g.add_argument("--radius", type=float)
    g.add_argument("--mu-scale", type=float)


def _phantom_from_args(args):
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            spec = phantoms.parse_phantom_block(fh.read())
        kw = {}
    else:
        if not args.kind:
            raise UsageError("a phantom needs --kind or --spec")
        spec, kw = None, {"kind": args.kind}
    for arg, name in (("center", "center"), ("xi0", "xi0"), ("h", "h"), ("lam", "lam"), ("a", "a"),
                      ("angle", "angle"), ("rloc", "r_loc"), ("radius", "radius"), ("mu_scale", "mu_scale")):
        v = getattr(args, arg)
        if v is not None:
            kw[name] = v
    if spec is None:
        return phantoms.PhantomSpec(**kw)
    return phantoms.PhantomSpec(**{**spec.__dict__, **kw})


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_phantom(args):
    spec = _phantom_from_args(args)
    img = phantoms.rasterize(spec, args.n, args.L)
    grids.write_grid(args.output, img)
    if args.pgm:
        grids.write_image8(args.pgm, img)
    log.info("wrote %s (%s, n=%d)", args.output, spec.kind, args.n)


def cmd_sinogram(args):
    cfg = radon.ProjectionConfig(args.m, args.pcount, args.R, args.interp)
    if args.analytic:
        spec = _phantom_from_args(args)
        sino = radon.radon_analytic(spec, cfg, half_extent=args.L)
    else:
        if not args.input:
            raise UsageError("sinogram needs an input grid or --analytic")
        sino = radon.radon(grids.read_grid(args.input), cfg)
    if args.psi:
        sino = radon.apply_psi(sino, _psi(args.psi))
    grids.write_sino(args.output, sino)
    log.info("wrote %s (m=%d, p_count=%d)", args.output, sino.m, sino.p_count)


def _psi(text):
    kind, _, rest = text.partition(":")
    vals = [float(v) for v in rest.split(":") if v]
    if kind == "one":
        return radon.PsiSpec.ones()
    if kind == "cos2" and len(vals) == 2:
        return radon.PsiSpec.raised_cosine(*vals)
    if kind == "sector" and len(vals) == 2:
        return radon.PsiSpec.sector(*vals)
    raise UsageError(f"psi must be one, cos2:center:half_width or sector:start:stop, got {text!r}")


def cmd_filter(args):
    sino = grids.read_sino(args.input)
    grids.write_sino(args.output, filtering.ramp_filter(sino, args.pad))


def cmd_recon(args):
    if args.method == "multiplier":
        if args.m is None:
            raise UsageError("the multiplier method needs --m")
        img = grids.read_grid(args.input)
        out = reconstruction.fbp_multiplier(img, args.m, args.kmax, pad=2)
    else:
        sino = grids.read_sino(args.input)
        if args.refocus:
            sino = reconstruction.refocus(sino, args.refocus)
        cfg = reconstruction.ReconConfig(method=args.method, kernel=filtering.Kernel1D(args.kernel),
                                         k_max=args.kmax, upsample=args.upsample, pad=args.pad)
        report = reconstruction.BackprojectionReport()
        out = reconstruction.reconstruct(sino, args.n, args.L, cfg, report)
        if report.outside:
            log.warning("%d backprojection offsets fell outside the p-grid", report.outside)
    grids.write_grid(args.output, out)
    if args.pgm:
        grids.write_image8(args.pgm, out)


def _band_limit(args, spec):
    if args.B is not None:
        return args.B
    img = phantoms.rasterize(spec, args.n, args.L)
    return aliasing.estimate_band_limit(img, 1.0, args.eps).B


def cmd_predict(args):
    spec = _phantom_from_args(args)
    B = None if spec.kind == "coherent" else _band_limit(args, spec)
    window = args.window or (-args.L, args.L, -args.L, args.L)
    pred = aliasing.predict_artifacts(spec, np.pi / args.m, window, B=B, R=args.R, k_max=args.kmax)
    _emit(args.output, pred.to_table())


def cmd_verify(args):
    spec = _phantom_from_args(args)
    recon = grids.read_grid(args.recon)
    ref = grids.read_grid(args.reference)
    s = np.pi / args.m
    window = (-recon.half_extent, recon.half_extent, -recon.half_extent, recon.half_extent)
    if args.interp:
        ver = aliasing.verify_interp_displacement(spec, recon, ref, args.peak_threshold, args.tol_cells)
        body = (f"peaks,{ver.extra['peaks']}\nwithin_fraction,{ver.extra['within_fraction']:.6g}\n"
                f"max_distance_cells,{ver.extra['max_distance']:.6g}\n")
    else:
        B = None if spec.kind == "coherent" else _band_limit(args, spec)
        pred = aliasing.predict_artifacts(spec, s, window, B=B, k_max=args.kmax)
        ver = aliasing.verify_artifacts(pred, recon, ref, args.tol_cells, args.peak_threshold,
                                        envelope_direction=args.envelope)
        d = np.asarray(ver.extra["distances"]) / recon.cell
        body = (f"predicted,{ver.extra['predicted']}\nmatched,{ver.extra['matched']}\n"
                f"max_distance_cells,{(d.max() if d.size else 0.0):.6g}\n"
                f"unmatched_peaks,{len(ver.extra['unmatched_peaks'])}\n")
    _emit(args.output, body)


def cmd_fit(args):
    data = np.loadtxt(args.input, delimiter=",", ndmin=2)
    if data.shape[1] != 2:
        raise UsageError("crosscut CSV must have two columns: coordinate,value")
    fit = conormal.fit_singularity(data[:, 0], data[:, 1], args.kind, args.p0, args.window, w=args.w)
    _emit(args.output, conormal.report([fit]))


def cmd_compare(args):
    a = grids.read_grid(args.a)
    b = grids.read_grid(args.b)
    m = grids.compare(a, b, args.peak_threshold)
    _emit(args.output, f"l2_rel,{m.l2_rel:.6g}\nlinf_rel,{m.linf_rel:.6g}\npeaks,{len(m.peak_list)}\n")


def cmd_crosscut(args):
    img = grids.read_grid(args.input)
    if sum(v is not None for v in (args.row, args.col, args.angle)) != 1:
        raise UsageError("give exactly one of --row, --col, --angle")
    t, v = grids.crosscut(img, row=args.row, col=args.col, angle=args.angle, through=args.through)
    grids.write_csv_crosscut(args.output, t, v)


def cmd_run(args):
    path = args.config
    if not os.path.exists(path):
        shipped = resources.files("radonalias") / "configs" / path
        if shipped.is_file():
            path = str(shipped)
    cfg = experiments.load_config(path)
    if args.out:
        cfg["out"] = args.out
    res = experiments.run_experiment(cfg)
    sys.stdout.write(res.summary())
    if args.strict and not res.passed:
        return 1
    return 0


def _emit(path, body):
    if path in (None, "-"):
        sys.stdout.write(body)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(body)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="radonalias", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=None, help="numba worker threads")
    p.add_argument("--quiet", action="store_true", help="only warnings and errors")
    sub = p.add_subparsers(dest="command", required=True)

    def grid_args(sp, n=256, L=1.0):
        sp.add_argument("--n", type=int, default=n, help="grid size (power of two)")
        sp.add_argument("--L", type=float, default=L, help="grid half-extent")

    sp = sub.add_parser("phantom", help="rasterize a phantom")
    _add_phantom_args(sp)
    grid_args(sp)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--pgm", help="also write an 8-bit image")
    sp.set_defaults(func=cmd_phantom)

    sp = sub.add_parser("sinogram", help="project a grid or an analytic phantom")
    sp.add_argument("input", nargs="?")
    sp.add_argument("--analytic", action="store_true", help="line integrals of the phantom itself")
    _add_phantom_args(sp)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--pcount", type=int)
    sp.add_argument("--R", type=float)
    sp.add_argument("--L", type=float, default=1.0, help="half-extent used for the R default")
    sp.add_argument("--interp", choices=("cubic", "linear"), default="cubic")
    sp.add_argument("--psi", help="one | cos2:center:half_width | sector:start:stop")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_sinogram)

    sp = sub.add_parser("filter", help="apply the ramp filter to a sinogram")
    sp.add_argument("input")
    sp.add_argument("--pad", type=int, default=2)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("recon", help="reconstruct (direct, interp, multiplier)")
    sp.add_argument("input", help="sinogram; a grid for --method multiplier")
    sp.add_argument("--method", choices=("direct", "interp", "multiplier"), default="direct")
    sp.add_argument("--kernel", default="lanczos3",
                    choices=filtering.KERNEL_KINDS + tuple(filtering.KERNEL_ALIASES))
    sp.add_argument("--kmax", type=int, default=2)
    sp.add_argument("--m", type=int, help="angle count for --method multiplier")
    sp.add_argument("--upsample", type=int, default=8)
    sp.add_argument("--pad", type=int, default=2)
    sp.add_argument("--refocus", type=_pair, help="refocus the data at x,y first")
    grid_args(sp)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--pgm")
    sp.set_defaults(func=cmd_recon)

    sp = sub.add_parser("predict", help="tabulate predicted artifact locations")
    _add_phantom_args(sp)
    grid_args(sp)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--B", type=float, help="band limit (edges); estimated from the raster if absent")
    sp.add_argument("--R", type=float)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--window", type=_window)
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("verify", help="match reconstruction peaks against predictions")
    sp.add_argument("recon")
    sp.add_argument("reference")
    _add_phantom_args(sp)
    grid_args(sp)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--B", type=float)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--interp", action="store_true", help="check the interpolation-method segments")
    sp.add_argument("--envelope", type=_pair, help="take peaks on the envelope along this direction")
    sp.add_argument("--tol-cells", type=float, default=2.0)
    sp.add_argument("--peak-threshold", type=float, default=0.5)
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("fit", help="fit a singular profile to a crosscut CSV")
    sp.add_argument("input")
    sp.add_argument("--kind", choices=conormal.KINDS, required=True)
    sp.add_argument("--p0", type=float, required=True)
    sp.add_argument("--window", type=float, required=True, help="half-width in physical units")
    sp.add_argument("--w", type=float, help="regularization width")
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("compare", help="relative errors between two grids")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--peak-threshold", type=float, default=0.5)
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("crosscut", help="extract a profile as CSV")
    sp.add_argument("input")
    sp.add_argument("--row", type=float)
    sp.add_argument("--col", type=float)
    sp.add_argument("--angle", type=float)
    sp.add_argument("--through", type=_pair, default=(0.0, 0.0))
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_crosscut)

    sp = sub.add_parser("run", help="run an experiment config (shipped names such as fig4.cfg work)")
    sp.add_argument("config")
    sp.add_argument("--out", help="output directory (overrides the config)")
    sp.add_argument("--strict", action="store_true", help="exit 1 when a check fails")
    sp.set_defaults(func=cmd_run)
    return p


# PhantomError (bad phantom parameters) falls through to ValueError: exit 2
_NUMERIC = (radon.SupportError, radon.PsiError, conormal.FitError, grids.GridError, FloatingPointError)


def _fail(code, exc):
    msg = " ".join(str(exc).split())
    sys.stderr.write(f"radonalias: error code={code} kind={type(exc).__name__} msg={msg}\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        if args.threads < 1:
            return _fail(EXIT_ARGS, UsageError("--threads must be >= 1"))
        _accel.set_threads(args.threads)
    try:
        rc = args.func(args)
    except (UsageError, experiments.ConfigError) as exc:
        return _fail(EXIT_ARGS, exc)
    except (grids.FormatError, OSError) as exc:
        return _fail(EXIT_IO, exc)
    except _NUMERIC as exc:
        return _fail(EXIT_NUMERIC, exc)
    except ValueError as exc:
        return _fail(EXIT_ARGS, exc)
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
