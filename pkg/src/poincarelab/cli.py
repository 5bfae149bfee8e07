"""Command-line front end.

Configuration comes from flags, optionally seeded by a flat key=value file
(--config); flags override file values and unknown file keys are rejected.
Every run writes its artifacts plus a run_manifest.json (config echo,
version, wall time) under the output directory. Exit codes: 0 success,
1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, artifacts
from .dynamics import (fixed_points, first_partition_cyl, hypdim_estimate,
                       partition_function, preimage_tree, pressure_curve,
                       tce_diagnostic)
from .errors import PoincareLabError, UsageError
from .ifs import (Disc, bowen_dimension, build_ifs_near, enumerate_word_sum,
                  lineariser_far_ifs, sp_lower_bound)
from .lineariser import (BaseMap, cyl_partition_L, el_inequality_check,
                         exp_lineariser_trap_check, koenigs_series, level_set,
                         level_sets_range, theta_estimate)
from .metrics import MetricKind
from .parallel import ordered_map
from .polynomial import Polynomial
from .render import FigureSpec, render_julia_mask, render_preimage_figure, write_image
from .series import exp_series, wv_annulus_chain, wv_diagnostics

OUT_ENV = "POINCARE_LAB_OUT"


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise UsageError(f"cannot parse complex number {text!r}") from exc


def parse_poly(text: str) -> Polynomial:
    """Ascending coefficients, comma separated; 're:im' for complex ones."""
    if not text:
        raise UsageError("missing polynomial coefficients (--poly)")
    coeffs = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            re_s, im_s = part.split(":")
            coeffs.append(complex(float(re_s), float(im_s)))
        else:
            coeffs.append(complex(float(part)))
    return Polynomial(tuple(coeffs))


def parse_floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def load_config(path: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = line.split("=", 1)
        cfg[key.strip()] = val.strip()
    return cfg


def apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Merge a key=value config file under the explicit flags."""
    if not getattr(args, "config", None):
        return
    cfg = load_config(args.config)
    known = {a.dest for a in parser._actions}
    explicit = _explicit_dests(parser)
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise UsageError(f"unknown config key {key!r}")
        if dest in explicit:
            continue
        default = parser.get_default(dest)
        if isinstance(default, bool):
            setattr(args, dest, val.lower() in ("1", "true", "yes"))
        elif isinstance(default, int):
            setattr(args, dest, int(val))
        elif isinstance(default, float):
            setattr(args, dest, float(val))
        else:
            setattr(args, dest, val)


def _explicit_dests(parser: argparse.ArgumentParser) -> set:
    dests = set()
    argv = sys.argv[1:]
    for action in parser._actions:
        for opt in action.option_strings:
            if any(a == opt or a.startswith(opt + "=") for a in argv):
                dests.add(action.dest)
    return dests


def out_dir(args) -> Path:
    out = getattr(args, "out", None) or os.environ.get(OUT_ENV) or "poincare-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(outdir: Path, command: str, args, started: float) -> None:
    echo = {k: repr(v) for k, v in sorted(vars(args).items())
            if k not in ("func", "parser")}
    artifacts.write_json(outdir / "run_manifest.json", {
        "command": command,
        "argv": sys.argv[1:],
        "config": echo,
        "version": __version__,
        "python": sys.version.split()[0],
        "wall_time_s": round(time.time() - started, 3),
    })


def build_lineariser(args) -> "Lineariser":
    if getattr(args, "base", "poly") == "exp":
        a = parse_complex(args.exp_a)
        base = BaseMap.scaled_exponential(a)
        xi0 = parse_complex(args.fixpoint) if args.fixpoint else a
    else:
        poly = parse_poly(args.poly)
        base = BaseMap.polynomial(poly)
        if args.fixpoint and not args.fixpoint.lstrip("-").isdigit():
            xi0 = parse_complex(args.fixpoint)
        else:
            fps = [f for f in fixed_points(poly) if f.kind == "repelling"]
            if not fps:
                raise UsageError("no repelling fixed point found")
            fps.sort(key=lambda f: (abs(f.multiplier), f.point.real, f.point.imag))
            idx = int(args.fixpoint) if args.fixpoint else 0
            if idx >= len(fps):
                raise UsageError(f"fixed-point index {idx} out of range")
            xi0 = fps[idx].point
    lin = koenigs_series(base, xi0, N=args.order, a1=parse_complex(args.a1))
    if getattr(args, "r0", None):
        lin = lin.with_r0(float(args.r0))
    return lin


# -- subcommand bodies -------------------------------------------------------

def cmd_fixed_points(args, outdir: Path) -> None:
    poly = parse_poly(args.poly)
    fps = fixed_points(poly)
    artifacts.write_csv(outdir / "fixed_points.csv",
                        ["re", "im", "mult_re", "mult_im", "kind"],
                        [(f.point.real, f.point.imag, f.multiplier.real,
                          f.multiplier.imag, f.kind) for f in fps])
    for f in fps:
        print(f"{f.point:.12g}  multiplier {f.multiplier:.12g}  {f.kind}")


def cmd_preimages(args, outdir: Path) -> None:
    poly = parse_poly(args.poly)
    tree = preimage_tree(poly, parse_complex(args.w), args.n, args.cap)
    artifacts.write_tree_csv(outdir / "preimages.csv", tree)
    print(f"levels: {[len(p) for p in tree.points]}  truncated: {tree.truncated}")


def cmd_partition(args, outdir: Path) -> None:
    poly = parse_poly(args.poly)
    w = parse_complex(args.w)
    metric = MetricKind(args.metric)
    value = partition_function(poly, args.n, w, args.t, metric)
    artifacts.write_json(outdir / "partition.json",
                         {"t": args.t, "n": args.n, "w": [w.real, w.imag],
                          "metric": metric.value, "value": value})
    print(f"Z({args.t}, P^{args.n}, {w}) [{metric.value}] = {value:.12g}")


def cmd_pressure(args, outdir: Path) -> None:
    poly = parse_poly(args.poly)
    w = parse_complex(args.w)
    ts = parse_floats(args.tgrid)
    ests = [pressure_curve(poly, t, w, args.nmax) for t in ts]
    artifacts.write_pressure_csv(outdir / "pressure.csv", ests)
    artifacts.write_json(outdir / "pressure.json",
                         [artifacts.pressure_json(e) for e in ests])
    for e in ests:
        print(f"pressure(t={e.t}) = {e.pressure:.6f}")


def cmd_hypdim(args, outdir: Path) -> None:
    poly = parse_poly(args.poly)
    w = parse_complex(args.w)
    value = hypdim_estimate(poly, w, args.nmax)
    tce = tce_diagnostic(poly, w, args.nmax)
    artifacts.write_json(outdir / "hypdim.json",
                         {"hypdim": value, "n_max": args.nmax,
                          "w": [w.real, w.imag],
                          "tce": {"t_probe": tce.t_probe,
                                  "pressure_at_probe": tce.pressure_at_probe,
                                  "verdict": tce.verdict}})
    print(f"hypdim estimate = {value:.4f}  ({tce.verdict})")


def cmd_lineariser_build(args, outdir: Path) -> None:
    lin = build_lineariser(args)
    artifacts.write_json(outdir / "lineariser.json", artifacts.lineariser_json(lin))
    print(f"xi0 = {lin.xi0:.10g}  rho = {lin.rho:.10g}  r0 = {lin.r0:.6g}  "
          f"safe radius = {lin.safe_eval_radius:.6g}")
    for w in lin.warnings:
        print("warning:", w)


def cmd_lineariser_eval(args, outdir: Path) -> None:
    lin = build_lineariser(args)
    zs = [parse_complex(p) for p in args.points.split(";")]
    vals = [lin.evaluate(z) for z in zs]
    derivs = [lin.derivative(z) for z in zs]
    artifacts.write_csv(outdir / "lineariser_eval.csv",
                        ["z_re", "z_im", "L_re", "L_im", "dL_re", "dL_im"],
                        [(z.real, z.imag, v.real, v.imag, d.real, d.imag)
                         for z, v, d in zip(zs, vals, derivs)])
    for z, v in zip(zs, vals):
        print(f"L({z}) = {v}")


def cmd_lineariser_levels(args, outdir: Path) -> None:
    lin = build_lineariser(args)
    w = parse_complex(args.w)
    levels = level_sets_range(lin, w, args.nmin, args.nmax, args.cap,
                              allow_core_target=args.allow_core_target)
    artifacts.write_level_set_csv(outdir / "level_sets.csv", list(levels.values()))
    counts = {n: len(ls.points) for n, ls in levels.items()}
    print("level counts:", counts)


def cmd_theta(args, outdir: Path) -> None:
    lin = build_lineariser(args)
    est = theta_estimate(lin, parse_floats(args.tgrid), parse_floats(args.wmods),
                         n_max=args.nmax)
    artifacts.write_theta_csv(outdir / "theta.csv", est)
    artifacts.write_json(outdir / "theta.json", artifacts.theta_json(est))
    print(f"bracket: [{est.bracket_lo}, {est.bracket_hi}]")
    for t, c in est.classifications.items():
        print(f"  t = {t}: {c}")


def cmd_ifs_build(args, outdir: Path) -> None:
    poly = parse_poly(args.poly)
    disc = Disc(parse_complex(args.center), args.radius)
    system = build_ifs_near(poly, disc, args.n, args.max_branches)
    artifacts.write_json(outdir / "ifs.json", artifacts.ifs_json(system))
    print(f"{len(system.branches)} branches, norms "
          f"{[round(b.norm_sup, 6) for b in system.branches]}")


def cmd_ifs_bowen(args, outdir: Path) -> None:
    poly = parse_poly(args.poly)
    disc = Disc(parse_complex(args.center), args.radius)
    system = build_ifs_near(poly, disc, args.n, args.max_branches)
    res = bowen_dimension(system)
    artifacts.write_json(outdir / "bowen.json", artifacts.bowen_json(res))
    artifacts.write_bowen_csv(outdir / "bowen.csv", res)
    print(f"bowen dimension = {res.dim:.6f}")


def cmd_ifs_sp_check(args, outdir: Path) -> None:
    poly = parse_poly(args.poly)
    disc = Disc(parse_complex(args.center), args.radius)
    system = build_ifs_near(poly, disc, args.n, args.max_branches)
    rows = []
    for p in range(args.pmin, args.pmax + 1):
        sp = sp_lower_bound(system, args.t, p)
        rows.append((p, sp.ratio, sp.rhs, sp.nu_p,
                     "n/a" if sp.holds is None else sp.holds))
    artifacts.write_csv(outdir / "sp_check.csv",
                        ["p", "ratio", "rhs", "nu_p", "holds"], rows)
    for row in rows:
        print(f"p={row[0]}: ratio={row[1]:.6g} holds={row[4]}")


def cmd_ifs_far(args, outdir: Path) -> None:
    lin = build_lineariser(args)
    res = lineariser_far_ifs(lin, args.k, args.max_branches)
    artifacts.write_json(outdir / "far_bowen.json", artifacts.bowen_json(res))
    print(f"far-annulus bowen dimension (k={args.k}) = {res.dim:.6f}")


def cmd_wv(args, outdir: Path) -> None:
    series = exp_series(args.order)
    recs = wv_diagnostics(series, parse_floats(args.rlist))
    artifacts.write_csv(outdir / "wv.csv",
                        ["r", "N", "log_M", "bound_ok", "eps_max"],
                        [(r.r, r.N, r.log_M, r.bound_ok, r.eps_max) for r in recs])
    chain = wv_annulus_chain(series, args.rho_mod, args.rf, args.m, args.K,
                             r0=args.r_start)
    artifacts.write_csv(outdir / "wv_chain.csv",
                        ["k", "log_r", "N", "n", "log_M", "sandwich_ok"],
                        [(c.k, c.log_r, c.N, c.n, c.log_M, c.sandwich_ok)
                         for c in chain])
    for c in chain:
        print(f"k={c.k}: n={c.n} log_M={c.log_M:.6g} sandwich={c.sandwich_ok}")


def cmd_render(args, outdir: Path) -> None:
    if not args.poly:
        raise UsageError("render needs --poly")
    poly = parse_poly(args.poly)
    if args.julia_only:
        img = render_julia_mask(poly, parse_complex(args.center), args.width,
                                args.resolution, args.iter_cap, jobs=args.jobs)
        write_image(img, outdir / "julia.ppm")
        print("wrote julia.ppm")
        return
    lin = build_lineariser(args)
    spec = FigureSpec(resolution=args.resolution, iter_cap=args.iter_cap)
    left, right = render_preimage_figure(lin, parse_complex(args.w), args.n,
                                         spec, jobs=args.jobs,
                                         allow_core_target=args.allow_core_target)
    write_image(left, outdir / "lineariser_domain.ppm")
    write_image(right, outdir / "basemap_range.ppm")
    print("wrote lineariser_domain.ppm, basemap_range.ppm")


def cmd_trap_check(args, outdir: Path) -> None:
    res = exp_lineariser_trap_check(parse_complex(args.lam), N=args.order)
    artifacts.write_json(outdir / "trap_check.json",
                         {"lambda": args.lam, "contained": res.contained,
                          "max_boundary_dist": res.max_boundary_dist,
                          "radius": res.radius})
    print(f"contained = {res.contained}  "
          f"max |L(z) - 2 pi i| = {res.max_boundary_dist:.6f} "
          f"(target {math.pi / 2:.6f})")


def cmd_selftest(args, outdir: Path) -> None:
    checks = _selftest_checks()
    results = ordered_map(lambda c: (c[0], c[1]()), checks, args.jobs)
    rows = []
    failures = 0
    for name, (ok, value) in results:
        rows.append((name, "pass" if ok else "FAIL", value))
        failures += 0 if ok else 1
        print(f"{name:<24} {'pass' if ok else 'FAIL'}  ({value:.3g})")
    artifacts.write_csv(outdir / "selftest.csv", ["check", "status", "value"], rows)
    artifacts.write_json(outdir / "selftest.json",
                         {name: {"ok": bool(ok), "value": value}
                          for name, (ok, value) in results})
    if failures:
        raise PoincareLabError(f"{failures} selftest check(s) failed")


def _selftest_checks() -> list:
    z2 = Polynomial((0, 0, 1))
    cheb = Polynomial((-2, 0, 1))

    def aberth():
        p = Polynomial((1, -3, 0.5j, 0, 2))
        roots = p.roots()
        res = max(abs(p.eval(r)) / (1 + abs(r)) ** p.degree for r in roots)
        return res <= 1e-13, res

    def chain_identity():
        tree = preimage_tree(cheb, 2 + 2j, 6)
        worst = 0.0
        for i in range(0, tree.level_count(6), 7):
            node = tree.node(6, i)
            prod = 1.0 + 0.0j
            cur = node
            while cur.parent is not None:
                prod *= cheb.eval_derivative(cur.point)
                cur = cur.parent
            worst = max(worst, abs(prod - node.cum_deriv) / max(1e-300, abs(prod)))
        return worst <= 1e-9 * 6, worst

    def partition_oracle():
        err = abs(partition_function(z2, 3, 1.0, 1.0) - 1.0)
        return err <= 1e-12, err

    def pressure_zero():
        p = pressure_curve(z2, 1.0, 2 + 2j, 12).pressure
        return abs(p) <= 0.02, p

    def schroeder():
        lin = koenigs_series(BaseMap.polynomial(z2), 1.0, N=256)
        res = lin.schroeder_residual()
        return res <= 1e-10, res

    def moran():
        from .ifs import Branch, FiniteIFS
        d = Disc(0.0, 1.0)
        sys_ = FiniteIFS(d, [Branch(1, d, 0.0, 0.1, 1 / 3, MetricKind.EUCLIDEAN, [])
                             for _ in range(2)], MetricKind.EUCLIDEAN)
        err = abs(bowen_dimension(sys_).dim - math.log(2) / math.log(3))
        return err <= 1e-6, err

    def word_identity():
        total = enumerate_word_sum([0.3, 0.45], 1.0, 6)
        err = abs(total - 0.75 ** 6) / 0.75 ** 6
        return err <= 1e-12, err

    def rescale_identity():
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(10):
            lam = complex(rng.uniform(0.5, 2), rng.uniform(-1, 1))
            w = complex(rng.uniform(2, 6), rng.uniform(1, 4))
            t = float(rng.uniform(0.4, 2.0))
            a = first_partition_cyl(cheb, w, t, prefactor=lam)
            b = first_partition_cyl(cheb, w / lam, t)
            worst = max(worst, abs(a - b) / abs(b))
        return worst <= 1e-12, worst

    def levelset_logs():
        lin = koenigs_series(BaseMap.polynomial(z2), 1.0, N=256)
        w = 30 * np.exp(0.3j)
        pts = sorted(p.z.imag for p in level_set(lin, w, 4).points)
        want = sorted((math.log(30) + 1j * (0.3 + 2 * math.pi * k)).imag
                      for k in range(-40, 41)
                      if lin.r0 * 16 <= abs(math.log(30) + 1j * (0.3 + 2 * math.pi * k))
                      < lin.r0 * 32)
        if len(pts) != len(want):
            return False, float(len(pts) - len(want))
        err = max(abs(a - b) for a, b in zip(pts, want))
        return err <= 1e-9, err

    def wv_chain_start():
        chain = wv_annulus_chain(exp_series(600), 2.0, 1.0, 3.0, 2, r0=10.0)
        return chain[0].n == 13, float(chain[0].n)

    return [("aberth-residual", aberth),
            ("chain-identity", chain_identity),
            ("partition-oracle", partition_oracle),
            ("pressure-zero", pressure_zero),
            ("schroeder-residual", schroeder),
            ("moran-dimension", moran),
            ("word-sum-identity", word_identity),
            ("rescaling-identity", rescale_identity),
            ("levelset-log-oracle", levelset_logs),
            ("wv-chain-start", wv_chain_start)]


# -- parser ------------------------------------------------------------------

def _add_common(sp, *names):
    sp.add_argument("--config", help="flat key=value config file")
    sp.add_argument("--out", help=f"output directory (or ${OUT_ENV})")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int, default=1)
    if "poly" in names:
        sp.add_argument("--poly",
                        help="ascending coefficients, e.g. '0,0,1' for z^2; "
                             "'re:im' for complex entries")
    if "lineariser" in names:
        sp.add_argument("--poly", help="ascending coefficients of the base polynomial")
        sp.add_argument("--base", choices=("poly", "exp"), default="poly")
        sp.add_argument("--exp-a", default="6.283185307179586j",
                        help="scale a for the base z -> a e^z")
        sp.add_argument("--fixpoint", default=None,
                        help="repelling fixed point: index (by |multiplier|) "
                             "or explicit complex value")
        sp.add_argument("--a1", default="1", help="normalisation L'(0)")
        sp.add_argument("--order", type=int, default=512,
                        help="series truncation order")
        sp.add_argument("--r0", type=float, default=None,
                        help="override the fundamental-annulus radius "
                             "(must stay within the certified univalence radius)")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poincare-lab",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fixed-points", help="fixed points and multipliers")
    _add_common(sp, "poly")
    sp.set_defaults(func=cmd_fixed_points, parser=sp)

    sp = sub.add_parser("preimages", help="iterated preimage tree")
    _add_common(sp, "poly")
    sp.add_argument("--w", default="2+2j")
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--cap", type=int, default=1 << 19)
    sp.set_defaults(func=cmd_preimages, parser=sp)

    sp = sub.add_parser("partition", help="partition function at one level")
    _add_common(sp, "poly")
    sp.add_argument("--w", default="2+2j")
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--metric", default="spherical",
                    choices=[m.value for m in MetricKind])
    sp.set_defaults(func=cmd_partition, parser=sp)

    sp = sub.add_parser("pressure", help="pressure curve over a t-grid")
    _add_common(sp, "poly")
    sp.add_argument("--w", default="2+2j")
    sp.add_argument("--tgrid", default="0,0.5,1,1.5,2")
    sp.add_argument("--nmax", type=int, default=14)
    sp.set_defaults(func=cmd_pressure, parser=sp)

    sp = sub.add_parser("hypdim", help="hyperbolic-dimension estimate")
    _add_common(sp, "poly")
    sp.add_argument("--w", default="2+2j")
    sp.add_argument("--nmax", type=int, default=14)
    sp.set_defaults(func=cmd_hypdim, parser=sp)

    sp = sub.add_parser("lineariser", help="lineariser operations")
    lsub = sp.add_subparsers(dest="subcommand", required=True)
    for name, fn in (("build", cmd_lineariser_build),
                     ("eval", cmd_lineariser_eval),
                     ("levels", cmd_lineariser_levels)):
        lsp = lsub.add_parser(name)
        _add_common(lsp, "lineariser")
        if name == "eval":
            lsp.add_argument("--points", required=True,
                             help="semicolon-separated complex points")
        if name == "levels":
            lsp.add_argument("--w", default="30")
            lsp.add_argument("--nmin", type=int, default=1)
            lsp.add_argument("--nmax", type=int, default=8)
            lsp.add_argument("--cap", type=int, default=1 << 19)
            lsp.add_argument("--allow-core-target", action="store_true")
        lsp.set_defaults(func=fn, parser=lsp)

    sp = sub.add_parser("theta", help="vanishing-exponent bracket")
    _add_common(sp, "lineariser")
    sp.add_argument("--tgrid", default="0.7,1.3")
    sp.add_argument("--wmods", default="100,1000,10000")
    sp.add_argument("--nmax", type=int, default=16)
    sp.set_defaults(func=cmd_theta, parser=sp)

    sp = sub.add_parser("ifs", help="iterated-function-system operations")
    isub = sp.add_subparsers(dest="subcommand", required=True)
    for name, fn in (("build", cmd_ifs_build), ("bowen", cmd_ifs_bowen),
                     ("sp-check", cmd_ifs_sp_check)):
        isp = isub.add_parser(name)
        _add_common(isp, "poly")
        isp.add_argument("--center", default="1")
        isp.add_argument("--radius", type=float, default=0.2)
        isp.add_argument("--n", type=int, default=3)
        isp.add_argument("--max-branches", type=int, default=64)
        if name == "sp-check":
            isp.add_argument("--t", type=float, default=1.0)
            isp.add_argument("--pmin", type=int, default=4)
            isp.add_argument("--pmax", type=int, default=14)
        isp.set_defaults(func=fn, parser=isp)
    isp = isub.add_parser("far")
    _add_common(isp, "lineariser")
    isp.add_argument("--k", type=int, default=8)
    isp.add_argument("--max-branches", type=int, default=64)
    isp.set_defaults(func=cmd_ifs_far, parser=isp)

    sp = sub.add_parser("wv", help="maximal-term diagnostics and annulus chain")
    _add_common(sp)
    sp.add_argument("--order", type=int, default=2500)
    sp.add_argument("--rlist", default="10,100,1000")
    sp.add_argument("--rho-mod", type=float, default=2.0)
    sp.add_argument("--rf", type=float, default=1.0)
    sp.add_argument("--m", type=float, default=3.0)
    sp.add_argument("--K", type=int, default=6)
    sp.add_argument("--r-start", type=float, default=10.0)
    sp.set_defaults(func=cmd_wv, parser=sp)

    sp = sub.add_parser("render", help="figure panels or a Julia mask")
    _add_common(sp, "lineariser")
    sp.add_argument("--w", default="2+2j")
    sp.add_argument("--n", type=int, default=15)
    sp.add_argument("--resolution", type=int, default=512)
    sp.add_argument("--iter-cap", type=int, default=200)
    sp.add_argument("--julia-only", action="store_true")
    sp.add_argument("--center", default="0")
    sp.add_argument("--width", type=float, default=4.0)
    sp.add_argument("--allow-core-target", action="store_true")
    sp.set_defaults(func=cmd_render, parser=sp)

    sp = sub.add_parser("trap-check", help="exponential-lineariser trapping disc")
    _add_common(sp)
    sp.add_argument("--lam", default="0.04")
    sp.add_argument("--order", type=int, default=512)
    sp.set_defaults(func=cmd_trap_check, parser=sp)

    sp = sub.add_parser("selftest", help="run the invariant suite")
    _add_common(sp)
    sp.set_defaults(func=cmd_selftest, parser=sp)
    return ap


def _merge_negative_values(argv: list) -> list:
    """Join '--opt' '-2,0,1' into '--opt=-2,0,1' so numeric values that
    start with a minus sign survive argparse."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt
                and nxt.startswith("-") and any(c.isdigit() for c in nxt)):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = make_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_merge_negative_values(argv))
    started = time.time()
    try:
        apply_config(args, getattr(args, "parser", parser))
        outdir = out_dir(args)
        args.func(args, outdir)
        write_manifest(outdir, args.command, args, started)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except PoincareLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
