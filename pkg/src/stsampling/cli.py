"""Command-line front end.

Every subcommand writes its report to ``--out-dir`` as JSON (default) or CSV
and prints a short summary.  Exit status is 0 on success, 2 when a built-in
check fails and 1 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import auxfun, counterexample, frame, lattice, pointset
from .frame import IndexRect
from .lattice import CurvilinearLattice, FitConfig
from .pointset import GeneratorConfig, PointSet2
from .signal import BandlimitedField, SpectralGrid

KIND_ALIASES = {
    "rect": "rect_lattice",
    "lattice": "rect_lattice",
    "lattice2pi": "rect_lattice",
    "perturbed": "perturbed_lattice",
    "circles": "concentric_circles",
    "jittered": "jittered_delone",
}
KIND_HEADERS = {
    "rect_lattice": "rectangular lattice spacing*Z^2",
    "perturbed_lattice": "perturbed lattice (2 pi n + 2^-(m^2+n^2), 2 pi m + 2^-(|m|+|n|))",
    "concentric_circles": "concentric circles of radius 2 pi k, points spaced by arc length",
    "jittered_delone": "jittered lattice (uniform box jitter per site)",
}


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# parsing helpers


def _number(text: str) -> float:
    """Float, ``pi`` multiples (``16pi``, ``pi/4``) or powers of two (``2^-4``)."""
    t = text.strip().replace(" ", "")
    m = re.fullmatch(r"2\^(-?\d+)", t)
    if m:
        return 2.0 ** int(m.group(1))
    m = re.fullmatch(r"([-+]?[\d.eE+-]*)\*?pi(?:/([\d.]+))?", t)
    if m:
        k = float(m.group(1)) if m.group(1) not in ("", "+", "-") else float(m.group(1) + "1")
        return k * np.pi / (float(m.group(2)) if m.group(2) else 1.0)
    try:
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _numbers(text: str) -> list[float]:
    return [_number(t) for t in text.split(",") if t.strip()]


def _eps_range(text: str) -> list[float]:
    """``2^-4..2^-12`` (all powers of two in between) or a comma list."""
    m = re.fullmatch(r"\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        step = -1 if b < a else 1
        return [2.0**k for k in range(a, b + step, step)]
    return _numbers(text)


def _kind(name: str) -> str:
    k = KIND_ALIASES.get(name, name)
    if k not in pointset.KINDS or k == "from_file":
        raise argparse.ArgumentTypeError(f"unknown set kind {name!r}")
    return k


def _generator(args, kind: str) -> GeneratorConfig:
    return GeneratorConfig(kind, spacing=args.spacing, arc=args.arc, jitter=args.jitter, seed=args.seed)


def _point_set(args) -> PointSet2:
    if getattr(args, "input", None):
        path = Path(args.input)
        if not path.exists():
            raise UsageError(f"input file not found: {path}")
        return pointset.load(path, getattr(args, "R", None))
    kind = _kind(args.set)
    jitter = args.jitter
    if kind == "jittered_delone" and jitter == 0:
        jitter = 0.3
    cfg = GeneratorConfig(kind, spacing=args.spacing, arc=args.arc, jitter=jitter, seed=args.seed)
    return pointset.gen(cfg, args.R)


def _lattice(text: str) -> CurvilinearLattice:
    v = _numbers(text)
    if len(v) != 5:
        raise argparse.ArgumentTypeError("lattice needs t1,t2,xi1,xi2,theta")
    return CurvilinearLattice.from_params(*v)


def _add_set_args(p, default_set="jittered", default_R=16 * np.pi):
    p.add_argument("--set", default=default_set, help="rect|lattice2pi|perturbed|circles|jittered")
    p.add_argument("--input", help="point file (one 'x y' per line) instead of --set")
    p.add_argument("--R", type=_number, default=default_R, help="window half-width (accepts e.g. 16pi)")
    p.add_argument("--spacing", type=_number, default=2 * np.pi)
    p.add_argument("--arc", type=float, default=1.0)
    p.add_argument("--jitter", type=float, default=0.0)


def _add_frame_args(p, sigma=2.0, I="0.5,1,0.5,1"):
    p.add_argument("--sigma", type=float, default=sigma)
    p.add_argument("--grid-R", type=_number, default=None, help="half-period of the spectral grid (default: --R)")
    p.add_argument("--I", default=I, help="a,b,c,d (tensor) or a,b (radial)")
    p.add_argument("--quad", type=int, default=16)


# ---------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _emit(args, name: str, report: dict, rows: list[dict] | None = None) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        path = out / f"{name}.csv"
        path.write_text(_csv_text(rows if rows is not None else [_flat(report)]))
    else:
        path = out / f"{name}.json"
        path.write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")
    return path


def _flat(d: dict) -> dict:
    return {k: v for k, v in d.items() if not isinstance(v, (dict, list))}


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    kind = _kind(args.kind)
    cfg = _generator(args, kind)
    S = pointset.gen(cfg, args.R)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or kind
    header = f"{KIND_HEADERS[kind]}\nkind = {kind}; spacing = {cfg.spacing!r}; arc = {cfg.arc!r}; jitter = {cfg.jitter!r}; seed = {cfg.seed}"
    pointset.write_points(S, out / f"{stem}.txt", header)
    if not args.no_svg:
        from .plot import scatter_svg

        scatter_svg(S.points, out / f"{stem}.svg", window=args.R, title=kind)
    sep = pointset.separation_constant(S) if len(S) > 1 else None
    report = {"kind": kind, "R": args.R, "points": len(S), "separation": sep, "file": f"{stem}.txt"}
    _emit(args, f"{stem}_summary", report)
    print(f"{len(S)} points, separation {sep}")
    return 0


def _fit_config(args) -> FitConfig:
    return FitConfig(starts=args.starts, xi_max=args.xi_max, seed=args.seed)


def cmd_fit_lattice(args) -> int:
    S = _point_set(args)
    fit = lattice.fit(S, _fit_config(args))
    report = {"points": len(S), **fit.to_json()}
    _emit(args, "fit_lattice", report, [{"max_residual": fit.max_residual, "rms_residual": fit.rms_residual,
                                         **{f"t{i + 1}": v for i, v in enumerate(fit.lattice.t)},
                                         **{f"xi{i + 1}": v for i, v in enumerate(fit.lattice.xi)},
                                         **{f"r{i + 1}": v for i, v in enumerate(fit.lattice.r)}}])
    if args.svg:
        from .plot import scatter_svg

        scatter_svg(S.points, Path(args.out_dir) / "fit_lattice.svg", [fit.lattice], window=S.window_radius)
    print(f"max residual {fit.max_residual:.3e} lattice {fit.lattice}")
    return 0


def cmd_condition_a(args) -> int:
    S = _point_set(args)
    probes = None
    if args.probe_radii:
        probes = [(0.0, 0.0)] + pointset.radial_directions(tuple(_numbers(args.probe_radii)))
    rep = lattice.condition_a_report(S, probes, _fit_config(args), args.window)
    rows = [{"direction_x": d[0], "direction_y": d[1], "max_residual": m, "points": n} for d, m, n in rep.per_probe]
    _emit(args, "condition_a", rep.to_json(), rows)
    print(f"condition (A) proxy score {rep.score:.3e}")
    return 0


def _frame_setup(args, S: PointSet2):
    gR = args.grid_R or S.window_radius
    grid = SpectralGrid(args.sigma, gR)
    I = IndexRect.parse(args.I, args.quad)
    return grid, I


def cmd_frame_bounds(args) -> int:
    S = _point_set(args)
    sigmas = _numbers(args.sweep) if args.sweep else [args.sigma]
    rows = []
    for s in sigmas:
        args.sigma = s
        grid, I = _frame_setup(args, S)
        rep = frame.frame_bounds(frame.assemble(S, I, grid, args.normalization))
        rows.append(rep.to_json())
        print(f"sigma {s}: D1 {rep.D1:.3e} D2 {rep.D2:.3e} D1/D2 {rep.ratio:.3e}")
    report = rows[0] if len(rows) == 1 else {"sweep": rows}
    _emit(args, "frame_bounds", report, [{"sigma": r["sigma"], "D1": r["D1"], "D2": r["D2"]} for r in rows])
    return 0


def _snap_witness(fit: lattice.LatticeFit, grid: SpectralGrid, pts: np.ndarray, tol: float = 1e-9):
    """Round the fitted frequencies to the grid; keep the lattice only if it still fits."""
    xi = np.rint(np.array(fit.lattice.xi) / grid.dxi) * grid.dxi
    if np.abs(xi).max() > grid.K * grid.dxi:
        return None
    try:
        L = CurvilinearLattice(fit.lattice.t, tuple(xi), fit.lattice.r)
    except lattice.LatticeError:
        return None
    if len(pts) and np.abs(lattice.residual(L, pts)).max() > tol:
        return None
    return L


def cmd_analyze(args) -> int:
    S = _point_set(args)
    grid, I = _frame_setup(args, S)
    car = lattice.condition_a_report(S, None, _fit_config(args))
    A = frame.assemble(S, I, grid)
    fr = frame.frame_bounds(A)
    report = {"condition_a": car.to_json(), "frame": fr.to_json()}
    # the obstruction lives in weak limits, so also measure the window where the best fit was found
    d_best, m_best, _ = min(car.per_probe, key=lambda e: e[1])
    fw = None
    if d_best != (0.0, 0.0) and m_best < car.per_probe[0][1]:
        (pr,) = pointset.translate_limit_probe(S, [d_best], S.window_radius)
        if not pr.empty:
            fw = frame.frame_bounds(frame.assemble(pr.window, I, grid), vectors=False)
            report["frame_witness_window"] = {"direction": list(d_best), **fw.to_json()}
    if S.source is not None and S.source.enlargeable and args.bessel_levels > 1:
        b = frame.bessel_check(S, I, SpectralGrid(args.bessel_sigma, S.window_radius), args.bessel_levels)
        report["bessel"] = b.to_json()
    cert = None
    if car.best_fit is not None and car.best_fit.max_residual <= 1e-9:
        L = _snap_witness(car.best_fit, grid, A.points)
        if L is not None:
            cert = frame.null_vector_certificate(A, counterexample.build_g(L, grid), fr.D2)
            cert["lattice"] = L.to_json()
    report["null_vector_certificate"] = cert
    verdict = "consistent with stable sampling" if car.score >= args.score_threshold and fr.ratio > 0 else "sampling obstruction"
    report["verdict"] = verdict
    rows = [{"score": car.score, "D1": fr.D1, "D2": fr.D2, "ratio": fr.ratio, "sigma": grid.sigma, "R": grid.R,
             "points": len(A.points), "verdict": verdict}]
    _emit(args, "analyze", report, rows)
    print(f"{'score':>12} {'D1':>12} {'D2':>12} {'D1/D2':>12}")
    print(f"{car.score:12.3e} {fr.D1:12.3e} {fr.D2:12.3e} {fr.ratio:12.3e}  {verdict}")
    if fw is not None:
        print(f"witness window {tuple(d_best)}: D1 {fw.D1:.3e} D2 {fw.D2:.3e} D1/D2 {fw.ratio:.3e}")
    if cert is not None:
        print(f"null-vector certificate: ||Ag|| / (s_max ||g||) = {cert['ratio']:.3e} for lattice {cert['lattice']}")
    return 0


def cmd_counterexample(args) -> int:
    S = _point_set(args)
    grid = SpectralGrid(max(np.abs(args.lattice.xi).max(), 1e-9), args.grid_R or 16 * np.pi)
    eps = [k * grid.dxi for k in _numbers(args.eps_list)]
    I = IndexRect.parse(args.I, args.quad)
    rep = counterexample.run_sweep(args.lattice, S, I, eps, grid=grid)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.out:
        (out / args.out).write_text(counterexample.sweep_csv(rep))
        print(f"wrote {out / args.out}")
    _emit(args, "counterexample", rep, rep["rows"])
    if not args.no_svg:
        from .plot import scatter_svg

        scatter_svg(S.points, out / "counterexample.svg", [args.lattice], window=S.window_radius)
    for r in rep["rows"]:
        print(f"eps {r['eps']:.4g}: ratio {r['ratio']:.3e} deficiency {r['deficiency']:.3e}")
    if not (rep["ratio_decreasing"] and rep["deficiency_increasing"]):
        raise CheckFailed("sample ratio is not decreasing along the sweep")
    return 0


def cmd_auxfun(args) -> int:
    eps = _eps_range(args.eps)
    if args.action == "verify":
        psi = [auxfun.verify_psi(e) for e in eps]
        cb = auxfun.verify_condition_B(sorted(eps, reverse=True))
        rows = []
        for p, r in zip(psi, cb["rows"]):
            rows.append({"epsilon": p["epsilon"], "integral_psi": p["integral"], "psi_l2": p["l2"],
                         "psi_weighted_l2": p["weighted_l2"], "phi_l2": r["phi_l2"], "phi_grad_l2": r["phi_grad_l2"]})
        report = {"psi": psi, "condition_B": cb}
        _emit(args, "auxfun_verify", report, rows)
        ok = all(p["ok"] for p in psi) and cb["phi_l2_increasing"] and cb["grad_l2_decreasing"]
        print(f"P1-P4 {'pass' if all(p['ok'] for p in psi) else 'FAIL'}; "
              f"||Phi|| increasing {cb['phi_l2_increasing']}; ||grad Phi|| decreasing {cb['grad_l2_decreasing']}")
        if not ok:
            raise CheckFailed("auxiliary-function checks failed")
    else:
        rows = [auxfun.sinc_family(e, args.dim)[1] for e in eps]
        _emit(args, "auxfun_sinc", {"rows": rows}, rows)
        for r in rows:
            print(f"eps {r['epsilon']:.4g}: ||Phi|| {r['l2']:.4e} grad {r['grad_l2']:.4e}")
    return 0


def cmd_heat_demo(args) -> int:
    S = _point_set(args)
    gR = args.grid_R or S.window_radius
    grid = SpectralGrid(args.sigma, gR)
    I = IndexRect.parse(args.I, args.quad)
    if not I.radial:
        raise UsageError("heat-demo needs a radial interval --I a,b")
    A = frame.assemble(S, I, grid)
    rng = np.random.default_rng(args.seed)
    f = BandlimitedField.zeros(grid) if args.zero else BandlimitedField.random(grid, rng)
    null = None
    if args.null_lattice is not None:
        g = counterexample.build_g(args.null_lattice, grid)
        null = g.vector / np.linalg.norm(g.vector)
        f = f.with_coeffs(f.vector + np.linalg.norm(f.vector) * null if not args.zero else f.vector)
    times, y = frame.heat_samples(f, A.points, I, args.sigma_diff)
    rec = frame.reconstruct(y, A, args.ridge)
    c, cr = f.vector, rec.field.vector
    nc = np.linalg.norm(c)
    err = float(np.linalg.norm(cr - c) / nc) if nc > 0 else float(np.linalg.norm(cr))
    report = {"grid": grid.to_json(), "I": I.to_json(), "times": times, "points": len(A.points),
              "relative_error": err, "reconstruction": rec.to_json(), "zero_field": bool(args.zero)}
    if null is not None and nc > 0:
        report["null_direction_error"] = float(abs(np.vdot(null, cr - c)) / abs(np.vdot(null, c)))
    _emit(args, "heat_demo", report, [_flat({**report, **rec.to_json()})])
    print(f"relative recovery error {err:.3e}; D1/D2 {rec.D1 / rec.D2 if rec.D2 else 0:.3e}")
    if "null_direction_error" in report:
        print(f"error along the lattice null direction {report['null_direction_error']:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stsampling", description="Space-time sampling experiments with Gaussian kernels.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a point set file and scatter plot")
    g.add_argument("--kind", required=True, help="rect|perturbed|circles|jittered")
    g.add_argument("--R", type=_number, default=16 * np.pi)
    g.add_argument("--spacing", type=_number, default=2 * np.pi)
    g.add_argument("--arc", type=float, default=1.0)
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--name")
    g.add_argument("--no-svg", action="store_true")
    g.set_defaults(func=cmd_gen)

    def fit_args(q):
        q.add_argument("--starts", type=int, default=256)
        q.add_argument("--xi-max", type=float, default=8.0)

    f = sub.add_parser("fit-lattice", help="fit the minimax curvilinear lattice to a point set")
    _add_set_args(f)
    fit_args(f)
    f.add_argument("--svg", action="store_true")
    f.set_defaults(func=cmd_fit_lattice)

    c = sub.add_parser("condition-a", help="translate-probe proxy score for condition (A)")
    _add_set_args(c)
    fit_args(c)
    c.add_argument("--probe-radii", help="comma list of probe radii (default 2 pi 10^k, k=2..5)")
    c.add_argument("--window", type=_number, default=None)
    c.set_defaults(func=cmd_condition_a)

    fb = sub.add_parser("frame-bounds", help="frame bounds D1, D2 of the sampling operator")
    _add_set_args(fb, default_set="circles")
    _add_frame_args(fb)
    fb.add_argument("--sweep", help="comma list of sigma values (CSV sweep)")
    fb.add_argument("--normalization", choices=("coeff", "model"), default="coeff")
    fb.set_defaults(func=cmd_frame_bounds)

    a = sub.add_parser("analyze", help="condition (A) score, frame bounds and Bessel check")
    _add_set_args(a)
    _add_frame_args(a)
    fit_args(a)
    a.add_argument("--bessel-levels", type=int, default=0)
    a.add_argument("--bessel-sigma", type=float, default=1.0)
    a.add_argument("--score-threshold", type=float, default=0.01)
    a.set_defaults(func=cmd_analyze)

    ce = sub.add_parser("counterexample", help="localized obstruction sweep over eps")
    _add_set_args(ce, default_set="lattice2pi")
    ce.add_argument("--lattice", type=_lattice, default=_lattice("0,0,1,1,pi/4"), help="t1,t2,xi1,xi2,theta")
    ce.add_argument("--eps-list", default="4,2,1", help="eps values in units of the grid spacing")
    ce.add_argument("--grid-R", type=_number, default=None)
    ce.add_argument("--I", default="0.5,1,0.5,1")
    ce.add_argument("--quad", type=int, default=16)
    ce.add_argument("--out", help="CSV file name for the sweep")
    ce.add_argument("--no-svg", action="store_true")
    ce.set_defaults(func=cmd_counterexample)

    ax = sub.add_parser("auxfun", help="auxiliary-function checks")
    ax.add_argument("action", choices=("verify", "sinc"))
    ax.add_argument("--eps", default="2^-4..2^-12")
    ax.add_argument("--dim", type=int, default=2)
    ax.set_defaults(func=cmd_auxfun)

    h = sub.add_parser("heat-demo", help="recover an initial field from heat samples")
    _add_set_args(h, default_R=4 * np.pi)
    h.add_argument("--sigma", type=float, default=0.5)
    h.add_argument("--grid-R", type=_number, default=None)
    h.add_argument("--I", default="0.25,1", help="radial interval a,b of kernel parameters")
    h.add_argument("--quad", type=int, default=16)
    h.add_argument("--sigma-diff", type=float, default=1.0)
    h.add_argument("--ridge", type=float, default=0.0)
    h.add_argument("--zero", action="store_true", help="use the zero initial field")
    h.add_argument("--null-lattice", type=_lattice, default=None,
                   help="add the obstruction field of this lattice (t1,t2,xi1,xi2,theta) to the initial field")
    h.set_defaults(func=cmd_heat_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 2
    except (UsageError, argparse.ArgumentTypeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
