"""Obstruction fields for point sets lying on a curvilinear lattice.

For a lattice ``L`` the four-mode field

    g(x) = r1 cos(xi . x + t1) - r2 cos(xi~ . x + t2)

satisfies ``(g * G_alpha)(lam) = m_alpha(xi) residual(L, lam)`` because the
kernel transform is even in each variable, so every space-time sample of
``g`` vanishes on ``L``.  Localizing, ``f(x) = Phi_eps(x - v) g(x - v)`` with the
tensor sinc ``Phi_eps``, gives fields with ``f(v) = g(0)`` whose samples on
``L`` are of size ``O(eps)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.signal
from scipy.optimize import brentq

from .frame import IndexRect, bernstein_deficiency, sample_max
from .lattice import CurvilinearLattice, residual
from .pointset import PointSet2
from .signal import BandlimitedField, SpectralGrid, reflect, shifted, sup_norm_estimate, symmetrize

DEFAULT_R = 16 * np.pi


class CounterexampleError(ValueError):
    pass


def build_g(L: CurvilinearLattice, grid: SpectralGrid | None = None) -> BandlimitedField:
    """The real four-mode field of ``L``; frequencies must sit on the grid."""
    xi = np.array(L.xi)
    if grid is None:
        grid = SpectralGrid(max(float(np.abs(xi).max()), np.pi / DEFAULT_R), DEFAULT_R)
    xt = reflect(xi)
    (r1, r2), (t1, t2) = L.r, L.t
    terms = [
        (xi, r1 / 2 * np.exp(1j * t1)),
        (-xi, r1 / 2 * np.exp(-1j * t1)),
        (xt, -r2 / 2 * np.exp(1j * t2)),
        (-xt, -r2 / 2 * np.exp(-1j * t2)),
    ]
    try:
        return BandlimitedField.from_modes(grid, terms, real=True)
    except ValueError as exc:
        raise CounterexampleError(str(exc)) from None


def symmetrized_closed_form(L: CurvilinearLattice, lam, x) -> np.ndarray:
    """``2 (cos(xi.x) + cos(xi~.x)) residual(L, lam)``, the symmetrized translate of ``g``."""
    x = np.asarray(x, dtype=float)
    xi = np.array(L.xi)
    return 2 * (np.cos(x @ xi) + np.cos(x @ reflect(xi))) * residual(L, lam)


def symmetrized_translate(g: BandlimitedField, lam) -> BandlimitedField:
    """``S g_lam`` with ``g_lam(x) = g(x + lam)``."""
    return symmetrize(shifted(g, lam))


def lattice_roots(
    L: CurvilinearLattice, count: int = 50, box: float = 10.0, samples: int = 2000, xtol: float = 1e-15
) -> np.ndarray:
    """Points of ``L`` found by bisection along coordinate lines in ``[-box, box]^2``.

    Vertical lines ``x1 = const`` are searched first; horizontal lines fill
    up the count when the zero set has too few crossings with them (e.g.
    vertical lines).  Only sign changes are bracketed, so tangential zeros
    are skipped.
    """
    ts = np.linspace(-box, box, samples)
    # lines at irrational offsets avoid landing on symmetry axes
    offsets = -box + 2 * box * ((np.arange(1, 4 * count + 1) * (np.sqrt(5) - 1) / 2) % 1.0)
    out: list[tuple[float, float]] = []
    for axis in (1, 0):
        for c in offsets:
            if len(out) == count:
                break

            def point(t, c=c):
                return (c, t) if axis == 1 else (t, c)

            line = np.stack(np.broadcast_arrays(*point(ts)), axis=-1)
            v = residual(L, line)
            idx = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
            if not len(idx):
                continue
            i = idx[len(idx) // 2]
            t = brentq(lambda u: residual(L, point(u)), ts[i], ts[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)
            out.append(point(t))
    return np.array(out, dtype=float).reshape(-1, 2)


def tensor_sinc_coeffs(grid: SpectralGrid, eps: float) -> np.ndarray:
    """Trapezoid weights of the box spectrum ``[-eps, eps]^2`` on the grid spacing.

    The resulting trigonometric sum is the periodized tensor sinc with value 1 at 0.
    """
    M = eps / grid.dxi
    Mi = int(round(M))
    if Mi < 1 or abs(M - Mi) > 1e-9:
        raise CounterexampleError(f"eps = {eps} is not a positive integer multiple of the grid spacing {grid.dxi}")
    w = np.full(2 * Mi + 1, grid.dxi / (2 * eps))
    w[0] = w[-1] = grid.dxi / (4 * eps)
    return np.outer(w, w)


def build_f(g: BandlimitedField, eps: float, v=(0.0, 0.0)) -> BandlimitedField:
    """``f(x) = Phi_eps(x - v) g(x - v)`` on the grid with bandwidth ``sigma + eps``."""
    W = tensor_sinc_coeffs(g.grid, eps)
    grid = SpectralGrid(g.grid.sigma + eps, g.grid.R)
    C = scipy.signal.convolve2d(np.asarray(g.coeffs), W)
    if C.shape != grid.shape:
        raise CounterexampleError("enlarged grid does not accommodate sigma + eps")
    v = np.asarray(v, dtype=float)
    ax = grid.axis
    C = C * np.outer(np.exp(-1j * ax * v[0]), np.exp(-1j * ax * v[1]))
    return BandlimitedField(grid, C, g.real_flag)


@dataclass
class Obstruction:
    lattice: CurvilinearLattice
    g: BandlimitedField
    v: tuple[float, float]
    epsilon: float
    f: BandlimitedField


def build_obstruction(L: CurvilinearLattice, eps: float, v=(0.0, 0.0), grid: SpectralGrid | None = None) -> Obstruction:
    g = build_g(L, grid)
    return Obstruction(L, g, tuple(float(t) for t in v), eps, build_f(g, eps, v))


def sample_sup(f: BandlimitedField, S, I: IndexRect) -> float:
    return sample_max(f, S, I)


def run_sweep(
    L: CurvilinearLattice,
    S: PointSet2 | np.ndarray,
    I: IndexRect,
    eps_list,
    v=(0.0, 0.0),
    grid: SpectralGrid | None = None,
    oversample: int = 8,
) -> dict:
    """Sup norm, sample supremum and their ratio for each ``eps``.

    Points are split into ``|lam - v|_inf < 1/eps^2`` (inner) and the rest
    (outer), and both suprema are reported.
    """
    pts = S.points if isinstance(S, PointSet2) else np.asarray(S, dtype=float).reshape(-1, 2)
    g = build_g(L, grid)
    gsup = sup_norm_estimate(g, oversample)
    rows = []
    for eps in eps_list:
        f = build_f(g, float(eps), v)
        sup = sup_norm_estimate(f, oversample)
        far = np.abs(pts - np.asarray(v)).max(axis=1) >= 1 / eps**2
        inner = sample_max(f, pts[~far], I)
        outer = sample_max(f, pts[far], I)
        samp = max(inner, outer)
        rows.append(
            {
                "eps": float(eps),
                "sup_norm": sup,
                "sample_sup": samp,
                "ratio": samp / sup,
                "deficiency": bernstein_deficiency(f, pts, I, oversample),
                "inner_sup": inner,
                "outer_sup": outer,
                "outer_points": int(far.sum()),
            }
        )
    order = np.argsort([-r["eps"] for r in rows])
    ratios = np.array([rows[i]["ratio"] for i in order])
    defs = np.array([rows[i]["deficiency"] for i in order])
    return {
        "rows": rows,
        "g_sup": gsup,
        "ratio_decreasing": bool(np.all(np.diff(ratios) < 0)),
        "deficiency_increasing": bool(np.all(np.diff(defs) > 0)),
        "halving_factors": [float(a / b) for a, b in zip(ratios[:-1], ratios[1:])],
    }


SWEEP_FIELDS = ["eps", "sup_norm", "sample_sup", "ratio", "deficiency", "inner_sup", "outer_sup", "outer_points"]


def sweep_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in report["rows"]:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()

