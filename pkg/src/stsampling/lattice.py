"""Curvilinear lattices: residual, membership and multistart fitting.

A lattice with phases ``t``, frequencies ``xi`` and unit weights ``r`` is the
zero set of

    r1 cos(xi1 x1 + xi2 x2 + t1) - r2 cos(-xi1 x1 + xi2 x2 + t2).

The fitting code uses the fact that this residual is linear in the unit
vector ``u = (r1 cos t1, r1 sin t1, r2 cos t2, r2 sin t2)``: for fixed
frequencies the best ``u`` is an eigenvector of a 4x4 matrix, so the search
over frequencies can be screened on a grid before any local optimisation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize

from .pointset import PointSet2, TranslateProbe, radial_directions, translate_limit_probe

TWO_PI = 2.0 * np.pi

# fixed probe points used to reject lattices whose residual vanishes identically
_DEGENERACY_PROBES = np.random.default_rng(20240917).uniform(-10.0, 10.0, size=(64, 2))
# fixed unit-square probes, rescaled to the data window, for the activity constraint
_ACTIVITY_PROBES = np.random.default_rng(5).uniform(-1.0, 1.0, size=(64, 2))
ACTIVITY_FLOOR = 0.25


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class CurvilinearLattice:
    t: tuple[float, float]
    xi: tuple[float, float]
    r: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))
        object.__setattr__(self, "r", tuple(float(v) for v in self.r))
        if abs(np.hypot(*self.r) - 1.0) > 1e-12:
            raise LatticeError(f"r must be a unit vector, |r| = {np.hypot(*self.r)!r}")
        if np.all(np.abs(residual(self, _DEGENERACY_PROBES)) <= 1e-10):
            raise LatticeError(f"degenerate lattice (residual vanishes identically): {self}")

    @classmethod
    def from_params(cls, t1, t2, xi1, xi2, theta) -> "CurvilinearLattice":
        return cls((t1, t2), (xi1, xi2), (np.cos(theta), np.sin(theta)))

    @property
    def theta(self) -> float:
        return float(np.arctan2(self.r[1], self.r[0]))

    def to_json(self) -> dict:
        return {"t": list(self.t), "xi": list(self.xi), "r": list(self.r)}


def residual(L: CurvilinearLattice, lam) -> np.ndarray | float:
    """``r1 cos(xi.lam + t1) - r2 cos(xi~.lam + t2)`` with ``xi~ = (-xi1, xi2)``."""
    lam = np.asarray(lam, dtype=float)
    x1, x2 = lam[..., 0], lam[..., 1]
    a = L.xi[0] * x1 + L.xi[1] * x2 + L.t[0]
    b = -L.xi[0] * x1 + L.xi[1] * x2 + L.t[1]
    out = L.r[0] * np.cos(a) - L.r[1] * np.cos(b)
    return float(out) if np.ndim(out) == 0 else out


def contains(L: CurvilinearLattice, lam, tol: float) -> bool | np.ndarray:
    if not tol > 0:
        raise LatticeError("tol must be positive")
    out = np.abs(residual(L, lam)) <= tol
    return bool(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitConfig:
    starts: int = 256
    xi_max: float = 8.0
    tol: float = 1e-12
    seed: int = 0
    activity_floor: float = ACTIVITY_FLOOR
    max_grid: int = 160_000
    patience: int = 48
    screen_window: float = 20.0
    polish: int = 4


@dataclass
class LatticeFit:
    lattice: CurvilinearLattice
    max_residual: float
    rms_residual: float
    starts_used: int

    def to_json(self) -> dict:
        return {
            "lattice": self.lattice.to_json(),
            "max_residual": self.max_residual,
            "rms_residual": self.rms_residual,
            "starts_used": self.starts_used,
        }


def _features(pts: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Residual basis at ``pts`` for each frequency; shape ``xi.shape[:-1] + (n, 4)``."""
    xi = np.asarray(xi, dtype=float)
    a = xi[..., None, 0] * pts[:, 0] + xi[..., None, 1] * pts[:, 1]
    b = -xi[..., None, 0] * pts[:, 0] + xi[..., None, 1] * pts[:, 1]
    return np.stack([np.cos(a), -np.sin(a), -np.cos(b), np.sin(b)], axis=-1)


def _u_to_params(u: np.ndarray, xi) -> np.ndarray:
    r1 = np.hypot(u[0], u[1])
    r2 = np.hypot(u[2], u[3])
    return np.array([np.arctan2(u[1], u[0]), np.arctan2(u[3], u[2]), xi[0], xi[1], np.arctan2(r2, r1)])


def _params_to_u(p: np.ndarray) -> np.ndarray:
    c, s = np.cos(p[4]), np.sin(p[4])
    return np.array([c * np.cos(p[0]), c * np.sin(p[0]), s * np.cos(p[1]), s * np.sin(p[1])])


def _gram(F: np.ndarray) -> np.ndarray:
    return np.einsum("...ni,...nj->...ij", F, F) / F.shape[-2]


def _profile(A: np.ndarray, B: np.ndarray, floor: float, mus=(0.0, 0.25, 0.5, 1, 2, 4, 8, 16, 64, 256)):
    """Best unit ``u`` per frequency subject to window activity ``u.B.u >= floor^2``.

    ``B`` is the centred probe Gram, so ``u.B.u`` is the residual variance
    over the probes and constant residuals count as inactive.

    Minimisers of the constrained problem are eigenvectors of ``A - mu B``;
    the smallest ``mu`` on the ladder that meets the constraint is taken.
    Returns (objective, u); infeasible frequencies get ``inf``.
    """
    shape = A.shape[:-2]
    A, B = A.reshape(-1, 4, 4), B.reshape(-1, 4, 4)
    best_val = np.full(len(A), np.inf)
    best_u = np.zeros((len(A), 4))
    todo = np.arange(len(A))
    for mu in mus:
        if not len(todo):
            break
        Ab, Bb = A[todo], B[todo]
        _, V = np.linalg.eigh(Ab - mu * Bb)
        u = V[..., :, 0]
        ok = np.einsum("...i,...ij,...j->...", u, Bb, u) >= floor**2
        best_val[todo[ok]] = np.einsum("...i,...ij,...j->...", u[ok], Ab[ok], u[ok])
        best_u[todo[ok]] = u[ok]
        todo = todo[~ok]
    best_val, best_u = best_val.reshape(shape), best_u.reshape(shape + (4,))
    return best_val, best_u


def _gram_grid(pts: np.ndarray, ticks: np.ndarray) -> np.ndarray:
    """``_gram`` on the tensor grid ``ticks x ticks`` via product-to-sum identities.

    Every entry is a combination of the means of ``exp(2i(+-xi1 x1 + xi2 x2))``,
    ``exp(2i xi1 x1)`` and ``exp(2i xi2 x2)``, so two matrix products suffice.
    """
    n = len(pts)
    E1 = np.exp(2j * np.outer(ticks, pts[:, 0]))
    E2 = np.exp(2j * np.outer(ticks, pts[:, 1]))
    P = E1 @ E2.T / n
    Q = E1.conj() @ E2.T / n
    U = np.broadcast_to(E2.mean(axis=1)[None, :], P.shape)
    V = np.broadcast_to(E1.mean(axis=1)[:, None], P.shape)
    G = np.empty(P.shape + (4, 4))
    G[..., 0, 0] = (1 + P.real) / 2
    G[..., 1, 1] = (1 - P.real) / 2
    G[..., 0, 1] = G[..., 1, 0] = -P.imag / 2
    G[..., 2, 2] = (1 + Q.real) / 2
    G[..., 3, 3] = (1 - Q.real) / 2
    G[..., 2, 3] = G[..., 3, 2] = -Q.imag / 2
    G[..., 0, 2] = G[..., 2, 0] = -(U.real + V.real) / 2
    G[..., 0, 3] = G[..., 3, 0] = (U.imag - V.imag) / 2
    G[..., 1, 2] = G[..., 2, 1] = (U.imag + V.imag) / 2
    G[..., 1, 3] = G[..., 3, 1] = (U.real - V.real) / 2
    return G


def _mean_grid(pts: np.ndarray, ticks: np.ndarray) -> np.ndarray:
    """Mean of the ``_features`` basis on the tensor grid ``ticks x ticks``."""
    F1 = np.exp(1j * np.outer(ticks, pts[:, 0]))
    F2 = np.exp(1j * np.outer(ticks, pts[:, 1]))
    Pa = F1 @ F2.T / len(pts)
    Qb = F1.conj() @ F2.T / len(pts)
    return np.stack([Pa.real, -Pa.imag, -Qb.real, Qb.imag], axis=-1)


def _centred_gram_grid(pts: np.ndarray, ticks: np.ndarray) -> np.ndarray:
    m = _mean_grid(pts, ticks)
    return _gram_grid(pts, ticks) - m[..., :, None] * m[..., None, :]


def _centred_gram(F: np.ndarray) -> np.ndarray:
    m = F.mean(axis=-2)
    return _gram(F) - m[..., :, None] * m[..., None, :]


def _screen(pts, probes, cfg: FitConfig, extent: float) -> np.ndarray:
    """Coarse grid over the frequency quadrant; returns candidate frequencies sorted by score."""
    h = 0.5 / max(extent, 1e-9)
    n_axis = int(np.ceil(cfg.xi_max / h)) + 1
    n_axis = int(min(n_axis, np.sqrt(cfg.max_grid)))
    # a step count divisible by 16 puts simple rational frequencies on the grid
    n_axis = 16 * max(1, (n_axis - 1) // 16) + 1
    ticks = np.linspace(0.0, cfg.xi_max, n_axis)
    g1, g2 = np.meshgrid(ticks, ticks, indexing="ij")
    xi = np.stack([g1.ravel(), g2.ravel()], axis=-1)
    A = _gram_grid(pts, ticks).reshape(-1, 4, 4)
    B = _centred_gram_grid(probes, ticks).reshape(-1, 4, 4)
    vals, _ = _profile(A, B, cfg.activity_floor)
    V = vals.reshape(n_axis, n_axis)
    # local minima of the screen (plateaus count once through the strict side)
    pad = np.pad(V, 1, constant_values=np.inf)
    centre = pad[1:-1, 1:-1]
    is_min = np.ones_like(V, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= centre <= pad[1 + di : 1 + di + n_axis, 1 + dj : 1 + dj + n_axis]
    is_min &= np.isfinite(V)
    idx = np.flatnonzero(is_min.ravel())
    # values at roundoff level are exact fits; order those by |xi| alone
    key = np.where(vals[idx] <= 1e-24, 0.0, vals[idx])
    idx = idx[np.lexsort((np.hypot(xi[idx, 0], xi[idx, 1]), key))]
    return xi[idx]


def _activity(p, probes) -> float:
    """RMS deviation of the residual from its mean over the probes."""
    return float(np.std(_residuals(p, probes)))


def _residuals(p, pts) -> np.ndarray:
    t1, t2, x1, x2, th = p
    A = x1 * pts[:, 0] + x2 * pts[:, 1] + t1
    B = -x1 * pts[:, 0] + x2 * pts[:, 1] + t2
    return np.cos(th) * np.cos(A) - np.sin(th) * np.cos(B)


def _jac(p, pts) -> np.ndarray:
    t1, t2, x1, x2, th = p
    A = x1 * pts[:, 0] + x2 * pts[:, 1] + t1
    B = -x1 * pts[:, 0] + x2 * pts[:, 1] + t2
    c, s = np.cos(th), np.sin(th)
    sA, sB = c * np.sin(A), s * np.sin(B)
    return np.stack(
        [-sA, sB, -pts[:, 0] * (sA + sB), pts[:, 1] * (sB - sA), -s * np.cos(A) - c * np.cos(B)], axis=-1
    )


def _refine_lsq(p0, pts, probes, cfg: FitConfig) -> np.ndarray:
    sq = np.sqrt(len(pts))

    def fun(p):
        pen = max(0.0, cfg.activity_floor - _activity(p, probes))
        return np.append(_residuals(p, pts) / sq, 10.0 * pen)

    def jac(p):
        rp = _residuals(p, probes)
        rp = rp - rp.mean()
        act = np.sqrt(np.mean(rp**2))
        row = np.zeros(5)
        if act < cfg.activity_floor and act > 0:
            row = -10.0 * (rp @ _jac(p, probes)) / (len(probes) * act)
        return np.vstack([_jac(p, pts) / sq, row])

    lo = np.array([-np.inf, -np.inf, -cfg.xi_max, -cfg.xi_max, -np.inf])
    hi = -lo
    p0 = np.clip(p0, lo + 1e-12, hi - 1e-12)
    sol = least_squares(fun, p0, jac=jac, bounds=(lo, hi), method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        max_nfev=100)
    return sol.x


def _polish_minimax(p0, pts, probes, cfg: FitConfig) -> np.ndarray:
    """Epigraph form of the minimax fit: minimise s with |res_i| <= s."""
    res0 = np.abs(_residuals(p0, pts))
    if res0.max() <= cfg.tol:
        return p0
    z0 = np.append(p0, res0.max())
    cons = [
        {"type": "ineq", "fun": lambda z: z[5] - _residuals(z[:5], pts),
         "jac": lambda z: np.hstack([-_jac(z[:5], pts), np.ones((len(pts), 1))])},
        {"type": "ineq", "fun": lambda z: z[5] + _residuals(z[:5], pts),
         "jac": lambda z: np.hstack([_jac(z[:5], pts), np.ones((len(pts), 1))])},
        {"type": "ineq", "fun": lambda z: _activity(z[:5], probes) - cfg.activity_floor},
    ]
    bounds = [(None, None), (None, None), (-cfg.xi_max, cfg.xi_max), (-cfg.xi_max, cfg.xi_max), (None, None), (0, None)]
    sol = minimize(lambda z: z[5], z0, jac=lambda z: np.eye(6)[5], method="SLSQP", bounds=bounds,
                   constraints=cons, options={"maxiter": 200, "ftol": 1e-14})
    p = sol.x[:5]
    ok = _activity(p, probes) >= cfg.activity_floor * (1 - 1e-9)
    was_ok = _activity(p0, probes) >= cfg.activity_floor * (1 - 1e-9)
    if ok and (not was_ok or np.abs(_residuals(p, pts)).max() < res0.max()):
        return p
    return p0


def _activity_probes(pts: np.ndarray, window=None) -> tuple[np.ndarray, float]:
    if window is None:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        centre = (lo + hi) / 2
        half = np.maximum((hi - lo) / 2, 1.0)
    else:
        centre = np.zeros(2)
        half = np.array([float(window), float(window)])
    probes = centre + half * _ACTIVITY_PROBES
    extent = float(np.abs(pts).max()) if len(pts) else 1.0
    return probes, max(extent, float(np.abs(probes).max()))


def fit(points, config: FitConfig | None = None, window: float | None = None, **kw) -> LatticeFit:
    """Fit the curvilinear lattice minimising the max residual over ``points``.

    Screening on a frequency grid picks up to ``starts`` candidate
    frequencies; each is refined by bounded least squares (stopping after
    ``patience`` starts without improvement) and the ``polish`` best are then
    polished by a minimax solve.  Candidates must keep the residual active over
    the data window (RMS deviation from the mean over fixed probes at least
    ``activity_floor``), which rules out lattices that only fit because they
    are nearly constant.  ``window`` fixes the probe square to ``[-window, window]^2``
    instead of the data bounding box.
    """
    cfg = config or FitConfig(**kw)
    pts = points.points if isinstance(points, PointSet2) else np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise LatticeError("fit needs at least one point")
    if not cfg.xi_max > 0:
        raise LatticeError("xi_max must be positive")
    probes, extent = _activity_probes(pts, window)
    # the screen only needs the frequency landscape; a central subset keeps it cheap
    centre = (pts.min(axis=0) + pts.max(axis=0)) / 2 if window is None else np.zeros(2)
    sub = pts[np.abs(pts - centre).max(axis=1) <= cfg.screen_window]
    if len(sub) < 16:
        sub = pts[np.argsort(np.abs(pts - centre).max(axis=1))[:16]]
    sub_extent = min(extent, float(np.abs(sub - centre).max()) + float(np.abs(centre).max()) + 1.0)
    cands = _screen(sub, probes, cfg, sub_extent)
    rng = np.random.default_rng(cfg.seed)
    if len(cands) < cfg.starts:
        extra = rng.uniform(0.0, cfg.xi_max, size=(cfg.starts - len(cands), 2))
        cands = np.concatenate([cands, extra]) if len(cands) else extra
    cands = cands[: cfg.starts]

    refined = []
    best_mx, stale = np.inf, 0
    for i, xi in enumerate(cands):
        A = _gram(_features(pts, xi))
        B = _centred_gram(_features(probes, xi))
        val, u = _profile(A, B, cfg.activity_floor)
        if not np.isfinite(val):
            u = np.array([1.0, 0.0, 0.0, 0.0])
        p = _refine_lsq(_u_to_params(u, xi), pts, probes, cfg)
        # the penalty is soft, so slightly inactive solutions are kept for the polish
        if _activity(p, probes) < 0.9 * cfg.activity_floor:
            continue
        mx = float(np.abs(_residuals(p, pts)).max())
        refined.append((mx, i, p))
        if mx < best_mx * (1 - 1e-3):
            best_mx, stale = mx, 0
        else:
            stale += 1
        if (best_mx <= cfg.tol and i >= 8) or stale >= cfg.patience:
            break
    used = i + 1 if len(cands) else 0

    # minimax polish of the few best least-squares solutions
    refined.sort(key=lambda e: (e[0], e[1]))
    best = None
    for k, (mx, i, p) in enumerate(refined):
        if k < cfg.polish and mx > cfg.tol:
            p = _polish_minimax(p, pts, probes, cfg)
        if _activity(p, probes) < cfg.activity_floor * (1 - 1e-6):
            continue
        try:
            L = CurvilinearLattice.from_params(*p)
        except LatticeError:
            continue
        res = residual(L, pts)
        key = (float(np.abs(res).max()), float(np.hypot(*L.xi)), i)
        if best is None or _better(key, best[0], cfg.tol):
            best = (key, L, res)
    if best is None:
        raise LatticeError("no nondegenerate lattice found")
    (mx, _, _), L, res = best
    return LatticeFit(L, mx, float(np.sqrt(np.mean(res**2))), used)


def _better(key, other, tol) -> bool:
    mx, nrm, i = key
    omx, onrm, oi = other
    tie = abs(mx - omx) <= max(tol, 1e-12)
    if tie:
        return (nrm, i) < (onrm, oi)
    return mx < omx


# ---------------------------------------------------------------------------
# condition (A) proxy


@dataclass
class ConditionAReport:
    score: float
    per_probe: list[tuple[tuple[float, float], float, int]]
    best_fit: LatticeFit | None
    note: str = "proxy: min over translate probes of the best-fit max lattice residual"

    def to_json(self) -> dict:
        return {
            "score": self.score,
            "probes": [{"direction": list(d), "max_residual": m, "points": n} for d, m, n in self.per_probe],
            "best_fit": None if self.best_fit is None else self.best_fit.to_json(),
            "note": self.note,
        }


def default_probes() -> list[tuple[float, float]]:
    return [(0.0, 0.0)] + radial_directions(radii=tuple(TWO_PI * 10.0**k for k in range(2, 6)))


def condition_a_report(
    S: PointSet2, probes=None, fit_config: FitConfig | None = None, window_radius: float | None = None
) -> ConditionAReport:
    cfg = fit_config or FitConfig()
    R = window_radius or S.window_radius
    dirs = list(probes) if probes is not None else default_probes()
    if not any(d[0] == 0 and d[1] == 0 for d in dirs):
        dirs = [(0.0, 0.0)] + dirs
    windows: list[TranslateProbe] = translate_limit_probe(S, dirs, R)
    per, best = [], None
    for pr in windows:
        if pr.empty:
            per.append((pr.direction, 0.0, 0))
            return ConditionAReport(0.0, per, None, note="empty translate window")
        f = fit(pr.window, cfg, window=R)
        per.append((pr.direction, f.max_residual, len(pr.window)))
        if best is None or f.max_residual < best.max_residual:
            best = f
    return ConditionAReport(min(m for _, m, _ in per), per, best)


def condition_a_score(S: PointSet2, probes=None, fit_config: FitConfig | None = None, **kw) -> float:
    return condition_a_report(S, probes, fit_config, **kw).score
