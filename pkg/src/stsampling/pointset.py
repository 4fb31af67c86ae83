"""Uniformly discrete planar point sets on finite windows.

A :class:`PointSet2` holds the part of a (conceptually infinite) set that lies
in the square ``[-R, R]^2``.  Sets produced by :func:`gen` remember their
:class:`GeneratorConfig`, so the same infinite set can be re-windowed around
any centre; this is what the translate probes use to look far away from the
origin without materialising huge windows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

TWO_PI = 2.0 * np.pi

KINDS = ("rect_lattice", "perturbed_lattice", "concentric_circles", "jittered_delone", "from_file")


class PointSetError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    """Recipe for one of the built-in infinite point sets.

    Parameters
    ----------
    kind : str
        One of ``rect_lattice``, ``perturbed_lattice``, ``concentric_circles``,
        ``jittered_delone``, ``from_file``.
    spacing : float
        Lattice spacing (rect_lattice, jittered_delone).
    arc : float
        Arc-length spacing along each circle (concentric_circles).
    jitter : float
        Half-width of the uniform box jitter; must stay below ``spacing / 2``.
    seed : int
        Seed for the jitter.
    path : str, optional
        Input file for ``from_file``.
    """

    kind: str
    spacing: float = TWO_PI
    arc: float = 1.0
    jitter: float = 0.0
    seed: int = 0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PointSetError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if not self.spacing > 0:
            raise PointSetError(f"spacing must be positive, got {self.spacing}")
        if not self.arc > 0:
            raise PointSetError(f"arc spacing must be positive, got {self.arc}")
        if self.jitter < 0:
            raise PointSetError(f"jitter must be nonnegative, got {self.jitter}")
        if self.kind == "jittered_delone" and not self.jitter < self.spacing / 2:
            raise PointSetError(
                f"jitter {self.jitter} must be < spacing/2 = {self.spacing / 2} to keep the set uniformly discrete"
            )
        if self.kind == "from_file" and not self.path:
            raise PointSetError("from_file requires a path")

    @property
    def enlargeable(self) -> bool:
        return self.kind != "from_file"


@dataclass
class PointSet2:
    """Finite window ``[-R, R]^2`` of a uniformly discrete planar set."""

    points: np.ndarray
    window_radius: float
    separation: float | None = None
    source: GeneratorConfig | None = field(default=None, compare=False)
    # centre of the window in the coordinates of the generating set
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not self.window_radius > 0:
            raise PointSetError(f"window radius must be positive, got {self.window_radius}")
        if pts.size and np.abs(pts).max() > self.window_radius * (1 + 1e-12):
            raise PointSetError("points must lie inside [-R, R]^2")
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)

    def to_json(self) -> dict:
        return {
            "points": self.points.tolist(),
            "R": self.window_radius,
            "separation": self.separation,
        }


# ---------------------------------------------------------------------------
# generators


def _lattice_indices(lo: float, hi: float, spacing: float, slack: float = 0.0) -> np.ndarray:
    return np.arange(np.floor((lo - slack) / spacing), np.ceil((hi + slack) / spacing) + 1).astype(np.int64)


def _in_box(pts: np.ndarray, center: np.ndarray, R: float) -> np.ndarray:
    return np.all(np.abs(pts - center) <= R, axis=1)


def _site_jitter(n: np.ndarray, m: np.ndarray, seed: int, amp: float) -> np.ndarray:
    # one generator per lattice site so every window of the set sees the same jitter
    out = np.empty((len(n), 2))
    off = 2**40
    for i, (a, b) in enumerate(zip(n.tolist(), m.tolist())):
        rng = np.random.default_rng([seed, a + off, b + off])
        out[i] = rng.uniform(-amp, amp, size=2)
    return out


def _window_points(config: GeneratorConfig, center: np.ndarray, R: float) -> np.ndarray:
    cx, cy = center
    kind = config.kind
    if kind in ("rect_lattice", "jittered_delone"):
        s = config.spacing
        slack = config.jitter
        n = _lattice_indices(cx - R, cx + R, s, slack)
        m = _lattice_indices(cy - R, cy + R, s, slack)
        nn, mm = (a.ravel() for a in np.meshgrid(n, m, indexing="ij"))
        pts = s * np.column_stack([nn, mm]).astype(float)
        if kind == "jittered_delone" and config.jitter > 0:
            pts = pts + _site_jitter(nn, mm, config.seed, config.jitter)
    elif kind == "perturbed_lattice":
        # perturbations are < 1, so one extra index of slack covers the window
        n = _lattice_indices(cx - R, cx + R, TWO_PI, 1.0)
        m = _lattice_indices(cy - R, cy + R, TWO_PI, 1.0)
        nn, mm = (a.ravel() for a in np.meshgrid(n, m, indexing="ij"))
        nf, mf = nn.astype(float), mm.astype(float)
        x = TWO_PI * nf + np.exp2(-(mf**2 + nf**2))
        y = TWO_PI * mf + np.exp2(-(np.abs(mf) + np.abs(nf)))
        pts = np.column_stack([x, y])
    elif kind == "concentric_circles":
        # closest and farthest distance from the origin to the window
        dx = max(abs(cx) - R, 0.0)
        dy = max(abs(cy) - R, 0.0)
        rmin = np.hypot(dx, dy)
        rmax = np.hypot(abs(cx) + R, abs(cy) + R)
        kmin = max(1, int(np.floor(rmin / TWO_PI)))
        kmax = int(np.ceil(rmax / TWO_PI))
        wedge = None
        if rmin > 0:
            # window misses the origin: it sits inside the wedge spanned by its corners
            theta0 = np.arctan2(cy, cx)
            corners = np.array([(cx + sx * R, cy + sy * R) for sx in (-1, 1) for sy in (-1, 1)])
            rel = np.angle(np.exp(1j * (np.arctan2(corners[:, 1], corners[:, 0]) - theta0)))
            wedge = (theta0, float(np.abs(rel).max()))
        chunks = []
        for k in range(kmin, kmax + 1):
            rho = TWO_PI * k
            count = max(1, int(np.floor(TWO_PI * rho / config.arc)))
            step = TWO_PI / count
            if wedge is not None:
                theta0, half = wedge
                j = np.arange(np.floor((theta0 - half) / step) - 1, np.ceil((theta0 + half) / step) + 2)
                j = np.unique(np.mod(j, count))
            else:
                j = np.arange(count)
            th = j * step
            chunks.append(np.column_stack([rho * np.cos(th), rho * np.sin(th)]))
        pts = np.concatenate(chunks) if chunks else np.empty((0, 2))
    elif kind == "from_file":
        pts = read_points(config.path)
    else:  # pragma: no cover - guarded by GeneratorConfig
        raise PointSetError(kind)
    return pts[_in_box(pts, center, R)]


def gen(config: GeneratorConfig, R: float, center=(0.0, 0.0)) -> PointSet2:
    """Generate the window ``center + [-R, R]^2`` of a built-in set.

    The returned coordinates are relative to ``center``, i.e. the result is the
    translate ``S - center`` restricted to ``[-R, R]^2``.
    """
    if not R > 0:
        raise PointSetError(f"window radius must be positive, got {R}")
    c = np.asarray(center, dtype=float)
    pts = _window_points(config, c, R) - c
    pts = np.clip(pts, -R, R)
    return PointSet2(pts, float(R), source=config, origin=(float(c[0]), float(c[1])))


# ---------------------------------------------------------------------------
# file formats


def read_points(path) -> np.ndarray:
    """Read one ``x y`` pair per line; ``#`` starts a comment."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 2:
            raise PointSetError(f"{path}:{lineno}: expected two fields, got {len(fields)}")
        try:
            rows.append((float(fields[0]), float(fields[1])))
        except ValueError as exc:
            raise PointSetError(f"{path}:{lineno}: {exc}") from None
    return np.array(rows, dtype=float).reshape(-1, 2)


def write_points(S: PointSet2, path, header: str = "") -> None:
    lines = [f"# {h}" for h in header.splitlines() if h]
    lines.append(f"# R = {S.window_radius!r}")
    lines += [f"{float(x)!r} {float(y)!r}" for x, y in S.points]
    Path(path).write_text("\n".join(lines) + "\n")


def load(path, R: float | None = None) -> PointSet2:
    pts = read_points(path)
    if R is None:
        R = float(np.abs(pts).max()) if len(pts) else 1.0
        R = R if R > 0 else 1.0
    return PointSet2(pts, float(R), source=GeneratorConfig("from_file", path=str(path)))


def save_json(S: PointSet2, path) -> None:
    Path(path).write_text(json.dumps(S.to_json(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# geometry


def separation_constant(S: PointSet2) -> float:
    """Minimum pairwise distance; cached on ``S``."""
    if len(S) < 2:
        raise PointSetError("insufficient points: separation needs at least 2")
    dist, _ = cKDTree(S.points).query(S.points, k=2)
    delta = float(dist[:, 1].min())
    S.separation = delta
    return delta


def relative_density_gap(S: PointSet2, probe_radius: float, resolution: float | None = None) -> float:
    """Largest empty-disc radius (capped at ``probe_radius``) with centre in ``[-R/2, R/2]^2``.

    Disc centres are scanned on a uniform grid, so the answer is a lower bound
    accurate to about half the grid step.
    """
    R = S.window_radius
    if not probe_radius < R / 2:
        raise PointSetError(f"probe_radius {probe_radius} must be < R/2 = {R / 2}")
    if len(S) == 0:
        return float(probe_radius)
    h = resolution or min(probe_radius, R) / 100.0
    ticks = np.linspace(-R / 2, R / 2, int(np.ceil(R / h)) + 1)
    cx, cy = np.meshgrid(ticks, ticks, indexing="ij")
    centers = np.column_stack([cx.ravel(), cy.ravel()])
    dist, _ = cKDTree(S.points).query(centers, k=1)
    return float(min(dist.max(), probe_radius))


def translate(S: PointSet2, v) -> PointSet2:
    """``{p - v}`` re-windowed to ``[-R, R]^2``; points that leave are dropped."""
    v = np.asarray(v, dtype=float)
    pts = S.points - v
    keep = np.all(np.abs(pts) <= S.window_radius, axis=1)
    origin = (S.origin[0] + v[0], S.origin[1] + v[1])
    return replace(S, points=pts[keep], separation=None, origin=origin)


def weak_inclusion_check(A: PointSet2, B: PointSet2, R: float, eps: float) -> tuple[bool, bool]:
    """Both one-sided inclusions on the open box ``(-R, R)^2`` with open eps-boxes."""

    def inside(P, Q):
        sub = P.points[np.all(np.abs(P.points) < R, axis=1)]
        if len(sub) == 0:
            return True
        if len(Q) == 0:
            return False
        d, _ = cKDTree(Q.points).query(sub, k=1, p=np.inf)
        return bool(np.all(d < eps))

    return inside(A, B), inside(B, A)


@dataclass
class TranslateProbe:
    direction: tuple[float, float]
    window: PointSet2

    @property
    def empty(self) -> bool:
        return len(self.window) == 0


def translate_limit_probe(S: PointSet2, directions, R: float, eps: float | None = None) -> list[TranslateProbe]:
    """Windowed translates ``S - v`` for each probe direction ``v``.

    Generator-backed sets are re-generated around ``v`` directly; other sets are
    shifted and clipped, which needs a source window covering ``v + [-R, R]^2``.
    Empty windows are returned flagged rather than raised.  ``eps`` is accepted
    for symmetry with :func:`weak_inclusion_check` and is not used here.
    """
    out = []
    for v in directions:
        v = (float(v[0]), float(v[1]))
        if S.source is not None and S.source.enlargeable:
            c = (S.origin[0] + v[0], S.origin[1] + v[1])
            W = gen(S.source, R, center=c)
        else:
            T = translate(S, v)
            pts = T.points[np.all(np.abs(T.points) <= R, axis=1)]
            W = PointSet2(pts, R, origin=T.origin)
        out.append(TranslateProbe(v, W))
    return out


def radial_directions(radii=(TWO_PI * 100, TWO_PI * 400), angles: int = 4) -> list[tuple[float, float]]:
    """Default probe sweep: ``angles`` directions on each circle of the given radii."""
    dirs = []
    for rho in radii:
        for j in range(angles):
            th = 0.5 * np.pi * j if angles == 4 else TWO_PI * j / angles
            dirs.append((float(rho * np.cos(th)), float(rho * np.sin(th))))
    return dirs
