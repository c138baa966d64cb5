"""Meshes for compact sets K in C^d, their eps-neighborhoods K_n, and weights.

Meshes are the computational stand-ins for compact sets: every supremum over
K elsewhere in the package becomes a maximum over a mesh.  Neighborhood
meshes of one-dimensional sets (interval, circle) are genuine 2-D regions of
the complex plane, since points of near-extremal configurations are allowed
to leave K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Shape",
    "Mesh",
    "WeightFn",
    "shape_from_spec",
    "build_mesh",
    "neighborhood_mesh",
    "make_weight",
]

_SUPPORTED = ("interval", "circle", "disk", "square", "bidisk", "simplex")


@dataclass(frozen=True)
class Shape:
    """A supported compact base set.

    kind      one of interval, circle, disk, square, bidisk, simplex
    params    shape parameters (interval endpoints, disk radius, ...)
    """

    kind: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _SUPPORTED:
            raise ValueError(f"unknown shape {self.kind!r}; supported: {_SUPPORTED}")

    @property
    def dim(self) -> int:
        return 2 if self.kind in ("bidisk", "simplex") else 1

    @property
    def label(self) -> str:
        if self.params:
            return self.kind + ":" + ",".join(_fmt(p) for p in self.params)
        return self.kind

    def distance(self, points: np.ndarray) -> np.ndarray:
        """Euclidean distance from points (N, d) to the base set."""
        pts = _as_points(points, self.dim)
        if self.kind == "interval":
            a, b = self.params
            z = pts[:, 0]
            return np.abs(z - np.clip(z.real, a, b))
        if self.kind == "circle":
            return np.abs(np.abs(pts[:, 0]) - 1.0)
        if self.kind == "disk":
            (radius,) = self.params
            return np.maximum(np.abs(pts[:, 0]) - radius, 0.0)
        if self.kind == "square":
            (s,) = self.params
            z = pts[:, 0]
            dx = np.maximum(np.abs(z.real) - s, 0.0)
            dy = np.maximum(np.abs(z.imag) - s, 0.0)
            return np.hypot(dx, dy)
        if self.kind == "bidisk":
            d1 = np.maximum(np.abs(pts[:, 0]) - 1.0, 0.0)
            d2 = np.maximum(np.abs(pts[:, 1]) - 1.0, 0.0)
            return np.hypot(d1, d2)
        if self.kind == "simplex":
            x, y = pts[:, 0].real, pts[:, 1].real
            dplane = _simplex_distance(x, y)
            return np.sqrt(dplane**2 + pts[:, 0].imag ** 2 + pts[:, 1].imag ** 2)
        raise AssertionError(self.kind)


def _fmt(p: float) -> str:
    return f"{p:g}"


def _as_points(points, d: int) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, shape has {d}")
    return pts


def _simplex_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Distance in R^2 from (x, y) to the triangle x,y >= 0, x+y <= 1."""
    inside = (x >= 0) & (y >= 0) & (x + y <= 1)
    # distance to the three edges (as segments)
    d1 = _seg_dist(x, y, 0.0, 0.0, 1.0, 0.0)
    d2 = _seg_dist(x, y, 0.0, 0.0, 0.0, 1.0)
    d3 = _seg_dist(x, y, 1.0, 0.0, 0.0, 1.0)
    d = np.minimum(np.minimum(d1, d2), d3)
    return np.where(inside, 0.0, d)


def _seg_dist(x, y, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    t = np.clip(((x - ax) * vx + (y - ay) * vy) / (vx * vx + vy * vy), 0.0, 1.0)
    return np.hypot(x - (ax + t * vx), y - (ay + t * vy))


@dataclass(frozen=True)
class Mesh:
    """Finite point cloud discretizing a base shape or its eps-neighborhood."""

    points: np.ndarray  # (N, d) complex
    shape: Shape
    epsilon: float
    fill_distance: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("mesh must be a nonempty (N, d) array")
        object.__setattr__(self, "points", pts)

    @property
    def label(self) -> str:
        if self.epsilon > 0:
            return f"{self.shape.label}+eps={self.epsilon:g}"
        return self.shape.label

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_csv(self) -> str:
        d = self.dim
        header = ",".join(f"re_{k+1},im_{k+1}" for k in range(d))
        lines = [header]
        for p in self.points:
            lines.append(",".join(f"{p[k].real:.17g},{p[k].imag:.17g}" for k in range(d)))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(text: str, shape: Shape, epsilon: float = 0.0) -> "Mesh":
        rows = [r for r in text.strip().splitlines()[1:] if r.strip()]
        vals = np.array([[float(v) for v in r.split(",")] for r in rows])
        d = vals.shape[1] // 2
        pts = vals[:, 0::2] + 1j * vals[:, 1::2]
        return Mesh(points=pts, shape=shape, epsilon=epsilon, fill_distance=float("nan"))


def shape_from_spec(spec) -> Shape:
    """Parse a shape spec like 'interval:-1,1', 'disk:2', 'circle'."""
    if isinstance(spec, Shape):
        return spec
    name, _, rest = str(spec).partition(":")
    name = name.strip()
    params = tuple(float(v) for v in rest.split(",")) if rest else ()
    if name == "interval":
        if not params:
            params = (-1.0, 1.0)
        if len(params) != 2 or params[0] >= params[1]:
            raise ValueError("interval needs a < b")
    elif name == "disk":
        if not params:
            params = (1.0,)
        if len(params) != 1 or params[0] <= 0:
            raise ValueError("disk needs a positive radius")
    elif name == "square":
        if not params:
            params = (1.0,)
        if len(params) != 1 or params[0] <= 0:
            raise ValueError("square needs a positive half-width")
    elif name in ("circle", "bidisk", "simplex"):
        params = ()
    else:
        raise ValueError(f"unknown shape {name!r}; supported: {_SUPPORTED}")
    return Shape(kind=name, params=params)


def _disk_points(radius: float, resolution: int) -> np.ndarray:
    pts = [0.0 + 0.0j]
    for i in range(1, resolution + 1):
        r = radius * i / resolution
        k = 4 * i
        offset = math.pi / k * (i % 2)
        ang = offset + 2 * math.pi * np.arange(k) / k
        pts.extend(r * np.exp(1j * ang))
    return np.array(pts)


def build_mesh(shape, resolution: int) -> Mesh:
    """Deterministic mesh of a base shape; finer resolution shrinks the
    fill distance like 1/resolution."""
    shape = shape_from_spec(shape)
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    r = resolution
    if shape.kind == "interval":
        a, b = shape.params
        pts = np.linspace(a, b, r).astype(complex)[:, None]
        fill = (b - a) / (2 * (r - 1))
    elif shape.kind == "circle":
        pts = np.exp(2j * math.pi * np.arange(r) / r)[:, None]
        fill = math.pi / r
    elif shape.kind == "disk":
        (radius,) = shape.params
        pts = _disk_points(radius, r)[:, None]
        fill = radius * math.pi / (2 * r)
    elif shape.kind == "square":
        (s,) = shape.params
        g = np.linspace(-s, s, r)
        X, Y = np.meshgrid(g, g, indexing="ij")
        pts = (X + 1j * Y).ravel()[:, None]
        fill = s * math.sqrt(2) / (r - 1)
    elif shape.kind == "bidisk":
        w = _disk_points(1.0, r)
        Z1, Z2 = np.meshgrid(w, w, indexing="ij")
        pts = np.column_stack([Z1.ravel(), Z2.ravel()])
        fill = math.pi / r
    elif shape.kind == "simplex":
        h = 1.0 / (r - 1)
        pts = np.array(
            [[i * h, j * h] for i in range(r) for j in range(r - i)], dtype=complex
        )
        fill = h
    else:
        raise AssertionError(shape.kind)
    return Mesh(points=pts, shape=shape, epsilon=0.0, fill_distance=fill)


def neighborhood_mesh(shape, epsilon: float, resolution: int) -> Mesh:
    """Mesh of the closed epsilon-neighborhood {dist(z, K) <= epsilon}.

    For epsilon = 0 this is exactly build_mesh.  Interval and circle
    neighborhoods are meshed as two-dimensional regions of the plane;
    the outer boundary of the region carries an explicit point layer
    (near-extremal points concentrate there).
    """
    shape = shape_from_spec(shape)
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon == 0:
        return build_mesh(shape, resolution)
    r = resolution
    if shape.kind == "interval":
        a, b = shape.params
        h = (b - a) / (r - 1)
        nx = math.ceil(epsilon / h)
        xs = a + h * np.arange(-nx, r + nx)
        ny = math.floor(epsilon / h + 1e-12)
        ys = h * np.arange(-ny, ny + 1)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        grid = (X + 1j * Y).ravel()
        grid = grid[shape.distance(grid[:, None]) <= epsilon + 1e-12]
        bdry = _stadium_boundary(a, b, epsilon, h)
        pts = _dedupe(np.concatenate([grid, bdry]))[:, None]
        fill = max(h, epsilon / max(ny, 1)) / 2 if ny else h
    elif shape.kind == "circle":
        h = 2 * math.pi / r
        nr = max(2, math.floor(2 * epsilon / h) + 1)
        radii = np.linspace(1 - epsilon, 1 + epsilon, nr)
        ang = 2 * math.pi * np.arange(r) / r
        pts = (radii[:, None] * np.exp(1j * ang)[None, :]).ravel()[:, None]
        fill = max(h * (1 + epsilon), 2 * epsilon / (nr - 1)) / 2
    elif shape.kind == "disk":
        (radius,) = shape.params
        pts = _disk_points(radius + epsilon, r)[:, None]
        fill = (radius + epsilon) * math.pi / (2 * r)
    elif shape.kind == "square":
        (s,) = shape.params
        h = 2 * s / (r - 1)
        ne = math.ceil(epsilon / h)
        # anchor the grid at the base-square nodes
        base = np.linspace(-s, s, r)
        ext = np.concatenate(
            [base[0] - h * np.arange(ne, 0, -1), base, base[-1] + h * np.arange(1, ne + 1)]
        )
        X, Y = np.meshgrid(ext, ext, indexing="ij")
        grid = (X + 1j * Y).ravel()
        pts = grid[shape.distance(grid[:, None]) <= epsilon + 1e-12][:, None]
        fill = h * math.sqrt(2) / 2
    elif shape.kind == "bidisk":
        w = _disk_points(1.0 + epsilon, r)
        Z1, Z2 = np.meshgrid(w, w, indexing="ij")
        cand = np.column_stack([Z1.ravel(), Z2.ravel()])
        pts = cand[shape.distance(cand) <= epsilon + 1e-12]
        fill = (1 + epsilon) * math.pi / (2 * r)
    elif shape.kind == "simplex":
        # real-plane fattening only; the simplex is treated as a subset of R^2
        h = 1.0 / (r - 1)
        ne = math.ceil(epsilon / h)
        g = h * np.arange(-ne, r + ne)
        X, Y = np.meshgrid(g, g, indexing="ij")
        cand = np.column_stack([X.ravel(), Y.ravel()]).astype(complex)
        pts = cand[shape.distance(cand) <= epsilon + 1e-12]
        fill = h
    else:
        raise AssertionError(shape.kind)
    return Mesh(points=pts, shape=shape, epsilon=float(epsilon), fill_distance=fill)


def _stadium_boundary(a: float, b: float, eps: float, h: float) -> np.ndarray:
    """Points along the boundary of {dist(z, [a,b]) <= eps}, spacing ~h."""
    nx = max(2, math.ceil((b - a) / h) + 1)
    xs = np.linspace(a, b, nx)
    top = xs + 1j * eps
    bot = xs - 1j * eps
    na = max(3, math.ceil(math.pi * eps / h) + 1)
    th = np.linspace(math.pi / 2, 3 * math.pi / 2, na)
    left = a + eps * np.exp(1j * th)
    right = b + eps * np.exp(-1j * th)
    return np.concatenate([top, bot, left, right])


def _dedupe(z: np.ndarray) -> np.ndarray:
    """Drop duplicate complex points, keeping first occurrences in order."""
    seen = {}
    for v in z:
        key = (round(v.real, 12), round(v.imag, 12))
        if key not in seen:
            seen[key] = v
    return np.array(list(seen.values()))


@dataclass(frozen=True)
class WeightFn:
    """Admissible weight w = e^{-Q} given through the external field Q."""

    q: Callable[[np.ndarray], np.ndarray]  # (N, d) points -> (N,) real, +inf allowed
    label: str
    admissible_hint: bool = True

    def q_values(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        return np.asarray(self.q(pts), dtype=float)

    def log_w(self, points: np.ndarray) -> np.ndarray:
        return -self.q_values(points)

    def w(self, points: np.ndarray) -> np.ndarray:
        return np.exp(-self.q_values(points))


def make_weight(spec, grid_points=None, grid_q=None) -> WeightFn:
    """Weight families: 'constant', 'gaussian:c', or 'grid' interpolation.

    The grid family interpolates user Q-values given on mesh points by
    nearest neighbor in realified coordinates.
    """
    if isinstance(spec, WeightFn):
        return spec
    name, _, rest = str(spec).partition(":")
    name = name.strip()
    if name in ("constant", "one", "1"):
        return WeightFn(q=lambda pts: np.zeros(pts.shape[0]), label="constant")
    if name == "gaussian":
        c = float(rest) if rest else 1.0
        if c <= 0:
            raise ValueError("gaussian weight needs c > 0")
        return WeightFn(
            q=lambda pts, c=c: c * np.sum(np.abs(pts) ** 2, axis=1),
            label=f"gaussian:{c:g}",
        )
    if name == "grid":
        if grid_points is None or grid_q is None:
            raise ValueError("grid weight needs grid_points and grid_q")
        from scipy.interpolate import NearestNDInterpolator

        gp = np.asarray(grid_points, dtype=complex)
        if gp.ndim == 1:
            gp = gp[:, None]
        coords = np.column_stack([gp.real, gp.imag])
        interp = NearestNDInterpolator(coords, np.asarray(grid_q, dtype=float))

        def q(pts, interp=interp):
            c = np.column_stack([pts.real, pts.imag])
            return interp(c)

        return WeightFn(q=q, label="grid", admissible_hint=False)
    raise ValueError(f"unknown weight family {name!r}")
