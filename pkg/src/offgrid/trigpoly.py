"""Real trigonometric polynomials on the torus and their zero level-sets.

A polynomial is a finite sum mu(r) = sum_k c[k] exp(j 2 pi k.r) with k
ranging over a rectangular window.  Edge-set polynomials are real-valued,
which is enforced through conjugate symmetry of the coefficients.  The
module also provides the zero-set tracer (marching squares plus Newton
refinement on cell edges) and a high-order quadrature rule over traced
curves used by the phantom synthesizer and the analysis tools.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .index_sets import IndexSet2D


class DegenerateDraw(RuntimeError):
    """Random polynomial draw failed to produce a usable zero set."""


class NoZeroSet(ValueError):
    """The sampled polynomial has no sign change on the probe grid."""


class SingularPoint(ValueError):
    """The zero set contains a point where the gradient (nearly) vanishes."""


def _phases(freqs: np.ndarray, coords: np.ndarray, sign: float = 1.0) -> np.ndarray:
    """exp(sign * j 2 pi * coords x freqs), shape (npts, nfreqs)."""
    return np.exp(sign * 2j * np.pi * np.outer(coords, freqs))


@dataclass
class TrigPoly:
    """Trigonometric polynomial with coefficients on a rectangular window.

    Parameters
    ----------
    support : IndexSet2D
        Frequency window carrying the coefficients.
    coeffs : ndarray, complex, shape == support.shape
        coeffs[ix, iy] multiplies exp(j 2 pi ((lo.x+ix) x + (lo.y+iy) y)).
    real : bool
        When True the coefficients must be conjugate-symmetric
        (c[-k] == conj(c[k])) and evaluation returns real values.
    """

    support: IndexSet2D
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.support.shape:
            raise ValueError(
                f"coefficient shape {c.shape} != window shape {self.support.shape}"
            )
        if self.real:
            if not self.support.is_symmetric:
                raise ValueError("real-flagged polynomial needs a symmetric window")
            flipped = np.conj(c[::-1, ::-1])
            scale = np.abs(c).sum() or 1.0
            if np.max(np.abs(c - flipped)) > 1e-10 * scale:
                raise ValueError("coefficients are not conjugate-symmetric")
            c = 0.5 * (c + flipped)
        c = c.copy()
        c.flags.writeable = False
        self.coeffs = c

    @property
    def l1(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def _point_shape(self, r):
        pts = np.asarray(r, dtype=float)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != 2:
            raise ValueError("points must have a trailing dimension of 2")
        return pts.reshape(-1, 2), scalar, pts.shape[:-1]

    def eval(self, r):
        """Evaluate at point(s) r (..., 2).  Real output when real-flagged."""
        pts, scalar, shape = self._point_shape(r)
        ax, ay = self.support.axes()
        ex = _phases(ax, pts[:, 0])
        ey = _phases(ay, pts[:, 1])
        vals = ((ex @ self.coeffs) * ey).sum(axis=1)
        if self.real:
            vals = vals.real
        vals = vals.reshape(shape)
        return vals[()] if scalar else vals

    def gradient(self, r):
        """Gradient (d/dx, d/dy) at point(s) r; shape (..., 2)."""
        pts, scalar, shape = self._point_shape(r)
        ax, ay = self.support.axes()
        ex = _phases(ax, pts[:, 0])
        ey = _phases(ay, pts[:, 1])
        cx = self.coeffs * (2j * np.pi * ax)[:, None]
        cy = self.coeffs * (2j * np.pi * ay)[None, :]
        gx = ((ex @ cx) * ey).sum(axis=1)
        gy = ((ex @ cy) * ey).sum(axis=1)
        g = np.stack([gx, gy], axis=-1)
        if self.real:
            g = g.real
        g = g.reshape(shape + (2,))
        return g[0] if scalar else g

    def eval_grid(self, n: int):
        """Evaluate on the n x n grid (i/n, j/n); returns an (n, n) array."""
        t = np.arange(n) / n
        ax, ay = self.support.axes()
        ex = _phases(ax, t)
        ey = _phases(ay, t)
        vals = ex @ self.coeffs @ ey.T
        return vals.real if self.real else vals

    def shifted_constant(self, delta: float) -> "TrigPoly":
        """New polynomial with delta added to the DC coefficient."""
        if not self.support.contains_index((0, 0)):
            raise ValueError("window does not contain DC")
        c = self.coeffs.copy()
        c[-self.support.lo[0], -self.support.lo[1]] += delta
        return TrigPoly(self.support, c, real=self.real)

    def to_json(self) -> dict:
        return {
            "support": {"lo": list(self.support.lo), "hi": list(self.support.hi)},
            "coeffs": [[float(v.real), float(v.imag)] for v in self.coeffs.ravel()],
            "real": self.real,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrigPoly":
        support = IndexSet2D.from_json(obj["support"])
        flat = np.array([complex(re, im) for re, im in obj["coeffs"]])
        return cls(support, flat.reshape(support.shape), real=obj.get("real", False))


def dirichlet(lam: IndexSet2D, r) -> np.ndarray:
    """Dirichlet kernel sum_{k in lam} exp(j 2 pi k.r), vectorized over r.

    Computed as a separable product of 1-D geometric sums; |result| <= |lam|.
    """
    pts = np.atleast_2d(np.asarray(r, dtype=float))
    scalar = np.asarray(r).ndim == 1
    shape = pts.shape[:-1]
    pts = pts.reshape(-1, 2)

    def axis_sum(lo, hi, t):
        n = hi - lo + 1
        num = np.sin(n * np.pi * t)
        den = np.sin(np.pi * t)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = num / den
        # limit n * (-1)^(m (n-1)) at integer t = m; the phase factor below
        # turns the product back into exactly n there
        m = np.round(t)
        limit = float(n) * np.where((m.astype(np.int64) * (n - 1)) % 2 == 0, 1.0, -1.0)
        ratio = np.where(np.abs(den) < 1e-14, limit, ratio)
        return np.exp(1j * np.pi * (lo + hi) * t) * ratio

    sx = axis_sum(lam.lo[0], lam.hi[0], pts[:, 0])
    sy = axis_sum(lam.lo[1], lam.hi[1], pts[:, 1])
    vals = (sx * sy).reshape(shape)
    return vals[()] if scalar else vals


def random_edge_poly(lambda0: IndexSet2D, seed: int, smoothness: float = 0.5) -> TrigPoly:
    """Random real polynomial whose zero set is a nonempty smooth curve.

    Coefficients are iid complex Gaussian, conjugate-symmetrized, damped by
    exp(-smoothness |k|^2); the DC term is then shifted to the midrange of
    the values on a 256^2 probe grid so that both signs are present.
    Resamples (up to 100 times) if a draw degenerates.
    """
    if not lambda0.is_symmetric:
        raise ValueError("edge-set window must be origin-symmetric")
    if lambda0.size < 4:
        raise ValueError("edge-set window must contain at least 4 indices")
    rng = np.random.default_rng(seed)
    kx, ky = lambda0.index_grid()
    damp = np.exp(-smoothness * (kx**2 + ky**2))
    for _ in range(100):
        c = rng.standard_normal(lambda0.shape) + 1j * rng.standard_normal(lambda0.shape)
        c = 0.5 * (c + np.conj(c[::-1, ::-1]))
        c *= damp
        poly = TrigPoly(lambda0, c, real=True)
        probe = poly.eval_grid(256)
        vmin, vmax = probe.min(), probe.max()
        if vmax - vmin < 1e-9:
            continue
        poly = poly.shifted_constant(-0.5 * (vmin + vmax))
        probe = probe - 0.5 * (vmin + vmax)
        if probe.min() < 0.0 < probe.max():
            return poly
    raise DegenerateDraw(f"no usable zero set after 100 draws (seed={seed})")


@dataclass
class CurveDiscretization:
    """Ordered samples of a zero level-set.

    points lie in [0, 1)^2, normals are unit vectors pointing out of the
    region {mu < 0}, ds holds positive arc-length weights, and loops lists
    one index array per closed loop in traversal order (loops close
    periodically on the torus).
    """

    points: np.ndarray
    normals: np.ndarray
    ds: np.ndarray
    loops: list = field(default_factory=list)
    parent: TrigPoly | None = None
    trace_tol: float = np.nan

    @property
    def length(self) -> float:
        return float(self.ds.sum())

    def __len__(self):
        return len(self.points)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "nx", "ny", "ds"])
            for p, n, d in zip(self.points, self.normals, self.ds):
                w.writerow([repr(p[0]), repr(p[1]), repr(n[0]), repr(n[1]), repr(d)])


def _wrap_diff(d):
    return d - np.round(d)


def _refine_on_edges(poly: TrigPoly, a: np.ndarray, b: np.ndarray, tol: float):
    """Locate the zero of poly on each straight edge a->b (sign change assumed).

    Safeguarded Newton: steps that leave the current bracket fall back to
    bisection.  Returns the refined points wrapped into [0, 1)^2.
    """
    fa = poly.eval(a)
    fb = poly.eval(b)
    d = b - a
    sign_a = fa >= 0
    t_lo = np.zeros(len(a))
    t_hi = np.ones(len(a))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = fa / (fa - fb)
    t = np.clip(np.where(np.isfinite(t), t, 0.5), 0.0, 1.0)
    for _ in range(80):
        p = a + t[:, None] * d
        f = poly.eval(p)
        active = np.abs(f) >= tol
        if not active.any():
            break
        same = (f >= 0) == sign_a
        t_lo = np.where(active & same, t, t_lo)
        t_hi = np.where(active & ~same, t, t_hi)
        df = (poly.gradient(p) * d).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
        t_new = t - np.where(np.isfinite(step), step, 0.0)
        bad = (t_new < t_lo) | (t_new > t_hi) | ~np.isfinite(t_new)
        t = np.where(active, np.where(bad, 0.5 * (t_lo + t_hi), t_new), t)
    return np.mod(a + t[:, None] * d, 1.0)


def trace_zero_set(poly: TrigPoly, grid_n: int, refine_tol: float = 1e-12) -> CurveDiscretization:
    """Discretize {poly == 0} into ordered points, normals and arc weights.

    Marching squares on a periodic grid_n x grid_n sample grid; every edge
    crossing is refined along its cell edge until |poly| < refine_tol * ||c||_1,
    and the resulting segments are chained into closed loops respecting torus
    periodicity.  Grid values equal to zero count as positive, so curves
    passing exactly through grid nodes are still picked up.

    Raises
    ------
    NoZeroSet
        If no sign change is found on the grid.
    SingularPoint
        If the gradient magnitude falls below 1e-9 * ||c||_1 at a refined
        point (the rank theory requires a nonsingular edge set).
    """
    if not poly.real:
        raise ValueError("can only trace real-valued polynomials")
    bw = max(
        abs(poly.support.lo[0]), abs(poly.support.hi[0]),
        abs(poly.support.lo[1]), abs(poly.support.hi[1]), 1,
    )
    if grid_n < 4 * bw:
        raise ValueError(f"grid_n={grid_n} below the 4x Nyquist margin {4 * bw}")

    n = grid_n
    vals = poly.eval_grid(n)
    sgn = vals >= 0

    hx = sgn != np.roll(sgn, -1, axis=0)  # crossing along +x on edge (i,j)-(i+1,j)
    vy = sgn != np.roll(sgn, -1, axis=1)  # crossing along +y on edge (i,j)-(i,j+1)
    if not (hx.any() or vy.any()):
        raise NoZeroSet("no sign change on the sampling grid")

    scale = poly.l1
    tol = refine_tol * scale
    h = 1.0 / n

    hi, hj = np.nonzero(hx)
    a_h = np.stack([hi * h, hj * h], axis=1)
    pts_h = (
        _refine_on_edges(poly, a_h, a_h + np.array([h, 0.0]), tol)
        if len(hi) else np.zeros((0, 2))
    )

    vi, vj = np.nonzero(vy)
    a_v = np.stack([vi * h, vj * h], axis=1)
    pts_v = (
        _refine_on_edges(poly, a_v, a_v + np.array([0.0, h]), tol)
        if len(vi) else np.zeros((0, 2))
    )

    points = np.concatenate([pts_h, pts_v], axis=0)
    keys = [("h", int(i), int(j)) for i, j in zip(hi, hj)]
    keys += [("v", int(i), int(j)) for i, j in zip(vi, vj)]
    key_to_idx = {k: i for i, k in enumerate(keys)}

    grads = poly.gradient(points)
    gnorm = np.linalg.norm(grads, axis=1)
    if np.any(gnorm < 1e-9 * scale):
        raise SingularPoint("gradient vanishes on the traced zero set")
    normals = grads / gnorm[:, None]

    # collect the crossed edges of every cell; cell (i,j) spans
    # [i, i+1] x [j, j+1] in grid units with corners indexed mod n
    cells: dict[tuple[int, int], list] = {}
    for key in keys:
        kind, i, j = key
        if kind == "h":
            cells.setdefault((i, j), []).append(("S", key))
            cells.setdefault((i, (j - 1) % n), []).append(("N", key))
        else:
            cells.setdefault((i, j), []).append(("W", key))
            cells.setdefault(((i - 1) % n, j), []).append(("E", key))

    adjacency: dict[tuple, list] = {k: [] for k in keys}
    for (i, j), edges in cells.items():
        labels = dict(edges)
        if len(labels) == 2:
            pairs = [tuple(labels)]
        elif len(labels) == 4:
            # saddle cell: the centre sample decides which corners connect
            centre = poly.eval(np.array([(i + 0.5) * h, (j + 0.5) * h]))
            if (centre >= 0) == sgn[i, j]:
                pairs = [("S", "E"), ("N", "W")]
            else:
                pairs = [("S", "W"), ("N", "E")]
        else:
            raise RuntimeError(f"inconsistent marching-squares cell {(i, j)}")
        for la, lb in pairs:
            ka, kb = labels[la], labels[lb]
            adjacency[ka].append(kb)
            adjacency[kb].append(ka)

    for k, nbrs in adjacency.items():
        if len(nbrs) != 2:
            raise RuntimeError("crossing graph is not 2-regular; trace failed")

    visited = set()
    loops = []
    for start in keys:
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nxt = adjacency[cur][0] if adjacency[cur][0] != prev else adjacency[cur][1]
            if nxt == start:
                break
            loop.append(nxt)
            visited.add(nxt)
            prev, cur = cur, nxt
        loops.append(np.array([key_to_idx[k] for k in loop], dtype=int))

    ds = np.zeros(len(points))
    for loop in loops:
        p = points[loop]
        seg = np.linalg.norm(_wrap_diff(np.roll(p, -1, axis=0) - p), axis=1)
        ds[loop] = 0.5 * (seg + np.roll(seg, 1))

    return CurveDiscretization(
        points=points, normals=normals, ds=ds, loops=loops,
        parent=poly, trace_tol=refine_tol,
    )


def curve_quadrature(poly: TrigPoly, curve: CurveDiscretization, order: int = 5,
                     return_unwrapped: bool = False):
    """High-order quadrature nodes/weights along a traced curve.

    Each polyline segment is parametrized implicitly across its chord and
    integrated with an `order`-point Gauss-Legendre rule; quadrature points
    are projected back onto {poly == 0} by Newton iteration, so positions
    and arc-length factors are accurate far beyond the polyline itself.

    Returns (points, normals, weights) such that sum(F(points) * weights)
    approximates the curve integral of F ds.  With return_unwrapped=True a
    fourth array of per-loop continuously unwrapped coordinates is appended
    (needed for area integrals on the torus).
    """
    gl_x, gl_w = np.polynomial.legendre.leggauss(order)
    gl_t = 0.5 * (gl_x + 1.0)
    gl_w = 0.5 * gl_w

    seg_a, seg_b = [], []
    for loop in curve.loops:
        p = curve.points[loop]
        d = _wrap_diff(np.diff(p, axis=0, append=p[:1]))
        unwrapped = p[0] + np.vstack([np.zeros(2), np.cumsum(d, axis=0)])
        seg_a.append(unwrapped[:-1])
        seg_b.append(unwrapped[1:])
    a = np.concatenate(seg_a)
    b = np.concatenate(seg_b)
    chord = b - a
    hlen = np.linalg.norm(chord, axis=1)
    keep = hlen > 1e-13
    a, chord, hlen = a[keep], chord[keep], hlen[keep]
    nhat = np.stack([-chord[:, 1], chord[:, 0]], axis=1) / hlen[:, None]

    base = a[:, None, :] + gl_t[None, :, None] * chord[:, None, :]
    nu = np.zeros(base.shape[:2])
    tol = 1e-13 * poly.l1
    pts = base.copy()
    for _ in range(40):
        f = poly.eval(pts.reshape(-1, 2)).reshape(nu.shape)
        if np.max(np.abs(f)) < tol:
            break
        g = poly.gradient(pts.reshape(-1, 2)).reshape(nu.shape + (2,))
        gn = (g * nhat[:, None, :]).sum(axis=2)
        safe = np.abs(gn) > 1e-12 * poly.l1
        step = np.where(safe, f / np.where(safe, gn, 1.0), 0.0)
        nu = nu - step
        # runaway nodes stay near the chord (degrades to the chord rule there)
        nu = np.clip(nu, -2.0 * hlen[:, None], 2.0 * hlen[:, None])
        pts = base + nu[..., None] * nhat[:, None, :]

    g = poly.gradient(pts.reshape(-1, 2)).reshape(nu.shape + (2,))
    gn = (g * nhat[:, None, :]).sum(axis=2)
    gc = (g * chord[:, None, :]).sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        nu_prime = -gc / gn
    nu_prime = np.where(np.isfinite(nu_prime), nu_prime, 0.0)
    dsfac = np.sqrt(hlen[:, None] ** 2 + nu_prime**2)
    weights = (gl_w[None, :] * dsfac).ravel()

    flat = pts.reshape(-1, 2)
    gflat = g.reshape(-1, 2)
    gmag = np.linalg.norm(gflat, axis=1)
    normals = gflat / np.maximum(gmag, 1e-300)[:, None]

    wrapped = np.mod(flat, 1.0)
    if return_unwrapped:
        return wrapped, normals, weights, flat
    return wrapped, normals, weights


def curve_integral(poly: TrigPoly, curve: CurveDiscretization, fn, order: int = 5):
    """Integrate fn(points) ds over the traced curve with the GL rule."""
    pts, _, w = curve_quadrature(poly, curve, order=order)
    vals = fn(pts)
    return np.tensordot(w, vals, axes=(0, 0))
