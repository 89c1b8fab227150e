"""Piecewise-constant phantoms and their exact Fourier coefficients.

Ground truth is synthesized from curve integrals over the traced edge set
(divergence theorem), which keeps the lifted matrix numerically low-rank;
the rasterization/DFT path is retained only as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .index_sets import IndexSet2D
from .trigpoly import CurveDiscretization, TrigPoly, _phases, curve_quadrature


class UntracedCurve(ValueError):
    """Phantom operation requires a traced (and sufficiently refined) curve."""


class InconsistentGradient(RuntimeError):
    """The two gradient-quotient reconstructions of f-hat disagree."""


@dataclass
class FourierGrid:
    """Complex Fourier coefficients over a rectangular frequency window.

    values[ix, iy] corresponds to k = (grid.lo.x + ix, grid.lo.y + iy).
    mask, when present, marks the sampled subset of the window.
    """

    grid: IndexSet2D
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"value shape {v.shape} != window shape {self.grid.shape}")
        self.values = v
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool)
            if m.shape != self.grid.shape:
                raise ValueError("mask shape mismatch")
            self.mask = m

    def at(self, k) -> complex:
        return self.values[k[0] - self.grid.lo[0], k[1] - self.grid.lo[1]]

    def dc_index(self) -> tuple[int, int]:
        return (-self.grid.lo[0], -self.grid.lo[1])

    def conj_symmetry_error(self) -> float:
        if not self.grid.is_symmetric:
            raise ValueError("window is not origin-symmetric")
        flipped = np.conj(self.values[::-1, ::-1])
        scale = np.max(np.abs(self.values)) or 1.0
        return float(np.max(np.abs(self.values - flipped)) / scale)

    def rel_err(self, other: "FourierGrid", exclude_dc: bool = True) -> float:
        """Relative l2 error against a reference grid, DC excluded by default."""
        if other.grid != self.grid:
            raise ValueError("grids differ")
        d = self.values - other.values
        ref = other.values.copy()
        if exclude_dc:
            dc = self.dc_index()
            d = d.copy()
            d[dc] = 0.0
            ref[dc] = 0.0
        return float(np.linalg.norm(d) / np.linalg.norm(ref))


@dataclass
class Phantom:
    """Two-region piecewise-constant image split by a traced level set.

    The image takes value a_in on {mu0 < 0} and a_out on {mu0 > 0}; the
    curve's normals point out of the inside region.  Multi-region images
    are built by superposing several phantoms (each with its own curve).
    """

    edge_poly: TrigPoly
    curve: CurveDiscretization | None
    a_in: complex = 1.0
    a_out: complex = 0.0

    @property
    def is_real(self) -> bool:
        return complex(self.a_in).imag == 0.0 and complex(self.a_out).imag == 0.0

    def _require_curve(self, max_tol: float | None = None) -> CurveDiscretization:
        if self.curve is None:
            raise UntracedCurve("phantom has no traced curve")
        if max_tol is not None and not (self.curve.trace_tol <= max_tol):
            raise UntracedCurve(
                f"curve traced with tol {self.curve.trace_tol}, need <= {max_tol}"
            )
        return self.curve


def region_area(poly: TrigPoly, curve: CurveDiscretization) -> float:
    """Area of {poly < 0} from the divergence theorem on the traced curve.

    The raw contour integral of x * n_x ds is exact only up to an integer
    for loops wrapping the torus; a coarse sign-count on a probe grid pins
    down the integer branch.
    """
    _, normals, w, unwrapped = curve_quadrature(poly, curve, return_unwrapped=True)
    raw = float(np.sum(unwrapped[:, 0] * normals[:, 0] * w))
    probe = poly.eval_grid(512)
    frac = float(np.mean(probe < 0))
    area = raw + np.round(frac - raw)
    if abs(area - frac) > 0.05:
        raise RuntimeError(
            f"area branch resolution failed (contour {raw:.6f}, probe {frac:.6f})"
        )
    return area


def gradient_fourier(ph: Phantom, grid: IndexSet2D) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients of (d/dx f, d/dy f) on the given window.

    Both components are curve integrals of the amplitude jump against the
    outward normal; evaluated with the Gauss-Legendre rule of the tracer.
    """
    curve = ph._require_curve(max_tol=1e-10)
    jump = complex(ph.a_out) - complex(ph.a_in)  # jump along +normal
    if jump == 0:
        z = np.zeros(grid.shape, dtype=complex)
        return z, np.zeros_like(z)
    pts, normals, w = curve_quadrature(ph.edge_poly, curve)
    ax, ay = grid.axes()
    ex = _phases(ax, pts[:, 0], sign=-1.0)
    ey = _phases(ay, pts[:, 1], sign=-1.0)
    cx = jump * w * normals[:, 0]
    cy = jump * w * normals[:, 1]
    gx = (ex * cx[:, None]).T @ ey
    gy = (ex * cy[:, None]).T @ ey
    return gx, gy


def fourier_coeffs(ph: Phantom, grid: IndexSet2D) -> FourierGrid:
    """Exact-to-quadrature Fourier coefficients of the phantom on a window.

    Off-DC coefficients come from dividing the gradient coefficients by
    j 2 pi k (choosing the larger component); a cross-check between the two
    quotients turns silent tracer failure into a hard error.  The DC term
    uses the region area.
    """
    if not grid.contains_index((0, 0)):
        raise ValueError("window must contain DC")
    gx, gy = gradient_fourier(ph, grid)
    kx, ky = grid.index_grid()
    with np.errstate(divide="ignore", invalid="ignore"):
        qx = gx / (2j * np.pi * kx)
        qy = gy / (2j * np.pi * ky)
    use_x = np.abs(kx) >= np.abs(ky)
    vals = np.where(use_x, qx, qy)

    both = (kx != 0) & (ky != 0)
    nondc = (kx != 0) | (ky != 0)
    scale = float(np.max(np.abs(vals[nondc]))) or 1.0
    if both.any():
        diff = np.abs(qx[both] - qy[both])
        bound = 1e-6 * (scale + np.abs(qx[both]) + np.abs(qy[both]))
        if np.any(diff > bound):
            worst = float((diff / bound).max())
            raise InconsistentGradient(
                f"gradient quotients disagree (worst {worst:.2f}x tolerance); "
                "the traced curve is likely under-resolved"
            )

    area = region_area(ph.edge_poly, ph._require_curve())
    dc = complex(ph.a_out) + (complex(ph.a_in) - complex(ph.a_out)) * area
    vals[(-grid.lo[0], -grid.lo[1])] = dc

    if ph.is_real and grid.is_symmetric:
        vals = 0.5 * (vals + np.conj(vals[::-1, ::-1]))
    return FourierGrid(grid, vals)


def rasterize(ph: Phantom, n: int) -> np.ndarray:
    """n x n pixel image; pixel [ix, iy] covers centre ((ix+.5)/n, (iy+.5)/n)."""
    t = (np.arange(n) + 0.5) / n
    xx, yy = np.meshgrid(t, t, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    inside = ph.edge_poly.eval(pts).reshape(n, n) < 0
    img = np.where(inside, complex(ph.a_in), complex(ph.a_out))
    return img.real if ph.is_real else img


def raster_dft(img: np.ndarray, grid: IndexSet2D) -> FourierGrid:
    """Midpoint-rule Fourier coefficients of a raster image (oracle path).

    Error is O(1/n) at jump discontinuities, so this is a cross-check for
    fourier_coeffs, not a synthesis path.
    """
    n = img.shape[0]
    if img.shape != (n, n):
        raise ValueError("square rasters only")
    spec = np.fft.fft2(img) / n**2
    kx, ky = grid.index_grid()
    phase = np.exp(-1j * np.pi * (kx + ky) / n)
    vals = phase * spec[np.mod(kx, n), np.mod(ky, n)]
    return FourierGrid(grid, vals)


def superpose(grids: list[FourierGrid]) -> FourierGrid:
    """Sum of several phantoms' coefficient grids (same window)."""
    if not grids:
        raise ValueError("nothing to superpose")
    base = grids[0].grid
    total = np.zeros(base.shape, dtype=complex)
    for g in grids:
        if g.grid != base:
            raise ValueError("windows differ")
        total += g.values
    return FourierGrid(base, total)


def make_phantom(lambda0: IndexSet2D, seed: int, grid_n: int,
                 smoothness: float = 0.5, a_in: complex = 1.0,
                 a_out: complex = 0.0, refine_tol: float = 1e-12) -> Phantom:
    """Random-edge phantom with its curve already traced."""
    from .trigpoly import random_edge_poly, trace_zero_set

    poly = random_edge_poly(lambda0, seed, smoothness)
    curve = trace_zero_set(poly, grid_n, refine_tol)
    return Phantom(edge_poly=poly, curve=curve, a_in=a_in, a_out=a_out)
