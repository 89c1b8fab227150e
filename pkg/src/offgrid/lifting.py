"""Structured lifting of a Fourier grid into a stacked two-level Toeplitz matrix.

The lift maps coefficients g over a window Gamma to the 2|L2| x |L1| matrix
[T_x(g); T_y(g)] whose blocks hold the frequency-weighted entries
2 pi (l - k')_i g[l - k'] for l in L2, k' in L1.  Both blocks share one
multiplicity map omega(k) counting how often entry k appears per block.
The 2 pi weight is retained (the recovery results are invariant to it, and
it makes the Parseval-style identities exact).

The DC coefficient never enters the lifting (weight zero), so experiments
always sample it directly and error metrics exclude it.
"""

from __future__ import annotations

import numpy as np

from .index_sets import IndexSet2D, contraction
from .phantom import FourierGrid
from .trigpoly import TrigPoly


class GridMismatch(ValueError):
    """Input grid does not match the operator's window."""


class DimensionMismatch(ValueError):
    """Matrix argument does not have the lifted dimensions."""


class DCIndex(ValueError):
    """There is no sampling-basis matrix for k = 0."""


class LiftOperator:
    """Lift, adjoint, orthonormal sampling basis and structured projections.

    Parameters
    ----------
    gamma : IndexSet2D
        Reconstruction window (origin-symmetric).
    lambda1 : IndexSet2D
        Filter support (origin-symmetric), the column window of the lift.
    """

    def __init__(self, gamma: IndexSet2D, lambda1: IndexSet2D):
        if not gamma.is_symmetric or not lambda1.is_symmetric:
            raise ValueError("gamma and lambda1 must be origin-symmetric")
        self.gamma = gamma
        self.lambda1 = lambda1
        self.lambda2 = contraction(gamma, lambda1)

        kx, ky = gamma.index_grid()
        self.kx, self.ky = kx, ky

        def axis_counts(k, lo2, hi2, lo1, hi1):
            return np.maximum(
                0, np.minimum(hi2, k + hi1) - np.maximum(lo2, k + lo1) + 1
            )

        wx = axis_counts(kx, self.lambda2.lo[0], self.lambda2.hi[0],
                         lambda1.lo[0], lambda1.hi[0])
        wy = axis_counts(ky, self.lambda2.lo[1], self.lambda2.hi[1],
                         lambda1.lo[1], lambda1.hi[1])
        self.omega = wx * wy

        knorm = np.sqrt(kx.astype(float) ** 2 + ky.astype(float) ** 2)
        self.knorm = knorm
        self.weights = 2.0 * np.pi * knorm * np.sqrt(self.omega)

        # per-entry lookup: diff[l_i, k'_i] = linear index of l - k' in gamma
        l2x, l2y = self.lambda2.index_grid()
        l1x, l1y = lambda1.index_grid()
        lx = l2x.ravel()[:, None] - l1x.ravel()[None, :]
        ly = l2y.ravel()[:, None] - l1y.ravel()[None, :]
        ngy = gamma.shape[1]
        self._diff_flat = (lx - gamma.lo[0]) * ngy + (ly - gamma.lo[1])
        self._diff_kx = lx.astype(float)
        self._diff_ky = ly.astype(float)

    @property
    def shape(self) -> tuple[int, int]:
        return (2 * self.lambda2.size, self.lambda1.size)

    @property
    def tstar_t_diag(self) -> np.ndarray:
        """Diagonal of T*T over gamma: omega(k) (2 pi |k|)^2."""
        return self.omega * (2.0 * np.pi * self.knorm) ** 2

    def _grid_values(self, g) -> np.ndarray:
        if isinstance(g, FourierGrid):
            if g.grid != self.gamma:
                raise GridMismatch(f"grid {g.grid} != operator window {self.gamma}")
            return g.values
        g = np.asarray(g, dtype=complex)
        if g.shape != self.gamma.shape:
            raise GridMismatch(f"array shape {g.shape} != {self.gamma.shape}")
        return g

    def build_matrix(self, g) -> np.ndarray:
        """Explicit 2|L2| x |L1| lifted matrix of the coefficients g."""
        flat = self._grid_values(g).ravel()
        vals = flat[self._diff_flat]
        tx = 2.0 * np.pi * self._diff_kx * vals
        ty = 2.0 * np.pi * self._diff_ky * vals
        return np.concatenate([tx, ty], axis=0)

    # matrix-free alias; the explicit build is cheap at desk scale
    apply = build_matrix

    def _check_lifted(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != self.shape:
            raise DimensionMismatch(f"expected {self.shape}, got {x.shape}")
        return x

    def _block_sums(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Sum the entries of each block over every diagonal k of gamma."""
        x = self._check_lifted(x)
        nrows = self.lambda2.size
        sx = np.zeros(self.gamma.size, dtype=complex)
        sy = np.zeros(self.gamma.size, dtype=complex)
        idx = self._diff_flat.ravel()
        np.add.at(sx, idx, x[:nrows].ravel())
        np.add.at(sy, idx, x[nrows:].ravel())
        return sx.reshape(self.gamma.shape), sy.reshape(self.gamma.shape)

    def adjoint(self, x) -> np.ndarray:
        """Adjoint of the lift: grid array over gamma with <T g, X> = <g, T* X>."""
        sx, sy = self._block_sums(x)
        return 2.0 * np.pi * (self.kx * sx + self.ky * sy)

    def basis_matrix(self, k) -> np.ndarray:
        """Orthonormal sampling-basis matrix A_k (unit Frobenius norm)."""
        if k[0] == 0 and k[1] == 0:
            raise DCIndex("k = 0 carries no basis matrix")
        if not self.gamma.contains_index(k):
            raise GridMismatch(f"{tuple(k)} outside {self.gamma}")
        ix = (k[0] - self.gamma.lo[0], k[1] - self.gamma.lo[1])
        om = self.omega[ix]
        norm = np.sqrt(float(k[0]) ** 2 + float(k[1]) ** 2) * np.sqrt(om)
        mat = np.zeros(self.shape)
        sel = self._diff_kx == k[0]
        sel &= self._diff_ky == k[1]
        nrows = self.lambda2.size
        mat[:nrows][sel] = k[0] / norm
        mat[nrows:][sel] = k[1] / norm
        return mat

    def _coefficients(self, x) -> np.ndarray:
        """<A_k, X> for all k in gamma (zero at DC)."""
        sx, sy = self._block_sums(x)
        denom = self.knorm * np.sqrt(self.omega)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = (self.kx * sx + self.ky * sy) / denom
        dc = (-self.gamma.lo[0], -self.gamma.lo[1])
        coef[dc] = 0.0
        return coef

    def _expand(self, coef) -> np.ndarray:
        """sum_k coef[k] A_k as an explicit lifted matrix."""
        denom = self.knorm * np.sqrt(self.omega)
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = coef * self.kx / denom
            gy = coef * self.ky / denom
        dc = (-self.gamma.lo[0], -self.gamma.lo[1])
        gx[dc] = 0.0
        gy[dc] = 0.0
        tx = gx.ravel()[self._diff_flat]
        ty = gy.ravel()[self._diff_flat]
        return np.concatenate([tx, ty], axis=0)

    def project_structured(self, x) -> np.ndarray:
        """Orthogonal projection onto span{A_k} (the range of the lift)."""
        return self._expand(self._coefficients(x))

    def project_antistructured(self, x) -> np.ndarray:
        x = self._check_lifted(x)
        return x - self.project_structured(x)

    def sampling_operator(self, omega_set, x) -> np.ndarray:
        """Q_Omega(X) = (|Gamma|/|Omega|) A_Omega(X) + A_perp(X).

        omega_set is a multiset of indices (sampling with replacement is
        allowed); k = 0 entries are legal and contribute nothing, which
        makes E[Q_Omega] the exact identity under uniform draws over gamma.
        """
        x = self._check_lifted(x)
        counts = np.zeros(self.gamma.shape)
        for k in omega_set:
            if not self.gamma.contains_index(k):
                raise GridMismatch(f"{tuple(k)} outside {self.gamma}")
            counts[k[0] - self.gamma.lo[0], k[1] - self.gamma.lo[1]] += 1
        m = len(omega_set)
        if m == 0:
            return self.project_antistructured(x)
        coef = self._coefficients(x)
        scaled = self._expand(coef * counts) * (self.gamma.size / m)
        return scaled + (x - self._expand(coef))

    def nullspace_basis(self, mu0: TrigPoly) -> np.ndarray:
        """Columns vec(mu0-hat shifted by t) for every shift t of supp(mu0)
        inside lambda1; these span the lifted matrix's nullspace for any
        phantom with edge set {mu0 = 0}."""
        shifts = contraction(self.lambda1, mu0.support)
        cols = []
        n1x, n1y = self.lambda1.shape
        m0 = mu0.coeffs
        for tx in range(shifts.lo[0], shifts.hi[0] + 1):
            for ty in range(shifts.lo[1], shifts.hi[1] + 1):
                vec = np.zeros((n1x, n1y), dtype=complex)
                ox = tx + mu0.support.lo[0] - self.lambda1.lo[0]
                oy = ty + mu0.support.lo[1] - self.lambda1.lo[1]
                vec[ox:ox + m0.shape[0], oy:oy + m0.shape[1]] = m0
                cols.append(vec.ravel())
        return np.stack(cols, axis=1)
