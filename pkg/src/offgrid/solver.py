"""Nuclear-norm completion of the lifted matrix by ADMM with SVT steps.

The splitting keeps an explicit lifted variable X alongside the coefficient
vector g.  Because T*T is diagonal in the coefficient domain, the g-update
has a closed form; the X-update is one singular value thresholding.  The
solver is fully deterministic: all randomness lives in the harness.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .lifting import LiftOperator
from .phantom import FourierGrid


class SvdFailure(RuntimeError):
    """Both LAPACK SVD drivers failed on an iterate."""


class MissingDC(ValueError):
    """The sample set must contain k = 0 (DC never enters the lifting)."""


@dataclass
class SolverConfig:
    """Knobs for the ADMM completion solver.

    beta is the augmented-Lagrangian penalty (None picks 1/max|sampled| at
    startup); delta > 0 switches the data constraint from equality to an
    l2-ball of that radius.  The solver itself uses no randomness
    (deterministic is informational).
    """

    beta: float | None = None
    max_iters: int = 3000
    tol_primal: float = 1e-7
    tol_change: float = 0.0
    delta: float = 0.0
    adaptive_beta: bool = True
    deterministic: bool = True

    def __post_init__(self):
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be positive")
        for name in ("tol_primal", "tol_change"):
            v = getattr(self, name)
            if not (0 <= v < 1):
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


@dataclass
class SolveReport:
    recovered: FourierGrid
    iterations: int
    primal_residuals: list
    objective: list
    converged: bool
    wall_time: float
    beta_final: float = np.nan
    data_residual: float = np.nan  # ||P_Omega(g - samples)||_2 at exit

    def to_json(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": bool(self.converged),
            "wall_time_s": self.wall_time,
            "beta_final": self.beta_final,
            "data_residual": self.data_residual,
            "primal_residuals": [float(r) for r in self.primal_residuals],
            "objective": [float(v) for v in self.objective],
        }


def svt(x: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding: prox of tau * nuclear norm at x."""
    if tau < 0:
        raise ValueError("threshold must be nonnegative")
    u, s, vh = _svd(x)
    shrunk = np.maximum(s - tau, 0.0)
    return (u * shrunk) @ vh


def _svd(x):
    try:
        return scipy.linalg.svd(x, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.svd(x, full_matrices=False, lapack_driver="gesvd")
    except np.linalg.LinAlgError as exc:
        raise SvdFailure("SVD did not converge with either driver") from exc


def _setup(op: LiftOperator, samples: FourierGrid):
    if samples.grid != op.gamma:
        raise ValueError("sample grid does not match the operator window")
    if samples.mask is None:
        mask = np.ones(op.gamma.shape, dtype=bool)
    else:
        mask = samples.mask
    dc = samples.dc_index()
    if not mask[dc]:
        raise MissingDC("sampling set must contain k = 0")
    data = np.where(mask, samples.values, 0.0)
    return mask, data, dc


def _solve(op: LiftOperator, samples: FourierGrid, cfg: SolverConfig) -> SolveReport:
    mask, data, dc = _setup(op, samples)
    t0 = time.perf_counter()

    diag = op.tstar_t_diag
    with np.errstate(divide="ignore"):
        inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 0.0)

    scale = float(np.max(np.abs(data))) or 1.0
    beta = cfg.beta if cfg.beta is not None else 1.0 / scale

    g = data.copy()
    tg = op.build_matrix(g)
    lam = np.zeros_like(tg)

    residuals: list[float] = []
    objective: list[float] = []
    converged = False
    beta_changes = 0
    iterations = 0

    for it in range(cfg.max_iters):
        iterations = it + 1
        u, s, vh = _svd(tg - lam / beta)
        shrunk = np.maximum(s - 1.0 / beta, 0.0)
        x = (u * shrunk) @ vh
        objective.append(float(shrunk.sum()))

        tsb = op.adjoint(x + lam / beta)
        g_ls = tsb * inv_diag
        if cfg.delta > 0:
            g_ls_on = np.where(mask, g_ls, 0.0)
            g_ls_on[dc] = data[dc]
            dev = g_ls_on - data
            dev_norm = float(np.linalg.norm(dev[mask]))
            shrink = min(1.0, cfg.delta / dev_norm) if dev_norm > 0 else 0.0
            g_new = np.where(mask, data + shrink * dev, g_ls)
        else:
            g_new = np.where(mask, data, g_ls)
        g_new[dc] = data[dc] if cfg.delta == 0 else g_new[dc]

        tg_new = op.build_matrix(g_new)
        primal = float(np.linalg.norm(x - tg_new) / max(1.0, np.linalg.norm(tg_new)))
        residuals.append(primal)
        dual = float(beta * np.linalg.norm(tg_new - tg)
                     / max(1.0, np.linalg.norm(lam)))

        lam = lam + beta * (x - tg_new)
        g_change = float(np.linalg.norm(g_new - g) / max(1.0, np.linalg.norm(g)))
        g, tg = g_new, tg_new

        if primal < cfg.tol_primal:
            converged = True
            break
        if cfg.tol_change > 0 and g_change < cfg.tol_change and it > 50:
            break
        if (cfg.adaptive_beta and beta_changes < 10 and it % 10 == 9):
            if primal > 10 * dual:
                beta *= 2.0
                beta_changes += 1
            elif dual > 10 * primal:
                beta *= 0.5
                beta_changes += 1

    data_res = float(np.linalg.norm((g - samples.values)[mask]))
    recovered = FourierGrid(op.gamma, g, mask=mask)
    return SolveReport(
        recovered=recovered,
        iterations=iterations,
        primal_residuals=residuals,
        objective=objective,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        beta_final=beta,
        data_residual=data_res,
    )


def solve_equality(op: LiftOperator, samples: FourierGrid, cfg: SolverConfig | None = None) -> SolveReport:
    """Complete the grid under hard equality constraints on the samples.

    Iterates
        X   <- svt(T(g) - L/beta, 1/beta)
        g_k <- samples on Omega; (T*(X + L/beta))_k / (omega_k (2 pi |k|)^2) off Omega
        L   <- L + beta (X - T(g))
    until the relative primal residual drops below tol_primal.  The sampled
    entries of the result match the data bit-exactly.
    """
    cfg = cfg or SolverConfig()
    if cfg.delta != 0:
        raise ValueError("equality mode requires delta == 0")
    return _solve(op, samples, cfg)


def solve_noisy(op: LiftOperator, samples: FourierGrid, cfg: SolverConfig) -> SolveReport:
    """Completion subject to ||P_Omega(g - samples)||_2 <= delta.

    Same iteration as the equality solver with the sampled block of the
    g-update replaced by Euclidean projection of the unconstrained
    least-squares update onto the delta-ball around the data.
    """
    if cfg.delta < 0:
        raise ValueError("delta must be nonnegative")
    if cfg.delta == 0:
        return solve_equality(op, samples, cfg)
    return _solve(op, samples, cfg)
