"""Estimators for y = A rho + B omega: l1 basis pursuit via ADMM, the
minimum-l2-norm baseline, and a brute-force l0 oracle, plus the shared
rigid-elimination preprocessing.

All solvers work on the reduced problem Btilde omega = ytilde obtained by
projecting out the 6-dimensional rigid block; rho is recovered afterwards
by least squares.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .camera import Observation, SystemMatrices

_DEG5 = math.radians(5.0)


class RankDeficientError(ValueError):
    """Rigid block A does not have full column rank."""


class EnumerationBudgetError(ValueError):
    """Support enumeration too large for the brute-force oracle."""


class NoFeasibleSupportError(ValueError):
    """No support of admissible size explains the observation."""


@dataclass(frozen=True)
class DifferentialMotion:
    rho: np.ndarray  # (6,) translation rates then rotation rates
    omega: np.ndarray  # (d,) joint-angle rates, rad/frame

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))


@dataclass(frozen=True)
class SolveOptions:
    admm_rho: float = 1.0
    max_iter: int = 2000
    primal_tol: float = 1e-9
    dual_tol: float = 1e-9
    omega_max: float = _DEG5  # rad, box half-width
    box_enabled: bool = False
    adaptive_penalty: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.primal_tol <= 0 or self.dual_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float  # ||omega||_1
    converged: bool
    dual_vector: np.ndarray | None = None  # rho * u, the l1 dual certificate
    box_infeasible: bool = False


@dataclass(frozen=True)
class Support:
    indices: tuple[int, ...]
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(set(int(i) for i in self.indices))))

    def __len__(self):
        return len(self.indices)

    def as_set(self) -> frozenset:
        return frozenset(self.indices)


def extract_support(omega, epsilon: float) -> Support:
    """Indices with |omega_i| > epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    omega = np.asarray(omega, dtype=float)
    return Support(tuple(np.flatnonzero(np.abs(omega) > epsilon)), epsilon)


def eliminate_rigid(A, B, y, rank_tol: float = 1e-10):
    """Project the rigid block out of the equality constraint.

    Returns (Btilde, ytilde, Q) where Q is an orthonormal basis of span(A)
    and Btilde = (I - QQ^T) B, ytilde = (I - QQ^T) y.  Solutions of
    Btilde w = ytilde are exactly the articulated rates for which some
    rigid rate satisfies the original equality.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    if sv[-1] <= rank_tol * sv[0]:
        raise RankDeficientError("rigid Jacobian block is rank deficient")
    Q = U
    Btilde = B - Q @ (Q.T @ B)
    ytilde = y - Q @ (Q.T @ y)
    return Btilde, ytilde, Q


def recover_rigid(A, y, B, omega) -> np.ndarray:
    """Least-squares rho solving A rho = y - B omega (unique by full rank)."""
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(y, dtype=float) - np.asarray(B, dtype=float) @ np.asarray(omega, dtype=float)
    rho, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < 6:
        raise RankDeficientError("rigid Jacobian block is rank deficient")
    return rho


def _affine_projection_data(Btilde, ytilde, rank_tol: float = 1e-10):
    """Row-space basis Vr and min-norm feasible point for Bt w = yt.

    Singular values below rank_tol * sigma_max are treated as zero so that
    noise landing on the numerical null space is discarded rather than
    amplified.
    """
    U, sv, Vt = np.linalg.svd(Btilde, full_matrices=False)
    r = int(np.sum(sv > rank_tol * max(sv[0], 1.0))) if sv.size else 0
    Vr = np.ascontiguousarray(Vt[:r].T)
    if r == 0:
        return Vr, np.zeros(Btilde.shape[1])
    x0 = Vt[:r].T @ ((U[:, :r].T @ ytilde) / sv[:r])
    return Vr, x0


def solve_rf(sys: SystemMatrices, y, opts: SolveOptions = SolveOptions()):
    """Relaxed formulation: min ||omega||_1 s.t. y = A rho + B omega.

    Solved as basis pursuit on the rigid-eliminated system with ADMM
    (affine projection / soft-threshold splitting); the box constraint
    |omega_i| <= omega_max is clamped inside the z-update when enabled.
    Returns (DifferentialMotion, SolveStats).
    """
    yv = y.y if isinstance(y, Observation) else np.asarray(y, dtype=float)
    Btilde, ytilde, _ = eliminate_rigid(sys.A, sys.B, yv)
    Vr, x0 = _affine_projection_data(Btilde, ytilde)
    omega_max = opts.omega_max if opts.box_enabled else -1.0
    z, x, u, rho_fin, iters, r_norm, s_norm = _kernels.admm_l1(
        Vr,
        x0,
        float(opts.admm_rho),
        int(opts.max_iter),
        float(opts.primal_tol),
        float(opts.dual_tol),
        float(omega_max),
        bool(opts.adaptive_penalty),
    )
    converged = r_norm <= opts.primal_tol and s_norm <= opts.dual_tol
    box_infeasible = (
        opts.box_enabled and not converged and r_norm > 1e2 * opts.primal_tol
        and iters >= opts.max_iter
    )
    omega = z
    rho = recover_rigid(sys.A, yv, sys.B, omega)
    stats = SolveStats(
        iterations=iters,
        primal_residual=float(r_norm),
        dual_residual=float(s_norm),
        objective=float(np.sum(np.abs(omega))),
        converged=bool(converged),
        dual_vector=rho_fin * u,
        box_infeasible=bool(box_infeasible),
    )
    return DifferentialMotion(rho, omega), stats


def solve_l2(sys: SystemMatrices, y) -> DifferentialMotion:
    """Minimum-l2-norm omega satisfying the equality constraint (closed form)."""
    yv = y.y if isinstance(y, Observation) else np.asarray(y, dtype=float)
    Btilde, ytilde, _ = eliminate_rigid(sys.A, sys.B, yv)
    omega = np.linalg.pinv(Btilde, rcond=1e-10) @ ytilde
    rho = recover_rigid(sys.A, yv, sys.B, omega)
    return DifferentialMotion(rho, omega)


def solve_l0_oracle(sys: SystemMatrices, y, s_max: int, feas_tol: float = 1e-8):
    """Brute-force l0 oracle: smallest support explaining the observation.

    Enumerates supports by increasing size (lexicographic within a size) and
    accepts the first one whose least-squares residual over (rho, omega_S)
    is within feas_tol * ||y||.  Guarded to desk scale: s_max <= 4 or d <= 16.
    """
    yv = y.y if isinstance(y, Observation) else np.asarray(y, dtype=float)
    d = sys.B.shape[1]
    if s_max > 4 and d > 16:
        raise EnumerationBudgetError(
            f"enumeration of supports up to size {s_max} in dimension {d} exceeds budget"
        )
    ynorm = np.linalg.norm(yv)
    tol = feas_tol * max(ynorm, 1e-300)
    for s in range(0, s_max + 1):
        for comb in itertools.combinations(range(d), s):
            cols = np.hstack([sys.A, sys.B[:, list(comb)]]) if s else sys.A
            sol, _, _, _ = np.linalg.lstsq(cols, yv, rcond=None)
            resid = np.linalg.norm(cols @ sol - yv)
            if resid <= tol:
                omega = np.zeros(d)
                if s:
                    omega[list(comb)] = sol[6:]
                return DifferentialMotion(sol[:6], omega), Support(comb, epsilon=feas_tol)
    raise NoFeasibleSupportError(f"no support of size <= {s_max} explains the observation")
