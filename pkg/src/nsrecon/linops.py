"""Matrix-free linear operators on 2D arrays, plus the small dense solvers
(CG on the normal equations, Landweber, power iteration, SVD / pseudo-inverse)
used throughout the package.

Images are plain float64 numpy arrays of shape (h, w).  Operators act on
images directly; flattening only happens inside dense wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SolverConfig:
    """Iterative solver settings.

    tol is a relative residual tolerance; tau is the Landweber step size and
    must lie in (0, 2/sigma_max^2) when used.
    """

    tol: float = 1e-8
    max_iters: int = 10000
    tau: float | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


class LinOp:
    """Linear operator between image spaces.

    Subclasses (or `MatvecOp` instances) provide `apply` and `adjoint`
    together with `in_shape` / `out_shape`.  Operators are immutable after
    construction and safe to share across threads.
    """

    in_shape: tuple[int, int]
    out_shape: tuple[int, int]

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x)

    def _check_in(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != self.in_shape:
            raise ValueError(
                f"expected input shape {self.in_shape}, got {x.shape}")
        return x

    def _check_out(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != self.out_shape:
            raise ValueError(
                f"expected output shape {self.out_shape}, got {y.shape}")
        return y


class MatvecOp(LinOp):
    """LinOp built from a pair of callables."""

    def __init__(self, in_shape, out_shape, forward, backward):
        self.in_shape = tuple(in_shape)
        self.out_shape = tuple(out_shape)
        self._forward = forward
        self._backward = backward

    def apply(self, x):
        x = self._check_in(x)
        return self._forward(x)

    def adjoint(self, y):
        y = self._check_out(y)
        return self._backward(y)


def adjoint_check(op: LinOp, trials: int = 50, seed: int = 0) -> float:
    """Max relative defect of <A u, v> = <u, A* v> over random test pairs."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(op.in_shape)
        v = rng.standard_normal(op.out_shape)
        au = op.apply(u)
        atv = op.adjoint(v)
        lhs = float(np.vdot(au, v))
        rhs = float(np.vdot(u, atv))
        scale = np.linalg.norm(au) * np.linalg.norm(v) + 1e-300
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


@dataclass(frozen=True)
class PowerResult:
    value: float
    converged: bool
    iters: int


def operator_norm(op: LinOp, cfg: SolverConfig | None = None,
                  seed: int = 0) -> PowerResult:
    """Largest singular value of `op` by power iteration on A*A."""
    cfg = cfg or SolverConfig(tol=1e-6, max_iters=2000)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.in_shape)
    x /= np.linalg.norm(x)
    lam = 0.0
    for k in range(cfg.max_iters):
        y = op.adjoint(op.apply(x))
        lam_new = float(np.vdot(x, y))
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return PowerResult(0.0, True, k + 1)
        x = y / nrm
        if k > 0 and abs(lam_new - lam) <= cfg.tol * abs(lam_new):
            return PowerResult(np.sqrt(lam_new), True, k + 1)
        lam = lam_new
    return PowerResult(np.sqrt(max(lam, 0.0)), False, cfg.max_iters)


@dataclass
class CgResult:
    x: np.ndarray
    converged: bool
    iters: int
    rel_residual: float


def cg_regularized_normal(op: LinOp, rhs: np.ndarray, lam: float,
                          cfg: SolverConfig) -> CgResult:
    """Conjugate gradients for (A*A + lam*I) x = rhs.

    `rhs` lives in the input space of `op` (typically A* y).  Returns a
    partial result with converged=False when max_iters is hit.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != op.in_shape:
        raise ValueError(f"rhs shape {rhs.shape} != operator input "
                         f"shape {op.in_shape}")

    def normal(v):
        out = op.adjoint(op.apply(v))
        if lam != 0.0:
            out = out + lam * v
        return out

    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return CgResult(np.zeros(op.in_shape), True, 0, 0.0)
    x = np.zeros(op.in_shape)
    r = rhs.copy()
    p = r.copy()
    rs = float(np.vdot(r, r))
    for k in range(cfg.max_iters):
        ap = normal(p)
        denom = float(np.vdot(p, ap))
        if denom <= 0.0:
            # singular direction (lam = 0 on a rank-deficient operator)
            break
        a = rs / denom
        x = x + a * p
        r = r - a * ap
        rs_new = float(np.vdot(r, r))
        if np.sqrt(rs_new) <= cfg.tol * rhs_norm:
            return CgResult(x, True, k + 1, np.sqrt(rs_new) / rhs_norm)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return CgResult(x, False, cfg.max_iters, np.sqrt(rs) / rhs_norm)


def landweber_nullproject(op: LinOp, z: np.ndarray,
                          cfg: SolverConfig) -> CgResult:
    """Project z onto ker(A) by Landweber iteration x <- x - tau A*(A x).

    Starting from x_0 = z the iteration converges to the orthogonal
    projection of z onto the null space.  Stops once the measurement of the
    iterate has dropped below tol relative to the initial one.
    """
    z = np.asarray(z, dtype=float)
    if cfg.tau is None or cfg.tau <= 0:
        raise ValueError("Landweber requires a positive step size tau")
    sigma = operator_norm(op).value
    if sigma > 0 and cfg.tau >= 2.0 / sigma**2:
        raise ValueError(
            f"tau={cfg.tau} out of range (0, {2.0 / sigma**2:.6g})")
    x = z.copy()
    az_norm = np.linalg.norm(op.apply(z))
    if az_norm == 0.0:
        return CgResult(x, True, 0, 0.0)
    for k in range(cfg.max_iters):
        ax = op.apply(x)
        res = np.linalg.norm(ax) / az_norm
        if res <= cfg.tol:
            return CgResult(x, True, k, res)
        x = x - cfg.tau * op.adjoint(ax)
    return CgResult(x, False, cfg.max_iters,
                    np.linalg.norm(op.apply(x)) / az_norm)


@dataclass
class SvdFactors:
    """Dense SVD of a small operator: matrix = u @ diag(s) @ v.T.

    Columns of u and v are orthonormal; s is nonincreasing and nonnegative.
    in_shape/out_shape record the image grids of the operator the matrix was
    densified from (None for a bare matrix: vectors stay 1D).
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    rank_tol: float
    in_shape: tuple[int, int] | None = field(default=None)
    out_shape: tuple[int, int] | None = field(default=None)

    @property
    def rank(self) -> int:
        return int(np.sum(self.s > self.rank_tol))

    def matrix(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


_SVD_DIM_LIMIT = 1024


def dense_svd(matrix: np.ndarray, rank_tol: float | None = None) -> SvdFactors:
    """Full SVD of a small dense matrix (desk-scale guard at 1024x1024).

    rank_tol defaults to s_max * 1e-12 * max(dims).
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("expected a 2D matrix")
    if max(matrix.shape) > _SVD_DIM_LIMIT:
        raise ValueError(f"matrix exceeds {_SVD_DIM_LIMIT} in one dimension")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix has non-finite entries")
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    if rank_tol is None:
        smax = s[0] if s.size else 0.0
        rank_tol = smax * 1e-12 * max(matrix.shape)
    return SvdFactors(u=u, s=s, v=vt.T, rank_tol=float(rank_tol))


def _as_out_vector(svd: SvdFactors, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if svd.out_shape is not None and y.shape == svd.out_shape:
        return y.ravel()
    if y.ndim == 1 and y.size == svd.u.shape[0]:
        return y
    raise ValueError(f"data shape {y.shape} does not match operator output")


def _as_in_image(svd: SvdFactors, x: np.ndarray) -> np.ndarray:
    if svd.in_shape is not None:
        return x.reshape(svd.in_shape)
    return x


def pseudo_inverse_apply(svd: SvdFactors, y: np.ndarray) -> np.ndarray:
    """Moore-Penrose solution: invert over the numerical range, drop the rest."""
    yv = _as_out_vector(svd, y)
    keep = svd.s > svd.rank_tol
    coeff = (svd.u[:, keep].T @ yv) / svd.s[keep]
    return _as_in_image(svd, svd.v[:, keep] @ coeff)
