"""Concrete forward operators: stripe mask, vertical cumulative sum, their
composition, subsampled unitary transforms, and dense wrappers for oracle
testing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linops import LinOp, MatvecOp, SvdFactors, dense_svd


def identity(shape: tuple[int, int]) -> LinOp:
    return MatvecOp(shape, shape, lambda x: x.copy(), lambda y: y.copy())


def make_cumsum(h: int, w: int, spacing: float = 1.0) -> LinOp:
    """Per-column prefix sum (discrete vertical integration).

    The adjoint is the per-column suffix sum (transpose of the
    lower-triangular all-ones matrix).  `spacing` scales the sums by the
    grid step, turning the raw prefix sum into a Riemann sum.
    """
    if h < 1 or w < 1:
        raise ValueError("h and w must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    shape = (h, w)

    def forward(x):
        return spacing * np.cumsum(x, axis=0)

    def backward(y):
        return spacing * np.cumsum(y[::-1, :], axis=0)[::-1, :]

    return MatvecOp(shape, shape, forward, backward)


@dataclass(frozen=True)
class StripeMaskSpec:
    """Vertical-stripe subsampling: per k, the stripe covers columns
    {4k+1, 4k+2} when one_based (the default reading) or {4k, 4k+1}
    otherwise.  By default the stripes are the observed columns; with
    complement=True they are the removed ones and everything else is kept.
    """

    image_width: int
    k_range: tuple[int, ...] = (0, 1, 2, 3)
    one_based: bool = True
    complement: bool = False

    def kept_columns(self) -> tuple[int, ...]:
        cols = []
        for k in self.k_range:
            if k < 0:
                raise ValueError("k_range entries must be nonnegative")
            if self.one_based:
                # stripes (4k+1, 4k+2) in one-based indexing
                cols.extend([4 * k, 4 * k + 1])
            else:
                cols.extend([4 * k + 1, 4 * k + 2])
        cols = sorted(set(cols))
        if not cols:
            raise ValueError("k_range must be nonempty")
        if cols[-1] >= self.image_width:
            raise ValueError(
                f"column {cols[-1]} out of range for width {self.image_width}")
        if self.complement:
            cols = [c for c in range(self.image_width) if c not in set(cols)]
            if not cols:
                raise ValueError("stripes cover the whole image")
        return tuple(cols)


def make_stripe_mask(spec: StripeMaskSpec, h: int) -> LinOp:
    """0/1 column mask as an operator on images (self-adjoint, idempotent)."""
    cols = spec.kept_columns()
    shape = (h, spec.image_width)
    sel = np.zeros(spec.image_width)
    sel[list(cols)] = 1.0

    def forward(x):
        return x * sel

    return MatvecOp(shape, shape, forward, forward)


def compose(outer: LinOp, inner: LinOp) -> LinOp:
    """outer o inner with adjoint inner* o outer*."""
    if inner.out_shape != outer.in_shape:
        raise ValueError(
            f"cannot compose: inner output {inner.out_shape} != outer "
            f"input {outer.in_shape}")
    return MatvecOp(
        inner.in_shape, outer.out_shape,
        lambda x: outer.apply(inner.apply(x)),
        lambda y: inner.adjoint(outer.adjoint(y)))


def make_stripe_operator(h: int = 64, w: int = 64,
                         spec: StripeMaskSpec | None = None,
                         spacing: float = 1.0):
    """The stripe-masked integration operator A = M K with its mask.

    Returns (A, M, kept_columns).
    """
    spec = spec or StripeMaskSpec(image_width=w)
    mask = make_stripe_mask(spec, h)
    cumsum = make_cumsum(h, w, spacing)
    return compose(mask, cumsum), mask, spec.kept_columns()


@dataclass(frozen=True)
class SubsampledUnitarySpec:
    """Keep coefficients of an orthogonal transform at `kept_indices`,
    zero-fill the rest.  Desk-scale stand-in for a subsampled FFT; the
    closed-form kernel projector holds for any orthogonal basis."""

    basis: np.ndarray
    kept_indices: tuple[int, ...]
    image_shape: tuple[int, int] | None = field(default=None)

    def validate(self):
        b = np.asarray(self.basis, dtype=float)
        n = b.shape[0]
        if b.ndim != 2 or b.shape[1] != n:
            raise ValueError("basis must be square")
        if np.max(np.abs(b.T @ b - np.eye(n))) > 1e-10:
            raise ValueError("basis is not orthogonal")
        idx = tuple(self.kept_indices)
        if not idx:
            raise ValueError("kept_indices must be nonempty")
        if min(idx) < 0 or max(idx) >= n:
            raise ValueError("kept_indices out of range")
        shape = self.image_shape or (n, 1)
        if shape[0] * shape[1] != n:
            raise ValueError("image_shape does not match basis dimension")
        return b, idx, shape


def make_subsampled_unitary(spec: SubsampledUnitarySpec) -> LinOp:
    basis, idx, shape = spec.validate()
    sel = np.zeros(basis.shape[0])
    sel[list(idx)] = 1.0

    def forward(x):
        return (sel * (basis @ x.ravel())).reshape(shape)

    def backward(y):
        return (basis.T @ (sel * y.ravel())).reshape(shape)

    return MatvecOp(shape, shape, forward, backward)


_DENSE_DIM_LIMIT = 4096


def to_dense(op: LinOp) -> np.ndarray:
    """Densify a small operator column by column (row-major flattening)."""
    n = op.in_shape[0] * op.in_shape[1]
    m = op.out_shape[0] * op.out_shape[1]
    if max(n, m) > _DENSE_DIM_LIMIT:
        raise ValueError(f"operator exceeds dense limit {_DENSE_DIM_LIMIT}")
    mat = np.empty((m, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        mat[:, j] = op.apply(e.reshape(op.in_shape)).ravel()
        e[j] = 0.0
    return mat


def dense_op(matrix: np.ndarray,
             in_shape: tuple[int, int] | None = None,
             out_shape: tuple[int, int] | None = None) -> LinOp:
    """Wrap a dense matrix as a LinOp on (optionally 2D) images."""
    matrix = np.asarray(matrix, dtype=float)
    m, n = matrix.shape
    in_shape = in_shape or (n, 1)
    out_shape = out_shape or (m, 1)
    if in_shape[0] * in_shape[1] != n or out_shape[0] * out_shape[1] != m:
        raise ValueError("shapes inconsistent with matrix dimensions")
    return MatvecOp(
        in_shape, out_shape,
        lambda x: (matrix @ x.ravel()).reshape(out_shape),
        lambda y: (matrix.T @ y.ravel()).reshape(in_shape))


def operator_svd(op: LinOp, rank_tol: float | None = None) -> SvdFactors:
    """Dense SVD of a small operator, with image shapes recorded."""
    svd = dense_svd(to_dense(op), rank_tol=rank_tol)
    svd.in_shape = tuple(op.in_shape)
    svd.out_shape = tuple(op.out_shape)
    return svd
