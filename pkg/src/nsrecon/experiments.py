"""Experiment harness: training of the residual / data-consistent networks,
evaluation over ID and OOD samples, measurement-residual audit, and the
convergence-rate studies for classical and learned regularization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import nn
from .data import Sample, make_dataset
from .linops import LinOp, SolverConfig, SvdFactors
from .metrics import mse, psnr, ssim
from .nullspace import NullProjector, mask_projector, project_null
from .operators import (StripeMaskSpec, dense_op, make_stripe_operator)
from .regularize import (FilterSpec, SourceCondition, make_source_element,
                         param_choice, spectral_reconstruct,
                         tikhonov_reconstruct)

MODEL_KINDS = ("resnet", "dcnet")


@dataclass
class Problem:
    """The stripe-masked integration problem with its projector machinery."""

    op: LinOp
    mask: LinOp
    kept_columns: tuple[int, ...]
    projector: NullProjector
    support: np.ndarray   # observed entries of the data grid
    sigma_scale: float = 1.0  # nominal noise sd -> sd on the data grid

    @classmethod
    def benchmark(cls, image_size: int = 64,
                  spacing: float = 1.0 / 8.0) -> "Problem":
        # stripes (4k+1, 4k+2), k in {0..3}, are the REMOVED columns: the
        # reported Tikhonov OOD quality is only reachable when the bulk of
        # the image stays observed (a keep-the-stripes mask caps any
        # column-local reconstruction far below it).  Integration carries a
        # grid step so that alpha = 0.01 sits inside the spectrum and
        # attenuates, without erasing, the stripe oscillation: a
        # shift-equivariant network can only repaint stripes whose phase
        # survives in its input.  The nominal noise sd refers to the raw
        # unit-step prefix sums, so it is scaled by the same grid step as
        # the data.
        spec = StripeMaskSpec(image_width=image_size, complement=True)
        op, mask, kept = make_stripe_operator(image_size, image_size, spec,
                                              spacing=spacing)
        support = np.zeros((image_size, image_size))
        support[:, list(kept)] = 1.0
        return cls(op=op, mask=mask, kept_columns=kept,
                   projector=mask_projector(op, mask), support=support,
                   sigma_scale=spacing)

    def project_correction(self, img: np.ndarray) -> np.ndarray:
        # closed form (I - M), cheap enough to sit inside the training loop
        return img - self.mask.apply(img)


@dataclass
class TrainConfig:
    epochs: int = 100
    lr: float = 1e-3
    weight_decay: float = 1e-4
    alpha_tik: float = 0.01
    sigma: float = 0.05
    image_size: int = 64
    model_kind: str = "resnet"
    data_seed: int = 0
    init_seed: int = 0
    arch: nn.Architecture = field(default_factory=nn.Architecture)
    cg: SolverConfig = field(default_factory=lambda: SolverConfig(
        tol=1e-10, max_iters=20000))

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}")
        if min(self.lr, self.weight_decay + 1, self.alpha_tik,
               self.sigma + 1) <= 0:
            raise ValueError("hyperparameters must be positive")


def train(cfg: TrainConfig, problem: Problem | None = None):
    """Train one model on pre-generated ID pairs, one Adam step per epoch.

    Per pair: Tikhonov-reconstruct the data by CG, run the model on the
    reconstruction, take one Adam step on the squared-error loss (the
    Frobenius weight penalty enters through Adam's coupled weight decay).
    Returns (params, per-epoch loss list).
    """
    problem = problem or Problem.benchmark(cfg.image_size)
    params = nn.init_params(cfg.arch, cfg.init_seed)
    if cfg.epochs == 0:
        return params, []
    state = nn.init_adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    projector = (problem.project_correction
                 if cfg.model_kind == "dcnet" else None)
    samples = make_dataset(cfg.epochs, "ID", cfg.data_seed, problem.op,
                           sigma=cfg.sigma * problem.sigma_scale,
                           support=problem.support,
                           image_size=cfg.image_size)
    log = []
    for epoch, s in enumerate(samples):
        b = tikhonov_reconstruct(problem.op, s.y, cfg.alpha_tik, cfg.cg).x
        out, cache = nn.forward(params, b, projector)
        r = out - s.x
        loss = float(np.sum(r * r))
        if not np.isfinite(loss):
            raise RuntimeError(
                f"training diverged at epoch {epoch}: loss={loss}")
        grads, _ = nn.backward(params, cache, 2.0 * r)
        params, state = nn.adam_step(params, grads, state)
        log.append(loss)
    return params, log


@dataclass
class EvalConfig:
    n_per_kind: int = 20
    eval_seed: int = 10_000
    sigma: float = 0.05
    alpha_tik: float = 0.01
    image_size: int = 64
    cg: SolverConfig = field(default_factory=lambda: SolverConfig(
        tol=1e-10, max_iters=20000))


METHODS = ("tikhonov", "resnet", "dcnet")
_OOD_SEED_OFFSET = 500_000


@dataclass
class EvalReport:
    rows: list            # per-sample dicts
    means: dict           # means[method][kind][metric]

    def recompute_means(self) -> dict:
        out = {}
        for method in METHODS:
            out[method] = {}
            for kind in ("ID", "OOD"):
                sel = [r for r in self.rows
                       if r["method"] == method and r["kind"] == kind]
                if not sel:
                    continue
                out[method][kind] = {
                    m: float(np.mean([r[m] for r in sel]))
                    for m in ("psnr", "ssim", "mse", "residual")}
        return out

    def to_csv(self, path) -> None:
        cols = ["kind", "index", "method", "psnr", "ssim", "mse", "residual"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            writer.writerows({c: r[c] for c in cols} for r in self.rows)


def _eval_samples(problem: Problem, cfg: EvalConfig, kind: str):
    seed = cfg.eval_seed + (_OOD_SEED_OFFSET if kind == "OOD" else 0)
    return make_dataset(cfg.n_per_kind, kind, seed, problem.op,
                        sigma=cfg.sigma * problem.sigma_scale,
                        support=problem.support,
                        image_size=cfg.image_size)


def reconstruct_all(problem: Problem, cfg: EvalConfig, sample: Sample,
                    params_resnet: nn.NetParams, params_dcnet: nn.NetParams):
    """Tikhonov, ResNet and DC-Net reconstructions of one sample."""
    tik = tikhonov_reconstruct(problem.op, sample.y, cfg.alpha_tik, cfg.cg).x
    res = nn.forward(params_resnet, tik)[0]
    dc = nn.forward(params_dcnet, tik, problem.project_correction)[0]
    return {"tikhonov": tik, "resnet": res, "dcnet": dc}


def evaluate(params_resnet: nn.NetParams, params_dcnet: nn.NetParams,
             cfg: EvalConfig | None = None,
             problem: Problem | None = None) -> EvalReport:
    """Metric table over fresh ID and OOD samples for the three methods."""
    cfg = cfg or EvalConfig()
    problem = problem or Problem.benchmark(cfg.image_size)
    rows = []
    for kind in ("ID", "OOD"):
        for i, s in enumerate(_eval_samples(problem, cfg, kind)):
            recs = reconstruct_all(problem, cfg, s, params_resnet,
                                   params_dcnet)
            for method, xr in recs.items():
                rows.append({
                    "kind": kind, "index": i, "method": method,
                    "psnr": psnr(s.x, xr), "ssim": ssim(s.x, xr),
                    "mse": mse(s.x, xr),
                    "residual": float(np.linalg.norm(
                        problem.op.apply(xr) - s.y)),
                })
    report = EvalReport(rows=rows, means={})
    report.means = report.recompute_means()
    return report


def dc_audit(params: nn.NetParams, model_kind: str, n: int, seed: int,
             cfg: EvalConfig | None = None,
             problem: Problem | None = None) -> list[dict]:
    """Measurement residual of the model vs its Tikhonov input, per sample.

    Half the samples are ID, half OOD.  For the dcnet the two residuals
    agree to rounding; for the resnet they generally differ.
    """
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"model_kind must be one of {MODEL_KINDS}")
    cfg = cfg or EvalConfig()
    problem = problem or Problem.benchmark(cfg.image_size)
    projector = (problem.project_correction
                 if model_kind == "dcnet" else None)
    out = []
    for kind, count in (("ID", n // 2), ("OOD", n - n // 2)):
        if count == 0:
            continue
        offset = _OOD_SEED_OFFSET if kind == "OOD" else 0
        samples = make_dataset(count, kind, seed + offset, problem.op,
                               sigma=cfg.sigma * problem.sigma_scale,
                               support=problem.support,
                               image_size=cfg.image_size)
        for s in samples:
            tik = tikhonov_reconstruct(problem.op, s.y, cfg.alpha_tik,
                                       cfg.cg).x
            rec = nn.forward(params, tik, projector)[0]
            out.append({
                "kind": kind, "seed": s.seed,
                "residual_tikhonov": float(np.linalg.norm(
                    problem.op.apply(tik) - s.y)),
                "residual_model": float(np.linalg.norm(
                    problem.op.apply(rec) - s.y)),
                "y_norm": float(np.linalg.norm(s.y)),
            })
    return out


# ---------------------------------------------------------------------------
# Convergence-rate studies


def make_rate_operator(shape: tuple[int, int] = (16, 16),
                       s_min: float = 1e-4, kernel_dim: int = 0,
                       seed: int = 0):
    """Dense test operator with a geometrically decaying spectrum (s_max = 1)
    and an optional exact null space of dimension kernel_dim.

    Returns (op, svd).  The spectrum spans several decades so the bias term
    of spectral filters is visible across the whole noise-level range.
    """
    n = shape[0] * shape[1]
    if kernel_dim < 0 or kernel_dim >= n:
        raise ValueError("kernel_dim out of range")
    rng = np.random.default_rng(seed)
    u, _ = np.linalg.qr(rng.standard_normal((n, n)))
    v, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = np.zeros(n)
    s[:n - kernel_dim] = np.geomspace(1.0, s_min, n - kernel_dim)
    matrix = (u * s) @ v.T
    svd = SvdFactors(u=u, s=s, v=v, rank_tol=1e-12 * n,
                     in_shape=shape, out_shape=shape)
    return dense_op(matrix, shape, shape), svd


def fit_loglog_slope(xs, ys):
    """Least-squares slope of log(y) vs log(x) with a 95% half-width."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    design = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(design, ly, rcond=None)
    slope = float(coef[0])
    dof = len(lx) - 2
    if dof > 0 and res.size:
        sigma2 = float(res[0]) / dof
        sxx = float(np.sum((lx - lx.mean())**2))
        half = 1.96 * np.sqrt(sigma2 / sxx)
    else:
        half = 0.0
    return slope, float(half)


@dataclass
class ConvergenceReport:
    entries: list         # per-delta dicts
    error_slope: float
    error_slope_hw: float
    residual_slope: float
    residual_slope_hw: float

    def to_csv(self, path) -> None:
        cols = list(self.entries[0].keys())
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            writer.writerows(self.entries)


def _svd_forward(svd: SvdFactors, x: np.ndarray) -> np.ndarray:
    return svd.u @ (svd.s * (svd.v.T @ x.ravel()))


def convergence_study(svd: SvdFactors, filter_kind: str,
                      src: SourceCondition, deltas, trials: int = 10,
                      seed: int = 0, c: float = 1.0) -> ConvergenceReport:
    """Empirical error and residual decay of a spectral filter under the
    a-priori parameter choice rule.

    Noise has exact norm delta (random direction), so delta is the true
    noise level.  Slopes are least-squares fits on per-delta medians.
    """
    deltas = sorted(np.asarray(deltas, dtype=float), reverse=True)
    entries = []
    for i, delta in enumerate(deltas):
        alpha = param_choice(delta, src, c)
        errs, resids = [], []
        for t in range(trials):
            sub = seed + 1009 * i + t
            x = make_source_element(svd, src, seed=sub)
            y = _svd_forward(svd, x)
            rng = np.random.default_rng(sub + 31337)
            noise = rng.standard_normal(y.shape)
            y_d = y + delta * noise / np.linalg.norm(noise)
            x_rec = spectral_reconstruct(svd, y_d,
                                         FilterSpec(filter_kind, alpha))
            errs.append(float(np.linalg.norm(x_rec - x)))
            resids.append(float(np.linalg.norm(
                _svd_forward(svd, x_rec) - y_d)))
        entries.append({"delta": delta, "alpha": alpha,
                        "error": float(np.median(errs)),
                        "residual": float(np.median(resids))})
    e_slope, e_hw = fit_loglog_slope([e["delta"] for e in entries],
                                     [e["error"] for e in entries])
    r_slope, r_hw = fit_loglog_slope([e["delta"] for e in entries],
                                     [e["residual"] for e in entries])
    return ConvergenceReport(entries, e_slope, e_hw, r_slope, r_hw)


def nsn_convergence_study(params: nn.NetParams, proj: NullProjector,
                          svd: SvdFactors, filter_kind: str,
                          src: SourceCondition, deltas, trials: int = 10,
                          seed: int = 0, c: float = 1.0):
    """Rate study for the null-space network composed with a spectral filter.

    Test elements are x = f(x0) with x0 from the classical source set; the
    report carries both the learned and the classical errors together with
    the network's layer-norm Lipschitz bound.  Returns (report, lip_bound).
    """
    deltas = sorted(np.asarray(deltas, dtype=float), reverse=True)
    shape = svd.in_shape
    lip = nn.lipschitz_bound(params, shape)

    def f(img):
        return img + project_null(proj, nn.correction(params, img))

    entries = []
    for i, delta in enumerate(deltas):
        alpha = param_choice(delta, src, c)
        errs, cls_errs, resids = [], [], []
        for t in range(trials):
            sub = seed + 1009 * i + t
            x0 = make_source_element(svd, src, seed=sub)
            x = f(x0)
            y = _svd_forward(svd, x0)  # A x = A x0: f only moves the kernel
            rng = np.random.default_rng(sub + 31337)
            noise = rng.standard_normal(y.shape)
            y_d = y + delta * noise / np.linalg.norm(noise)
            x_cls = spectral_reconstruct(svd, y_d,
                                         FilterSpec(filter_kind, alpha))
            x_rec = f(x_cls)
            errs.append(float(np.linalg.norm(x_rec - x)))
            cls_errs.append(float(np.linalg.norm(x_cls - x0)))
            resids.append(float(np.linalg.norm(
                _svd_forward(svd, x_rec) - y_d)))
        entries.append({"delta": delta, "alpha": alpha,
                        "error": float(np.median(errs)),
                        "classical_error": float(np.median(cls_errs)),
                        "residual": float(np.median(resids))})
    e_slope, e_hw = fit_loglog_slope([e["delta"] for e in entries],
                                     [e["error"] for e in entries])
    r_slope, r_hw = fit_loglog_slope([e["delta"] for e in entries],
                                     [e["residual"] for e in entries])
    report = ConvergenceReport(entries, e_slope, e_hw, r_slope, r_hw)
    return report, lip


def save_json_summary(path, payload: dict) -> None:
    """JSON dump with dataclass configs flattened for provenance."""
    def default(obj):
        if hasattr(obj, "__dataclass_fields__"):
            return asdict(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        raise TypeError(f"cannot serialize {type(obj)}")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=default, sort_keys=True)
