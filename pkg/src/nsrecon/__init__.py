"""Data-consistent learned reconstruction for linear inverse problems.

Classical spectral regularization (Tikhonov, TSVD, Landweber filters,
pseudo-inverses, null-space projectors) plus a small from-scratch residual
CNN whose correction is confined to the null space of the forward operator,
so the learned reconstruction keeps the measurement residual of its
classical initialization exactly.
"""

from .linops import (CgResult, LinOp, MatvecOp, PowerResult, SolverConfig,
                     SvdFactors, adjoint_check, cg_regularized_normal,
                     dense_svd, landweber_nullproject, operator_norm,
                     pseudo_inverse_apply)
from .operators import (StripeMaskSpec, SubsampledUnitarySpec, compose,
                        dense_op, identity, make_cumsum, make_stripe_operator,
                        make_stripe_mask, make_subsampled_unitary,
                        operator_svd, to_dense)
from .regularize import (FILTER_QUALIFICATION, FilterSpec, SourceCondition,
                         filter_value, make_source_element, param_choice,
                         spectral_reconstruct, tikhonov_reconstruct)
from .nullspace import (NullProjector, iterative_projector, mask_projector,
                        nsn_apply, project_null, regularizing_nsn,
                        unitary_projector)
from .metrics import SsimConfig, mse, psnr, ssim
from .data import (NoiseSpec, Sample, SampleSpec, export_dataset,
                   gen_measurement, gen_square_sample, make_dataset,
                   read_pgm16, write_pgm16)
from .experiments import (ConvergenceReport, EvalConfig, EvalReport, Problem,
                          TrainConfig, convergence_study, dc_audit, evaluate,
                          fit_loglog_slope, make_rate_operator,
                          nsn_convergence_study, train)

__version__ = "0.1.0"
