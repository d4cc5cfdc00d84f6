"""Null-space projectors and the null-space network composition."""

import numpy as np
import pytest

from nsrecon.linops import SolverConfig
from nsrecon.nullspace import (NullProjector, iterative_projector,
                               mask_projector, nsn_apply, project_null,
                               regularizing_nsn, unitary_projector)
from nsrecon.operators import (SubsampledUnitarySpec, make_stripe_operator,
                               make_subsampled_unitary)
from nsrecon.regularize import tikhonov_reconstruct


def stripe_problem(n=16):
    op, mask, kept = make_stripe_operator(n, n)
    return op, mask, kept


class TestProjectNull:
    def test_kernel_supported_input_unchanged(self):
        op, mask, kept = stripe_problem()
        proj = mask_projector(op, mask)
        z = np.random.default_rng(0).standard_normal((16, 16))
        z[:, list(kept)] = 0.0
        np.testing.assert_array_equal(proj(z), z)

    def test_unitary_full_index_set_is_zero(self):
        rng = np.random.default_rng(1)
        basis, _ = np.linalg.qr(rng.standard_normal((16, 16)))
        spec = SubsampledUnitarySpec(basis=basis,
                                     kept_indices=tuple(range(16)),
                                     image_shape=(4, 4))
        proj = unitary_projector(make_subsampled_unitary(spec), spec)
        out = proj(rng.standard_normal((4, 4)))
        assert np.max(np.abs(out)) < 1e-12

    def test_iterative_matches_closed_mask(self):
        op, mask, _ = stripe_problem()
        closed = mask_projector(op, mask)
        iterative = iterative_projector(op)
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(50):
            z = rng.standard_normal((16, 16))
            diff = np.linalg.norm(iterative(z) - closed(z))
            worst = max(worst, diff / np.linalg.norm(z))
        assert worst <= 1e-6

    def test_closed_form_invariants(self):
        op, mask, _ = stripe_problem()
        proj = mask_projector(op, mask)
        rng = np.random.default_rng(3)
        for _ in range(10):
            z = rng.standard_normal((16, 16))
            w = rng.standard_normal((16, 16))
            p = proj(z)
            assert np.max(np.abs(proj(p) - p)) <= 1e-10  # idempotent
            assert abs(np.vdot(proj(z), w) -
                       np.vdot(z, proj(w))) <= 1e-10     # self-adjoint
            assert np.max(np.abs(op.apply(p))) <= 1e-10  # annihilated by A

    def test_unitary_invariants(self):
        rng = np.random.default_rng(4)
        basis, _ = np.linalg.qr(rng.standard_normal((16, 16)))
        spec = SubsampledUnitarySpec(basis=basis, kept_indices=(0, 3, 7),
                                     image_shape=(4, 4))
        op = make_subsampled_unitary(spec)
        proj = unitary_projector(op, spec)
        z = rng.standard_normal((4, 4))
        p = proj(z)
        assert np.max(np.abs(proj(p) - p)) <= 1e-10
        assert np.max(np.abs(op.apply(p))) <= 1e-10

    def test_method_validation(self):
        op, mask, _ = stripe_problem()
        with pytest.raises(ValueError):
            NullProjector(method="magic", op=op)
        with pytest.raises(ValueError):
            NullProjector(method="closed_mask", op=op)
        with pytest.raises(ValueError):
            project_null(mask_projector(op, mask), np.zeros((3, 3)))


class TestNsnApply:
    def test_zero_correction_is_identity(self):
        op, mask, _ = stripe_problem()
        proj = mask_projector(op, mask)
        x = np.random.default_rng(5).standard_normal((16, 16))
        np.testing.assert_array_equal(nsn_apply(np.zeros_like, proj, x), x)

    def test_measurement_invariance(self):
        op, mask, _ = stripe_problem()
        proj = mask_projector(op, mask)
        rng = np.random.default_rng(6)

        def u_net(img):
            return np.tanh(img) + 0.5

        for _ in range(10):
            x = rng.standard_normal((16, 16))
            out = nsn_apply(u_net, proj, x)
            assert np.max(np.abs(op.apply(out) - op.apply(x))) <= 1e-12

    def test_residual_preservation(self):
        op, mask, _ = stripe_problem()
        proj = mask_projector(op, mask)
        rng = np.random.default_rng(7)

        def u_net(img):
            return img**2

        for _ in range(100):
            x = rng.standard_normal((16, 16))
            y = rng.standard_normal((16, 16))
            before = np.linalg.norm(op.apply(x) - y)
            after = np.linalg.norm(op.apply(nsn_apply(u_net, proj, x)) - y)
            assert after <= before + 1e-12


class TestRegularizingNsn:
    def test_zero_correction_reduces_to_tikhonov(self):
        op, mask, _ = stripe_problem()
        proj = mask_projector(op, mask)
        y = op.apply(np.random.default_rng(8).random((16, 16)))

        def recon(data):
            return tikhonov_reconstruct(op, data, 0.01).x

        out = regularizing_nsn(np.zeros_like, proj, recon, y)
        np.testing.assert_array_equal(out, recon(y))

    def test_residual_vanishes_with_alpha(self):
        op, mask, _ = stripe_problem()
        proj = mask_projector(op, mask)
        x_true = np.random.default_rng(9).random((16, 16))
        y = op.apply(x_true)  # exact data

        def u_net(img):
            return 0.3 * img + 0.1

        prev = np.inf
        for alpha in (1e-2, 1e-4, 1e-6, 1e-8):
            def recon(data, a=alpha):
                return tikhonov_reconstruct(
                    op, data, a, SolverConfig(tol=1e-13, max_iters=50000)).x
            out = regularizing_nsn(u_net, proj, recon, y)
            res = np.linalg.norm(op.apply(out) - y)
            assert res <= prev * 1.01
            prev = res
        assert prev <= 1e-6

    def test_right_inverse_on_range(self):
        op, mask, kept = stripe_problem()
        proj = mask_projector(op, mask)
        svd_cfg = SolverConfig(tol=1e-13, max_iters=50000)
        y = op.apply(np.random.default_rng(10).random((16, 16)))

        def recon(data):
            # near-exact solve stands in for the pseudo-inverse
            return tikhonov_reconstruct(op, data, 1e-12, svd_cfg).x

        def u_net(img):
            return np.sin(img)

        out = regularizing_nsn(u_net, proj, recon, y)
        assert np.linalg.norm(op.apply(out) - y) <= 1e-6 * np.linalg.norm(y)
