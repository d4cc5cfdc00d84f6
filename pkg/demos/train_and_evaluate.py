"""Train the residual and data-consistent networks, then compare them with
plain Tikhonov on in-distribution and out-of-distribution samples.

The in-distribution patches carry a stripe texture that the regularized
inversion attenuates; the plain residual network learns to repaint it,
which helps on ID data and hurts on OOD data.  The data-consistent network
only edits the unobserved columns and degrades gracefully.
"""

import time

from nsrecon import EvalConfig, TrainConfig, evaluate, train


def main():
    seed = 0
    params = {}
    for kind in ("resnet", "dcnet"):
        cfg = TrainConfig(model_kind=kind, data_seed=seed, init_seed=seed + 1)
        t0 = time.time()
        params[kind], log = train(cfg)
        print(f"trained {kind}: loss {log[0]:.1f} -> {log[-1]:.1f} "
              f"({time.time() - t0:.1f}s, {cfg.epochs} epochs)")

    report = evaluate(params["resnet"], params["dcnet"],
                      EvalConfig(eval_seed=10_000 + seed))
    print("\nmethod      ID PSNR  ID SSIM   OOD PSNR  OOD SSIM")
    for method in ("tikhonov", "resnet", "dcnet"):
        m = report.means[method]
        print(f"{method:10s} {m['ID']['psnr']:8.3f} {m['ID']['ssim']:8.3f} "
              f"{m['OOD']['psnr']:10.3f} {m['OOD']['ssim']:9.3f}")


if __name__ == "__main__":
    main()
