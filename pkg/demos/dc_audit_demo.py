"""Measurement-residual audit: does a learned post-processor preserve the
data fit of its input reconstruction?

For the data-consistent network the residual is unchanged to rounding
(the correction lives in the kernel of A).  The plain residual network is
free to move the residual, which on out-of-distribution data usually means
hallucinated structure.
"""

from nsrecon import EvalConfig, TrainConfig, dc_audit, train


def main():
    params = {}
    for kind in ("resnet", "dcnet"):
        cfg = TrainConfig(model_kind=kind, data_seed=0, init_seed=1)
        params[kind], _ = train(cfg)

    cfg = EvalConfig()
    for kind in ("dcnet", "resnet"):
        rows = dc_audit(params[kind], kind, n=10, seed=777, cfg=cfg)
        print(f"\n{kind}: residual of model output vs its Tikhonov input")
        print("kind  tikhonov    model       relative gap")
        for r in rows:
            gap = abs(r["residual_model"] - r["residual_tikhonov"])
            print(f"{r['kind']:4s}  {r['residual_tikhonov']:.6f}  "
                  f"{r['residual_model']:.6f}  {gap / r['y_norm']:.2e}")


if __name__ == "__main__":
    main()
