"""Command-line interface.

Subcommands: gen-data, train, eval, dc-audit, rates.  Each accepts --seed,
--out DIR and --config FILE, where the config is flat key=value text.
Outputs are CSV tables, 16-bit PGM image dumps, and a JSON summary echoing
the effective configuration.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import nn
from .data import export_dataset, make_dataset, write_pgm16
from .experiments import (EvalConfig, Problem, TrainConfig, convergence_study,
                          dc_audit, evaluate, make_rate_operator,
                          reconstruct_all, save_json_summary, train)
from .regularize import SourceCondition


def parse_config_file(path) -> dict:
    """Flat key=value config; '#' starts a comment, blank lines ignored."""
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            cfg[key.strip()] = value.strip()
    return cfg


def _get(cfg, key, cast, default):
    return cast(cfg[key]) if key in cfg else default


def _common(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--config", default=None, help="key=value config file")


def cmd_gen_data(args, cfg):
    n = _get(cfg, "n", int, 20)
    kind = _get(cfg, "kind", str, "ID")
    sigma = _get(cfg, "sigma", float, 0.05)
    image_size = _get(cfg, "image_size", int, 64)
    patch_size = _get(cfg, "patch_size", int, 20)
    problem = Problem.benchmark(image_size)
    samples = make_dataset(n, kind, args.seed, problem.op,
                           sigma=sigma * problem.sigma_scale,
                           support=problem.support, image_size=image_size,
                           patch_size=patch_size)
    manifest = export_dataset(samples, args.out)
    save_json_summary(os.path.join(args.out, "summary.json"), {
        "command": "gen-data", "seed": args.seed, "n": n, "kind": kind,
        "sigma": sigma, "image_size": image_size, "patch_size": patch_size,
        "manifest": manifest})


def cmd_train(args, cfg):
    tc = TrainConfig(
        epochs=_get(cfg, "epochs", int, 100),
        lr=_get(cfg, "lr", float, 1e-3),
        weight_decay=_get(cfg, "weight_decay", float, 1e-4),
        alpha_tik=_get(cfg, "alpha_tik", float, 0.01),
        sigma=_get(cfg, "sigma", float, 0.05),
        image_size=_get(cfg, "image_size", int, 64),
        model_kind=_get(cfg, "model_kind", str, "resnet"),
        data_seed=args.seed,
        init_seed=args.seed + _get(cfg, "init_seed_offset", int, 1),
        arch=nn.Architecture(layers=_get(cfg, "layers", int, 5),
                             width=_get(cfg, "width", int, 6)))
    params, log = train(tc)
    ckpt = os.path.join(args.out, f"{tc.model_kind}.ckpt")
    nn.save_params(ckpt, tc.arch, params)
    with open(os.path.join(args.out, "loss.csv"), "w") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(log):
            fh.write(f"{i},{loss:.17g}\n")
    save_json_summary(os.path.join(args.out, "summary.json"), {
        "command": "train", "seed": args.seed, "config": tc,
        "checkpoint": ckpt,
        "final_loss": log[-1] if log else None})


def _load_ckpt(path):
    arch, params = nn.load_params(path)
    return params


def cmd_eval(args, cfg):
    ec = EvalConfig(
        n_per_kind=_get(cfg, "n_per_kind", int, 20),
        eval_seed=args.seed + 10_000,
        sigma=_get(cfg, "sigma", float, 0.05),
        alpha_tik=_get(cfg, "alpha_tik", float, 0.01),
        image_size=_get(cfg, "image_size", int, 64))
    params_resnet = _load_ckpt(cfg["resnet_ckpt"])
    params_dcnet = _load_ckpt(cfg["dcnet_ckpt"])
    problem = Problem.benchmark(ec.image_size)
    report = evaluate(params_resnet, params_dcnet, ec, problem)
    report.to_csv(os.path.join(args.out, "eval.csv"))

    # image dumps: ground truth / tikhonov / resnet / dcnet for a few samples
    n_dump = _get(cfg, "n_dump", int, 3)
    from .data import make_dataset as _mk
    samples = _mk(n_dump, "ID", ec.eval_seed, problem.op,
                  sigma=ec.sigma * problem.sigma_scale,
                  support=problem.support, image_size=ec.image_size)
    for i, s in enumerate(samples):
        recs = reconstruct_all(problem, ec, s, params_resnet, params_dcnet)
        write_pgm16(os.path.join(args.out, f"sample{i}_truth.pgm"), s.x)
        for name, img in recs.items():
            write_pgm16(os.path.join(args.out, f"sample{i}_{name}.pgm"), img)
    save_json_summary(os.path.join(args.out, "summary.json"), {
        "command": "eval", "seed": args.seed, "config": ec,
        "means": report.means})


def cmd_dc_audit(args, cfg):
    model_kind = _get(cfg, "model_kind", str, "dcnet")
    n = _get(cfg, "n", int, 40)
    params = _load_ckpt(cfg["ckpt"])
    ec = EvalConfig(sigma=_get(cfg, "sigma", float, 0.05),
                    alpha_tik=_get(cfg, "alpha_tik", float, 0.01),
                    image_size=_get(cfg, "image_size", int, 64))
    rows = dc_audit(params, model_kind, n, args.seed, ec)
    with open(os.path.join(args.out, "dc_audit.csv"), "w") as fh:
        fh.write("kind,seed,residual_tikhonov,residual_model,y_norm\n")
        for r in rows:
            fh.write(f"{r['kind']},{r['seed']},{r['residual_tikhonov']:.17g},"
                     f"{r['residual_model']:.17g},{r['y_norm']:.17g}\n")
    max_rel = max(abs(r["residual_model"] - r["residual_tikhonov"])
                  / r["y_norm"] for r in rows)
    save_json_summary(os.path.join(args.out, "summary.json"), {
        "command": "dc-audit", "seed": args.seed, "model_kind": model_kind,
        "n": n, "max_relative_residual_gap": max_rel})


def cmd_rates(args, cfg):
    mu = _get(cfg, "mu", float, 0.5)
    rho = _get(cfg, "rho", float, 1.0)
    filter_kind = _get(cfg, "filter", str, "tikhonov")
    trials = _get(cfg, "trials", int, 10)
    c = _get(cfg, "c", float, 1.0)
    n_deltas = _get(cfg, "n_deltas", int, 5)
    deltas = np.geomspace(_get(cfg, "delta_max", float, 1e-1),
                          _get(cfg, "delta_min", float, 1e-5), n_deltas)
    _, svd = make_rate_operator(seed=args.seed)
    src = SourceCondition(mu=mu, rho=rho)
    report = convergence_study(svd, filter_kind, src, deltas, trials,
                               seed=args.seed, c=c)
    report.to_csv(os.path.join(args.out, "rates.csv"))
    save_json_summary(os.path.join(args.out, "summary.json"), {
        "command": "rates", "seed": args.seed, "mu": mu, "rho": rho,
        "filter": filter_kind, "trials": trials, "c": c,
        "error_slope": report.error_slope,
        "error_slope_halfwidth": report.error_slope_hw,
        "residual_slope": report.residual_slope,
        "residual_slope_halfwidth": report.residual_slope_hw,
        "theory_error_slope": 2 * mu / (2 * mu + 1)})


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "dc-audit": cmd_dc_audit,
    "rates": cmd_rates,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nsrecon",
        description="Data-consistent learned reconstruction experiments")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _common(subs.add_parser(name))
    args = parser.parse_args(argv)
    cfg = parse_config_file(args.config) if args.config else {}
    try:
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](args, cfg)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"nsrecon {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
