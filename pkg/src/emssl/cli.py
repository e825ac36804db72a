"""Command-line driver: gen-data, train, eval, bench, adapt.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace

from . import _accel, bench, config as cfgmod
from .adaptation import MODES, adapt
from .core import eval_subset, evaluate_distance_error
from .datagen import fit_normalizers, read_csv, sample_joint_dataset, write_csv
from .experiments import make_datasets, train_model
from .kinematics import KinematicChain, perturb_link_lengths
from .neuralnet import init_mlp, load_checkpoint, save_checkpoint

log = logging.getLogger("emssl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(obj):
    print(json.dumps(obj, sort_keys=True))


def _outdir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {path}: {exc.strerror}") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _load_cfg(args):
    cfg = cfgmod.load(args.config)
    if args.seed is not None:
        cfg = replace(cfg, data_seed=args.seed) if args.command == "gen-data" else \
            replace(cfg, emssl=replace(cfg.emssl, seed=args.seed))
    if getattr(args, "method", None):
        cfg = replace(cfg, method=args.method)
    return cfg.validate()


def _read_split(data_dir):
    paths = [os.path.join(data_dir, f"{name}.csv") for name in ("train", "test")]
    for p in paths:
        if not os.path.exists(p):
            raise UsageError(f"missing dataset {p}; run gen-data first")
    return read_csv(paths[0]), read_csv(paths[1])


def cmd_gen_data(args):
    cfg = _load_cfg(args)
    out = _outdir(args.out)
    train, test = make_datasets(cfg)
    write_csv(os.path.join(out, "train.csv"), train)
    write_csv(os.path.join(out, "test.csv"), test)
    cfg.dump(os.path.join(out, "config.json"))
    _emit({"train_rows": len(train), "test_rows": len(test), "out": out})


def cmd_train(args):
    cfg = _load_cfg(args)
    out = _outdir(args.out)
    train, test = _read_split(args.data or out)
    chain = cfg.make_chain()
    if train.Q.shape[1] != chain.n_joints:
        raise UsageError(f"dataset has {train.Q.shape[1]} joints, chain has {chain.n_joints}")
    mlp, normalizers, curve, metrics = train_model(
        cfg, train, test, chain=chain,
        log=lambda r: log.info("iter %d  mean %.3f cm  max %.3f cm  gap %.5f",
                               r.iteration, r.mean_err_cm, r.max_err_cm, r.consistency_gap))
    save_checkpoint(os.path.join(out, "model.json"), mlp, normalizers,
                    {"method": cfg.method, "chain": chain.to_dict()})
    curve.write_csv(os.path.join(out, "curve.csv"))
    with open(os.path.join(out, "metrics.json"), "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    cfg.dump(os.path.join(out, "config.json"))
    _emit(metrics)


def _checkpoint(path):
    if not path:
        raise UsageError("--checkpoint is required")
    if not os.path.exists(path):
        raise UsageError(f"checkpoint {path} not found")
    try:
        return load_checkpoint(path)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"corrupt checkpoint {path}: {exc}") from None


def cmd_eval(args):
    mlp, normalizers, meta = _checkpoint(args.checkpoint)
    if args.config:
        chain = cfgmod.load(args.config).make_chain()
    elif "chain" in meta:
        chain = KinematicChain.from_dict(meta["chain"])
    else:
        raise UsageError("no chain spec: pass --config")
    if mlp.layer_dims[-1] != chain.n_joints:
        raise UsageError(f"checkpoint outputs {mlp.layer_dims[-1]} joints, chain has {chain.n_joints}")
    data_path = args.data or os.path.join(os.path.dirname(args.checkpoint), "test.csv")
    if os.path.isdir(data_path):
        data_path = os.path.join(data_path, "test.csv")
    if not os.path.exists(data_path):
        raise UsageError(f"test set {data_path} not found")
    test = read_csv(data_path)
    normalizers = normalizers or fit_normalizers(chain)
    err = evaluate_distance_error(mlp, normalizers, chain, test.P)
    metrics = {"n": len(test), **err.summary()}
    if args.out:
        with open(os.path.join(_outdir(args.out), "eval.json"), "w") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _emit(metrics)


def cmd_bench(args):
    cfg = _load_cfg(args)
    out = _outdir(args.out)
    chain = cfg.make_chain()
    bc = cfg.bench
    if args.checkpoint:
        mlp, normalizers, _ = _checkpoint(args.checkpoint)
        normalizers = normalizers or fit_normalizers(chain)
    else:
        dims = list(bc.layer_dims[:-1]) + [chain.n_joints]
        mlp, normalizers = init_mlp(dims, cfg.emssl.seed), fit_normalizers(chain)
    n_goals = bc.n_goals or cfg.n_train
    goals = sample_joint_dataset(chain, n_goals, cfg.data_seed).P
    K = cfg.emssl.n_workers
    M_R = cfg.emssl.infer_batch
    mode = args.mode or "strategies"
    if mode == "strategies":
        timings = bench.time_strategies(mlp, normalizers, chain, goals, M_R, K, bc.repeats)
        bench.write_strategy_csv(os.path.join(out, "strategies.csv"), timings)
        result = {t.strategy: t.median_s for t in timings}
    elif mode == "batch-sweep":
        points = bench.sweep_batch(mlp, normalizers, chain, goals, bc.batch_sizes, K, bc.repeats)
        bench.write_sweep_csv(os.path.join(out, "batch_sweep.csv"), points, "batch_size")
        result = {str(p.x): p.median_s for p in points}
    elif mode == "thread-sweep":
        points, cores = bench.sweep_threads(mlp, normalizers, chain, goals, bc.thread_counts, M_R,
                                            bc.repeats)
        bench.write_sweep_csv(os.path.join(out, "thread_sweep.csv"), points, "threads")
        result = {"cores": cores, **{str(p.x): p.median_s for p in points}}
    else:
        raise UsageError(f"unknown bench mode {mode!r}")
    cfg.dump(os.path.join(out, "config.json"))
    _emit({"mode": mode, "n_goals": n_goals, "layer_dims": mlp.layer_dims,
           "backend": _accel.BACKEND, "median_s": result})


def cmd_adapt(args):
    cfg = _load_cfg(args)
    out = _outdir(args.out)
    mlp, normalizers, _ = _checkpoint(args.checkpoint)
    base = cfg.make_chain()
    normalizers = normalizers or fit_normalizers(base)
    mode = args.mode or "real"
    if mode not in MODES:
        raise UsageError(f"--mode must be one of {MODES} for adapt")
    delta = float(args.delta_cm or 0.0)
    _, test = make_datasets(cfg, base)
    baseline = evaluate_distance_error(mlp, normalizers, base, eval_subset(test.P, cfg.emssl)).mean
    try:
        true_chain = perturb_link_lengths(base, delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    # same babbled joint angles, positions re-measured on the changed arm
    new_train, new_test = make_datasets(cfg, true_chain)
    _, report = adapt(mlp, normalizers, true_chain, mode, new_train.P, new_test.P, baseline,
                      emssl_config=cfg.emssl, config=cfg.adapt, est_chain=base, delta_cm=delta)
    name = f"adapt_{mode}_{delta:g}cm.json"
    with open(os.path.join(out, name), "w") as fh:
        fh.write(report.to_json() + "\n")
    cfg.dump(os.path.join(out, "config.json"))
    if not args.quiet:
        print(f"{'Length change (cm)':>18} {'Before (cm)':>12} {'After (cm)':>11} {'Iteration':>9}",
              file=sys.stderr)
        print(f"{delta:>18.2f} {report.error_before_cm:>12.2f} {report.error_after_cm:>11.2f} "
              f"{report.iterations:>9d}", file=sys.stderr)
    summary = {k: v for k, v in asdict(report).items() if k != "curve"}
    _emit(summary)


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "eval": cmd_eval,
            "bench": cmd_bench, "adapt": cmd_adapt}


def build_parser():
    p = _Parser(prog="emssl", description="Inverse-kinematics learning by coordinated sampling and training.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", default=None if name == "eval" else "desk",
                       help="preset name (desk, paper) or JSON file")
        s.add_argument("--out", default=None if name == "eval" else "runs/latest")
        s.add_argument("--seed", type=int)
        s.add_argument("--quiet", action="store_true")
        if name == "train":
            s.add_argument("--method", choices=("emssl", "direct", "distal"))
        if name in ("train", "eval"):
            s.add_argument("--data", help="dataset directory (train) or test CSV (eval)")
        if name in ("eval", "bench", "adapt"):
            s.add_argument("--checkpoint")
        if name in ("bench", "adapt"):
            s.add_argument("--mode")
        if name == "adapt":
            s.add_argument("--delta-cm", type=float, default=0.0)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"emssl: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args)
    except (UsageError, cfgmod.ConfigError) as exc:
        print(f"emssl: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"emssl: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
