"""End-to-end pipelines shared by the CLI and the acceptance suite."""

import time

from .baselines import train_direct, train_distal
from .core import (CurveRecord, LearningCurve, consistency_gap, emssl_run, eval_subset,
                   evaluate_distance_error)
from .datagen import fit_normalizers, sample_joint_dataset, split
from .neuralnet import adam_init, init_mlp


def make_datasets(cfg, chain=None):
    """Motor-babbling corpus split into ``(train, test)`` as the config describes."""
    chain = chain or cfg.make_chain()
    data = sample_joint_dataset(chain, cfg.n_samples, cfg.data_seed)
    return split(data, cfg.n_train, cfg.data_seed)


def _baseline_curve(method, cfg, chain, mlp, normalizers, train, test, log=None):
    ec = cfg.emssl
    adam = adam_init(mlp, ec.lr)
    evals = eval_subset(test.P, ec)
    curve = LearningCurve(method=method)
    chunks = -(-cfg.baseline_epoch_budget() // ec.epochs)
    remaining = cfg.baseline_epoch_budget()
    for k in range(1, chunks + 1):
        epochs = min(ec.epochs, remaining)
        remaining -= epochs
        t0 = time.perf_counter()
        # distinct stream per chunk keeps shuffles independent of the chunking
        if method == "direct":
            train_direct(mlp, train, normalizers, epochs, ec.train_batch, ec.lr,
                         ec.seed * 1000003 + k, adam)
        else:
            train_distal(mlp, normalizers, chain, train.P, epochs, ec.train_batch, ec.lr,
                         ec.seed * 1000003 + k, adam)
        t1 = time.perf_counter()
        err = evaluate_distance_error(mlp, normalizers, chain, evals, ec.infer_batch)
        gap = consistency_gap(mlp, normalizers, chain, evals, ec.infer_batch)
        rec = CurveRecord(k, err.mean, err.max, gap, 0.0, round(t1 - t0, 3))
        curve.records.append(rec)
        if log:
            log(rec)
    return curve


def train_model(cfg, train, test, method=None, chain=None, log=None):
    """Train one inverse model; returns ``(mlp, normalizers, curve, metrics)``."""
    method = method or cfg.method
    chain = chain or cfg.make_chain()
    normalizers = fit_normalizers(chain)
    mlp = init_mlp(cfg.layer_dims, cfg.emssl.seed)
    if method == "emssl":
        mlp, curve = emssl_run(cfg.emssl, chain, train.P, test.P, normalizers, mlp=mlp, log=log)
        curve.method = "emssl"
        iterations = len(curve)
    elif method in ("direct", "distal"):
        curve = _baseline_curve(method, cfg, chain, mlp, normalizers, train, test, log)
        iterations = len(curve)
    else:
        raise ValueError(f"unknown method {method!r}")
    err = evaluate_distance_error(mlp, normalizers, chain, test.P, cfg.emssl.infer_batch)
    metrics = {"method": method, "iterations": iterations, **err.summary()}
    return mlp, normalizers, curve, metrics
