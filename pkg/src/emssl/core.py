"""Coordinated sampling and training of the inverse model.

One iteration:

1. Sampling. The inverse model proposes joint angles for every goal (batched
   inference), and the forward model computes where those angles actually put
   the end effector (worker pool).
2. Training. The model learns to map each reached position back to the angles
   that produced it.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .kinematics import fk
from .neuralnet import adam_init, fit_pairs, forward, init_mlp, n_batches
from .rng import make_rng


@dataclass
class EmsslConfig:
    max_iterations: int = 200
    epochs: int = 10
    infer_batch: int = 512
    train_batch: int = 128
    workers: int = 0  # 0 -> min(6, cpu count)
    lr: float = 0.0015
    early_stop_window: int = 5
    early_stop_tol: float = 1e-3
    min_iterations: int = 20
    eval_size: int = 2000
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "infer_batch", "train_batch", "early_stop_window", "eval_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_iterations < 0 or self.workers < 0 or self.lr <= 0:
            raise ValueError("max_iterations and workers must be >= 0 and lr > 0")

    @property
    def n_workers(self):
        return self.workers or default_workers()


def default_workers():
    return max(1, min(6, os.cpu_count() or 1))


@dataclass
class SampleSet:
    Q: np.ndarray
    P: np.ndarray
    iteration: int = 0

    def __len__(self):
        return len(self.Q)


@dataclass
class CurveRecord:
    iteration: int
    mean_err_cm: float
    max_err_cm: float
    consistency_gap: float
    t_sample_s: float
    t_train_s: float


@dataclass
class LearningCurve:
    records: list = field(default_factory=list)
    method: str = "emssl"

    CSV_FIELDS = ("iteration", "mean_err_cm", "max_err_cm", "consistency_gap",
                  "t_sample_s", "t_train_s")

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def write_csv(self, path, timings=True):
        fields = self.CSV_FIELDS if timings else self.CSV_FIELDS[:4]
        with open(path, "w") as fh:
            fh.write(",".join(fields) + "\n")
            for r in self.records:
                row = asdict(r)
                fh.write(",".join(_fmt(row[f]) for f in fields) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class DistanceError:
    mean: float
    max: float
    per_sample: np.ndarray

    def summary(self):
        e = self.per_sample
        return {"mean_err_cm": float(e.mean()), "max_err_cm": float(e.max()),
                "p50_err_cm": float(np.percentile(e, 50)),
                "p95_err_cm": float(np.percentile(e, 95))}


# ------------------------------------------------------------------ sampling


def infer_joints(mlp, normalizers, goals):
    """Joint angles (radians) the model proposes for a block of goals."""
    return normalizers.denormalize_joints(forward(mlp, normalizers.normalize_pos(goals)))


def batch_infer(mlp, normalizers, goals, batch_size):
    goals = np.asarray(goals, dtype=np.float64)
    if goals.ndim != 2 or len(goals) == 0:
        raise ValueError("batch_infer needs a non-empty (n, 3) goal matrix")
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    out = np.empty((len(goals), len(normalizers.joint_lo)))
    for start in range(0, len(goals), batch_size):
        out[start:start + batch_size] = infer_joints(mlp, normalizers, goals[start:start + batch_size])
    return out


def sequential_fm(chain, Q):
    return fk(chain, np.asarray(Q, dtype=np.float64).reshape(-1, chain.n_joints))


def parallel_fm(chain, Q, workers, pool=None):
    """Forward model over the rows of ``Q`` on ``workers`` threads.

    Rows are cut into contiguous shards and each shard is written into its own
    slice of the output, so row order never depends on completion order.
    """
    Q = np.asarray(Q, dtype=np.float64).reshape(-1, chain.n_joints)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    P = np.empty((len(Q), 3))
    if len(Q) == 0:
        return P
    if workers == 1:
        P[:] = fk(chain, Q)
        return P
    bounds = np.linspace(0, len(Q), min(workers, len(Q)) + 1).astype(int)

    def run(k):
        lo, hi = bounds[k], bounds[k + 1]
        P[lo:hi] = fk(chain, Q[lo:hi])

    if pool is None:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(run, range(len(bounds) - 1)))
    else:
        list(pool.map(run, range(len(bounds) - 1)))
    return P


def sampling_round(mlp, normalizers, chain, goals, config, iteration=0, pool=None):
    Q = batch_infer(mlp, normalizers, goals, config.infer_batch)
    P = parallel_fm(chain, Q, config.n_workers, pool)
    return SampleSet(Q, P, iteration)


# ------------------------------------------------------------------ training


def train_phase(mlp, adam, data, epochs, batch_size, normalizers, rng):
    """Fit the model to map reached positions back to the angles that reached them."""
    if len(data) == 0:
        raise ValueError("empty sample set")
    X = normalizers.normalize_pos(data.P)
    Y = normalizers.normalize_joints(data.Q)
    return fit_pairs(mlp, adam, X, Y, epochs, batch_size, rng)


def distance_errors(inverse, chain, goals):
    """Task-space error of any inverse map ``inverse(goals) -> Q`` on ``chain``."""
    goals = np.asarray(goals, dtype=np.float64)
    if len(goals) == 0:
        raise ValueError("empty test set")
    e = np.linalg.norm(fk(chain, inverse(goals)) - goals, axis=1)
    return DistanceError(float(e.mean()), float(e.max()), e)


def evaluate_distance_error(mlp, normalizers, chain, goals, batch_size=512):
    return distance_errors(lambda g: batch_infer(mlp, normalizers, g, batch_size), chain, goals)


def consistency_gap(mlp, normalizers, chain, goals, batch_size=512):
    """Mean normalised-joint distance between IM(p*) and IM(FM(IM(p*)))."""
    goals = np.asarray(goals, dtype=np.float64)
    if len(goals) == 0:
        raise ValueError("empty goal set")
    Q = batch_infer(mlp, normalizers, goals, batch_size)
    Q2 = batch_infer(mlp, normalizers, fk(chain, Q), batch_size)
    y1 = normalizers.normalize_joints(Q)
    y2 = normalizers.normalize_joints(Q2)
    return float(np.linalg.norm(y1 - y2, axis=1).mean())


def eval_subset(test_positions, config):
    test_positions = np.asarray(test_positions, dtype=np.float64)
    if len(test_positions) <= config.eval_size:
        return test_positions
    idx = np.sort(make_rng(config.seed, "eval").choice(len(test_positions), config.eval_size,
                                                      replace=False))
    return test_positions[idx]


def _should_stop(errors, config):
    if len(errors) < max(config.min_iterations, config.early_stop_window + 1):
        return False
    recent = errors[-config.early_stop_window - 1:]
    gains = [(a - b) / a if a > 0 else 0.0 for a, b in zip(recent[:-1], recent[1:])]
    return all(g < config.early_stop_tol for g in gains)


def emssl_run(config, chain, goals, test_positions, normalizers, mlp=None, layer_dims=None,
              eval_chain=None, stop_when=None, log=None):
    """Run the coordinated loop; returns ``(mlp, LearningCurve)``.

    ``chain`` is the forward model used for sampling, ``eval_chain`` the arm the
    model is scored on (defaults to ``chain``). ``stop_when(record)`` ends the run
    early when it returns True.
    """
    goals = np.asarray(goals, dtype=np.float64)
    if len(goals) == 0:
        raise ValueError("goal set U is empty")
    if mlp is None:
        mlp = init_mlp(layer_dims or [3, 128, 64, chain.n_joints], config.seed)
    eval_chain = eval_chain or chain
    adam = adam_init(mlp, config.lr)
    test = eval_subset(test_positions, config)
    curve = LearningCurve()
    errors = []
    workers = config.n_workers
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for t in range(1, config.max_iterations + 1):
            t0 = time.perf_counter()
            data = sampling_round(mlp, normalizers, chain, goals, config, t, pool)
            t1 = time.perf_counter()
            train_phase(mlp, adam, data, config.epochs, config.train_batch, normalizers,
                        make_rng(config.seed, "train", t))
            t2 = time.perf_counter()
            err = evaluate_distance_error(mlp, normalizers, eval_chain, test, config.infer_batch)
            gap = consistency_gap(mlp, normalizers, eval_chain, test, config.infer_batch)
            rec = CurveRecord(t, err.mean, err.max, gap, round(t1 - t0, 3), round(t2 - t1, 3))
            curve.records.append(rec)
            errors.append(err.mean)
            if log:
                log(rec)
            if stop_when is not None and stop_when(rec):
                break
            if _should_stop(errors, config):
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return mlp, curve


def steps_per_iteration(n_goals, config):
    return config.epochs * n_batches(n_goals, config.train_batch)
