"""Recovering the inverse model after the arm's link lengths drift.

``refit`` mode re-estimates the link lengths from a handful of measured
(q, p) pairs and keeps running the coordinated loop against that estimate.
``real`` mode skips the estimate and samples the changed arm directly.
"""

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .core import EmsslConfig, emssl_run, eval_subset, evaluate_distance_error
from .datagen import sample_joint_dataset
from .kinematics import link_jacobian, with_lengths

MODES = ("refit", "real")


class RefitDiverged(RuntimeError):
    pass


@dataclass
class AdaptConfig:
    max_iterations: int = 20
    recovery_factor: float = 1.5
    small_sample: int = 64
    refit_steps: int = 20000
    refit_lr: float = 0.05
    refit_tol: float = 1e-11
    seed: int = 0


@dataclass
class AdaptationReport:
    mode: str
    delta_cm: float
    error_before_cm: float
    error_after_cm: float
    iterations: int
    recovered: bool
    threshold_cm: float
    baseline_error_cm: float
    refit_residuals_cm: list = field(default=None)
    curve: list = field(default_factory=list)

    def to_json(self):
        d = asdict(self)
        if d["refit_residuals_cm"] is None:
            del d["refit_residuals_cm"]
        return json.dumps(d, indent=2)


def refit_loss_and_grad(chain, small_set, lengths=None):
    """Mean squared position residual over ``small_set`` and its gradient in the lengths."""
    Q = np.asarray(small_set.Q, dtype=np.float64)
    J = link_jacobian(chain, Q).reshape(len(Q), 3, chain.n_joints)
    L = chain.lengths_array if lengths is None else np.asarray(lengths, dtype=np.float64)
    return _loss_grad(J, L, np.asarray(small_set.P, dtype=np.float64))


def _loss_grad(J, L, P):
    r = np.einsum("nij,j->ni", J, L) - P
    return float(np.sum(r * r) / len(P)), 2.0 * np.einsum("nij,ni->j", J, r) / len(P)


def refit_forward_model(est_chain, small_set, steps=20000, lr=0.05, tol=1e-11, history=None):
    """Gradient descent on link lengths to fit measured end positions.

    End positions are linear in the lengths, p = J_L(q) L, so the link Jacobians
    are computed once. Stops when the gradient norm drops below ``tol``.
    """
    Q = np.asarray(small_set.Q, dtype=np.float64)
    P = np.asarray(small_set.P, dtype=np.float64)
    if len(Q) == 0:
        raise ValueError("refit needs at least one sample")
    J = link_jacobian(est_chain, Q).reshape(len(Q), 3, est_chain.n_joints)
    L = est_chain.lengths_array.copy()
    prev = np.inf
    rising = 0
    for _ in range(steps):
        loss, grad = _loss_grad(J, L, P)
        if history is not None:
            history.append(loss)
        rising = rising + 1 if loss > prev else 0
        if rising >= 10:
            raise RefitDiverged(f"refit loss rose 10 steps in a row (lr={lr})")
        prev = loss
        if np.linalg.norm(grad) < tol:
            break
        L = L - lr * grad
    return with_lengths(est_chain, L)


def adapt(mlp, normalizers, true_chain, mode, goals, test_positions, baseline_error,
          emssl_config=None, config=None, est_chain=None, delta_cm=None, log=None):
    """Adapt a trained model to ``true_chain``; returns ``(mlp, AdaptationReport)``.

    ``baseline_error`` is the converged mean error before the arm changed; the
    model counts as recovered once its error on ``true_chain`` is within
    ``recovery_factor`` of it. ``est_chain`` is the arm the model was trained on.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    config = config or AdaptConfig()
    emssl_config = emssl_config or EmsslConfig()
    if delta_cm is None and est_chain is not None:
        delta_cm = float(np.mean(true_chain.lengths_array - est_chain.lengths_array))
    mlp = mlp.copy()
    threshold = config.recovery_factor * baseline_error
    # score on the same subset the inner loop reports on
    test_positions = eval_subset(test_positions, emssl_config)
    before = evaluate_distance_error(mlp, normalizers, true_chain, test_positions).mean

    fm_chain = true_chain
    residuals = None
    if mode == "refit":
        if est_chain is None:
            raise ValueError("refit mode needs the pre-change chain as the starting estimate")
        small = sample_joint_dataset(true_chain, config.small_sample, config.seed + 1)
        fm_chain = refit_forward_model(est_chain, small, config.refit_steps, config.refit_lr,
                                       config.refit_tol)
        residuals = (fm_chain.lengths_array - true_chain.lengths_array).tolist()

    iterations = 0
    after = before
    records = []
    if before > threshold and config.max_iterations > 0:
        inner = replace(emssl_config, max_iterations=config.max_iterations,
                        min_iterations=config.max_iterations + 1)
        mlp, curve = emssl_run(inner, fm_chain, goals, test_positions, normalizers, mlp=mlp,
                               eval_chain=true_chain, stop_when=lambda r: r.mean_err_cm <= threshold,
                               log=log)
        records = [asdict(r) for r in curve.records]
        iterations = len(curve)
        after = curve.records[-1].mean_err_cm if iterations else before
    report = AdaptationReport(mode, float(delta_cm or 0.0), float(before), float(after), iterations,
                              bool(after <= threshold), float(threshold), float(baseline_error),
                              residuals, records)
    return mlp, report
