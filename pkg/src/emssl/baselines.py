"""Comparison trainers: direct regression and distal supervised learning."""

import numpy as np

from .kinematics import fk, joint_jacobian
from .neuralnet import _backprop, _trace, adam_init, adam_step, fit_pairs
from .rng import make_rng


def train_direct(mlp, train_set, normalizers, epochs, batch_size, lr, seed, adam=None):
    """Regress babbled joint angles on their end positions; returns per-epoch losses."""
    if len(train_set) == 0:
        raise ValueError("empty training set")
    adam = adam or adam_init(mlp, lr)
    X = normalizers.normalize_pos(train_set.P)
    Y = normalizers.normalize_joints(train_set.Q)
    return fit_pairs(mlp, adam, X, Y, epochs, batch_size, make_rng(seed, "direct"))


def distal_loss_and_grads(mlp, normalizers, chain, goals):
    """Mean squared task-space residual (cm^2) and its parameter gradients.

    The residual gradient runs back through the analytic joint Jacobian, the
    joint denormalisation scale and then the network.
    """
    X = normalizers.normalize_pos(goals)
    acts = _trace(mlp, X)
    Y = acts[-1]
    q = normalizers.joint_lo + Y * normalizers.joint_scale
    p = fk(chain, q)
    J = joint_jacobian(chain, q).reshape(len(q), 3, chain.n_joints)
    r = goals - p
    n = len(goals)
    loss = float(np.sum(r * r) / n)
    dL_dq = -2.0 * np.einsum("nij,ni->nj", J, r) / n
    grads = _backprop(mlp, acts, dL_dq * normalizers.joint_scale)
    return loss, grads


def train_distal(mlp, normalizers, chain, goals, epochs, batch_size, lr, seed, adam=None):
    goals = np.asarray(goals, dtype=np.float64)
    if len(goals) == 0:
        raise ValueError("empty goal set")
    adam = adam or adam_init(mlp, lr)
    rng = make_rng(seed, "distal")
    losses = []
    for _ in range(epochs):
        order = rng.permutation(len(goals))
        total = 0.0
        for start in range(0, len(goals), batch_size):
            loss, grads = distal_loss_and_grads(mlp, normalizers, chain,
                                                goals[order[start:start + batch_size]])
            adam_step(mlp, adam, grads)
            total += loss
        losses.append(total / -(-len(goals) // batch_size))
    return losses
