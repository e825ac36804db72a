import numpy as np

from emssl.baselines import distal_loss_and_grads, train_direct, train_distal
from emssl.core import evaluate_distance_error
from emssl.datagen import fit_normalizers, sample_joint_dataset
from emssl.kinematics import DEFAULT6, fk, make_chain
from emssl.neuralnet import forward, init_mlp

from conftest import SPATIAL3


def _flat(g):
    return np.concatenate([a.ravel() for pair in zip(g.weights, g.biases) for a in pair])


def _set(mlp, theta):
    k = 0
    for arrs in zip(mlp.weights, mlp.biases):
        for a in arrs:
            a[...] = theta[k:k + a.size].reshape(a.shape)
            k += a.size


def composed_loss(mlp, norms, chain, goals):
    """Task-space loss evaluated without any of the analytic gradient machinery."""
    q = norms.joint_lo + forward(mlp, norms.normalize_pos(goals)) * norms.joint_scale
    r = goals - np.array([fk(chain, qi) for qi in q])
    return np.sum(r * r) / len(goals)


def test_distal_gradient_matches_finite_differences():
    for case in range(10):
        chain = [DEFAULT6, SPATIAL3][case % 2]
        norms = fit_normalizers(chain)
        mlp = init_mlp([3, 6, chain.n_joints], case)
        goals = sample_joint_dataset(chain, 4, case + 50).P
        loss, grads = distal_loss_and_grads(mlp, norms, chain, goals)
        assert np.isclose(loss, composed_loss(mlp, norms, chain, goals), rtol=1e-12)
        theta = _flat(mlp).copy()
        h = 1e-6
        fd = np.empty_like(theta)
        for j in range(theta.size):
            for sgn, store in ((1, 0), (-1, 1)):
                t = theta.copy()
                t[j] += sgn * h
                mm = mlp.copy()
                _set(mm, t)
                val = composed_loss(mm, norms, chain, goals)
                fd[j] = val if store == 0 else (fd[j] - val) / (2 * h)
        g = _flat(grads)
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) <= 1e-4, case


def test_distal_zero_gradient_at_solved_goal():
    chain = make_chain(2, "ZZ", [10.0, 10.0], (-np.pi, np.pi))
    norms = fit_normalizers(chain)
    mlp = init_mlp([3, 5, 2], 0)
    # constant output: the model answers q0 for every goal, so fk(q0) is solved exactly
    mlp.weights[-1][...] = 0.0
    mlp.biases[-1][...] = [0.3, -0.4]
    q0 = norms.joint_lo + forward(mlp, np.zeros((1, 3))) * norms.joint_scale
    goal = fk(chain, q0)
    loss, grads = distal_loss_and_grads(mlp, norms, chain, goal)
    assert loss <= 1e-24
    assert np.abs(_flat(grads)).max() <= 1e-10


def test_direct_zero_epochs(one_link_data):
    chain, norms, data, _ = one_link_data
    m = init_mlp([3, 8, 1], 0)
    ref = m.copy()
    assert train_direct(m, data, norms, 0, 32, 0.001, 0) == []
    assert all(a.tobytes() == b.tobytes() for a, b in zip(m.weights, ref.weights))


def test_direct_one_link_under_one_percent(one_link_data):
    chain, norms, data, test = one_link_data
    m = init_mlp([3, 64, 64, 1], 0)
    train_direct(m, data, norms, 500, 64, 0.001, 0)
    assert evaluate_distance_error(m, norms, chain, test.P).mean < 0.01 * chain.reach


def test_distal_one_link_under_one_percent(one_link_data):
    chain, norms, data, test = one_link_data
    m = init_mlp([3, 64, 64, 1], 0)
    train_distal(m, norms, chain, data.P, 500, 64, 0.001, 0)
    assert evaluate_distance_error(m, norms, chain, test.P).mean < 0.01 * chain.reach


def test_baselines_deterministic(one_link_data):
    chain, norms, data, _ = one_link_data
    runs = []
    for _ in range(2):
        m = init_mlp([3, 8, 1], 3)
        train_distal(m, norms, chain, data.P[:200], 2, 32, 0.001, 9)
        train_direct(m, data, norms, 2, 32, 0.001, 9)
        runs.append(_flat(m))
    assert runs[0].tobytes() == runs[1].tobytes()
