import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emssl.kinematics import (DEFAULT6, ChainError, default6, fk, joint_jacobian, link_jacobian,
                              make_chain, perturb_link_lengths)

from conftest import PLANAR2, central_diff, homogeneous_fk, random_limits_q


def test_default6_constructor():
    c = make_chain(6, "ZYZYZY", [20] * 6, (-np.pi / 2, np.pi / 2))
    assert c == DEFAULT6
    assert c.n_joints == 6
    assert c.reach == 120.0


def test_planar_constructor():
    c = make_chain(2, ["Z", "Z"], [10, 10], (-np.pi, np.pi))
    assert c.axes == ("Z", "Z") and c.reach == 20.0


@pytest.mark.parametrize("args", [
    (3, "ZY", [1, 1, 1], (-1, 1)),
    (2, "ZZ", [1, 0], (-1, 1)),
    (2, "ZZ", [1, -2], (-1, 1)),
    (2, "ZZ", [1, 1], (1, -1)),
    (1, "W", [1], (-1, 1)),
])
def test_make_chain_rejects(args):
    with pytest.raises(ChainError):
        make_chain(*args)


def test_fk_reference_poses():
    assert np.allclose(fk(DEFAULT6, np.zeros(6)), [120, 0, 0], atol=1e-12)
    assert np.allclose(fk(DEFAULT6, [np.pi / 2, 0, 0, 0, 0, 0]), [0, 120, 0], atol=1e-12)
    assert np.allclose(fk(DEFAULT6, [0, np.pi / 2, 0, 0, 0, 0]), [20, 0, -100], atol=1e-12)


def test_fk_matches_homogeneous_oracle(chain, rng):
    Q = rng.uniform(-np.pi, np.pi, size=(200, chain.n_joints))
    P = fk(chain, Q)
    expected = np.array([homogeneous_fk(chain, q) for q in Q])
    assert np.max(np.abs(P - expected)) <= 1e-12


def test_fk_single_and_batch_agree(rng):
    Q = rng.uniform(-2, 2, size=(20, 6))
    P = fk(DEFAULT6, Q)
    for q, p in zip(Q, P):
        assert fk(DEFAULT6, q).tobytes() == p.tobytes()


def test_fk_dimension_mismatch():
    with pytest.raises(ChainError):
        fk(DEFAULT6, np.zeros(5))


def test_fk_is_pure(rng):
    Q = rng.uniform(-2, 2, size=(50, 6))
    Q0 = Q.copy()
    assert fk(DEFAULT6, Q).tobytes() == fk(DEFAULT6, Q).tobytes()
    assert np.array_equal(Q, Q0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-np.pi / 2, np.pi / 2), min_size=6, max_size=6))
def test_fk_within_reach(q):
    assert np.linalg.norm(fk(DEFAULT6, q)) <= DEFAULT6.reach + 1e-9


def test_planar_jacobian_textbook():
    J = joint_jacobian(PLANAR2, [0.0, 0.0])
    assert np.allclose(J, [[0, 0], [20, 10], [0, 0]], atol=1e-12)


def test_joint_jacobian_finite_differences(chain, rng):
    for q in rng.uniform(-np.pi, np.pi, size=(20, chain.n_joints)):
        J = joint_jacobian(chain, q)
        Jfd = central_diff(lambda x: fk(chain, x), q, 1e-6)
        assert np.linalg.norm(J - Jfd) / np.linalg.norm(J) <= 1e-6


def test_joint_jacobian_lever_arm_bound(chain, rng):
    J = joint_jacobian(chain, random_limits_q(rng, chain, 100))
    assert np.all(np.linalg.norm(J, axis=1) <= chain.reach + 1e-9)


def test_link_jacobian_zero_pose():
    J = link_jacobian(DEFAULT6, np.zeros(6))
    assert np.allclose(J, np.tile([[1.0], [0.0], [0.0]], (1, 6)))


def test_link_jacobian_reconstructs_fk(chain, rng):
    Q = rng.uniform(-np.pi, np.pi, size=(100, chain.n_joints))
    J = link_jacobian(chain, Q)
    recon = np.einsum("nij,j->ni", J, chain.lengths_array)
    assert np.max(np.abs(recon - fk(chain, Q))) <= 1e-12


def test_link_jacobian_finite_differences(chain, rng):
    from emssl.kinematics import with_lengths

    for q in rng.uniform(-np.pi, np.pi, size=(10, chain.n_joints)):
        J = link_jacobian(chain, q)
        Jfd = central_diff(lambda L: fk(with_lengths(chain, L), q), chain.lengths_array, 1e-4)
        assert np.max(np.abs(J - Jfd)) <= 1e-8


def test_perturb_link_lengths():
    c = perturb_link_lengths(DEFAULT6, 1.0)
    assert c.link_lengths == (21.0,) * 6 and c.reach == 126.0
    assert DEFAULT6.link_lengths == (20.0,) * 6
    assert perturb_link_lengths(DEFAULT6, 0.0) == DEFAULT6
    with pytest.raises(ChainError):
        perturb_link_lengths(DEFAULT6, -25.0)


def test_chain_dict_round_trip():
    c = default6(180.0)
    again = type(c).from_dict(c.to_dict())
    assert again.axes == c.axes and again.link_lengths == c.link_lengths
    assert np.allclose(again.lower, c.lower, atol=1e-15)


def test_single_limit_row_applies_to_all_joints():
    a = make_chain(3, "ZYZ", [1, 1, 1], [(-1.0, 2.0)])
    b = make_chain(3, "ZYZ", [1, 1, 1], (-1.0, 2.0))
    assert a == b and a.joint_limits == ((-1.0, 2.0),) * 3
