import numpy as np
import pytest

from emssl.kinematics import DEFAULT6, make_chain


def rot4(axis, angle):
    """4x4 homogeneous rotation, written out independently of the kernels."""
    c, s = np.cos(angle), np.sin(angle)
    T = np.eye(4)
    if axis == "X":
        T[1:3, 1:3] = [[c, -s], [s, c]]
    elif axis == "Y":
        T[0, 0], T[0, 2], T[2, 0], T[2, 2] = c, s, -s, c
    else:
        T[0:2, 0:2] = [[c, -s], [s, c]]
    return T


def trans4(x):
    T = np.eye(4)
    T[0, 3] = x
    return T


def homogeneous_fk(chain, q):
    T = np.eye(4)
    for axis, L, angle in zip(chain.axes, chain.link_lengths, q):
        T = T @ rot4(axis, angle) @ trans4(L)
    return T[:3, 3]


def central_diff(f, x, h):
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e.flat[j] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def random_limits_q(rng, chain, n):
    return rng.uniform(chain.lower, chain.upper, size=(n, chain.n_joints))


PLANAR2 = make_chain(2, "ZZ", [10.0, 10.0], (-np.pi, np.pi))
SPATIAL3 = make_chain(3, "ZYX", [30.0, 25.0, 5.0], [(-2.0, 2.0), (-1.5, 1.0), (-3.0, 3.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["default6", "planar2", "spatial3"])
def chain(request):
    return {"default6": DEFAULT6, "planar2": PLANAR2, "spatial3": SPATIAL3}[request.param]


ONE_LINK = make_chain(1, "Z", [10.0], (-np.pi / 2, np.pi / 2))


@pytest.fixture(scope="session")
def one_link_data():
    from emssl.datagen import fit_normalizers, sample_joint_dataset

    return (ONE_LINK, fit_normalizers(ONE_LINK), sample_joint_dataset(ONE_LINK, 1000, 0),
            sample_joint_dataset(ONE_LINK, 500, 1))


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
