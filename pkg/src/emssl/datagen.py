"""Motor-babbling datasets and the affine normalisers around the network."""

from dataclasses import dataclass

import numpy as np

from .kinematics import fk
from .rng import make_rng


@dataclass
class LabeledSet:
    Q: np.ndarray
    P: np.ndarray

    def __len__(self):
        return len(self.Q)

    def rows(self, idx):
        return LabeledSet(self.Q[idx], self.P[idx])


@dataclass
class NormalizerPair:
    """Position box -> [0,1]^3 and joint limits -> [0,1]^n.

    A locked joint (lo == hi) normalises to 0 and always denormalises to lo.
    """

    pos_lo: np.ndarray
    pos_hi: np.ndarray
    joint_lo: np.ndarray
    joint_hi: np.ndarray

    @property
    def joint_scale(self):
        return self.joint_hi - self.joint_lo

    def normalize_pos(self, P):
        return (np.asarray(P, dtype=np.float64) - self.pos_lo) / (self.pos_hi - self.pos_lo)

    def denormalize_pos(self, X):
        return self.pos_lo + np.asarray(X, dtype=np.float64) * (self.pos_hi - self.pos_lo)

    def normalize_joints(self, Q):
        scale = self.joint_scale
        safe = np.where(scale > 0.0, scale, 1.0)
        return np.where(scale > 0.0, (np.asarray(Q, dtype=np.float64) - self.joint_lo) / safe, 0.0)

    def denormalize_joints(self, Y):
        q = self.joint_lo + np.asarray(Y, dtype=np.float64) * self.joint_scale
        # rounding can push lo + 1*(hi-lo) a hair past hi
        return np.clip(q, self.joint_lo, self.joint_hi)

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("pos_lo", "pos_hi", "joint_lo", "joint_hi")}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.array(d[k], dtype=np.float64)
                     for k in ("pos_lo", "pos_hi", "joint_lo", "joint_hi")))


def fit_normalizers(chain):
    """Chain-derived normalisers: the cube [-reach, reach]^3 and the joint limits."""
    r = chain.reach
    return NormalizerPair(np.full(3, -r), np.full(3, r), chain.lower, chain.upper)


def sample_joint_dataset(chain, n, seed):
    """Uniform joint-space samples and their end positions."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    rng = make_rng(seed, "babble")
    Q = rng.uniform(chain.lower, chain.upper, size=(n, chain.n_joints))
    return LabeledSet(Q, fk(chain, Q))


def split(data, n_train, seed):
    """Seeded shuffle split into ``(train, test)`` with ``n_train`` training rows."""
    N = len(data)
    if not 1 <= n_train < N:
        raise ValueError(f"n_train must lie in [1, {N - 1}], got {n_train}")
    order = make_rng(seed, "split").permutation(N)
    return data.rows(np.sort(order[:n_train])), data.rows(np.sort(order[n_train:]))


def csv_header(n_joints):
    return [f"q_{i + 1}" for i in range(n_joints)] + ["p_x", "p_y", "p_z"]


def write_csv(path, data):
    table = np.hstack([data.Q, data.P])
    np.savetxt(path, table, fmt="%.17g", delimiter=",",
               header=",".join(csv_header(data.Q.shape[1])), comments="")


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if header[-3:] != ["p_x", "p_y", "p_z"] or not all(h.startswith("q_") for h in header[:-3]):
        raise ValueError(f"{path}: unexpected dataset header {header}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n_joints = len(header) - 3
    return LabeledSet(np.ascontiguousarray(table[:, :n_joints]),
                      np.ascontiguousarray(table[:, n_joints:]))
