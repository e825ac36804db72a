"""Serial revolute chains: forward kinematics and the two analytic Jacobians.

Each joint applies ``Rotate(axis_i, q_i)`` followed by ``Translate(+x, L_i)``;
transforms compose left to right from the base, so the zero pose lies along
+x. Angles are radians and lengths centimetres.
"""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from . import _kernels

AXIS_CODES = {"X": 0, "Y": 1, "Z": 2}
AXIS_NAMES = "XYZ"


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class KinematicChain:
    axes: tuple
    link_lengths: tuple
    joint_limits: tuple

    @property
    def n_joints(self):
        return len(self.axes)

    @property
    def reach(self):
        return float(sum(self.link_lengths))

    @property
    def lower(self):
        return np.array([lo for lo, _ in self.joint_limits])

    @property
    def upper(self):
        return np.array([hi for _, hi in self.joint_limits])

    # kernel arguments; the dataclass is frozen so the cache never goes stale
    @cached_property
    def axis_codes(self):
        return np.array([AXIS_CODES[a] for a in self.axes], dtype=np.int64)

    @cached_property
    def lengths_array(self):
        return np.array(self.link_lengths, dtype=np.float64)

    def to_dict(self):
        """Config-boundary form: axis letters, lengths in cm, limits in degrees."""
        return {
            "axes": list(self.axes),
            "link_lengths_cm": list(self.link_lengths),
            "joint_limits_deg": [[float(np.degrees(lo)), float(np.degrees(hi))]
                                 for lo, hi in self.joint_limits],
        }

    @classmethod
    def from_dict(cls, d):
        limits = [(np.radians(lo), np.radians(hi)) for lo, hi in d["joint_limits_deg"]]
        return make_chain(len(d["axes"]), d["axes"], d["link_lengths_cm"], limits)


def make_chain(n_joints, axes, link_lengths, joint_limits):
    """Validate and build a chain.

    ``joint_limits`` is either one ``(lo, hi)`` pair shared by all joints or one
    pair per joint, in radians. A joint with ``lo == hi`` is locked; ``lo > hi``
    is rejected.
    """
    axes = tuple(str(a).upper() for a in axes)
    lengths = tuple(float(x) for x in link_lengths)
    limits = np.asarray(joint_limits, dtype=np.float64)
    if limits.shape in ((2,), (1, 2)):
        limits = np.tile(limits.reshape(2), (n_joints, 1))
    if len(axes) != n_joints or len(lengths) != n_joints or limits.shape != (n_joints, 2):
        raise ChainError(
            f"dimension mismatch: n_joints={n_joints}, {len(axes)} axes, "
            f"{len(lengths)} lengths, limits shape {limits.shape}")
    bad = [a for a in axes if a not in AXIS_CODES]
    if bad:
        raise ChainError(f"unknown rotation axis {bad[0]!r}; expected X, Y or Z")
    if not all(np.isfinite(lengths)) or min(lengths, default=1.0) <= 0.0:
        raise ChainError(f"link lengths must be positive, got {lengths}")
    if np.any(limits[:, 0] > limits[:, 1]):
        raise ChainError("inverted joint limits (lo > hi)")
    return KinematicChain(axes, lengths, tuple((float(lo), float(hi)) for lo, hi in limits))


def default6(limit_deg=90.0):
    """Six-joint spatial arm, axes Z-Y-Z-Y-Z-Y, 20 cm links, symmetric limits."""
    lim = np.radians(limit_deg)
    return make_chain(6, "ZYZYZY", [20.0] * 6, (-lim, lim))


DEFAULT6 = default6(90.0)


def _as_rows(chain, q):
    Q = np.asarray(q, dtype=np.float64)
    single = Q.ndim == 1
    Q = np.atleast_2d(Q)
    if Q.ndim != 2 or Q.shape[1] != chain.n_joints:
        raise ChainError(f"expected {chain.n_joints} joint angles per row, got shape {np.shape(q)}")
    return Q, single


def fk(chain, q):
    """End position (cm) for one joint vector, or for each row of a matrix."""
    Q, single = _as_rows(chain, q)
    P = _kernels.fk_rows(chain.axis_codes, chain.lengths_array, Q)
    return P[0] if single else P


def joint_jacobian(chain, q):
    """dp/dq, shape (3, n_joints); stacked (n, 3, n_joints) for a matrix of rows."""
    Q, single = _as_rows(chain, q)
    J = _kernels.joint_jacobian_rows(chain.axis_codes, chain.lengths_array, Q)
    return J[0] if single else J


def link_jacobian(chain, q):
    """dp/dL: column j is the world direction of link j. fk == link_jacobian @ lengths."""
    Q, single = _as_rows(chain, q)
    J = _kernels.link_jacobian_rows(chain.axis_codes, chain.lengths_array, Q)
    return J[0] if single else J


def perturb_link_lengths(chain, delta_cm):
    lengths = [L + delta_cm for L in chain.link_lengths]
    if min(lengths) <= 0.0:
        raise ChainError(f"perturbation {delta_cm} cm leaves a non-positive link length")
    return replace(chain, link_lengths=tuple(float(L) for L in lengths))


def with_lengths(chain, lengths):
    return make_chain(chain.n_joints, chain.axes, lengths, chain.joint_limits)
