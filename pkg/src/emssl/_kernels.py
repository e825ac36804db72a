"""Row kernels shared by kinematics, inference and training.

Every kernel exists twice: a loop version compiled by numba and a vectorised
numpy version. Both evaluate each output element with the same sequence of
IEEE operations, and no kernel lets one row's result depend on any other row.
That is what makes batched and per-sample inference bitwise identical.

Axis codes: 0 = X, 1 = Y, 2 = Z.
"""

import numpy as np

from ._accel import BACKEND, njit

# ---------------------------------------------------------------- kinematics


def _fk_rows_loop(axes, lengths, Q):
    n, nj = Q.shape
    out = np.empty((n, 3))
    R = np.empty((3, 3))
    for r in range(n):
        for a in range(3):
            for b in range(3):
                R[a, b] = 0.0
            R[a, a] = 1.0
        px = 0.0
        py = 0.0
        pz = 0.0
        for i in range(nj):
            c = np.cos(Q[r, i])
            s = np.sin(Q[r, i])
            ax = axes[i]
            for a in range(3):
                c0 = R[a, 0]
                c1 = R[a, 1]
                c2 = R[a, 2]
                if ax == 2:
                    R[a, 0] = c * c0 + s * c1
                    R[a, 1] = c * c1 - s * c0
                elif ax == 1:
                    R[a, 0] = c * c0 - s * c2
                    R[a, 2] = s * c0 + c * c2
                else:
                    R[a, 1] = c * c1 + s * c2
                    R[a, 2] = c * c2 - s * c1
            L = lengths[i]
            px = px + L * R[0, 0]
            py = py + L * R[1, 0]
            pz = pz + L * R[2, 0]
        out[r, 0] = px
        out[r, 1] = py
        out[r, 2] = pz
    return out


def _fk_rows_numpy(axes, lengths, Q):
    n, nj = Q.shape
    # R[k] is column k of the running rotation, shape (n, 3)
    R = [np.zeros((n, 3)) for _ in range(3)]
    for k in range(3):
        R[k][:, k] = 1.0
    p = np.zeros((n, 3))
    for i in range(nj):
        c = np.cos(Q[:, i])[:, None]
        s = np.sin(Q[:, i])[:, None]
        c0, c1, c2 = R
        ax = axes[i]
        if ax == 2:
            R = [c * c0 + s * c1, c * c1 - s * c0, c2]
        elif ax == 1:
            R = [c * c0 - s * c2, c1, s * c0 + c * c2]
        else:
            R = [c0, c * c1 + s * c2, c * c2 - s * c1]
        p = p + lengths[i] * R[0]
    return p


def _frames_loop(axes, lengths, Q, with_joint):
    """Joint Jacobians (with_joint=True) or link-direction Jacobians, shape (n, 3, nj)."""
    n, nj = Q.shape
    out = np.empty((n, 3, nj))
    R = np.empty((3, 3))
    org = np.empty((nj, 3))
    axw = np.empty((nj, 3))
    for r in range(n):
        for a in range(3):
            for b in range(3):
                R[a, b] = 0.0
            R[a, a] = 1.0
        px = 0.0
        py = 0.0
        pz = 0.0
        for i in range(nj):
            ax = axes[i]
            org[i, 0] = px
            org[i, 1] = py
            org[i, 2] = pz
            for a in range(3):
                axw[i, a] = R[a, ax]
            c = np.cos(Q[r, i])
            s = np.sin(Q[r, i])
            for a in range(3):
                c0 = R[a, 0]
                c1 = R[a, 1]
                c2 = R[a, 2]
                if ax == 2:
                    R[a, 0] = c * c0 + s * c1
                    R[a, 1] = c * c1 - s * c0
                elif ax == 1:
                    R[a, 0] = c * c0 - s * c2
                    R[a, 2] = s * c0 + c * c2
                else:
                    R[a, 1] = c * c1 + s * c2
                    R[a, 2] = c * c2 - s * c1
            if not with_joint:
                for a in range(3):
                    out[r, a, i] = R[a, 0]
            L = lengths[i]
            px = px + L * R[0, 0]
            py = py + L * R[1, 0]
            pz = pz + L * R[2, 0]
        if with_joint:
            for i in range(nj):
                dx = px - org[i, 0]
                dy = py - org[i, 1]
                dz = pz - org[i, 2]
                out[r, 0, i] = axw[i, 1] * dz - axw[i, 2] * dy
                out[r, 1, i] = axw[i, 2] * dx - axw[i, 0] * dz
                out[r, 2, i] = axw[i, 0] * dy - axw[i, 1] * dx
    return out


def _frames_numpy(axes, lengths, Q, with_joint):
    n, nj = Q.shape
    R = [np.zeros((n, 3)) for _ in range(3)]
    for k in range(3):
        R[k][:, k] = 1.0
    p = np.zeros((n, 3))
    out = np.empty((n, 3, nj))
    origins = []
    world_axes = []
    for i in range(nj):
        ax = axes[i]
        origins.append(p)
        world_axes.append(R[ax])
        c = np.cos(Q[:, i])[:, None]
        s = np.sin(Q[:, i])[:, None]
        c0, c1, c2 = R
        if ax == 2:
            R = [c * c0 + s * c1, c * c1 - s * c0, c2]
        elif ax == 1:
            R = [c * c0 - s * c2, c1, s * c0 + c * c2]
        else:
            R = [c0, c * c1 + s * c2, c * c2 - s * c1]
        if not with_joint:
            out[:, :, i] = R[0]
        p = p + lengths[i] * R[0]
    if with_joint:
        for i in range(nj):
            d = p - origins[i]
            w = world_axes[i]
            out[:, 0, i] = w[:, 1] * d[:, 2] - w[:, 2] * d[:, 1]
            out[:, 1, i] = w[:, 2] * d[:, 0] - w[:, 0] * d[:, 2]
            out[:, 2, i] = w[:, 0] * d[:, 1] - w[:, 1] * d[:, 0]
    return out


# ------------------------------------------------------------------- network


def _dense_loop(X, W, b, relu):
    n, K = X.shape
    m = W.shape[1]
    out = np.zeros((n, m))
    n4 = n - n % 4
    # four rows share each pass over W; every element still sums over k in order
    for r0 in range(0, n4, 4):
        a0 = out[r0]
        a1 = out[r0 + 1]
        a2 = out[r0 + 2]
        a3 = out[r0 + 3]
        for k in range(K):
            wk = W[k]
            x0 = X[r0, k]
            x1 = X[r0 + 1, k]
            x2 = X[r0 + 2, k]
            x3 = X[r0 + 3, k]
            for j in range(m):
                w = wk[j]
                a0[j] += x0 * w
                a1[j] += x1 * w
                a2[j] += x2 * w
                a3[j] += x3 * w
    for r in range(n4, n):
        a = out[r]
        for k in range(K):
            wk = W[k]
            xv = X[r, k]
            for j in range(m):
                a[j] += xv * wk[j]
    for r in range(n):
        a = out[r]
        for j in range(m):
            v = a[j] + b[j]
            if relu and v < 0.0:
                v = 0.0
            a[j] = v
    return out


def _dense_numpy(X, W, b, relu):
    n, K = X.shape
    out = np.zeros((n, W.shape[1]))
    for k in range(K):
        out += X[:, k, None] * W[k]
    out += b
    if relu:
        out = np.where(out < 0.0, 0.0, out)
    return out


def _adam_loop(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    for i in range(p.shape[0]):
        gi = g[i]
        mi = beta1 * m[i] + (1.0 - beta1) * gi
        vi = beta2 * v[i] + (1.0 - beta2) * (gi * gi)
        m[i] = mi
        v[i] = vi
        p[i] = p[i] - lr * (mi / bc1) / (np.sqrt(vi / bc2) + eps)


def _adam_numpy(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    m[:] = beta1 * m + (1.0 - beta1) * g
    v[:] = beta2 * v + (1.0 - beta2) * (g * g)
    p[:] = p - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


IMPLS = {
    "numpy": {
        "fk_rows": _fk_rows_numpy,
        "frames": _frames_numpy,
        "dense": _dense_numpy,
        "adam": _adam_numpy,
    }
}

if BACKEND == "numba":
    IMPLS["numba"] = {
        "fk_rows": njit(_fk_rows_loop),
        "frames": njit(_frames_loop),
        "dense": njit(_dense_loop),
        "adam": njit(_adam_loop),
    }

_active = IMPLS[BACKEND]


def fk_rows(axes, lengths, Q):
    """End positions for every row of ``Q``; ``axes`` int64, ``lengths`` float64."""
    return _active["fk_rows"](axes, lengths, np.ascontiguousarray(Q, dtype=np.float64))


def joint_jacobian_rows(axes, lengths, Q):
    return _active["frames"](axes, lengths, np.ascontiguousarray(Q, dtype=np.float64), True)


def link_jacobian_rows(axes, lengths, Q):
    return _active["frames"](axes, lengths, np.ascontiguousarray(Q, dtype=np.float64), False)


def dense(X, W, b, relu):
    """``relu(X @ W + b)`` (or without relu) with a batch-independent summation order."""
    return _active["dense"](np.ascontiguousarray(X, dtype=np.float64), W, b, relu)


def adam_update(p, g, m, v, lr, beta1, beta2, eps, t):
    """In-place Adam update of one contiguous parameter array."""
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    _active["adam"](p.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1),
                    lr, beta1, beta2, eps, bc1, bc2)
