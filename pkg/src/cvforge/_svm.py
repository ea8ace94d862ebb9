"""Compiled inner loop for the linear SVM (primal stochastic subgradient)."""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0**-53

HINGE = 0
EPS_INSENSITIVE = 1


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MUL1
    z = (z ^ (z >> _S27)) * _MUL2
    return z ^ (z >> _S31)


@njit(cache=True)
def _loss(X, y, w, loss, eps):
    total = 0.0
    for i in range(X.shape[0]):
        s = 0.0
        for j in range(X.shape[1]):
            s += X[i, j] * w[j]
        if loss == HINGE:
            v = 1.0 - y[i] * s
        else:
            v = abs(y[i] - s) - eps
        if v > 0.0:
            total += v
    return total / X.shape[0]


@njit(cache=True)
def objective(X, y, w, lam, loss, eps):
    return 0.5 * lam * np.dot(w, w) + _loss(X, y, w, loss, eps)


@njit(cache=True)
def pegasos(X, y, lam, epochs, state, loss, eps):
    """Run ``epochs`` shuffled passes of w <- (1 - 1/t) w + (1/(lam t)) g.

    Returns the iterate averaged over the second half of all steps and the
    averaged iterate's objective at the end of each epoch in the last 10%.
    """
    n, p = X.shape
    w = np.zeros(p)
    w_avg = np.zeros(p)
    count = 0
    radius = np.sqrt(2.0 * _loss(X, y, w, loss, eps) / lam)
    avg_start = epochs // 2
    track_start = epochs - max(epochs // 10, 1)
    trace = np.zeros(epochs - track_start)
    perm = np.arange(n)
    t = 0
    for epoch in range(epochs):
        for i in range(n):
            perm[i] = i
        for i in range(n - 1, 0, -1):
            state = state + _GOLDEN
            z = _mix64(state)
            j = int(((z >> _S11) * _TWO_M53) * (i + 1))
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
        for k in range(n):
            idx = perm[k]
            t += 1
            eta = 1.0 / (lam * t)
            s = 0.0
            for j in range(p):
                s += X[idx, j] * w[j]
            shrink = 1.0 - 1.0 / t
            for j in range(p):
                w[j] *= shrink
            step = 0.0
            if loss == HINGE:
                if y[idx] * s < 1.0:
                    step = eta * y[idx]
            else:
                r = y[idx] - s
                if r > eps:
                    step = eta
                elif r < -eps:
                    step = -eta
            if step != 0.0:
                for j in range(p):
                    w[j] += step * X[idx, j]
            nrm = np.sqrt(np.dot(w, w))
            if nrm > radius:
                for j in range(p):
                    w[j] *= radius / nrm
            if epoch >= avg_start:
                count += 1
                for j in range(p):
                    w_avg[j] += (w[j] - w_avg[j]) / count
        if epoch >= track_start:
            trace[epoch - track_start] = objective(X, y, w_avg, lam, loss, eps)
    return w_avg, trace
