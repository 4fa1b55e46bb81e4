"""Reference weights frozen into tests/unit/test_filter.cpp.

Textbook RLS and random-walk Kalman recursions on a short deterministic trace,
written directly from their definitions in numpy.
"""
import numpy as np

L, a, b = 3, 6.0, 10.0
nu = a + np.arange(L) * (b - a) / L


def basis(t):
    return np.concatenate([np.sin(2 * np.pi * nu * t), np.cos(2 * np.pi * nu * t)])


def trace(n):
    for i in range(n):
        t = i * 0.001
        yield t, 0.3 * np.sin(2 * np.pi * 7.1 * t + 0.4)


def rls(lam_rls, lam, p0, n):
    w, P = np.zeros(2 * L), p0 * np.eye(2 * L)
    for t, d in trace(n):
        g = basis(t)
        e = d - w @ g
        k = P @ g / (lam_rls + g @ P @ g)
        w = lam * w + k * e
        P = (P - np.outer(k, g) @ P) / lam_rls
    return w, P


def kalman(R, q, lam, p0, n):
    w, P = np.zeros(2 * L), p0 * np.eye(2 * L)
    for t, d in trace(n):
        g = basis(t)
        e = d - w @ g
        k = P @ g / (g @ P @ g + R)
        w = lam * w + k * e
        P = (np.eye(2 * L) - np.outer(k, g)) @ P + q * np.eye(2 * L)
    return w, P


def lms(eta, lam, n):
    w = np.zeros(2 * L)
    for t, d in trace(n):
        g = basis(t)
        e = d - w @ g
        w = lam * w + 2 * eta * g * e
    return w


np.set_printoptions(precision=17)
w, P = rls(0.99, 0.9999, 0.5, 200)
print("rls w", repr(w), "P00", repr(P[0, 0]), "P15", repr(P[1, 5]))
w, P = kalman(2.0, 1e-4, 0.9999, 0.5, 200)
print("kalman w", repr(w), "P00", repr(P[0, 0]), "P15", repr(P[1, 5]))
print("lms w", repr(lms(0.01, 0.9999, 200)))
