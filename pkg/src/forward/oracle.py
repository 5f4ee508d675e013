"""Partial-wave series for a homogeneous ball, used as a reference solution."""

import math

import numpy as np
from scipy import special


def _hankel1(l: np.ndarray, z, derivative: bool = False):
    return special.spherical_jn(l, z, derivative) + 1j * special.spherical_yn(l, z, derivative)


def series_length(kappa: float, radius: float) -> int:
    return int(math.ceil(kappa * radius)) + 30


def ball_coefficients(kappa: float, contrast: complex, a: float, l_max: int) -> np.ndarray:
    """
    Scattering coefficients A_l of the ball |x| < a with n = 1 - contrast.

    The scattered field of the regular wave j_l(kappa r) P_l is A_l h_l(kappa r) P_l.
    """
    l = np.arange(l_max + 1)
    k1 = kappa * np.sqrt(complex(1.0 - contrast))
    ja, dja = special.spherical_jn(l, kappa * a), special.spherical_jn(l, kappa * a, True)
    ha, dha = _hankel1(l, kappa * a), _hankel1(l, kappa * a, True)
    j1, dj1 = special.spherical_jn(l, k1 * a), special.spherical_jn(l, k1 * a, True)
    numerator = k1 * dj1 * ja - kappa * dja * j1
    denominator = kappa * dha * j1 - k1 * dj1 * ha
    return numerator / denominator


def ball_far_field(
    kappa: float, contrast: complex, a: float, obs_dirs: np.ndarray, inc_dirs: np.ndarray
) -> np.ndarray:
    """
    Far-field pattern of the homogeneous ball for plane-wave incidence.

    u^inf(x_hat, d) = (-i / kappa) sum_l (2l+1) A_l P_l(x_hat . d)

    Returns:
        Matrix indexed [incident direction, observation direction]
    """
    l_max = series_length(kappa, a)
    A = ball_coefficients(kappa, contrast, a, l_max)
    cosines = np.clip(np.asarray(inc_dirs) @ np.asarray(obs_dirs).T, -1.0, 1.0)
    total = np.zeros(cosines.shape, dtype=complex)
    for l in range(l_max + 1):
        total += (2 * l + 1) * A[l] * special.eval_legendre(l, cosines)
    return -1j / kappa * total


def ball_near_field(
    kappa: float, contrast: complex, a: float, receivers: np.ndarray, sources: np.ndarray
) -> np.ndarray:
    """
    Total field w(x, y) of the homogeneous ball for point sources outside it.

    w = Phi(x, y) + i kappa sum_l (2l+1)/(4 pi) A_l h_l(kappa|y|) h_l(kappa|x|) P_l(x_hat . y_hat)

    Returns:
        Matrix indexed [source, receiver]
    """
    x = np.asarray(receivers, dtype=float)
    y = np.asarray(sources, dtype=float)
    rx = np.linalg.norm(x, axis=1)
    ry = np.linalg.norm(y, axis=1)
    l_max = series_length(kappa, max(float(rx.max()), float(ry.max())))
    A = ball_coefficients(kappa, contrast, a, l_max)
    cosines = np.clip((y / ry[:, None]) @ (x / rx[:, None]).T, -1.0, 1.0)
    total = np.zeros(cosines.shape, dtype=complex)
    for l in range(l_max + 1):
        hy = _hankel1(l, kappa * ry)
        hx = _hankel1(l, kappa * rx)
        total += (2 * l + 1) * A[l] * np.outer(hy, hx) * special.eval_legendre(l, cosines)
    dist = np.linalg.norm(y[:, None, :] - x[None, :, :], axis=2)
    incident = np.exp(1j * kappa * dist) / (4.0 * math.pi * dist)
    return incident + 1j * kappa / (4.0 * math.pi) * total
