"""Slow reference computations that do not share code paths with the package."""

import numpy as np


def lattice_index(i, n):
    return i if i < n // 2 else i - n


def brute_sobolev_norm(coeffs, n, s, length=2 * np.pi):
    """Scalar loop over every mode and component."""
    scale = 2 * np.pi / length
    total = 0.0
    for idx in np.ndindex(*coeffs.shape[1:]):
        xi2 = sum((scale * lattice_index(i, n)) ** 2 for i in idx)
        for c in range(coeffs.shape[0]):
            z = coeffs[(c,) + idx]
            total += (1.0 + xi2) ** s * (z.real**2 + z.imag**2)
    return total**0.5


def sparse_modes(coeffs, n, tol=1e-14):
    """{integer wavenumber tuple: coefficient vector} for nonzero modes."""
    out = {}
    for idx in np.ndindex(*coeffs.shape[1:]):
        vec = coeffs[(slice(None),) + idx]
        if np.max(np.abs(vec)) > tol:
            out[tuple(lattice_index(i, n) for i in idx)] = vec.copy()
    return out


def convolution_advection(u_modes, v_modes):
    """Exact Fourier coefficients of (u . grad) v by summing over mode pairs."""
    out = {}
    for p, up in u_modes.items():
        for q, vq in v_modes.items():
            key = tuple(a + b for a, b in zip(p, q))
            contrib = (1j * np.dot(up, np.array(q, float))) * vq
            out[key] = out.get(key, 0) + contrib
    return out


def project_modes(modes):
    out = {}
    for xi, vec in modes.items():
        k = np.array(xi, float)
        k2 = k @ k
        out[xi] = vec if k2 == 0 else vec - k * (k @ vec) / k2
    return out


def trapezoid(values, times):
    total = 0.0
    for i in range(len(values) - 1):
        total += 0.5 * (values[i] + values[i + 1]) * (times[i + 1] - times[i])
    return total
