"""Regularising kernels given as radial Fourier multipliers.

``u = K^alpha * v`` is evaluated mode by mode as ``m_alpha(|xi|) v(xi)``.
The Helmholtz kernel inverts ``Id - alpha^2 Laplacian``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .spectral_core import SpectralField, sobolev_norm

__all__ = [
    "KernelKind",
    "KernelSpec",
    "KernelCertificate",
    "apply_kernel",
    "helmholtz_operator",
    "check_lemma_norms",
    "certify_kernel",
    "write_certificate_csv",
]

RELATIVE_SLACK = 1e-12


class KernelKind(str, Enum):
    HELMHOLTZ = "helmholtz"
    GAUSSIAN = "gaussian"
    SHARP_CUTOFF = "sharp_cutoff"
    IDENTITY = "identity"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if self.kind is not KernelKind.IDENTITY and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def multiplier(self, k2: np.ndarray) -> np.ndarray:
        """Multiplier values for squared wavenumber magnitudes ``k2``."""
        k2 = np.asarray(k2, dtype=float)
        a2 = self.alpha**2
        if self.kind is KernelKind.HELMHOLTZ:
            return 1.0 / (1.0 + a2 * k2)
        if self.kind is KernelKind.GAUSSIAN:
            return np.exp(-0.5 * a2 * k2)
        if self.kind is KernelKind.SHARP_CUTOFF:
            # |xi| <= 1/alpha  <=>  alpha^2 |xi|^2 <= 1
            return (a2 * k2 <= 1.0).astype(float)
        return np.ones_like(k2)

    @property
    def is_identity(self) -> bool:
        return self.kind is KernelKind.IDENTITY


def helmholtz(alpha: float) -> KernelSpec:
    return KernelSpec(KernelKind.HELMHOLTZ, alpha)


IDENTITY = KernelSpec(KernelKind.IDENTITY, 1.0)


def apply_kernel(k: KernelSpec, v: SpectralField) -> SpectralField:
    if k.is_identity:
        return v
    return v.with_coeffs(k.multiplier(v.grid.k2) * v.coeffs)


def helmholtz_operator(alpha: float, u: SpectralField) -> SpectralField:
    """Apply ``Id - alpha^2 Laplacian`` (multiplier ``1 + alpha^2 |xi|^2``)."""
    return u.with_coeffs((1.0 + alpha**2 * u.grid.k2) * u.coeffs)


def _holds(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + RELATIVE_SLACK * max(abs(rhs), abs(lhs))


def check_lemma_norms(k: KernelSpec, v: SpectralField, s: float) -> tuple[bool, bool, bool]:
    """Check the three Helmholtz smoothing bounds for ``u = K^alpha * v``.

    ``|u|_s <= |v|_s``, ``|u|_{s+1} <= |v|_s / alpha``, ``|u|_{s+2} <= |v|_s / alpha^2``.
    """
    if k.kind is not KernelKind.HELMHOLTZ:
        raise ValueError(f"Helmholtz kernel required, got {k.kind.value}")
    u = apply_kernel(k, v)
    vs = sobolev_norm(v, s)
    a = k.alpha
    return (
        _holds(sobolev_norm(u, s), vs),
        _holds(sobolev_norm(u, s + 1), vs / a),
        _holds(sobolev_norm(u, s + 2), vs / a**2),
    )


@dataclass
class KernelCertificate:
    kind: KernelKind
    # l -> sup over probes and alphas of |K*phi|_l / |phi|_l
    bound_constants: dict[float, float]
    # alpha -> max over probes of |K*phi - phi|_s
    approx_identity_error: dict[float, float]
    s: float
    passed: bool
    # Helmholtz only: alpha -> max over probes of alpha^2 |K*phi|_{l+2} / |phi|_l
    smoothing_constants: dict[float, float] | None = field(default=None)

    def rows(self):
        """(kind, alpha, l, bound_constant, approx_error_s) rows for CSV output."""
        alphas = list(self.approx_identity_error)
        for l_, c in self.bound_constants.items():
            for a in alphas:
                yield (self.kind.value, a, l_, c, self.approx_identity_error[a])


def certify_kernel(k: KernelSpec, probes, l_list, alpha_seq, s: float = 2.0) -> KernelCertificate:
    """Audit the uniform-boundedness and approximate-identity properties of a kernel family.

    ``k`` fixes the kind; its ``alpha`` is replaced by each entry of ``alpha_seq``.
    Approximation errors are measured in ``H^s``.
    """
    probes = list(probes)
    if not probes:
        raise ValueError("probe set is empty")
    alpha_seq = [float(a) for a in alpha_seq]
    if any(b >= a for a, b in zip(alpha_seq, alpha_seq[1:])):
        raise ValueError("alpha_seq must be strictly decreasing")

    bounds = {float(l_): 0.0 for l_ in l_list}
    errors = {}
    smoothing = {} if k.kind is KernelKind.HELMHOLTZ else None
    for a in alpha_seq:
        ka = KernelSpec(k.kind, a)
        worst = 0.0
        for phi in probes:
            u = apply_kernel(ka, phi)
            for l_ in bounds:
                denom = sobolev_norm(phi, l_)
                if denom > 0:
                    bounds[l_] = max(bounds[l_], sobolev_norm(u, l_) / denom)
            worst = max(worst, sobolev_norm(u - phi, s))
            if smoothing is not None:
                for l_ in bounds:
                    denom = sobolev_norm(phi, l_)
                    if denom > 0:
                        c = a**2 * sobolev_norm(u, l_ + 2) / denom
                        smoothing[a] = max(smoothing.get(a, 0.0), c)
        errors[a] = worst

    errs = [errors[a] for a in alpha_seq]
    decreasing = all(e2 <= e1 for e1, e2 in zip(errs, errs[1:]))
    bounded = all(c <= 1.0 + RELATIVE_SLACK for c in bounds.values())
    return KernelCertificate(k.kind, bounds, errors, s, bounded and decreasing, smoothing)


def write_certificate_csv(cert: KernelCertificate, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "alpha", "l", "bound_constant", "approx_error_s"])
        for row in cert.rows():
            writer.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
