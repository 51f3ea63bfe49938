"""
Model core: parameter validation, derived scales, unit resolution and the truncated
Hamiltonian as a real symmetric banded matrix.

Basis ordering is interleaved: index 2n is (n, spin up), index 2n+1 is (n, spin down).
"""
import math
from typing import Union

import numpy as np
import scipy.sparse as sp

from rabi.errors import (ConfigValidationError, NonPositiveFrequency,
                         TruncationTooSmall, UnboundedSpectrum)
from rabi.models import (PARAM_NAMES, BandedSymmetricMatrix, DerivedScales,
                         ModelParams, ParamSpec, Quantity)


def derived_scales(p: ModelParams) -> DerivedScales:
    """Derived scales without the physical checks"""
    g_s = math.sqrt(p.omega * p.Omega) / 2
    g_t = p.omega / 2
    g2_prime = 2 * p.g2 / p.omega
    return DerivedScales(
        g_s=g_s,
        g_t=g_t,
        g2_tilde=(1 + p.chi) * p.g2,
        g1_prime=math.sqrt(2) * p.g1 / p.omega,
        g2_prime=g2_prime,
        g2_tilde_prime=(1 + p.chi) * g2_prime,
        x_c=math.sqrt(2) * g_s / p.omega,
    )


def validate_params(p: ModelParams) -> DerivedScales:
    """
    Validates a parameter point and returns its derived scales.
    Raises:
        NonPositiveFrequency: omega <= 0 or Omega <= 0.
        UnboundedSpectrum: |g2_tilde| >= g_t, or a non-positive effective mass.
    """
    if not p.omega > 0 or not p.Omega > 0:
        raise NonPositiveFrequency(f"frequencies must be positive (omega={p.omega}, Omega={p.Omega})")
    scales = derived_scales(p)
    if abs(scales.g2_tilde) >= scales.g_t:
        raise UnboundedSpectrum(
            f"|g2_tilde|={abs(scales.g2_tilde):.6g} reaches g_t={scales.g_t:.6g}; spectrum unbounded below"
        )
    # kinetic coefficients 1/m_s = 1 - s*g2'*(1 - chi)
    for s in (1, -1):
        if 1 - s * scales.g2_prime * (1 - p.chi) <= 0:
            raise UnboundedSpectrum(f"effective mass for spin {s:+d} is not positive (chi={p.chi}, g2={p.g2})")
    return scales


def unit_scale(unit: str, omega: float, Omega: float) -> float:
    if unit == "abs":
        return 1.0
    if unit == "gs":
        return math.sqrt(omega * Omega) / 2
    if unit == "gt":
        return omega / 2
    if unit == "Omega":
        return Omega
    raise ConfigValidationError(f"unknown unit '{unit}'")


def resolve_params(spec: Union[ParamSpec, ModelParams]) -> ModelParams:
    """
    Resolves quoted units into absolute values.
    Order: Omega (absolute), omega (absolute or in Omega), then g1, g2, eps against g_s/g_t/Omega.
    """
    if isinstance(spec, ModelParams):
        return spec
    if spec.Omega.unit != "abs":
        raise ConfigValidationError("Omega must be given in absolute units")
    if spec.omega.unit not in ("abs", "Omega"):
        raise ConfigValidationError("omega must be given in absolute units or in Omega")
    if spec.chi.unit != "abs":
        raise ConfigValidationError("chi is dimensionless")
    Omega = spec.Omega.value
    omega = spec.omega.value * unit_scale(spec.omega.unit, 0.0, Omega)
    values = {"omega": omega, "Omega": Omega, "chi": spec.chi.value}
    for name in ("g1", "g2", "eps"):
        q: Quantity = getattr(spec, name)
        values[name] = q.value * unit_scale(q.unit, omega, Omega)
    return ModelParams(**values)


def quote_value(p: ModelParams, name: str, unit: str) -> float:
    """Inverse of resolve_params for one parameter"""
    value = getattr(p, name)
    if name == "omega" and unit == "Omega":
        return value / p.Omega
    return value / unit_scale(unit, p.omega, p.Omega)


def with_axis_value(spec: ParamSpec, name: str, value: float, unit: str) -> ParamSpec:
    if name not in PARAM_NAMES:
        raise ConfigValidationError(f"unknown parameter '{name}'")
    return spec.with_value(name, Quantity(value=float(value), unit=unit))


def build_hamiltonian(p: ModelParams, N: int) -> BandedSymmetricMatrix:
    """
    Assembles H on the truncated basis n = 0..N for both spins.
    Physical validation is the caller's job; only the truncation is checked here.
    """
    if N < 2:
        raise TruncationTooSmall(f"truncation N={N} is below 2")

    n = np.arange(N + 1, dtype=float)
    dim = 2 * (N + 1)
    n_tilde = 2 * n + 1

    diag = np.empty(dim)
    diag[0::2] = p.omega * n + p.g2 * p.chi * n_tilde - p.eps
    diag[1::2] = p.omega * n - p.g2 * p.chi * n_tilde + p.eps

    # spin flip at equal n: (n,+) <-> (n,-); zero between (n,-) and (n+1,+)
    off1 = np.zeros(dim - 1)
    off1[0::2] = p.Omega / 2

    # n <-> n+1 within a spin sector
    lin = p.g1 * np.sqrt(n[1:])
    off2 = np.empty(dim - 2)
    off2[0::2] = lin
    off2[1::2] = -lin

    # n <-> n+2 within a spin sector
    quad = p.g2 * np.sqrt(n[1:-1] * n[2:])
    off4 = np.empty(dim - 4)
    off4[0::2] = quad
    off4[1::2] = -quad

    return BandedSymmetricMatrix(dimension=dim, bands={0: diag, 1: off1, 2: off2, 4: off4})


def bandwidth(H: BandedSymmetricMatrix) -> int:
    return max(k for k, v in H.bands.items() if np.any(v != 0)) if H.bands else 0


def to_sparse(H: BandedSymmetricMatrix) -> sp.csr_matrix:
    offsets, data = [], []
    for k, values in sorted(H.bands.items()):
        offsets.append(k)
        data.append(values)
        if k:
            offsets.append(-k)
            data.append(values)
    return sp.diags(data, offsets, shape=(H.dimension, H.dimension), format="csr")


def to_dense(H: BandedSymmetricMatrix) -> np.ndarray:
    dense = np.zeros((H.dimension, H.dimension))
    for k, values in H.bands.items():
        idx = np.arange(H.dimension - k)
        dense[idx, idx + k] = values
        dense[idx + k, idx] = values
    return dense


def matvec(H: BandedSymmetricMatrix, v: np.ndarray) -> np.ndarray:
    out = H.bands[0] * v
    for k, values in H.bands.items():
        if k == 0:
            continue
        out[:-k] += values * v[k:]
        out[k:] += values * v[:-k]
    return out


def parity_operator(N: int) -> sp.csr_matrix:
    """Parity sigma_x (-1)^n on the interleaved basis"""
    n = np.arange(N + 1)
    signs = np.where(n % 2 == 0, 1.0, -1.0)
    dim = 2 * (N + 1)
    off = np.zeros(dim - 1)
    off[0::2] = signs
    return sp.diags([off, off], [1, -1], shape=(dim, dim), format="csr")


def max_displacement(p: ModelParams) -> float:
    """max over spins of |x0,s| = |g1'/(1 + s*g2_tilde')|"""
    scales = derived_scales(p)
    return max(abs(scales.g1_prime / (1 + s * scales.g2_tilde_prime)) for s in (1, -1))


def estimate_truncation(p: ModelParams) -> int:
    """Starting truncation N0 = max(32, ceil(8 * x0max^2)) for the escalation loop"""
    x0 = max_displacement(p)
    return max(32, math.ceil(8 * x0 * x0 - 1e-9))
