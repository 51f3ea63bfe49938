"""
Smallest eigenpair of the banded Hamiltonian and the truncation-escalation loop.
"""
import logging
import math
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from rabi.config import settings
from rabi.errors import NoConvergence, TruncationCeiling
from rabi.hamiltonian import (build_hamiltonian, estimate_truncation, matvec,
                              to_dense, validate_params)
from rabi.models import BandedSymmetricMatrix, GroundSolution, ModelParams

logger = logging.getLogger(__name__)

WARM_SEED_WEIGHT = 0.1


class Eigenpair(NamedTuple):
    energy: float
    vector: np.ndarray
    residual: float
    gap: Optional[float]
    matvecs: int


def seed_vector(dim: int, seed: Optional[int] = None) -> np.ndarray:
    """Deterministic start vector with uniform positive entries, normalized"""
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    v = rng.uniform(0.5, 1.5, dim)
    return v / np.linalg.norm(v)


def fit_vector(v: np.ndarray, dim: int) -> np.ndarray:
    """Pads with zeros or truncates a coefficient vector to a new basis size"""
    out = np.zeros(dim)
    m = min(dim, len(v))
    out[:m] = v[:m]
    return out


def _fix_sign(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def _residual(H: BandedSymmetricMatrix, energy: float, v: np.ndarray) -> float:
    return float(np.linalg.norm(matvec(H, v) - energy * v))


def dense_ground_eigenpair(H: BandedSymmetricMatrix) -> Eigenpair:
    """Dense symmetric solve; the oracle for small bases"""
    top = min(1, H.dimension - 1)
    w, vecs = scipy.linalg.eigh(to_dense(H), subset_by_index=[0, top])
    v = _fix_sign(vecs[:, 0])
    gap = float(w[1] - w[0]) if top else None
    return Eigenpair(float(w[0]), v, _residual(H, float(w[0]), v), gap, 0)


def iterative_ground_eigenpair(H: BandedSymmetricMatrix, tol: float,
                               v0: Optional[np.ndarray] = None,
                               max_matvecs: Optional[int] = None) -> Eigenpair:
    """
    Implicitly restarted Lanczos (ARPACK) for the two lowest states.
    The matvec budget defaults to MATVEC_FACTOR * dimension.
    """
    dim = H.dimension
    budget = max_matvecs or settings.MATVEC_FACTOR * dim
    count = [0]

    def _mv(x):
        count[0] += 1
        return matvec(H, np.ravel(x))

    op = LinearOperator((dim, dim), matvec=_mv, dtype=float)
    ncv = min(dim - 1, 40)
    start = seed_vector(dim) if v0 is None else v0
    try:
        w, vecs = eigsh(op, k=2, which="SA", v0=start, ncv=ncv,
                        maxiter=max(1, budget // ncv), tol=tol)
    except ArpackNoConvergence as e:
        raise NoConvergence(
            f"Lanczos did not converge within {budget} matrix-vector products (dim={dim})"
        ) from e
    order = np.argsort(w)
    w, vecs = w[order], vecs[:, order]
    v = _fix_sign(vecs[:, 0])
    return Eigenpair(float(w[0]), v, _residual(H, float(w[0]), v), float(w[1] - w[0]), count[0])


def ground_eigenpair(H: BandedSymmetricMatrix, tol: float,
                     v0: Optional[np.ndarray] = None) -> Eigenpair:
    """
    Smallest eigenvalue and unit eigenvector.
    Dense solve up to DENSE_LIMIT, Krylov iteration above it.
    Returns:
        Eigenpair with energy, vector, residual norm, gap to the next state and matvec count.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if H.dimension <= settings.DENSE_LIMIT:
        return dense_ground_eigenpair(H)
    return iterative_ground_eigenpair(H, tol, v0)


def tail_weight(coeffs: np.ndarray) -> float:
    """Probability in the top 10% of Fock levels"""
    levels = len(coeffs) // 2
    top = max(1, math.ceil(0.1 * levels))
    return float(np.sum(coeffs[2 * (levels - top):] ** 2))


def _solve_level(p: ModelParams, N: int, tol: float, scale: float,
                 warm: Optional[np.ndarray]) -> Eigenpair:
    H = build_hamiltonian(p, N)
    if warm is None:
        return ground_eigenpair(H, tol)
    start = fit_vector(warm, H.dimension)
    start = start / (np.linalg.norm(start) or 1.0) + WARM_SEED_WEIGHT * seed_vector(H.dimension)
    pair = ground_eigenpair(H, tol, start / np.linalg.norm(start))
    if pair.residual > tol * scale:
        logger.debug("warm start residual %.3e above tolerance, re-solving from seed", pair.residual)
        pair = ground_eigenpair(H, tol)
    return pair


def converged_ground(p: ModelParams, tol: Optional[float] = None, *,
                     v0: Optional[np.ndarray] = None,
                     cap: Optional[int] = None) -> GroundSolution:
    """
    Ground state converged in the truncation.
    Starts at estimate_truncation (checked against a half-size probe) and doubles N until
    the energy change is within tol*max(omega, |E|) and the tail weight is below TAIL_LIMIT.
    Raises:
        TruncationCeiling: N would exceed the cap.
        NoConvergence: the Krylov solve ran out of budget.
    """
    validate_params(p)
    tol = tol or settings.SOLVER_TOL
    cap = cap or settings.TRUNCATION_CAP
    N = estimate_truncation(p)
    if N > cap:
        raise TruncationCeiling(f"starting truncation {N} exceeds cap {cap}")

    probe = _solve_level(p, max(2, N // 2), tol, max(p.omega, 1.0), v0)
    previous = probe.energy
    warm = probe.vector if v0 is None else v0
    escalations = 0
    matvecs = probe.matvecs

    while True:
        pair = _solve_level(p, N, tol, max(p.omega, abs(previous)), warm)
        matvecs += pair.matvecs
        tail = tail_weight(pair.vector)
        scale = max(p.omega, abs(pair.energy))
        drift = abs(pair.energy - previous)
        if drift <= tol * scale and tail <= settings.TAIL_LIMIT:
            break
        logger.debug("truncation %d not converged (drift=%.3e, tail=%.3e)", N, drift, tail)
        if 2 * N > cap:
            raise TruncationCeiling(
                f"truncation would exceed cap {cap} (omega={p.omega}, g1={p.g1}, g2={p.g2}, eps={p.eps})"
            )
        previous, warm = pair.energy, pair.vector
        N *= 2
        escalations += 1

    quasi = pair.gap is not None and pair.gap < settings.QUASI_DEGENERATE_GAP * p.Omega
    return GroundSolution(
        energy=pair.energy,
        coeffs=pair.vector,
        truncation_used=N,
        residual_norm=pair.residual,
        tail_weight=tail,
        escalations=escalations,
        gap=pair.gap,
        quasi_degenerate=bool(quasi),
        converged=pair.residual <= tol * scale,
        matvecs=matvecs,
    )
