"""Sparse direct solution of saddle systems and inf-sup spectra.

The discrete stability of a pairing is measured through the generalized
eigenvalue problem K x = xi N x, where K is the full (indefinite) saddle
matrix and N = blockdiag(V-norm, M-norm) collects the Riesz matrices of the
chosen norms.  The smallest eigenvalue magnitude is the discrete inf-sup
constant; max/min is the spectral condition number reported in the
conditioning studies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionCapExceeded, NormNotSPD, SingularSystem
from .forms import SaddleSystem
from .spaces import GraphFunction

NULLSPACE_CUTOFF = 1e-12


def solve_saddle(system: SaddleSystem) -> tuple[GraphFunction, GraphFunction]:
    """Direct sparse LU solve of the full saddle system.

    Raises SingularSystem on rank deficiency (e.g. a pure-Neumann pressure
    nullspace); the residual is checked to 1e-10 relative.
    """
    K = system.full_matrix().tocsc()
    rhs = system.rhs()
    try:
        lu = spla.splu(K)
        x = lu.solve(rhs)
    except RuntimeError as exc:
        raise SingularSystem(f"sparse LU failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystem("solution contains non-finite entries")
    scale = max(np.linalg.norm(rhs), np.linalg.norm(x), 1.0)
    residual = np.linalg.norm(K @ x - rhs) / scale
    if residual > 1e-10:
        raise SingularSystem(f"relative residual {residual:.2e} exceeds 1e-10")
    return system.split_solution(x)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray       # sorted by magnitude, nullspace modes removed
    beta: float                   # smallest retained |xi|
    xi_max: float
    condition: float
    n_nullspace: int = 0

    @classmethod
    def from_eigenvalues(cls, eig: np.ndarray) -> "SpectrumReport":
        mags = np.abs(eig)
        order = np.argsort(mags)
        eig = eig[order]
        mags = mags[order]
        cutoff = NULLSPACE_CUTOFF * mags[-1]
        keep = mags > cutoff
        n_null = int(np.sum(~keep))
        if n_null:
            warnings.warn(f"excluding {n_null} numerical nullspace eigenvalue(s) "
                          f"below {cutoff:.2e}", stacklevel=2)
        eig = eig[keep]
        mags = mags[keep]
        return cls(eig, float(mags[0]), float(mags[-1]), float(mags[-1] / mags[0]), n_null)


def infsup_spectrum(system: SaddleSystem, v_norm, m_norm,
                    dense_cap: int = 4000) -> SpectrumReport:
    """Spectrum of K x = xi N x with N = blockdiag(v_norm, m_norm).

    Solved densely after checking N is SPD via Cholesky; the symmetric
    pencil has a real spectrum.
    """
    N = sp.block_diag([v_norm, m_norm], format="csr")
    K = system.full_matrix()
    n = K.shape[0]
    if n != N.shape[0]:
        raise NormNotSPD(f"norm dimension {N.shape[0]} does not match system size {n}")
    if n > dense_cap:
        raise DimensionCapExceeded(f"system size {n} exceeds dense cap {dense_cap}")
    Kd = K.toarray()
    Nd = N.toarray()
    sym = np.linalg.norm(Kd - Kd.T) / max(np.linalg.norm(Kd), 1.0)
    if sym > 1e-10:
        raise SingularSystem(f"saddle matrix asymmetry {sym:.2e}")
    try:
        scipy.linalg.cholesky(Nd)
    except np.linalg.LinAlgError as exc:
        raise NormNotSPD(f"norm matrix is not SPD: {exc}") from exc
    eig = scipy.linalg.eigh(Kd, Nd, eigvals_only=True)
    return SpectrumReport.from_eigenvalues(np.asarray(eig))


def rayleigh_quotient(system: SaddleSystem, v_norm, m_norm, x: np.ndarray) -> float:
    """|x^T K x| / (x^T N x) for cross-checking extremal eigenvalues."""
    K = system.full_matrix()
    N = sp.block_diag([v_norm, m_norm], format="csr")
    return abs(float(x @ (K @ x))) / float(x @ (N @ x))
