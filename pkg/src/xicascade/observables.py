"""Reduced atomic density matrix, inversion and concurrence.

Amplitudes are held on the dense block grid as an array ``G`` of shape
``(3, nmax1 + 1, nmax2 + 1)`` (optionally with a trailing time axis), where
``G[k, n1, n2]`` is the amplitude of level ``k + 1`` in block ``(n1, n2)``.

Tracing out the field pairs amplitudes that share the same photon numbers.
Level 1 of block (n1, n2) carries photons (n1, n2), level 2 carries
(n1 + 1, n2) and level 3 carries (n1 + 1, n2 + 1), so

    rho12 = sum G1[n1 + 1, n2]     * conj(G2[n1, n2])
    rho13 = sum G1[n1 + 1, n2 + 1] * conj(G3[n1, n2])
    rho23 = sum G2[n1, n2 + 1]     * conj(G3[n1, n2])

with terms outside the truncated grid dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._complex import abs2, cmul, cmulc

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
RADICAND_CLAMP = 1e-12
IDENTITY_TOL = 1e-10


class PipelineError(RuntimeError):
    """An observable violated a structural invariant (Hermiticity, PSD, radicand sign)."""


@dataclass(frozen=True)
class ReducedDensityMatrix:
    rho: np.ndarray  # (3, 3) complex
    t: float = 0.0

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))


@dataclass(frozen=True)
class ObservableSample:
    tau: float
    W: float
    C: float
    rho11: float
    rho22: float
    rho33: float
    rho12: complex
    rho13: complex
    rho23: complex
    norm: float


def _block_sum(x: np.ndarray) -> np.ndarray:
    # Blocks flattened in lexicographic (n1, n2) order onto a contiguous last
    # axis: numpy then reduces each time row identically, whatever the number
    # of rows.  Reducing along axis 0 instead lets the result depend on the
    # chunk length.
    flat = x.reshape((-1,) + x.shape[2:])
    flat = np.ascontiguousarray(np.moveaxis(flat, 0, -1))
    return np.sum(flat, axis=-1)


def density_elements(G: np.ndarray) -> dict:
    """Independent elements of the reduced density matrix from amplitudes ``G``."""
    G1, G2, G3 = G[0], G[1], G[2]
    return {
        "rho11": _block_sum(abs2(G1)),
        "rho22": _block_sum(abs2(G2)),
        "rho33": _block_sum(abs2(G3)),
        "rho12": _block_sum(cmulc(G1[1:, :], G2[:-1, :])),
        "rho13": _block_sum(cmulc(G1[1:, 1:], G3[:-1, :-1])),
        "rho23": _block_sum(cmulc(G2[:, 1:], G3[:, :-1])),
    }


def assemble(el: dict) -> np.ndarray:
    """Stack element arrays into matrices of shape (..., 3, 3)."""
    r11, r22, r33 = (np.asarray(el[k]) for k in ("rho11", "rho22", "rho33"))
    r12, r13, r23 = (np.asarray(el[k]) for k in ("rho12", "rho13", "rho23"))
    rows = [
        [r11 + 0j, r12, r13],
        [np.conj(r12), r22 + 0j, r23],
        [np.conj(r13), np.conj(r23), r33 + 0j],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def reduced_density_matrix(G: np.ndarray, t: float = 0.0) -> ReducedDensityMatrix:
    """Atomic density matrix at one time from block amplitudes ``G`` (3, N1, N2)."""
    G = np.asarray(G)
    if G.ndim != 3 or G.shape[0] != 3:
        raise ValueError(f"expected amplitudes of shape (3, N1, N2), got {G.shape}")
    return ReducedDensityMatrix(rho=assemble(density_elements(G)), t=t)


def total_norm(G: np.ndarray) -> np.ndarray:
    """``sum |G1|^2 + |G2|^2 + |G3|^2`` over blocks, in fixed order."""
    G = np.asarray(G)
    per_block = abs2(G[0]) + abs2(G[1]) + abs2(G[2])
    return _block_sum(per_block)


def population_inversion(rho) -> float:
    """Excited minus ground population, ``rho11 - rho33``."""
    m = rho.rho if isinstance(rho, ReducedDensityMatrix) else np.asarray(rho)
    return np.real(m[..., 0, 0] - m[..., 2, 2])


def concurrence_radicands(rho):
    """Both forms of ``C^2 / 2`` for density matrices of shape (..., 3, 3).

    The first is ``N^2 - Tr(rho^2)`` with ``N = Tr rho``; the second is the
    pairwise sum ``sum_{i != j} (rho_ii rho_jj - rho_ij rho_ji)``.  They are
    equal for any Hermitian matrix.
    """
    m = rho.rho if isinstance(rho, ReducedDensityMatrix) else np.asarray(rho)
    N = np.real(np.trace(m, axis1=-2, axis2=-1))
    purity = np.zeros_like(N)
    for i in range(3):
        for j in range(3):
            purity = purity + np.real(cmul(m[..., i, j], m[..., j, i]))
    trace_form = N * N - purity
    diag = np.real(np.diagonal(m, axis1=-2, axis2=-1))
    pairwise = np.zeros_like(N)
    for i in range(3):
        for j in range(3):
            if i != j:
                pairwise = pairwise + diag[..., i] * diag[..., j] - np.real(cmul(m[..., i, j], m[..., j, i]))
    return trace_form, pairwise


def _check_hermitian(m: np.ndarray) -> None:
    err = np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))) if m.size else 0.0
    if err > HERMITIAN_TOL:
        raise PipelineError(f"density matrix not Hermitian (defect {err:.3e})")


def _safe_sqrt(x: np.ndarray) -> np.ndarray:
    if np.any(x < -RADICAND_CLAMP):
        raise PipelineError(f"negative concurrence radicand {np.min(x):.3e}")
    return np.sqrt(2.0 * np.maximum(x, 0.0))


def concurrence(rho, check: bool = True):
    """Concurrence ``sqrt(2 [N^2 - Tr rho^2])`` of the atom-field state.

    ``N`` is the (possibly decayed) state norm, not renormalised.  The
    pairwise form is evaluated alongside; a disagreement beyond ``1e-10`` in
    the radicand means a broken pipeline and raises :class:`PipelineError`.
    """
    m = rho.rho if isinstance(rho, ReducedDensityMatrix) else np.asarray(rho)
    if check:
        _check_hermitian(m)
    trace_form, pairwise = concurrence_radicands(m)
    gap = np.max(np.abs(trace_form - pairwise)) if np.size(trace_form) else 0.0
    if gap > IDENTITY_TOL:
        raise PipelineError(f"concurrence forms disagree by {gap:.3e}")
    c = _safe_sqrt(trace_form)
    return float(c) if np.ndim(c) == 0 else c


def concurrence_pairwise(rho):
    """Concurrence from the pairwise sum over populations and coherences."""
    _, pairwise = concurrence_radicands(rho)
    c = _safe_sqrt(pairwise)
    return float(c) if np.ndim(c) == 0 else c


def min_eigenvalues(rho: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(rho)[..., 0]


def check_physical(rho: np.ndarray) -> None:
    """Abort if ``rho`` is not Hermitian and positive semidefinite within tolerance."""
    _check_hermitian(rho)
    low = np.min(min_eigenvalues(rho)) if rho.size else 0.0
    if low < -PSD_TOL:
        raise PipelineError(f"density matrix has eigenvalue {low:.3e}")
