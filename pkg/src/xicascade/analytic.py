"""Closed-form block amplitudes.

For one block the amplitudes are sums of three exponentials,

    G1 = sum_j B_j e^{i xi_j t}
    G2 = -(1/v1) sum_j B_j (abar1 + xi_j) e^{i (xi_j - delta1) t}
    G3 = (1/(v1 v2)) sum_j B_j [(xi_j + abar2 - delta1)(xi_j + abar1) - v1^2]
                               e^{i (xi_j - delta1 + delta2) t}

where ``xi_j`` are the roots of the block cubic.  The second factor of the
``G3`` bracket is ``xi_j + abar1``; that is what substituting ``G1`` into the
amplitude equations gives.  ``B_j`` come from the initial conditions
``G = (q, 0, 0)`` solved as a 3x3 linear system; the closed-form product
formula is kept as a cross-check.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cubic import CubicRoots, solve_cubic, vieta_ok
from .model import BlockCoefficients, BlockIndex, ModelParams, block_coefficients, initial_weights

log = logging.getLogger(__name__)

WEIGHT_CUTOFF = 1e-14


class SingularBlockError(RuntimeError):
    """The initial-condition system of a block could not be solved."""


@dataclass(frozen=True)
class AmplitudeTriple:
    g1: complex
    g2: complex
    g3: complex

    def norm(self) -> float:
        return abs(self.g1) ** 2 + abs(self.g2) ** 2 + abs(self.g3) ** 2


@dataclass(frozen=True)
class BlockSolution:
    roots: CubicRoots
    b: np.ndarray  # (3,) complex B_j, aligned with roots.xi
    coeffs: BlockCoefficients
    q: float
    closed_form_deviation: float = 0.0

    def amplitude_matrix(self) -> np.ndarray:
        return amplitude_matrix(self.coeffs, self.roots.xi, self.b)


@dataclass(frozen=True)
class BlockPropagation:
    """Amplitudes of one block on a time grid; ``amplitudes`` has shape (T, 3)."""

    block: BlockIndex
    amplitudes: np.ndarray
    method: str  # "analytic", "numeric-fallback" or "skipped"
    solution: BlockSolution | None = None

    @property
    def fallback(self) -> bool:
        return self.method == "numeric-fallback"


def _ansatz_rows(coeffs: BlockCoefficients, xi: np.ndarray) -> np.ndarray:
    """Factors multiplying B_j in G1, v1*G2 (up to sign) and v1*v2*G3 at t=0."""
    a1 = np.asarray(coeffs.abar1)[..., None]
    g2 = np.asarray(coeffs.Gamma2)[..., None]
    v1 = np.asarray(coeffs.v1)[..., None]
    row0 = np.ones_like(xi)
    row1 = a1 + xi
    row2 = (xi + g2) * (xi + a1) - v1**2
    return np.stack([row0, row1, row2], axis=-2)


def amplitude_matrix(coeffs: BlockCoefficients, xi: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix ``A[k, j]`` with ``G_k(t) = e^{i phase_k t} sum_j A[k, j] e^{i xi_j t}``."""
    rows = _ansatz_rows(coeffs, xi)
    v1 = np.asarray(coeffs.v1, dtype=float)[..., None]
    v2 = np.asarray(coeffs.v2, dtype=float)[..., None]
    b = np.asarray(b)
    return np.stack(
        [b, -b * rows[..., 1, :] / v1, b * rows[..., 2, :] / (v1 * v2)],
        axis=-2,
    )


def frame_phases(coeffs: BlockCoefficients) -> np.ndarray:
    """Extra phase rates ``(0, -delta1, delta2 - delta1)`` of G1, G2, G3."""
    return np.array([0.0, -coeffs.delta1, coeffs.delta2 - coeffs.delta1])


def solve_initial_coefficients(coeffs: BlockCoefficients, roots: CubicRoots, q) -> np.ndarray:
    """B_j from ``G1(0) = q``, ``G2(0) = 0``, ``G3(0) = 0``.

    Works on a single block or on stacked blocks (leading axes of ``roots.xi``).
    """
    xi = np.asarray(roots.xi)
    q = np.asarray(q, dtype=float)
    rows = _ansatz_rows(coeffs, xi)
    rhs = np.zeros(xi.shape, dtype=complex)
    rhs[..., 0] = q
    try:
        b = np.linalg.solve(rows, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularBlockError(
            f"singular initial-condition system (roots {xi!r}); coefficient bug?"
        ) from exc
    if not np.all(np.isfinite(b)):
        raise SingularBlockError(f"non-finite B_j for roots {xi!r}")
    return np.where(q[..., None] == 0, 0.0, b)


def closed_form_coefficients(coeffs: BlockCoefficients, roots: CubicRoots, q) -> np.ndarray:
    """Product formula for B_j.

    ``B_j = [(Gamma3 + xi_k + xi_l) abar1 + xi_k xi_l - Gamma4] q / (xi_jk xi_jl)``
    over the two other roots ``k, l``.
    """
    xi = np.asarray(roots.xi)
    a1 = np.asarray(coeffs.abar1)[..., None]
    g3 = np.asarray(coeffs.Gamma3)[..., None]
    g4 = np.asarray(coeffs.Gamma4)[..., None]
    xk = xi[..., [1, 0, 0]]
    xl = xi[..., [2, 2, 1]]
    num = (g3 + xk + xl) * a1 + xk * xl - g4
    return num * np.asarray(q, dtype=float)[..., None] / ((xi - xk) * (xi - xl))


def _relative_deviation(b, b_closed) -> np.ndarray:
    scale = np.max(np.abs(b), axis=-1)
    diff = np.max(np.abs(b - b_closed), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(scale > 0, diff / scale, 0.0)


def solve_block(params: ModelParams, block: BlockIndex) -> BlockSolution:
    coeffs = block_coefficients(params, block)
    q1, q2 = initial_weights(params)
    q = float(q1[block.n1] * q2[block.n2])
    roots = solve_cubic(coeffs.h1, coeffs.h2, coeffs.h3)
    b = solve_initial_coefficients(coeffs, roots, q)
    dev = 0.0
    if q > 0:
        dev = float(_relative_deviation(b, closed_form_coefficients(coeffs, roots, q)))
    return BlockSolution(roots=roots, b=b, coeffs=coeffs, q=q, closed_form_deviation=dev)


def amplitudes_at(sol: BlockSolution, t) -> AmplitudeTriple:
    """Evaluate the closed form at one physical time ``t >= 0``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    A = sol.amplitude_matrix()
    g = np.exp(1j * frame_phases(sol.coeffs) * t) * (A @ np.exp(1j * sol.roots.xi * t))
    return AmplitudeTriple(*(complex(x) for x in g))


def evaluate(A: np.ndarray, xi: np.ndarray, phases: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Amplitudes of stacked blocks on a time grid.

    ``A`` is (nb, 3, 3), ``xi`` is (nb, 3), ``phases`` is (3,), ``t`` is (T,).
    Returns (3, nb, T).
    """
    t = np.asarray(t, dtype=float)
    modes = np.exp(1j * xi[:, :, None] * t)  # (nb, 3, T)
    g = np.einsum("bkj,bjt->kbt", A, modes)
    return g * np.exp(1j * phases[:, None] * t)[:, None, :]


def needs_fallback(coeffs: BlockCoefficients, roots: CubicRoots) -> np.ndarray:
    """Blocks the closed form cannot handle: near-coincident roots or a zero coupling."""
    v1 = np.asarray(coeffs.v1)
    v2 = np.asarray(coeffs.v2)
    return np.asarray(roots.degenerate) | (v1 == 0) | (v2 == 0)


def propagate_block(params: ModelParams, block: BlockIndex, tau, dt: float = 1e-3) -> BlockPropagation:
    """Amplitudes of one block on the scaled-time grid ``tau``.

    Blocks with initial weight below ``WEIGHT_CUTOFF`` are returned as zeros.
    Blocks the closed form cannot represent are integrated numerically with
    step ``dt`` (scaled time) instead.
    """
    from .numeric import integrate_block

    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau < 0):
        raise ValueError("time grid must be non-negative")
    coeffs = block_coefficients(params, block)
    q1, q2 = initial_weights(params)
    q = float(q1[block.n1] * q2[block.n2])
    if q < WEIGHT_CUTOFF:
        return BlockPropagation(block, np.zeros((tau.size, 3), dtype=complex), "skipped")

    t = params.to_time(tau)
    roots = solve_cubic(coeffs.h1, coeffs.h2, coeffs.h3)
    if not vieta_ok(roots, coeffs.h1, coeffs.h2, coeffs.h3):
        raise ArithmeticError(f"Vieta check failed for block ({block.n1}, {block.n2})")
    if bool(needs_fallback(coeffs, roots)):
        log.info("block (%d, %d): degenerate roots, using numeric propagator", block.n1, block.n2)
        g = integrate_block(coeffs, q, t, dt / params.lambda1)
        return BlockPropagation(block, g, "numeric-fallback")

    b = solve_initial_coefficients(coeffs, roots, q)
    dev = float(_relative_deviation(b, closed_form_coefficients(coeffs, roots, q)))
    sol = BlockSolution(roots=roots, b=b, coeffs=coeffs, q=q, closed_form_deviation=dev)
    A = sol.amplitude_matrix()
    g = evaluate(A[None], roots.xi[None], frame_phases(coeffs), t)[:, 0, :]
    return BlockPropagation(block, g.T, "analytic", sol)


@dataclass
class AnalyticBlocks:
    """Closed-form data for a stack of blocks, ready for repeated evaluation."""

    xi: np.ndarray  # (nb, 3)
    A: np.ndarray  # (nb, 3, 3)
    phases: np.ndarray  # (3,)
    fallback: np.ndarray  # (nb,) bool
    closed_form_deviation: np.ndarray  # (nb,)

    def evaluate(self, t) -> np.ndarray:
        return evaluate(self.A, self.xi, self.phases, t)


def prepare_blocks(coeffs: BlockCoefficients, q: np.ndarray) -> AnalyticBlocks:
    """Roots and B_j for stacked blocks.

    Fallback blocks get zero coefficients; the caller must supply their
    amplitudes from the numeric propagator.
    """
    roots = solve_cubic(coeffs.h1, coeffs.h2, coeffs.h3)
    ok = vieta_ok(roots, coeffs.h1, coeffs.h2, coeffs.h3)
    if not np.all(ok):
        bad = np.flatnonzero(~ok)
        raise ArithmeticError(f"Vieta check failed for stacked blocks {bad[:10].tolist()}")
    fallback = needs_fallback(coeffs, roots)
    nb = q.size
    A = np.zeros((nb, 3, 3), dtype=complex)
    dev = np.zeros(nb)
    good = ~fallback
    if np.any(good):
        sub = coeffs.take(good)
        sub_roots = CubicRoots(xi=roots.xi[good], degenerate=roots.degenerate[good])
        b = solve_initial_coefficients(sub, sub_roots, q[good])
        A[good] = amplitude_matrix(sub, sub_roots.xi, b)
        dev[good] = _relative_deviation(b, closed_form_coefficients(sub, sub_roots, q[good]))
    return AnalyticBlocks(
        xi=roots.xi, A=A, phases=frame_phases(coeffs), fallback=fallback, closed_form_deviation=dev
    )
