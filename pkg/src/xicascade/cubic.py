"""Roots of the monic cubic ``xi^3 + h1 xi^2 + h2 xi + h3 = 0``.

Two routes are provided.  :func:`solve_cubic_real` is the trigonometric
(Viete) formula, valid when all three roots are real.  :func:`solve_cubic_complex`
is Cardano's formula in complex arithmetic followed by a short Newton polish,
and handles arbitrary complex coefficients.

All functions broadcast over array-valued coefficients; the roots come back
in the last axis of ``CubicRoots.xi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEGENERACY_TOL = 1e-6
VIETA_TOL = 1e-9
# slack on the arccos argument before we call the roots complex
ARCCOS_SLACK = 1e-12
# imaginary parts below this (relative) are rounding noise on real roots
PAIR_TOL = 1e-7
_OMEGA = np.exp(2j * np.pi / 3)


class ComplexRootsError(ValueError):
    """Raised by :func:`solve_cubic_real` when some roots are not real.

    ``mask`` marks the offending entries when the input was an array.
    """

    def __init__(self, message, mask=None):
        super().__init__(message)
        self.mask = mask


@dataclass(frozen=True)
class CubicRoots:
    xi: np.ndarray  # (..., 3), ordered by real part then imaginary part
    degenerate: np.ndarray  # (...) bool

    @property
    def xi1(self):
        return self.xi[..., 0]

    @property
    def xi2(self):
        return self.xi[..., 1]

    @property
    def xi3(self):
        return self.xi[..., 2]

    @property
    def degenerate_flag(self) -> bool:
        return bool(np.any(self.degenerate))


def _order(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi)
    idx = np.lexsort((xi.imag, xi.real), axis=-1)
    return np.take_along_axis(xi, idx, axis=-1)


def _degenerate(xi: np.ndarray) -> np.ndarray:
    gaps = np.stack(
        [
            np.abs(xi[..., 0] - xi[..., 1]),
            np.abs(xi[..., 0] - xi[..., 2]),
            np.abs(xi[..., 1] - xi[..., 2]),
        ],
        axis=-1,
    )
    scale = 1.0 + np.max(np.abs(xi), axis=-1)
    return np.min(gaps, axis=-1) < DEGENERACY_TOL * scale


def _finish(xi) -> CubicRoots:
    xi = _order(xi)
    return CubicRoots(xi=xi, degenerate=_degenerate(xi))


def _ldexp(x, k):
    if np.iscomplexobj(x):
        return np.ldexp(x.real, k) + 1j * np.ldexp(x.imag, k)
    return np.ldexp(x, k)


def _power_of_two_scale(h1, h2, h3):
    # xi = 2^e eta maps the cubic to one with O(1) coefficients; scaling by a
    # power of two is exact, even for subnormal inputs
    size = np.maximum(np.maximum(np.abs(h1), np.sqrt(np.abs(h2))), np.cbrt(np.abs(h3)))
    _, e = np.frexp(np.where(size > 0, size, 1.0))
    return e, _ldexp(h1, -e), _ldexp(h2, -2 * e), _ldexp(h3, -3 * e)


def _unscale(e, xi):
    return _ldexp(xi, e[..., None])


def solve_cubic_real(h1, h2, h3) -> CubicRoots:
    """Three real roots from the trigonometric formula.

    ``xi_m = -h1/3 + (2/3) sqrt(h1^2 - 3 h2) cos(phi + 2 pi (m - 1)/3)`` with
    ``phi = arccos[(9 h1 h2 - 2 h1^3 - 27 h3) / (2 (h1^2 - 3 h2)^(3/2))] / 3``.

    The exponent in the denominator is 3/2; with 2/3 the argument is not
    scale invariant and the formula fails against brute-force roots.

    Raises
    ------
    ComplexRootsError
        If some roots are complex (``h1^2 - 3 h2 < 0`` or the arccos argument
        falls outside ``[-1, 1]`` by more than ``ARCCOS_SLACK``).
    """
    h1, h2, h3 = (np.asarray(h, dtype=float) for h in np.broadcast_arrays(h1, h2, h3))
    expo, h1, h2, h3 = _power_of_two_scale(h1, h2, h3)
    D = h1 * h1 - 3.0 * h2
    num = 9.0 * h1 * h2 - 2.0 * h1**3 - 27.0 * h3

    scale = 1.0 + np.maximum(np.abs(h1) ** 3, np.abs(h3))
    triple = D <= 0.0
    # D == 0 is a triple root only if the numerator vanishes too
    bad = (D < 0.0) | (triple & (np.abs(num) > 1e-12 * scale))
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(triple, 0.0, num / (2.0 * np.abs(D) ** 1.5))
    bad |= np.abs(arg) > 1.0 + ARCCOS_SLACK
    if np.any(bad):
        raise ComplexRootsError("cubic has complex roots", mask=bad if bad.ndim else None)

    phi = np.arccos(np.clip(arg, -1.0, 1.0)) / 3.0
    radius = (2.0 / 3.0) * np.sqrt(np.where(triple, 0.0, D))
    m = np.arange(3)
    xi = -h1[..., None] / 3.0 + radius[..., None] * np.cos(phi[..., None] + 2.0 * np.pi * m / 3.0)
    return _finish(_unscale(expo, xi.astype(complex)))


def _newton_polish(xi, h1, h2, h3, iterations=5):
    xi = xi.copy()
    h1, h2, h3 = h1[..., None], h2[..., None], h3[..., None]
    for _ in range(iterations):
        f = ((xi + h1) * xi + h2) * xi + h3
        df = (3.0 * xi + 2.0 * h1) * xi + h2
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(df != 0, f / df, 0.0)
        trial = xi - step
        f_trial = ((trial + h1) * trial + h2) * trial + h3
        better = np.abs(f_trial) < np.abs(f)
        if not np.any(better):
            break
        xi = np.where(better, trial, xi)
    return xi


def _cardano(h1, h2, h3):
    shift = h1 / 3.0
    p = h2 - h1 * h1 / 3.0
    q = 2.0 * h1**3 / 27.0 - h1 * h2 / 3.0 + h3

    s = np.sqrt((q / 2.0) ** 2 + (p / 3.0) ** 3)
    w_plus = -q / 2.0 + s
    w_minus = -q / 2.0 - s
    # the larger branch avoids cancellation
    w = np.where(np.abs(w_plus) >= np.abs(w_minus), w_plus, w_minus)
    u = w ** (1.0 / 3.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(u != 0, -p / (3.0 * u), 0.0)

    k = np.arange(3)
    y = _OMEGA**k * u[..., None] + _OMEGA ** (-k) * v[..., None]
    return _newton_polish(y - shift[..., None], h1, h2, h3)


def _isolated(xi: np.ndarray) -> np.ndarray:
    """The root farthest from its nearest neighbour (best conditioned)."""
    d = np.abs(xi[..., :, None] - xi[..., None, :])
    d = d + np.where(np.eye(3, dtype=bool), np.inf, 0.0)
    idx = np.argmax(np.min(d, axis=-1), axis=-1)
    return np.take_along_axis(xi, idx[..., None], axis=-1)[..., 0]


def _deflate(r, h1, h2, h3, real=False):
    """Roots ``(r, x1, x2)``: divide out ``xi - r`` and solve the quadratic stably.

    Near-coincident roots are ill conditioned individually, but this keeps the
    root set consistent with the coefficients to rounding.
    """
    b = h1 + r
    c = h2 + r * b
    disc = np.sqrt(np.asarray(b * b - 4.0 * c, dtype=complex))
    sign = np.where(np.real(np.conj(b) * disc) >= 0, 1.0, -1.0)
    q = -0.5 * (b + sign * disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        x2 = np.where(q != 0, c / q, 0.0)
    x1 = q
    if real:
        pair = np.imag(disc) != 0
        x1 = np.where(pair, -0.5 * b + 0.5j * np.abs(np.imag(disc)), x1)
        x2 = np.where(pair, np.conj(x1), np.real(x2) + 0j)
        x1 = np.where(pair, x1, np.real(x1) + 0j)
    return np.stack([np.asarray(r, dtype=complex) + 0 * x1, x1, x2], axis=-1)


def solve_cubic_complex(h1, h2, h3) -> CubicRoots:
    """Three roots of a cubic with complex coefficients.

    Cardano with Newton polishing; the best isolated root is then divided
    out and the remaining pair taken from the quadratic.
    """
    h1, h2, h3 = (np.asarray(h, dtype=complex) for h in np.broadcast_arrays(h1, h2, h3))
    expo, h1, h2, h3 = _power_of_two_scale(h1, h2, h3)
    xi = _deflate(_isolated(_cardano(h1, h2, h3)), h1, h2, h3)
    return _finish(_unscale(expo, xi))


def _solve_real_general(h1, h2, h3) -> np.ndarray:
    """Real coefficients, any root pattern: one real root plus a real or conjugate pair."""
    expo, h1, h2, h3 = _power_of_two_scale(h1, h2, h3)
    xi = _cardano(h1 + 0j, h2 + 0j, h3 + 0j)
    tiny = PAIR_TOL * (1.0 + np.max(np.abs(xi), axis=-1))
    all_real = np.all(np.abs(xi.imag) <= tiny[..., None], axis=-1)
    nearest_real = np.take_along_axis(xi, np.argmin(np.abs(xi.imag), axis=-1)[..., None], axis=-1)[..., 0]
    anchor = np.where(all_real, _isolated(xi.real + 0j), nearest_real).real
    anchor = _newton_polish(anchor[..., None], h1, h2, h3)[..., 0]
    return _unscale(expo, _deflate(anchor, h1, h2, h3, real=True))


def solve_cubic(h1, h2, h3) -> CubicRoots:
    """Dispatch: trigonometric route for real coefficients, complex otherwise.

    Real-coefficient entries whose roots turn out complex (or sit so close to
    a double root that the trigonometric form is unreliable) fall through
    individually to a route that keeps conjugate pairs exact.
    """
    h1, h2, h3 = (np.asarray(h) for h in np.broadcast_arrays(h1, h2, h3))
    is_real = np.all([np.all(np.imag(h) == 0) for h in (h1, h2, h3)])
    if not is_real:
        return solve_cubic_complex(h1, h2, h3)
    r1, r2, r3 = np.real(h1), np.real(h2), np.real(h3)
    try:
        roots = solve_cubic_real(r1, r2, r3)
    except ComplexRootsError as err:
        if err.mask is None:
            return _finish(_solve_real_general(r1, r2, r3))
        mask = err.mask
    else:
        mask = ~vieta_ok(roots, r1, r2, r3)
        if not np.any(mask):
            return roots
        if mask.ndim == 0:
            return _finish(_solve_real_general(r1, r2, r3))
        xi = roots.xi.copy()
        xi[mask] = _solve_real_general(r1[mask], r2[mask], r3[mask])
        return _finish(xi)
    xi = np.empty(mask.shape + (3,), dtype=complex)
    ok = ~mask
    xi[ok] = solve_cubic_real(r1[ok], r2[ok], r3[ok]).xi
    xi[mask] = _solve_real_general(r1[mask], r2[mask], r3[mask])
    return _finish(xi)


def vieta_residuals(roots: CubicRoots, h1, h2, h3):
    """Absolute defects of the three Vieta relations for monic cubics."""
    x1, x2, x3 = roots.xi1, roots.xi2, roots.xi3
    r1 = np.abs(x1 + x2 + x3 + h1)
    r2 = np.abs(x1 * x2 + x1 * x3 + x2 * x3 - h2)
    r3 = np.abs(x1 * x2 * x3 + h3)
    return r1, r2, r3


def vieta_ok(roots: CubicRoots, h1, h2, h3) -> np.ndarray:
    """Whether every Vieta defect is below ``VIETA_TOL * (1 + max|h|)``."""
    scale = 1.0 + np.max(np.abs(np.stack(np.broadcast_arrays(h1, h2, h3))), axis=0)
    r = np.stack(vieta_residuals(roots, h1, h2, h3))
    return np.all(r <= VIETA_TOL * scale, axis=0)
