"""Model parameters and per-block coefficients for the cascade atom.

The atom-field state decomposes into independent three-dimensional Fock
blocks labelled by ``(n1, n2)`` and spanned by

    |1, n1, n2>,  |2, n1 + 1, n2>,  |3, n1 + 1, n2 + 1>.

Everything the propagators need for one block (diagonal energies, couplings,
slow detunings and the cubic coefficients) is derived here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

# Poisson tail target for the default truncation.
TAIL_TOLERANCE = 1e-10


def default_truncation(nbar: float) -> int:
    """Fock cutoff ``ceil(nbar + 12 sqrt(max(nbar, 1)))``."""
    return int(math.ceil(nbar + 12.0 * math.sqrt(max(nbar, 1.0))))


@dataclass(frozen=True)
class ModelParams:
    """All physical and numerical inputs of one run.

    Rates and frequencies are in units of inverse time; with ``lambda1 = 1``
    the scaled time ``tau = lambda1 * t`` coincides with ``t``.  A truncation
    of ``None`` selects :func:`default_truncation`.
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    mu: float = 0.0
    Delta1: float = 0.0
    Delta2: float = 0.0
    chi1: float = 0.0
    chi2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    nbar1: float = 10.0
    nbar2: float = 10.0
    nmax1: int | None = None
    nmax2: int | None = None
    tau_max: float = 50.0
    tau_step: float = 0.01

    def __post_init__(self):
        if not self.lambda1 > 0:
            raise ValueError("lambda1 sets the time scale and must be positive")
        if self.lambda2 < 0:
            raise ValueError("lambda2 must be non-negative")
        for name in ("chi1", "chi2", "gamma1", "gamma2", "nbar1", "nbar2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.nmax1 is None:
            object.__setattr__(self, "nmax1", default_truncation(self.nbar1))
        if self.nmax2 is None:
            object.__setattr__(self, "nmax2", default_truncation(self.nbar2))
        for name in ("nmax1", "nmax2"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value}")
            object.__setattr__(self, name, int(value))
        if not self.tau_step > 0:
            raise ValueError("tau_step must be positive")
        if self.tau_max < 0:
            raise ValueError("tau_max must be non-negative")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def tau_grid(self) -> np.ndarray:
        """Scaled-time grid ``0, tau_step, ..., tau_max`` (inclusive)."""
        n = int(round(self.tau_max / self.tau_step))
        return np.arange(n + 1) * self.tau_step

    def to_time(self, tau):
        """Convert scaled time to physical time."""
        return np.asarray(tau, dtype=float) / self.lambda1

    def truncation_tails(self) -> tuple[float, float]:
        """Coherent weight missing beyond ``nmax`` for each mode."""
        tails = []
        for nbar, nmax in ((self.nbar1, self.nmax1), (self.nbar2, self.nmax2)):
            n = np.arange(nmax + 1)
            kept = math.fsum(coherent_weight(math.sqrt(nbar), n) ** 2)
            tails.append(max(0.0, 1.0 - kept))
        return tails[0], tails[1]


@dataclass(frozen=True)
class BlockIndex:
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"block indices must be >= 0, got ({self.n1}, {self.n2})")

    def check(self, params: ModelParams) -> None:
        if self.n1 > params.nmax1 or self.n2 > params.nmax2:
            raise ValueError(
                f"block ({self.n1}, {self.n2}) outside truncation "
                f"({params.nmax1}, {params.nmax2})"
            )


@dataclass(frozen=True)
class BlockCoefficients:
    """Derived constants of one block (or a stack of blocks, as arrays).

    ``Gamma3`` here is ``abar1 + Gamma2``: with that value the cubic built from
    ``h1, h2, h3`` is exactly the characteristic equation of the amplitude
    equations, and the closed-form ``B_j`` expression follows from the
    Vandermonde system of the initial conditions.
    """

    abar1: complex
    abar2: complex
    abar3: complex
    v1: float
    v2: float
    delta1: float
    delta2: float
    Gamma1: complex
    Gamma2: complex
    Gamma3: complex
    Gamma4: complex
    h1: complex
    h2: complex
    h3: complex

    def take(self, index) -> "BlockCoefficients":
        """Select a subset of blocks from array-valued coefficients."""
        values = {}
        for f in fields(self):
            value = getattr(self, f.name)
            values[f.name] = value[index] if np.ndim(value) else value
        return BlockCoefficients(**values)


def derive_slow_detunings(params: ModelParams) -> tuple[float, float]:
    """Detunings left after the modulation shift: ``delta_j = Delta_j - mu``."""
    return params.Delta1 - params.mu, params.Delta2 - params.mu


def coherent_weight(alpha: float, n):
    """Coherent-state amplitude ``exp(-alpha^2/2) alpha^n / sqrt(n!)``.

    Evaluated in the log domain so large ``n`` neither overflows nor loses
    precision.  Accepts an integer or an integer array for ``n``.
    """
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("photon number must be non-negative")
    alpha = float(alpha)
    if alpha == 0.0:
        out = (n_arr == 0).astype(float)
        return float(out) if out.ndim == 0 else out
    from scipy.special import gammaln

    log_q = -0.5 * alpha * alpha + n_arr * math.log(abs(alpha)) - 0.5 * gammaln(n_arr + 1.0)
    out = np.exp(log_q)
    if alpha < 0:
        out = out * np.where(n_arr % 2 == 1, -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def initial_weights(params: ModelParams):
    """Arrays ``q_{n1}`` and ``q_{n2}`` over the truncated Fock ranges."""
    q1 = coherent_weight(math.sqrt(params.nbar1), np.arange(params.nmax1 + 1))
    q2 = coherent_weight(math.sqrt(params.nbar2), np.arange(params.nmax2 + 1))
    return np.atleast_1d(q1), np.atleast_1d(q2)


def _coefficients(params: ModelParams, n1, n2) -> BlockCoefficients:
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    chi1, chi2 = params.chi1, params.chi2
    g1, g2 = params.gamma1, params.gamma2

    # Kerr shifts chi n(n-1) on each basis state of the block
    kerr1 = chi1 * n1 * (n1 - 1) + chi2 * n2 * (n2 - 1)
    kerr2 = chi1 * n1 * (n1 + 1) + chi2 * n2 * (n2 - 1)
    kerr3 = chi1 * n1 * (n1 + 1) + chi2 * n2 * (n2 + 1)
    # -(i/2) g1 n1 (s11 + s22) - (i/2) g2 n2 (s22 + s33) on the same states
    damp1 = -0.5 * g1 * n1
    damp2 = -0.5 * (g1 * (n1 + 1) + g2 * n2)
    damp3 = -0.5 * g2 * (n2 + 1)

    abar1 = kerr1 + 1j * damp1
    abar2 = kerr2 + 1j * damp2
    abar3 = kerr3 + 1j * damp3
    v1 = 0.5 * params.lambda1 * np.sqrt(n1 + 1)
    v2 = 0.5 * params.lambda2 * np.sqrt(n2 + 1)
    delta1, delta2 = derive_slow_detunings(params)

    Gamma1 = (delta2 - delta1) + 0j * abar1
    Gamma2 = abar2 - delta1
    Gamma3 = abar1 + Gamma2
    Gamma4 = abar1 * Gamma2 - v1**2
    h1 = Gamma1 + Gamma3 + abar3
    h2 = Gamma1 * Gamma3 + Gamma4 + abar3 * Gamma3 - v2**2
    h3 = Gamma1 * Gamma4 + abar3 * Gamma4 - abar1 * v2**2
    return BlockCoefficients(
        abar1=abar1, abar2=abar2, abar3=abar3,
        v1=v1, v2=v2, delta1=delta1, delta2=delta2,
        Gamma1=Gamma1, Gamma2=Gamma2, Gamma3=Gamma3, Gamma4=Gamma4,
        h1=h1, h2=h2, h3=h3,
    )


def block_coefficients(params: ModelParams, block: BlockIndex) -> BlockCoefficients:
    """Coefficients of a single block, as Python scalars."""
    block.check(params)
    c = _coefficients(params, block.n1, block.n2)
    values = {}
    for f in fields(c):
        value = getattr(c, f.name)
        value = np.asarray(value).item()
        values[f.name] = value
    return BlockCoefficients(**values)


def block_coefficient_grid(params: ModelParams, n1, n2) -> BlockCoefficients:
    """Vectorised :func:`block_coefficients` over index arrays ``n1, n2``."""
    return _coefficients(params, n1, n2)
