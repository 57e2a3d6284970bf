"""Run orchestration: propagate every block, reduce to observables, write CSV."""

from __future__ import annotations

import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._complex import cmul
from .analytic import WEIGHT_CUTOFF, prepare_blocks
from .model import TAIL_TOLERANCE, ModelParams, block_coefficient_grid, block_coefficients, initial_weights
from .numeric import DEFAULT_DT, PROBE_HORIZON, check_convergence, probe_block, stream_blocks
from .observables import (
    ObservableSample,
    assemble,
    check_physical,
    concurrence_radicands,
    density_elements,
    PipelineError,
    total_norm,
    _safe_sqrt,
    IDENTITY_TOL,
)

log = logging.getLogger(__name__)

ENGINES = ("analytic", "numeric", "both")
CSV_COLUMNS = (
    "tau", "W", "C", "rho11", "rho22", "rho33",
    "re_rho12", "im_rho12", "re_rho13", "im_rho13", "re_rho23", "im_rho23", "norm",
)
UNITARITY_TOL = 1e-8
MONOTONE_TOL = 1e-10
ORACLE_TOL = 1e-6


class SanityError(RuntimeError):
    """A runtime sanity gate failed; the run output is not trustworthy."""


@dataclass
class ObservableSeries:
    tau: np.ndarray
    W: np.ndarray
    C: np.ndarray
    rho11: np.ndarray
    rho22: np.ndarray
    rho33: np.ndarray
    rho12: np.ndarray
    rho13: np.ndarray
    rho23: np.ndarray
    norm: np.ndarray
    radicand_trace: np.ndarray
    radicand_pairwise: np.ndarray
    min_eigenvalue: np.ndarray

    def __len__(self):
        return self.tau.size

    def sample(self, i: int) -> ObservableSample:
        return ObservableSample(
            tau=float(self.tau[i]), W=float(self.W[i]), C=float(self.C[i]),
            rho11=float(self.rho11[i]), rho22=float(self.rho22[i]), rho33=float(self.rho33[i]),
            rho12=complex(self.rho12[i]), rho13=complex(self.rho13[i]), rho23=complex(self.rho23[i]),
            norm=float(self.norm[i]),
        )

    def rho(self) -> np.ndarray:
        return assemble(
            dict(rho11=self.rho11, rho22=self.rho22, rho33=self.rho33,
                 rho12=self.rho12, rho13=self.rho13, rho23=self.rho23)
        )

    def columns(self) -> np.ndarray:
        return np.column_stack([
            self.tau, self.W, self.C, self.rho11, self.rho22, self.rho33,
            self.rho12.real, self.rho12.imag, self.rho13.real, self.rho13.imag,
            self.rho23.real, self.rho23.imag, self.norm,
        ])


@dataclass
class RunReport:
    engine: str
    active_blocks: int
    fallback_blocks: list = field(default_factory=list)
    max_closed_form_deviation: float = 0.0
    oracle_deviation: float | None = None
    convergence_delta: float | None = None


@dataclass
class _BlockSet:
    n1: np.ndarray
    n2: np.ndarray
    q: np.ndarray


def active_blocks(params: ModelParams, cutoff: float = WEIGHT_CUTOFF) -> _BlockSet:
    """Blocks with initial weight ``q_{n1} q_{n2} >= cutoff``, lexicographic order."""
    q1, q2 = initial_weights(params)
    weight = np.outer(q1, q2)
    n1, n2 = np.nonzero(weight >= cutoff)
    return _BlockSet(n1=n1, n2=n2, q=weight[n1, n2])


def _partition(n: int, workers: int) -> list[np.ndarray]:
    workers = max(1, min(workers, n)) if n else 1
    return [part for part in np.array_split(np.arange(n), workers)]


def _evaluate_analytic(ab, t):
    # explicit j-sum keeps per-block arithmetic independent of the partition
    modes = np.exp(1j * ab.xi[:, :, None] * t[None, None, :])
    g = np.zeros((3, ab.xi.shape[0], t.size), dtype=complex)
    for k in range(3):
        acc = cmul(ab.A[:, k, 0, None], modes[:, 0, :])
        for j in (1, 2):
            acc = acc + cmul(ab.A[:, k, j, None], modes[:, j, :])
        g[k] = cmul(acc, np.exp(1j * ab.phases[k] * t)[None, :])
    return g


class _NumericWorker:
    def __init__(self, coeffs, q, t_grid, dt):
        self._it = stream_blocks(coeffs, q, t_grid, dt)

    def take(self, count: int) -> np.ndarray:
        return np.stack([next(self._it) for _ in range(count)], axis=-1)


def simulate(
    params: ModelParams,
    engine: str = "analytic",
    *,
    dt: float = DEFAULT_DT,
    workers: int = 1,
    chunk: int = 128,
    check: bool = True,
) -> tuple[ObservableSeries, RunReport]:
    """Observables on the scaled-time grid of ``params``.

    ``engine`` selects the closed form, RK4 (step ``dt`` in scaled time) or
    both; with ``both`` the observables come from the closed form and the
    largest amplitude deviation from RK4 is reported and gated at 1e-6.
    Blocks are split across ``workers`` threads; per-block arithmetic and
    the reduction order do not depend on the split.
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    tau = params.tau_grid()
    t = params.to_time(tau)
    dt_phys = dt / params.lambda1
    tails = params.truncation_tails()
    if max(tails) > TAIL_TOLERANCE:
        log.warning("truncation drops coherent weight %.1e / %.1e (tolerance %.0e)", *tails, TAIL_TOLERANCE)
    blocks = active_blocks(params)
    coeffs = block_coefficient_grid(params, blocks.n1, blocks.n2)
    nb = blocks.q.size
    report = RunReport(engine=engine, active_blocks=nb)
    parts = _partition(nb, workers)
    pool = ThreadPoolExecutor(max_workers=max(1, workers))

    try:
        analytic = numeric = None
        fallback_amps = None
        if engine in ("analytic", "both"):
            prepared = list(pool.map(lambda p: prepare_blocks(coeffs.take(p), blocks.q[p]), parts))
            analytic = list(zip(parts, prepared))
            fb = np.concatenate([p[ab.fallback] for p, ab in analytic]) if nb else np.array([], int)
            report.max_closed_form_deviation = max(
                (float(np.max(ab.closed_form_deviation, initial=0.0)) for _, ab in analytic), default=0.0
            )
            if fb.size:
                report.fallback_blocks = [(int(blocks.n1[i]), int(blocks.n2[i])) for i in fb]
                log.info("%d degenerate block(s) routed to RK4: %s", fb.size, report.fallback_blocks[:5])
                fallback_amps = (fb, _NumericWorker(coeffs.take(fb), blocks.q[fb], t, dt_phys))
        if engine in ("numeric", "both"):
            numeric = [(p, _NumericWorker(coeffs.take(p), blocks.q[p], t, dt_phys)) for p in parts]
        if nb and (numeric is not None or fallback_amps is not None):
            probe = probe_block(params)
            horizon = min(t[-1], PROBE_HORIZON / params.lambda1)
            if horizon > 0:
                q1, q2 = initial_weights(params)
                report.convergence_delta = check_convergence(
                    block_coefficients(params, probe), q1[probe.n1] * q2[probe.n2], horizon, dt_phys
                )

        shape = (3, params.nmax1 + 1, params.nmax2 + 1)
        pieces = []
        oracle_dev = 0.0
        for start in range(0, t.size, chunk):
            tc = t[start:start + chunk]
            G_act = np.zeros((3, nb, tc.size), dtype=complex)
            if analytic is not None:
                results = pool.map(lambda item: _evaluate_analytic(item[1], tc), analytic)
                for (p, _), g in zip(analytic, results):
                    G_act[:, p, :] = g
                if fallback_amps is not None:
                    fb, worker = fallback_amps
                    G_act[:, fb, :] = worker.take(tc.size)
            if numeric is not None:
                results = list(pool.map(lambda item: item[1].take(tc.size), numeric))
                if analytic is None:
                    for (p, _), g in zip(numeric, results):
                        G_act[:, p, :] = g
                else:
                    for (p, _), g in zip(numeric, results):
                        if p.size:
                            oracle_dev = max(oracle_dev, float(np.max(np.abs(G_act[:, p, :] - g))))
            G = np.zeros(shape + (tc.size,), dtype=complex)
            G[:, blocks.n1, blocks.n2, :] = G_act
            pieces.append(_reduce(G, tau[start:start + chunk], check))
    finally:
        pool.shutdown()

    series = ObservableSeries(**{
        k: np.concatenate([getattr(p, k) for p in pieces]) for k in ObservableSeries.__dataclass_fields__
    })
    if engine == "both":
        report.oracle_deviation = oracle_dev
        log.info("max |G_analytic - G_numeric| = %.3e", oracle_dev)
    if check:
        _gate(params, series, report)
    return series, report


def _reduce(G: np.ndarray, tau: np.ndarray, check: bool) -> ObservableSeries:
    el = density_elements(G)
    rho = assemble(el)
    norm = total_norm(G)
    trace_form, pairwise = concurrence_radicands(rho)
    min_eig = np.linalg.eigvalsh(rho)[..., 0]
    if check:
        check_physical(rho)
        gap = np.max(np.abs(trace_form - pairwise))
        if gap > IDENTITY_TOL:
            raise PipelineError(f"concurrence forms disagree by {gap:.3e}")
    return ObservableSeries(
        tau=tau, W=el["rho11"] - el["rho33"], C=_safe_sqrt(trace_form),
        rho11=el["rho11"], rho22=el["rho22"], rho33=el["rho33"],
        rho12=el["rho12"], rho13=el["rho13"], rho23=el["rho23"], norm=norm,
        radicand_trace=trace_form, radicand_pairwise=pairwise, min_eigenvalue=min_eig,
    )


def _gate(params: ModelParams, s: ObservableSeries, report: RunReport) -> None:
    if params.gamma1 == 0 and params.gamma2 == 0:
        # conservation of the kept weight; a short truncation only warns
        drift = float(np.max(np.abs(s.norm - s.norm[0])))
        if drift > UNITARITY_TOL:
            raise SanityError(f"norm drift {drift:.3e} in an undamped run")
    else:
        rise = float(np.max(np.diff(s.norm), initial=0.0))
        if rise > MONOTONE_TOL:
            raise SanityError(f"norm increased by {rise:.3e} in a damped run")
    if report.oracle_deviation is not None and report.oracle_deviation > ORACLE_TOL:
        raise SanityError(f"analytic and RK4 amplitudes differ by {report.oracle_deviation:.3e}")


def format_csv(series: ObservableSeries) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in series.columns():
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_csv(series: ObservableSeries, path) -> Path:
    """Write atomically: a failed write leaves no partial file behind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(series))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_csv(path) -> dict:
    """Load a CSV written by :func:`write_csv` into column arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(CSV_COLUMNS)}
