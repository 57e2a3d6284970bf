import math

import mpmath
import numpy as np
import pytest

from xicascade.model import (
    BlockIndex,
    ModelParams,
    block_coefficient_grid,
    block_coefficients,
    coherent_weight,
    default_truncation,
    derive_slow_detunings,
    initial_weights,
)


def test_slow_detunings():
    assert derive_slow_detunings(ModelParams()) == (0.0, 0.0)
    assert derive_slow_detunings(ModelParams(Delta1=7.0, Delta2=7.0)) == (7.0, 7.0)
    assert derive_slow_detunings(ModelParams(Delta1=5.0, Delta2=5.0, mu=2.0)) == (3.0, 3.0)


def test_coherent_weight_vacuum():
    assert coherent_weight(0.0, 0) == 1.0
    assert coherent_weight(0.0, 3) == 0.0
    np.testing.assert_array_equal(coherent_weight(0.0, np.arange(4)), [1, 0, 0, 0])


def test_coherent_weight_against_mpmath():
    mpmath.mp.dps = 40
    exact = mpmath.exp(-5) * mpmath.mpf(10) ** 5 / mpmath.sqrt(mpmath.factorial(10))
    got = coherent_weight(math.sqrt(10.0), 10)
    assert abs(got - float(exact)) < 1e-14
    assert round(got, 5) == 0.35371
    # its square is the Poisson probability of 10 photons at mean 10
    assert round(got**2, 5) == 0.12511


def test_coherent_weight_large_n_no_overflow():
    q = coherent_weight(math.sqrt(400.0), np.arange(1200))
    assert np.all(np.isfinite(q))
    assert abs(math.fsum(q**2) - 1.0) < 1e-12


def test_coherent_weight_negative_n():
    with pytest.raises(ValueError):
        coherent_weight(1.0, -1)


def test_default_truncation_tail():
    p = ModelParams()
    assert p.nmax1 == p.nmax2 == default_truncation(10.0) == 48
    for tail in p.truncation_tails():
        assert 0.0 <= tail < 1e-10
    q1, _ = initial_weights(p)
    assert 1 - 1e-10 <= math.fsum(q1**2) <= 1.0 + 1e-15


@pytest.mark.parametrize(
    "kwargs",
    [{"gamma1": -1.0}, {"chi2": -0.1}, {"nbar1": -1.0}, {"lambda1": 0.0}, {"tau_step": 0.0},
     {"nmax1": 0}, {"nmax2": 2.5}, {"tau_max": -1.0}],
)
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


def test_tau_grid():
    g = ModelParams(tau_max=1.0, tau_step=0.25).tau_grid()
    np.testing.assert_array_equal(g, [0, 0.25, 0.5, 0.75, 1.0])
    assert ModelParams(tau_max=0.0).tau_grid().tolist() == [0.0]
    assert ModelParams(tau_max=50.0).tau_grid().size == 5001


def test_block_index_bounds():
    with pytest.raises(ValueError):
        BlockIndex(-1, 0)
    p = ModelParams(nmax1=3, nmax2=3)
    with pytest.raises(ValueError):
        BlockIndex(4, 0).check(p)


def test_vacuum_block():
    c = block_coefficients(ModelParams(), BlockIndex(0, 0))
    assert c.abar1 == c.abar2 == c.abar3 == 0
    assert c.v1 == c.v2 == 0.5
    assert (c.h1, c.h2, c.h3) == (0, -0.5, 0)


def test_kerr_diagonal():
    c = block_coefficients(ModelParams(chi1=0.5), BlockIndex(2, 0))
    assert c.abar1.real == 1.0
    assert c.abar2.real == 3.0
    assert c.abar3.real == 3.0


def test_damping_diagonal():
    p = ModelParams(gamma1=0.0005, gamma2=0.0)
    c = block_coefficients(p, BlockIndex(3, 4))
    assert c.abar1.imag == pytest.approx(-7.5e-4, abs=1e-18)
    assert c.abar2.imag == pytest.approx(-0.5 * 0.0005 * 4, abs=1e-18)
    assert c.abar3.imag == 0.0
    c = block_coefficients(ModelParams(gamma2=0.002), BlockIndex(0, 5))
    assert c.abar2.imag == pytest.approx(-0.005)
    assert c.abar3.imag == pytest.approx(-0.006)


def _grid(p):
    n1, n2 = np.meshgrid(np.arange(p.nmax1 + 1), np.arange(p.nmax2 + 1), indexing="ij")
    return block_coefficient_grid(p, n1, n2)


def test_undamped_coefficients_real():
    c = _grid(ModelParams(chi1=0.3, chi2=0.1, Delta1=7, Delta2=3, mu=1.5, lambda2=0.7))
    for h in (c.h1, c.h2, c.h3, c.abar1, c.abar2, c.abar3, c.Gamma3, c.Gamma4):
        assert np.all(np.imag(h) == 0)


def test_damping_only_decays():
    c = _grid(ModelParams(gamma1=0.001, gamma2=0.003, chi1=0.2))
    for a in (c.abar1, c.abar2, c.abar3):
        assert np.all(a.imag <= 0)


def test_cubic_coefficients_are_frame_characteristic_polynomial():
    # h1, h2, h3 must be the characteristic coefficients of the constant
    # matrix the block reduces to in the frame that removes e^{i delta t}
    p = ModelParams(chi1=0.2, chi2=0.05, gamma1=0.001, gamma2=0.002, Delta1=3, Delta2=-1.5, mu=0.4, lambda2=1.3)
    for n1, n2 in [(0, 0), (3, 7), (10, 10), (20, 2)]:
        c = block_coefficients(p, BlockIndex(n1, n2))
        K = np.array([
            [c.abar1, c.v1, 0],
            [c.v1, c.abar2 - c.delta1, c.v2],
            [0, c.v2, c.abar3 - c.delta1 + c.delta2],
        ])
        # roots xi of the ansatz are -eigenvalues of K
        char = np.poly(-np.linalg.eigvals(K))
        np.testing.assert_allclose(char[1:], [c.h1, c.h2, c.h3], rtol=1e-12, atol=1e-10)
        assert c.Gamma3 == c.abar1 + c.Gamma2


def test_coefficients_pure():
    p = ModelParams(chi1=0.1, gamma1=0.0004, gamma2=0.0004, mu=3 * math.pi)
    a = block_coefficients(p, BlockIndex(7, 9))
    b = block_coefficients(p, BlockIndex(7, 9))
    assert a == b
    grid = block_coefficient_grid(p, np.array([7]), np.array([9]))
    assert grid.h2[0] == a.h2
