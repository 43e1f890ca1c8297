import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallscat.errors import DomainError
from smallscat.specfun import h0_first, helmholtz_kernel, j0, laplace_kernel

finite = st.floats(-20, 20, allow_nan=False)


def test_j0_values():
    assert j0(0.0) == 1.0
    assert abs(j0(np.pi)) < 1e-14
    z = 1 + 1j
    series = sum((-1) ** n * z ** (2 * n) / float(np.prod(np.arange(1, 2 * n + 2))) for n in range(12))
    assert abs(j0(z) - series) < 1e-12


def test_j0_series_switch_is_smooth():
    for z in (0.99e-4, 1.01e-4, 1e-4 * (1 + 1j)):
        assert abs(j0(z) - np.sin(z) / z) < 1e-15


def test_h0_values():
    assert h0_first(np.pi / 2) == pytest.approx(2 / np.pi, abs=1e-15)
    with pytest.raises(DomainError):
        h0_first(0.0)
    # z h0(z) = -i exp(iz) = -i + z + O(z^2)
    for z in (1e-6, 1e-6j, 1e-6 * (1 + 1j)):
        assert abs(z * h0_first(z) + 1j - z) < 1e-10


@settings(max_examples=50)
@given(st.floats(0.01, 50))
def test_h0_real_part_identity(x):
    # h0 = j0 + i y0, so Re h0(x) = sin(x)/x and Im h0(x) = -cos(x)/x on the real axis
    assert abs(h0_first(x).real - np.sin(x) / x) < 1e-14
    assert abs(h0_first(x).imag + np.cos(x) / x) < 1e-14


@settings(max_examples=50)
@given(finite, finite)
def test_reflection(a, b):
    z = complex(a, b)
    assert abs(np.conj(j0(z)) - j0(np.conj(z))) <= 1e-13 * max(1, abs(j0(z)))
    w, r = complex(a, abs(b)), 0.7
    g = helmholtz_kernel(r, w)
    assert abs(np.conj(g) - helmholtz_kernel(r, -np.conj(w))) <= 1e-13 * max(1, abs(g))


def test_helmholtz_kernel_values():
    assert helmholtz_kernel(1.0, 0.0) == pytest.approx(1 / (4 * np.pi))
    assert helmholtz_kernel(2.0, 1j) == pytest.approx(np.exp(-2) / (8 * np.pi))
    assert laplace_kernel(2.0) == pytest.approx(1 / (8 * np.pi))
    with pytest.raises(DomainError):
        helmholtz_kernel(0.0, 1.0)


@settings(max_examples=100)
@given(st.floats(1e-3, 100), st.floats(-50, 50), st.floats(0, 50))
def test_kernel_bounded_by_laplace(r, re, im):
    assert abs(helmholtz_kernel(r, complex(re, im))) <= laplace_kernel(r) * (1 + 1e-14)


def test_vectorised_shapes():
    z = np.array([[0.0, 1.0], [2.0, 1e-5]])
    assert j0(z).shape == (2, 2)
    assert np.isscalar(j0(0.5)) or np.ndim(j0(0.5)) == 0
